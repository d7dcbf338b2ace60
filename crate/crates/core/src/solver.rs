//! Exact and heuristic maximisation of `μ` over the bases of a matroid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::document::log_value;
use crate::error::{Error, Result};
use crate::geometry::{log_volume, PointId, PointSet};
use crate::matroid::{binomial, oracle_cap, Constraint};
use crate::objective::DEFAULT_ZETA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BruteForce,
    Greedy,
    LocalSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Ascending ids; the partial greedy set when infeasible.
    pub set: Vec<PointId>,
    /// `ln μ(set)`; `None` when no base exists, `-inf` for a singular base.
    #[serde(with = "log_value::option")]
    pub log_value: Option<f64>,
    pub feasible: bool,
    pub method: Method,
}

impl SolveResult {
    fn infeasible(set: Vec<PointId>, method: Method) -> Self {
        Self {
            set,
            log_value: None,
            feasible: false,
            method,
        }
    }

    /// The value with infeasibility mapped to `-inf`.
    pub fn value_or_neg_inf(&self) -> f64 {
        self.log_value.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Candidates evaluated per parallel batch.
const BATCH: usize = 1 << 14;

/// Classes of bitwise-identical vectors.
struct Types {
    /// Ids of each type, ascending; types ordered by smallest id.
    members: Vec<Vec<PointId>>,
}

impl Types {
    /// Only cardinality constraints are collapsed: there every copy of a
    /// vector is interchangeable.
    fn of(points: &PointSet, constraint: &Constraint) -> Option<Self> {
        if !matches!(constraint, Constraint::Cardinality { .. }) {
            return None;
        }
        let mut members: Vec<Vec<PointId>> = Vec::new();
        let mut index: std::collections::HashMap<Vec<u64>, usize> = Default::default();
        for (id, _, v) in points.iter() {
            let key: Vec<u64> = v.iter().map(|x| (x + 0.0).to_bits()).collect();
            let t = *index.entry(key).or_insert_with(|| {
                members.push(Vec::new());
                members.len() - 1
            });
            members[t].push(id);
        }
        (members.len() < points.len()).then_some(Self { members })
    }

    /// Number of multisets of size `k` respecting multiplicities, saturating.
    fn count(&self, k: usize) -> u128 {
        let mut ways = vec![0u128; k + 1];
        ways[0] = 1;
        for m in self.members.iter().map(Vec::len) {
            let mut next = vec![0u128; k + 1];
            for (have, &w) in ways.iter().enumerate() {
                if w == 0 {
                    continue;
                }
                for take in 0..=m.min(k - have) {
                    next[have + take] = next[have + take].saturating_add(w);
                }
            }
            ways = next;
        }
        ways[k]
    }

    /// Calls `f` with the canonical (smallest-id) representative of every
    /// multiset of size `k`.
    fn for_each(&self, k: usize, mut f: impl FnMut(Vec<PointId>)) {
        let t = self.members.len();
        let mut suffix = vec![0usize; t + 1];
        for j in (0..t).rev() {
            suffix[j] = suffix[j + 1] + self.members[j].len();
        }
        let mut counts = vec![0usize; t];
        fn rec(
            types: &Types,
            suffix: &[usize],
            counts: &mut Vec<usize>,
            j: usize,
            left: usize,
            f: &mut dyn FnMut(Vec<PointId>),
        ) {
            if left == 0 {
                let mut set: Vec<PointId> = counts
                    .iter()
                    .enumerate()
                    .flat_map(|(t, &c)| types.members[t][..c].iter().copied())
                    .collect();
                set.sort_unstable();
                f(set);
                return;
            }
            if j == types.members.len() || suffix[j] < left {
                return;
            }
            for c in (0..=types.members[j].len().min(left)).rev() {
                counts[j] = c;
                rec(types, suffix, counts, j + 1, left - c, f);
            }
            counts[j] = 0;
        }
        rec(self, &suffix, &mut counts, 0, k, &mut f);
    }
}

/// Number of candidates [`brute_force_opt`] would evaluate.
pub fn brute_force_count(points: &PointSet, constraint: &Constraint) -> u128 {
    let k = constraint.rank();
    match Types::of(points, constraint) {
        Some(types) => types.count(k),
        None => binomial(points.len(), k),
    }
}

/// Keeps the larger value; on an exact tie the lexicographically smaller set.
fn better(candidate: &(f64, Vec<PointId>), best: &Option<(f64, Vec<PointId>)>) -> bool {
    match best {
        None => true,
        Some((v, s)) => candidate.0 > *v || (candidate.0 == *v && candidate.1 < *s),
    }
}

fn flush(
    points: &PointSet,
    batch: &mut Vec<Vec<PointId>>,
    best: &mut Option<(f64, Vec<PointId>)>,
) -> Result<()> {
    let scored: Vec<(f64, Vec<PointId>)> = batch
        .par_drain(..)
        .map(|s| Ok((log_volume(points, &s)?, s)))
        .collect::<Result<_>>()?;
    for c in scored {
        if better(&c, best) {
            *best = Some(c);
        }
    }
    Ok(())
}

/// Exhaustive maximum of `μ` over all bases; ties go to the
/// lexicographically smallest set.
///
/// Under a cardinality constraint, identical vectors are collapsed and each
/// multiset is scored once through its smallest-id representative.
pub fn brute_force_opt(points: &PointSet, constraint: &Constraint) -> Result<SolveResult> {
    brute_force_opt_capped(points, constraint, oracle_cap())
}

/// [`brute_force_opt`] with an explicit enumeration cap.
pub fn brute_force_opt_capped(points: &PointSet, constraint: &Constraint, cap: u128) -> Result<SolveResult> {
    let count = brute_force_count(points, constraint);
    if count > cap {
        return Err(Error::GuardExceeded { count, cap });
    }
    let mut best: Option<(f64, Vec<PointId>)> = None;
    let mut batch = Vec::with_capacity(BATCH);
    let mut failure = None;
    let mut push = |s: Vec<PointId>, batch: &mut Vec<Vec<PointId>>, best: &mut Option<_>| {
        batch.push(s);
        if batch.len() == BATCH && failure.is_none() {
            if let Err(e) = flush(points, batch, best) {
                failure = Some(e);
            }
        }
    };
    match Types::of(points, constraint) {
        Some(types) => types.for_each(constraint.rank(), |s| push(s, &mut batch, &mut best)),
        None => {
            for s in constraint.enumerate_bases_capped(points, cap)? {
                push(s, &mut batch, &mut best);
            }
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    flush(points, &mut batch, &mut best)?;
    Ok(match best {
        Some((value, set)) => SolveResult {
            set,
            log_value: Some(value),
            feasible: true,
            method: Method::BruteForce,
        },
        None => SolveResult::infeasible(Vec::new(), Method::BruteForce),
    })
}

/// Greedy base: repeatedly adds the element that keeps the set independent
/// and maximises `μ` of the enlarged set, ties to the smaller id.
///
/// In a matroid every maximal independent set is a base, so the result is
/// infeasible only when no base exists among `points`.
pub fn greedy_constrained(points: &PointSet, constraint: &Constraint) -> Result<SolveResult> {
    let mut tracker = constraint.tracker(points)?;
    let k = constraint.rank();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut taken = vec![false; points.len()];
    while chosen.len() < k {
        let mut ids: Vec<PointId> = chosen.iter().map(|&i| points.id_at(i)).collect();
        let mut best: Option<(f64, usize)> = None;
        for i in 0..points.len() {
            if taken[i] || !tracker.can_add(i) {
                continue;
            }
            ids.push(points.id_at(i));
            let value = log_volume(points, &ids)?;
            ids.pop();
            if best.is_none_or(|(b, _)| value > b) {
                best = Some((value, i));
            }
        }
        let Some((_, i)) = best else { break };
        tracker.try_add(i);
        taken[i] = true;
        chosen.push(i);
    }
    let mut set: Vec<PointId> = chosen.iter().map(|&i| points.id_at(i)).collect();
    set.sort_unstable();
    if set.len() < k {
        return Ok(SolveResult::infeasible(set, Method::Greedy));
    }
    let value = log_volume(points, &set)?;
    Ok(SolveResult {
        set,
        log_value: Some(value),
        feasible: true,
        method: Method::Greedy,
    })
}

/// Greedy followed by best-improvement base-preserving swaps; a swap is
/// taken only if it raises `ln μ` by more than `ln zeta`.
pub fn local_search_constrained(
    points: &PointSet,
    constraint: &Constraint,
    zeta: f64,
) -> Result<SolveResult> {
    if !(zeta.is_finite() && zeta >= 1.0) {
        return Err(Error::InvalidParameters(format!("zeta must be >= 1, got {zeta}")));
    }
    let start = greedy_constrained(points, constraint)?;
    if !start.feasible {
        return Ok(SolveResult {
            method: Method::LocalSearch,
            ..start
        });
    }
    let threshold = zeta.ln();
    let mut value = start.value_or_neg_inf();
    let mut set = start.set;
    let mut tracker = constraint.tracker(points)?;
    for &id in &set {
        tracker.try_add(points.index_of(id)?);
    }
    for _ in 0..crate::localsearch::MAX_SWAPS {
        let mut best: Option<(f64, PointId, PointId)> = None;
        for slot in 0..set.len() {
            let e = set[slot];
            let ei = points.index_of(e)?;
            tracker.remove(ei);
            for fi in 0..points.len() {
                let f = points.id_at(fi);
                if set.binary_search(&f).is_ok() || !tracker.can_add(fi) {
                    continue;
                }
                let mut t = set.clone();
                t[slot] = f;
                let v = log_volume(points, &t)?;
                let gain = if value == f64::NEG_INFINITY && v > f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    v - value
                };
                if gain > threshold && best.is_none_or(|(b, _, _)| v > b) {
                    best = Some((v, e, f));
                }
            }
            tracker.try_add(ei);
        }
        let Some((v, e, f)) = best else {
            return Ok(SolveResult {
                set,
                log_value: Some(value),
                feasible: true,
                method: Method::LocalSearch,
            });
        };
        tracker.remove(points.index_of(e)?);
        tracker.try_add(points.index_of(f)?);
        set.retain(|&x| x != e);
        set.push(f);
        set.sort_unstable();
        value = v;
    }
    Err(Error::IterationCap(crate::localsearch::MAX_SWAPS))
}

/// Best base inside `coreset_ids`: exhaustive when the restricted instance
/// fits the enumeration cap, greedy otherwise.
pub fn solve_on_coreset(
    points: &PointSet,
    constraint: &Constraint,
    coreset_ids: &[PointId],
) -> Result<SolveResult> {
    let restricted = points.subset(coreset_ids)?;
    if brute_force_count(&restricted, constraint) <= oracle_cap() {
        brute_force_opt(&restricted, constraint)
    } else {
        greedy_constrained(&restricted, constraint)
    }
}

/// [`local_search_constrained`] with the default `ζ`.
pub fn local_search_default(points: &PointSet, constraint: &Constraint) -> Result<SolveResult> {
    local_search_constrained(points, constraint, DEFAULT_ZETA)
}
