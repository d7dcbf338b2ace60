//! Peeling, partition and laminar coresets, their composition, and the
//! exchange steps that certify them.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::document::CoresetDocument;
use crate::error::{Error, Result};
use crate::geometry::{PointId, PointSet};
use crate::localsearch::{local_opt, LocalSearchConfig};
use crate::matroid::{Constraint, LaminarConstraint, PartitionConstraint};
use crate::objective::{
    approximation_exponent, mu_hat_lowdim, mu_tilde, weighted_objective, Regime, WeightProfile,
};

/// How to pick the regime for a rank-`k` problem in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegimeChoice {
    /// `LowK` when `k <= d`, else `HighK`.
    #[default]
    Auto,
    LowK,
    HighK,
}

impl RegimeChoice {
    pub fn resolve(self, k: usize, d: usize) -> Result<Regime> {
        match self {
            RegimeChoice::Auto if k <= d => Ok(Regime::LowK),
            RegimeChoice::Auto => Ok(Regime::HighK),
            RegimeChoice::LowK if k <= d => Ok(Regime::LowK),
            RegimeChoice::HighK if k >= d => Ok(Regime::HighK),
            other => Err(Error::InvalidParameters(format!(
                "regime {other:?} does not apply to k = {k}, d = {d}"
            ))),
        }
    }
}

impl std::str::FromStr for RegimeChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(RegimeChoice::Auto),
            other => Ok(match other.parse::<Regime>()? {
                Regime::LowK => RegimeChoice::LowK,
                Regime::HighK => RegimeChoice::HighK,
            }),
        }
    }
}

/// One local optimum inside a peeling sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Ascending ids.
    pub ids: Vec<PointId>,
    pub degenerate: bool,
    pub swap_count: usize,
    /// `ln ν(ids)`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeelingCoreset {
    pub layers: Vec<Layer>,
    /// The ground set `V`, ascending.
    pub source: Vec<PointId>,
    /// Requested number of layers `k_V`.
    pub threshold: usize,
    pub ell: usize,
    pub zeta: f64,
}

impl PeelingCoreset {
    /// Union of all layers, ascending.
    pub fn union(&self) -> Vec<PointId> {
        let mut all: Vec<PointId> = self.layers.iter().flat_map(|l| l.ids.iter().copied()).collect();
        all.sort_unstable();
        all
    }

    pub fn layer_of(&self, id: PointId) -> Option<usize> {
        self.layers.iter().position(|l| l.ids.binary_search(&id).is_ok())
    }
}

fn sorted_unique(ids: &[PointId]) -> Vec<PointId> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn check_ground(points: &PointSet, v: &[PointId]) -> Result<()> {
    match v.iter().find(|&&id| !points.contains(id)) {
        Some(&bad) => Err(Error::UnknownId(bad)),
        None => Ok(()),
    }
}

fn layer_from(points: &PointSet, v: &[PointId], ell: usize, cfg: &LocalSearchConfig) -> Result<Layer> {
    let r = local_opt(points, v, ell, cfg)?;
    Ok(Layer {
        ids: r.set,
        degenerate: r.degenerate,
        swap_count: r.swap_count,
        value: r.value,
    })
}

/// The `(V, k_V, ζ)` peeling coreset: `k_V` successive local optima, each
/// taken in what the previous ones left of `V`.
pub fn peeling_coreset(
    points: &PointSet,
    v: &[PointId],
    k_v: usize,
    ell: usize,
    cfg: &LocalSearchConfig,
) -> Result<PeelingCoreset> {
    if k_v == 0 {
        return Err(Error::InvalidParameters("peeling needs k_V >= 1".into()));
    }
    let source = sorted_unique(v);
    check_ground(points, &source)?;
    let mut remaining = source.clone();
    let mut layers = Vec::new();
    while layers.len() < k_v && !remaining.is_empty() {
        let layer = layer_from(points, &remaining, ell, cfg)?;
        remaining.retain(|id| layer.ids.binary_search(id).is_err());
        layers.push(layer);
    }
    Ok(PeelingCoreset {
        layers,
        source,
        threshold: k_v,
        ell,
        zeta: cfg.zeta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartCoreset {
    /// Group label; `None` for the single part of a cardinality constraint.
    pub group: Option<usize>,
    pub peeling: PeelingCoreset,
}

/// Coreset of one laminar set `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminarNodeCoreset {
    /// Index into [`LaminarConstraint::nodes`].
    pub node: usize,
    pub layers: Vec<Layer>,
    /// `D_i`: union of the child sets (or singletons) touched by layer `i`.
    pub removed: Vec<Vec<PointId>>,
    /// Coresets of the child sets hit by some layer, by node index.
    pub children: Vec<LaminarNodeCoreset>,
}

impl LaminarNodeCoreset {
    fn collect_ids(&self, out: &mut Vec<PointId>) {
        for l in &self.layers {
            out.extend_from_slice(&l.ids);
        }
        for c in &self.children {
            c.collect_ids(out);
        }
    }

    fn collect_layers(&self, out: &mut Vec<Vec<PointId>>) {
        out.extend(self.layers.iter().map(|l| l.ids.clone()));
        for c in &self.children {
            c.collect_layers(out);
        }
    }

    /// Every id in this node's coreset, ascending.
    pub fn ids(&self) -> Vec<PointId> {
        let mut out = Vec::new();
        self.collect_ids(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoresetStructure {
    Partition { parts: Vec<PartCoreset> },
    Laminar {
        roots: Vec<LaminarNodeCoreset>,
        /// Points of `V` outside every set, kept wholesale.
        free: Vec<PointId>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoresetResult {
    /// Ascending ids.
    pub ids: Vec<PointId>,
    pub regime: Regime,
    pub ell: usize,
    pub zeta: f64,
    pub ridge: f64,
    pub declared_bound: u64,
    /// `2 ell ln(ζ ell)`.
    pub approx_exponent: f64,
    /// The ground set `V`, ascending.
    pub source: Vec<PointId>,
    pub structure: CoresetStructure,
}

impl CoresetResult {
    /// All layers in construction order.
    pub fn layers(&self) -> Vec<Vec<PointId>> {
        let mut out = Vec::new();
        match &self.structure {
            CoresetStructure::Partition { parts } => {
                for p in parts {
                    out.extend(p.peeling.layers.iter().map(|l| l.ids.clone()));
                }
            }
            CoresetStructure::Laminar { roots, .. } => {
                for r in roots {
                    r.collect_layers(&mut out);
                }
            }
        }
        out
    }

    pub fn has_degenerate_layer(&self) -> bool {
        fn node(n: &LaminarNodeCoreset) -> bool {
            n.layers.iter().any(|l| l.degenerate) || n.children.iter().any(node)
        }
        match &self.structure {
            CoresetStructure::Partition { parts } => parts
                .iter()
                .any(|p| p.peeling.layers.iter().any(|l| l.degenerate)),
            CoresetStructure::Laminar { roots, .. } => roots.iter().any(node),
        }
    }

    /// Weight profile around this coreset.
    pub fn weight_profile(&self) -> Result<WeightProfile> {
        WeightProfile::new(self.ids.iter().copied(), self.zeta, self.ell, self.regime)
    }

    pub fn to_document(&self) -> CoresetDocument {
        CoresetDocument {
            regime: self.regime.as_str().to_string(),
            ids: self.ids.clone(),
            layers: self.layers(),
            declared_bound: self.declared_bound,
            zeta: self.zeta,
            ell: self.ell,
            source: self.source.clone(),
        }
    }
}

fn finish(
    mut ids: Vec<PointId>,
    regime: Regime,
    ell: usize,
    cfg: &LocalSearchConfig,
    declared_bound: u64,
    source: Vec<PointId>,
    structure: CoresetStructure,
) -> CoresetResult {
    // A child's coreset may repeat elements its parent's layers already took.
    ids.sort_unstable();
    ids.dedup();
    CoresetResult {
        ids,
        regime,
        ell,
        zeta: cfg.zeta,
        ridge: cfg.ridge,
        declared_bound,
        approx_exponent: approximation_exponent(cfg.zeta, ell),
        source,
        structure,
    }
}

/// Partition coreset: per part, a `(V ∩ P_i, k_i)` peeling coreset in the
/// high-k regime or a single local optimum of size `k` in the low-k regime.
/// Parts are processed in parallel.
pub fn partition_coreset(
    points: &PointSet,
    v: &[PointId],
    constraint: &PartitionConstraint,
    regime: Regime,
    cfg: &LocalSearchConfig,
) -> Result<CoresetResult> {
    let source = sorted_unique(v);
    let members = constraint.members_of(points, &source)?;
    let k = constraint.rank();
    let ell = regime.ell(k, points.dim());
    let parts: Vec<PartCoreset> = members
        .into_par_iter()
        .filter(|(_, ids)| !ids.is_empty())
        .map(|(g, ids)| {
            let layers = match regime {
                Regime::HighK => constraint.caps()[&g],
                Regime::LowK => 1,
            };
            Ok(PartCoreset {
                group: Some(g),
                peeling: peeling_coreset(points, &ids, layers, ell, cfg)?,
            })
        })
        .collect::<Result<_>>()?;
    let ids = parts.iter().flat_map(|p| p.peeling.union()).collect();
    let bound = match regime {
        Regime::HighK => k * ell,
        Regime::LowK => constraint.num_groups() * k,
    } as u64;
    Ok(finish(
        ids,
        regime,
        ell,
        cfg,
        bound,
        source,
        CoresetStructure::Partition { parts },
    ))
}

/// Cardinality-`k` coreset: the partition construction with one part.
pub fn cardinality_coreset(
    points: &PointSet,
    v: &[PointId],
    k: usize,
    regime: Regime,
    cfg: &LocalSearchConfig,
) -> Result<CoresetResult> {
    if k == 0 {
        return Err(Error::InvalidParameters("k must be >= 1".into()));
    }
    let source = sorted_unique(v);
    check_ground(points, &source)?;
    let ell = regime.ell(k, points.dim());
    let layers = match regime {
        Regime::HighK => k,
        Regime::LowK => 1,
    };
    let mut parts = Vec::new();
    if !source.is_empty() {
        parts.push(PartCoreset {
            group: None,
            peeling: peeling_coreset(points, &source, layers, ell, cfg)?,
        });
    }
    let ids = parts.iter().flat_map(|p| p.peeling.union()).collect();
    Ok(finish(
        ids,
        regime,
        ell,
        cfg,
        (k * ell) as u64,
        source,
        CoresetStructure::Partition { parts },
    ))
}

/// Laminar coreset, built recursively from the maximal sets down.
///
/// In set `F`, layer `i` is a local optimum of what remains of `V ∩ F`;
/// afterwards every child set touched by the layer (or the touched element
/// itself when no child contains it) is removed, and each touched child
/// gets its own coreset over `V ∩ child`. Points outside every set are kept.
pub fn laminar_coreset(
    points: &PointSet,
    v: &[PointId],
    constraint: &LaminarConstraint,
    regime: Regime,
    cfg: &LocalSearchConfig,
) -> Result<CoresetResult> {
    let source = sorted_unique(v);
    check_ground(points, &source)?;
    let k = constraint.rank();
    let ell = regime.ell(k, points.dim());
    let roots: Vec<LaminarNodeCoreset> = constraint
        .roots()
        .par_iter()
        .map(|&r| laminar_node(points, &source, constraint, r, ell, cfg))
        .collect::<Result<_>>()?;
    let free: Vec<PointId> = source
        .iter()
        .copied()
        .filter(|&id| constraint.chain(id).is_empty())
        .collect();
    let mut ids = free.clone();
    for r in &roots {
        r.collect_ids(&mut ids);
    }
    let r = constraint.cover_number().max(1) as u32;
    let bound = ((k * ell) as u64)
        .saturating_pow(r)
        .saturating_add(free.len() as u64);
    Ok(finish(
        ids,
        regime,
        ell,
        cfg,
        bound,
        source,
        CoresetStructure::Laminar { roots, free },
    ))
}

fn laminar_node(
    points: &PointSet,
    source: &[PointId],
    constraint: &LaminarConstraint,
    node: usize,
    ell: usize,
    cfg: &LocalSearchConfig,
) -> Result<LaminarNodeCoreset> {
    let set = &constraint.node(node).ids;
    let mut remaining: Vec<PointId> = source
        .iter()
        .copied()
        .filter(|id| set.binary_search(id).is_ok())
        .collect();
    let mut layers = Vec::new();
    let mut removed = Vec::new();
    let mut touched: BTreeSet<usize> = BTreeSet::new();
    for _ in 0..constraint.node(node).cap {
        if remaining.is_empty() {
            break;
        }
        let layer = layer_from(points, &remaining, ell, cfg)?;
        let mut d: BTreeSet<PointId> = BTreeSet::new();
        for &e in &layer.ids {
            match constraint.child_containing(node, e) {
                Some(c) => {
                    touched.insert(c);
                    d.extend(constraint.node(c).ids.iter().copied());
                }
                None => {
                    d.insert(e);
                }
            }
        }
        remaining.retain(|id| !d.contains(id));
        layers.push(layer);
        removed.push(d.into_iter().collect());
    }
    let children = touched
        .into_iter()
        .map(|c| laminar_node(points, source, constraint, c, ell, cfg))
        .collect::<Result<_>>()?;
    Ok(LaminarNodeCoreset {
        node,
        layers,
        removed,
        children,
    })
}

/// Coreset for `v` under `constraint`, restricting partition labels to the
/// points of `v`.
pub fn build_coreset(
    points: &PointSet,
    v: &[PointId],
    constraint: &Constraint,
    regime: RegimeChoice,
    cfg: &LocalSearchConfig,
) -> Result<CoresetResult> {
    let regime = regime.resolve(constraint.rank(), points.dim())?;
    match constraint {
        Constraint::Cardinality { k } => cardinality_coreset(points, v, *k, regime, cfg),
        Constraint::Partition(p) => partition_coreset(points, v, p, regime, cfg),
        Constraint::Laminar(l) => laminar_coreset(points, v, l, regime, cfg),
    }
}

fn compose_sources<'a>(
    items: impl Iterator<Item = (&'a [PointId], &'a [PointId])>,
) -> Result<Vec<PointId>> {
    let mut seen = BTreeSet::new();
    let mut ids = Vec::new();
    for (source, coreset) in items {
        for &id in source {
            if !seen.insert(id) {
                return Err(Error::Precondition(format!(
                    "coreset sources overlap at id {id}"
                )));
            }
        }
        ids.extend_from_slice(coreset);
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

/// Union of coresets built from pairwise disjoint ground sets.
pub fn compose(coresets: &[CoresetResult], points: &PointSet) -> Result<Vec<PointId>> {
    let ids = compose_sources(coresets.iter().map(|c| (c.source.as_slice(), c.ids.as_slice())))?;
    check_ground(points, &ids)?;
    Ok(ids)
}

/// [`compose`] over serialized coresets.
pub fn compose_documents(docs: &[CoresetDocument]) -> Result<Vec<PointId>> {
    compose_sources(docs.iter().map(|d| (d.source.as_slice(), d.ids.as_slice())))
}

fn proper_set(s: &[PointId]) -> Result<Vec<PointId>> {
    let sorted = sorted_unique(s);
    if sorted.len() != s.len() {
        return Err(Error::Precondition("set contains a repeated id".into()));
    }
    Ok(sorted)
}

fn swap(s: &[PointId], out: PointId, inn: PointId) -> Vec<PointId> {
    let mut t: Vec<PointId> = s.iter().copied().filter(|&x| x != out).collect();
    t.push(inn);
    t.sort_unstable();
    t
}

/// Best `f` in `candidates` (ascending) by `score(S - e + f)`; ties keep the
/// smaller id.
fn best_replacement(
    s: &[PointId],
    e: PointId,
    candidates: impl IntoIterator<Item = PointId>,
    score: impl Fn(&[PointId]) -> Result<f64>,
) -> Result<Option<PointId>> {
    let mut best: Option<(f64, PointId)> = None;
    for f in candidates {
        let value = score(&swap(s, e, f))?;
        if best.is_none_or(|(b, _)| value > b) {
            best = Some((value, f));
        }
    }
    Ok(best.map(|(_, f)| f))
}

/// Replacement `f` for `e ∈ (S ∩ V) \ U` that does not lower `μ̃`.
///
/// Takes the first layer disjoint from `S` and, within it, the `f`
/// maximising `μ̃(S - e + f)`.
pub fn find_value_preserving_exchange(
    points: &PointSet,
    s: &[PointId],
    e: PointId,
    coreset: &PeelingCoreset,
    w: &WeightProfile,
) -> Result<PointId> {
    let s = proper_set(s)?;
    let in_v = |id: &PointId| coreset.source.binary_search(id).is_ok();
    if s.binary_search(&e).is_err() || !in_v(&e) || coreset.layer_of(e).is_some() {
        return Err(Error::Precondition(format!("{e} is not in (S ∩ V) \\ U")));
    }
    let inside = s.iter().filter(|id| in_v(id)).count();
    if inside > coreset.threshold {
        return Err(Error::Precondition(format!(
            "|S ∩ V| = {inside} exceeds k_V = {}",
            coreset.threshold
        )));
    }
    let layer = coreset
        .layers
        .iter()
        .find(|l| l.ids.iter().all(|id| s.binary_search(id).is_err()))
        .ok_or_else(|| Error::Precondition("every layer meets S".into()))?;
    best_replacement(&s, e, layer.ids.iter().copied(), |t| mu_tilde(points, t, w))?
        .ok_or_else(|| Error::Precondition("empty layer".into()))
}

/// Replacement `j ∈ U \ S` for `e ∈ (S ∩ V) \ U` maximising `μ̂(S - e + j)`,
/// where `U` is a single local optimum inside `v`.
pub fn find_lowdim_exchange(
    points: &PointSet,
    s: &[PointId],
    e: PointId,
    v: &[PointId],
    local_opt_set: &[PointId],
    w: &WeightProfile,
) -> Result<PointId> {
    let s = proper_set(s)?;
    if s.binary_search(&e).is_err() || !v.contains(&e) || local_opt_set.contains(&e) {
        return Err(Error::Precondition(format!("{e} is not in (S ∩ V) \\ U")));
    }
    let candidates = sorted_unique(local_opt_set)
        .into_iter()
        .filter(|j| s.binary_search(j).is_err());
    best_replacement(&s, e, candidates, |t| mu_hat_lowdim(points, t, w))?
        .ok_or_else(|| Error::Precondition("U \\ S is empty".into()))
}

/// Replacement for `h ∈ S ∩ V` outside a laminar coreset.
///
/// Descends into the child coreset whose removed block contains `h`;
/// otherwise takes the first layer whose removed block misses `S` and the
/// `f` in it maximising the weighted objective.
pub fn laminar_exchange(
    points: &PointSet,
    s: &[PointId],
    h: PointId,
    coreset: &CoresetResult,
    constraint: &LaminarConstraint,
    w: &WeightProfile,
) -> Result<PointId> {
    let CoresetStructure::Laminar { roots, .. } = &coreset.structure else {
        return Err(Error::Precondition("not a laminar coreset".into()));
    };
    let s = proper_set(s)?;
    if s.binary_search(&h).is_err()
        || coreset.source.binary_search(&h).is_err()
        || coreset.ids.binary_search(&h).is_ok()
    {
        return Err(Error::Precondition(format!("{h} is not in (S ∩ V) \\ U")));
    }
    let chain = constraint.chain(h);
    let top = *chain
        .last()
        .ok_or_else(|| Error::Precondition(format!("{h} lies outside every set")))?;
    let mut node = roots
        .iter()
        .find(|r| r.node == top)
        .ok_or_else(|| Error::Precondition("missing root coreset".into()))?;
    loop {
        if node.removed.iter().any(|d| d.binary_search(&h).is_ok()) {
            let child = constraint
                .child_containing(node.node, h)
                .ok_or_else(|| Error::Precondition(format!("{h} was taken as a layer element")))?;
            node = node
                .children
                .iter()
                .find(|c| c.node == child)
                .ok_or_else(|| Error::Precondition("missing child coreset".into()))?;
            continue;
        }
        let i = node
            .removed
            .iter()
            .position(|d| d.iter().all(|id| s.binary_search(id).is_err()))
            .ok_or_else(|| Error::Precondition("every removed block meets S".into()))?;
        return best_replacement(&s, h, node.layers[i].ids.iter().copied(), |t| {
            weighted_objective(points, t, w)
        })?
        .ok_or_else(|| Error::Precondition("empty layer".into()));
    }
}
