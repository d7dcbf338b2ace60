//! Seeded instance generators: random workloads, laminar families, and the
//! lower-bound constructions.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::document::{ConstraintDocument, InstanceDocument, PointRecord};
use crate::error::{Error, Result};
use crate::geometry::{dot, load_pointset, PointId, PointSet};
use crate::matroid::{Constraint, LaminarConstraint, PartitionConstraint};

/// Largest generated family `G` in [`hard_instance`].
pub const HARD_G_CAP: usize = 10_000;

/// Attempts allowed to the rejection sampler of [`hard_instance`].
pub const HARD_MAX_ATTEMPTS: usize = 100_000;

/// Default scale for the lower-bound constructions.
pub const DEFAULT_M: f64 = 1e3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point set with its constraint and provenance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub points: PointSet,
    pub constraint: Constraint,
    pub meta: serde_json::Value,
    /// Repairs applied while loading.
    pub warnings: Vec<String>,
}

impl Instance {
    /// Validates a parsed document. Groups and laminar sets with cap 0 are
    /// removed together with their points, since no base can use them.
    pub fn from_document(doc: &InstanceDocument) -> Result<Self> {
        let mut warnings = Vec::new();
        let mut doc = doc.clone();
        let constraint_doc = doc.constraint.clone();
        let constraint = match constraint_doc {
            ConstraintDocument::Cardinality { k } => {
                load_pointset(&doc)?;
                Constraint::Cardinality { k }
            }
            ConstraintDocument::Partition { caps } => {
                let part = PartitionConstraint::new(&caps);
                for &g in part.stripped_groups() {
                    let before = doc.points.len();
                    doc.points.retain(|p| p.group != Some(g));
                    warnings.push(format!(
                        "group {g} has cap 0; dropped it and its {} points",
                        before - doc.points.len()
                    ));
                }
                part.validate(&load_pointset(&doc)?)?;
                Constraint::Partition(part)
            }
            ConstraintDocument::Laminar { sets } => {
                let dead: BTreeSet<PointId> = sets
                    .iter()
                    .filter(|s| s.cap == 0)
                    .flat_map(|s| s.ids.iter().copied())
                    .collect();
                if !dead.is_empty() {
                    warnings.push(format!(
                        "dropped {} points lying in cap-0 laminar sets",
                        dead.len()
                    ));
                    doc.points.retain(|p| !dead.contains(&p.id));
                }
                let live: Vec<(Vec<PointId>, usize)> = sets
                    .iter()
                    .filter(|s| s.cap > 0)
                    .map(|s| (s.ids.iter().copied().filter(|id| !dead.contains(id)).collect(), s.cap))
                    .collect();
                let points = load_pointset(&doc)?;
                let lam = LaminarConstraint::new(live, points.ids())?;
                warnings.extend(lam.warnings().iter().cloned());
                Constraint::Laminar(lam)
            }
        };
        Ok(Self {
            points: load_pointset(&doc)?,
            constraint,
            meta: doc.meta.clone().unwrap_or(serde_json::Value::Null),
            warnings,
        })
    }

    pub fn to_document(&self) -> InstanceDocument {
        InstanceDocument {
            dim: self.points.dim(),
            points: self
                .points
                .iter()
                .map(|(id, group, v)| PointRecord {
                    id,
                    group,
                    coords: v.to_vec(),
                })
                .collect(),
            constraint: self.constraint.to_document(),
            meta: (!self.meta.is_null()).then(|| self.meta.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CoordMode {
    /// I.i.d. standard normal coordinates.
    Gaussian,
    /// Uniform integers in `-range..=range`, for exact-arithmetic oracles.
    Integer { range: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConstraintKind {
    Cardinality,
    /// Groups assigned round-robin; caps must sum to `k`.
    Partition { caps: Vec<usize> },
    /// Random family of depth at most two covering every point.
    Laminar,
    /// Disjoint pairs with cap 1 under a root `[n]` with cap `k`.
    Paired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub constraint: ConstraintKind,
    pub coords: CoordMode,
    pub seed: u64,
}

fn sample_coords(rng: &mut ChaCha8Rng, n: usize, d: usize, mode: CoordMode) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| match mode {
                    CoordMode::Gaussian => rng.sample::<f64, _>(StandardNormal),
                    CoordMode::Integer { range } => rng.random_range(-range..=range) as f64,
                })
                .collect()
        })
        .collect()
}

/// Random instance per `spec`; identical specs give identical instances.
pub fn random_instance(spec: &InstanceSpec) -> Result<Instance> {
    let InstanceSpec { n, d, k, .. } = *spec;
    if n < k {
        return Err(Error::InvalidParameters(format!("n = {n} is below k = {k}")));
    }
    if k == 0 {
        return Err(Error::InvalidParameters("k must be >= 1".into()));
    }
    if let CoordMode::Integer { range } = spec.coords {
        if range < 1 {
            return Err(Error::InvalidParameters("integer range must be >= 1".into()));
        }
    }
    let mut rng = rng(spec.seed);
    let coords = sample_coords(&mut rng, n, d, spec.coords);
    let groups: Vec<Option<usize>> = match &spec.constraint {
        ConstraintKind::Partition { caps } => {
            if caps.is_empty() {
                return Err(Error::InvalidParameters("partition needs at least one cap".into()));
            }
            (0..n).map(|i| Some(i % caps.len())).collect()
        }
        _ => vec![None; n],
    };
    let points = PointSet::new(
        d,
        coords
            .into_iter()
            .zip(groups)
            .enumerate()
            .map(|(i, (v, g))| (i, g, v))
            .collect(),
    )?;
    let constraint = match &spec.constraint {
        ConstraintKind::Cardinality => Constraint::Cardinality { k },
        ConstraintKind::Partition { caps } => {
            if caps.iter().sum::<usize>() != k {
                return Err(Error::InvalidParameters(format!("caps {caps:?} do not sum to k = {k}")));
            }
            let s = caps.len();
            for (g, &c) in caps.iter().enumerate() {
                let size = (n + s - 1 - g) / s;
                if c > size {
                    return Err(Error::InvalidParameters(format!(
                        "group {g} has {size} points but cap {c}"
                    )));
                }
            }
            Constraint::Partition(PartitionConstraint::new(caps))
        }
        ConstraintKind::Laminar => Constraint::Laminar(random_laminar(&mut rng, n, k)?),
        ConstraintKind::Paired => Constraint::Laminar(paired_family(n, k)?),
    };
    Ok(Instance {
        points,
        constraint,
        meta: json!({ "generator": "random", "spec": spec }),
        warnings: Vec::new(),
    })
}

/// Random non-redundant laminar family of depth at most two over ids
/// `0..n`, covering every id, with matroid rank exactly `k`.
pub fn random_laminar(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Result<LaminarConstraint> {
    if k == 0 || n < k {
        return Err(Error::InvalidParameters(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut ids: Vec<PointId> = (0..n).collect();
    ids.shuffle(rng);
    let tops = rng.random_range(1..=k.min(3));
    // caps: random composition of k into `tops` positive parts
    let mut cuts: Vec<usize> = (1..k).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(tops - 1).collect();
    cuts.sort_unstable();
    let mut caps = Vec::with_capacity(tops);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(k)) {
        caps.push(c - prev);
        prev = c;
    }
    // block sizes: at least the cap, spare points spread at random
    let mut sizes = caps.clone();
    for _ in 0..n - k {
        let j = rng.random_range(0..tops);
        sizes[j] += 1;
    }
    let mut sets = Vec::new();
    let mut start = 0;
    for (&cap, &size) in caps.iter().zip(&sizes) {
        let block: Vec<PointId> = ids[start..start + size].to_vec();
        start += size;
        sets.push((block.clone(), cap));
        if cap < 2 {
            continue;
        }
        let mut offset = 0;
        let mut used_caps = 0;
        for _ in 0..2 {
            let child_cap = rng.random_range(1..cap);
            let slack = size - offset;
            // keep the parent tight: cap <= child caps + points outside children
            let outside_needed = cap.saturating_sub(used_caps + child_cap);
            if slack < child_cap + outside_needed {
                break;
            }
            let max_size = slack - outside_needed;
            let child_size = rng.random_range(child_cap..=max_size);
            if child_size == size {
                break;
            }
            sets.push((block[offset..offset + child_size].to_vec(), child_cap));
            offset += child_size;
            used_caps += child_cap;
            if rng.random_bool(0.5) {
                break;
            }
        }
    }
    let lam = LaminarConstraint::new(sets, &(0..n).collect::<Vec<_>>())?;
    debug_assert_eq!(lam.rank(), k);
    Ok(lam)
}

/// Pairs `{2i, 2i+1}` with cap 1 inside `[n]` with cap `k`; cover number 2.
pub fn paired_family(n: usize, k: usize) -> Result<LaminarConstraint> {
    if !n.is_multiple_of(2) || k < 2 || k > n / 2 {
        return Err(Error::InvalidParameters(format!(
            "the pair family needs even n and 2 <= k <= n/2, got n = {n}, k = {k}"
        )));
    }
    let mut sets: Vec<(Vec<PointId>, usize)> = (0..n / 2).map(|i| (vec![2 * i, 2 * i + 1], 1)).collect();
    sets.push(((0..n).collect(), k));
    LaminarConstraint::new(sets, &(0..n).collect::<Vec<_>>())
}

fn basis(d: usize, axis: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[axis] = scale;
    v
}

/// The low-dimension size lower bound: every part holds the standard basis.
#[derive(Debug, Clone)]
pub struct LowDimLowerBound {
    pub v: PointSet,
    pub caps: Vec<usize>,
    pub m: f64,
}

/// One adversarial completion `V'` for a given coreset.
#[derive(Debug, Clone)]
pub struct Adversary {
    /// Part whose coreset share is short.
    pub part: usize,
    /// Coordinates, of size `k - 1`, containing that share.
    pub span: Vec<usize>,
    pub v_prime: PointSet,
}

impl LowDimLowerBound {
    pub fn k(&self) -> usize {
        self.caps.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn constraint(&self) -> Constraint {
        Constraint::Partition(PartitionConstraint::new(&self.caps))
    }

    /// Id of `e_axis` in part `part`.
    pub fn id_of(&self, part: usize, axis: usize) -> PointId {
        part * self.dim() + axis
    }

    /// `V'` for part `p` and coordinate set `span`: every other part `i`
    /// receives `k_i` fresh `M`-scaled basis vectors on coordinates of
    /// `span`, disjoint across parts.
    pub fn adversary(&self, part: usize, span: &[usize]) -> Result<Adversary> {
        let k = self.k();
        let d = self.dim();
        if part >= self.caps.len() || span.len() != k - 1 || span.iter().any(|&c| c >= d) {
            return Err(Error::InvalidParameters("bad adversary choice".into()));
        }
        let mut next_id = self.caps.len() * d;
        let mut coords = span.iter().rev().copied();
        let mut points = Vec::new();
        for (i, &cap) in self.caps.iter().enumerate() {
            if i == part {
                continue;
            }
            for _ in 0..cap {
                let axis = coords.next().expect("span has room for k - k_p vectors");
                points.push((next_id, Some(i), basis(d, axis, self.m)));
                next_id += 1;
            }
        }
        Ok(Adversary {
            part,
            span: span.to_vec(),
            v_prime: PointSet::new(d, points)?,
        })
    }

    /// Every adversary the construction allows against `coreset`: one per
    /// part holding at most `k - 1` coreset points and per `(k - 1)`-set of
    /// coordinates covering them.
    pub fn adversaries(&self, coreset: &[PointId]) -> Result<Vec<Adversary>> {
        let k = self.k();
        let d = self.dim();
        let mut out = Vec::new();
        for p in 0..self.caps.len() {
            let axes: BTreeSet<usize> = coreset
                .iter()
                .filter(|&&id| id / d == p && id < self.caps.len() * d)
                .map(|&id| id % d)
                .collect();
            if axes.len() > k - 1 {
                continue;
            }
            let others: Vec<usize> = (0..d).filter(|a| !axes.contains(a)).collect();
            let need = k - 1 - axes.len();
            let mut combo: Vec<usize> = (0..need).collect();
            loop {
                if need <= others.len() {
                    let mut span: Vec<usize> = axes.iter().copied().collect();
                    span.extend(combo.iter().map(|&i| others[i]));
                    span.sort_unstable();
                    out.push(self.adversary(p, &span)?);
                }
                if need == 0 || need > others.len() || !crate::objective::next_combination(&mut combo, others.len()) {
                    break;
                }
            }
        }
        Ok(out)
    }
}

pub fn lb_low_dim_instance(s: usize, caps: &[usize], d: usize, m: f64) -> Result<LowDimLowerBound> {
    if s == 0 || caps.len() != s || caps.contains(&0) {
        return Err(Error::InvalidParameters("need s >= 1 positive caps".into()));
    }
    let k: usize = caps.iter().sum();
    if k > d {
        return Err(Error::InvalidParameters(format!("k = {k} exceeds d = {d}")));
    }
    if !(m >= 1.0 && m.is_finite()) {
        return Err(Error::InvalidParameters(format!("M must be >= 1, got {m}")));
    }
    let points = (0..s)
        .flat_map(|p| (0..d).map(move |a| (p * d + a, Some(p), basis(d, a, 1.0))))
        .collect();
    Ok(LowDimLowerBound {
        v: PointSet::new(d, points)?,
        caps: caps.to_vec(),
        m,
    })
}

/// The high-dimension size lower bound with caps all 1.
#[derive(Debug, Clone)]
pub struct HighDimLowerBound {
    pub v: PointSet,
    pub v_prime: PointSet,
    pub k: usize,
    pub ms: Vec<f64>,
    pub m: f64,
    /// 1-based probe index `i`.
    pub probe: usize,
    /// `V` without `M_i e_i` from part `i`.
    pub truncated: Vec<PointId>,
}

impl HighDimLowerBound {
    pub fn constraint(&self) -> Constraint {
        Constraint::Partition(PartitionConstraint::new(&vec![1; self.k]))
    }

    /// Lower bound on the full-to-truncated optimum ratio:
    /// `(M_i / M_{d+1})^2 / C(k, d)`.
    pub fn predicted_ratio(&self) -> f64 {
        let d = self.v.dim();
        let r = self.ms[self.probe - 1] / self.ms[d];
        r * r / crate::matroid::binomial(self.k, d) as f64
    }
}

/// `V ∩ P_i = {M_i e_1, …, M_i e_d}`; `V' ∩ P_t = {M e_t}` for `t ≠ probe`.
pub fn lb_high_dim_instance(k: usize, d: usize, ms: &[f64], m: f64, probe: usize) -> Result<HighDimLowerBound> {
    if k <= d {
        return Err(Error::InvalidParameters(format!("need k > d, got k = {k}, d = {d}")));
    }
    if ms.len() != k || ms.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidParameters("need k positive scales M_1..M_k".into()));
    }
    if ms.windows(2).any(|w| w[0] < w[1]) || !(m > ms[0]) {
        return Err(Error::InvalidParameters("need M > M_1 >= M_2 >= ... >= M_k".into()));
    }
    if probe == 0 || probe > d {
        return Err(Error::InvalidParameters(format!("probe must be in 1..={d}, got {probe}")));
    }
    let v = PointSet::new(
        d,
        (0..k)
            .flat_map(|p| (0..d).map(move |a| (p * d + a, Some(p), basis(d, a, ms[p]))))
            .collect(),
    )?;
    let v_prime = PointSet::new(
        d,
        (0..d)
            .filter(|&t| t != probe - 1)
            .enumerate()
            .map(|(j, t)| (k * d + j, Some(t), basis(d, t, m)))
            .collect(),
    )?;
    let dropped = (probe - 1) * d + (probe - 1);
    let truncated = v.ids().iter().copied().filter(|&id| id != dropped).collect();
    Ok(HighDimLowerBound {
        v,
        v_prime,
        k,
        ms: ms.to_vec(),
        m,
        probe,
        truncated,
    })
}

/// The randomised hard input, one point set per input part.
#[derive(Debug, Clone)]
pub struct HardInstance {
    pub d: usize,
    pub k: usize,
    pub m: usize,
    pub beta: f64,
    pub scale: f64,
    /// Unit vectors in `R^{m+1}`.
    pub g: Vec<Vec<f64>>,
    /// Bound on `|<p, q>|` enforced for distinct members of `g`.
    pub pairwise_bound: f64,
    /// Planted index into `g` for each `X_i`.
    pub pi: Vec<usize>,
    /// Row-major `d x d` rotation.
    pub q: Vec<f64>,
    /// `Q X_1, …, Q X_{d-m}` then `Q Y_1, …, Q Y_m`, all duplicated.
    pub sets: Vec<PointSet>,
    /// Ids of the copies of `Q e_{m+i}` in each `X_i`.
    pub planted: Vec<Vec<PointId>>,
    /// Ids of the planted optimum `{M e_1..M e_m, e_{m+1}..e_d}`, duplicated.
    pub planted_optimum: Vec<PointId>,
    /// Whether `|G|` was clipped to [`HARD_G_CAP`].
    pub g_capped: bool,
}

impl HardInstance {
    pub fn union(&self) -> Result<PointSet> {
        let mut acc = self.sets[0].clone();
        for s in &self.sets[1..] {
            acc = acc.union(s)?;
        }
        Ok(acc)
    }

    /// `(k/d)^d M^{2m}` in log domain.
    pub fn planted_log_value(&self) -> f64 {
        let t = (self.k / self.d) as f64;
        self.d as f64 * t.ln() + 2.0 * self.m as f64 * self.scale.ln()
    }

    pub fn meta(&self) -> serde_json::Value {
        json!({
            "generator": "hard",
            "d": self.d,
            "k": self.k,
            "m": self.m,
            "beta": self.beta,
            "M": self.scale,
            "g_size": self.g.len(),
            "g_capped": self.g_capped,
            "pairwise_bound": self.pairwise_bound,
            "pi": self.pi,
            "sets": self.sets.iter().map(|s| s.ids().to_vec()).collect::<Vec<_>>(),
            "planted": self.planted,
        })
    }
}

/// `m = ceil(d / ln d)`.
pub fn hard_m(d: usize) -> usize {
    (d as f64 / (d as f64).ln()).ceil() as usize
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Householder reflection of `R^n` sending unit `u` to `e_target`.
fn reflect_to_axis(u: &[f64], target: usize) -> impl Fn(&[f64]) -> Vec<f64> {
    let mut w = u.to_vec();
    w[target] -= 1.0;
    let norm2 = dot(&w, &w);
    move |x: &[f64]| {
        if norm2 < 1e-30 {
            return x.to_vec();
        }
        let c = 2.0 * dot(&w, x) / norm2;
        x.iter().zip(&w).map(|(a, b)| a - c * b).collect()
    }
}

/// The hard input in dimension `d` with `k / d` copies of every vector.
pub fn hard_instance(d: usize, beta: f64, k: usize, scale: f64, seed: u64) -> Result<HardInstance> {
    if d < 4 {
        return Err(Error::InvalidParameters(format!("need d >= 4, got {d}")));
    }
    let ln_d = (d as f64).ln();
    let beta_max = d as f64 / (4.0 * ln_d * ln_d);
    if !(beta >= 0.0 && beta <= beta_max) {
        return Err(Error::InvalidParameters(format!(
            "beta must lie in [0, {beta_max:.4}] for d = {d}, got {beta}"
        )));
    }
    if k == 0 || !k.is_multiple_of(d) {
        return Err(Error::InvalidParameters(format!("k = {k} must be a positive multiple of d = {d}")));
    }
    if !(scale >= 1.0 && scale.is_finite()) {
        return Err(Error::InvalidParameters(format!("M must be >= 1, got {scale}")));
    }
    let m = hard_m(d);
    if m >= d {
        return Err(Error::InvalidParameters(format!("m = {m} leaves no planted directions")));
    }
    let t = k / d;
    let mut rng = rng(seed);

    let wanted = (d as f64).powf(beta + 2.0).floor() as usize;
    let g_size = wanted.min(HARD_G_CAP);
    let bound = 4.0 * beta.sqrt() * ln_d / (d as f64).sqrt();
    let mut g: Vec<Vec<f64>> = Vec::with_capacity(g_size);
    let mut attempts = 0;
    while g.len() < g_size {
        if attempts == HARD_MAX_ATTEMPTS {
            return Err(Error::RejectionExhausted(HARD_MAX_ATTEMPTS));
        }
        attempts += 1;
        let mut x: Vec<f64> = (0..=m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dot(&x, &x).sqrt();
        if norm < 1e-12 {
            continue;
        }
        x.iter_mut().for_each(|c| *c /= norm);
        if g.iter().all(|h| dot(h, &x).abs() <= bound) {
            g.push(x);
        }
    }

    let q = random_orthogonal(&mut rng, d);
    let rotate = |v: &[f64]| -> Vec<f64> { (0..d).map(|i| (0..d).map(|j| q[(i, j)] * v[j]).sum()).collect() };

    let mut next_id = 0;
    let mut sets = Vec::with_capacity(d);
    let mut planted = Vec::with_capacity(d - m);
    let mut pi = Vec::with_capacity(d - m);
    let mut optimum = Vec::new();
    for i in 0..d - m {
        let p = rng.random_range(0..g.len());
        pi.push(p);
        let reflect = reflect_to_axis(&g[p], m);
        let mut points = Vec::with_capacity(g.len() * t);
        let mut mine = Vec::new();
        for (gi, gv) in g.iter().enumerate() {
            let local = if gi == p {
                basis(m + 1, m, 1.0)
            } else {
                reflect(gv)
            };
            let mut emb = vec![0.0; d];
            emb[..m].copy_from_slice(&local[..m]);
            emb[m + i] = local[m];
            let rotated = rotate(&emb);
            for _ in 0..t {
                if gi == p {
                    mine.push(next_id);
                }
                points.push((next_id, None, rotated.clone()));
                next_id += 1;
            }
        }
        optimum.extend_from_slice(&mine);
        planted.push(mine);
        sets.push(PointSet::new(d, points)?);
    }
    for i in 0..m {
        let y = rotate(&basis(d, i, scale));
        let points: Vec<_> = (0..t)
            .map(|_| {
                let id = next_id;
                next_id += 1;
                optimum.push(id);
                (id, None, y.clone())
            })
            .collect();
        sets.push(PointSet::new(d, points)?);
    }
    optimum.sort_unstable();
    Ok(HardInstance {
        d,
        k,
        m,
        beta,
        scale,
        g,
        pairwise_bound: bound,
        pi,
        q: q.transpose().as_slice().to_vec(),
        sets,
        planted,
        planted_optimum: optimum,
        g_capped: wanted > HARD_G_CAP,
    })
}
