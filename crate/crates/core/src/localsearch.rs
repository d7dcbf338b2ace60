//! Approximate local optima of `ν` by greedy initialisation followed by
//! best-improvement single swaps.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{dot, log_volume, log_volume_ridge, PointId, PointSet, SINGULAR_RTOL};
use crate::objective::DEFAULT_ZETA;

/// Hard limit on accepted swaps in one search.
pub const MAX_SWAPS: usize = 1_000_000;

/// Slack allowed by [`verify_local_opt`] on top of `ln ζ`.
pub const VERIFY_TOL: f64 = 1e-9;

/// Ridge used when regularisation is switched on: `1e-10` times the mean
/// squared norm of the input.
pub fn default_ridge(points: &PointSet) -> f64 {
    1e-10 * points.mean_squared_norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSearchConfig {
    pub zeta: f64,
    /// `ε` added to the diagonal of every kernel; `0` disables it.
    pub ridge: f64,
    pub max_swaps: usize,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        Self {
            zeta: DEFAULT_ZETA,
            ridge: 0.0,
            max_swaps: MAX_SWAPS,
        }
    }
}

impl LocalSearchConfig {
    pub fn with_zeta(zeta: f64) -> Self {
        Self {
            zeta,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.zeta.is_finite() && self.zeta >= 1.0) {
            return Err(Error::InvalidParameters(format!(
                "zeta must be finite and >= 1, got {}",
                self.zeta
            )));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::InvalidParameters(format!(
                "ridge must be finite and >= 0, got {}",
                self.ridge
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOptResult {
    /// Ascending ids.
    pub set: Vec<PointId>,
    pub zeta: f64,
    pub swap_count: usize,
    /// `ln ν(set)` without any ridge.
    pub value: f64,
    /// Every subset of the requested size is singular.
    pub degenerate: bool,
    /// Search objective after initialisation and after each swap.
    pub trace: Vec<f64>,
}

/// Candidate vectors copied out of a [`PointSet`] for cache-friendly scans.
struct Pool {
    dim: usize,
    ids: Vec<PointId>,
    coords: Vec<f64>,
}

impl Pool {
    fn new(points: &PointSet, v: &[PointId]) -> Result<Self> {
        let mut ids = v.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let dim = points.dim();
        let mut coords = Vec::with_capacity(ids.len() * dim);
        for &id in &ids {
            coords.extend_from_slice(points.vector(id)?);
        }
        Ok(Self { dim, ids, coords })
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn vec(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn kernel(&self, i: usize, j: usize, ridge: f64) -> f64 {
        dot(self.vec(i), self.vec(j)) + if i == j { ridge } else { 0.0 }
    }
}

/// Greedy volume maximisation over pool positions; returns positions in
/// pick order and whether a singular pick was forced.
fn greedy_positions(pool: &Pool, ell: usize, ridge: f64) -> (Vec<usize>, bool) {
    let n = pool.len();
    let target = ell.min(n);
    let mut residual: Vec<f64> = (0..n).map(|i| pool.kernel(i, i, ridge)).collect();
    let scale = residual.iter().cloned().fold(0.0, f64::max);
    let cut = SINGULAR_RTOL * scale;
    // u_t such that the t-th Cholesky entry of element i is u_t·x_i
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(target);
    let mut taken = vec![false; n];
    let mut picks = Vec::with_capacity(target);
    let mut singular = false;
    while picks.len() < target {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if !taken[i] && best.is_none_or(|b| residual[i] > residual[b]) {
                best = Some(i);
            }
        }
        let j = best.expect("pool has an untaken element");
        if residual[j] <= cut {
            // rank exhausted: fill deterministically by id
            singular = true;
            for i in 0..n {
                if picks.len() == target {
                    break;
                }
                if !taken[i] {
                    taken[i] = true;
                    picks.push(i);
                }
            }
            break;
        }
        taken[j] = true;
        picks.push(j);
        let dj = residual[j].sqrt();
        let xj = pool.vec(j);
        let mut u = xj.to_vec();
        for prev in &dirs {
            let f = dot(prev, xj);
            u.iter_mut().zip(prev).for_each(|(a, p)| *a -= f * p);
        }
        u.iter_mut().for_each(|a| *a /= dj);
        for i in 0..n {
            if !taken[i] {
                let e = dot(&u, pool.vec(i));
                residual[i] -= e * e;
            }
        }
        dirs.push(u);
    }
    (picks, singular)
}

/// Greedy initial set of size `min(ell, |V|)`, ascending ids.
///
/// Each step adds the element with the largest residual squared norm
/// against the span of those already chosen; ties go to the smaller id.
pub fn greedy_init(points: &PointSet, v: &[PointId], ell: usize) -> Result<Vec<PointId>> {
    let pool = Pool::new(points, v)?;
    let (picks, _) = greedy_positions(&pool, ell, 0.0);
    let mut set: Vec<PointId> = picks.into_iter().map(|p| pool.ids[p]).collect();
    set.sort_unstable();
    Ok(set)
}

fn objective(points: &PointSet, set: &[PointId], ridge: f64) -> Result<f64> {
    if ridge > 0.0 {
        log_volume_ridge(points, set, ridge)
    } else {
        log_volume(points, set)
    }
}

/// A `zeta`-approximate local optimum of `ν` among `ell`-subsets of `v`.
///
/// Starts from the greedy set and repeatedly applies the swap with the
/// largest ratio `ν(U - e + f) / ν(U)` while it exceeds `ζ`, breaking ties by
/// smaller outgoing then smaller incoming id.
pub fn local_opt(
    points: &PointSet,
    v: &[PointId],
    ell: usize,
    config: &LocalSearchConfig,
) -> Result<LocalOptResult> {
    config.validate()?;
    if ell == 0 {
        return Err(Error::InvalidParameters("ell must be >= 1".into()));
    }
    if ell > points.dim() {
        return Err(Error::InvalidParameters(format!(
            "ell = {ell} exceeds the dimension {}",
            points.dim()
        )));
    }
    let pool = Pool::new(points, v)?;
    if pool.is_empty() {
        return Err(Error::Precondition("local search over an empty ground set".into()));
    }
    let (picks, singular) = greedy_positions(&pool, ell, config.ridge);
    search(points, &pool, picks, ell, !singular, config)
}

/// [`local_opt`] started from `start` instead of the greedy set.
pub fn local_opt_from(
    points: &PointSet,
    v: &[PointId],
    start: &[PointId],
    ell: usize,
    config: &LocalSearchConfig,
) -> Result<LocalOptResult> {
    config.validate()?;
    let pool = Pool::new(points, v)?;
    if start.len() != ell.min(pool.len()) || ell > points.dim() {
        return Err(Error::InvalidParameters(format!(
            "start has {} elements, expected min(ell, |V|) = {}",
            start.len(),
            ell.min(pool.len())
        )));
    }
    let mut positions = Vec::with_capacity(start.len());
    for id in start {
        let p = pool
            .ids
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| Error::Precondition(format!("start element {id} is outside V")))?;
        if positions.contains(&p) {
            return Err(Error::Precondition(format!("start repeats {id}")));
        }
        positions.push(p);
    }
    search(points, &pool, positions, ell, true, config)
}

fn search(
    points: &PointSet,
    pool: &Pool,
    mut positions: Vec<usize>,
    ell: usize,
    start_ok: bool,
    config: &LocalSearchConfig,
) -> Result<LocalOptResult> {
    positions.sort_unstable();
    let ids_of = |pos: &[usize]| pos.iter().map(|&p| pool.ids[p]).collect::<Vec<_>>();

    let mut current = objective(points, &ids_of(&positions), config.ridge)?;
    let mut trace = vec![current];
    let mut swaps = 0;
    let searchable = pool.len() > ell && start_ok && current.is_finite();
    if searchable {
        let threshold = config.zeta.ln();
        loop {
            let Some((p, f, _)) = best_swap(pool, &positions, config.ridge) else {
                break;
            };
            let mut next = positions.clone();
            next[p] = f;
            next.sort_unstable();
            let value = objective(points, &ids_of(&next), config.ridge)?;
            if !(value - current > threshold) {
                break;
            }
            if swaps == config.max_swaps {
                return Err(Error::IterationCap(config.max_swaps));
            }
            swaps += 1;
            positions = next;
            current = value;
            trace.push(current);
        }
    }
    let set = ids_of(&positions);
    let value = log_volume(points, &set)?;
    Ok(LocalOptResult {
        set,
        zeta: config.zeta,
        swap_count: swaps,
        value,
        degenerate: value == f64::NEG_INFINITY,
        trace,
    })
}

/// Best single swap as (position in `set`, incoming pool position, ratio).
///
/// With `K` the kernel on `set`, `b` the kernel column of `f`, `c = K⁻¹ b`
/// and `r² = k(f, f) - b·c`, replacing slot `p` scales the determinant by
/// `r² (K⁻¹)_pp + c_p²`.
fn best_swap(pool: &Pool, set: &[usize], ridge: f64) -> Option<(usize, usize, f64)> {
    let l = set.len();
    let k = DMatrix::from_fn(l, l, |i, j| pool.kernel(set[i], set[j], ridge));
    let kinv = k.cholesky()?.inverse();
    let mut in_set = vec![false; pool.len()];
    for &s in set {
        in_set[s] = true;
    }
    // (ratio, out id, in id, slot, pool position)
    let mut best: Option<(f64, PointId, PointId, usize, usize)> = None;
    let mut b = vec![0.0; l];
    let mut c = vec![0.0; l];
    for f in 0..pool.len() {
        if in_set[f] {
            continue;
        }
        for (i, &s) in set.iter().enumerate() {
            b[i] = pool.kernel(s, f, ridge);
        }
        for i in 0..l {
            c[i] = (0..l).map(|j| kinv[(i, j)] * b[j]).sum();
        }
        let r2 = (pool.kernel(f, f, ridge) - dot(&b, &c)).max(0.0);
        for p in 0..l {
            let ratio = r2 * kinv[(p, p)] + c[p] * c[p];
            let key = (ratio, pool.ids[set[p]], pool.ids[f]);
            let better = match best {
                None => true,
                Some((r, out, inn, _, _)) => {
                    key.0 > r || (key.0 == r && (key.1, key.2) < (out, inn))
                }
            };
            if better {
                best = Some((key.0, key.1, key.2, p, f));
            }
        }
    }
    best.map(|(r, _, _, p, f)| (p, f, r))
}

/// The swap `(e, f)` that most violates `ζ`-local optimality of `set`
/// inside `v`, or `None` if there is none.
///
/// Every swap is evaluated from scratch and compared with a slack of
/// [`VERIFY_TOL`]. Ties go to the smaller `e`, then the smaller `f`.
pub fn verify_local_opt(
    points: &PointSet,
    v: &[PointId],
    set: &[PointId],
    zeta: f64,
) -> Result<Option<(PointId, PointId)>> {
    let mut ground = v.to_vec();
    ground.sort_unstable();
    ground.dedup();
    let mut current = set.to_vec();
    current.sort_unstable();
    if let Some(&bad) = current.iter().find(|id| ground.binary_search(id).is_err()) {
        return Err(Error::Precondition(format!("id {bad} is not in the ground set")));
    }
    let base = log_volume(points, &current)?;
    let limit = zeta.ln() + VERIFY_TOL;
    let mut worst: Option<(f64, PointId, PointId)> = None;
    for (slot, &e) in current.iter().enumerate() {
        for &f in &ground {
            if current.binary_search(&f).is_ok() {
                continue;
            }
            let mut swapped = current.clone();
            swapped[slot] = f;
            let value = log_volume(points, &swapped)?;
            let gain = if value == f64::NEG_INFINITY {
                continue;
            } else if base == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                value - base
            };
            if gain > limit && worst.is_none_or(|(g, _, _)| gain > g) {
                worst = Some((gain, e, f));
            }
        }
    }
    Ok(worst.map(|(_, e, f)| (e, f)))
}
