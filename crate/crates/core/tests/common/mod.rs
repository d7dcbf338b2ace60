//! Reference implementations used as test oracles. Nothing here calls into
//! the determinant or enumeration code of the crate.
#![allow(dead_code)]

use std::collections::BTreeMap;

use detmax::document::ConstraintDocument;
use detmax::instances::{random_instance, ConstraintKind, CoordMode, Instance, InstanceSpec};
use detmax::{Constraint, PointId, PointSet};
use itertools::Itertools;

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det_lu(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
        }
    }
    det
}

/// Exact integer determinant by fraction-free elimination.
pub fn det_bareiss(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                return 0;
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

fn vectors(points: &PointSet, set: &[PointId]) -> Vec<Vec<f64>> {
    set.iter().map(|&id| points.vector(id).unwrap().to_vec()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `det(Σ c_i v_i v_iᵀ)` when `|set| >= d`, else the determinant of the
/// weighted inner-product matrix.
pub fn weighted_det(points: &PointSet, set: &[PointId], weight: impl Fn(PointId) -> f64) -> f64 {
    let vs = vectors(points, set);
    let d = points.dim();
    if set.len() >= d {
        let mut g = vec![vec![0.0; d]; d];
        for (v, &id) in vs.iter().zip(set) {
            let c = weight(id);
            for i in 0..d {
                for j in 0..d {
                    g[i][j] += c * v[i] * v[j];
                }
            }
        }
        det_lu(g)
    } else {
        let g = (0..set.len())
            .map(|i| {
                (0..set.len())
                    .map(|j| (weight(set[i]) * weight(set[j])).sqrt() * dot(&vs[i], &vs[j]))
                    .collect()
            })
            .collect();
        det_lu(g)
    }
}

/// Relative scale below which a determinant counts as zero.
fn zero_threshold(points: &PointSet, set: &[PointId], weight: &impl Fn(PointId) -> f64) -> f64 {
    let vs = vectors(points, set);
    let trace: f64 = vs.iter().zip(set).map(|(v, &id)| weight(id) * dot(v, v)).sum();
    let m = set.len().min(points.dim()).max(1) as f64;
    1e-10 * (trace / m).max(1.0).powf(m)
}

pub fn log_det_weighted(points: &PointSet, set: &[PointId], weight: impl Fn(PointId) -> f64) -> f64 {
    let det = weighted_det(points, set, &weight);
    if det <= zero_threshold(points, set, &weight) {
        f64::NEG_INFINITY
    } else {
        det.ln()
    }
}

/// `ln det(Σ v vᵀ)` (or the inner-product determinant below full rank).
pub fn log_mu(points: &PointSet, set: &[PointId]) -> f64 {
    log_det_weighted(points, set, |_| 1.0)
}

/// Exact `det(Σ v vᵀ)` for integer coordinates.
pub fn exact_det(points: &PointSet, set: &[PointId]) -> i128 {
    let vs: Vec<Vec<i128>> = vectors(points, set)
        .into_iter()
        .map(|v| v.into_iter().map(|x| x as i128).collect())
        .collect();
    let d = points.dim();
    let g = if set.len() >= d {
        (0..d)
            .map(|i| (0..d).map(|j| vs.iter().map(|v| v[i] * v[j]).sum()).collect())
            .collect()
    } else {
        (0..set.len())
            .map(|i| (0..set.len()).map(|j| (0..d).map(|t| vs[i][t] * vs[j][t]).sum()).collect())
            .collect()
    };
    det_bareiss(g)
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `ln Σ_{W ⊆ S, |W| = ell} φ(W) det(G_W)` by explicit enumeration.
pub fn subset_sum(points: &PointSet, set: &[PointId], ell: usize, phi: impl Fn(&[PointId]) -> f64) -> f64 {
    let terms: Vec<f64> = set
        .iter()
        .copied()
        .combinations(ell)
        .map(|w| {
            let det = weighted_det(points, &w, |_| 1.0);
            if det <= 0.0 {
                f64::NEG_INFINITY
            } else {
                phi(&w).ln() + det.ln()
            }
        })
        .collect();
    log_sum_exp(&terms)
}

/// Both `-inf`, or both finite and within `tol`.
pub fn log_close(a: f64, b: f64, tol: f64) -> bool {
    (a == f64::NEG_INFINITY && b == f64::NEG_INFINITY) || (a - b).abs() <= tol
}

fn swapped(set: &[PointId], out: PointId, inn: PointId) -> Vec<PointId> {
    let mut t: Vec<PointId> = set.iter().copied().filter(|&x| x != out).collect();
    t.push(inn);
    t.sort_unstable();
    t
}

/// Largest `ln ν(set - e + f) - ln ν(set)` over all swaps into `v`.
pub fn best_swap_gain(points: &PointSet, v: &[PointId], set: &[PointId]) -> f64 {
    let base = log_mu(points, set);
    let mut best = f64::NEG_INFINITY;
    for &e in set {
        for &f in v.iter().filter(|f| !set.contains(f)) {
            let val = log_mu(points, &swapped(set, e, f));
            let gain = if base == f64::NEG_INFINITY {
                if val == f64::NEG_INFINITY {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                val - base
            };
            best = best.max(gain);
        }
    }
    best
}

/// `ζ`-local optimality of `set` inside `v`, checked by trying every swap.
pub fn is_local_opt(points: &PointSet, v: &[PointId], set: &[PointId], zeta: f64) -> bool {
    best_swap_gain(points, v, set) <= zeta.ln() + 1e-9
}

/// Independence straight from the serialized caps.
pub fn independent(constraint: &Constraint, points: &PointSet, set: &[PointId]) -> bool {
    if set.iter().duplicates().next().is_some() || set.iter().any(|id| !points.contains(*id)) {
        return false;
    }
    match constraint.to_document() {
        ConstraintDocument::Cardinality { k } => set.len() <= k,
        ConstraintDocument::Partition { caps } => {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for &id in set {
                match points.group(id).unwrap() {
                    Some(g) if g < caps.len() => *counts.entry(g).or_default() += 1,
                    _ => return false,
                }
            }
            counts.iter().all(|(&g, &c)| c <= caps[g])
        }
        ConstraintDocument::Laminar { sets } => sets
            .iter()
            .all(|s| set.iter().filter(|id| s.ids.contains(id)).count() <= s.cap),
    }
}

/// Matroid rank by greedy completion in id order.
pub fn rank(constraint: &Constraint, points: &PointSet) -> usize {
    let mut chosen = Vec::new();
    for &id in points.ids() {
        chosen.push(id);
        if !independent(constraint, points, &chosen) {
            chosen.pop();
        }
    }
    chosen.len()
}

/// All bases by filtering every subset of size `rank`.
pub fn all_bases(constraint: &Constraint, points: &PointSet) -> Vec<Vec<PointId>> {
    let r = rank(constraint, points);
    points
        .ids()
        .iter()
        .copied()
        .combinations(r)
        .filter(|s| independent(constraint, points, s))
        .collect()
}

/// Best value over the given bases; `None` when there are none.
pub fn best_over(points: &PointSet, bases: &[Vec<PointId>]) -> Option<f64> {
    bases.iter().map(|b| log_mu(points, b)).max_by(f64::total_cmp)
}

/// Exhaustive optimum over bases of `constraint` inside `ground`.
pub fn opt_within(constraint: &Constraint, points: &PointSet, ground: &[PointId]) -> Option<f64> {
    let sub = points.subset(ground).unwrap();
    let r = rank(constraint, points);
    let bases: Vec<Vec<PointId>> = sub
        .ids()
        .iter()
        .copied()
        .combinations(r)
        .filter(|s| independent(constraint, &sub, s))
        .collect();
    best_over(points, &bases)
}

pub fn instance(n: usize, d: usize, k: usize, constraint: ConstraintKind, coords: CoordMode, seed: u64) -> Instance {
    random_instance(&InstanceSpec {
        n,
        d,
        k,
        constraint,
        coords,
        seed,
    })
    .unwrap()
}

pub fn gaussian(n: usize, d: usize, k: usize, constraint: ConstraintKind, seed: u64) -> Instance {
    instance(n, d, k, constraint, CoordMode::Gaussian, seed)
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}
