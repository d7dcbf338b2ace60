//! The set functions behind every exchange argument.
//!
//! `nu` scores `ell`-subsets, `mu` scores `k`-subsets and equals the sum of
//! `nu` over all `ell`-subsets (Cauchy-Binet). The weighted variants inflate
//! every vector that lies in a coreset `U` by `(zeta * ell)`, which
//! multiplies each `ell`-subset term by `(zeta * ell)^{2 |W ∩ U|}`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{log_volume, log_volume_weighted, PointId, PointSet};

/// Largest set accepted by the subset-sum oracle.
pub const CAUCHY_BINET_MAX: usize = 20;

/// Default local-optimality slack.
pub const DEFAULT_ZETA: f64 = 1.01;

/// Which of the two determinant regimes a construction runs in.
///
/// `LowK` (`k <= d`) uses `ell = k` and whole-set weighting; `HighK`
/// (`k >= d`) uses `ell = d` and per-subset weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    LowK,
    HighK,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::LowK => "lowk",
            Regime::HighK => "highk",
        }
    }

    /// `ell` for a rank-`k` problem in dimension `d`.
    pub fn ell(self, k: usize, d: usize) -> usize {
        match self {
            Regime::LowK => k,
            Regime::HighK => d,
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowk" => Ok(Regime::LowK),
            "highk" => Ok(Regime::HighK),
            other => Err(Error::InvalidParameters(format!("unknown regime {other:?}"))),
        }
    }
}

/// Weighting `phi(W) = (zeta * ell)^{2 |W ∩ U|}` around a coreset `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightProfile {
    coreset_ids: BTreeSet<PointId>,
    zeta: f64,
    ell: usize,
    regime: Regime,
}

impl WeightProfile {
    pub fn new(
        coreset_ids: impl IntoIterator<Item = PointId>,
        zeta: f64,
        ell: usize,
        regime: Regime,
    ) -> Result<Self> {
        if !(zeta >= 1.0) || !zeta.is_finite() {
            return Err(Error::InvalidParameters(format!("zeta must be >= 1, got {zeta}")));
        }
        if ell == 0 {
            return Err(Error::InvalidParameters("ell must be >= 1".into()));
        }
        Ok(Self {
            coreset_ids: coreset_ids.into_iter().collect(),
            zeta,
            ell,
            regime,
        })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn coreset_ids(&self) -> &BTreeSet<PointId> {
        &self.coreset_ids
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.coreset_ids.contains(&id)
    }

    /// `(zeta * ell)^2`, the per-element multiplier.
    pub fn element_weight(&self) -> f64 {
        let z = self.zeta * self.ell as f64;
        z * z
    }

    /// `2 ell ln(zeta ell)`: the log of the worst-case inflation, which is
    /// also the composability factor.
    pub fn log_bound(&self) -> f64 {
        approximation_exponent(self.zeta, self.ell)
    }

    fn coreset_hits(&self, set: &[PointId]) -> usize {
        set.iter().filter(|id| self.coreset_ids.contains(id)).count()
    }
}

/// `2 ell ln(zeta ell)`.
pub fn approximation_exponent(zeta: f64, ell: usize) -> f64 {
    2.0 * ell as f64 * (zeta * ell as f64).ln()
}

/// `ln nu(W)` for an `ell`-subset.
pub fn nu(points: &PointSet, w: &[PointId], ell: usize) -> Result<f64> {
    if w.len() != ell {
        return Err(Error::SizeMismatch {
            expected: ell,
            got: w.len(),
        });
    }
    log_volume(points, w)
}

/// `ln mu(S)`, the log-determinant objective of a `k`-set.
pub fn mu(points: &PointSet, s: &[PointId]) -> Result<f64> {
    log_volume(points, s)
}

/// `ln sum_{W in C(S, ell)} nu(W)`, evaluated by explicit enumeration.
pub fn mu_cauchy_binet(points: &PointSet, s: &[PointId], ell: usize) -> Result<f64> {
    if s.len() > CAUCHY_BINET_MAX {
        return Err(Error::OracleTooLarge {
            cap: CAUCHY_BINET_MAX,
            got: s.len(),
        });
    }
    if s.len() < ell {
        return Err(Error::SizeMismatch {
            expected: ell,
            got: s.len(),
        });
    }
    let mut terms = Vec::new();
    let mut combo: Vec<usize> = (0..ell).collect();
    let mut w = vec![0; ell];
    loop {
        for (slot, &i) in w.iter_mut().zip(&combo) {
            *slot = s[i];
        }
        terms.push(nu(points, &w, ell)?);
        if !next_combination(&mut combo, s.len()) {
            break;
        }
    }
    Ok(log_sum_exp(terms))
}

/// `ln sum_W phi(W) nu(W)`, computed as the log-determinant of the Gram of
/// the rescaled vectors.
pub fn mu_tilde(points: &PointSet, s: &[PointId], w: &WeightProfile) -> Result<f64> {
    if w.regime != Regime::HighK {
        return Err(Error::RegimeMismatch("mu_tilde needs the high-k profile".into()));
    }
    if s.len() < w.ell {
        return Err(Error::SizeMismatch {
            expected: w.ell,
            got: s.len(),
        });
    }
    let c = w.element_weight();
    log_volume_weighted(points, s, |id| if w.contains(id) { c } else { 1.0 })
}

/// `ln [(zeta k)^{2 |U ∩ S|} mu(S)]` for the whole-set regime.
pub fn mu_hat_lowdim(points: &PointSet, s: &[PointId], w: &WeightProfile) -> Result<f64> {
    if w.regime != Regime::LowK {
        return Err(Error::RegimeMismatch("mu_hat needs the low-k profile".into()));
    }
    if s.len() != w.ell {
        return Err(Error::SizeMismatch {
            expected: w.ell,
            got: s.len(),
        });
    }
    let base = mu(points, s)?;
    Ok(base + w.coreset_hits(s) as f64 * w.element_weight().ln())
}

/// The weighted objective matching the profile's regime.
pub fn weighted_objective(points: &PointSet, s: &[PointId], w: &WeightProfile) -> Result<f64> {
    match w.regime {
        Regime::HighK => mu_tilde(points, s, w),
        Regime::LowK => mu_hat_lowdim(points, s, w),
    }
}

/// Max-shifted `ln sum exp(x_i)`; an empty or all `-inf` input gives `-inf`.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Advances `combo` (strictly increasing indices below `n`) to the next
/// combination in lexicographic order.
pub(crate) fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
