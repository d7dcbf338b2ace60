//! Simulated distributed pipeline, scaling benchmark and self-check suites.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::coreset::{build_coreset, compose, CoresetResult, RegimeChoice};
use crate::document::log_value;
use crate::error::{Error, Result};
use crate::geometry::PointId;
use crate::instances::{random_instance, rng, ConstraintKind, CoordMode, Instance, InstanceSpec};
use crate::localsearch::{default_ridge, local_opt, verify_local_opt, LocalSearchConfig};
use crate::matroid::{oracle_cap, Constraint};
use crate::objective::{approximation_exponent, mu, mu_cauchy_binet, mu_tilde, Regime, WeightProfile};
use crate::solver::{brute_force_count, brute_force_opt, solve_on_coreset, SolveResult};

/// Slack on log-domain comparisons in reports and checks.
pub const LOG_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Seeded shuffle dealt round-robin.
    #[default]
    Random,
    /// Part `group mod m`; ungrouped points by `id mod m`.
    ByGroup,
}

impl std::str::FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SplitMode::Random),
            "bygroup" | "by-group" => Ok(SplitMode::ByGroup),
            other => Err(Error::InvalidParameters(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoresetMode {
    #[default]
    Coreset,
    /// Every part keeps all of its points.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub parts: usize,
    pub seed: u64,
    pub zeta: f64,
    pub regime: RegimeChoice,
    pub split: SplitMode,
    pub mode: CoresetMode,
    pub ridge: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            parts: 2,
            seed: 0,
            zeta: crate::objective::DEFAULT_ZETA,
            regime: RegimeChoice::Auto,
            split: SplitMode::Random,
            mode: CoresetMode::Coreset,
            ridge: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub parts: usize,
    pub seed: u64,
    pub zeta: f64,
    pub ell: usize,
    pub regime: Regime,
    pub split: SplitMode,
    pub mode: CoresetMode,
    pub ridge: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartReport {
    pub part: usize,
    pub source_size: usize,
    pub coreset_size: usize,
    pub declared_bound: u64,
    pub degenerate_layers: bool,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct Timings {
    pub split: f64,
    pub coresets: f64,
    pub compose: f64,
    pub solve: f64,
    pub oracle: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub instance: serde_json::Value,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub constraint: &'static str,
    pub config: ConfigEcho,
    pub parts: Vec<PartReport>,
    pub composed_size: usize,
    pub coreset_opt: SolveResult,
    pub full_opt: Option<SolveResult>,
    pub oracle_skipped: bool,
    /// Full optimum minus coreset optimum, both in log domain.
    #[serde(with = "log_value::option")]
    pub ratio: Option<f64>,
    /// `2 ell ln(ζ ell)`.
    pub bound: f64,
    pub within_bound: Option<bool>,
    pub timings_ms: Timings,
}

/// Flat one-row summary of a [`RunReport`].
#[derive(Debug, Serialize)]
pub struct RunSummaryRow {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub constraint: &'static str,
    pub parts: usize,
    pub regime: Regime,
    pub ell: usize,
    pub zeta: f64,
    pub composed_size: usize,
    pub coreset_opt: String,
    pub full_opt: String,
    pub ratio: String,
    pub bound: f64,
    pub oracle_skipped: bool,
}

fn fmt_log(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x == f64::NEG_INFINITY => "-inf".into(),
        Some(x) if x == f64::INFINITY => "inf".into(),
        Some(x) => format!("{x}"),
    }
}

impl RunReport {
    pub fn summary_row(&self) -> RunSummaryRow {
        RunSummaryRow {
            n: self.n,
            d: self.d,
            k: self.k,
            constraint: self.constraint,
            parts: self.config.parts,
            regime: self.config.regime,
            ell: self.config.ell,
            zeta: self.config.zeta,
            composed_size: self.composed_size,
            coreset_opt: fmt_log(self.coreset_opt.log_value),
            full_opt: fmt_log(self.full_opt.as_ref().and_then(|r| r.log_value)),
            ratio: fmt_log(self.ratio),
            bound: self.bound,
            oracle_skipped: self.oracle_skipped,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.serialize(self.summary_row())?;
        out.flush()?;
        Ok(())
    }
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Splits the ground set into `parts` disjoint id lists.
pub fn split(instance: &Instance, parts: usize, mode: SplitMode, seed: u64) -> Result<Vec<Vec<PointId>>> {
    if parts == 0 {
        return Err(Error::InvalidParameters("need at least one part".into()));
    }
    let mut out = vec![Vec::new(); parts];
    match mode {
        SplitMode::Random => {
            let mut ids = instance.points.ids().to_vec();
            ids.shuffle(&mut rng(seed));
            for (i, id) in ids.into_iter().enumerate() {
                out[i % parts].push(id);
            }
        }
        SplitMode::ByGroup => {
            for (id, group, _) in instance.points.iter() {
                out[group.unwrap_or(id) % parts].push(id);
            }
        }
    }
    for p in &mut out {
        p.sort_unstable();
    }
    Ok(out)
}

/// Split, per-part coresets in parallel, compose, solve on the union, and
/// compare with the exhaustive optimum when it fits the enumeration cap.
pub fn run_distributed(instance: &Instance, config: &RunConfig) -> Result<RunReport> {
    let points = &instance.points;
    let constraint = &instance.constraint;
    let k = constraint.rank();
    let d = points.dim();
    let regime = config.regime.resolve(k, d)?;
    let ell = regime.ell(k, d);
    let ls = LocalSearchConfig {
        zeta: config.zeta,
        ridge: if config.ridge { default_ridge(points) } else { 0.0 },
        ..LocalSearchConfig::default()
    };
    let mut timings = Timings::default();

    let t = Instant::now();
    let pieces = split(instance, config.parts, config.split, config.seed)?;
    timings.split = millis(t);

    let t = Instant::now();
    let choice = match regime {
        Regime::LowK => RegimeChoice::LowK,
        Regime::HighK => RegimeChoice::HighK,
    };
    let coresets: Vec<CoresetResult> = pieces
        .par_iter()
        .map(|piece| -> Result<CoresetResult> {
            let mut c = build_coreset(points, piece, constraint, choice, &ls)?;
            if config.mode == CoresetMode::Full {
                c.ids = c.source.clone();
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    timings.coresets = millis(t);

    let t = Instant::now();
    let union = compose(&coresets, points)?;
    timings.compose = millis(t);

    let t = Instant::now();
    let coreset_opt = solve_on_coreset(points, constraint, &union)?;
    timings.solve = millis(t);

    let t = Instant::now();
    let oracle_fits = brute_force_count(points, constraint) <= oracle_cap();
    let full_opt = if oracle_fits {
        Some(brute_force_opt(points, constraint)?)
    } else {
        None
    };
    timings.oracle = millis(t);

    let bound = approximation_exponent(config.zeta, ell);
    let ratio = full_opt.as_ref().and_then(|full| match (full.log_value, coreset_opt.log_value) {
        (Some(f), Some(c)) if f.is_finite() && c.is_finite() => Some(f - c),
        (Some(f), c) if f.is_finite() && c.is_none_or(|c| c == f64::NEG_INFINITY) => Some(f64::INFINITY),
        (Some(f), Some(c)) if f == f64::NEG_INFINITY && c == f64::NEG_INFINITY => Some(0.0),
        _ => None,
    });
    let within_bound = ratio.map(|r| r <= bound + LOG_SLACK);

    Ok(RunReport {
        instance: instance.meta.clone(),
        n: points.len(),
        d,
        k,
        constraint: constraint.kind(),
        config: ConfigEcho {
            parts: config.parts,
            seed: config.seed,
            zeta: config.zeta,
            ell,
            regime,
            split: config.split,
            mode: config.mode,
            ridge: ls.ridge,
        },
        parts: coresets
            .iter()
            .enumerate()
            .map(|(i, c)| PartReport {
                part: i,
                source_size: c.source.len(),
                coreset_size: c.ids.len(),
                declared_bound: c.declared_bound,
                degenerate_layers: c.has_degenerate_layer(),
            })
            .collect(),
        composed_size: union.len(),
        coreset_opt,
        full_opt,
        oracle_skipped: !oracle_fits,
        ratio,
        bound,
        within_bound,
        timings_ms: timings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub s: usize,
    pub coreset_size: usize,
    pub millis: f64,
}

/// Caps for `s` groups summing to `k`, as even as possible.
pub fn even_caps(k: usize, s: usize) -> Vec<usize> {
    (0..s).map(|g| k / s + usize::from(g < k % s)).collect()
}

/// Median wall time of `partition_coreset` on Gaussian instances of each
/// size, with `s = min(k, 4)` groups.
pub fn bench_scaling(d: usize, k: usize, n_list: &[usize], seed: u64, reps: usize) -> Result<Vec<BenchRow>> {
    if n_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameters("n_list must be ascending".into()));
    }
    let s = k.clamp(1, 4);
    let caps = even_caps(k, s);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let inst = random_instance(&InstanceSpec {
            n,
            d,
            k,
            constraint: ConstraintKind::Partition { caps: caps.clone() },
            coords: CoordMode::Gaussian,
            seed,
        })?;
        let Constraint::Partition(part) = &inst.constraint else {
            unreachable!("partition spec");
        };
        let regime = RegimeChoice::Auto.resolve(k, d)?;
        let ids = inst.points.ids().to_vec();
        let cfg = LocalSearchConfig::default();
        // untimed warm-up so the first rep doesn't pay for page faults
        let mut size = crate::coreset::partition_coreset(&inst.points, &ids, part, regime, &cfg)?.ids.len();
        let mut times = Vec::with_capacity(reps.max(1));
        for _ in 0..reps.max(1) {
            let t = Instant::now();
            let c = crate::coreset::partition_coreset(&inst.points, &ids, part, regime, &cfg)?;
            times.push(millis(t));
            size = c.ids.len();
        }
        times.sort_by(f64::total_cmp);
        rows.push(BenchRow {
            n,
            d,
            k,
            s,
            coreset_size: size,
            millis: times[times.len() / 2],
        });
    }
    Ok(rows)
}

pub fn write_bench_csv<W: std::io::Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub worst: f64,
}

pub const SUITES: [&str; 5] = ["cauchy-binet", "sandwich", "local-opt", "size-bounds", "composability"];

fn small_instance(seed: u64, n: usize, d: usize, k: usize, kind: ConstraintKind) -> Result<Instance> {
    random_instance(&InstanceSpec {
        n,
        d,
        k,
        constraint: kind,
        coords: CoordMode::Gaussian,
        seed,
    })
}

/// Runs a randomised self-check suite for `trials` seeds starting at `seed`.
pub fn verify_suite(name: &str, trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    let suite = *SUITES
        .iter()
        .find(|s| **s == name)
        .ok_or_else(|| Error::InvalidParameters(format!("unknown suite {name:?}")))?;
    for t in 0..trials {
        let s = seed.wrapping_add(t as u64);
        let d = 2 + (s % 3) as usize;
        let k = d + (s % 3) as usize;
        let n = k + 2 + (s % 3) as usize;
        let inst = small_instance(s, n, d, k, ConstraintKind::Cardinality)?;
        let ids = inst.points.ids().to_vec();
        let ok = match suite {
            "cauchy-binet" => {
                let set = &ids[..k];
                let (a, b) = (mu(&inst.points, set)?, mu_cauchy_binet(&inst.points, set, d)?);
                let err = if a.is_finite() || b.is_finite() { (a - b).abs() } else { 0.0 };
                worst = worst.max(err);
                err <= 1e-8
            }
            "sandwich" => {
                let set = &ids[..k];
                let w = WeightProfile::new(ids[..d].iter().copied(), 1.01, d, Regime::HighK)?;
                let (base, tilde) = (mu(&inst.points, set)?, mu_tilde(&inst.points, set, &w)?);
                let excess = (base - tilde).max(tilde - base - w.log_bound());
                worst = worst.max(excess);
                excess <= LOG_SLACK
            }
            "local-opt" => {
                let r = local_opt(&inst.points, &ids, d, &LocalSearchConfig::default())?;
                verify_local_opt(&inst.points, &ids, &r.set, 1.01)?.is_none()
            }
            "size-bounds" => {
                let caps = even_caps(k, 2);
                let inst = small_instance(s, n.max(2 * k), d, k, ConstraintKind::Partition { caps })?;
                let c = build_coreset(
                    &inst.points,
                    inst.points.ids(),
                    &inst.constraint,
                    RegimeChoice::Auto,
                    &LocalSearchConfig::default(),
                )?;
                worst = worst.max(c.ids.len() as f64 / c.declared_bound as f64);
                c.ids.len() as u64 <= c.declared_bound
            }
            "composability" => {
                let r = run_distributed(&inst, &RunConfig { parts: 2, seed: s, ..RunConfig::default() })?;
                let ratio = r.ratio.unwrap_or(0.0);
                worst = worst.max(ratio / r.bound.max(f64::MIN_POSITIVE));
                r.within_bound != Some(false)
            }
            _ => unreachable!(),
        };
        failures += usize::from(!ok);
    }
    Ok(SuiteReport {
        suite,
        trials,
        failures,
        worst,
    })
}
