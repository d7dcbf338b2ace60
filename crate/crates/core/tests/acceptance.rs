//! Acceptance criteria C1-C10. Runs as a plain binary so every criterion
//! prints one line regardless of outcome; pass `C3 C7` etc. to select.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use common::*;
use detmax::coreset::{
    build_coreset, compose, find_value_preserving_exchange, laminar_exchange, partition_coreset, peeling_coreset,
    RegimeChoice,
};
use detmax::harness::{bench_scaling, even_caps, run_distributed, split, RunConfig, SplitMode};
use detmax::instances::{
    hard_instance, lb_high_dim_instance, lb_low_dim_instance, rng, ConstraintKind, CoordMode, HardInstance,
};
use detmax::localsearch::{local_opt, LocalSearchConfig};
use detmax::objective::{approximation_exponent, mu, mu_cauchy_binet, mu_tilde, nu, DEFAULT_ZETA};
use detmax::solver::brute_force_opt_capped;
use detmax::{Constraint, PointId, Regime, WeightProfile};
use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;

const SLACK: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cfg() -> LocalSearchConfig {
    LocalSearchConfig::default()
}

fn c1_cauchy_binet() -> Outcome {
    let start = Instant::now();
    let mut failures = 0;
    let mut both_neg_inf = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..500u64 {
        let mut r = rng(seed);
        let d = r.random_range(2..=4);
        let k = r.random_range(d..=6);
        let n = r.random_range(k..=10);
        let coords = if seed % 2 == 0 {
            CoordMode::Gaussian
        } else {
            CoordMode::Integer { range: 1 }
        };
        let inst = instance(n, d, k, ConstraintKind::Cardinality, coords, seed);
        let mut ids = inst.points.ids().to_vec();
        ids.shuffle(&mut r);
        let s = &ids[..k];
        let a = mu(&inst.points, s).unwrap();
        let b = mu_cauchy_binet(&inst.points, s, d).unwrap();
        if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
            both_neg_inf += 1;
        } else if a.is_finite() && b.is_finite() {
            worst = worst.max((a - b).abs());
            failures += usize::from((a - b).abs() > 1e-8);
        } else {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < 10.0,
        format!("500 instances, {failures} mismatches, {both_neg_inf} both -inf, max |err| {worst:.2e}, {secs:.2}s"),
    )
}

fn c2_exchange_inequality() -> Outcome {
    let zeta = DEFAULT_ZETA;
    let mut violations = 0;
    let mut checks = 0usize;
    let mut optima = 0;
    let mut module_misses = 0;
    for seed in 0..200u64 {
        let mut r = rng(seed);
        let ell = r.random_range(2..=3);
        let n = r.random_range(ell + 1..=8);
        let coords = if seed % 4 == 3 {
            CoordMode::Integer { range: 2 }
        } else {
            CoordMode::Gaussian
        };
        let inst = instance(n, ell, 1, ConstraintKind::Cardinality, coords, seed);
        let p = &inst.points;
        let v = p.ids().to_vec();
        let nu_of = |w: &[PointId]| {
            let mut w = w.to_vec();
            w.sort_unstable();
            nu(p, &w, ell).unwrap()
        };
        let module = local_opt(p, &v, ell, &LocalSearchConfig::with_zeta(zeta)).unwrap();
        if !module.degenerate && !is_local_opt(p, &v, &module.set, zeta) {
            module_misses += 1;
        }
        for u in v.iter().copied().combinations(ell) {
            let nu_u = nu_of(&u);
            if !nu_u.is_finite() || !is_local_opt(p, &v, &u, zeta) {
                continue;
            }
            optima += 1;
            for w in v.iter().copied().combinations(ell) {
                let nu_w = nu_of(&w);
                for &e in w.iter().filter(|e| !u.contains(e)) {
                    let terms: Vec<f64> = u
                        .iter()
                        .filter(|j| !w.contains(j))
                        .map(|&j| {
                            let w2: Vec<PointId> = w.iter().map(|&x| if x == e { j } else { x }).collect();
                            let u2: Vec<PointId> = u.iter().map(|&x| if x == j { e } else { x }).collect();
                            nu_of(&w2) + nu_of(&u2)
                        })
                        .collect();
                    let rhs = (ell as f64).ln() + log_sum_exp(&terms);
                    checks += 1;
                    if nu_w + nu_u > rhs + SLACK {
                        violations += 1;
                    }
                }
            }
        }
    }
    outcome(
        violations == 0 && module_misses == 0,
        format!(
            "200 instances, {optima} local optima, {checks} (W, e) checks, {violations} violations, \
             {module_misses} local_opt outputs not locally optimal"
        ),
    )
}

fn c3_smart_exchange() -> Outcome {
    let mut failures = 0;
    let mut checks = 0usize;
    let mut skipped = 0;
    for seed in 0..50u64 {
        let mut r = rng(1000 + seed);
        let d = 2;
        let k = r.random_range(2..=4);
        let k_v = r.random_range(1..=k.min(3));
        let n = r.random_range((2 * k_v + 2).max(k)..=10);
        let inst = gaussian(n, d, k, ConstraintKind::Cardinality, 1000 + seed);
        let p = &inst.points;
        let ground = p.ids().to_vec();
        let v_len = (2 * k_v + 1 + r.random_range(0..=2)).min(n);
        let v = &ground[..v_len];
        let pc = peeling_coreset(p, v, k_v, d, &cfg()).unwrap();
        if pc.layers.iter().any(|l| l.degenerate) {
            skipped += 1;
            continue;
        }
        let u = pc.union();
        let w = WeightProfile::new(u.iter().copied(), DEFAULT_ZETA, d, Regime::HighK).unwrap();
        for s in ground.iter().copied().combinations(k) {
            let inside: Vec<PointId> = s.iter().copied().filter(|id| v.contains(id)).collect();
            if inside.len() > k_v {
                continue;
            }
            let before = mu_tilde(p, &s, &w).unwrap();
            for &e in inside.iter().filter(|e| !u.contains(e)) {
                checks += 1;
                let Ok(f) = find_value_preserving_exchange(p, &s, e, &pc, &w) else {
                    failures += 1;
                    continue;
                };
                let mut t: Vec<PointId> = s.iter().copied().filter(|&x| x != e).collect();
                let proper = !t.contains(&f) && u.contains(&f);
                t.push(f);
                t.sort_unstable();
                let after = mu_tilde(p, &t, &w).unwrap();
                if !proper || after < before - SLACK {
                    failures += 1;
                }
            }
        }
    }
    outcome(
        failures == 0,
        format!("50 instances ({skipped} with degenerate layers skipped), {checks} exchanges, {failures} failures"),
    )
}

fn c4_composability() -> Outcome {
    let mut violations = 0;
    let mut disagreements = 0;
    let mut ratios = Vec::new();
    for seed in 0..100u64 {
        let mut r = rng(2000 + seed);
        let d = r.random_range(2..=3);
        let k = r.random_range(1..=5);
        let s = r.random_range(1..=k.min(3));
        let n = r.random_range(k.max(6)..=14);
        let parts = r.random_range(1..=3);
        let inst = gaussian(n, d, k, ConstraintKind::Partition { caps: even_caps(k, s) }, 2000 + seed);
        let regime = RegimeChoice::Auto.resolve(k, d).unwrap();
        let ell = regime.ell(k, d);
        let bound = approximation_exponent(DEFAULT_ZETA, ell);
        let full = opt_within(&inst.constraint, &inst.points, inst.points.ids()).unwrap();
        for mode in [SplitMode::Random, SplitMode::ByGroup] {
            let pieces = split(&inst, parts, mode, seed).unwrap();
            let coresets: Vec<_> = pieces
                .iter()
                .map(|piece| build_coreset(&inst.points, piece, &inst.constraint, RegimeChoice::Auto, &cfg()).unwrap())
                .collect();
            let union = compose(&coresets, &inst.points).unwrap();
            let kept = opt_within(&inst.constraint, &inst.points, &union).unwrap_or(f64::NEG_INFINITY);
            let ratio = if full == f64::NEG_INFINITY { 0.0 } else { full - kept };
            ratios.push(ratio);
            if !(ratio <= bound + SLACK) {
                violations += 1;
            }
            let report = run_distributed(
                &inst,
                &RunConfig {
                    parts,
                    seed,
                    split: mode,
                    ..RunConfig::default()
                },
            )
            .unwrap();
            if report.ratio.is_none_or(|x| !log_close(x, ratio, 1e-8)) {
                disagreements += 1;
            }
        }
    }
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        violations == 0 && disagreements == 0,
        format!(
            "200 runs (random + by-group splits), {violations} over bound, median ln-ratio {:.3e}, max {:.3e}, \
             {disagreements} report/oracle disagreements",
            median(ratios),
            max
        ),
    )
}

fn c5_size_bounds() -> Outcome {
    let mut failures = 0;
    let mut exhausting = 0;
    for seed in 0..200u64 {
        let mut r = rng(3000 + seed);
        let kind = seed % 3;
        let d = r.random_range(2..=4);
        let k = match kind {
            0 => r.random_range(1..=d),
            1 => r.random_range(d..=7),
            _ => r.random_range(1..=6),
        };
        let tight = seed % 4 == 0;
        let n = if tight { k } else { r.random_range(k..=30) };
        exhausting += usize::from(tight);
        let constraint = match kind {
            0 | 1 => ConstraintKind::Partition {
                caps: even_caps(k, r.random_range(1..=k.min(4))),
            },
            _ => ConstraintKind::Laminar,
        };
        let inst = gaussian(n, d, k, constraint, 3000 + seed);
        let p = &inst.points;
        let mut v = p.ids().to_vec();
        if seed % 5 == 1 && kind != 2 {
            v.retain(|&id| p.group(id).unwrap() != Some(0));
        }
        let (size, bound) = match &inst.constraint {
            Constraint::Partition(part) => {
                let regime = if kind == 0 { Regime::LowK } else { Regime::HighK };
                let c = partition_coreset(p, &v, part, regime, &cfg()).unwrap();
                let bound = match regime {
                    Regime::LowK => part.num_groups() * k,
                    Regime::HighK => k * d,
                };
                (c.ids.len(), bound)
            }
            Constraint::Laminar(lam) => {
                let c = build_coreset(p, &v, &inst.constraint, RegimeChoice::Auto, &cfg()).unwrap();
                (c.ids.len(), (k * c.ell).pow(lam.cover_number().max(1) as u32))
            }
            Constraint::Cardinality { .. } => unreachable!(),
        };
        if size > bound {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("200 constructions ({exhausting} with n = k), {failures} over bound"),
    )
}

fn c6_laminar_feasibility() -> Outcome {
    let mut violations = 0;
    let mut steps = 0usize;
    let mut bases_checked = 0usize;
    for seed in 0..30u64 {
        let mut r = rng(4000 + seed);
        let d = r.random_range(2..=3);
        let (n, k, kind) = if seed % 6 == 5 {
            let n = 2 * r.random_range(3..=6);
            (n, r.random_range(2..=4.min(n / 2)), ConstraintKind::Paired)
        } else {
            let n = r.random_range(6..=12);
            (n, r.random_range(2..=4), ConstraintKind::Laminar)
        };
        let inst = gaussian(n, d, k, kind, 4000 + seed);
        let Constraint::Laminar(lam) = &inst.constraint else {
            unreachable!()
        };
        if lam.cover_number() > 2 {
            violations += 1;
            continue;
        }
        let p = &inst.points;
        let c = build_coreset(p, p.ids(), &inst.constraint, RegimeChoice::Auto, &cfg()).unwrap();
        let w = c.weight_profile().unwrap();
        for base in all_bases(&inst.constraint, p) {
            bases_checked += 1;
            let mut s = base;
            while let Some(h) = s.iter().copied().find(|h| c.ids.binary_search(h).is_err()) {
                steps += 1;
                let Ok(f) = laminar_exchange(p, &s, h, &c, lam, &w) else {
                    violations += 1;
                    break;
                };
                s.retain(|&x| x != h);
                s.push(f);
                s.sort_unstable();
                if !independent(&inst.constraint, p, &s) || s.len() != k || !c.ids.contains(&f) {
                    violations += 1;
                    break;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("30 families, {bases_checked} bases, {steps} exchange steps, {violations} violations"),
    )
}

fn c7_lower_bounds() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let ell = 2;
    let floor = -2.0 * ell as f64 * (2.0 * ell as f64).ln();
    for m in [10.0, 100.0, 1000.0] {
        let lb = lb_low_dim_instance(2, &[1, 1], 2, m).unwrap();
        let c = lb.constraint();
        let v = lb.v.ids().to_vec();
        let mut worst_over_u: f64 = f64::NEG_INFINITY;
        for u in v.iter().copied().combinations(v.len() - 1) {
            let advs = lb.adversaries(&u).unwrap();
            let worst = advs
                .iter()
                .map(|adv| {
                    let all = lb.v.union(&adv.v_prime).unwrap();
                    let mut ground = u.clone();
                    ground.extend(adv.v_prime.ids());
                    opt_within(&c, &all, &ground).unwrap_or(f64::NEG_INFINITY)
                        - opt_within(&c, &all, all.ids()).unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            worst_over_u = worst_over_u.max(worst);
        }
        let ok_small = worst_over_u <= -2.0 * m.ln() + (1e-6f64).ln_1p();
        let Constraint::Partition(part) = &c else { unreachable!() };
        let mut module_worst = f64::INFINITY;
        for p in 0..2 {
            for span in (0..2).combinations(1) {
                let adv = lb.adversary(p, &span).unwrap();
                let all = lb.v.union(&adv.v_prime).unwrap();
                let cv = partition_coreset(&all, &v, part, Regime::LowK, &cfg()).unwrap();
                let cw = partition_coreset(&all, adv.v_prime.ids(), part, Regime::LowK, &cfg()).unwrap();
                let union = compose(&[cv, cw], &all).unwrap();
                let ratio = opt_within(&c, &all, &union).unwrap_or(f64::NEG_INFINITY)
                    - opt_within(&c, &all, all.ids()).unwrap();
                module_worst = module_worst.min(ratio);
            }
        }
        let ok_module = module_worst >= floor - SLACK;
        pass &= ok_small && ok_module;
        notes.push(format!(
            "M={m}: size-3 worst ln-ratio {worst_over_u:.3} (need <= {:.3}), coreset worst {module_worst:.3}",
            -2.0 * m.ln()
        ));
    }
    let ms = [100.0, 10.0, 1.0];
    for probe in 1..=2 {
        let hd = lb_high_dim_instance(3, 2, &ms, 1e5, probe).unwrap();
        let c = hd.constraint();
        let all = hd.v.union(&hd.v_prime).unwrap();
        let full = opt_within(&c, &all, all.ids()).unwrap();
        let with = |ids: &[PointId]| {
            let mut g = ids.to_vec();
            g.extend(hd.v_prime.ids());
            opt_within(&c, &all, &g).unwrap_or(f64::NEG_INFINITY)
        };
        let truncated = full - with(&hd.truncated);
        let untouched = full - with(hd.v.ids());
        let Constraint::Partition(part) = &c else { unreachable!() };
        let cv = partition_coreset(&all, hd.v.ids(), part, Regime::HighK, &cfg()).unwrap();
        let cw = partition_coreset(&all, hd.v_prime.ids(), part, Regime::HighK, &cfg()).unwrap();
        let union = compose(&[cv, cw], &all).unwrap();
        let module = opt_within(&c, &all, &union).unwrap_or(f64::NEG_INFINITY) - full;
        let ok = truncated >= hd.predicted_ratio().ln() - SLACK && untouched.abs() <= SLACK && module >= floor - SLACK;
        pass &= ok;
        notes.push(format!(
            "high-dim probe {probe}: ln-ratio {truncated:.3} (need >= {:.3}), coreset {module:.3}",
            hd.predicted_ratio().ln()
        ));
    }
    outcome(pass, notes.join("; "))
}

fn hard_factor(h: &HardInstance) -> (f64, f64, usize, u128) {
    let all = h.union().unwrap();
    let k = h.k;
    let constraint = Constraint::Cardinality { k };
    let planted: BTreeSet<PointId> = h.planted.iter().flatten().copied().collect();
    let coresets: Vec<_> = h
        .sets
        .iter()
        .map(|s| {
            let v: Vec<PointId> = s.ids().iter().copied().filter(|id| !planted.contains(id)).collect();
            build_coreset(&all, &v, &constraint, RegimeChoice::HighK, &cfg()).unwrap()
        })
        .collect();
    let union = compose(&coresets, &all).unwrap();
    let restricted = all.subset(&union).unwrap();
    let count = detmax::solver::brute_force_count(&restricted, &constraint);
    let best = brute_force_opt_capped(&restricted, &constraint, 200_000_000).unwrap();
    let planted_value = mu(&all, &h.planted_optimum).unwrap();
    (planted_value, best.value_or_neg_inf(), union.len(), count)
}

fn c8_hard_instance() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for seed in 0..3u64 {
        let h = hard_instance(4, 0.1, 8, 1e3, seed).unwrap();
        let pairwise = h.g.iter().tuple_combinations().all(|(a, b)| {
            let ip: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            ip.abs() <= h.pairwise_bound + 1e-12
        });
        let d = h.d;
        let mut orth: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let ip: f64 = (0..d).map(|t| h.q[t * d + i] * h.q[t * d + j]).sum();
                orth = orth.max((ip - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        let (planted, best, size, count) = hard_factor(&h);
        let planted_ok = (planted - h.planted_log_value()).abs() <= 1e-6;
        let factor = (planted - best).exp();
        let ok = pairwise && orth <= 1e-12 && planted_ok && factor >= 10.0;
        pass &= ok;
        notes.push(format!(
            "seed {seed}: |G|={} pairwise {} |QtQ-I|={orth:.1e} planted matches {planted_ok} \
             coreset union {size} ({count} candidates) factor {factor:.3} (need >= 10)",
            h.g.len(),
            if pairwise { "ok" } else { "VIOLATED" }
        ));
    }
    outcome(pass, notes.join("; "))
}

fn c9_linear_time() -> Outcome {
    let start = Instant::now();
    let rows = bench_scaling(8, 12, &[1_000, 10_000, 100_000], 0, 3).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[1].millis / w[0].millis).collect();
    let pass = ratios.iter().all(|&r| r <= 15.0) && secs < 120.0;
    let times = rows.iter().map(|r| format!("n={} {:.1}ms", r.n, r.millis)).join(", ");
    outcome(
        pass,
        format!(
            "{times}; ratios {} (need <= 15); total {secs:.1}s",
            ratios.iter().map(|r| format!("{r:.2}")).join(", ")
        ),
    )
}

fn strip_timings(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove("timings_ms");
            map.values_mut().for_each(strip_timings);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

fn cli(args: &[&str], dir: &Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_detmax"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn normalized(args: &[&str], dir: &Path) -> Result<String, String> {
    let text = cli(args, dir)?;
    if args[0] == "bench" {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
        let drop = header.iter().position(|h| *h == "millis");
        return Ok(text
            .lines()
            .map(|l| l.split(',').enumerate().filter(|(i, _)| Some(*i) != drop).map(|(_, c)| c).join(","))
            .join("\n"));
    }
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{args:?}: {e}"))?;
    strip_timings(&mut v);
    Ok(v.to_string())
}

fn c10_determinism() -> Outcome {
    let dir: PathBuf = std::env::temp_dir().join(format!("detmax-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let setup: &[&[&str]] = &[
        &["gen", "random", "--n", "14", "--d", "3", "--k", "5", "--constraint", "partition", "--caps", "2,2,1", "--seed", "7", "--out", "part.json"],
        &["gen", "random", "--n", "12", "--d", "2", "--k", "4", "--constraint", "laminar", "--seed", "3", "--out", "lam.json"],
        &["coreset", "--input", "part.json", "--ids", "0,1,2,3,4,5,6", "--out", "c1.json"],
        &["coreset", "--input", "part.json", "--ids", "7,8,9,10,11,12,13", "--out", "c2.json"],
    ];
    for args in setup {
        if let Err(e) = cli(args, &dir) {
            return outcome(false, format!("setup failed: {e}"));
        }
    }
    let commands: &[&[&str]] = &[
        &["gen", "random", "--n", "20", "--d", "3", "--k", "4", "--seed", "11"],
        &["gen", "random", "--n", "9", "--d", "2", "--k", "3", "--integer", "3", "--seed", "2"],
        &["gen", "random", "--n", "10", "--d", "2", "--k", "3", "--constraint", "paired"],
        &["gen", "lb-low", "--caps", "1,1", "--d", "2", "--m", "100"],
        &["gen", "lb-high", "--k", "3", "--d", "2", "--ms", "100,10,1", "--m", "100000", "--probe", "2"],
        &["gen", "hard", "--d", "4", "--beta", "0.1", "--k", "8", "--seed", "5"],
        &["coreset", "--input", "part.json"],
        &["coreset", "--input", "part.json", "--regime", "highk", "--zeta", "1.1"],
        &["coreset", "--input", "lam.json", "--ridge"],
        &["solve", "--input", "part.json", "--method", "brute"],
        &["solve", "--input", "part.json", "--method", "greedy"],
        &["solve", "--input", "part.json", "--method", "local"],
        &["solve", "--input", "part.json", "--coreset", "c1.json", "--coreset", "c2.json"],
        &["solve", "--input", "lam.json"],
        &["compose", "c1.json", "c2.json"],
        &["run", "--input", "part.json", "--parts", "3", "--seed", "5"],
        &["run", "--input", "part.json", "--parts", "2", "--seed", "1", "--regime", "highk", "--split", "bygroup"],
        &["run", "--input", "lam.json", "--parts", "2", "--zeta", "1.05", "--seed", "9", "--regime", "auto"],
        &["verify", "--trials", "5", "--seed", "3"],
        &["bench", "--d", "3", "--k", "4", "--n", "200,400", "--reps", "1"],
    ];
    let mut mismatches = Vec::new();
    for args in commands {
        match (normalized(args, &dir), normalized(args, &dir)) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => mismatches.push(args.join(" ")),
            (Err(e), _) | (_, Err(e)) => mismatches.push(e),
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    outcome(
        mismatches.is_empty(),
        format!("{} commands rerun, differing: {:?}", commands.len(), mismatches),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 10] = [
        ("C1", "Cauchy-Binet equivalence", c1_cauchy_binet),
        ("C2", "exchange inequality", c2_exchange_inequality),
        ("C3", "value-preserving exchange", c3_smart_exchange),
        ("C4", "end-to-end composability", c4_composability),
        ("C5", "coreset size bounds", c5_size_bounds),
        ("C6", "laminar feasibility", c6_laminar_feasibility),
        ("C7", "lower-bound reproduction", c7_lower_bounds),
        ("C8", "hard-instance properties", c8_hard_instance),
        ("C9", "linear-time trend", c9_linear_time),
        ("C10", "CLI determinism", c10_determinism),
    ];
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('C')).collect();
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.iter().any(|s| s == id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        println!(
            "[acceptance] {id} {name}: {} ({}; {:.2}s)",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("[acceptance] failing: {}", failed.join(", "));
        std::process::exit(1);
    }
}
