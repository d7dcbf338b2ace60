use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use detmax::coreset::{build_coreset, compose_documents, RegimeChoice};
use detmax::document::{CoresetDocument, InstanceDocument};
use detmax::geometry::load_pointset_csv;
use detmax::harness::{
    bench_scaling, run_distributed, verify_suite, write_bench_csv, CoresetMode, RunConfig, SplitMode, SUITES,
};
use detmax::instances::{
    hard_instance, lb_high_dim_instance, lb_low_dim_instance, random_instance, ConstraintKind, CoordMode, Instance,
    InstanceSpec,
};
use detmax::localsearch::{default_ridge, LocalSearchConfig};
use detmax::matroid::oracle_cap;
use detmax::objective::DEFAULT_ZETA;
use detmax::solver::{brute_force_count, brute_force_opt, greedy_constrained, local_search_constrained};
use detmax::{Constraint, PartitionConstraint, PointId};

#[derive(Parser)]
#[command(name = "detmax", version, about = "Composable coresets for determinant maximisation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance as JSON.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Build a coreset for an instance.
    Coreset {
        #[command(flatten)]
        input: InputArgs,
        /// Restrict the ground set to these ids.
        #[arg(long, value_delimiter = ',')]
        ids: Option<Vec<PointId>>,
        #[arg(long, default_value = "auto")]
        regime: RegimeChoice,
        #[arg(long, default_value_t = DEFAULT_ZETA)]
        zeta: f64,
        /// Add a small ridge to every Gram matrix.
        #[arg(long)]
        ridge: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance, optionally restricted to the union of coresets.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = SolveMethod::Auto)]
        method: SolveMethod,
        /// Coreset JSON files; the search runs on their union.
        #[arg(long = "coreset")]
        coresets: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ZETA)]
        zeta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Union of coresets built from disjoint ground sets.
    Compose {
        #[arg(required = true)]
        coresets: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split, build per-part coresets, compose, solve and report.
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 2)]
        parts: usize,
        #[arg(long, default_value_t = DEFAULT_ZETA)]
        zeta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "auto")]
        regime: RegimeChoice,
        #[arg(long, default_value = "random")]
        split: SplitMode,
        /// Keep every point of every part instead of a coreset.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        ridge: bool,
        /// Also write the one-row CSV summary here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time partition coresets over growing n; CSV on stdout.
    Bench {
        #[arg(long, default_value_t = 8)]
        d: usize,
        #[arg(long, default_value_t = 12)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
    /// Run randomised self-check suites.
    Verify {
        /// Suite name, or "all".
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Instance file (.json, or .csv with --k / --caps).
    #[arg(long)]
    input: PathBuf,
    /// Cardinality constraint for CSV input.
    #[arg(long)]
    k: Option<usize>,
    /// Partition caps for CSV input.
    #[arg(long, value_delimiter = ',')]
    caps: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum GenKind {
    /// Random points under a random constraint.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = GenConstraint::Cardinality)]
        constraint: GenConstraint,
        /// Partition caps; defaults to k split evenly over min(k, 4) groups.
        #[arg(long, value_delimiter = ',')]
        caps: Option<Vec<usize>>,
        /// Integer coordinates in -range..=range instead of Gaussian.
        #[arg(long)]
        integer: Option<i64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Low-dimensional lower-bound family.
    LbLow {
        #[arg(long, value_delimiter = ',')]
        caps: Vec<usize>,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: f64,
    },
    /// High-dimensional lower-bound family.
    LbHigh {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        /// M_1 >= ... >= M_{d+1}.
        #[arg(long, value_delimiter = ',')]
        ms: Vec<f64>,
        #[arg(long)]
        m: f64,
        #[arg(long, default_value_t = 1)]
        probe: usize,
    },
    /// Planted hard instance; the union of all parts under cardinality k.
    Hard {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e3)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenConstraint {
    Cardinality,
    Partition,
    Laminar,
    Paired,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SolveMethod {
    /// Brute force when under the enumeration cap, greedy otherwise.
    Auto,
    Brute,
    Greedy,
    Local,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn load_instance(args: &InputArgs) -> anyhow::Result<Instance> {
    let is_csv = args.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let instance = if is_csv {
        let file = File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
        let points = load_pointset_csv(BufReader::new(file))?;
        let constraint = match (&args.k, &args.caps) {
            (Some(k), None) => Constraint::Cardinality { k: *k },
            (None, Some(caps)) => {
                let part = PartitionConstraint::new(caps);
                part.validate(&points)?;
                Constraint::Partition(part)
            }
            _ => bail!("CSV input needs exactly one of --k or --caps"),
        };
        Instance {
            points,
            constraint,
            meta: serde_json::Value::Null,
            warnings: Vec::new(),
        }
    } else {
        let doc: InstanceDocument = read_json(&args.input)?;
        Instance::from_document(&doc)?
    };
    for w in &instance.warnings {
        eprintln!("warning: {w}");
    }
    Ok(instance)
}

fn generate(kind: GenKind) -> anyhow::Result<Instance> {
    Ok(match kind {
        GenKind::Random {
            n,
            d,
            k,
            constraint,
            caps,
            integer,
            seed,
        } => {
            let constraint = match constraint {
                GenConstraint::Cardinality => ConstraintKind::Cardinality,
                GenConstraint::Partition => ConstraintKind::Partition {
                    caps: caps.unwrap_or_else(|| detmax::harness::even_caps(k, k.clamp(1, 4))),
                },
                GenConstraint::Laminar => ConstraintKind::Laminar,
                GenConstraint::Paired => ConstraintKind::Paired,
            };
            random_instance(&InstanceSpec {
                n,
                d,
                k,
                constraint,
                coords: integer.map_or(CoordMode::Gaussian, |range| CoordMode::Integer { range }),
                seed,
            })?
        }
        GenKind::LbLow { caps, d, m } => {
            let lb = lb_low_dim_instance(caps.len(), &caps, d, m)?;
            Instance {
                constraint: lb.constraint(),
                meta: serde_json::json!({"generator": "lb_low_dim", "caps": caps, "d": d, "m": m}),
                points: lb.v,
                warnings: Vec::new(),
            }
        }
        GenKind::LbHigh { k, d, ms, m, probe } => {
            let lb = lb_high_dim_instance(k, d, &ms, m, probe)?;
            Instance {
                constraint: lb.constraint(),
                meta: serde_json::json!({
                    "generator": "lb_high_dim",
                    "k": k, "d": d, "ms": ms, "m": m, "probe": probe,
                    "truncated": lb.truncated,
                }),
                points: lb.v,
                warnings: Vec::new(),
            }
        }
        GenKind::Hard { d, beta, k, scale, seed } => {
            let hard = hard_instance(d, beta, k, scale, seed)?;
            Instance {
                points: hard.union()?,
                constraint: Constraint::Cardinality { k },
                meta: hard.meta(),
                warnings: Vec::new(),
            }
        }
    })
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { kind, out } => {
            let instance = generate(kind)?;
            emit(&instance.to_document(), out.as_deref())?;
        }
        Command::Coreset {
            input,
            ids,
            regime,
            zeta,
            ridge,
            out,
        } => {
            let instance = load_instance(&input)?;
            let points = &instance.points;
            let cfg = LocalSearchConfig {
                zeta,
                ridge: if ridge { default_ridge(points) } else { 0.0 },
                ..LocalSearchConfig::default()
            };
            let ids = ids.unwrap_or_else(|| points.ids().to_vec());
            let coreset = build_coreset(points, &ids, &instance.constraint, regime, &cfg)?;
            emit(&coreset.to_document(), out.as_deref())?;
        }
        Command::Solve {
            input,
            method,
            coresets,
            zeta,
            out,
        } => {
            let instance = load_instance(&input)?;
            let points = if coresets.is_empty() {
                instance.points.clone()
            } else {
                let docs: Vec<CoresetDocument> = coresets.iter().map(|p| read_json(p)).collect::<anyhow::Result<_>>()?;
                instance.points.subset(&compose_documents(&docs)?)?
            };
            let constraint = &instance.constraint;
            let result = match method {
                SolveMethod::Auto if brute_force_count(&points, constraint) <= oracle_cap() => {
                    brute_force_opt(&points, constraint)?
                }
                SolveMethod::Auto | SolveMethod::Greedy => greedy_constrained(&points, constraint)?,
                SolveMethod::Brute => brute_force_opt(&points, constraint)?,
                SolveMethod::Local => local_search_constrained(&points, constraint, zeta)?,
            };
            emit(&result, out.as_deref())?;
        }
        Command::Compose { coresets, out } => {
            let docs: Vec<CoresetDocument> = coresets.iter().map(|p| read_json(p)).collect::<anyhow::Result<_>>()?;
            let ids = compose_documents(&docs)?;
            emit(&serde_json::json!({ "ids": ids, "size": ids.len() }), out.as_deref())?;
        }
        Command::Run {
            input,
            parts,
            zeta,
            seed,
            regime,
            split,
            full,
            ridge,
            csv,
            out,
        } => {
            let instance = load_instance(&input)?;
            let config = RunConfig {
                parts,
                seed,
                zeta,
                regime,
                split,
                mode: if full { CoresetMode::Full } else { CoresetMode::Coreset },
                ridge,
            };
            let report = run_distributed(&instance, &config)?;
            if let Some(path) = csv {
                let file = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
                report.write_csv(file)?;
            }
            emit(&report, out.as_deref())?;
        }
        Command::Bench { d, k, n, seed, reps } => {
            let rows = bench_scaling(d, k, &n, seed, reps)?;
            write_bench_csv(&rows, std::io::stdout())?;
        }
        Command::Verify { suite, trials, seed } => {
            let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite.as_str()] };
            let reports = names
                .into_iter()
                .map(|s| verify_suite(s, trials, seed))
                .collect::<Result<Vec<_>, _>>()?;
            let failed = reports.iter().any(|r| r.failures > 0);
            emit(&reports, None)?;
            if failed {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}
