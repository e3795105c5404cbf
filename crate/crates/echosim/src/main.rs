//! Command-line front end: thin argument handling around the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use echosim::sweep::OUT_DIR_ENV;
use echosim::{config, dynamics, report, sweep, theory};

#[derive(Parser)]
#[command(
    name = "echosim",
    version,
    about = "Simulate recommendation-driven opinion fragmentation",
    after_help = "Output directory precedence: --out flag, then $ECHOSIM_OUT, then the \
                  config's output_dir (sweep only), then ./out."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its per-iteration metrics CSV.
    Simulate {
        /// Flat key=value parameter file; defaults apply for missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter grid and write results.csv, per-run metrics, and a
    /// manifest.
    Sweep {
        /// Sweep spec file; lists for swept keys, scalars for shared ones.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the number of replications per combination.
        #[arg(long)]
        replications: Option<usize>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate a results.csv into one row per parameter combination.
    Summarize {
        /// Path to a results.csv written by `sweep`.
        results: PathBuf,
        /// Emit CSV instead of an aligned table.
        #[arg(long)]
        csv: bool,
    },
    /// Check the 1-D fixed-creator guarantees: cluster-count bound, spread
    /// contraction, hull confinement. Nonzero exit if any seed fails.
    Theory {
        /// Flat key=value parameter file for the simplified regime.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of consecutive seeds to check.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> echosim::Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let mut params = match config {
                Some(path) => config::load_simulation_params(&path)?,
                None => Default::default(),
            };
            if let Some(seed) = seed {
                params.master_seed = seed;
            }
            let out_dir = resolve_out_dir(out, None);
            std::fs::create_dir_all(&out_dir)?;

            let (state, history) = dynamics::run(&params)?;
            let metrics_path = out_dir.join("metrics.csv");
            sweep::write_metrics_csv(&metrics_path, &history)?;

            println!(
                "simulated {} users for {} iterations (seed {})",
                params.n_users, params.n_iterations, params.master_seed
            );
            if let Some(last) = history.last() {
                let dist = last
                    .min_inter_cluster_dist
                    .map_or("n/a".to_string(), |v| format!("{v:.3}"));
                println!(
                    "final: {} clusters, avg variance {:.4}, min inter-cluster distance {}, pool {}",
                    last.n_clusters, last.avg_cluster_variance, dist, last.pool_size
                );
            }
            println!("content pool holds {} items", state.pool.len());
            println!("metrics written to {}", metrics_path.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Sweep { config, replications, jobs, out } => {
            let mut spec = match config {
                Some(path) => config::load_sweep_spec(&path)?,
                None => Default::default(),
            };
            if let Some(r) = replications {
                spec.replications = r;
            }
            let out_dir = resolve_out_dir(out, spec.output_dir.clone());

            let records = match jobs {
                Some(jobs) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(jobs.max(1))
                        .build()
                        .expect("thread pool construction");
                    pool.install(|| sweep::run_sweep(&spec, &out_dir))?
                }
                None => sweep::run_sweep(&spec, &out_dir)?,
            };

            println!(
                "completed {} runs ({} combinations x {} replications)",
                records.len(),
                spec.combinations().len(),
                spec.replications
            );
            println!("results written to {}", out_dir.join("results.csv").display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Summarize { results, csv } => {
            let summary = report::summarize_file(&results)?;
            if csv {
                print!("{}", summary.to_csv());
            } else {
                print!("{summary}");
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Theory { config, seeds } => {
            let params = match config {
                Some(path) => config::load_simplified_params(&path)?,
                None => Default::default(),
            };
            let verdicts = theory::verify_seeds(&params, seeds.max(1))?;
            let mut all_ok = true;
            for v in &verdicts {
                println!("{}", verdict_line(v));
                all_ok &= v.passed();
            }
            let passed = verdicts.iter().filter(|v| v.passed()).count();
            println!("{passed}/{} seeds passed", verdicts.len());
            Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn resolve_out_dir(flag: Option<PathBuf>, config_wish: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or(config_wish)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn verdict_line(v: &theory::SeedVerdict) -> String {
    let theorem = if v.theorem.passed() {
        format!(
            "theorem PASS ({} clusters, worst centroid gap {:.2e})",
            v.theorem.cluster_count, v.theorem.worst_centroid_distance
        )
    } else {
        format!(
            "theorem FAIL ({} clusters, within bound: {}, near creators: {})",
            v.theorem.cluster_count, v.theorem.count_within_bound, v.theorem.centroids_near_creators
        )
    };
    let ratio = v
        .spread_ratio
        .map_or("0 (degenerate start)".to_string(), |r| format!("{r:.3e}"));
    let contraction = if v.contraction.passed && v.ratio_ok {
        format!("contraction PASS (final/initial spread {ratio})")
    } else if !v.contraction.passed {
        format!(
            "contraction FAIL (window trend broke at t={}, final/initial spread {ratio})",
            v.contraction.first_violation.unwrap_or(0)
        )
    } else {
        format!("contraction FAIL (final/initial spread {ratio} above threshold)")
    };
    let bounded = match v.boundedness {
        Some(true) => "boundedness PASS",
        Some(false) => "boundedness FAIL",
        None => "boundedness skipped (noisy run)",
    };
    format!("seed {:>4}: {theorem}  {contraction}  {bounded}", v.seed)
}
