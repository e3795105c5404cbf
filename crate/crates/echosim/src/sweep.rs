//! Parameter sweeps: a grid of simulation runs with deterministic seeds,
//! CSV outputs, and a JSON manifest.
//!
//! Output layout under the target directory:
//!
//! * `results.csv`, one row per run in grid order (all columns except
//!   `wall_secs` are reproducible byte for byte);
//! * `metrics_c###_r##.csv`, the per-iteration metrics of each run;
//! * `manifest.json`, the full spec, per-run seeds, and a `complete` flag.
//!
//! Runs execute in parallel; every run's seed derives from
//! `(base_seed, combo index, replication)`, so neither worker count nor
//! scheduling order can change any result.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics;
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsRecord};
use crate::model::SimulationParams;
use crate::rng::mix;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ECHOSIM_OUT";

/// Header of `results.csv`.
pub const RESULTS_HEADER: &str = "n_users,n_iterations,move_factor,p_produce,noise_sigma,seed,\
                                  final_clusters,final_var,final_avg_dist,final_min_dist,final_spread,wall_secs";

/// Header of the per-run metrics files.
pub const METRICS_HEADER: &str =
    "iteration,n_clusters,avg_variance,avg_inter_dist,min_inter_dist,spread,pool_size";

/// A sweep: the cartesian product of the four swept parameter lists, times
/// `replications` seeds per combination. All other parameters come from
/// `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n_users: Vec<usize>,
    pub move_factor: Vec<f64>,
    pub p_produce: Vec<f64>,
    pub noise_sigma: Vec<f64>,
    pub replications: usize,
    pub base_seed: u64,
    /// Shared parameters for every run; its swept fields and seed are
    /// overwritten per run.
    pub base: SimulationParams,
    /// Output directory wish from the config file; command-line flag and
    /// environment variable take precedence at the call site.
    pub output_dir: Option<PathBuf>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let base = SimulationParams::default();
        Self {
            n_users: vec![base.n_users],
            move_factor: vec![base.move_factor],
            p_produce: vec![base.p_produce],
            noise_sigma: vec![base.noise_sigma],
            replications: 5,
            base_seed: base.master_seed,
            base,
            output_dir: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (key, len) in [
            ("n_users", self.n_users.len()),
            ("move_factor", self.move_factor.len()),
            ("p_produce", self.p_produce.len()),
            ("noise_sigma", self.noise_sigma.len()),
        ] {
            if len == 0 {
                return Err(Error::invalid(key, "list must not be empty"));
            }
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        for combo in self.combinations() {
            combo.validate()?;
        }
        Ok(())
    }

    /// Parameter sets of the grid in row-major order (`n_users` outermost,
    /// `noise_sigma` innermost). Seeds are filled in per run later.
    pub fn combinations(&self) -> Vec<SimulationParams> {
        let mut combos = Vec::with_capacity(
            self.n_users.len() * self.move_factor.len() * self.p_produce.len() * self.noise_sigma.len(),
        );
        for &n in &self.n_users {
            for &alpha in &self.move_factor {
                for &p in &self.p_produce {
                    for &sigma in &self.noise_sigma {
                        combos.push(SimulationParams {
                            n_users: n,
                            move_factor: alpha,
                            p_produce: p,
                            noise_sigma: sigma,
                            ..self.base.clone()
                        });
                    }
                }
            }
        }
        combos
    }

    pub fn total_runs(&self) -> usize {
        self.combinations().len() * self.replications
    }
}

/// Seed of one run, a pure function of the sweep seed and grid coordinates.
pub fn run_seed(base_seed: u64, combo_index: usize, replication: usize) -> u64 {
    let mut s = mix(base_seed ^ 0x5E_ED0F_5EED_u64);
    s = mix(s ^ (combo_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    mix(s ^ (replication as u64).wrapping_mul(0xD134_2543_DE82_EF95))
}

/// Identifier of one run inside the output directory.
pub fn run_id(combo_index: usize, replication: usize) -> String {
    format!("c{combo_index:03}_r{replication:02}")
}

/// Final-state summary of one sweep run, one `results.csv` row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRunRecord {
    pub run_id: String,
    pub combo_index: usize,
    pub replication: usize,
    pub n_users: usize,
    pub n_iterations: u64,
    pub move_factor: f64,
    pub p_produce: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub final_clusters: usize,
    pub final_var: f64,
    pub final_avg_dist: Option<f64>,
    pub final_min_dist: Option<f64>,
    pub final_spread: f64,
    pub wall_secs: f64,
}

impl SweepRunRecord {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.3}",
            self.n_users,
            self.n_iterations,
            self.move_factor,
            self.p_produce,
            self.noise_sigma,
            self.seed,
            self.final_clusters,
            format_sig(self.final_var, 6),
            self.final_avg_dist.map_or(String::new(), |v| format_sig(v, 6)),
            self.final_min_dist.map_or(String::new(), |v| format_sig(v, 6)),
            format_sig(self.final_spread, 6),
            self.wall_secs,
        )
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    spec: &'a SweepSpec,
    total_runs: usize,
    complete: bool,
    runs: Vec<ManifestRun>,
}

#[derive(Serialize)]
struct ManifestRun {
    run_id: String,
    combo_index: usize,
    replication: usize,
    seed: u64,
    n_users: usize,
    move_factor: f64,
    p_produce: f64,
    noise_sigma: f64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

struct RunPlan {
    combo_index: usize,
    replication: usize,
    params: SimulationParams,
}

struct RunOutcome {
    record: SweepRunRecord,
    history: Vec<MetricsRecord>,
}

/// Execute the whole sweep, writing `results.csv`, per-run metrics files,
/// and `manifest.json` into `out_dir`. Returns the per-run records in grid
/// order. If any run fails, everything that succeeded is still written, the
/// manifest says `complete: false` and lists the failures, and an error
/// comes back.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path) -> Result<Vec<SweepRunRecord>> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;

    let combos = spec.combinations();
    let mut plans = Vec::with_capacity(spec.total_runs());
    for (combo_index, combo) in combos.iter().enumerate() {
        for replication in 0..spec.replications {
            let mut params = combo.clone();
            params.master_seed = run_seed(spec.base_seed, combo_index, replication);
            plans.push(RunPlan { combo_index, replication, params });
        }
    }

    let outcomes: Vec<std::result::Result<RunOutcome, String>> = plans
        .par_iter()
        .map(|plan| {
            catch_unwind(AssertUnwindSafe(|| execute_run(plan)))
                .unwrap_or_else(|payload| Err(panic_message(payload)))
        })
        .collect();

    let mut records = Vec::new();
    let mut manifest_runs = Vec::with_capacity(plans.len());
    let mut failed = 0usize;
    for (plan, outcome) in plans.iter().zip(&outcomes) {
        let (status, error) = match outcome {
            Ok(_) => ("ok", None),
            Err(msg) => {
                failed += 1;
                ("failed", Some(msg.clone()))
            }
        };
        manifest_runs.push(ManifestRun {
            run_id: run_id(plan.combo_index, plan.replication),
            combo_index: plan.combo_index,
            replication: plan.replication,
            seed: plan.params.master_seed,
            n_users: plan.params.n_users,
            move_factor: plan.params.move_factor,
            p_produce: plan.params.p_produce,
            noise_sigma: plan.params.noise_sigma,
            status,
            error,
        });
    }

    let mut results = BufWriter::new(File::create(out_dir.join("results.csv"))?);
    writeln!(results, "{RESULTS_HEADER}")?;
    for outcome in outcomes.iter().flatten() {
        writeln!(results, "{}", outcome.record.csv_row())?;
        write_metrics_csv(
            &out_dir.join(format!("metrics_{}.csv", outcome.record.run_id)),
            &outcome.history,
        )?;
        records.push(outcome.record.clone());
    }
    results.flush()?;

    let manifest_path = out_dir.join("manifest.json");
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        spec,
        total_runs: plans.len(),
        complete: failed == 0,
        runs: manifest_runs,
    };
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;

    if failed > 0 {
        Err(Error::SweepFailed {
            failed,
            total: plans.len(),
            manifest: manifest_path,
        })
    } else {
        Ok(records)
    }
}

fn execute_run(plan: &RunPlan) -> std::result::Result<RunOutcome, String> {
    let started = Instant::now();
    let (state, history) = dynamics::run(&plan.params).map_err(|e| e.to_string())?;
    let wall_secs = started.elapsed().as_secs_f64();
    let last = history.last().cloned().unwrap_or_else(|| {
        // Zero-iteration run: measure the initial population.
        metrics::compute_metrics(
            &state.positions(),
            plan.params.dbscan_eps,
            plan.params.dbscan_min_pts,
            0,
            state.pool.len(),
        )
    });
    Ok(RunOutcome {
        record: SweepRunRecord {
            run_id: run_id(plan.combo_index, plan.replication),
            combo_index: plan.combo_index,
            replication: plan.replication,
            n_users: plan.params.n_users,
            n_iterations: plan.params.n_iterations,
            move_factor: plan.params.move_factor,
            p_produce: plan.params.p_produce,
            noise_sigma: plan.params.noise_sigma,
            seed: plan.params.master_seed,
            final_clusters: last.n_clusters,
            final_var: last.avg_cluster_variance,
            final_avg_dist: last.avg_inter_cluster_dist,
            final_min_dist: last.min_inter_cluster_dist,
            final_spread: last.pairwise_spread,
            wall_secs,
        },
        history,
    })
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("run panicked: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("run panicked: {s}")
    } else {
        "run panicked".to_string()
    }
}

/// Write one run's per-iteration metrics as CSV.
pub fn write_metrics_csv(path: &Path, history: &[MetricsRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{METRICS_HEADER}")?;
    for rec in history {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            rec.iteration,
            rec.n_clusters,
            format_sig(rec.avg_cluster_variance, 6),
            rec.avg_inter_cluster_dist.map_or(String::new(), |v| format_sig(v, 6)),
            rec.min_inter_cluster_dist.map_or(String::new(), |v| format_sig(v, 6)),
            format_sig(rec.pairwise_spread, 6),
            rec.pool_size,
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Fixed-precision decimal with `sig` significant digits (no exponent
/// notation), the float format of all metric columns.
pub(crate) fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:e}");
    let exp: i32 = sci[sci.find('e').expect("always present") + 1..]
        .parse()
        .expect("exponent is an integer");
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}
