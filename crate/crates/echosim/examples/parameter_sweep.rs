// Sweep a small parameter grid, then aggregate the per-run results into the
// one-row-per-combination summary table. The same artifacts (results.csv,
// per-run metrics, manifest.json) are what the `sweep` subcommand writes.

use echosim::sweep::{run_sweep, SweepSpec};
use echosim::{report, SimulationParams};

fn main() -> echosim::Result<()> {
    let spec = SweepSpec {
        n_users: vec![200, 400],
        move_factor: vec![0.01, 0.05],
        p_produce: vec![0.2],
        noise_sigma: vec![0.005],
        replications: 2,
        base_seed: 1,
        base: SimulationParams {
            n_iterations: 120,
            ..Default::default()
        },
        output_dir: None,
    };

    let out_dir = std::env::temp_dir().join("echosim-sweep-demo");
    println!(
        "{} combinations x {} replications -> {}",
        spec.combinations().len(),
        spec.replications,
        out_dir.display()
    );
    run_sweep(&spec, &out_dir)?;

    let summary = report::summarize_file(&out_dir.join("results.csv"))?;
    println!("\n{summary}");
    Ok(())
}
