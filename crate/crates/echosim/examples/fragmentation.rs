// Run the full 2-D model at its default parameters and watch a single
// population fragment into a handful of tight clusters.

use echosim::metrics::{cluster_centroids, dbscan};
use echosim::{dynamics, SimulationParams};

fn main() -> echosim::Result<()> {
    let params = SimulationParams {
        master_seed: 7,
        ..Default::default()
    };
    println!(
        "{} users, {} iterations, alpha {}, p_produce {}, sigma {}",
        params.n_users, params.n_iterations, params.move_factor, params.p_produce, params.noise_sigma
    );

    let (state, history) = dynamics::run(&params)?;

    println!("\n  iter  clusters  avg_var   min_dist  spread");
    for record in history.iter().filter(|r| r.iteration % 50 == 0 || r.iteration == 1) {
        let min_dist = record
            .min_inter_cluster_dist
            .map_or("       -".to_string(), |d| format!("{d:8.3}"));
        println!(
            "{:6}  {:8}  {:7.4}  {}  {:9.1}",
            record.iteration, record.n_clusters, record.avg_cluster_variance, min_dist, record.pairwise_spread
        );
    }

    let positions = state.positions();
    let labeling = dbscan(&positions, params.dbscan_eps, params.dbscan_min_pts);
    let centroids = cluster_centroids(&positions, &labeling);
    println!("\nfinal population: {} clusters, {} noise users", labeling.n_clusters, labeling.noise_count());
    for (members, centroid) in labeling.members().iter().zip(&centroids) {
        println!("  {:4} users near ({:+.3}, {:+.3})", members.len(), centroid[0], centroid[1]);
    }
    Ok(())
}
