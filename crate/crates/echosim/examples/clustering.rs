// Exercise the clustering and geometry tools on synthetic data: DBSCAN on
// three Gaussian blobs with a sprinkle of far-away outliers, then the
// within-cluster variance and centroid-separation measures.

use echosim::metrics::{cluster_centroids, cluster_variance, dbscan, inter_cluster_distances, pairwise_spread};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let jitter = Normal::new(0.0, 0.08).unwrap();
    let blob_centers = [[-1.5, 0.0], [0.5, 1.0], [1.0, -1.0]];

    let mut points: Vec<[f64; 2]> = Vec::new();
    for center in blob_centers {
        for _ in 0..60 {
            points.push([center[0] + jitter.sample(&mut rng), center[1] + jitter.sample(&mut rng)]);
        }
    }
    // Outliers far from every blob: DBSCAN should refuse to cluster them.
    for _ in 0..5 {
        points.push([rng.random_range(4.0..6.0), rng.random_range(4.0..6.0)]);
    }

    let labeling = dbscan(&points, 0.3, 8);
    println!("{} points -> {} clusters, {} noise", points.len(), labeling.n_clusters, labeling.noise_count());

    let centroids = cluster_centroids(&points, &labeling);
    for (members, centroid) in labeling.members().iter().zip(&centroids) {
        println!("  {:3} points near ({:+.3}, {:+.3})", members.len(), centroid[0], centroid[1]);
    }

    println!("avg within-cluster variance: {:.4}", cluster_variance(&points, &labeling));
    if let Some((avg, min)) = inter_cluster_distances(&points, &labeling) {
        println!("centroid separation: avg {avg:.3}, min {min:.3}");
    }
    println!("total pairwise spread: {:.1}", pairwise_spread(&points));
}
