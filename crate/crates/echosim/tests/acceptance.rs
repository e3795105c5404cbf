// Acceptance checklist for the whole crate. Each test prints one line,
// `[ N] name: PASS/FAIL (details)`, and fails loudly if its bound is missed.
// Batches of simulation runs are shared between items through lazy statics;
// the static batches total 70 default-scale runs and 150 simplified runs.

use std::sync::LazyLock;
use std::time::Instant;

use echosim::metrics::dbscan;
use echosim::recommend::{nearest_k, weighted_median};
use echosim::report::{lower_median, mode_smallest};
use echosim::sweep::{run_sweep, SweepSpec};
use echosim::theory::{verify_seeds, SeedVerdict};
use echosim::{dynamics, ContentItem, SimplifiedParams, SimulationParams};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

struct FullRun {
    clusters: usize,
    variance: f64,
    min_dist: Option<f64>,
    wall_secs: f64,
}

fn status(ok: bool) -> &'static str {
    if ok { "PASS" } else { "FAIL" }
}

fn run_batch(base: SimulationParams, seeds: std::ops::RangeInclusive<u64>) -> Vec<FullRun> {
    seeds
        .map(|seed| {
            let params = SimulationParams { master_seed: seed, ..base.clone() };
            let start = Instant::now();
            let (_, history) = dynamics::run(&params).expect("valid parameters");
            let last = history.last().expect("at least one iteration");
            FullRun {
                clusters: last.n_clusters,
                variance: last.avg_cluster_variance,
                min_dist: last.min_inter_cluster_dist,
                wall_secs: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

/// Default parameters, 20 seeds: the headline fragmentation experiment.
static BASE: LazyLock<Vec<FullRun>> = LazyLock::new(|| run_batch(SimulationParams::default(), 1..=20));

static ALPHA02: LazyLock<Vec<FullRun>> =
    LazyLock::new(|| run_batch(SimulationParams { move_factor: 0.02, ..Default::default() }, 1..=10));

static PRODUCE01: LazyLock<Vec<FullRun>> =
    LazyLock::new(|| run_batch(SimulationParams { p_produce: 0.1, ..Default::default() }, 1..=10));

static PRODUCE03: LazyLock<Vec<FullRun>> =
    LazyLock::new(|| run_batch(SimulationParams { p_produce: 0.3, ..Default::default() }, 1..=10));

static SIGMA02: LazyLock<Vec<FullRun>> =
    LazyLock::new(|| run_batch(SimulationParams { noise_sigma: 0.02, ..Default::default() }, 1..=20));

/// 50 seeds for each creator count M in {2, 3, 5}, plus the total wall time.
static THEORY: LazyLock<(Vec<Vec<SeedVerdict>>, f64)> = LazyLock::new(|| {
    let creator_sets: [&[f64]; 3] = [&[-1.0, 1.0], &[-2.0, 0.0, 2.0], &[-2.0, -1.0, 0.0, 1.0, 2.0]];
    let start = Instant::now();
    let batches = creator_sets
        .iter()
        .map(|&creators| {
            let params = SimplifiedParams {
                creator_positions: creators.to_vec(),
                master_seed: 1,
                ..Default::default()
            };
            verify_seeds(&params, 50).expect("valid parameters")
        })
        .collect();
    (batches, start.elapsed().as_secs_f64())
});

#[test]
fn c01_fragmentation_emergence() {
    let runs = &*BASE;
    let multi = runs.iter().filter(|r| r.clusters >= 2).count();
    let counts: Vec<usize> = runs.iter().map(|r| r.clusters).collect();
    let modal = mode_smallest(&counts);
    let slowest = runs.iter().map(|r| r.wall_secs).fold(0.0, f64::max);
    let ok = multi * 100 >= runs.len() * 80 && (modal == 2 || modal == 3) && slowest < 60.0;
    println!(
        "[ 1] fragmentation emergence: {} ({multi}/20 runs with >= 2 clusters, modal count {modal}, slowest run {slowest:.1}s)",
        status(ok)
    );
    assert!(multi * 100 >= runs.len() * 80, "only {multi}/20 runs fragmented");
    assert!(modal == 2 || modal == 3, "modal cluster count {modal} outside {{2, 3}}");
    assert!(slowest < 60.0, "slowest run took {slowest:.1}s");
}

#[test]
fn c02_cluster_tightness() {
    let vars: Vec<f64> = BASE.iter().map(|r| r.variance).collect();
    let median = lower_median(&vars).expect("non-empty batch");
    println!(
        "[ 2] cluster tightness: {} (median final within-cluster variance {median:.4})",
        status(median < 0.10)
    );
    assert!(median < 0.10, "median variance {median:.4} not below 0.10");
}

#[test]
fn c03_cluster_separation() {
    let dists: Vec<f64> = BASE.iter().filter_map(|r| r.min_dist).collect();
    let median = lower_median(&dists).expect("some run found >= 2 clusters");
    println!(
        "[ 3] cluster separation: {} (median min inter-centroid distance {median:.3} over {} runs)",
        status((0.3..=2.0).contains(&median)),
        dists.len()
    );
    assert!((0.3..=2.0).contains(&median), "median min distance {median:.3} outside [0.3, 2.0]");
}

#[test]
fn c04_parameter_directions() {
    let mean = |runs: &[FullRun], f: fn(&FullRun) -> f64| -> f64 {
        runs.iter().map(f).sum::<f64>() / runs.len() as f64
    };
    let var_base = mean(&BASE[..10], |r| r.variance);
    let var_fast = mean(&ALPHA02, |r| r.variance);
    let clusters_low = mean(&PRODUCE01, |r| r.clusters as f64);
    let clusters_high = mean(&PRODUCE03, |r| r.clusters as f64);
    let ok = var_fast <= var_base && clusters_high >= clusters_low;
    println!(
        "[ 4] parameter directions: {} (variance {var_fast:.4} @ alpha=0.02 vs {var_base:.4} @ alpha=0.01; \
         clusters {clusters_high:.1} @ p=0.3 vs {clusters_low:.1} @ p=0.1)",
        status(ok)
    );
    assert!(var_fast <= var_base, "mean variance rose from {var_base:.4} to {var_fast:.4} at the faster rate");
    assert!(
        clusters_high >= clusters_low,
        "mean cluster count fell from {clusters_low:.2} to {clusters_high:.2} at the higher production rate"
    );
}

#[test]
fn c05_cluster_count_bound() {
    let (batches, wall) = &*THEORY;
    let mut checked = 0;
    let mut passed = 0;
    let mut worst_miss = 0.0f64;
    for verdicts in batches {
        for v in verdicts {
            if v.theorem.count_within_bound && v.theorem.centroids_near_creators {
                passed += 1;
            }
            worst_miss = worst_miss.max(v.theorem.worst_centroid_distance);
            checked += 1;
        }
    }
    let ok = passed == 150 && checked == 150 && *wall < 5.0;
    println!(
        "[ 5] cluster-count bound: {} ({passed}/150 runs within bound, worst centroid miss {worst_miss:.1e}, {wall:.1}s total)",
        status(ok)
    );
    for verdicts in batches {
        for v in verdicts {
            assert!(v.theorem.count_within_bound, "seed {}: {} clusters exceed the creator count", v.seed, v.theorem.cluster_count);
            assert!(
                v.theorem.centroids_near_creators,
                "seed {}: a centroid sits {:.4} from the nearest creator",
                v.seed, v.theorem.worst_centroid_distance
            );
        }
    }
    assert_eq!(checked, 150);
    assert!(*wall < 5.0, "150 simplified runs took {wall:.1}s");
}

#[test]
fn c06_spread_contraction() {
    // The three-creator batch: the population starts inside the middle
    // basin, so spread must fall essentially to zero.
    let (batches, _) = &*THEORY;
    let verdicts = &batches[1];
    let trend = verdicts.iter().filter(|v| v.contraction.passed).count();
    let ratio = verdicts.iter().filter(|v| v.ratio_ok).count();
    let ok = trend * 100 >= verdicts.len() * 95 && ratio == verdicts.len();
    println!(
        "[ 6] spread contraction: {} (windowed non-increase {trend}/50, final/initial < 0.05 in {ratio}/50)",
        status(ok)
    );
    assert!(trend * 100 >= verdicts.len() * 95, "windowed non-increase only in {trend}/50 runs");
    assert_eq!(ratio, verdicts.len(), "spread ratio met in only {ratio}/50 runs");
}

#[test]
fn c07_hull_confinement() {
    let (batches, _) = &*THEORY;
    let mut bounded = 0;
    let mut total = 0;
    for verdicts in batches {
        for v in verdicts {
            if v.boundedness == Some(true) {
                bounded += 1;
            }
            total += 1;
        }
    }
    println!(
        "[ 7] hull confinement: {} ({bounded}/{total} runs stayed inside the hull, exact bound)",
        status(bounded == total)
    );
    for verdicts in batches {
        for v in verdicts {
            assert_eq!(v.boundedness, Some(true), "seed {} left the initial convex hull", v.seed);
        }
    }
}

#[test]
fn c08_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE97);
    let mut failures: Vec<String> = Vec::new();

    // DBSCAN against a quadratic reference with identical label semantics.
    let mut dbscan_ok = 0;
    for case in 0..300 {
        let n = rng.random_range(1..=100);
        let points: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let eps = rng.random_range(0.05..0.5);
        let min_pts = rng.random_range(1..=10);
        let fast = dbscan(&points, eps, min_pts);
        let (labels, n_clusters) = naive_dbscan(&points, eps, min_pts);
        if fast.labels == labels && fast.n_clusters == n_clusters {
            dbscan_ok += 1;
        } else {
            failures.push(format!("dbscan case {case}: diverges (eps {eps}, min_pts {min_pts})"));
        }
    }

    // Weighted median minimizes the weighted L1 cost on every coordinate.
    let mut median_ok = 0;
    for case in 0..500 {
        let n = rng.random_range(1..=40);
        let dim = rng.random_range(1..=3);
        let positions: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        if rng.random_bool(0.3) {
                            rng.random_range(-2i32..=2) as f64 // duplicates on purpose
                        } else {
                            rng.random_range(-5.0..5.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..3.0)).collect();
        let median = weighted_median(&positions, &weights);
        let mut all_axes = true;
        for axis in 0..dim {
            let cost = |v: f64| -> f64 {
                positions.iter().zip(&weights).map(|(p, w)| w * (p[axis] - v).abs()).sum()
            };
            let median_cost = cost(median[axis]);
            let best = positions.iter().map(|p| cost(p[axis])).fold(f64::INFINITY, f64::min);
            if median_cost > best + 1e-9 * (1.0 + best) {
                all_axes = false;
                failures.push(format!(
                    "median case {case} axis {axis}: cost {median_cost} exceeds best {best}"
                ));
            }
        }
        if all_axes {
            median_ok += 1;
        }
    }

    // Nearest-k against full-sort selection, with duplicated positions so
    // the id tie-break is exercised.
    let mut nearest_ok = 0;
    for case in 0..200 {
        let n = rng.random_range(1..=60);
        let pool: Vec<ContentItem> = (0..n)
            .map(|id| {
                let coord = |rng: &mut ChaCha8Rng| {
                    if rng.random_bool(0.4) {
                        rng.random_range(-1i32..=1) as f64
                    } else {
                        rng.random_range(-3.0..3.0)
                    }
                };
                ContentItem {
                    id: id as u64,
                    creator_id: 0,
                    position: vec![coord(&mut rng), coord(&mut rng)],
                    birth_iteration: 0,
                }
            })
            .collect();
        let query = vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let k = rng.random_range(1..=n);
        let fast = nearest_k(&query, &pool, k);
        let slow = full_sort_nearest(&query, &pool, k);
        if fast == slow {
            nearest_ok += 1;
        } else {
            failures.push(format!("nearest-k case {case}: k={k} selection diverges"));
        }
    }

    println!(
        "[ 8] oracle equivalence: {} (dbscan {dbscan_ok}/300, weighted median {median_ok}/500, nearest-k {nearest_ok}/200)",
        status(failures.is_empty())
    );
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn c09_determinism() {
    let spec = SweepSpec {
        n_users: vec![300],
        move_factor: vec![0.01, 0.05],
        p_produce: vec![0.2],
        noise_sigma: vec![0.005, 0.02],
        replications: 2,
        base_seed: 77,
        base: SimulationParams { n_iterations: 60, ..Default::default() },
        output_dir: None,
    };
    let scratch = tempfile::tempdir().expect("tempdir");
    let dirs = [scratch.path().join("first"), scratch.path().join("second"), scratch.path().join("eight")];
    let pool = |threads: usize| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool(1).install(|| run_sweep(&spec, &dirs[0])).expect("sweep");
    pool(1).install(|| run_sweep(&spec, &dirs[1])).expect("sweep");
    pool(8).install(|| run_sweep(&spec, &dirs[2])).expect("sweep");

    let read = |dir: &std::path::Path, name: &str| std::fs::read_to_string(dir.join(name)).expect("artifact");
    // Every column of results.csv except the trailing wall-clock one.
    let stable_results = |dir: &std::path::Path| -> Vec<String> {
        read(dir, "results.csv")
            .lines()
            .map(|line| line.rsplit_once(',').expect("csv row").0.to_string())
            .collect()
    };
    let baseline = stable_results(&dirs[0]);
    let mut metrics_files: Vec<String> = std::fs::read_dir(&dirs[0])
        .expect("dir")
        .map(|e| e.expect("entry").file_name().into_string().expect("utf8 name"))
        .filter(|name| name.starts_with("metrics_"))
        .collect();
    metrics_files.sort();
    assert_eq!(metrics_files.len(), spec.total_runs());

    let mut divergences: Vec<String> = Vec::new();
    for dir in &dirs[1..] {
        if stable_results(dir) != baseline {
            divergences.push(format!("results.csv diverges in {}", dir.display()));
        }
        for name in &metrics_files {
            if read(dir, name) != read(&dirs[0], name) {
                divergences.push(format!("{name} diverges in {}", dir.display()));
            }
        }
        if read(dir, "manifest.json") != read(&dirs[0], "manifest.json") {
            divergences.push(format!("manifest diverges in {}", dir.display()));
        }
    }
    println!(
        "[ 9] determinism: {} ({} runs, 1 vs 1 vs 8 worker threads, metrics and manifest byte-identical, results identical up to wall time)",
        status(divergences.is_empty()),
        spec.total_runs()
    );
    assert!(divergences.is_empty(), "{}", divergences.join("\n"));
}

#[test]
fn c10_noise_robustness() {
    let runs = &*SIGMA02;
    let multi = runs.iter().filter(|r| r.clusters >= 2).count();
    println!(
        "[10] noise robustness: {} ({multi}/20 runs with >= 2 clusters at sigma = 0.02, need 70%)",
        status(multi * 100 >= runs.len() * 70)
    );
    assert!(multi * 100 >= runs.len() * 70, "only {multi}/20 noisy runs fragmented");
}

/// Quadratic-time DBSCAN with the same label conventions as the fast path:
/// ascending scan, dense cluster ids in discovery order, border points keep
/// the first cluster that reaches them.
fn naive_dbscan(points: &[[f64; 2]], eps: f64, min_pts: usize) -> (Vec<Option<usize>>, usize) {
    let n = points.len();
    let eps_sq = eps * eps;
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    let dx = points[i][0] - points[j][0];
                    let dy = points[i][1] - points[j][1];
                    dx * dx + dy * dy <= eps_sq
                })
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut n_clusters = 0;
    for start in 0..n {
        if visited[start] || !core[start] {
            continue;
        }
        let cluster = n_clusters;
        n_clusters += 1;
        let mut queue = std::collections::VecDeque::from([start]);
        visited[start] = true;
        labels[start] = Some(cluster);
        while let Some(point) = queue.pop_front() {
            for &nb in &neighbors[point] {
                if labels[nb].is_none() {
                    labels[nb] = Some(cluster);
                }
                if core[nb] && !visited[nb] {
                    visited[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
    }
    (labels, n_clusters)
}

/// Sort the whole pool by (squared distance, id) and truncate.
fn full_sort_nearest(query: &[f64], pool: &[ContentItem], k: usize) -> Vec<u64> {
    let mut order: Vec<(f64, u64)> = pool
        .iter()
        .map(|item| {
            let d = item
                .position
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            (d, item.id)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.truncate(k);
    order.into_iter().map(|(_, id)| id).collect()
}
