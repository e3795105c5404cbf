//! The 1-D fixed-creator regime and its analytical guarantees.
//!
//! This stripped-down variant of the full model keeps creators pinned at
//! fixed positions `c_1 < ... < c_M`, has each of them publish exactly one
//! item per iteration, and uses a fixed recommendation fraction `rho` instead
//! of a per-user draw. In the noiseless case three properties hold and are
//! checked here directly:
//!
//! * the population settles into at most `M` tight clusters, each near a
//!   creator ([`check_theorem`]);
//! * the spread potential `sum_{i<j} |u_i - u_j|` does not increase between
//!   consecutive time windows once averaged ([`check_spread_contraction`]),
//!   and in basin-confined setups it collapses by orders of magnitude;
//! * every position stays inside the convex hull of the initial users and
//!   the creators, with no floating-point slack needed
//!   ([`check_boundedness`]).
//!
//! The contraction checks are statements about attraction toward a common
//! basin. A configuration whose users straddle several basins (for example
//! creators at -1 and +1 with users spread around 0) polarizes: the spread
//! then grows by design, and the contraction checks report that honestly.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;
use crate::model::{content_weight, DEFAULT_PRUNE_THRESHOLD};
use crate::recommend::weighted_median_1d;
use crate::rng::{RngPolicy, StreamKind};

/// Two final positions further apart than this belong to different clusters,
/// and a cluster centroid counts as "near" a creator within this distance.
pub const DEFAULT_CLUSTER_TOLERANCE: f64 = 0.05;
/// Window length for the spread contraction trend.
pub const DEFAULT_CONTRACTION_WINDOW: usize = 10;
/// The final spread must fall below this fraction of the initial spread.
pub const DEFAULT_SPREAD_RATIO: f64 = 0.05;

/// Parameters of the simplified 1-D regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedParams {
    /// Fixed creator positions, strictly increasing.
    pub creator_positions: Vec<f64>,
    pub n_users: usize,
    /// Fixed recommendation fraction: every user sees the nearest
    /// `ceil(rho * pool)` items. Must lie strictly inside (0.05, 0.5).
    pub rho: f64,
    /// Step size toward the weighted median, in [0, 1].
    pub alpha: f64,
    pub n_iterations: u64,
    /// Movement noise; zero for the regime the guarantees cover.
    pub noise_sigma: f64,
    pub decay_lambda: f64,
    /// Users start i.i.d. from N(init_mu, init_sigma^2).
    pub init_mu: f64,
    pub init_sigma: f64,
    pub master_seed: u64,
}

impl Default for SimplifiedParams {
    fn default() -> Self {
        Self {
            creator_positions: vec![-2.0, 0.0, 2.0],
            n_users: 200,
            rho: 0.3,
            alpha: 0.05,
            n_iterations: 300,
            noise_sigma: 0.0,
            decay_lambda: 0.5,
            init_mu: 0.0,
            init_sigma: 0.1,
            master_seed: 42,
        }
    }
}

impl SimplifiedParams {
    pub fn validate(&self) -> Result<()> {
        if self.creator_positions.is_empty() {
            return Err(Error::invalid("creator_positions", "need at least one creator"));
        }
        if !self.creator_positions.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("creator_positions", "positions must be finite"));
        }
        if self.creator_positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "creator_positions",
                "positions must be strictly increasing",
            ));
        }
        if self.n_users == 0 {
            return Err(Error::invalid("n_users", "must be at least 1"));
        }
        if !(self.rho > 0.05 && self.rho < 0.5) {
            return Err(Error::invalid("rho", "must lie strictly inside (0.05, 0.5)"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", "must be in (0, 1)"));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::invalid("noise_sigma", "must be finite and >= 0"));
        }
        if !self.decay_lambda.is_finite() || self.decay_lambda <= 0.0 {
            return Err(Error::invalid("decay_lambda", "must be finite and > 0"));
        }
        if !self.init_mu.is_finite() {
            return Err(Error::invalid("init_mu", "must be finite"));
        }
        if !self.init_sigma.is_finite() || self.init_sigma < 0.0 {
            return Err(Error::invalid("init_sigma", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Full record of one simplified run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplifiedRun {
    /// `trajectory[t][i]` is user `i` after `t` iterations; index 0 holds
    /// the initial positions, so the length is `n_iterations + 1`.
    pub trajectory: Vec<Vec<f64>>,
    /// Spread potential at each entry of `trajectory`.
    pub spread_history: Vec<f64>,
}

impl SimplifiedRun {
    pub fn initial_positions(&self) -> &[f64] {
        self.trajectory.first().expect("trajectory never empty")
    }

    pub fn final_positions(&self) -> &[f64] {
        self.trajectory.last().expect("trajectory never empty")
    }
}

/// Run the simplified regime.
///
/// Items sit at their creator's fixed position, so the pool state collapses
/// to the list of surviving birth iterations, shared by all creators. The
/// selection of the `k` nearest items per user (ties by ascending item id,
/// which is ascending (birth, creator index)) and the weighted median both
/// operate on that grouped form; results are identical to enumerating items
/// one by one.
pub fn run_simplified(params: &SimplifiedParams) -> Result<SimplifiedRun> {
    params.validate()?;
    let creators = &params.creator_positions;
    let m = creators.len();
    let policy = RngPolicy::new(params.master_seed);

    let mut positions: Vec<f64> = {
        let mut rng = policy.stream(StreamKind::Init, 0, 0);
        let normal = Normal::new(params.init_mu, params.init_sigma).expect("validated parameters");
        (0..params.n_users).map(|_| normal.sample(&mut rng)).collect()
    };

    let mut trajectory = Vec::with_capacity(params.n_iterations as usize + 1);
    let mut spread_history = Vec::with_capacity(params.n_iterations as usize + 1);
    trajectory.push(positions.clone());
    spread_history.push(spread_1d(&positions));

    // Surviving birth iterations, oldest first; every creator carries the
    // same list because each publishes exactly once per iteration.
    let mut births: Vec<u64> = Vec::new();
    let mut gen_weights: Vec<f64> = Vec::new();
    let mut next = vec![0.0; params.n_users];

    for t in 0..params.n_iterations {
        births.push(t);
        births.retain(|&b| content_weight(b, t, params.decay_lambda) >= DEFAULT_PRUNE_THRESHOLD);
        let n_items = births.len() * m;
        let k = ((params.rho * n_items as f64).ceil() as usize).clamp(1, n_items);

        // One weight per surviving generation, oldest first; every creator's
        // item of that generation shares it.
        gen_weights.clear();
        gen_weights.extend(births.iter().map(|&b| content_weight(b, t, params.decay_lambda)));

        for (i, &u) in positions.iter().enumerate() {
            let target = select_target(u, creators, k, &gen_weights);
            let mut x = u + params.alpha * (target - u);
            if params.noise_sigma > 0.0 {
                let mut rng = policy.stream(StreamKind::Noise, t, i as u64);
                let eta: f64 = rng.sample(rand_distr::StandardNormal);
                x += params.noise_sigma * eta;
            }
            next[i] = x;
        }
        std::mem::swap(&mut positions, &mut next);
        trajectory.push(positions.clone());
        spread_history.push(spread_1d(&positions));
    }

    Ok(SimplifiedRun { trajectory, spread_history })
}

/// Weighted median of the `k` items nearest to `u`, exploiting that all
/// items of creator group `j` share the value `creators[j]` and all items of
/// one generation share a weight. Selected items are materialized in
/// ascending (distance, id) order, so the result is bit-identical to sorting
/// the whole pool: ids ascend with (birth, group index), so groups at
/// exactly equal distance interleave one generation at a time and a
/// partially taken group contributes its oldest items first.
fn select_target(u: f64, creators: &[f64], k: usize, gen_weights: &[f64]) -> f64 {
    let per_group = gen_weights.len();
    debug_assert!(k >= 1 && k <= per_group * creators.len());
    let mut order: Vec<(f64, usize)> = creators
        .iter()
        .enumerate()
        .map(|(j, &c)| ((u - c).abs(), j))
        .collect();
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut values: Vec<f64> = Vec::with_capacity(k);
    let mut weights: Vec<f64> = Vec::with_capacity(k);
    let mut remaining = k;
    let mut run_start = 0;
    while remaining > 0 {
        let run_dist = order[run_start].0;
        let mut run_end = run_start + 1;
        while run_end < order.len() && order[run_end].0 == run_dist {
            run_end += 1;
        }
        let take = remaining.min((run_end - run_start) * per_group);
        let mut emitted = 0;
        'generations: for &w in gen_weights {
            for &(_, j) in &order[run_start..run_end] {
                if emitted == take {
                    break 'generations;
                }
                values.push(creators[j]);
                weights.push(w);
                emitted += 1;
            }
        }
        remaining -= take;
        run_start = run_end;
    }
    weighted_median_1d(&values, &weights)
}

fn spread_1d(positions: &[f64]) -> f64 {
    let wrapped: Vec<[f64; 1]> = positions.iter().map(|&x| [x]).collect();
    metrics::pairwise_spread(&wrapped)
}

/// One cluster found by gap splitting.
#[derive(Clone, Debug, PartialEq)]
pub struct GapCluster {
    pub centroid: f64,
    pub size: usize,
    pub min: f64,
    pub max: f64,
}

/// 1-D clustering by gaps: sort the values and split wherever two neighbors
/// are more than `gap` apart.
pub fn gap_clusters(values: &[f64], gap: f64) -> Vec<GapCluster> {
    assert!(gap > 0.0, "gap must be positive");
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > gap {
            let chunk = &sorted[start..i];
            clusters.push(GapCluster {
                centroid: chunk.iter().sum::<f64>() / chunk.len() as f64,
                size: chunk.len(),
                min: chunk[0],
                max: chunk[chunk.len() - 1],
            });
            start = i;
        }
    }
    clusters
}

/// Verdict of the cluster-count bound.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoremCheck {
    pub cluster_count: usize,
    /// Cluster count is at most the number of creators.
    pub count_within_bound: bool,
    /// Every cluster centroid lies within the tolerance of some creator.
    pub centroids_near_creators: bool,
    /// Largest distance from a centroid to its nearest creator.
    pub worst_centroid_distance: f64,
}

impl TheoremCheck {
    pub fn passed(&self) -> bool {
        self.count_within_bound && self.centroids_near_creators
    }
}

/// Check the cluster structure of final positions against the creator set:
/// at most one cluster per creator, each centered near one.
pub fn check_theorem(
    final_positions: &[f64],
    creator_positions: &[f64],
    tolerance: f64,
) -> TheoremCheck {
    assert!(!creator_positions.is_empty(), "need at least one creator");
    let clusters = gap_clusters(final_positions, tolerance);
    let worst = clusters
        .iter()
        .map(|cl| {
            creator_positions
                .iter()
                .map(|c| (cl.centroid - c).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    TheoremCheck {
        cluster_count: clusters.len(),
        count_within_bound: clusters.len() <= creator_positions.len(),
        centroids_near_creators: worst <= tolerance,
        worst_centroid_distance: worst,
    }
}

/// Verdict of the windowed spread trend.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionCheck {
    /// Every window mean is at most the mean of the window before it.
    pub passed: bool,
    /// Start index of the first window whose successor grew.
    pub first_violation: Option<usize>,
}

/// Compare means of adjacent disjoint windows of `window` entries sliding
/// over the spread history; the trend passes when no later window exceeds
/// its predecessor. Histories shorter than two windows pass vacuously.
pub fn check_spread_contraction(spread_history: &[f64], window: usize) -> ContractionCheck {
    assert!(window >= 1, "window must be at least 1");
    if spread_history.len() >= 2 * window {
        for start in 0..=(spread_history.len() - 2 * window) {
            let first: f64 = spread_history[start..start + window].iter().sum();
            let second: f64 = spread_history[start + window..start + 2 * window].iter().sum();
            if second > first {
                return ContractionCheck { passed: false, first_violation: Some(start) };
            }
        }
    }
    ContractionCheck { passed: true, first_violation: None }
}

/// Exact hull confinement: every trajectory entry lies inside the convex
/// hull of the initial positions and the creators. The noiseless update is
/// a convex combination, so this holds without any epsilon.
pub fn check_boundedness(run: &SimplifiedRun, creator_positions: &[f64]) -> bool {
    let bounds = run
        .initial_positions()
        .iter()
        .chain(creator_positions)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    run.trajectory
        .iter()
        .all(|row| row.iter().all(|&x| x >= bounds.0 && x <= bounds.1))
}

/// Everything the theory checks say about one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedVerdict {
    pub seed: u64,
    pub theorem: TheoremCheck,
    pub contraction: ContractionCheck,
    /// Final over initial spread; `None` when the initial spread is zero.
    pub spread_ratio: Option<f64>,
    /// Final spread fell below [`DEFAULT_SPREAD_RATIO`] of the initial.
    pub ratio_ok: bool,
    /// Hull confinement; only evaluated for noiseless runs.
    pub boundedness: Option<bool>,
}

impl SeedVerdict {
    pub fn passed(&self) -> bool {
        self.theorem.passed()
            && self.contraction.passed
            && self.ratio_ok
            && self.boundedness.unwrap_or(true)
    }
}

/// Run the simplified regime over `n_seeds` consecutive master seeds
/// starting at `params.master_seed` and evaluate all checks per seed.
pub fn verify_seeds(params: &SimplifiedParams, n_seeds: usize) -> Result<Vec<SeedVerdict>> {
    assert!(n_seeds >= 1, "need at least one seed");
    let mut verdicts = Vec::with_capacity(n_seeds);
    for i in 0..n_seeds as u64 {
        let seed = params.master_seed.wrapping_add(i);
        let run = run_simplified(&SimplifiedParams { master_seed: seed, ..params.clone() })?;
        verdicts.push(evaluate_run(&run, params, seed));
    }
    Ok(verdicts)
}

fn evaluate_run(run: &SimplifiedRun, params: &SimplifiedParams, seed: u64) -> SeedVerdict {
    let theorem = check_theorem(
        run.final_positions(),
        &params.creator_positions,
        DEFAULT_CLUSTER_TOLERANCE,
    );
    let contraction = check_spread_contraction(&run.spread_history, DEFAULT_CONTRACTION_WINDOW);
    let initial = run.spread_history[0];
    let last = *run.spread_history.last().expect("never empty");
    let (spread_ratio, ratio_ok) = if initial > 0.0 {
        (Some(last / initial), last < DEFAULT_SPREAD_RATIO * initial)
    } else {
        (None, last == 0.0)
    };
    let boundedness = if params.noise_sigma == 0.0 {
        Some(check_boundedness(run, &params.creator_positions))
    } else {
        None
    };
    SeedVerdict { seed, theorem, contraction, spread_ratio, ratio_ok, boundedness }
}
