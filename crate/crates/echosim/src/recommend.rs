//! Recommendation retrieval: k nearest items and their weighted median.

use rand::Rng;

use crate::model::{content_weight, dist_sq, ContentItem, PopulationState, SimulationParams, UserState};

/// The items picked for one user, in ascending (distance, id) order.
#[derive(Clone, Debug, PartialEq)]
pub struct RecommendationSet {
    pub user_id: usize,
    pub item_ids: Vec<u64>,
    pub k: usize,
}

impl RecommendationSet {
    /// The `k` items of `pool` nearest to `user`.
    pub fn nearest(user: &UserState, pool: &[ContentItem], k: usize) -> Self {
        RecommendationSet {
            user_id: user.id,
            item_ids: nearest_k(&user.position, pool, k),
            k,
        }
    }
}

/// Recommendation size for a pool of `n_items`: uniform over
/// `[max(1, ceil(frac_min * n)), max(1, floor(frac_max * n))]`. A degenerate
/// interval collapses to its lower bound, so tiny pools give `k = 1` and up.
pub fn draw_k(n_items: usize, frac_min: f64, frac_max: f64, rng: &mut impl Rng) -> usize {
    assert!(n_items > 0, "cannot draw a recommendation size from an empty pool");
    assert!(
        frac_min > 0.0 && frac_min < frac_max && frac_max < 1.0,
        "need 0 < frac_min < frac_max < 1, got {frac_min} and {frac_max}"
    );
    let n = n_items as f64;
    let lo = ((frac_min * n).ceil() as usize).max(1);
    let hi = ((frac_max * n).floor() as usize).max(1);
    if lo >= hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Indices into `pool` of the `k` items nearest to `pos`, ordered by
/// ascending distance with ties broken by the smaller item id.
pub(crate) fn nearest_k_indices(pos: &[f64], pool: &[ContentItem], k: usize) -> Vec<usize> {
    assert!(
        k >= 1 && k <= pool.len(),
        "k = {k} out of range for a pool of {} items",
        pool.len()
    );
    let mut order: Vec<(f64, u64, usize)> = pool
        .iter()
        .enumerate()
        .map(|(idx, item)| (dist_sq(pos, &item.position), item.id, idx))
        .collect();
    let by_dist_then_id =
        |a: &(f64, u64, usize), b: &(f64, u64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, by_dist_then_id);
        order.truncate(k);
    }
    order.sort_unstable_by(by_dist_then_id);
    order.into_iter().map(|(_, _, idx)| idx).collect()
}

/// Ids of the `k` items of `pool` nearest to `pos`, ordered by ascending
/// distance, ties to the smaller id.
pub fn nearest_k(pos: &[f64], pool: &[ContentItem], k: usize) -> Vec<u64> {
    nearest_k_indices(pos, pool, k)
        .into_iter()
        .map(|idx| pool[idx].id)
        .collect()
}

/// Component-wise lower weighted median: per coordinate, the smallest sample
/// value whose cumulative weight reaches half the total weight.
pub fn weighted_median<P: AsRef<[f64]>>(positions: &[P], weights: &[f64]) -> Vec<f64> {
    assert!(!positions.is_empty(), "weighted median of an empty set");
    assert_eq!(
        positions.len(),
        weights.len(),
        "positions and weights disagree in length"
    );
    let dim = positions[0].as_ref().len();
    let half = 0.5 * weights.iter().sum::<f64>();
    let mut scratch: Vec<(f64, f64)> = Vec::with_capacity(positions.len());
    let mut median = Vec::with_capacity(dim);
    for axis in 0..dim {
        scratch.clear();
        for (p, &w) in positions.iter().zip(weights) {
            let p = p.as_ref();
            debug_assert_eq!(p.len(), dim, "ragged position set");
            scratch.push((p[axis], w));
        }
        median.push(lower_weighted_median(&mut scratch, half));
    }
    median
}

/// Lower weighted median of scalar samples.
pub fn weighted_median_1d(values: &[f64], weights: &[f64]) -> f64 {
    assert!(!values.is_empty(), "weighted median of an empty set");
    assert_eq!(values.len(), weights.len(), "values and weights disagree in length");
    let half = 0.5 * weights.iter().sum::<f64>();
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
    lower_weighted_median(&mut pairs, half)
}

fn lower_weighted_median(pairs: &mut [(f64, f64)], half_total: f64) -> f64 {
    for &(v, w) in pairs.iter() {
        assert!(w > 0.0 && w.is_finite(), "weights must be positive, got {w}");
        assert!(v.is_finite(), "samples must be finite, got {v}");
    }
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for &(v, w) in pairs.iter() {
        acc += w;
        if acc >= half_total {
            return v;
        }
    }
    // Accumulated rounding can leave acc a hair under half_total.
    pairs[pairs.len() - 1].0
}

/// Where the recommender pulls `user` this iteration: the weighted median of
/// the `k` nearest pool items, with `k` drawn from `rng`. `None` when the
/// pool is empty.
pub fn recommend_target(
    user: &UserState,
    state: &PopulationState,
    params: &SimulationParams,
    rng: &mut impl Rng,
) -> Option<Vec<f64>> {
    if state.pool.is_empty() {
        return None;
    }
    let k = draw_k(state.pool.len(), params.frac_min, params.frac_max, rng);
    let picked = nearest_k_indices(&user.position, &state.pool, k);
    let mut positions: Vec<&[f64]> = Vec::with_capacity(picked.len());
    let mut weights: Vec<f64> = Vec::with_capacity(picked.len());
    for idx in picked {
        let item = &state.pool[idx];
        positions.push(item.position.as_slice());
        weights.push(content_weight(
            item.birth_iteration,
            state.iteration,
            params.decay_lambda,
        ));
    }
    Some(weighted_median(&positions, &weights))
}
