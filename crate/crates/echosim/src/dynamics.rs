//! The iteration engine: role churn, content production, pool pruning, and
//! the synchronous median-seeking position update.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::Result;
use crate::metrics::{self, MetricsRecord};
use crate::model::{
    content_weight, init_population, ContentItem, PopulationState, SimulationParams,
};
use crate::recommend;
use crate::rng::{RngPolicy, StreamKind};

/// With probability `prob`, swap the roles of one uniformly chosen creator
/// and one uniformly chosen non-creator. The creator count is invariant.
pub fn churn_roles(state: &mut PopulationState, prob: f64, rng: &mut impl Rng) {
    if !rng.random_bool(prob) {
        return;
    }
    let creators: Vec<usize> = state
        .users
        .iter()
        .filter(|u| u.is_creator)
        .map(|u| u.id)
        .collect();
    let others: Vec<usize> = state
        .users
        .iter()
        .filter(|u| !u.is_creator)
        .map(|u| u.id)
        .collect();
    if creators.is_empty() || others.is_empty() {
        return;
    }
    let demoted = creators[rng.random_range(0..creators.len())];
    let promoted = others[rng.random_range(0..others.len())];
    state.users[demoted].is_creator = false;
    state.users[promoted].is_creator = true;
}

/// Each creator publishes one item at their current position with
/// probability `p_produce`. Creators are visited in ascending user id, so
/// fresh content ids follow creator order.
pub fn produce_content(state: &mut PopulationState, p_produce: f64, rng: &mut impl Rng) {
    let born = state.iteration;
    let mut fresh: Vec<ContentItem> = Vec::new();
    for user in &state.users {
        if user.is_creator && rng.random_bool(p_produce) {
            fresh.push(ContentItem {
                id: state.next_content_id + fresh.len() as u64,
                creator_id: user.id,
                position: user.position.clone(),
                birth_iteration: born,
            });
        }
    }
    state.next_content_id += fresh.len() as u64;
    state.pool.extend(fresh);
}

/// Drop every item whose age weight fell below the prune threshold.
pub fn prune_pool(state: &mut PopulationState, params: &SimulationParams) {
    let now = state.iteration;
    state
        .pool
        .retain(|item| content_weight(item.birth_iteration, now, params.decay_lambda) >= params.prune_threshold);
}

/// One user's next position: a step of size `alpha` toward `target` (no step
/// when the recommender had nothing to offer) plus isotropic Gaussian noise.
pub fn move_user(
    position: &[f64],
    target: Option<&[f64]>,
    alpha: f64,
    sigma: f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    assert!((0.0..=1.0).contains(&alpha), "step size must be in [0, 1], got {alpha}");
    assert!(sigma >= 0.0, "noise level must be nonnegative, got {sigma}");
    let mut next = position.to_vec();
    if let Some(m) = target {
        assert_eq!(m.len(), next.len(), "target dimension mismatch");
        for (x, t) in next.iter_mut().zip(m) {
            *x += alpha * (t - *x);
        }
    }
    if sigma > 0.0 {
        for x in next.iter_mut() {
            let eta: f64 = rng.sample(StandardNormal);
            *x += sigma * eta;
        }
    }
    next
}

/// Advance the population by one iteration and return the metrics of the new
/// state. Order within the iteration: role churn, production, pruning, then
/// all users move simultaneously against the frozen pool and positions.
pub fn step(state: &mut PopulationState, params: &SimulationParams, policy: &RngPolicy) -> MetricsRecord {
    let t = state.iteration;
    churn_roles(
        state,
        params.role_churn_prob,
        &mut policy.stream(StreamKind::Churn, t, 0),
    );
    produce_content(
        state,
        params.p_produce,
        &mut policy.stream(StreamKind::Production, t, 0),
    );
    prune_pool(state, params);

    let snapshot: &PopulationState = state;
    let next_positions: Vec<Vec<f64>> = snapshot
        .users
        .par_iter()
        .map(|user| {
            let uid = user.id as u64;
            let target = recommend::recommend_target(
                user,
                snapshot,
                params,
                &mut policy.stream(StreamKind::KDraw, t, uid),
            );
            move_user(
                &user.position,
                target.as_deref(),
                params.move_factor,
                params.noise_sigma,
                &mut policy.stream(StreamKind::Noise, t, uid),
            )
        })
        .collect();

    for (user, next) in state.users.iter_mut().zip(next_positions) {
        user.position = next;
    }
    state.iteration = t + 1;

    metrics::compute_metrics(
        &state.positions(),
        params.dbscan_eps,
        params.dbscan_min_pts,
        state.iteration,
        state.pool.len(),
    )
}

/// Run a full simulation from a fresh population. Returns the final state
/// and one metrics record per iteration (so `history.len()` equals the
/// iteration count and `history[t]` describes the state after iteration
/// `t + 1`).
pub fn run(params: &SimulationParams) -> Result<(PopulationState, Vec<MetricsRecord>)> {
    params.validate()?;
    let policy = RngPolicy::new(params.master_seed);
    let mut state = init_population(params, &mut policy.stream(StreamKind::Init, 0, 0));
    let mut history = Vec::with_capacity(params.n_iterations as usize);
    for _ in 0..params.n_iterations {
        history.push(step(&mut state, params, &policy));
    }
    Ok((state, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_params() -> SimulationParams {
        SimulationParams {
            n_users: 60,
            n_iterations: 30,
            master_seed: 5,
            ..Default::default()
        }
    }

    fn seeded_state(params: &SimulationParams) -> PopulationState {
        let policy = RngPolicy::new(params.master_seed);
        init_population(params, &mut policy.stream(StreamKind::Init, 0, 0))
    }

    #[test]
    fn churn_preserves_creator_count_and_swaps_at_most_one_pair() {
        let params = small_params();
        let mut state = seeded_state(&params);
        let before: Vec<bool> = state.users.iter().map(|u| u.is_creator).collect();
        let n_creators = state.n_creators();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut swaps = 0;
        for _ in 0..200 {
            churn_roles(&mut state, 0.5, &mut rng);
            assert_eq!(state.n_creators(), n_creators);
            let after: Vec<bool> = state.users.iter().map(|u| u.is_creator).collect();
            let flipped = before.iter().zip(&after).filter(|(b, a)| b != a).count();
            assert!(flipped == 0 || flipped == 2);
            if flipped == 2 {
                swaps += 1;
            }
            state.users.iter_mut().zip(&before).for_each(|(u, &b)| u.is_creator = b);
        }
        assert!(swaps > 50, "expected roughly half of the rounds to swap, got {swaps}");
    }

    #[test]
    fn churn_with_zero_probability_is_identity() {
        let params = small_params();
        let mut state = seeded_state(&params);
        let before = state.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        churn_roles(&mut state, 0.0, &mut rng);
        assert_eq!(state, before);
    }

    #[test]
    fn production_ids_are_sequential_and_follow_creator_order() {
        let params = small_params();
        let mut state = seeded_state(&params);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        produce_content(&mut state, 1.0, &mut rng);
        let creators: Vec<usize> = state
            .users
            .iter()
            .filter(|u| u.is_creator)
            .map(|u| u.id)
            .collect();
        assert_eq!(state.pool.len(), creators.len());
        assert_eq!(state.next_content_id, creators.len() as u64);
        for (i, item) in state.pool.iter().enumerate() {
            assert_eq!(item.id, i as u64);
            assert_eq!(item.creator_id, creators[i]);
            assert_eq!(item.position, state.users[item.creator_id].position);
            assert_eq!(item.birth_iteration, 0);
        }
    }

    #[test]
    fn production_probability_zero_publishes_nothing() {
        let params = small_params();
        let mut state = seeded_state(&params);
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        produce_content(&mut state, 0.0, &mut rng);
        assert!(state.pool.is_empty());
        assert_eq!(state.next_content_id, 0);
    }

    #[test]
    fn prune_drops_exactly_the_underweight_items() {
        let params = SimulationParams::default();
        let mut state = seeded_state(&params);
        // decay 0.5, threshold 0.005: age 10 weighs ~0.0067 (stays), age 11
        // weighs ~0.0041 (goes).
        state.iteration = 20;
        for (id, age) in [(0u64, 0u64), (1, 5), (2, 10), (3, 11), (4, 15)] {
            state.pool.push(ContentItem {
                id,
                creator_id: 0,
                position: vec![0.0; params.dim],
                birth_iteration: 20 - age,
            });
        }
        prune_pool(&mut state, &params);
        let kept: Vec<u64> = state.pool.iter().map(|i| i.id).collect();
        assert_eq!(kept, vec![0, 1, 2]);
    }

    #[test]
    fn move_user_without_target_only_jitters() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let next = move_user(&[1.0, -2.0], None, 0.5, 0.0, &mut rng);
        assert_eq!(next, vec![1.0, -2.0]);
    }

    #[test]
    fn move_user_steps_linearly_toward_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let next = move_user(&[0.0, 4.0], Some(&[2.0, 0.0]), 0.25, 0.0, &mut rng);
        assert_eq!(next, vec![0.5, 3.0]);
        let full = move_user(&[0.0, 4.0], Some(&[2.0, 0.0]), 1.0, 0.0, &mut rng);
        assert_eq!(full, vec![2.0, 0.0]);
    }

    #[test]
    fn noise_scale_matches_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sigma = 0.05;
        let n = 4000;
        let mut sq = 0.0;
        for _ in 0..n {
            let next = move_user(&[0.0], None, 0.0, sigma, &mut rng);
            sq += next[0] * next[0];
        }
        let sd = (sq / n as f64).sqrt();
        assert!((sd - sigma).abs() < 0.005, "sd {sd}");
    }

    #[test]
    fn step_freezes_the_snapshot_for_all_users() {
        // With alpha = 1 and no noise every user lands exactly on a weighted
        // median of content positions captured before anyone moved. With a
        // single content item they all land on that item.
        let params = SimulationParams {
            n_users: 12,
            dim: 2,
            move_factor: 1.0,
            noise_sigma: 0.0,
            p_produce: 1.0,
            creator_fraction: 0.05, // one creator
            role_churn_prob: 0.0,
            ..Default::default()
        };
        let policy = RngPolicy::new(3);
        let mut state = init_population(&params, &mut policy.stream(StreamKind::Init, 0, 0));
        let creator_id = state.users.iter().find(|u| u.is_creator).unwrap().id;
        let creator_pos = state.users[creator_id].position.clone();
        step(&mut state, &params, &policy);
        for user in &state.users {
            for (x, c) in user.position.iter().zip(&creator_pos) {
                assert!((x - c).abs() < 1e-12, "user {} strayed", user.id);
            }
        }
    }

    #[test]
    fn step_advances_iteration_and_reports_pool_size() {
        let params = small_params();
        let mut state = seeded_state(&params);
        let policy = RngPolicy::new(params.master_seed);
        let rec = step(&mut state, &params, &policy);
        assert_eq!(state.iteration, 1);
        assert_eq!(rec.iteration, 1);
        assert_eq!(rec.pool_size, state.pool.len());
    }

    #[test]
    fn run_is_reproducible() {
        let params = small_params();
        let (state_a, history_a) = run(&params).unwrap();
        let (state_b, history_b) = run(&params).unwrap();
        assert_eq!(state_a, state_b);
        assert_eq!(history_a, history_b);
    }

    #[test]
    fn run_depends_on_the_seed() {
        let params = small_params();
        let other = SimulationParams { master_seed: 6, ..params.clone() };
        let (state_a, _) = run(&params).unwrap();
        let (state_b, _) = run(&other).unwrap();
        assert_ne!(state_a.users[0].position, state_b.users[0].position);
    }

    #[test]
    fn run_is_identical_across_thread_counts() {
        let params = SimulationParams {
            n_users: 80,
            n_iterations: 15,
            ..Default::default()
        };
        let mut outcomes = Vec::new();
        for threads in [1usize, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            outcomes.push(pool.install(|| run(&params).unwrap()));
        }
        assert_eq!(outcomes[0], outcomes[1]);
    }

    #[test]
    fn run_rejects_invalid_params() {
        let params = SimulationParams { move_factor: 2.0, ..Default::default() };
        assert!(run(&params).is_err());
    }

    #[test]
    fn zero_iterations_returns_the_initial_population() {
        let params = SimulationParams { n_iterations: 0, ..small_params() };
        let (state, history) = run(&params).unwrap();
        assert!(history.is_empty());
        assert_eq!(state.iteration, 0);
        assert!(state.pool.is_empty());
    }

    #[test]
    fn pool_size_stabilizes_under_decay() {
        // Age pruning caps the pool at creators x surviving generations.
        let params = SimulationParams {
            n_users: 100,
            n_iterations: 40,
            p_produce: 1.0,
            role_churn_prob: 0.0,
            ..Default::default()
        };
        let (state, history) = run(&params).unwrap();
        let cap = state.n_creators() * 11;
        for rec in &history[12..] {
            assert_eq!(rec.pool_size, cap);
        }
    }
}
