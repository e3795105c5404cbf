//! Core domain types: users, content items, parameters, population state.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Content items whose age weight falls below this are dropped from the pool.
/// With the usual decay rate 0.5 that keeps roughly the last 11 iterations.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 0.005;

/// A participant: a point in latent space plus a creator flag.
#[derive(Clone, Debug, PartialEq)]
pub struct UserState {
    pub id: usize,
    pub position: Vec<f64>,
    pub is_creator: bool,
}

/// A piece of content, frozen at the position its creator had when it was
/// published.
#[derive(Clone, Debug, PartialEq)]
pub struct ContentItem {
    pub id: u64,
    pub creator_id: usize,
    pub position: Vec<f64>,
    pub birth_iteration: u64,
}

/// All knobs of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub n_users: usize,
    pub n_iterations: u64,
    /// Latent space dimension.
    pub dim: usize,
    /// Step size toward the recommendation median, in [0, 1].
    pub move_factor: f64,
    /// Per-creator, per-iteration probability of publishing one item.
    pub p_produce: f64,
    /// Std dev of the per-coordinate Gaussian movement noise.
    pub noise_sigma: f64,
    /// Content age decay rate: an item of age `a` weighs `exp(-lambda * a)`.
    pub decay_lambda: f64,
    /// Fraction of users holding the creator role (count rounds up).
    pub creator_fraction: f64,
    /// Per-iteration probability of one creator/non-creator role swap.
    pub role_churn_prob: f64,
    /// Recommendation size `k` is drawn uniformly from
    /// `[ceil(frac_min * pool), floor(frac_max * pool)]`.
    pub frac_min: f64,
    pub frac_max: f64,
    /// Minimum age weight an item needs to stay in the pool.
    pub prune_threshold: f64,
    /// DBSCAN neighborhood radius for the cluster metrics.
    pub dbscan_eps: f64,
    /// DBSCAN core-point threshold (neighborhood includes the point itself).
    pub dbscan_min_pts: usize,
    pub master_seed: u64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            n_users: 1000,
            n_iterations: 500,
            dim: 2,
            move_factor: 0.01,
            p_produce: 0.2,
            noise_sigma: 0.005,
            decay_lambda: 0.5,
            creator_fraction: 0.1,
            role_churn_prob: 0.01,
            frac_min: 0.05,
            frac_max: 0.5,
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
            dbscan_eps: 0.2,
            dbscan_min_pts: 10,
            master_seed: 42,
        }
    }
}

impl SimulationParams {
    /// Number of users holding the creator role, `ceil(creator_fraction * n)`.
    pub fn n_creators(&self) -> usize {
        (self.creator_fraction * self.n_users as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::invalid("n_users", "must be at least 1"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if !(self.move_factor.is_finite() && self.move_factor > 0.0 && self.move_factor < 1.0) {
            return Err(Error::invalid("move_factor", "must be in (0, 1)"));
        }
        check_range("p_produce", self.p_produce, 0.0, 1.0)?;
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::invalid("noise_sigma", "must be finite and >= 0"));
        }
        if !self.decay_lambda.is_finite() || self.decay_lambda <= 0.0 {
            return Err(Error::invalid("decay_lambda", "must be finite and > 0"));
        }
        if !(self.creator_fraction > 0.0 && self.creator_fraction <= 1.0) {
            return Err(Error::invalid("creator_fraction", "must be in (0, 1]"));
        }
        check_range("role_churn_prob", self.role_churn_prob, 0.0, 1.0)?;
        if !(self.frac_min > 0.0 && self.frac_min < self.frac_max && self.frac_max < 1.0) {
            return Err(Error::invalid(
                "frac_min",
                format!(
                    "need 0 < frac_min < frac_max < 1, got {} and {}",
                    self.frac_min, self.frac_max
                ),
            ));
        }
        if !(self.prune_threshold > 0.0 && self.prune_threshold < 1.0) {
            return Err(Error::invalid("prune_threshold", "must be in (0, 1)"));
        }
        if !self.dbscan_eps.is_finite() || self.dbscan_eps <= 0.0 {
            return Err(Error::invalid("dbscan_eps", "must be finite and > 0"));
        }
        if self.dbscan_min_pts == 0 {
            return Err(Error::invalid("dbscan_min_pts", "must be at least 1"));
        }
        Ok(())
    }
}

fn check_range(key: &'static str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("must be in [{lo}, {hi}]")))
    }
}

/// Mutable state of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationState {
    /// Completed iterations. Content of age 0 was born this iteration.
    pub iteration: u64,
    /// Users in id order; `users[i].id == i` always holds.
    pub users: Vec<UserState>,
    /// Live content pool in ascending id order.
    pub pool: Vec<ContentItem>,
    /// Next content id to hand out; ids are never reused.
    pub next_content_id: u64,
}

impl PopulationState {
    pub fn n_creators(&self) -> usize {
        self.users.iter().filter(|u| u.is_creator).count()
    }

    /// Borrowed view of all user positions, in id order.
    pub fn positions(&self) -> Vec<&[f64]> {
        self.users.iter().map(|u| u.position.as_slice()).collect()
    }
}

/// Age weight of a content item at `now`: `exp(-lambda * age)`.
pub fn content_weight(birth_iteration: u64, now_iteration: u64, lambda: f64) -> f64 {
    assert!(
        now_iteration >= birth_iteration,
        "content born at {birth_iteration} queried at earlier iteration {now_iteration}"
    );
    assert!(lambda > 0.0, "decay rate must be positive, got {lambda}");
    let age = (now_iteration - birth_iteration) as f64;
    (-lambda * age).exp()
}

/// Fresh population: user positions i.i.d. standard normal per coordinate,
/// creator roles assigned to a uniform random subset of `n_creators()` users,
/// empty content pool.
pub fn init_population(params: &SimulationParams, rng: &mut impl Rng) -> PopulationState {
    let mut users: Vec<UserState> = (0..params.n_users)
        .map(|id| UserState {
            id,
            position: (0..params.dim).map(|_| rng.sample(StandardNormal)).collect(),
            is_creator: false,
        })
        .collect();
    let n_creators = params.n_creators().min(params.n_users);
    for idx in rand::seq::index::sample(rng, params.n_users, n_creators) {
        users[idx].is_creator = true;
    }
    PopulationState {
        iteration: 0,
        users,
        pool: Vec::new(),
        next_content_id: 0,
    }
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}
