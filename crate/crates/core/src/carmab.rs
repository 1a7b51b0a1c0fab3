//! Episodic optimistic learning for congested multi-armed bandits.
//!
//! Rewards are estimated per `(arm, count)` pair from completed episodes.
//! Each episode plans on the upper edges of the confidence boxes with the
//! maximum-mean-cycle planner and runs until some pair's in-episode plays
//! reach its count from earlier episodes.

use crate::env::{MabInstance, SimRng};
use crate::error::{Error, Result};
use crate::mdp::{self, CyclePlan, DeterministicMdp, Policy, StateCodec};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct CarmabConfig {
    /// Confidence level, in `(0, 1)`.
    pub delta: f64,
    /// Multiplier on the confidence width.
    pub width_constant: f64,
    pub horizon: usize,
    /// After this many episodes the last policy runs to the horizon.
    pub episode_cap: Option<usize>,
    pub max_states: usize,
}

impl Default for CarmabConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            width_constant: 10.0,
            horizon: 10_000,
            episode_cap: None,
            max_states: mdp::DEFAULT_MAX_STATES,
        }
    }
}

impl CarmabConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain(format!("delta {} outside (0, 1)", self.delta)));
        }
        if !(self.width_constant > 0.0 && self.width_constant.is_finite()) {
            return Err(Error::domain("width constant must be positive"));
        }
        if self.horizon == 0 {
            return Err(Error::domain("horizon must be at least 1"));
        }
        if self.episode_cap == Some(0) {
            return Err(Error::domain("episode cap must be at least 1"));
        }
        Ok(())
    }
}

/// `C * sqrt(log(units * window * t_e / delta) / max(1, n))`, with the
/// logarithm clamped at zero.
///
/// `units` is the number of arms, or `L * |E|` for path problems.
pub fn confidence_width(
    n: u64,
    t_e: usize,
    units: usize,
    window: usize,
    delta: f64,
    width_constant: f64,
) -> f64 {
    let log_term = ((units * window) as f64 * t_e as f64 / delta).ln().max(0.0);
    width_constant * (log_term / n.max(1) as f64).sqrt()
}

/// Per-pair play counts and reward sums, split into the running episode
/// and everything before it.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTables {
    n_units: usize,
    n_counts: usize,
    n_ep: Vec<u64>,
    n_prior: Vec<u64>,
    sum_ep: Vec<f64>,
    sum_prior: Vec<f64>,
}

impl CountTables {
    /// Tables for `n_units` units with counts `0..=window`.
    pub fn new(n_units: usize, window: usize) -> Self {
        let len = n_units * (window + 1);
        Self {
            n_units,
            n_counts: window + 1,
            n_ep: vec![0; len],
            n_prior: vec![0; len],
            sum_ep: vec![0.0; len],
            sum_prior: vec![0.0; len],
        }
    }

    #[inline]
    fn idx(&self, unit: usize, j: usize) -> usize {
        debug_assert!(unit < self.n_units && j < self.n_counts);
        unit * self.n_counts + j
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn n_counts(&self) -> usize {
        self.n_counts
    }

    pub fn in_episode(&self, unit: usize, j: usize) -> u64 {
        self.n_ep[self.idx(unit, j)]
    }

    pub fn prior(&self, unit: usize, j: usize) -> u64 {
        self.n_prior[self.idx(unit, j)]
    }

    /// Count one observation of `(unit, j)`.
    pub fn update(&mut self, unit: usize, j: usize, observed: f64) {
        let i = self.idx(unit, j);
        self.n_ep[i] += 1;
        self.sum_ep[i] += observed;
    }

    /// Whether `(unit, j)` reached its doubling threshold this episode.
    pub fn doubled(&self, unit: usize, j: usize) -> bool {
        let i = self.idx(unit, j);
        self.n_ep[i] >= self.n_prior[i].max(1)
    }

    /// Fold the running episode into the prior tables.
    pub fn rollover(&mut self) {
        for i in 0..self.n_ep.len() {
            self.n_prior[i] += self.n_ep[i];
            self.sum_prior[i] += self.sum_ep[i];
            self.n_ep[i] = 0;
            self.sum_ep[i] = 0.0;
        }
    }

    /// Total observations, prior and running.
    pub fn total(&self) -> u64 {
        self.n_prior.iter().chain(&self.n_ep).sum()
    }

    /// Empirical means from prior data and their widths at episode start `t_e`.
    pub fn estimate(
        &self,
        t_e: usize,
        units_for_log: usize,
        window: usize,
        delta: f64,
        width_constant: f64,
    ) -> RewardEstimate {
        let rows = |f: &dyn Fn(usize) -> f64| -> Vec<Vec<f64>> {
            (0..self.n_units)
                .map(|u| (0..self.n_counts).map(|j| f(self.idx(u, j))).collect())
                .collect()
        };
        RewardEstimate {
            r_hat: rows(&|i| self.sum_prior[i] / self.n_prior[i].max(1) as f64),
            width: rows(&|i| {
                confidence_width(self.n_prior[i], t_e, units_for_log, window, delta, width_constant)
            }),
        }
    }
}

/// Fresh observation of one pair.
pub fn update_counts(tables: &mut CountTables, unit: usize, j: usize, observed: f64) {
    tables.update(unit, j, observed);
}

/// Confidence boxes `r_hat +- width` per `(unit, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardEstimate {
    pub r_hat: Vec<Vec<f64>>,
    pub width: Vec<Vec<f64>>,
}

impl RewardEstimate {
    /// Whether every entry of `truth` lies inside its box.
    pub fn covers(&self, truth: &[Vec<f64>]) -> bool {
        truth.iter().enumerate().all(|(u, row)| {
            row.iter()
                .enumerate()
                .all(|(j, &r)| (r - self.r_hat[u][j]).abs() <= self.width[u][j])
        })
    }
}

/// Upper edge of each box, clipped to `[0, 1]`.
///
/// Rewards enter a cycle's mean linearly and independently per pair, so the
/// entrywise upper edge maximizes the gain jointly over the box.
pub fn optimistic_rewards(est: &RewardEstimate) -> Vec<Vec<f64>> {
    est.r_hat
        .iter()
        .zip(&est.width)
        .map(|(r, w)| r.iter().zip(w).map(|(r, w)| (r + w).clamp(0.0, 1.0)).collect())
        .collect()
}

/// Planned policy with the cycle it settles into.
#[derive(Debug, Clone)]
pub struct EpisodePlan {
    pub policy: Policy,
    pub cycle: CyclePlan,
}

/// Optimal stationary policy for the reward table `r_tilde[a][j]`.
pub fn plan_episode(
    r_tilde: &[Vec<f64>],
    n_arms: usize,
    window: usize,
    max_states: usize,
) -> Result<EpisodePlan> {
    let mdp = mdp::build_mdp(n_arms, window, r_tilde, max_states)?;
    plan_on(&mdp)
}

pub(crate) fn plan_on(mdp: &DeterministicMdp) -> Result<EpisodePlan> {
    let cycle = mdp::karp_max_mean_cycle(mdp);
    let policy = mdp::policy_from_cycle(mdp, &cycle)?;
    Ok(EpisodePlan { policy, cycle })
}

/// What happened at the start of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based step at which the episode started.
    pub start: usize,
    /// Gain of the optimistic plan.
    pub planned_gain: f64,
    /// Whether every true pair reward lay in its confidence box.
    pub covered: bool,
}

#[derive(Debug, Clone)]
pub struct CarmabRun {
    pub trajectory: Trajectory,
    pub episodes: Vec<EpisodeRecord>,
    pub counts: CountTables,
    /// Policy in force when the run ended.
    pub final_policy: Policy,
}

pub fn run_carmab(inst: &MabInstance, cfg: &CarmabConfig, rng: &mut SimRng) -> Result<CarmabRun> {
    cfg.validate()?;
    let k = inst.n_arms();
    let window = inst.window();
    let codec = StateCodec::new(k, window, cfg.max_states)?;
    let truth = inst.reward_table();

    let mut counts = CountTables::new(k, window);
    let mut hist = inst.initial_history().clone();
    let mut state = codec.encode_history(&hist);
    let mut trajectory = Trajectory::with_capacity(cfg.horizon);
    let mut episodes = Vec::new();
    let mut policy = Policy::constant(codec.n_states(), 0);
    let mut t = 1;

    while t <= cfg.horizon {
        counts.rollover();
        let est = counts.estimate(t, k, window, cfg.delta, cfg.width_constant);
        let plan = plan_episode(&optimistic_rewards(&est), k, window, cfg.max_states)?;
        episodes.push(EpisodeRecord {
            start: t,
            planned_gain: plan.cycle.rho,
            covered: est.covers(&truth),
        });
        policy = plan.policy;
        let last_episode = cfg.episode_cap.is_some_and(|cap| episodes.len() >= cap);
        let episode = episodes.len() as u32;

        while t <= cfg.horizon {
            let a = policy.action(state);
            let j = hist.count(a)?;
            let mean = inst.reward_at_count(a, j);
            let observed = mean + inst.noise_sigma() * rng.standard_normal();
            trajectory.push(a, observed, mean, episode);
            counts.update(a, j, observed);
            hist.push(a)?;
            state = codec.shift(state, a);
            t += 1;
            if !last_episode && counts.doubled(a, j) {
                break;
            }
        }
    }

    Ok(CarmabRun {
        trajectory,
        episodes,
        counts,
        final_policy: policy,
    })
}

/// Upper bound on the number of episodes: every pair can double at most
/// `1 + log2 T` times.
pub fn episode_bound(pairs: usize, horizon: usize) -> f64 {
    pairs as f64 * (1.0 + (horizon as f64).log2())
}
