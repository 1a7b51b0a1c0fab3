//! The benchmark side of policy regret.
//!
//! For the MDP-based settings the comparator is the gain-optimal stationary
//! policy (Karp cycle plus completion) simulated from the initial history.
//! When `T * n_states` fits the DP cap the exact finite-horizon optimum is
//! reported alongside it; the two differ by at most `window * r_max`.

use serde::Serialize;

use crate::carcb::{optimal_known_plan, CarcbInstance, ContextTable};
use crate::carmab_st::{build_st_mdp, RoutingInstance};
use crate::env::MabInstance;
use crate::error::{Error, Result};
use crate::harness::config::Limits;
use crate::mdp::{self, build_mdp, DeterministicMdp};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparator {
    /// Mean reward of the comparator at each step.
    #[serde(skip)]
    pub per_step: Vec<f64>,
    pub total: f64,
    /// Optimal gain, for the stationary benchmark.
    pub rho: Option<f64>,
    pub cycle_actions: Vec<usize>,
    /// Exact finite-horizon optimum when it was tractable.
    pub dp_value: Option<f64>,
    /// `dp_value - total`.
    pub gap: Option<f64>,
    /// `window * r_max`.
    pub gap_bound: f64,
}

impl Comparator {
    /// Whether the stationary benchmark is within the certified distance of
    /// the exact optimum (vacuously true when the DP was skipped).
    pub fn gap_certified(&self) -> bool {
        self.gap.is_none_or(|g| g >= -1e-9 && g <= self.gap_bound + 1e-9)
    }
}

/// Stationary benchmark on `mdp` from state `start`.
pub fn comparator_trace(
    mdp: &DeterministicMdp,
    start: usize,
    horizon: usize,
    window: usize,
    max_cells: usize,
) -> Result<Comparator> {
    let plan = mdp::karp_max_mean_cycle(mdp);
    let policy = mdp::policy_from_cycle(mdp, &plan)?;
    let mut per_step = Vec::with_capacity(horizon);
    let mut s = start;
    for _ in 0..horizon {
        let a = policy.action(s);
        per_step.push(mdp.reward(s, a));
        s = mdp.next(s, a);
    }
    let total: f64 = per_step.iter().sum();
    let dp_value = match mdp::finite_horizon_dp(mdp, horizon, start, max_cells) {
        Ok(p) => Some(p.value),
        Err(Error::Capacity { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(Comparator {
        per_step,
        total,
        rho: Some(plan.rho),
        cycle_actions: plan.cycle_actions,
        dp_value,
        gap: dp_value.map(|v| v - total),
        gap_bound: window as f64 * mdp.max_reward(),
    })
}

pub fn mab_comparator(inst: &MabInstance, horizon: usize, limits: &Limits) -> Result<Comparator> {
    let mdp = build_mdp(inst.n_arms(), inst.window(), &inst.reward_table(), limits.max_states)?;
    let start = mdp
        .codec()
        .expect("history MDP has a codec")
        .encode_history(inst.initial_history());
    comparator_trace(&mdp, start, horizon, inst.window(), limits.max_dp_cells)
}

pub fn st_comparator(inst: &RoutingInstance, horizon: usize, limits: &Limits) -> Result<Comparator> {
    let mdp = build_st_mdp(inst, &inst.edge_reward_table(), limits.max_states)?;
    let start = mdp
        .codec()
        .expect("history MDP has a codec")
        .encode_history(inst.initial_history());
    comparator_trace(&mdp, start, horizon, inst.window(), limits.max_dp_cells)
}

/// Hindsight optimum under the true parameter on the realized contexts.
pub fn cb_comparator(
    inst: &CarcbInstance,
    contexts: &ContextTable,
    horizon: usize,
    limits: &Limits,
) -> Result<Comparator> {
    let plan = optimal_known_plan(inst, contexts, horizon, limits.max_states, limits.max_dp_cells)?;
    let r_max = plan.rewards.iter().copied().fold(0.0, f64::max);
    Ok(Comparator {
        total: plan.value,
        rho: None,
        cycle_actions: Vec::new(),
        dp_value: Some(plan.value),
        gap: Some(0.0),
        gap_bound: inst.window() as f64 * r_max,
        per_step: plan.rewards,
    })
}
