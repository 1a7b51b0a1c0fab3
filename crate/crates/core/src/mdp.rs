//! Deterministic history MDPs and exact planners on them.
//!
//! A state is the window of the last `window` actions. Playing `a` in state
//! `s` moves to the window shifted left with `a` appended, so every policy
//! eventually loops and the best long-run average reward is the maximum mean
//! cycle of the transition graph.
//!
//! States are encoded as base-`K` integers with the oldest action as the most
//! significant digit: `[a_1, ..., a_D] -> sum_i a_i K^(D-i)`.

use std::collections::VecDeque;

use crate::env::History;
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_MAX_STATES: usize = 1_000_000;
/// Limit on `horizon * n_states` cells for finite-horizon tables.
pub const DEFAULT_MAX_DP_CELLS: usize = 50_000_000;
/// Absolute tolerance for comparing cycle means.
pub const CYCLE_TOL: f64 = 1e-12;

/// Bijection between windows over `n_symbols` symbols and state indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateCodec {
    n_symbols: usize,
    window: usize,
    n_states: usize,
    /// `n_symbols^(window - 1)`
    high: usize,
}

impl StateCodec {
    pub fn new(n_symbols: usize, window: usize, max_states: usize) -> Result<Self> {
        if n_symbols == 0 || window == 0 {
            return Err(Error::domain("codec needs at least one symbol and window >= 1"));
        }
        let required = (n_symbols as u128).checked_pow(window as u32).unwrap_or(u128::MAX);
        if required > max_states as u128 {
            return Err(Error::Capacity {
                what: "history states",
                required,
                cap: max_states as u128,
            });
        }
        let n_states = required as usize;
        Ok(Self {
            n_symbols,
            window,
            n_states,
            high: n_states / n_symbols,
        })
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn encode(&self, window: &[usize]) -> usize {
        debug_assert_eq!(window.len(), self.window);
        window.iter().fold(0, |acc, &a| acc * self.n_symbols + a)
    }

    pub fn encode_history(&self, h: &History) -> usize {
        self.encode(h.window())
    }

    /// Window for state `s`, oldest first.
    pub fn decode(&self, s: usize) -> Vec<usize> {
        let mut out = vec![0; self.window];
        self.decode_into(s, &mut out);
        out
    }

    pub fn decode_into(&self, mut s: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = s % self.n_symbols;
            s /= self.n_symbols;
        }
    }

    pub fn decode_history(&self, s: usize) -> History {
        History::new(self.decode(s), self.n_symbols).expect("state index within codec range")
    }

    /// Index of the window after appending `a`.
    #[inline]
    pub fn shift(&self, s: usize, a: usize) -> usize {
        (s % self.high) * self.n_symbols + a
    }
}

/// A finite MDP with deterministic transitions, stored as flat
/// `n_states x n_actions` tables.
#[derive(Debug, Clone)]
pub struct DeterministicMdp {
    n_states: usize,
    n_actions: usize,
    next: Vec<usize>,
    reward: Vec<f64>,
    codec: Option<StateCodec>,
}

impl DeterministicMdp {
    /// MDP from raw row-major tables. Used for hand-built graphs and fixtures.
    pub fn from_tables(n_actions: usize, next: Vec<usize>, reward: Vec<f64>) -> Result<Self> {
        if n_actions == 0 || next.is_empty() || next.len() % n_actions != 0 {
            return Err(Error::domain("transition table must be n_states x n_actions"));
        }
        if reward.len() != next.len() {
            return Err(Error::domain("reward and transition tables differ in size"));
        }
        let n_states = next.len() / n_actions;
        if let Some(bad) = next.iter().find(|&&s| s >= n_states) {
            return Err(Error::domain(format!("transition to unknown state {bad}")));
        }
        Ok(Self {
            n_states,
            n_actions,
            next,
            reward,
            codec: None,
        })
    }

    /// History MDP over `codec` with `reward(window, a)` per state/action.
    pub fn from_codec<F>(codec: StateCodec, reward: F) -> Self
    where
        F: Fn(&[usize], usize) -> f64,
    {
        let n = codec.n_states();
        let k = codec.n_symbols();
        let mut next = Vec::with_capacity(n * k);
        let mut rewards = Vec::with_capacity(n * k);
        let mut window = vec![0; codec.window()];
        for s in 0..n {
            codec.decode_into(s, &mut window);
            for a in 0..k {
                next.push(codec.shift(s, a));
                rewards.push(reward(&window, a));
            }
        }
        Self {
            n_states: n,
            n_actions: k,
            next,
            reward: rewards,
            codec: Some(codec),
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn codec(&self) -> Option<&StateCodec> {
        self.codec.as_ref()
    }

    #[inline]
    pub fn next(&self, s: usize, a: usize) -> usize {
        self.next[s * self.n_actions + a]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn max_reward(&self) -> f64 {
        self.reward.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Overwrite one transition. Only meant for building negative controls.
    pub fn set_next(&mut self, s: usize, a: usize, to: usize) {
        assert!(to < self.n_states);
        self.next[s * self.n_actions + a] = to;
    }

    /// Incoming `(from_state, action)` pairs for every state, sorted.
    pub fn predecessors(&self) -> Vec<Vec<(usize, usize)>> {
        let mut preds = vec![Vec::new(); self.n_states];
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                preds[self.next(s, a)].push((s, a));
            }
        }
        preds
    }
}

/// History MDP for a congested bandit with `reward_table[a][j]` the mean
/// reward of arm `a` when it already appears `j` times in the window.
pub fn build_mdp(
    n_arms: usize,
    window: usize,
    reward_table: &[Vec<f64>],
    max_states: usize,
) -> Result<DeterministicMdp> {
    if reward_table.len() != n_arms || reward_table.iter().any(|row| row.len() != window + 1) {
        return Err(Error::domain(format!(
            "reward table must be {n_arms} x {}",
            window + 1
        )));
    }
    let codec = StateCodec::new(n_arms, window, max_states)?;
    Ok(DeterministicMdp::from_codec(codec, |w, a| {
        let j = w.iter().filter(|&&x| x == a).count();
        reward_table[a][j]
    }))
}

/// Best cycle found by the planner.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclePlan {
    /// Mean reward along the cycle.
    pub rho: f64,
    pub cycle_states: Vec<usize>,
    pub cycle_actions: Vec<usize>,
}

impl CyclePlan {
    pub fn len(&self) -> usize {
        self.cycle_states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle_states.is_empty()
    }

    /// Whether the cycle closes under `mdp` and `rho` matches its mean.
    pub fn is_valid_for(&self, mdp: &DeterministicMdp) -> bool {
        if self.is_empty() || self.cycle_states.len() != self.cycle_actions.len() {
            return false;
        }
        let n = self.len();
        let mut total = 0.0;
        for i in 0..n {
            let (s, a) = (self.cycle_states[i], self.cycle_actions[i]);
            if s >= mdp.n_states() || a >= mdp.n_actions() {
                return false;
            }
            if mdp.next(s, a) != self.cycle_states[(i + 1) % n] {
                return false;
            }
            total += mdp.reward(s, a);
        }
        (total / n as f64 - self.rho).abs() <= CYCLE_TOL
    }
}

/// Karp's tables `F_k(v)`: the best total reward of a `k`-edge walk ending
/// at `v`, from any start (`F_0 = 0` everywhere).
#[derive(Debug, Clone)]
pub struct KarpTable {
    n: usize,
    values: Vec<f64>,
    /// Flat edge index `u * n_actions + a` of the last edge on the best walk.
    back: Vec<usize>,
}

impl KarpTable {
    pub fn build(mdp: &DeterministicMdp) -> Self {
        let n = mdp.n_states();
        let preds = mdp.predecessors();
        let mut values = vec![f64::NEG_INFINITY; (n + 1) * n];
        let mut back = vec![usize::MAX; (n + 1) * n];
        values[..n].fill(0.0);
        let mut row = vec![(f64::NEG_INFINITY, usize::MAX); n];
        for k in 1..=n {
            let prev = &values[(k - 1) * n..k * n];
            par::fill_indexed(&mut row, |v| {
                let mut best = (f64::NEG_INFINITY, usize::MAX);
                for &(u, a) in &preds[v] {
                    let cand = prev[u] + mdp.reward(u, a);
                    if cand > best.0 {
                        best = (cand, u * mdp.n_actions() + a);
                    }
                }
                best
            });
            for (v, &(val, edge)) in row.iter().enumerate() {
                values[k * n + v] = val;
                back[k * n + v] = edge;
            }
        }
        Self { n, values, back }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, k: usize, v: usize) -> f64 {
        self.values[k * self.n + v]
    }

    /// `min_k (F_n(v) - F_k(v)) / (n - k)`, or `None` when no `n`-walk ends at `v`.
    pub fn vertex_ratio(&self, v: usize) -> Option<f64> {
        let fn_v = self.value(self.n, v);
        if fn_v == f64::NEG_INFINITY {
            return None;
        }
        let n = self.n;
        (0..n)
            .filter(|&k| self.value(k, v) > f64::NEG_INFINITY)
            .map(|k| (fn_v - self.value(k, v)) / (n - k) as f64)
            .reduce(f64::min)
    }
}

/// Maximum mean cycle by Karp's recurrence, with the first repeated state
/// on the critical walk taken as the cycle.
pub fn karp_max_mean_cycle(mdp: &DeterministicMdp) -> CyclePlan {
    let table = KarpTable::build(mdp);
    let n = table.n();
    let mut best: Option<(f64, usize)> = None;
    for v in 0..n {
        if let Some(r) = table.vertex_ratio(v) {
            if best.is_none_or(|(b, _)| r > b + CYCLE_TOL) {
                best = Some((r, v));
            }
        }
    }
    let (_, target) = best.expect("every state of a complete MDP has outgoing edges");

    // Walk back n edges from the argmax vertex, then scan forward.
    let na = mdp.n_actions();
    let mut walk_states = vec![target; n + 1];
    let mut walk_actions = vec![0; n];
    let mut v = target;
    for k in (1..=n).rev() {
        let edge = table.back[k * n + v];
        let (u, a) = (edge / na, edge % na);
        walk_states[k - 1] = u;
        walk_actions[k - 1] = a;
        v = u;
    }
    let mut first_seen = vec![usize::MAX; n];
    let (start, end) = walk_states
        .iter()
        .enumerate()
        .find_map(|(i, &s)| {
            let prev = first_seen[s];
            if prev != usize::MAX {
                Some((prev, i))
            } else {
                first_seen[s] = i;
                None
            }
        })
        .expect("a walk of n edges over n states revisits a state");
    let mut states = walk_states[start..end].to_vec();
    let mut actions = walk_actions[start..end].to_vec();

    // canonical rotation: lowest state first
    let pivot = (0..states.len()).min_by_key(|&i| states[i]).unwrap_or(0);
    states.rotate_left(pivot);
    actions.rotate_left(pivot);
    let rho = states
        .iter()
        .zip(&actions)
        .map(|(&s, &a)| mdp.reward(s, a))
        .sum::<f64>()
        / states.len() as f64;
    CyclePlan {
        rho,
        cycle_states: states,
        cycle_actions: actions,
    }
}

/// A stationary policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    action_of: Vec<usize>,
}

impl Policy {
    pub fn new(action_of: Vec<usize>) -> Self {
        Self { action_of }
    }

    /// Same action everywhere.
    pub fn constant(n_states: usize, action: usize) -> Self {
        Self {
            action_of: vec![action; n_states],
        }
    }

    #[inline]
    pub fn action(&self, s: usize) -> usize {
        self.action_of[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.action_of
    }

    pub fn n_states(&self) -> usize {
        self.action_of.len()
    }
}

/// Follow the cycle on its states and take a shortest route into it from
/// everywhere else (reverse BFS over incoming transitions).
pub fn policy_from_cycle(mdp: &DeterministicMdp, plan: &CyclePlan) -> Result<Policy> {
    const UNSET: usize = usize::MAX;
    let n = mdp.n_states();
    let mut action_of = vec![UNSET; n];
    let mut queue = VecDeque::with_capacity(n);
    for (&s, &a) in plan.cycle_states.iter().zip(&plan.cycle_actions) {
        if s >= n {
            return Err(Error::domain(format!("cycle state {s} outside the MDP")));
        }
        action_of[s] = a;
        queue.push_back(s);
    }
    let preds = mdp.predecessors();
    while let Some(v) = queue.pop_front() {
        for &(u, a) in &preds[v] {
            if action_of[u] == UNSET {
                action_of[u] = a;
                queue.push_back(u);
            }
        }
    }
    if let Some(s) = action_of.iter().position(|&a| a == UNSET) {
        return Err(Error::domain(format!(
            "state {s} cannot reach the planned cycle; the MDP is not strongly connected"
        )));
    }
    Ok(Policy { action_of })
}

/// Long-run average reward of `policy` from `start`: the mean reward of the
/// cycle the trajectory falls into.
pub fn average_reward_of_policy(mdp: &DeterministicMdp, policy: &Policy, start: usize) -> f64 {
    let n = mdp.n_states();
    let mut seen_at = vec![usize::MAX; n];
    let mut rewards = Vec::new();
    let mut s = start;
    loop {
        if seen_at[s] != usize::MAX {
            let cycle = &rewards[seen_at[s]..];
            return cycle.iter().sum::<f64>() / cycle.len() as f64;
        }
        seen_at[s] = rewards.len();
        let a = policy.action(s);
        rewards.push(mdp.reward(s, a));
        s = mdp.next(s, a);
    }
}

/// Optimal finite-horizon plan.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonPlan {
    pub value: f64,
    pub actions: Vec<usize>,
    /// Reward collected at each step along `actions`.
    pub rewards: Vec<f64>,
}

/// Backward induction on a shift-structured horizon problem.
///
/// `reward(t, s, a)` may depend on the step. Ties go to the lowest action.
pub(crate) fn backward_induction<N, R>(
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    start: usize,
    max_cells: usize,
    next: N,
    reward: R,
) -> Result<HorizonPlan>
where
    N: Fn(usize, usize) -> usize + Sync,
    R: Fn(usize, usize, usize) -> f64 + Sync,
{
    if horizon == 0 {
        return Err(Error::domain("horizon must be at least 1"));
    }
    let cells = horizon as u128 * n_states as u128;
    if cells > max_cells as u128 {
        return Err(Error::Capacity {
            what: "finite-horizon table cells",
            required: cells,
            cap: max_cells as u128,
        });
    }
    if n_actions > u16::MAX as usize {
        return Err(Error::domain("too many actions for the horizon planner"));
    }
    let mut choice = vec![0u16; horizon * n_states];
    let mut value_next = vec![0.0f64; n_states];
    let mut value_now = vec![(0.0f64, 0u16); n_states];
    for t in (0..horizon).rev() {
        let vn = &value_next;
        par::fill_indexed(&mut value_now, |s| {
            let mut best = (f64::NEG_INFINITY, 0u16);
            for a in 0..n_actions {
                let v = reward(t, s, a) + vn[next(s, a)];
                if v > best.0 {
                    best = (v, a as u16);
                }
            }
            best
        });
        for (s, &(v, a)) in value_now.iter().enumerate() {
            value_next[s] = v;
            choice[t * n_states + s] = a;
        }
    }
    let value = value_next[start];
    let mut actions = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    let mut s = start;
    for t in 0..horizon {
        let a = choice[t * n_states + s] as usize;
        actions.push(a);
        rewards.push(reward(t, s, a));
        s = next(s, a);
    }
    Ok(HorizonPlan {
        value,
        actions,
        rewards,
    })
}

/// Best total reward over all `horizon`-step action sequences from `start`.
pub fn finite_horizon_dp(
    mdp: &DeterministicMdp,
    horizon: usize,
    start: usize,
    max_cells: usize,
) -> Result<HorizonPlan> {
    if start >= mdp.n_states() {
        return Err(Error::domain(format!("start state {start} outside the MDP")));
    }
    backward_induction(
        mdp.n_states(),
        mdp.n_actions(),
        horizon,
        start,
        max_cells,
        |s, a| mdp.next(s, a),
        |_, s, a| mdp.reward(s, a),
    )
}

/// Diameter of the transition graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diameter {
    Finite(usize),
    /// Some state cannot reach another one.
    Infinite,
}

impl Diameter {
    pub fn finite(self) -> Option<usize> {
        match self {
            Diameter::Finite(d) => Some(d),
            Diameter::Infinite => None,
        }
    }
}

/// Largest shortest-path distance over ordered pairs of distinct states,
/// by BFS from every state.
pub fn diameter(mdp: &DeterministicMdp) -> Diameter {
    let n = mdp.n_states();
    let eccentricities = par::map_indexed(n, par::Execution::Parallel, |source| {
        let mut dist = vec![usize::MAX; n];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        let mut reached = 1;
        let mut far = 0;
        while let Some(u) = queue.pop_front() {
            for a in 0..mdp.n_actions() {
                let v = mdp.next(u, a);
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    far = far.max(dist[v]);
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        (reached == n).then_some(far)
    });
    eccentricities
        .into_iter()
        .try_fold(0, |acc, e| e.map(|e| acc.max(e)))
        .map_or(Diameter::Infinite, Diameter::Finite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CongestionTable, MabInstance};

    /// mu = [1.0, 0.6], c = [1, 0.5], window 1.
    fn two_arm() -> DeterministicMdp {
        let c = CongestionTable::broadcast(2, vec![1.0, 0.5]).unwrap();
        let inst = MabInstance::new(vec![1.0, 0.6], 1, c).unwrap();
        build_mdp(2, 1, &inst.reward_table(), DEFAULT_MAX_STATES).unwrap()
    }

    #[test]
    fn codec_round_trip_and_shift() {
        let codec = StateCodec::new(3, 2, 100).unwrap();
        assert_eq!(codec.n_states(), 9);
        assert_eq!(codec.encode(&[2, 1]), 7);
        assert_eq!(codec.decode(7), vec![2, 1]);
        let h = codec.decode_history(7);
        assert_eq!(codec.encode_history(&h.advance(0).unwrap()), codec.shift(7, 0));
        assert!(matches!(StateCodec::new(10, 7, 1_000_000), Err(Error::Capacity { .. })));
    }

    #[test]
    fn two_arm_tables() {
        let mdp = two_arm();
        assert_eq!(mdp.n_states(), 2);
        assert_eq!(mdp.next(0, 1), 1);
        assert_eq!(mdp.next(1, 1), 1);
        assert_eq!(mdp.reward(0, 0), 0.5);
        assert_eq!(mdp.reward(0, 1), 0.6);
        assert_eq!(mdp.reward(1, 0), 1.0);
        assert!((mdp.reward(1, 1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn transitions_follow_history_shift() {
        let table = vec![vec![1.0, 0.5, 0.25]; 3];
        let mdp = build_mdp(3, 2, &table, DEFAULT_MAX_STATES).unwrap();
        assert_eq!(mdp.n_states(), 9);
        let codec = *mdp.codec().unwrap();
        for s in 0..9 {
            let h = codec.decode_history(s);
            for a in 0..3 {
                assert_eq!(mdp.next(s, a), codec.encode_history(&h.advance(a).unwrap()));
                assert_eq!(mdp.reward(s, a), table[a][h.count(a).unwrap()]);
            }
        }
    }

    #[test]
    fn build_mdp_checks_shape_and_cap() {
        assert!(build_mdp(2, 1, &[vec![1.0, 0.5]], 10).is_err());
        let big = vec![vec![1.0; 8]; 10];
        assert!(matches!(build_mdp(10, 7, &big, DEFAULT_MAX_STATES), Err(Error::Capacity { .. })));
    }

    #[test]
    fn karp_two_arm_alternates() {
        let mdp = two_arm();
        let plan = karp_max_mean_cycle(&mdp);
        assert!((plan.rho - 0.8).abs() < 1e-12);
        assert_eq!(plan.cycle_states, vec![0, 1]);
        assert_eq!(plan.cycle_actions, vec![1, 0]);
        assert!(plan.is_valid_for(&mdp));
    }

    #[test]
    fn karp_constant_and_single_arm() {
        let mdp = build_mdp(3, 2, &vec![vec![0.4; 3]; 3], DEFAULT_MAX_STATES).unwrap();
        let plan = karp_max_mean_cycle(&mdp);
        assert!((plan.rho - 0.4).abs() < 1e-12);
        assert!(plan.is_valid_for(&mdp));

        let mdp = build_mdp(1, 3, &[vec![1.0, 0.9, 0.8, 0.7]], DEFAULT_MAX_STATES).unwrap();
        let plan = karp_max_mean_cycle(&mdp);
        assert_eq!(plan.rho, 0.7);
        assert_eq!(plan.cycle_states, vec![0]);
    }

    #[test]
    fn karp_values_finite_everywhere() {
        let table = vec![vec![0.9, 0.4, 0.2], vec![0.7, 0.6, 0.1]];
        let mdp = build_mdp(2, 2, &table, DEFAULT_MAX_STATES).unwrap();
        let t = KarpTable::build(&mdp);
        for k in 0..=t.n() {
            for v in 0..t.n() {
                assert!(t.value(k, v).is_finite());
                assert!(t.value(k, v) <= k as f64 * 0.9 + 1e-12);
            }
        }
    }

    #[test]
    fn policy_from_two_arm_cycle() {
        let mdp = two_arm();
        let plan = karp_max_mean_cycle(&mdp);
        let policy = policy_from_cycle(&mdp, &plan).unwrap();
        assert_eq!(policy.actions(), &[1, 0]);
    }

    #[test]
    fn self_loop_cycle_is_reached_within_window() {
        // arm 2 dominant and never congested
        let table = vec![vec![0.2; 4], vec![0.3, 0.2, 0.1, 0.05], vec![0.9; 4]];
        let mdp = build_mdp(3, 3, &table, DEFAULT_MAX_STATES).unwrap();
        let plan = karp_max_mean_cycle(&mdp);
        assert_eq!(plan.cycle_states.len(), 1);
        let policy = policy_from_cycle(&mdp, &plan).unwrap();
        for start in 0..mdp.n_states() {
            let mut s = start;
            let mut steps = 0;
            while s != plan.cycle_states[0] {
                s = mdp.next(s, policy.action(s));
                steps += 1;
                assert!(steps <= 3);
            }
        }
    }

    #[test]
    fn policy_average_after_burn_in() {
        let table = vec![vec![0.9, 0.5, 0.2], vec![0.8, 0.7, 0.1], vec![0.6, 0.55, 0.5]];
        let mdp = build_mdp(3, 2, &table, DEFAULT_MAX_STATES).unwrap();
        let plan = karp_max_mean_cycle(&mdp);
        let policy = policy_from_cycle(&mdp, &plan).unwrap();
        for start in 0..mdp.n_states() {
            let mut s = start;
            let mut total = 0.0;
            for _ in 0..1000 {
                let a = policy.action(s);
                total += mdp.reward(s, a);
                s = mdp.next(s, a);
            }
            assert!(total / 1000.0 >= plan.rho - 2.0 * mdp.max_reward() / 1000.0);
            assert!((average_reward_of_policy(&mdp, &policy, start) - plan.rho).abs() < 1e-9);
        }
    }

    #[test]
    fn unreachable_cycle_is_reported() {
        // two disconnected self-loops
        let mdp = DeterministicMdp::from_tables(1, vec![0, 1], vec![1.0, 0.5]).unwrap();
        let plan = karp_max_mean_cycle(&mdp);
        assert_eq!(plan.cycle_states, vec![0]);
        assert!(policy_from_cycle(&mdp, &plan).is_err());
        assert_eq!(diameter(&mdp), Diameter::Infinite);
    }

    #[test]
    fn horizon_dp_two_arm() {
        let mdp = two_arm();
        let plan = finite_horizon_dp(&mdp, 3, 0, DEFAULT_MAX_DP_CELLS).unwrap();
        assert!((plan.value - 2.2).abs() < 1e-12);
        assert_eq!(plan.actions, vec![1, 0, 1]);
        let one = finite_horizon_dp(&mdp, 1, 1, DEFAULT_MAX_DP_CELLS).unwrap();
        assert_eq!(one.value, 1.0);
        assert!(finite_horizon_dp(&mdp, 0, 0, 10).is_err());
        assert!(matches!(finite_horizon_dp(&mdp, 100, 0, 10), Err(Error::Capacity { .. })));
    }

    #[test]
    fn diameters() {
        assert_eq!(diameter(&two_arm()), Diameter::Finite(1));
        let one = build_mdp(1, 3, &[vec![1.0; 4]], DEFAULT_MAX_STATES).unwrap();
        assert_eq!(diameter(&one), Diameter::Finite(0));
        let four = build_mdp(2, 2, &vec![vec![1.0; 3]; 2], DEFAULT_MAX_STATES).unwrap();
        assert_eq!(diameter(&four), Diameter::Finite(2));
    }

    #[test]
    fn fixed_policy_averages() {
        let mdp = two_arm();
        assert_eq!(average_reward_of_policy(&mdp, &Policy::constant(2, 0), 0), 0.5);
        let alt = Policy::new(vec![1, 0]);
        assert!((average_reward_of_policy(&mdp, &alt, 0) - 0.8).abs() < 1e-12);
        let flat = build_mdp(2, 2, &vec![vec![0.3; 3]; 2], DEFAULT_MAX_STATES).unwrap();
        for a in 0..2 {
            assert!((average_reward_of_policy(&flat, &Policy::constant(4, a), 3) - 0.3).abs() < 1e-15);
        }
    }
}
