//! Exhaustive and alternative-route oracles for the planners.
//!
//! None of these share code with the planners they check: cycles are
//! enumerated by DFS, the bisection route uses Bellman-Ford positive-cycle
//! detection, and horizon values come from enumerating every action sequence.

use crate::mdp::DeterministicMdp;

/// Maximum mean over all simple cycles, by DFS from each cycle's lowest
/// state. Returns `None` when more than `budget` cycles would be visited.
pub fn max_mean_simple_cycle(mdp: &DeterministicMdp, budget: usize) -> Option<f64> {
    struct Search<'a> {
        mdp: &'a DeterministicMdp,
        on_path: Vec<bool>,
        best: f64,
        visited: usize,
        budget: usize,
    }

    impl Search<'_> {
        fn dfs(&mut self, root: usize, u: usize, depth: usize, total: f64) -> bool {
            for a in 0..self.mdp.n_actions() {
                let v = self.mdp.next(u, a);
                let w = total + self.mdp.reward(u, a);
                if v == root {
                    self.visited += 1;
                    if self.visited > self.budget {
                        return false;
                    }
                    self.best = self.best.max(w / (depth + 1) as f64);
                } else if v > root && !self.on_path[v] {
                    self.on_path[v] = true;
                    let ok = self.dfs(root, v, depth + 1, w);
                    self.on_path[v] = false;
                    if !ok {
                        return false;
                    }
                }
            }
            true
        }
    }

    let mut search = Search {
        mdp,
        on_path: vec![false; mdp.n_states()],
        best: f64::NEG_INFINITY,
        visited: 0,
        budget,
    };
    for root in 0..mdp.n_states() {
        search.on_path[root] = true;
        let ok = search.dfs(root, root, 0, 0.0);
        search.on_path[root] = false;
        if !ok {
            return None;
        }
    }
    Some(search.best)
}

/// Whether some cycle has mean strictly above `lambda`, via Bellman-Ford on
/// weights `r - lambda` from a virtual source attached to every state.
fn has_cycle_above(mdp: &DeterministicMdp, lambda: f64) -> bool {
    let n = mdp.n_states();
    let mut dist = vec![0.0f64; n];
    for _ in 0..n {
        let mut changed = false;
        for u in 0..n {
            for a in 0..mdp.n_actions() {
                let v = mdp.next(u, a);
                let cand = dist[u] + mdp.reward(u, a) - lambda;
                if cand > dist[v] + 1e-15 {
                    dist[v] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            return false;
        }
    }
    true
}

/// Maximum cycle mean by bisection on the mean, to absolute precision `tol`.
pub fn max_mean_cycle_bisection(mdp: &DeterministicMdp, tol: f64) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            lo = lo.min(mdp.reward(s, a));
            hi = hi.max(mdp.reward(s, a));
        }
    }
    lo -= tol;
    hi += tol;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if has_cycle_above(mdp, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Best total reward over all `n_actions^horizon` action sequences, with
/// the lexicographically smallest optimal sequence.
pub fn brute_force_sequences<F, R>(
    n_actions: usize,
    horizon: usize,
    start: usize,
    next: F,
    reward: R,
) -> (f64, Vec<usize>)
where
    F: Fn(usize, usize) -> usize,
    R: Fn(usize, usize, usize) -> f64,
{
    let total = n_actions.pow(horizon as u32);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut seq = vec![0usize; horizon];
    for code in 0..total {
        let mut c = code;
        for slot in seq.iter_mut().rev() {
            *slot = c % n_actions;
            c /= n_actions;
        }
        let mut s = start;
        let mut value = 0.0;
        for (t, &a) in seq.iter().enumerate() {
            value += reward(t, s, a);
            s = next(s, a);
        }
        if value > best.0 {
            best = (value, seq.clone());
        }
    }
    best
}

/// Brute force on a fixed MDP.
pub fn brute_force_horizon(mdp: &DeterministicMdp, horizon: usize, start: usize) -> (f64, Vec<usize>) {
    brute_force_sequences(
        mdp.n_actions(),
        horizon,
        start,
        |s, a| mdp.next(s, a),
        |_, s, a| mdp.reward(s, a),
    )
}
