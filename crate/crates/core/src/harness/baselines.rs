//! Congestion-unaware reference learners: UCB1, uniform random, greedy.

use crate::carcb::{CarcbInstance, ContextTable};
use crate::carmab_st::{path_reward, RoutingInstance};
use crate::env::{History, MabInstance, SimRng};
use crate::error::Result;
use crate::harness::config::Baseline;
use crate::trajectory::Trajectory;

/// Any congested environment the baselines can act in.
pub trait BanditEnv {
    fn n_actions(&self) -> usize;
    fn initial_history(&self) -> &History;
    /// `(observed, mean)` for action `a` at 0-based step `t` in history `h`.
    fn observe(&self, t: usize, h: &History, a: usize, rng: &mut SimRng) -> Result<(f64, f64)>;
}

impl BanditEnv for MabInstance {
    fn n_actions(&self) -> usize {
        self.n_arms()
    }

    fn initial_history(&self) -> &History {
        MabInstance::initial_history(self)
    }

    fn observe(&self, _t: usize, h: &History, a: usize, rng: &mut SimRng) -> Result<(f64, f64)> {
        let mean = self.mean_reward(h, a)?;
        Ok((mean + self.noise_sigma() * rng.standard_normal(), mean))
    }
}

impl BanditEnv for RoutingInstance {
    fn n_actions(&self) -> usize {
        self.n_paths()
    }

    fn initial_history(&self) -> &History {
        RoutingInstance::initial_history(self)
    }

    fn observe(&self, _t: usize, h: &History, p: usize, rng: &mut SimRng) -> Result<(f64, f64)> {
        let obs = path_reward(self, h, p, rng)?;
        Ok((obs.total, obs.mean_total))
    }
}

/// A contextual instance together with its realized contexts.
pub struct ContextualEnv<'a> {
    pub instance: &'a CarcbInstance,
    pub contexts: &'a ContextTable,
}

impl BanditEnv for ContextualEnv<'_> {
    fn n_actions(&self) -> usize {
        self.instance.n_arms()
    }

    fn initial_history(&self) -> &History {
        self.instance.initial_history()
    }

    fn observe(&self, t: usize, h: &History, a: usize, rng: &mut SimRng) -> Result<(f64, f64)> {
        let x = self.contexts.feature(t, a);
        let base: f64 = self.instance.theta_star().iter().zip(x).map(|(p, q)| p * q).sum();
        let mean = base * self.instance.congestion().factor(a, h.count(a)?);
        Ok((mean + self.instance.noise_sigma() * rng.standard_normal(), mean))
    }
}

pub fn run_baseline<E: BanditEnv>(
    kind: Baseline,
    env: &E,
    horizon: usize,
    noise_rng: &mut SimRng,
    alg_rng: &mut SimRng,
) -> Result<Trajectory> {
    match kind {
        Baseline::Ucb1 => baseline_ucb1(env, horizon, noise_rng),
        Baseline::Random => baseline_random(env, horizon, noise_rng, alg_rng),
        Baseline::Greedy => baseline_greedy(env, horizon, noise_rng),
    }
}

/// A learner the shared loop can drive.
trait Learner {
    fn choose(&mut self, t: usize, h: &History) -> usize;
    fn update(&mut self, _a: usize, _j: usize, _observed: f64) {}
}

struct Ucb1 {
    n: Vec<u64>,
    sum: Vec<f64>,
}

impl Learner for Ucb1 {
    fn choose(&mut self, t: usize, _h: &History) -> usize {
        let k = self.n.len();
        if t < k {
            return t;
        }
        let ln_t = (t as f64).ln();
        let mut best = (f64::NEG_INFINITY, 0);
        for a in 0..k {
            let ucb = self.sum[a] / self.n[a] as f64 + (2.0 * ln_t / self.n[a] as f64).sqrt();
            if ucb > best.0 {
                best = (ucb, a);
            }
        }
        best.1
    }

    fn update(&mut self, a: usize, _j: usize, observed: f64) {
        self.n[a] += 1;
        self.sum[a] += observed;
    }
}

struct Uniform<'a> {
    k: usize,
    rng: &'a mut SimRng,
}

impl Learner for Uniform<'_> {
    fn choose(&mut self, _t: usize, _h: &History) -> usize {
        self.rng.below(self.k)
    }
}

struct Greedy {
    k: usize,
    counts: usize,
    n: Vec<u64>,
    sum: Vec<f64>,
}

impl Learner for Greedy {
    fn choose(&mut self, _t: usize, h: &History) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for a in 0..self.k {
            let j = h.window().iter().filter(|&&b| b == a).count();
            let i = a * self.counts + j;
            let score = if self.n[i] == 0 { 1.0 } else { self.sum[i] / self.n[i] as f64 };
            if score > best.0 {
                best = (score, a);
            }
        }
        best.1
    }

    fn update(&mut self, a: usize, j: usize, observed: f64) {
        let i = a * self.counts + j;
        self.n[i] += 1;
        self.sum[i] += observed;
    }
}

/// UCB1 on raw observed rewards; congestion is invisible to it.
pub fn baseline_ucb1<E: BanditEnv>(env: &E, horizon: usize, noise_rng: &mut SimRng) -> Result<Trajectory> {
    let k = env.n_actions();
    let mut learner = Ucb1 {
        n: vec![0; k],
        sum: vec![0.0; k],
    };
    drive(env, horizon, noise_rng, &mut learner)
}

pub fn baseline_random<E: BanditEnv>(
    env: &E,
    horizon: usize,
    noise_rng: &mut SimRng,
    alg_rng: &mut SimRng,
) -> Result<Trajectory> {
    let mut learner = Uniform {
        k: env.n_actions(),
        rng: alg_rng,
    };
    drive(env, horizon, noise_rng, &mut learner)
}

/// One-step greedy on empirical `r(a, #(h, a))`; unseen pairs score 1 so
/// each is tried once.
pub fn baseline_greedy<E: BanditEnv>(env: &E, horizon: usize, noise_rng: &mut SimRng) -> Result<Trajectory> {
    let k = env.n_actions();
    let counts = env.initial_history().len() + 1;
    let mut learner = Greedy {
        k,
        counts,
        n: vec![0; k * counts],
        sum: vec![0.0; k * counts],
    };
    drive(env, horizon, noise_rng, &mut learner)
}

/// Shared loop: choose, observe, record, update.
fn drive<E: BanditEnv, L: Learner>(env: &E, horizon: usize, noise_rng: &mut SimRng, learner: &mut L) -> Result<Trajectory> {
    let mut h = env.initial_history().clone();
    let mut traj = Trajectory::with_capacity(horizon);
    for t in 0..horizon {
        let a = learner.choose(t, &h);
        let j = h.count(a)?;
        let (observed, mean) = env.observe(t, &h, a, noise_rng)?;
        traj.push(a, observed, mean, 0);
        learner.update(a, j, observed);
        h.push(a)?;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::CongestionTable;

    fn canonical() -> MabInstance {
        MabInstance::new(vec![1.0, 0.6], 1, CongestionTable::shifted_reciprocal(2, 1))
            .unwrap()
            .with_noise(0.1)
            .unwrap()
    }

    #[test]
    fn ucb1_finds_best_arm_without_congestion() {
        let inst = MabInstance::new(vec![0.9, 0.5, 0.2], 2, CongestionTable::none(3, 2))
            .unwrap()
            .with_noise(0.1)
            .unwrap();
        let t = 20_000;
        let traj = baseline_ucb1(&inst, t, &mut SimRng::seed_from_u64(1)).unwrap();
        let regret = 0.9 - traj.mean_reward_over(0, t);
        assert!(regret < 0.01, "{regret}");
    }

    #[test]
    fn ucb1_is_fooled_by_congestion() {
        let t = 20_000;
        let traj = baseline_ucb1(&canonical(), t, &mut SimRng::seed_from_u64(2)).unwrap();
        assert!(traj.mean_reward_over(t / 2, t) <= 0.6);
    }

    #[test]
    fn random_matches_stationary_mixture() {
        // Uniform play with window 1: the previous arm is uniform, so
        // E[r] = 1/2 * sum_a mu_a * (1/2 * c(0) + 1/2 * c(1)).
        let t = 50_000;
        let inst = canonical();
        let mut total = 0.0;
        for s in 0..4 {
            let traj = baseline_random(&inst, t, &mut SimRng::seed_from_u64(s), &mut SimRng::seed_from_u64(100 + s)).unwrap();
            total += traj.mean_reward_over(0, t) / 4.0;
        }
        let exact = 0.5 * (1.0 + 0.6) * 0.75;
        assert!((total - exact).abs() / exact < 0.02, "{total} vs {exact}");
    }

    #[test]
    fn greedy_tries_every_pair() {
        let traj = baseline_greedy(&canonical(), 50, &mut SimRng::seed_from_u64(3)).unwrap();
        assert_eq!(traj.len(), 50);
        assert!(traj.actions.contains(&0) && traj.actions.contains(&1));
    }

    #[test]
    fn baselines_share_noise_draws() {
        let inst = canonical();
        let a = baseline_ucb1(&inst, 100, &mut SimRng::seed_from_u64(9)).unwrap();
        let b = baseline_greedy(&inst, 100, &mut SimRng::seed_from_u64(9)).unwrap();
        for t in 0..100 {
            let za = (a.observed[t] - a.mean[t]) / 0.1;
            let zb = (b.observed[t] - b.mean[t]) / 0.1;
            assert!((za - zb).abs() < 1e-9);
        }
    }
}
