//! Congested multi-armed bandit environments.
//!
//! An arm's reward is its base mean scaled by a congestion factor looked up
//! from how many times the arm appears in the trailing window of the last
//! `window` plays. Arms are 0-based throughout the crate.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Identifier written into run metadata so traces can be matched to the
/// generator that produced them.
pub const RNG_ALGORITHM_ID: &str = "chacha8 (rand_chacha 0.9, seed_from_u64 + set_stream)";

/// Fixed-length window of the most recent actions, oldest first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct History {
    window: Vec<usize>,
    n_actions: usize,
}

impl History {
    pub fn new(window: Vec<usize>, n_actions: usize) -> Result<Self> {
        if window.is_empty() {
            return Err(Error::domain("history window must hold at least one action"));
        }
        if n_actions == 0 {
            return Err(Error::domain("action set must be non-empty"));
        }
        if let Some(&bad) = window.iter().find(|&&a| a >= n_actions) {
            return Err(Error::domain(format!(
                "action {bad} out of range for {n_actions} actions"
            )));
        }
        Ok(Self { window, n_actions })
    }

    /// `len` copies of `action`.
    pub fn filled(action: usize, len: usize, n_actions: usize) -> Result<Self> {
        Self::new(vec![action; len], n_actions)
    }

    pub fn window(&self) -> &[usize] {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.n_actions {
            return Err(Error::domain(format!(
                "action {action} out of range for {} actions",
                self.n_actions
            )));
        }
        Ok(())
    }

    /// Number of times `action` occurs in the window.
    pub fn count(&self, action: usize) -> Result<usize> {
        self.check_action(action)?;
        Ok(self.window.iter().filter(|&&a| a == action).count())
    }

    /// Drop the oldest entry and append `action`.
    pub fn advance(&self, action: usize) -> Result<Self> {
        let mut next = self.clone();
        next.push(action)?;
        Ok(next)
    }

    /// In-place form of [`History::advance`].
    pub fn push(&mut self, action: usize) -> Result<()> {
        self.check_action(action)?;
        self.window.rotate_left(1);
        let last = self.window.len() - 1;
        self.window[last] = action;
        Ok(())
    }
}

/// `count_in_history` on a borrowed history.
pub fn count_in_history(h: &History, action: usize) -> Result<usize> {
    h.count(action)
}

pub fn advance_history(h: &History, action: usize) -> Result<History> {
    h.advance(action)
}

/// Congestion factors `c[a][j]` for `j = 0..=window`.
///
/// Every entry lies in `(0, 1]` and each row is non-increasing in `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionTable {
    rows: Vec<Vec<f64>>,
}

impl CongestionTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::domain("congestion table needs at least one row"));
        }
        let width = rows[0].len();
        if width < 2 {
            return Err(Error::domain(
                "congestion rows need entries for j = 0..=window with window >= 1",
            ));
        }
        for (a, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::domain(format!(
                    "congestion row {a} has {} entries, expected {width}",
                    row.len()
                )));
            }
            for (j, &c) in row.iter().enumerate() {
                if !(c > 0.0 && c <= 1.0) {
                    return Err(Error::domain(format!(
                        "congestion c[{a}][{j}] = {c} outside (0, 1]"
                    )));
                }
                if j > 0 && c > row[j - 1] {
                    return Err(Error::domain(format!(
                        "congestion row {a} increases at j = {j}"
                    )));
                }
            }
        }
        Ok(Self { rows })
    }

    /// The same row for every arm.
    pub fn broadcast(n_actions: usize, row: Vec<f64>) -> Result<Self> {
        Self::from_rows(vec![row; n_actions])
    }

    /// `c[a][j] = 1 / max(1, j)`; an absent arm is uncongested.
    pub fn reciprocal(n_actions: usize, window: usize) -> Self {
        let row = (0..=window).map(|j| 1.0 / j.max(1) as f64).collect();
        Self {
            rows: vec![row; n_actions.max(1)],
        }
    }

    /// `c[a][j] = 1 / (1 + j)`: one prior play already halves the reward.
    pub fn shifted_reciprocal(n_actions: usize, window: usize) -> Self {
        let row = (0..=window).map(|j| 1.0 / (1 + j) as f64).collect();
        Self {
            rows: vec![row; n_actions.max(1)],
        }
    }

    /// No congestion at all.
    pub fn none(n_actions: usize, window: usize) -> Self {
        Self {
            rows: vec![vec![1.0; window + 1]; n_actions.max(1)],
        }
    }

    pub fn n_actions(&self) -> usize {
        self.rows.len()
    }

    /// Largest count the table covers.
    pub fn window(&self) -> usize {
        self.rows[0].len() - 1
    }

    #[inline]
    pub fn factor(&self, action: usize, count: usize) -> f64 {
        self.rows[action][count]
    }

    pub fn row(&self, action: usize) -> &[f64] {
        &self.rows[action]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `min_{a,j} c[a][j]`.
    pub fn c_min(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.last().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

/// `1 / max(1, j)` congestion for `n_actions` arms over a window.
pub fn reciprocal_congestion(n_actions: usize, window: usize) -> CongestionTable {
    CongestionTable::reciprocal(n_actions, window)
}

/// A congested multi-armed bandit problem.
#[derive(Debug, Clone)]
pub struct MabInstance {
    mu: Vec<f64>,
    window: usize,
    congestion: CongestionTable,
    noise_sigma: f64,
    initial_history: History,
}

impl MabInstance {
    /// Instance starting from `window` copies of arm 0 with unit noise.
    pub fn new(mu: Vec<f64>, window: usize, congestion: CongestionTable) -> Result<Self> {
        let k = mu.len();
        if k == 0 {
            return Err(Error::domain("instance needs at least one arm"));
        }
        if window == 0 {
            return Err(Error::domain("window must be at least 1"));
        }
        if let Some((a, m)) = mu.iter().enumerate().find(|(_, m)| !(0.0..=1.0).contains(*m)) {
            return Err(Error::domain(format!("mean reward mu[{a}] = {m} outside [0, 1]")));
        }
        if congestion.n_actions() != k || congestion.window() != window {
            return Err(Error::domain(format!(
                "congestion table is {}x{}, instance needs {k}x{}",
                congestion.n_actions(),
                congestion.window() + 1,
                window + 1
            )));
        }
        let initial_history = History::filled(0, window, k)?;
        Ok(Self {
            mu,
            window,
            congestion,
            noise_sigma: 1.0,
            initial_history,
        })
    }

    pub fn with_noise(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("noise sigma {sigma} must be finite and >= 0")));
        }
        self.noise_sigma = sigma;
        Ok(self)
    }

    pub fn with_initial_history(mut self, window: Vec<usize>) -> Result<Self> {
        if window.len() != self.window {
            return Err(Error::domain(format!(
                "initial history has length {}, window is {}",
                window.len(),
                self.window
            )));
        }
        self.initial_history = History::new(window, self.n_arms())?;
        Ok(self)
    }

    pub fn n_arms(&self) -> usize {
        self.mu.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn congestion(&self) -> &CongestionTable {
        &self.congestion
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn initial_history(&self) -> &History {
        &self.initial_history
    }

    /// Mean reward of arm `a` after it was played `count` times in the window.
    #[inline]
    pub fn reward_at_count(&self, a: usize, count: usize) -> f64 {
        self.congestion.factor(a, count) * self.mu[a]
    }

    /// True `r(a, j)` table, `K x (window + 1)`.
    pub fn reward_table(&self) -> Vec<Vec<f64>> {
        (0..self.n_arms())
            .map(|a| (0..=self.window).map(|j| self.reward_at_count(a, j)).collect())
            .collect()
    }

    pub fn mean_reward(&self, h: &History, a: usize) -> Result<f64> {
        let j = h.count(a)?;
        Ok(self.reward_at_count(a, j))
    }

    /// Noisy observation `mean_reward + N(0, sigma^2)`.
    pub fn sample_reward(&self, h: &History, a: usize, rng: &mut SimRng) -> Result<f64> {
        let mean = self.mean_reward(h, a)?;
        Ok(mean + self.noise_sigma * rng.standard_normal())
    }
}

/// Seeded simulation generator.
///
/// ChaCha8 with explicit stream selection so that environment noise,
/// instance generation and algorithm randomness never share draws.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

/// Independent generator streams derived from one replication seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Noise = 0,
    Instance = 1,
    Algorithm = 2,
    Contexts = 3,
}

impl SimRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self::with_stream(seed, Stream::Noise)
    }

    pub fn with_stream(seed: u64, stream: Stream) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream as u64);
        Self { inner }
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        rand::Rng::random::<f64>(&mut self.inner)
    }

    pub fn below(&mut self, n: usize) -> usize {
        rand::Rng::random_range(&mut self.inner, 0..n)
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
