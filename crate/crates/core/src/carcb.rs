//! Linear contextual bandits with congestion.
//!
//! The mean reward of arm `a` at step `t` is `<theta*, phi(x_t, a)> * c[a][j]`
//! where `j` counts `a` in the trailing window. The learner refits `theta` by
//! least squares on congestion-scaled features after each epoch of length
//! `window * 2^e` and plans the next epoch with it.
//!
//! With known contexts the epoch plan is an exact backward induction over
//! (step, history). With stochastic contexts the planner is certainty
//! equivalent: a value table built on the mean contexts, then a one-step
//! lookahead on the context actually drawn.

use nalgebra::{DMatrix, DVector};

use crate::env::{CongestionTable, History, SimRng};
use crate::error::{Error, Result};
use crate::mdp::{self, HorizonPlan, StateCodec};
use crate::trajectory::Trajectory;

pub const DEFAULT_RIDGE: f64 = 1e-8;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Per-step, per-arm feature vectors, stored row-major as `[t][a][d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTable {
    n_steps: usize,
    n_arms: usize,
    dim: usize,
    data: Vec<f64>,
}

impl ContextTable {
    pub fn new(n_steps: usize, n_arms: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if n_arms == 0 || dim == 0 {
            return Err(Error::domain("contexts need at least one arm and one feature"));
        }
        if data.len() != n_steps * n_arms * dim {
            return Err(Error::domain(format!(
                "context table holds {} values, expected {n_steps} x {n_arms} x {dim}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("context features must be finite"));
        }
        Ok(Self {
            n_steps,
            n_arms,
            dim,
            data,
        })
    }

    /// Every step shows the same features `per_arm[a]`.
    pub fn constant(n_steps: usize, per_arm: &[Vec<f64>]) -> Result<Self> {
        let dim = per_arm.first().map_or(0, Vec::len);
        let row: Vec<f64> = per_arm.iter().flatten().copied().collect();
        Self::new(n_steps, per_arm.len(), dim, row.repeat(n_steps))
    }

    /// Features drawn uniformly from `(0, 1)^d` and scaled to unit norm.
    pub fn uniform_normalized(n_steps: usize, n_arms: usize, dim: usize, rng: &mut SimRng) -> Self {
        let mut data = Vec::with_capacity(n_steps * n_arms * dim);
        for _ in 0..n_steps * n_arms {
            data.extend(unit_uniform_vector(dim, rng));
        }
        Self {
            n_steps,
            n_arms,
            dim,
            data,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Feature vector of arm `a` at 0-based step `t`.
    #[inline]
    pub fn feature(&self, t: usize, a: usize) -> &[f64] {
        let start = (t * self.n_arms + a) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Steps `from..from + len` as a new table.
    pub fn window(&self, from: usize, len: usize) -> ContextTable {
        let row = self.n_arms * self.dim;
        ContextTable {
            n_steps: len,
            n_arms: self.n_arms,
            dim: self.dim,
            data: self.data[from * row..(from + len) * row].to_vec(),
        }
    }

    /// Largest feature norm in the table.
    pub fn max_norm(&self) -> f64 {
        self.data.chunks(self.dim).map(norm).fold(0.0, f64::max)
    }
}

/// Uniform `(0, 1)^d` draw scaled to unit Euclidean norm.
pub fn unit_uniform_vector(dim: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.uniform()).collect();
    let n = norm(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Uniform draw from the closed unit ball: Gaussian direction, radius `U^(1/d)`.
pub fn uniform_in_ball(dim: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
    let n = norm(&v);
    let radius = rng.uniform().powf(1.0 / dim as f64);
    v.iter_mut().for_each(|x| *x *= radius / n);
    v
}

/// A congested linear contextual bandit.
#[derive(Debug, Clone)]
pub struct CarcbInstance {
    theta_star: Vec<f64>,
    window: usize,
    congestion: CongestionTable,
    noise_sigma: f64,
    initial_history: History,
}

impl CarcbInstance {
    pub fn new(theta_star: Vec<f64>, window: usize, congestion: CongestionTable) -> Result<Self> {
        if theta_star.is_empty() {
            return Err(Error::domain("parameter dimension must be at least 1"));
        }
        if norm(&theta_star) > 1.0 + 1e-12 {
            return Err(Error::domain("true parameter must lie in the unit ball"));
        }
        if window == 0 || congestion.window() != window {
            return Err(Error::domain("congestion table must cover counts 0..=window"));
        }
        let initial_history = History::filled(0, window, congestion.n_actions())?;
        Ok(Self {
            theta_star,
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
            return Err(Error::domain("initial history must have window length"));
        }
        self.initial_history = History::new(window, self.n_arms())?;
        Ok(self)
    }

    pub fn n_arms(&self) -> usize {
        self.congestion.n_actions()
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
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

    fn check_contexts(&self, contexts: &ContextTable) -> Result<()> {
        if contexts.n_arms() != self.n_arms() || contexts.dim() != self.dim() {
            return Err(Error::domain(format!(
                "contexts are {} arms x {} features, instance needs {} x {}",
                contexts.n_arms(),
                contexts.dim(),
                self.n_arms(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Accumulated normal equations for least squares on `phi * f_cong`.
#[derive(Debug, Clone)]
pub struct OlsState {
    gram: DMatrix<f64>,
    moment: DVector<f64>,
    count: usize,
    ridge: f64,
}

/// Result of a least-squares solve.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsSolution {
    pub theta: Vec<f64>,
    /// The regularized Gram matrix was singular; `theta` is the minimum-norm
    /// least-squares solution.
    pub degenerate: bool,
}

impl OlsState {
    pub fn new(dim: usize, ridge: f64) -> Self {
        Self {
            gram: DMatrix::zeros(dim, dim),
            moment: DVector::zeros(dim),
            count: 0,
            ridge,
        }
    }

    pub fn add(&mut self, feature: &[f64], reward: f64) {
        let x = DVector::from_column_slice(feature);
        self.gram.ger(1.0, &x, &x, 1.0);
        self.moment.axpy(reward, &x, 1.0);
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }
}

/// Solve `(gram + ridge I) theta = moment`.
pub fn ols_solve(state: &OlsState) -> Result<OlsSolution> {
    if state.count == 0 {
        return Err(Error::domain("least squares needs at least one sample"));
    }
    let d = state.gram.nrows();
    let a = &state.gram + DMatrix::identity(d, d) * state.ridge;
    if let Some(chol) = a.clone().cholesky() {
        let theta = chol.solve(&state.moment);
        if theta.iter().all(|x| x.is_finite()) {
            return Ok(OlsSolution {
                theta: theta.as_slice().to_vec(),
                degenerate: false,
            });
        }
    }
    let svd = a.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(1.0);
    let theta = svd
        .solve(&state.moment, eps)
        .map_err(|e| Error::domain(format!("least-squares fallback failed: {e}")))?;
    Ok(OlsSolution {
        theta: theta.as_slice().to_vec(),
        degenerate: true,
    })
}

/// Smallest eigenvalue of `(1/n) sum phi phi^T` over logged features.
pub fn min_eigenvalue_diagnostic(features: &[Vec<f64>]) -> Result<f64> {
    let Some(first) = features.first() else {
        return Err(Error::domain("diagnostic needs at least one feature"));
    };
    let d = first.len();
    let mut m = DMatrix::zeros(d, d);
    for f in features {
        let x = DVector::from_column_slice(f);
        m.ger(1.0, &x, &x, 1.0);
    }
    Ok(second_moment_min_eig(&m, features.len()))
}

fn second_moment_min_eig(sum: &DMatrix<f64>, n: usize) -> f64 {
    let m = sum / n as f64;
    m.symmetric_eigen().eigenvalues.min()
}

/// Gaussian feature distribution per arm.
#[derive(Debug, Clone)]
pub struct ContextDistribution {
    means: Vec<Vec<f64>>,
    chol: Vec<DMatrix<f64>>,
    alpha_l: f64,
    alpha_u: f64,
}

impl ContextDistribution {
    pub fn new(means: Vec<Vec<f64>>, covariances: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if means.is_empty() || means.len() != covariances.len() {
            return Err(Error::domain("need one mean and one covariance per arm"));
        }
        let d = means[0].len();
        let mut chol = Vec::with_capacity(means.len());
        let (mut alpha_l, mut alpha_u) = (f64::INFINITY, 0.0f64);
        for (a, (mean, cov)) in means.iter().zip(&covariances).enumerate() {
            if mean.len() != d || cov.len() != d || cov.iter().any(|r| r.len() != d) {
                return Err(Error::domain(format!("arm {a}: mean/covariance must be {d}-dimensional")));
            }
            if norm(mean) > 1.0 + 1e-12 {
                return Err(Error::domain(format!("arm {a}: mean context outside the unit ball")));
            }
            let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
            if (&m - m.transpose()).amax() > 1e-12 {
                return Err(Error::domain(format!("arm {a}: covariance is not symmetric")));
            }
            let eig = m.clone().symmetric_eigen().eigenvalues;
            let (lo, hi) = (eig.min(), eig.max());
            if lo <= 0.0 {
                return Err(Error::domain(format!("arm {a}: covariance is not positive definite")));
            }
            alpha_l = alpha_l.min(lo);
            alpha_u = alpha_u.max(hi);
            let c = m
                .cholesky()
                .ok_or_else(|| Error::domain(format!("arm {a}: covariance has no Cholesky factor")))?;
            chol.push(c.l());
        }
        Ok(Self {
            means,
            chol,
            alpha_l,
            alpha_u,
        })
    }

    /// `N(mean_a, variance * I)` for every arm.
    pub fn isotropic(means: Vec<Vec<f64>>, variance: f64) -> Result<Self> {
        let d = means.first().map_or(0, Vec::len);
        let cov: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { variance } else { 0.0 }).collect())
            .collect();
        let n = means.len();
        Self::new(means, vec![cov; n])
    }

    pub fn n_arms(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    /// Smallest covariance eigenvalue over arms.
    pub fn alpha_l(&self) -> f64 {
        self.alpha_l
    }

    /// Largest covariance eigenvalue over arms.
    pub fn alpha_u(&self) -> f64 {
        self.alpha_u
    }

    /// One feature vector for arm `a`; projected onto the unit ball when
    /// `clip` is set.
    pub fn sample(&self, a: usize, clip: bool, rng: &mut SimRng) -> Vec<f64> {
        let d = self.dim();
        let z = DVector::from_fn(d, |_, _| rng.standard_normal());
        let x = &self.chol[a] * z;
        let mut v: Vec<f64> = self.means[a].iter().zip(x.iter()).map(|(m, e)| m + e).collect();
        if clip {
            let n = norm(&v);
            if n > 1.0 {
                v.iter_mut().for_each(|x| *x /= n);
            }
        }
        v
    }

    /// Draw `n_steps` rounds of features for every arm.
    pub fn sample_table(&self, n_steps: usize, clip: bool, rng: &mut SimRng) -> ContextTable {
        let mut data = Vec::with_capacity(n_steps * self.n_arms() * self.dim());
        for _ in 0..n_steps {
            for a in 0..self.n_arms() {
                data.extend(self.sample(a, clip, rng));
            }
        }
        ContextTable {
            n_steps,
            n_arms: self.n_arms(),
            dim: self.dim(),
            data,
        }
    }
}

/// Epoch boundaries: epoch `e = 1, 2, ...` has length `window * 2^e`, the
/// last one cut at the horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSchedule {
    /// `(start, len)` with 0-based starts.
    epochs: Vec<(usize, usize)>,
}

impl EpochSchedule {
    pub fn new(window: usize, horizon: usize) -> Self {
        let mut epochs = Vec::new();
        let mut start = 0;
        let mut e = 1u32;
        while start < horizon {
            let full = window.saturating_mul(1usize.checked_shl(e).unwrap_or(usize::MAX));
            let len = full.min(horizon - start);
            epochs.push((start, len));
            start += len;
            e += 1;
        }
        Self { epochs }
    }

    pub fn epochs(&self) -> &[(usize, usize)] {
        &self.epochs
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }
}

/// Per-state counts of every arm, `n_states x n_arms`.
fn count_table(codec: &StateCodec) -> Vec<u16> {
    let k = codec.n_symbols();
    let mut counts = vec![0u16; codec.n_states() * k];
    let mut w = vec![0; codec.window()];
    for s in 0..codec.n_states() {
        codec.decode_into(s, &mut w);
        for &a in &w {
            counts[s * k + a] += 1;
        }
    }
    counts
}

/// Best action sequence over a window of known contexts, starting from
/// history `h0`, for reward `<theta, phi(x_t, a)> * c[a][#(h, a)]`.
pub fn dp_plan_known(
    theta: &[f64],
    contexts: &ContextTable,
    h0: &History,
    congestion: &CongestionTable,
    max_states: usize,
    max_cells: usize,
) -> Result<HorizonPlan> {
    let k = contexts.n_arms();
    if theta.len() != contexts.dim() || congestion.n_actions() != k || h0.n_actions() != k {
        return Err(Error::domain("parameter, contexts, congestion and history disagree in shape"));
    }
    let codec = StateCodec::new(k, h0.len(), max_states)?;
    let counts = count_table(&codec);
    let base: Vec<f64> = (0..contexts.n_steps())
        .flat_map(|t| (0..k).map(move |a| (t, a)))
        .map(|(t, a)| dot(theta, contexts.feature(t, a)))
        .collect();
    mdp::backward_induction(
        codec.n_states(),
        k,
        contexts.n_steps(),
        codec.encode_history(h0),
        max_cells,
        |s, a| codec.shift(s, a),
        |t, s, a| base[t * k + a] * congestion.factor(a, counts[s * k + a] as usize),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarcbConfig {
    pub horizon: usize,
    /// Added to the Gram diagonal; zero gives plain least squares.
    pub ridge: f64,
    /// Project sampled Gaussian features onto the unit ball.
    pub clip_features: bool,
    /// Start from this parameter instead of a uniform draw from the ball.
    pub initial_theta: Option<Vec<f64>>,
    pub max_states: usize,
    pub max_dp_cells: usize,
}

impl Default for CarcbConfig {
    fn default() -> Self {
        Self {
            horizon: 10_000,
            ridge: DEFAULT_RIDGE,
            clip_features: true,
            initial_theta: None,
            max_states: mdp::DEFAULT_MAX_STATES,
            max_dp_cells: mdp::DEFAULT_MAX_DP_CELLS,
        }
    }
}

impl CarcbConfig {
    fn validate(&self, dim: usize) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::domain("horizon must be at least 1"));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::domain("ridge must be finite and >= 0"));
        }
        if let Some(theta) = &self.initial_theta {
            if theta.len() != dim {
                return Err(Error::domain("initial parameter has the wrong dimension"));
            }
        }
        Ok(())
    }
}

/// Diagnostics for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based first step.
    pub start: usize,
    pub len: usize,
    /// Samples the planning parameter was fitted on.
    pub samples: usize,
    /// `||theta_e - theta*||` of the parameter used in this epoch.
    pub theta_error: f64,
    /// Whether the fit behind `theta_e` fell back to a minimum-norm solve.
    pub degenerate_fit: bool,
    /// Smallest eigenvalue of the selected-feature second moment at epoch end.
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct CarcbRun {
    pub trajectory: Trajectory,
    pub epochs: Vec<EpochRecord>,
    /// Reward the planner expected at each step under its own parameter.
    pub predicted: Vec<f64>,
    pub final_theta: Vec<f64>,
}

/// How an epoch picks actions.
enum Planner<'a> {
    Known,
    CertaintyEquivalent(&'a ContextDistribution),
}

/// Known contexts: each epoch follows the exact plan for that epoch's
/// contexts under the current parameter.
pub fn run_carcb_known(
    inst: &CarcbInstance,
    contexts: &ContextTable,
    cfg: &CarcbConfig,
    noise_rng: &mut SimRng,
    alg_rng: &mut SimRng,
) -> Result<CarcbRun> {
    run_epochs(inst, contexts, cfg, noise_rng, alg_rng, Planner::Known)
}

/// Unknown contexts drawn from `dist`. `realized` holds the draws; step `t`
/// only reads row `t`.
pub fn run_carcb_stochastic(
    inst: &CarcbInstance,
    dist: &ContextDistribution,
    realized: &ContextTable,
    cfg: &CarcbConfig,
    noise_rng: &mut SimRng,
    alg_rng: &mut SimRng,
) -> Result<CarcbRun> {
    if dist.n_arms() != inst.n_arms() || dist.dim() != inst.dim() {
        return Err(Error::domain("context distribution does not match the instance"));
    }
    run_epochs(inst, realized, cfg, noise_rng, alg_rng, Planner::CertaintyEquivalent(dist))
}

fn run_epochs(
    inst: &CarcbInstance,
    contexts: &ContextTable,
    cfg: &CarcbConfig,
    noise_rng: &mut SimRng,
    alg_rng: &mut SimRng,
    planner: Planner<'_>,
) -> Result<CarcbRun> {
    cfg.validate(inst.dim())?;
    inst.check_contexts(contexts)?;
    if contexts.n_steps() < cfg.horizon {
        return Err(Error::domain(format!(
            "{} context rows for horizon {}",
            contexts.n_steps(),
            cfg.horizon
        )));
    }
    let k = inst.n_arms();
    let d = inst.dim();
    let codec = StateCodec::new(k, inst.window, cfg.max_states)?;
    let counts = count_table(&codec);

    let mut theta = match &cfg.initial_theta {
        Some(t) => t.clone(),
        None => uniform_in_ball(d, alg_rng),
    };
    let mut degenerate = false;
    let mut ols = OlsState::new(d, cfg.ridge);
    let mut selected_moment = DMatrix::zeros(d, d);
    let mut hist = inst.initial_history.clone();
    let mut trajectory = Trajectory::with_capacity(cfg.horizon);
    let mut predicted = Vec::with_capacity(cfg.horizon);
    let mut epochs = Vec::new();

    for (e, &(start, len)) in EpochSchedule::new(inst.window, cfg.horizon).epochs().iter().enumerate() {
        let theta_error = theta.iter().zip(&inst.theta_star).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();

        // Actions for the epoch are chosen step by step from a plan built now.
        let plan_actions: Option<Vec<usize>> = match planner {
            Planner::Known => {
                let window = contexts.window(start, len);
                let plan = dp_plan_known(&theta, &window, &hist, &inst.congestion, cfg.max_states, cfg.max_dp_cells)?;
                Some(plan.actions)
            }
            Planner::CertaintyEquivalent(_) => None,
        };
        let values = match planner {
            Planner::CertaintyEquivalent(dist) => {
                let cells = (len as u128 + 1) * codec.n_states() as u128;
                if cells > cfg.max_dp_cells as u128 {
                    return Err(Error::Capacity {
                        what: "certainty-equivalent value table",
                        required: cells,
                        cap: cfg.max_dp_cells as u128,
                    });
                }
                let mean_rewards: Vec<Vec<f64>> = (0..k)
                    .map(|a| {
                        let base = dot(&theta, &dist.means()[a]);
                        (0..=inst.window).map(|j| base * inst.congestion.factor(a, j)).collect()
                    })
                    .collect();
                Some(value_table(&codec, &counts, &mean_rewards, len))
            }
            Planner::Known => None,
        };

        for i in 0..len {
            let t = start + i;
            let s = codec.encode_history(&hist);
            let score = |a: usize| {
                dot(&theta, contexts.feature(t, a)) * inst.congestion.factor(a, counts[s * k + a] as usize)
            };
            let a = match (&plan_actions, &values) {
                (Some(actions), _) => actions[i],
                (None, Some(v)) => {
                    let n = codec.n_states();
                    let mut best = (f64::NEG_INFINITY, 0);
                    for a in 0..k {
                        let q = score(a) + v[(i + 1) * n + codec.shift(s, a)];
                        if q > best.0 {
                            best = (q, a);
                        }
                    }
                    best.1
                }
                (None, None) => unreachable!("one planner is always active"),
            };
            predicted.push(score(a));
            let phi = contexts.feature(t, a);
            let f = inst.congestion.factor(a, counts[s * k + a] as usize);
            let mean = dot(&inst.theta_star, phi) * f;
            let observed = mean + inst.noise_sigma * noise_rng.standard_normal();
            trajectory.push(a, observed, mean, (e + 1) as u32);

            let scaled: Vec<f64> = phi.iter().map(|x| x * f).collect();
            ols.add(&scaled, observed);
            let x = DVector::from_column_slice(phi);
            selected_moment.ger(1.0, &x, &x, 1.0);
            hist.push(a)?;
        }

        epochs.push(EpochRecord {
            start: start + 1,
            len,
            samples: start,
            theta_error,
            degenerate_fit: degenerate,
            min_eigenvalue: second_moment_min_eig(&selected_moment, start + len),
        });
        let fit = ols_solve(&ols)?;
        theta = fit.theta;
        degenerate = fit.degenerate;
    }

    Ok(CarcbRun {
        trajectory,
        epochs,
        predicted,
        final_theta: theta,
    })
}

/// `V[t][s]`: best total mean reward over the last `len - t` steps from
/// state `s`, for `t = 0..=len`, flattened row-major.
fn value_table(codec: &StateCodec, counts: &[u16], rewards: &[Vec<f64>], len: usize) -> Vec<f64> {
    let n = codec.n_states();
    let k = codec.n_symbols();
    let mut v = vec![0.0; (len + 1) * n];
    for t in (0..len).rev() {
        let (head, tail) = v.split_at_mut((t + 1) * n);
        let next = &tail[..n];
        let row = &mut head[t * n..];
        for s in 0..n {
            row[s] = (0..k)
                .map(|a| rewards[a][counts[s * k + a] as usize] + next[codec.shift(s, a)])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    v
}

/// Hindsight-optimal plan under the true parameter over all `T` contexts.
pub fn optimal_known_plan(
    inst: &CarcbInstance,
    contexts: &ContextTable,
    horizon: usize,
    max_states: usize,
    max_cells: usize,
) -> Result<HorizonPlan> {
    inst.check_contexts(contexts)?;
    dp_plan_known(
        &inst.theta_star,
        &contexts.window(0, horizon),
        &inst.initial_history,
        &inst.congestion,
        max_states,
        max_cells,
    )
}
