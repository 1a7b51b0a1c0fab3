//! JSON experiment configuration. Unknown fields are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::carcb::{ContextDistribution, ContextTable, DEFAULT_RIDGE};
use crate::carmab::CarmabConfig;
use crate::carmab_st::{Edge, RoutingGraph};
use crate::env::CongestionTable;
use crate::error::{Error, Result};
use crate::mdp::{DEFAULT_MAX_DP_CELLS, DEFAULT_MAX_STATES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Mab,
    St,
    CbKnown,
    CbStochastic,
    Oracle,
    Check,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Mab => "mab",
            Mode::St => "st",
            Mode::CbKnown => "cb-known",
            Mode::CbStochastic => "cb-stochastic",
            Mode::Oracle => "oracle",
            Mode::Check => "check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Ucb1,
    Random,
    Greedy,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Ucb1 => "ucb1",
            Baseline::Random => "random",
            Baseline::Greedy => "greedy",
        }
    }
}

/// `f_cong(a, j)` for every arm (or edge).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CongestionSpec {
    /// `1 / max(1, j)`.
    #[default]
    Reciprocal,
    /// `1 / (1 + j)`: the played arm counts itself.
    ShiftedReciprocal,
    None,
    /// One row `c[0..=window]` shared by every arm.
    Row(Vec<f64>),
    /// One row per arm.
    Table(Vec<Vec<f64>>),
}

impl CongestionSpec {
    pub fn build(&self, n_actions: usize, window: usize) -> Result<CongestionTable> {
        let table = match self {
            CongestionSpec::Reciprocal => CongestionTable::reciprocal(n_actions, window),
            CongestionSpec::ShiftedReciprocal => CongestionTable::shifted_reciprocal(n_actions, window),
            CongestionSpec::None => CongestionTable::none(n_actions, window),
            CongestionSpec::Row(row) => CongestionTable::broadcast(n_actions, row.clone())?,
            CongestionSpec::Table(rows) => CongestionTable::from_rows(rows.clone())?,
        };
        if table.n_actions() != n_actions || table.window() != window {
            return Err(Error::config(format!(
                "congestion table is {} x {}, expected {n_actions} x {}",
                table.n_actions(),
                table.window() + 1,
                window + 1
            )));
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Replications {
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default)]
    pub base_seed: u64,
}

impl Default for Replications {
    fn default() -> Self {
        Self { count: 1, base_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmParams {
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_width")]
    pub width_constant: f64,
    #[serde(default)]
    pub episode_cap: Option<usize>,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default = "yes")]
    pub clip_features: bool,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self {
            delta: default_delta(),
            width_constant: default_width(),
            episode_cap: None,
            ridge: default_ridge(),
            clip_features: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    #[serde(default = "default_max_states")]
    pub max_states: usize,
    #[serde(default = "default_max_cells")]
    pub max_dp_cells: usize,
    #[serde(default = "default_max_paths")]
    pub max_paths: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_states: DEFAULT_MAX_STATES,
            max_dp_cells: DEFAULT_MAX_DP_CELLS,
            max_paths: default_max_paths(),
        }
    }
}

/// Multi-armed instance. Without `mu`, base rewards are drawn uniformly from
/// `(0, 1)` per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MabSpec {
    #[serde(default)]
    pub n_arms: Option<usize>,
    pub window: usize,
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    #[serde(default)]
    pub congestion: CongestionSpec,
    #[serde(default)]
    pub initial_history: Option<Vec<usize>>,
}

impl MabSpec {
    pub fn arms(&self) -> Result<usize> {
        match (&self.mu, self.n_arms) {
            (Some(mu), Some(k)) if mu.len() != k => Err(Error::config(format!(
                "n_arms = {k} but mu has {} entries",
                mu.len()
            ))),
            (Some(mu), _) => Ok(mu.len()),
            (None, Some(k)) if k > 0 => Ok(k),
            _ => Err(Error::config("mab needs mu or a positive n_arms")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    pub mu: f64,
}

/// Routing instance; edges inline or from a CSV with header `from,to,mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StSpec {
    pub vertices: usize,
    #[serde(default)]
    pub edges: Option<Vec<EdgeSpec>>,
    #[serde(default)]
    pub edges_csv: Option<String>,
    pub source: usize,
    pub sink: usize,
    pub window: usize,
    #[serde(default)]
    pub congestion: CongestionSpec,
    #[serde(default)]
    pub initial_history: Option<Vec<usize>>,
}

impl StSpec {
    pub fn graph(&self, base: &Path) -> Result<RoutingGraph> {
        let edges: Vec<EdgeSpec> = match (&self.edges, &self.edges_csv) {
            (Some(e), None) => e.clone(),
            (None, Some(file)) => {
                let path = base.join(file);
                let mut rdr = csv::Reader::from_path(&path).map_err(|e| csv_open_error(&path, e))?;
                rdr.deserialize().collect::<std::result::Result<_, _>>()?
            }
            _ => return Err(Error::config("st needs exactly one of edges / edges_csv")),
        };
        let edges = edges
            .into_iter()
            .map(|e| Edge {
                from: e.from,
                to: e.to,
                mu: e.mu,
            })
            .collect();
        RoutingGraph::new(self.vertices, edges, self.source, self.sink)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ContextSpec {
    /// Fresh uniform `(0, 1)^d` draws scaled to unit norm, per step and arm.
    UniformNormalized,
    /// Features given up front, `[t][a][d]` inline or a CSV with columns
    /// `t,arm,x0,...,x{d-1}` (0-based `t` and `arm`).
    FixedSequence {
        #[serde(default)]
        features: Option<Vec<Vec<Vec<f64>>>>,
        #[serde(default)]
        csv: Option<String>,
    },
    /// Per-arm Gaussian; either full covariances or one isotropic variance.
    Gaussian {
        means: Vec<Vec<f64>>,
        #[serde(default)]
        covariances: Option<Vec<Vec<Vec<f64>>>>,
        #[serde(default)]
        variance: Option<f64>,
    },
}

impl ContextSpec {
    pub fn distribution(&self) -> Result<Option<ContextDistribution>> {
        match self {
            ContextSpec::Gaussian {
                means,
                covariances,
                variance,
            } => match (covariances, variance) {
                (Some(c), None) => ContextDistribution::new(means.clone(), c.clone()).map(Some),
                (None, Some(v)) => ContextDistribution::isotropic(means.clone(), *v).map(Some),
                _ => Err(Error::config("gaussian contexts need exactly one of covariances / variance")),
            },
            _ => Ok(None),
        }
    }

    /// Fixed features, if this source has them.
    pub fn fixed_table(&self, n_arms: usize, dim: usize, base: &Path) -> Result<Option<ContextTable>> {
        let ContextSpec::FixedSequence { features, csv } = self else {
            return Ok(None);
        };
        let table = match (features, csv) {
            (Some(f), None) => {
                if f.iter().any(|row| row.len() != n_arms || row.iter().any(|x| x.len() != dim)) {
                    return Err(Error::config(format!("every context row must be {n_arms} x {dim}")));
                }
                let data: Vec<f64> = f.iter().flatten().flatten().copied().collect();
                ContextTable::new(f.len(), n_arms, dim, data)?
            }
            (None, Some(file)) => read_context_csv(&base.join(file), n_arms, dim)?,
            _ => return Err(Error::config("fixed_sequence needs exactly one of features / csv")),
        };
        Ok(Some(table))
    }
}

fn read_context_csv(path: &Path, n_arms: usize, dim: usize) -> Result<ContextTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_open_error(path, e))?;
    let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != dim + 2 {
            return Err(Error::config(format!(
                "{}: expected {} columns, found {}",
                path.display(),
                dim + 2,
                rec.len()
            )));
        }
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::config(format!("{}: bad number {:?}: {e}", path.display(), &rec[i])))
        };
        let t = parse(0)? as usize;
        let a = parse(1)? as usize;
        let x = (2..dim + 2).map(parse).collect::<Result<Vec<_>>>()?;
        rows.push((t, a, x));
    }
    let n_steps = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let mut data = vec![f64::NAN; n_steps * n_arms * dim];
    let mut seen = vec![false; n_steps * n_arms];
    for (t, a, x) in rows {
        if a >= n_arms || seen[t * n_arms + a] {
            return Err(Error::config(format!("{}: bad or repeated row t={t} arm={a}", path.display())));
        }
        seen[t * n_arms + a] = true;
        data[(t * n_arms + a) * dim..(t * n_arms + a + 1) * dim].copy_from_slice(&x);
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::config(format!("{}: some (t, arm) rows are missing", path.display())));
    }
    ContextTable::new(n_steps, n_arms, dim, data)
}

fn csv_open_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

/// Linear contextual instance. Without `theta_star`, the parameter is drawn
/// like a context (uniform, unit-normalized) per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CbSpec {
    pub n_arms: usize,
    pub window: usize,
    pub dim: usize,
    #[serde(default)]
    pub theta_star: Option<Vec<f64>>,
    #[serde(default)]
    pub initial_theta: Option<Vec<f64>>,
    #[serde(default)]
    pub congestion: CongestionSpec,
    #[serde(default)]
    pub initial_history: Option<Vec<usize>>,
    pub contexts: ContextSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    #[serde(default = "default_cases")]
    pub cases: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_check_horizon")]
    pub horizon: usize,
    #[serde(default = "default_check_reps")]
    pub coverage_replications: usize,
}

impl Default for CheckSpec {
    fn default() -> Self {
        Self {
            cases: default_cases(),
            seed: 0,
            horizon: default_check_horizon(),
            coverage_replications: default_check_reps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_sigma")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub replications: Replications,
    #[serde(default)]
    pub algorithm: AlgorithmParams,
    #[serde(default)]
    pub baselines: Vec<Baseline>,
    /// Run once per window size (one curve per value) instead of the
    /// instance's own window.
    #[serde(default)]
    pub windows: Option<Vec<usize>>,
    /// Thin logged time points geometrically past step 1000.
    #[serde(default = "yes")]
    pub thin: bool,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub mab: Option<MabSpec>,
    #[serde(default)]
    pub st: Option<StSpec>,
    #[serde(default)]
    pub cb: Option<CbSpec>,
    #[serde(default)]
    pub check: Option<CheckSpec>,
}

impl ExperimentConfig {
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        let cfg: Self = serde_json::from_slice(bytes).map_err(|e| Error::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok((Self::from_json_bytes(&bytes)?, bytes))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("noise_sigma must be finite and >= 0"));
        }
        if self.replications.count == 0 {
            return Err(Error::config("replications.count must be at least 1"));
        }
        if let Some(w) = &self.windows {
            if w.is_empty() || w.contains(&0) {
                return Err(Error::config("windows must be a non-empty list of positive sizes"));
            }
        }
        self.carmab_config().validate().map_err(|e| Error::config(e.to_string()))?;
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::config(format!("mode {} needs a `{what}` section", self.mode.as_str())))
            }
        };
        match self.mode {
            Mode::Mab => need(self.mab.is_some(), "mab"),
            Mode::St => need(self.st.is_some(), "st"),
            Mode::CbKnown | Mode::CbStochastic => need(self.cb.is_some(), "cb"),
            Mode::Oracle => need(self.mab.is_some() || self.st.is_some(), "mab or st"),
            Mode::Check => Ok(()),
        }?;
        if self.mode == Mode::CbStochastic {
            if let Some(cb) = &self.cb {
                if !matches!(cb.contexts, ContextSpec::Gaussian { .. }) {
                    return Err(Error::config("cb-stochastic needs gaussian contexts"));
                }
            }
        }
        Ok(())
    }

    /// Window sizes to run: the sweep, or the instance's own window.
    pub fn window_list(&self) -> Vec<usize> {
        if let Some(w) = &self.windows {
            return w.clone();
        }
        let own = match self.mode {
            Mode::Mab | Mode::Oracle => self.mab.as_ref().map(|m| m.window).or(self.st.as_ref().map(|s| s.window)),
            Mode::St => self.st.as_ref().map(|s| s.window),
            Mode::CbKnown | Mode::CbStochastic => self.cb.as_ref().map(|c| c.window),
            Mode::Check => None,
        };
        own.into_iter().collect()
    }

    pub fn carmab_config(&self) -> CarmabConfig {
        CarmabConfig {
            delta: self.algorithm.delta,
            width_constant: self.algorithm.width_constant,
            horizon: self.horizon,
            episode_cap: self.algorithm.episode_cap,
            max_states: self.limits.max_states,
        }
    }
}

/// Directory against which relative file references in a config resolve.
pub fn config_base_dir(config_path: &Path) -> PathBuf {
    config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_delta() -> f64 {
    0.1
}
fn default_width() -> f64 {
    10.0
}
fn default_ridge() -> f64 {
    DEFAULT_RIDGE
}
fn default_horizon() -> usize {
    10_000
}
fn default_sigma() -> f64 {
    0.1
}
fn default_max_states() -> usize {
    DEFAULT_MAX_STATES
}
fn default_max_cells() -> usize {
    DEFAULT_MAX_DP_CELLS
}
fn default_max_paths() -> usize {
    10_000
}
fn default_cases() -> usize {
    200
}
fn default_check_horizon() -> usize {
    200
}
fn default_check_reps() -> usize {
    50
}
