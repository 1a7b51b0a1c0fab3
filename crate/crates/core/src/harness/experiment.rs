//! Replicated runs and their on-disk output.
//!
//! Layout under the output directory:
//!
//! ```text
//! metadata.json
//! window_<D>/<algorithm>/rep_<r>.csv
//! window_<D>/<algorithm>_aggregate.csv
//! ```
//!
//! Replication `r` uses seed `base_seed + r`. Every algorithm in a
//! replication draws its noise from the same stream, so they face the same
//! noise sequence step by step.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::carcb::{self, CarcbConfig, CarcbInstance, ContextDistribution, ContextTable};
use crate::carmab::run_carmab;
use crate::carmab_st::{run_carmab_st, RoutingGraph, RoutingInstance};
use crate::env::{MabInstance, SimRng, Stream, RNG_ALGORITHM_ID};
use crate::error::{Error, Result};
use crate::harness::baselines::{run_baseline, BanditEnv, ContextualEnv};
use crate::harness::comparator::{cb_comparator, mab_comparator, st_comparator, Comparator};
use crate::harness::config::{CbSpec, ExperimentConfig, MabSpec, Mode, StSpec};
use crate::harness::trace::{aggregate, log_points, write_aggregate_file, RegretTrace};
use crate::mdp::{self, build_mdp, Diameter};
use crate::par::{map_indexed, Execution};
use crate::trajectory::Trajectory;

/// Command-line style overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub execution: Execution,
    pub seed: Option<u64>,
    pub thin: Option<bool>,
    /// Where relative CSV references in the config resolve.
    pub base_dir: PathBuf,
}

/// Hex sha256 of the raw config bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything one replication produced.
#[derive(Debug, Clone)]
pub struct RepOutcome {
    pub seed: u64,
    /// `(algorithm name, trace)`, learner first, then baselines in config order.
    pub traces: Vec<(String, RegretTrace)>,
    pub comparator: Comparator,
    /// Episodes (or epochs) used by the learner.
    pub episodes: usize,
}

#[derive(Debug, Clone)]
pub struct WindowResult {
    pub window: usize,
    pub reps: Vec<RepOutcome>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub windows: Vec<WindowResult>,
    pub points: Vec<usize>,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub config_sha256: String,
    pub rng: &'static str,
    pub versions: Versions,
    pub mode: &'static str,
    pub horizon: usize,
    pub base_seed: u64,
    pub replications: usize,
    pub thin: bool,
    pub logged_points: usize,
    pub windows: Vec<WindowMeta>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub congested_bandits: &'static str,
    pub rand_chacha: &'static str,
    pub nalgebra: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowMeta {
    pub window: usize,
    pub algorithms: Vec<String>,
    pub reps: Vec<RepMeta>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepMeta {
    pub seed: u64,
    pub episodes: usize,
    pub comparator: Comparator,
    pub comparator_gap_certified: bool,
    /// Final average mean-regret per algorithm, same order as `algorithms`.
    pub final_avg_regret_mean: Vec<f64>,
}

pub const VERSIONS: Versions = Versions {
    congested_bandits: env!("CARGO_PKG_VERSION"),
    rand_chacha: "0.9",
    nalgebra: "0.35",
};

/// Inputs that are read once and shared by all replications.
struct Prepared {
    graph: Option<RoutingGraph>,
    fixed_contexts: Option<ContextTable>,
    distribution: Option<ContextDistribution>,
}

fn prepare(cfg: &ExperimentConfig, base: &Path) -> Result<Prepared> {
    let mut p = Prepared {
        graph: None,
        fixed_contexts: None,
        distribution: None,
    };
    if let (Mode::St | Mode::Oracle, Some(st)) = (cfg.mode, &cfg.st) {
        p.graph = Some(st.graph(base)?);
    }
    if let (Mode::CbKnown | Mode::CbStochastic, Some(cb)) = (cfg.mode, &cfg.cb) {
        p.fixed_contexts = cb.contexts.fixed_table(cb.n_arms, cb.dim, base)?;
        p.distribution = cb.contexts.distribution()?;
        if let Some(t) = &p.fixed_contexts {
            if t.n_steps() < cfg.horizon {
                return Err(Error::config(format!(
                    "fixed context sequence has {} steps, horizon is {}",
                    t.n_steps(),
                    cfg.horizon
                )));
            }
        }
    }
    Ok(p)
}

fn initial_history(given: &Option<Vec<usize>>, window: usize) -> Result<Option<Vec<usize>>> {
    match given {
        Some(h) if h.len() != window => Err(Error::config(format!(
            "initial_history has {} entries but the window is {window}",
            h.len()
        ))),
        other => Ok(other.clone()),
    }
}

/// The multi-armed instance for one seed; random base rewards when `mu` is
/// not given.
pub fn mab_instance(spec: &MabSpec, window: usize, sigma: f64, seed: u64) -> Result<MabInstance> {
    let k = spec.arms()?;
    let mu = match &spec.mu {
        Some(mu) => mu.clone(),
        None => {
            let mut rng = SimRng::with_stream(seed, Stream::Instance);
            (0..k).map(|_| rng.uniform()).collect()
        }
    };
    let mut inst = MabInstance::new(mu, window, spec.congestion.build(k, window)?)?.with_noise(sigma)?;
    if let Some(h) = initial_history(&spec.initial_history, window)? {
        inst = inst.with_initial_history(h)?;
    }
    Ok(inst)
}

pub fn st_instance(
    spec: &StSpec,
    graph: RoutingGraph,
    window: usize,
    sigma: f64,
    max_paths: usize,
) -> Result<RoutingInstance> {
    let congestion = spec.congestion.build(graph.n_edges(), window)?;
    let mut inst = RoutingInstance::new(graph, window, congestion, max_paths)?.with_noise(sigma)?;
    if let Some(h) = initial_history(&spec.initial_history, window)? {
        inst = inst.with_initial_history(h)?;
    }
    Ok(inst)
}

/// The contextual instance for one seed; `theta*` is drawn like a
/// unit-normalized context when not given.
pub fn cb_instance(spec: &CbSpec, window: usize, sigma: f64, seed: u64) -> Result<CarcbInstance> {
    let theta = match &spec.theta_star {
        Some(t) => t.clone(),
        None => carcb::unit_uniform_vector(spec.dim, &mut SimRng::with_stream(seed, Stream::Instance)),
    };
    let congestion = spec.congestion.build(spec.n_arms, window)?;
    let mut inst = CarcbInstance::new(theta, window, congestion)?.with_noise(sigma)?;
    if let Some(h) = initial_history(&spec.initial_history, window)? {
        inst = inst.with_initial_history(h)?;
    }
    Ok(inst)
}

fn baselines_on<E: BanditEnv>(
    cfg: &ExperimentConfig,
    env: &E,
    seed: u64,
    comparator: &[f64],
    traces: &mut Vec<(String, RegretTrace)>,
) -> Result<()> {
    for &b in &cfg.baselines {
        let traj = run_baseline(
            b,
            env,
            cfg.horizon,
            &mut SimRng::with_stream(seed, Stream::Noise),
            &mut SimRng::with_stream(seed, Stream::Algorithm),
        )?;
        traces.push((b.name().to_string(), RegretTrace::new(traj, comparator.to_vec())?));
    }
    Ok(())
}

fn run_replication(cfg: &ExperimentConfig, prep: &Prepared, window: usize, seed: u64) -> Result<RepOutcome> {
    let mut noise = SimRng::with_stream(seed, Stream::Noise);
    let t = cfg.horizon;
    let mut traces = Vec::with_capacity(1 + cfg.baselines.len());
    let (comparator, episodes) = match cfg.mode {
        Mode::Mab => {
            let inst = mab_instance(cfg.mab.as_ref().expect("validated"), window, cfg.noise_sigma, seed)?;
            let comparator = mab_comparator(&inst, t, &cfg.limits)?;
            let run = run_carmab(&inst, &cfg.carmab_config(), &mut noise)?;
            traces.push(("carmab".to_string(), RegretTrace::new(run.trajectory, comparator.per_step.clone())?));
            baselines_on(cfg, &inst, seed, &comparator.per_step, &mut traces)?;
            (comparator, run.episodes.len())
        }
        Mode::St => {
            let spec = cfg.st.as_ref().expect("validated");
            let graph = prep.graph.clone().expect("graph prepared for st mode");
            let inst = st_instance(spec, graph, window, cfg.noise_sigma, cfg.limits.max_paths)?;
            let comparator = st_comparator(&inst, t, &cfg.limits)?;
            let run = run_carmab_st(&inst, &cfg.carmab_config(), &mut noise)?;
            traces.push(("carmab_st".to_string(), RegretTrace::new(run.trajectory, comparator.per_step.clone())?));
            baselines_on(cfg, &inst, seed, &comparator.per_step, &mut traces)?;
            (comparator, run.episodes.len())
        }
        Mode::CbKnown | Mode::CbStochastic => {
            let spec = cfg.cb.as_ref().expect("validated");
            let inst = cb_instance(spec, window, cfg.noise_sigma, seed)?;
            let mut ctx_rng = SimRng::with_stream(seed, Stream::Contexts);
            let contexts = match (&prep.fixed_contexts, &prep.distribution) {
                (Some(fixed), _) => fixed.clone(),
                (None, Some(dist)) => dist.sample_table(t, cfg.algorithm.clip_features, &mut ctx_rng),
                (None, None) => ContextTable::uniform_normalized(t, spec.n_arms, spec.dim, &mut ctx_rng),
            };
            let ccfg = CarcbConfig {
                horizon: t,
                ridge: cfg.algorithm.ridge,
                clip_features: cfg.algorithm.clip_features,
                initial_theta: spec.initial_theta.clone(),
                max_states: cfg.limits.max_states,
                max_dp_cells: cfg.limits.max_dp_cells,
            };
            let comparator = cb_comparator(&inst, &contexts, t, &cfg.limits)?;
            let mut alg = SimRng::with_stream(seed, Stream::Algorithm);
            let run = if cfg.mode == Mode::CbStochastic {
                let dist = prep.distribution.as_ref().expect("validated gaussian contexts");
                carcb::run_carcb_stochastic(&inst, dist, &contexts, &ccfg, &mut noise, &mut alg)?
            } else {
                carcb::run_carcb_known(&inst, &contexts, &ccfg, &mut noise, &mut alg)?
            };
            traces.push(("carcb".to_string(), RegretTrace::new(run.trajectory, comparator.per_step.clone())?));
            let env = ContextualEnv {
                instance: &inst,
                contexts: &contexts,
            };
            baselines_on(cfg, &env, seed, &comparator.per_step, &mut traces)?;
            (comparator, run.epochs.len())
        }
        Mode::Oracle | Mode::Check => {
            return Err(Error::config(format!("mode {} has no replications", cfg.mode.as_str())))
        }
    };
    Ok(RepOutcome {
        seed,
        traces,
        comparator,
        episodes,
    })
}

/// Run every replication for every window, in memory.
pub fn run_in_memory(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(Vec<WindowResult>, u64)> {
    cfg.validate()?;
    let prep = prepare(cfg, &opts.base_dir)?;
    let base_seed = opts.seed.unwrap_or(cfg.replications.base_seed);
    let mut windows = Vec::new();
    for window in cfg.window_list() {
        let reps = map_indexed(cfg.replications.count, opts.execution, |r| {
            run_replication(cfg, &prep, window, base_seed.wrapping_add(r as u64))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        windows.push(WindowResult { window, reps });
    }
    Ok((windows, base_seed))
}

/// Run the experiment and, when an output directory is set, write traces,
/// aggregates and `metadata.json`.
pub fn run_experiment(cfg: &ExperimentConfig, config_bytes: &[u8], opts: &RunOptions) -> Result<ExperimentOutput> {
    let (windows, base_seed) = run_in_memory(cfg, opts)?;
    let thin = opts.thin.unwrap_or(cfg.thin);
    let points = log_points(cfg.horizon, thin);

    let metadata = Metadata {
        config_sha256: config_hash(config_bytes),
        rng: RNG_ALGORITHM_ID,
        versions: VERSIONS,
        mode: cfg.mode.as_str(),
        horizon: cfg.horizon,
        base_seed,
        replications: cfg.replications.count,
        thin,
        logged_points: points.len(),
        windows: windows
            .iter()
            .map(|w| WindowMeta {
                window: w.window,
                algorithms: w.reps[0].traces.iter().map(|(n, _)| n.clone()).collect(),
                reps: w
                    .reps
                    .iter()
                    .map(|r| RepMeta {
                        seed: r.seed,
                        episodes: r.episodes,
                        comparator_gap_certified: r.comparator.gap_certified(),
                        comparator: r.comparator.clone(),
                        final_avg_regret_mean: r.traces.iter().map(|(_, t)| t.avg_regret_mean(t.len())).collect(),
                    })
                    .collect(),
            })
            .collect(),
    };

    if let Some(out) = opts.out.as_ref().or(cfg.output.as_ref().map(PathBuf::from).as_ref()) {
        write_outputs(out, &windows, &points, &metadata, opts.execution)?;
    }
    Ok(ExperimentOutput {
        windows,
        points,
        metadata,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_outputs(
    out: &Path,
    windows: &[WindowResult],
    points: &[usize],
    metadata: &Metadata,
    exec: Execution,
) -> Result<()> {
    create_dir(out)?;
    for w in windows {
        let dir = out.join(format!("window_{}", w.window));
        create_dir(&dir)?;
        let n_algs = w.reps[0].traces.len();
        for i in 0..n_algs {
            let name = &w.reps[0].traces[i].0;
            let alg_dir = dir.join(name);
            create_dir(&alg_dir)?;
            map_indexed(w.reps.len(), exec, |r| {
                w.reps[r].traces[i]
                    .1
                    .write_csv_file(&alg_dir.join(format!("rep_{r:04}.csv")), points)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let traces: Vec<RegretTrace> = w.reps.iter().map(|r| r.traces[i].1.clone()).collect();
            write_aggregate_file(&dir.join(format!("{name}_aggregate.csv")), &aggregate(&traces, points))?;
        }
    }
    let path = out.join("metadata.json");
    let mut json = serde_json::to_vec_pretty(metadata)?;
    json.push(b'\n');
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Exact planning facts about the configured instance.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub setting: &'static str,
    pub window: usize,
    pub n_actions: usize,
    pub n_states: usize,
    pub rho: f64,
    pub cycle_states: Vec<usize>,
    pub cycle_actions: Vec<usize>,
    pub diameter: Option<usize>,
    pub horizon: usize,
    pub stationary_total: f64,
    pub dp_value: Option<f64>,
    pub gap_bound: f64,
}

/// Oracle answers for each window. Random base rewards use the base seed.
pub fn run_oracle(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<OracleReport>> {
    cfg.validate()?;
    let seed = opts.seed.unwrap_or(cfg.replications.base_seed);
    let prep = prepare(cfg, &opts.base_dir)?;
    let mut reports = Vec::new();
    for window in cfg.window_list() {
        let (setting, mdp, comparator, start_len) = if let Some(spec) = &cfg.mab {
            let inst = mab_instance(spec, window, cfg.noise_sigma, seed)?;
            let mdp = build_mdp(inst.n_arms(), window, &inst.reward_table(), cfg.limits.max_states)?;
            ("mab", mdp, mab_comparator(&inst, cfg.horizon, &cfg.limits)?, inst.n_arms())
        } else {
            let spec = cfg.st.as_ref().expect("validated");
            let graph = prep.graph.clone().expect("graph prepared for oracle mode");
            let inst = st_instance(spec, graph, window, cfg.noise_sigma, cfg.limits.max_paths)?;
            let mdp = crate::carmab_st::build_st_mdp(&inst, &inst.edge_reward_table(), cfg.limits.max_states)?;
            ("st", mdp, st_comparator(&inst, cfg.horizon, &cfg.limits)?, inst.n_paths())
        };
        let plan = mdp::karp_max_mean_cycle(&mdp);
        reports.push(OracleReport {
            setting,
            window,
            n_actions: start_len,
            n_states: mdp.n_states(),
            rho: plan.rho,
            cycle_states: plan.cycle_states,
            cycle_actions: plan.cycle_actions,
            diameter: match mdp::diameter(&mdp) {
                Diameter::Finite(d) => Some(d),
                Diameter::Infinite => None,
            },
            horizon: cfg.horizon,
            stationary_total: comparator.total,
            dp_value: comparator.dp_value,
            gap_bound: comparator.gap_bound,
        });
    }
    if let Some(out) = opts.out.as_ref().or(cfg.output.as_ref().map(PathBuf::from).as_ref()) {
        create_dir(out)?;
        let path = out.join("oracle.json");
        let mut json = serde_json::to_vec_pretty(&reports)?;
        json.push(b'\n');
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    }
    Ok(reports)
}

/// Regret trace of a finished trajectory against a comparator.
pub fn trace_against(traj: Trajectory, comparator: &Comparator) -> Result<RegretTrace> {
    RegretTrace::new(traj, comparator.per_step.clone())
}
