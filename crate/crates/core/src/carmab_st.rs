//! Congested routing: each round the learner picks an s-t path, every edge
//! on it pays its congested mean plus noise, and congestion is counted per
//! edge over the paths in the trailing window.
//!
//! Paths are padded to a common length `L` with synthetic zero-reward edges
//! that never congest; those padding slots are counted but never estimated.

use crate::carmab::{optimistic_rewards, plan_on, CarmabConfig, CountTables, EpisodeRecord};
use crate::env::{CongestionTable, History, SimRng};
use crate::error::{Error, Result};
use crate::mdp::{DeterministicMdp, Policy, StateCodec};
use crate::trajectory::Trajectory;

pub const DEFAULT_MAX_PATHS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub mu: f64,
}

/// Directed graph with a designated source and sink.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingGraph {
    n_vertices: usize,
    edges: Vec<Edge>,
    source: usize,
    sink: usize,
}

impl RoutingGraph {
    pub fn new(n_vertices: usize, edges: Vec<Edge>, source: usize, sink: usize) -> Result<Self> {
        if source >= n_vertices || sink >= n_vertices {
            return Err(Error::domain("source and sink must be graph vertices"));
        }
        if source == sink {
            return Err(Error::domain("source and sink must differ"));
        }
        for (i, e) in edges.iter().enumerate() {
            if e.from >= n_vertices || e.to >= n_vertices {
                return Err(Error::domain(format!("edge {i} has an endpoint outside the graph")));
            }
            if !(0.0..=1.0).contains(&e.mu) {
                return Err(Error::domain(format!("edge {i} mean {} outside [0, 1]", e.mu)));
            }
        }
        Ok(Self {
            n_vertices,
            edges,
            source,
            sink,
        })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }
}

/// Every simple source-to-sink path as a list of edge indices, in
/// lexicographic order of those indices.
pub fn enumerate_st_paths(g: &RoutingGraph, max_paths: usize) -> Result<Vec<Vec<usize>>> {
    let mut out_edges = vec![Vec::new(); g.n_vertices];
    for (i, e) in g.edges.iter().enumerate() {
        out_edges[e.from].push(i);
    }
    let mut paths = Vec::new();
    let mut visited = vec![false; g.n_vertices];
    let mut stack: Vec<usize> = Vec::new();

    fn walk(
        g: &RoutingGraph,
        out_edges: &[Vec<usize>],
        v: usize,
        visited: &mut [bool],
        stack: &mut Vec<usize>,
        paths: &mut Vec<Vec<usize>>,
        max_paths: usize,
    ) -> Result<()> {
        if v == g.sink {
            if paths.len() == max_paths {
                return Err(Error::Capacity {
                    what: "s-t paths",
                    required: max_paths as u128 + 1,
                    cap: max_paths as u128,
                });
            }
            paths.push(stack.clone());
            return Ok(());
        }
        visited[v] = true;
        for &e in &out_edges[v] {
            let to = g.edges[e].to;
            if !visited[to] {
                stack.push(e);
                walk(g, out_edges, to, visited, stack, paths, max_paths)?;
                stack.pop();
            }
        }
        visited[v] = false;
        Ok(())
    }

    walk(g, &out_edges, g.source, &mut visited, &mut stack, &mut paths, max_paths)?;
    if paths.is_empty() {
        return Err(Error::domain("no path from source to sink"));
    }
    Ok(paths)
}

/// A routing problem with its enumerated, padded path set.
#[derive(Debug, Clone)]
pub struct RoutingInstance {
    graph: RoutingGraph,
    window: usize,
    congestion: CongestionTable,
    noise_sigma: f64,
    paths: Vec<Vec<usize>>,
    path_len: usize,
    initial_history: History,
}

impl RoutingInstance {
    /// `congestion` has one row per real edge over counts `0..=window`.
    pub fn new(
        graph: RoutingGraph,
        window: usize,
        congestion: CongestionTable,
        max_paths: usize,
    ) -> Result<Self> {
        if window == 0 {
            return Err(Error::domain("window must be at least 1"));
        }
        if congestion.n_actions() != graph.n_edges() || congestion.window() != window {
            return Err(Error::domain(format!(
                "edge congestion table must be {} x {}",
                graph.n_edges(),
                window + 1
            )));
        }
        let paths = enumerate_st_paths(&graph, max_paths)?;
        let path_len = paths.iter().map(Vec::len).max().unwrap_or(0);
        let initial_history = History::filled(0, window, paths.len())?;
        Ok(Self {
            graph,
            window,
            congestion,
            noise_sigma: 1.0,
            paths,
            path_len,
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
            return Err(Error::domain("initial path history must have window length"));
        }
        self.initial_history = History::new(window, self.paths.len())?;
        Ok(self)
    }

    pub fn graph(&self) -> &RoutingGraph {
        &self.graph
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Real edges of path `p` (without padding).
    pub fn path(&self, p: usize) -> &[usize] {
        &self.paths[p]
    }

    /// Common padded length `L`.
    pub fn path_len(&self) -> usize {
        self.path_len
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn congestion(&self) -> &CongestionTable {
        &self.congestion
    }

    pub fn initial_history(&self) -> &History {
        &self.initial_history
    }

    /// Count units: real edges first, then one padding slot per path position.
    pub fn n_units(&self) -> usize {
        self.graph.n_edges() + self.path_len
    }

    /// Units on padded path `p`, `L` of them.
    pub fn padded_units(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        let real = &self.paths[p];
        let e = self.graph.n_edges();
        real.iter().copied().chain((real.len()..self.path_len).map(move |pos| e + pos))
    }

    /// Per-unit counts `#(h, e)` over the paths in a window.
    pub fn unit_counts(&self, window: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_units()];
        for &p in window {
            for u in self.padded_units(p) {
                counts[u] += 1;
            }
        }
        counts
    }

    /// True `r(e, j)` for real edges.
    pub fn edge_reward_table(&self) -> Vec<Vec<f64>> {
        self.graph
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| (0..=self.window).map(|j| e.mu * self.congestion.factor(i, j)).collect())
            .collect()
    }

    /// Noiseless total reward of path `p` in history window `h`.
    pub fn path_mean(&self, h: &[usize], p: usize) -> f64 {
        let counts = self.unit_counts(h);
        self.paths[p]
            .iter()
            .map(|&e| self.graph.edges[e].mu * self.congestion.factor(e, counts[e]))
            .sum()
    }
}

/// Observed reward of one round.
#[derive(Debug, Clone, PartialEq)]
pub struct PathObservation {
    pub total: f64,
    pub mean_total: f64,
    /// One entry per padded slot; padding slots are exactly zero.
    pub per_edge: Vec<f64>,
    /// Count `#(h, e)` seen by each padded slot.
    pub counts: Vec<usize>,
}

/// Play path `p` in history `h` and draw independent noise per real edge.
pub fn path_reward(
    inst: &RoutingInstance,
    h: &History,
    p: usize,
    rng: &mut SimRng,
) -> Result<PathObservation> {
    if p >= inst.n_paths() {
        return Err(Error::domain(format!("path {p} not enumerated")));
    }
    let counts = inst.unit_counts(h.window());
    let n_real = inst.graph.n_edges();
    let mut obs = PathObservation {
        total: 0.0,
        mean_total: 0.0,
        per_edge: Vec::with_capacity(inst.path_len),
        counts: Vec::with_capacity(inst.path_len),
    };
    for u in inst.padded_units(p) {
        let j = counts[u];
        let r = if u < n_real {
            let mean = inst.graph.edges[u].mu * inst.congestion.factor(u, j);
            obs.mean_total += mean;
            mean + inst.noise_sigma * rng.standard_normal()
        } else {
            0.0
        };
        obs.total += r;
        obs.per_edge.push(r);
        obs.counts.push(j);
    }
    Ok(obs)
}

/// Path-history MDP with `r[s][p] = sum_{e in p} edge_rewards[e][#(s, e)]`.
pub fn build_st_mdp(
    inst: &RoutingInstance,
    edge_rewards: &[Vec<f64>],
    max_states: usize,
) -> Result<DeterministicMdp> {
    let n_real = inst.graph.n_edges();
    if edge_rewards.len() != n_real || edge_rewards.iter().any(|r| r.len() != inst.window + 1) {
        return Err(Error::domain(format!(
            "edge reward table must be {n_real} x {}",
            inst.window + 1
        )));
    }
    let codec = StateCodec::new(inst.n_paths(), inst.window, max_states)?;
    Ok(DeterministicMdp::from_codec(codec, |w, p| {
        let counts = inst.unit_counts(w);
        inst.paths[p].iter().map(|&e| edge_rewards[e][counts[e]]).sum()
    }))
}

#[derive(Debug, Clone)]
pub struct CarmabStRun {
    pub trajectory: Trajectory,
    pub episodes: Vec<EpisodeRecord>,
    /// Per-unit tables; padding units follow the real edges.
    pub counts: CountTables,
    pub final_policy: Policy,
}

pub fn run_carmab_st(
    inst: &RoutingInstance,
    cfg: &CarmabConfig,
    rng: &mut SimRng,
) -> Result<CarmabStRun> {
    cfg.validate()?;
    let window = inst.window;
    let n_real = inst.graph.n_edges();
    let codec = StateCodec::new(inst.n_paths(), window, cfg.max_states)?;
    let truth = inst.edge_reward_table();
    let log_units = inst.path_len * n_real;

    let mut counts = CountTables::new(inst.n_units(), window);
    let mut hist = inst.initial_history.clone();
    let mut state = codec.encode_history(&hist);
    let mut trajectory = Trajectory::with_capacity(cfg.horizon);
    let mut episodes = Vec::new();
    let mut policy = Policy::constant(codec.n_states(), 0);
    let mut t = 1;

    while t <= cfg.horizon {
        counts.rollover();
        let mut est = counts.estimate(t, log_units, window, cfg.delta, cfg.width_constant);
        est.r_hat.truncate(n_real);
        est.width.truncate(n_real);
        let r_tilde = optimistic_rewards(&est);
        let mdp = build_st_mdp(inst, &r_tilde, cfg.max_states)?;
        let plan = plan_on(&mdp)?;
        episodes.push(EpisodeRecord {
            start: t,
            planned_gain: plan.cycle.rho,
            covered: est.covers(&truth),
        });
        policy = plan.policy;
        let last_episode = cfg.episode_cap.is_some_and(|cap| episodes.len() >= cap);
        let episode = episodes.len() as u32;

        while t <= cfg.horizon {
            let p = policy.action(state);
            let obs = path_reward(inst, &hist, p, rng)?;
            trajectory.push(p, obs.total, obs.mean_total, episode);
            let mut stop = false;
            for ((u, &j), &r) in inst.padded_units(p).zip(&obs.counts).zip(&obs.per_edge) {
                counts.update(u, j, r);
                stop |= u < n_real && counts.doubled(u, j);
            }
            hist.push(p)?;
            state = codec.shift(state, p);
            t += 1;
            if stop && !last_episode {
                break;
            }
        }
    }

    Ok(CarmabStRun {
        trajectory,
        episodes,
        counts,
        final_policy: policy,
    })
}
