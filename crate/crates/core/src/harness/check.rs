//! Self-checks of the planners and learners against exact oracles.

use serde::Serialize;

use crate::carcb::{self, ContextTable};
use crate::carmab::{episode_bound, run_carmab, CarmabConfig};
use crate::env::{CongestionTable, History, MabInstance, SimRng};
use crate::harness::config::CheckSpec;
use crate::mdp::{self, build_mdp, DeterministicMdp, Diameter, StateCodec, DEFAULT_MAX_DP_CELLS, DEFAULT_MAX_STATES};
use crate::oracle;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub properties: Vec<PropertyReport>,
}

struct Tally {
    name: &'static str,
    cases: usize,
    failures: usize,
    first_failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    fn finish(self) -> PropertyReport {
        PropertyReport {
            name: self.name,
            cases: self.cases,
            failures: self.failures,
            passed: self.failures == 0 && self.cases > 0,
            first_failure: self.first_failure,
        }
    }
}

/// Random nonincreasing congestion rows in `(0, 1]`.
pub fn random_congestion(k: usize, window: usize, rng: &mut SimRng) -> CongestionTable {
    let rows = (0..k)
        .map(|_| {
            let mut row: Vec<f64> = (0..=window).map(|_| 0.05 + 0.95 * rng.uniform()).collect();
            row.sort_by(|a, b| b.total_cmp(a));
            row
        })
        .collect();
    CongestionTable::from_rows(rows).expect("generated rows are valid")
}

/// Random history MDP with `k` arms and the given window.
pub fn random_mab(k: usize, window: usize, rng: &mut SimRng) -> MabInstance {
    let mu: Vec<f64> = (0..k).map(|_| rng.uniform()).collect();
    let start: Vec<usize> = (0..window).map(|_| rng.below(k)).collect();
    MabInstance::new(mu, window, random_congestion(k, window, rng))
        .and_then(|i| i.with_initial_history(start))
        .expect("generated instance is valid")
}

fn mdp_of(inst: &MabInstance) -> DeterministicMdp {
    build_mdp(inst.n_arms(), inst.window(), &inst.reward_table(), DEFAULT_MAX_STATES).expect("small instance")
}

/// Every state reaches every other in at most `window` steps, and some pair
/// needs exactly `window` when there are at least two arms.
pub fn diameter_holds(mdp: &DeterministicMdp, n_arms: usize, window: usize) -> bool {
    match mdp::diameter(mdp) {
        Diameter::Finite(d) => d <= window && (n_arms < 2 || d == window),
        Diameter::Infinite => false,
    }
}

fn check_diameter() -> PropertyReport {
    let mut t = Tally::new("diameter");
    for k in 2..=4 {
        for w in 1..=3 {
            let mdp = build_mdp(k, w, &vec![vec![0.5; w + 1]; k], DEFAULT_MAX_STATES).expect("small");
            t.record(diameter_holds(&mdp, k, w), || format!("K={k} window={w}: {:?}", mdp::diameter(&mdp)));
        }
    }
    t.finish()
}

fn check_karp(cases: usize, rng: &mut SimRng) -> [PropertyReport; 2] {
    let mut exact = Tally::new("karp_vs_enumeration");
    for case in 0..cases {
        let k = 1 + rng.below(3);
        let w = 1 + rng.below(2);
        let mdp = mdp_of(&random_mab(k, w, rng));
        let rho = mdp::karp_max_mean_cycle(&mdp).rho;
        let truth = oracle::max_mean_simple_cycle(&mdp, 10_000_000);
        exact.record(truth.is_some_and(|v| (v - rho).abs() <= 1e-9), || {
            format!("case {case} (K={k}, window={w}): karp {rho} vs enumeration {truth:?}")
        });
    }
    let mut larger = Tally::new("karp_vs_bisection");
    for case in 0..cases.div_ceil(4) {
        let (k, w) = [(4, 3), (3, 3), (2, 5), (8, 2)][case % 4];
        let mdp = mdp_of(&random_mab(k, w, rng));
        let rho = mdp::karp_max_mean_cycle(&mdp).rho;
        let bis = oracle::max_mean_cycle_bisection(&mdp, 1e-11);
        larger.record((bis - rho).abs() <= 1e-8, || {
            format!("case {case} (K={k}, window={w}): karp {rho} vs bisection {bis}")
        });
    }
    [exact.finish(), larger.finish()]
}

/// Total reward of following `actions` from `start`, summed forward.
pub fn sequence_value(
    actions: &[usize],
    start: usize,
    next: impl Fn(usize, usize) -> usize,
    reward: impl Fn(usize, usize, usize) -> f64,
) -> f64 {
    let mut s = start;
    let mut total = 0.0;
    for (t, &a) in actions.iter().enumerate() {
        total += reward(t, s, a);
        s = next(s, a);
    }
    total
}

/// The DP found the brute-force optimum: same value up to summation order,
/// and its own full-length sequence achieves it. The sequences themselves
/// may differ only on exact ties.
pub fn same_optimum(dp_value: f64, dp_achieved: f64, dp_seq: &[usize], bf_value: f64, bf_seq: &[usize]) -> bool {
    let tol = 1e-12 * bf_value.abs().max(1.0);
    (dp_value - bf_value).abs() <= tol && (dp_achieved - bf_value).abs() <= tol && dp_seq.len() == bf_seq.len()
}

fn check_dp(cases: usize, rng: &mut SimRng) -> [PropertyReport; 2] {
    let mut mab = Tally::new("finite_horizon_dp_vs_brute_force");
    let mut ctx = Tally::new("known_context_dp_vs_brute_force");
    for case in 0..cases {
        let k = 1 + rng.below(3);
        let w = 1 + rng.below(2);
        let horizon = 1 + rng.below(6);
        let inst = random_mab(k, w, rng);
        let mdp = mdp_of(&inst);
        let start = mdp.codec().expect("codec").encode_history(inst.initial_history());
        let plan = mdp::finite_horizon_dp(&mdp, horizon, start, DEFAULT_MAX_DP_CELLS).expect("small");
        let (bv, bseq) = oracle::brute_force_horizon(&mdp, horizon, start);
        let achieved = sequence_value(&plan.actions, start, |s, a| mdp.next(s, a), |_, s, a| mdp.reward(s, a));
        mab.record(same_optimum(plan.value, achieved, &plan.actions, bv, &bseq), || {
            format!("case {case}: dp {} {:?} vs brute {bv} {bseq:?}", plan.value, plan.actions)
        });

        let d = 1 + rng.below(4);
        let contexts = ContextTable::uniform_normalized(horizon, k, d, rng);
        let theta = carcb::unit_uniform_vector(d, rng);
        let c = inst.congestion();
        let h0 = inst.initial_history();
        let plan = carcb::dp_plan_known(&theta, &contexts, h0, c, DEFAULT_MAX_STATES, DEFAULT_MAX_DP_CELLS)
            .expect("small");
        let codec = StateCodec::new(k, w, DEFAULT_MAX_STATES).expect("small");
        let reward = |t: usize, s: usize, a: usize| {
            let h: History = codec.decode_history(s);
            let base: f64 = theta.iter().zip(contexts.feature(t, a)).map(|(x, y)| x * y).sum();
            base * c.factor(a, h.count(a).expect("valid action"))
        };
        let s0 = codec.encode_history(h0);
        let (bv, bseq) = oracle::brute_force_sequences(k, horizon, s0, |s, a| codec.shift(s, a), reward);
        let achieved = sequence_value(&plan.actions, s0, |s, a| codec.shift(s, a), reward);
        ctx.record(same_optimum(plan.value, achieved, &plan.actions, bv, &bseq), || {
            format!("case {case}: dp {} {:?} vs brute {bv} {bseq:?}", plan.value, plan.actions)
        });
    }
    [mab.finish(), ctx.finish()]
}

fn check_comparator_bound(cases: usize, horizon: usize, rng: &mut SimRng) -> PropertyReport {
    let mut t = Tally::new("comparator_bound");
    for case in 0..cases {
        let k = 1 + rng.below(3);
        let w = 1 + rng.below(3);
        let inst = random_mab(k, w, rng);
        let mdp = mdp_of(&inst);
        let start = mdp.codec().expect("codec").encode_history(inst.initial_history());
        let rho = mdp::karp_max_mean_cycle(&mdp).rho;
        let dp = mdp::finite_horizon_dp(&mdp, horizon, start, DEFAULT_MAX_DP_CELLS).expect("small");
        let bound = horizon as f64 * rho + w as f64 * mdp.max_reward();
        t.record(dp.value <= bound + 1e-9, || format!("case {case}: dp {} > bound {bound}", dp.value));
    }
    t.finish()
}

fn check_learner(spec: &CheckSpec) -> [PropertyReport; 2] {
    let mut coverage = Tally::new("confidence_coverage");
    let mut episodes = Tally::new("episode_bound");
    let delta = 0.1;
    let inst = MabInstance::new(vec![0.9, 0.6, 0.3], 2, CongestionTable::reciprocal(3, 2))
        .and_then(|i| i.with_noise(0.1))
        .expect("fixed instance");
    let cfg = CarmabConfig {
        delta,
        horizon: spec.horizon.max(1),
        ..Default::default()
    };
    let pairs = 3 * 3;
    let mut covered = 0;
    for r in 0..spec.coverage_replications {
        let run = run_carmab(&inst, &cfg, &mut SimRng::seed_from_u64(spec.seed.wrapping_add(r as u64)))
            .expect("fixed instance runs");
        if run.episodes.iter().all(|e| e.covered) {
            covered += 1;
        }
        let bound = episode_bound(pairs, cfg.horizon);
        episodes.record(run.episodes.len() as f64 <= bound, || {
            format!("replication {r}: {} episodes > {bound}", run.episodes.len())
        });
    }
    // One aggregate case: the coverage event holds in at least 1 - 2 delta
    // of replications.
    let n = spec.coverage_replications;
    coverage.record(n > 0 && covered as f64 >= (1.0 - 2.0 * delta) * n as f64, || {
        format!("covered in {covered} of {n} replications")
    });
    [coverage.finish(), episodes.finish()]
}

pub fn check_suite(spec: &CheckSpec) -> CheckReport {
    let mut rng = SimRng::seed_from_u64(spec.seed);
    let mut properties = vec![check_diameter()];
    properties.extend(check_karp(spec.cases, &mut rng));
    properties.extend(check_dp(spec.cases, &mut rng));
    properties.push(check_comparator_bound(spec.cases, spec.horizon, &mut rng));
    properties.extend(check_learner(spec));
    CheckReport {
        passed: properties.iter().all(|p| p.passed),
        properties,
    }
}
