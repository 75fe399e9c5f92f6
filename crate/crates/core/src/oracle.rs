//! Brute-force reference computations for small instances.
//!
//! Nothing here uses backward recursion: values come from explicit path
//! enumeration or forward propagation of state distributions, and optimal
//! policies from exhaustive policy enumeration. These routines back the
//! `oracle-check` command and the cross-checks in the test suites.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::envs::{make_random_mdp, make_stochastic_chain};
use crate::mdp::{evaluate_policy, mean_episodic_reward, Policy, TabularMdp};
use crate::metrics::{sandwich_check, TrueModel};
use crate::planner::{backward_induction, enumerate_gaps, enumerate_policies, is_optimal_policy, DEFAULT_TIE_TOL};
use crate::posterior::{init_belief, MdpBelief, PriorConfig};

/// Expected return from `(start, stage)` by summing over every state path.
pub fn path_enumeration_value(mdp: &TabularMdp, policy: &Policy, start: usize, stage: usize) -> f64 {
    fn walk(mdp: &TabularMdp, policy: &Policy, s: usize, h: usize, prob: f64, acc: f64) -> f64 {
        let a = policy.action(s, h);
        let acc = acc + mdp.mean_reward(s, a);
        if h + 1 == mdp.horizon() {
            return prob * acc;
        }
        mdp.transition_row(s, a)
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(next, p)| walk(mdp, policy, next, h + 1, prob * p, acc))
            .sum()
    }
    walk(mdp, policy, start, stage, 1.0, 0.0)
}

/// Expected return from an initial distribution at `stage`, by pushing the
/// state distribution forward one stage at a time.
pub fn forward_value(mdp: &TabularMdp, policy: &Policy, dist: &[f64], stage: usize) -> f64 {
    let s_n = mdp.num_states();
    let mut d = dist.to_vec();
    let mut total = 0.0;
    for h in stage..mdp.horizon() {
        let mut next = vec![0.0; s_n];
        for (s, &w) in d.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let a = policy.action(s, h);
            total += w * mdp.mean_reward(s, a);
            for (n, p) in mdp.transition_row(s, a).iter().enumerate() {
                next[n] += w * p;
            }
        }
        d = next;
    }
    total
}

/// `V_π(s, h)` for all `(s, h)`, stage-major, by forward propagation.
pub fn forward_value_table(mdp: &TabularMdp, policy: &Policy) -> Vec<f64> {
    let s_n = mdp.num_states();
    let mut out = Vec::with_capacity(s_n * mdp.horizon());
    for h in 0..mdp.horizon() {
        for s in 0..s_n {
            let mut point = vec![0.0; s_n];
            point[s] = 1.0;
            out.push(forward_value(mdp, policy, &point, h));
        }
    }
    out
}

/// Exhaustive optimum: best value per `(s, h)` and the policies attaining
/// it at every `(s, h)` within `tol`.
pub fn enumerate_optimal(mdp: &TabularMdp, tol: f64) -> (Vec<f64>, Vec<Policy>) {
    let all: Vec<(Policy, Vec<f64>)> = enumerate_policies(mdp.num_states(), mdp.num_actions(), mdp.horizon())
        .map(|p| {
            let v = forward_value_table(mdp, &p);
            (p, v)
        })
        .collect();
    let mut best = vec![f64::NEG_INFINITY; mdp.num_states() * mdp.horizon()];
    for (_, v) in &all {
        for (b, x) in best.iter_mut().zip(v) {
            *b = b.max(*x);
        }
    }
    let optimal = all
        .into_iter()
        .filter(|(_, v)| v.iter().zip(&best).all(|(x, b)| *x >= b - tol))
        .map(|(p, _)| p)
        .collect();
    (best, optimal)
}

/// Outcome of one oracle check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn random_small_mdp(seed: u64) -> TabularMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = |rng: &mut ChaCha8Rng| rand::Rng::random_range(rng, 1..=3usize);
    let (s, a, h) = (dims(&mut rng), dims(&mut rng), dims(&mut rng));
    make_random_mdp(s, a, h, &mut rng, 1.0).expect("valid dimensions")
}

/// Policy evaluation against path enumeration on random MDPs.
pub fn check_policy_evaluation(num_mdps: usize, seed: u64) -> CheckResult {
    let mut worst: f64 = 0.0;
    for i in 0..num_mdps as u64 {
        let m = random_small_mdp(seed.wrapping_add(i));
        for p in enumerate_policies(m.num_states(), m.num_actions(), m.horizon()).take(64) {
            let v = evaluate_policy(&m, &p).expect("shapes match");
            for h in 0..m.horizon() {
                for s in 0..m.num_states() {
                    worst = worst.max((v.v(s, h) - path_enumeration_value(&m, &p, s, h)).abs());
                }
            }
        }
    }
    CheckResult {
        name: "policy-evaluation",
        passed: worst <= 1e-9,
        detail: format!("{num_mdps} MDPs, max |V - V_paths| = {worst:.3e}"),
    }
}

/// Backward induction against exhaustive policy enumeration.
pub fn check_planner(num_mdps: usize, seed: u64) -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut set_mismatches = 0;
    for i in 0..num_mdps as u64 {
        let m = random_small_mdp(seed.wrapping_add(i));
        let sets = backward_induction(&m, DEFAULT_TIE_TOL);
        let (best, optimal) = enumerate_optimal(&m, DEFAULT_TIE_TOL * m.horizon() as f64);
        for h in 0..m.horizon() {
            for s in 0..m.num_states() {
                worst = worst.max((sets.values().v(s, h) - best[h * m.num_states() + s]).abs());
            }
        }
        let from_sets: Vec<Policy> = sets.iter_policies().collect();
        let mut a = from_sets.clone();
        let mut b = optimal.clone();
        a.sort();
        b.sort();
        if a != b || !optimal.iter().all(|p| is_optimal_policy(&sets, p)) {
            set_mismatches += 1;
        }
    }
    CheckResult {
        name: "planner",
        passed: worst <= 1e-9 && set_mismatches == 0,
        detail: format!("{num_mdps} MDPs, max |V* - V_enum| = {worst:.3e}, set mismatches = {set_mismatches}"),
    }
}

/// Conjugate closed forms after a synthetic observation stream.
pub fn check_conjugate(num_obs: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s_n, a_n) = (3, 2);
    let mut belief = init_belief(s_n, a_n, 1, vec![1.0, 0.0, 0.0], PriorConfig::default()).expect("valid");
    let mut counts = vec![0u64; s_n * a_n * s_n];
    let mut sums = vec![0.0f64; s_n * a_n];
    let mut ns = vec![0u64; s_n * a_n];
    for _ in 0..num_obs {
        let s = rand::Rng::random_range(&mut rng, 0..s_n);
        let a = rand::Rng::random_range(&mut rng, 0..a_n);
        let n = rand::Rng::random_range(&mut rng, 0..s_n);
        let r: f64 = rand::Rng::random_range(&mut rng, -2.0..2.0);
        belief.observe(s, a, r, n).expect("valid indices");
        counts[(s * a_n + a) * s_n + n] += 1;
        sums[s * a_n + a] += r;
        ns[s * a_n + a] += 1;
    }
    let mut worst: f64 = 0.0;
    let mut count_ok = true;
    for s in 0..s_n {
        for a in 0..a_n {
            let m = belief.marginals(s, a).expect("valid indices");
            let sa = s * a_n + a;
            for n in 0..s_n {
                count_ok &= m.concentration[n] == 1.0 + counts[sa * s_n + n] as f64;
            }
            let k = ns[sa] as f64 + 1.0;
            worst = worst
                .max((m.reward_mean - sums[sa] / k).abs())
                .max((m.reward_variance - 1.0 / k).abs());
        }
    }
    CheckResult {
        name: "conjugate",
        passed: count_ok && worst <= 1e-12,
        detail: format!("{num_obs} observations, counts exact = {count_ok}, max closed-form error = {worst:.3e}"),
    }
}

/// Regret sandwich on chain-3 for a sequence of beliefs.
pub fn check_sandwich(num_checks: usize, seed: u64) -> CheckResult {
    let chain = make_stochastic_chain(3, 0.0, 1.0).expect("valid chain");
    let gaps = enumerate_gaps(&chain, DEFAULT_TIE_TOL, 1 << 20).expect("512 policies");
    let truth = TrueModel::new(&chain, DEFAULT_TIE_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut belief = MdpBelief::for_mdp(&chain);
    let mut failures = 0;
    for i in 0..num_checks {
        let p = crate::agents::random_select(3, 2, 3, &mut rng);
        let traj = crate::mdp::simulate_episode(&chain, &p, &mut rng, i + 1).expect("shapes match");
        crate::posterior::update_belief(&mut belief, &traj).expect("valid indices");
        let row = truth.estimate(&belief, 100, &mut rng);
        if !sandwich_check(&row, gaps.min_gap, gaps.max_gap) {
            failures += 1;
        }
    }
    let mu_ok = (mean_episodic_reward(&chain, &Policy::constant(3, 3, 1)).expect("shape") - 4.0 / 9.0).abs() < 1e-12;
    CheckResult {
        name: "sandwich",
        passed: failures == 0 && mu_ok,
        detail: format!(
            "{num_checks} beliefs, gaps [{:.6}, {:.6}], failures = {failures}",
            gaps.min_gap, gaps.max_gap
        ),
    }
}

/// The full brute-force suite.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        check_policy_evaluation(100, seed),
        check_planner(200, seed),
        check_conjugate(10_000, seed),
        check_sandwich(100, seed),
    ]
}
