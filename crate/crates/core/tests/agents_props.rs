use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pspe::agents::{
    practice_then_evaluate, pspe_select, psrl_select, random_select, run_agent, select, MetricsSchedule,
    PracticeOptions,
};
use pspe::envs::{default_chain, make_random_mdp, make_stochastic_chain};
use pspe::metrics::TrueModel;
use pspe::mdp::Policy;
use pspe::planner::{backward_induction, is_optimal_policy, sample_optimal_policy, DEFAULT_TIE_TOL};
use pspe::posterior::{init_belief, sample_mdp, update_belief, MdpBelief, PriorConfig};
use pspe::AgentConfig;

fn bandit() -> MdpBelief {
    init_belief(1, 2, 1, vec![1.0], PriorConfig::default()).unwrap()
}

#[test]
fn pspe_one_matches_psrl_draw_for_draw() {
    let m = make_random_mdp(3, 3, 4, &mut ChaCha8Rng::seed_from_u64(1), 1.0).unwrap();
    let (_, a) = run_agent(&m, &AgentConfig::pspe(1.0), 100, &mut ChaCha8Rng::seed_from_u64(9), None).unwrap();
    let (_, b) = run_agent(&m, &AgentConfig::psrl(), 100, &mut ChaCha8Rng::seed_from_u64(9), None).unwrap();
    assert_eq!(a.policies(), b.policies());
    assert_eq!(a.episodes, b.episodes);
}

#[test]
fn beta_zero_picks_the_other_arm() {
    // arm 0 looks clearly better; a resample ranks arm 1 first with
    // probability ≈ 0.017
    let mut b = bandit();
    for _ in 0..10 {
        b.observe(0, 0, 1.0, 0).unwrap();
        b.observe(0, 1, 0.0, 0).unwrap();
    }
    let cfg = AgentConfig { max_resamples: 1000, ..AgentConfig::pspe(0.0) };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let calls = 1000;
    let mut other = 0;
    for _ in 0..calls {
        // replay the first draw to learn which arm it favoured
        let first = backward_induction(&sample_mdp(&b, &mut rng.clone()), DEFAULT_TIE_TOL);
        let sel = pspe_select(&b, &cfg, &mut rng);
        if !sel.fallback {
            assert!(!is_optimal_policy(&first, &sel.policy));
            assert!(sel.posterior_samples >= 2);
        }
        if sel.policy.action(0, 0) == 1 {
            other += 1;
        }
    }
    assert!(other as f64 >= 0.95 * calls as f64, "{other}/{calls}");
}

#[test]
fn single_action_triggers_fallback() {
    let b = init_belief(3, 1, 2, vec![1.0, 0.0, 0.0], PriorConfig::default()).unwrap();
    let sel = pspe_select(&b, &AgentConfig::pspe(0.0), &mut ChaCha8Rng::seed_from_u64(0));
    assert!(sel.fallback);
    assert_eq!(sel.policy, Policy::constant(3, 2, 0));
    assert_eq!(sel.posterior_samples, 101);
}

#[test]
fn random_policy_coordinates_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 100_000;
    let mut counts = vec![[0usize; 4]; 6];
    for _ in 0..n {
        let p = random_select(3, 4, 2, &mut rng);
        for (i, &a) in p.table().iter().enumerate() {
            counts[i][a] += 1;
        }
    }
    for c in counts {
        for k in c {
            assert!((k as f64 / n as f64 - 0.25).abs() < 0.02);
        }
    }
}

#[test]
fn symmetric_prior_splits_evenly() {
    let b = bandit();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 10_000;
    let ones = (0..n)
        .filter(|_| psrl_select(&b, &mut rng, DEFAULT_TIE_TOL).action(0, 0) == 1)
        .count();
    assert!((ones as f64 / n as f64 - 0.5).abs() < 0.02);
}

#[test]
fn selection_is_seeded() {
    let b = bandit();
    for cfg in [AgentConfig::psrl(), AgentConfig::pspe(0.3), AgentConfig::random()] {
        let x = select(&b, &cfg, &mut ChaCha8Rng::seed_from_u64(11));
        let y = select(&b, &cfg, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(x, y);
    }
}

#[test]
fn trained_psrl_plays_optimally_on_the_chain() {
    // zero left reward so the optimum is not decided by 0.001-sized gaps at
    // states the agent rarely sees
    let chain = make_stochastic_chain(10, 0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (belief, _) = run_agent(&chain, &AgentConfig::psrl(), 2000, &mut rng, None).unwrap();
    // unreachable (s, h) pairs never receive data, so optimality is judged
    // by the value from the initial state
    let truth = TrueModel::new(&chain, DEFAULT_TIE_TOL);
    let optimal = (0..100)
        .filter(|_| truth.gap(&psrl_select(&belief, &mut rng, DEFAULT_TIE_TOL)) <= 1e-9)
        .count();
    assert!(optimal >= 95, "{optimal}/100");
}

#[test]
fn psrl_regret_flattens() {
    let chain = default_chain(10).unwrap();
    let (_, log) = run_agent(&chain, &AgentConfig::psrl(), 1000, &mut ChaCha8Rng::seed_from_u64(10), None).unwrap();
    let first = log.expected_regret(1..=250) / 250.0;
    let last = log.expected_regret(751..=1000) / 250.0;
    assert!(last < first, "last quartile {last} vs first {first}");
}

#[test]
fn run_log_is_seeded() {
    let m = default_chain(5).unwrap();
    let sch = MetricsSchedule::new(10, 50, 3);
    let go = || run_agent(&m, &AgentConfig::pspe(0.5), 40, &mut ChaCha8Rng::seed_from_u64(6), Some(&sch)).unwrap();
    let (b1, l1) = go();
    let (b2, l2) = go();
    assert_eq!(b1, b2);
    assert_eq!(format!("{l1:?}"), format!("{l2:?}"));
    assert_eq!(l1.metrics.len(), 4);
}

#[test]
fn replayed_trajectories_rebuild_the_belief() {
    let m = make_random_mdp(4, 2, 3, &mut ChaCha8Rng::seed_from_u64(2), 1.0).unwrap();
    let (belief, log) = run_agent(&m, &AgentConfig::pspe(0.4), 60, &mut ChaCha8Rng::seed_from_u64(8), None).unwrap();
    let mut replay = MdpBelief::for_mdp(&m);
    for e in &log.episodes {
        update_belief(&mut replay, &e.trajectory).unwrap();
    }
    assert_eq!(replay, belief);
}

#[test]
fn empty_practice_reports_the_prior() {
    let chain = default_chain(5).unwrap();
    let opts = PracticeOptions { eval_samples: 200, metrics_seed: 17, ..PracticeOptions::default() };
    let run = practice_then_evaluate(&chain, 0.3, 0, 5, &mut ChaCha8Rng::seed_from_u64(1), &opts).unwrap();
    let sch = MetricsSchedule { every: 1, n_samples: 200, tie_tol: DEFAULT_TIE_TOL, seed: 17 };
    let prior = sch.measure(&TrueModel::new(&chain, DEFAULT_TIE_TOL), &MdpBelief::for_mdp(&chain), 0, 0);
    assert_eq!(run.practice_end, prior);
    assert!(run.log.episodes.iter().all(|e| e.posterior_samples == 1));
}

#[test]
fn beta_one_practice_is_a_plain_psrl_run() {
    let chain = default_chain(6).unwrap();
    let run = practice_then_evaluate(&chain, 1.0, 30, 20, &mut ChaCha8Rng::seed_from_u64(4), &PracticeOptions::default()).unwrap();
    let (_, log) = run_agent(&chain, &AgentConfig::psrl(), 50, &mut ChaCha8Rng::seed_from_u64(4), None).unwrap();
    assert_eq!(run.log.policies(), log.policies());
    assert!((run.total_cum_regret - log.expected_regret(1..=50)).abs() < 1e-9);
    assert!((run.eval_cum_regret - log.expected_regret(31..=50)).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pspe_one_equals_psrl_for_any_belief(seed in any::<u64>(), obs in prop::collection::vec((0usize..3, 0usize..2, -1.0f64..1.0, 0usize..3), 0..40)) {
        let mut b = init_belief(3, 2, 3, vec![1.0 / 3.0; 3], PriorConfig::default()).unwrap();
        for (s, a, r, n) in obs {
            b.observe(s, a, r, n).unwrap();
        }
        let sel = pspe_select(&b, &AgentConfig::pspe(1.0), &mut ChaCha8Rng::seed_from_u64(seed));
        let psrl = psrl_select(&b, &mut ChaCha8Rng::seed_from_u64(seed), DEFAULT_TIE_TOL);
        prop_assert_eq!(sel.policy, psrl);
        prop_assert_eq!(sel.posterior_samples, 1);
    }

    #[test]
    fn sample_budget_is_bounded(seed in any::<u64>(), beta in 0.0f64..1.0, cap in 1usize..20) {
        let b = init_belief(2, 2, 2, vec![0.5, 0.5], PriorConfig::default()).unwrap();
        let cfg = AgentConfig { max_resamples: cap, ..AgentConfig::pspe(beta) };
        let sel = pspe_select(&b, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(sel.posterior_samples >= 1 && sel.posterior_samples <= 1 + cap);
        prop_assert_eq!(sel.fallback, sel.posterior_samples == 1 + cap && sel.fallback);
    }

    #[test]
    fn psrl_consumes_one_sample(seed in any::<u64>()) {
        // psrl_select is exactly one posterior draw followed by one policy draw
        let b = init_belief(2, 3, 2, vec![0.5, 0.5], PriorConfig::default()).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(seed);
        let mut r2 = ChaCha8Rng::seed_from_u64(seed);
        let p = psrl_select(&b, &mut r1, DEFAULT_TIE_TOL);
        let sets = backward_induction(&sample_mdp(&b, &mut r2), DEFAULT_TIE_TOL);
        prop_assert_eq!(p, sample_optimal_policy(&sets, &mut r2));
        prop_assert_eq!(r1.get_word_pos(), r2.get_word_pos());
    }
}
