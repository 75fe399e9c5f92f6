use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use pspe::agents::{run_agent, MetricsSchedule};
use pspe::envs::{default_chain, make_random_mdp, make_stochastic_chain};
use pspe::mdp::{mean_episodic_reward, sample_categorical, Policy, TabularMdp};
use pspe::metrics::{
    cumulative_regret, estimate_confidences, estimate_simple_regret, fit_decay_rate, sandwich_check,
    TrueModel,
};
use pspe::planner::{enumerate_gaps, DEFAULT_POLICY_LIMIT, DEFAULT_TIE_TOL};
use pspe::posterior::{init_belief, MdpBelief, PriorConfig};
use pspe::AgentConfig;

fn two_arm(means: [f64; 2]) -> TabularMdp {
    TabularMdp::from_flat(1, 2, 1, vec![1.0], vec![1.0, 1.0], means.to_vec(), vec![1.0; 2]).unwrap()
}

fn bandit_belief() -> MdpBelief {
    init_belief(1, 2, 1, vec![1.0], PriorConfig::default()).unwrap()
}

/// Feeds `n` simulated observations of every `(s, a)` of `truth`.
fn saturate(truth: &TabularMdp, n: usize, seed: u64) -> MdpBelief {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = MdpBelief::for_mdp(truth);
    for s in 0..truth.num_states() {
        for a in 0..truth.num_actions() {
            let noise = Normal::new(0.0, truth.reward_noise(s, a)).unwrap();
            for _ in 0..n {
                let next = sample_categorical(truth.transition_row(s, a), &mut rng);
                b.observe(s, a, truth.mean_reward(s, a) + noise.sample(&mut rng), next).unwrap();
            }
        }
    }
    b
}

#[test]
fn concentrated_belief_has_no_regret() {
    let chain = make_stochastic_chain(5, 0.0, 1.0).unwrap();
    let b = saturate(&chain, 100_000, 1);
    let row = estimate_simple_regret(&b, &chain, 500, &mut ChaCha8Rng::seed_from_u64(2), DEFAULT_TIE_TOL);
    assert!(row.r_hat <= 0.01, "{row:?}");
    assert!(row.theta_hat <= 0.01, "{row:?}");
    // 0.001 left rewards stay below the reward posterior's resolution at
    // this sample size: regret vanishes, sub-optimal mass does not
    let chain = default_chain(5).unwrap();
    let b = saturate(&chain, 100_000, 1);
    let row = estimate_simple_regret(&b, &chain, 500, &mut ChaCha8Rng::seed_from_u64(2), DEFAULT_TIE_TOL);
    assert!(row.r_hat <= 0.01, "{row:?}");
}

#[test]
fn symmetric_bandit_belief_splits() {
    let truth = two_arm([1.0, 0.0]);
    let n = 4000;
    let row = estimate_simple_regret(&bandit_belief(), &truth, n, &mut ChaCha8Rng::seed_from_u64(3), DEFAULT_TIE_TOL);
    let se = (0.25 / n as f64).sqrt();
    assert!((row.theta_hat - 0.5).abs() < 3.0 * se);
    assert!((row.r_hat - 0.5).abs() < 3.0 * se);
    // single gap of 1: the sandwich is an equality
    assert_eq!(row.r_hat, row.theta_hat);
    assert!(sandwich_check(&row, 1.0, 1.0));
}

#[test]
fn single_optimal_sample_is_exactly_zero() {
    let truth = two_arm([1.0, 0.0]);
    let mut b = bandit_belief();
    for _ in 0..1000 {
        b.observe(0, 0, 1.0, 0).unwrap();
        b.observe(0, 1, 0.0, 0).unwrap();
    }
    let row = estimate_simple_regret(&b, &truth, 1, &mut ChaCha8Rng::seed_from_u64(4), DEFAULT_TIE_TOL);
    assert_eq!((row.r_hat, row.theta_hat, row.n_samples), (0.0, 0.0, 1));
}

#[test]
fn single_action_confidence_is_one() {
    let b = init_belief(2, 1, 3, vec![0.5, 0.5], PriorConfig::default()).unwrap();
    let alpha = estimate_confidences(&b, 50, &mut ChaCha8Rng::seed_from_u64(0), DEFAULT_TIE_TOL, 10).unwrap();
    assert_eq!(alpha.len(), 1);
    assert!((alpha[&Policy::constant(2, 3, 0)] - 1.0).abs() < 1e-12);
}

#[test]
fn tied_policies_share_confidence() {
    // an enormous tie tolerance makes both arms optimal in every sample
    let alpha = estimate_confidences(&bandit_belief(), 1, &mut ChaCha8Rng::seed_from_u64(0), 1e9, 10).unwrap();
    assert_eq!(alpha.len(), 2);
    assert!(alpha.values().all(|a| (a - 0.5).abs() < 1e-12));
}

#[test]
fn confidence_limit_is_enforced() {
    let b = MdpBelief::for_mdp(&default_chain(10).unwrap());
    assert!(estimate_confidences(&b, 1, &mut ChaCha8Rng::seed_from_u64(0), DEFAULT_TIE_TOL, DEFAULT_POLICY_LIMIT).is_err());
}

#[test]
fn confidence_mixture_agrees_with_regret_estimate() {
    let truth = make_random_mdp(2, 2, 2, &mut ChaCha8Rng::seed_from_u64(5), 1.0).unwrap();
    let b = saturate(&truth, 3, 6);
    let n = 4000;
    let alpha = estimate_confidences(&b, n, &mut ChaCha8Rng::seed_from_u64(7), DEFAULT_TIE_TOL, 100).unwrap();
    let total: f64 = alpha.values().sum();
    assert!((total - 1.0).abs() < 1e-9);
    let truth_model = TrueModel::new(&truth, DEFAULT_TIE_TOL);
    let mixture: f64 = alpha.iter().map(|(p, a)| a * mean_episodic_reward(&truth, p).unwrap()).sum();
    let via_alpha = truth_model.mu_star - mixture;
    let row = estimate_simple_regret(&b, &truth, n, &mut ChaCha8Rng::seed_from_u64(8), DEFAULT_TIE_TOL);
    // both estimators are means over n posterior draws; the one from α̂ has
    // no more variance than the single-draw one
    let tol = 3.0 * row.r_se * 2f64.sqrt();
    assert!((row.r_hat - via_alpha).abs() <= tol, "{} vs {via_alpha} (tol {tol})", row.r_hat);
}

#[test]
fn theta_spread_is_binomial() {
    let truth = two_arm([1.0, 0.0]);
    let b = bandit_belief();
    let n = 100;
    let thetas: Vec<f64> = (0..300)
        .map(|i| estimate_simple_regret(&b, &truth, n, &mut ChaCha8Rng::seed_from_u64(1000 + i), DEFAULT_TIE_TOL).theta_hat)
        .collect();
    let mean = thetas.iter().sum::<f64>() / thetas.len() as f64;
    let sd = (thetas.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (thetas.len() - 1) as f64).sqrt();
    let expected = (mean * (1.0 - mean) / n as f64).sqrt();
    assert!(sd <= 2.0 * expected && sd >= expected / 2.0, "sd {sd} vs {expected}");
}

#[test]
fn sandwich_holds_along_chain_runs() {
    let chain = default_chain(3).unwrap();
    let gaps = enumerate_gaps(&chain, DEFAULT_TIE_TOL, DEFAULT_POLICY_LIMIT).unwrap();
    let mut checks = 0;
    for (i, cfg) in [AgentConfig::psrl(), AgentConfig::pspe(0.0), AgentConfig::pspe(0.5), AgentConfig::random()]
        .iter()
        .enumerate()
    {
        let sch = MetricsSchedule::new(1, 100, 40 + i as u64);
        let (_, log) = run_agent(&chain, cfg, 25, &mut ChaCha8Rng::seed_from_u64(i as u64), Some(&sch)).unwrap();
        for row in &log.metrics {
            assert!(sandwich_check(row, gaps.min_gap, gaps.max_gap), "{row:?}");
            if row.theta_hat == 0.0 {
                assert!(row.r_hat.abs() <= 1e-12);
            }
            checks += 1;
        }
    }
    assert_eq!(checks, 100);
}

#[test]
fn cumulative_regret_cases() {
    let truth = two_arm([1.0, 0.0]);
    let best = Policy::constant(1, 1, 0);
    let worst = Policy::constant(1, 1, 1);
    assert!(cumulative_regret(&truth, &vec![best; 7], DEFAULT_TIE_TOL).iter().all(|&r| r == 0.0));
    let series = cumulative_regret(&truth, &vec![worst; 10], DEFAULT_TIE_TOL);
    assert_eq!(series.len(), 10);
    assert!((series[9] - 10.0).abs() < 1e-12);
}

#[test]
fn cumulative_regret_replays_a_run() {
    let chain = default_chain(10).unwrap();
    let (_, log) = run_agent(&chain, &AgentConfig::psrl(), 200, &mut ChaCha8Rng::seed_from_u64(12), None).unwrap();
    let series = cumulative_regret(&chain, &log.policies(), DEFAULT_TIE_TOL);
    let best = mean_episodic_reward(&chain, &Policy::constant(10, 10, 1)).unwrap();
    let mu_star = TrueModel::new(&chain, DEFAULT_TIE_TOL).mu_star;
    assert!(mu_star >= best);
    let mut acc = 0.0;
    for (t, e) in log.episodes.iter().enumerate() {
        acc += (mu_star - mean_episodic_reward(&chain, &e.policy).unwrap()).max(0.0);
        assert!((series[t] - acc).abs() < 1e-9);
    }
    assert!(series.windows(2).all(|w| w[1] >= w[0]));
    assert!((series[199] - log.expected_regret(1..=200)).abs() < 1e-9);
}

#[test]
fn chain_five_theta_decays() {
    let chain = make_stochastic_chain(5, 0.0, 1.0).unwrap();
    let sch = MetricsSchedule::new(20, 300, 5);
    let (_, log) = run_agent(&chain, &AgentConfig::pspe(0.5), 600, &mut ChaCha8Rng::seed_from_u64(0), Some(&sch)).unwrap();
    let series: Vec<(usize, f64)> = log.metrics.iter().map(|r| (r.episode, r.theta_hat)).collect();
    let fit = fit_decay_rate(&series, (200, 600)).unwrap();
    assert!(fit.rate > 0.0, "{fit:?}");
    assert!((0.0..=1.0).contains(&fit.r_squared));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rows_satisfy_their_invariants(seed in any::<u64>(), n_obs in 0usize..6) {
        let truth = make_random_mdp(2, 2, 2, &mut ChaCha8Rng::seed_from_u64(seed), 1.0).unwrap();
        let b = saturate(&truth, n_obs, seed ^ 1);
        let gaps = enumerate_gaps(&truth, DEFAULT_TIE_TOL, 100).unwrap();
        let row = estimate_simple_regret(&b, &truth, 64, &mut ChaCha8Rng::seed_from_u64(seed), DEFAULT_TIE_TOL);
        prop_assert!((0.0..=1.0).contains(&row.theta_hat));
        prop_assert!(row.r_hat >= -1e-12);
        prop_assert!(sandwich_check(&row, gaps.min_gap, gaps.max_gap));
        let alpha = estimate_confidences(&b, 16, &mut ChaCha8Rng::seed_from_u64(seed), DEFAULT_TIE_TOL, 100).unwrap();
        prop_assert!((alpha.values().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn synthetic_rates_are_recovered(rate in 1e-4f64..0.1, c in -3.0f64..3.0) {
        let series: Vec<(usize, f64)> = (0..30).map(|i| (i * 7, (c - rate * (i * 7) as f64).exp())).collect();
        let fit = fit_decay_rate(&series, (0, 203)).unwrap();
        prop_assert!((fit.rate - rate).abs() < 1e-9);
    }
}
