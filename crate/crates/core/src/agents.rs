//! Episode-level exploration strategies.
//!
//! - PSRL: sample one MDP from the belief and follow a uniformly chosen
//!   optimal policy of the sample.
//! - PSPE(β): sample an MDP; with probability β act as PSRL, otherwise
//!   resample MDPs until one has an optimal policy outside the first
//!   sample's optimal set and follow such a policy.
//! - Random: every (state, stage) action uniform.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{simulate_episode, Policy, TabularMdp, Trajectory};
use crate::metrics::{MetricsRow, TrueModel};
use crate::planner::{
    backward_induction, sample_optimal_policy, sample_policy_from_difference, DEFAULT_MAX_REJECTIONS,
    DEFAULT_TIE_TOL,
};
use crate::posterior::{sample_mdp, update_belief, MdpBelief};
use crate::seed::{derive_seed, rng_for};

pub const DEFAULT_MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Psrl,
    Pspe,
    Random,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Psrl => "psrl",
            AgentKind::Pspe => "pspe",
            AgentKind::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub kind: AgentKind,
    /// Probability of following the first sample's optimal policy (PSPE).
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_max_resamples")]
    pub max_resamples: usize,
    #[serde(default = "default_max_rejections")]
    pub max_rejections: usize,
    #[serde(default = "default_tie_tol")]
    pub tie_tol: f64,
}

fn default_beta() -> f64 {
    0.5
}
fn default_max_resamples() -> usize {
    DEFAULT_MAX_RESAMPLES
}
fn default_max_rejections() -> usize {
    DEFAULT_MAX_REJECTIONS
}
fn default_tie_tol() -> f64 {
    DEFAULT_TIE_TOL
}

impl AgentConfig {
    fn with(kind: AgentKind, beta: f64) -> Self {
        Self {
            kind,
            beta,
            max_resamples: DEFAULT_MAX_RESAMPLES,
            max_rejections: DEFAULT_MAX_REJECTIONS,
            tie_tol: DEFAULT_TIE_TOL,
        }
    }

    pub fn psrl() -> Self {
        Self::with(AgentKind::Psrl, 1.0)
    }

    pub fn pspe(beta: f64) -> Self {
        Self::with(AgentKind::Pspe, beta)
    }

    pub fn random() -> Self {
        Self::with(AgentKind::Random, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!("beta {} outside [0, 1]", self.beta)));
        }
        if self.max_resamples == 0 || self.max_rejections == 0 {
            return Err(Error::InvalidConfig("resample and rejection caps must be >= 1".into()));
        }
        if self.tie_tol.is_nan() || self.tie_tol < 0.0 {
            return Err(Error::InvalidConfig(format!("tie_tol {} must be >= 0", self.tie_tol)));
        }
        Ok(())
    }

    /// Beta as reported in outputs: PSRL is 1, random exploration has none.
    pub fn reported_beta(&self) -> Option<f64> {
        match self.kind {
            AgentKind::Psrl => Some(1.0),
            AgentKind::Pspe => Some(self.beta),
            AgentKind::Random => None,
        }
    }

    /// Short stable identifier, e.g. `pspe-0.25`.
    pub fn label(&self) -> String {
        match self.kind {
            AgentKind::Pspe => format!("pspe-{}", self.beta),
            k => k.as_str().to_string(),
        }
    }

    /// Key used for seed derivation; depends only on the agent's own
    /// settings so grids can be edited without perturbing other agents.
    pub fn seed_key(&self) -> u64 {
        let kind = match self.kind {
            AgentKind::Psrl => 1u64,
            AgentKind::Pspe => 2,
            AgentKind::Random => 3,
        };
        derive_seed(kind, &[self.beta.to_bits(), self.max_resamples as u64, self.max_rejections as u64])
    }
}

/// A chosen policy plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub policy: Policy,
    /// Posterior MDP samples consumed.
    pub posterior_samples: usize,
    /// PSPE exhausted its resample budget and followed the first sample.
    pub fallback: bool,
}

/// PSRL: one posterior sample, then a uniform optimal policy of it.
pub fn psrl_select<R: Rng + ?Sized>(belief: &MdpBelief, rng: &mut R, tie_tol: f64) -> Policy {
    let m = sample_mdp(belief, rng);
    let sets = backward_induction(&m, tie_tol);
    sample_optimal_policy(&sets, rng)
}

/// PSPE(β). With `β = 1` it consumes randomness exactly like
/// [`psrl_select`] and returns the same policy.
pub fn pspe_select<R: Rng + ?Sized>(belief: &MdpBelief, cfg: &AgentConfig, rng: &mut R) -> Selection {
    let first = sample_mdp(belief, rng);
    let first_sets = backward_induction(&first, cfg.tie_tol);
    let follow_first = if cfg.beta >= 1.0 {
        true
    } else if cfg.beta <= 0.0 {
        false
    } else {
        rng.random_bool(cfg.beta)
    };
    if follow_first {
        return Selection {
            policy: sample_optimal_policy(&first_sets, rng),
            posterior_samples: 1,
            fallback: false,
        };
    }
    for k in 1..=cfg.max_resamples {
        let tilde = sample_mdp(belief, rng);
        let tilde_sets = backward_induction(&tilde, cfg.tie_tol);
        match sample_policy_from_difference(&tilde_sets, &first_sets, rng, cfg.max_rejections) {
            Ok(policy) => {
                return Selection {
                    policy,
                    posterior_samples: 1 + k,
                    fallback: false,
                }
            }
            Err(Error::EmptyDifference) => continue,
            Err(e) => unreachable!("difference sampling failed: {e}"),
        }
    }
    Selection {
        policy: sample_optimal_policy(&first_sets, rng),
        posterior_samples: 1 + cfg.max_resamples,
        fallback: true,
    }
}

/// Uniform random policy.
pub fn random_select<R: Rng + ?Sized>(num_states: usize, num_actions: usize, horizon: usize, rng: &mut R) -> Policy {
    let table = (0..num_states * horizon)
        .map(|_| rng.random_range(0..num_actions))
        .collect();
    Policy::new(num_states, horizon, num_actions, table).expect("actions drawn in range")
}

/// Dispatches on `cfg.kind`.
pub fn select<R: Rng + ?Sized>(belief: &MdpBelief, cfg: &AgentConfig, rng: &mut R) -> Selection {
    match cfg.kind {
        AgentKind::Psrl => Selection {
            policy: psrl_select(belief, rng, cfg.tie_tol),
            posterior_samples: 1,
            fallback: false,
        },
        AgentKind::Pspe => pspe_select(belief, cfg, rng),
        AgentKind::Random => Selection {
            policy: random_select(belief.num_states(), belief.num_actions(), belief.horizon(), rng),
            posterior_samples: 0,
            fallback: false,
        },
    }
}

/// When and how to estimate simple regret during a run.
///
/// Estimates are taken after every episode `t` with `t % every == 0`. Each
/// estimate draws from its own stream keyed by `(seed, t)`, independent of
/// the acting stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSchedule {
    pub every: usize,
    pub n_samples: usize,
    pub tie_tol: f64,
    pub seed: u64,
}

impl MetricsSchedule {
    pub fn new(every: usize, n_samples: usize, seed: u64) -> Self {
        Self {
            every,
            n_samples,
            tie_tol: DEFAULT_TIE_TOL,
            seed,
        }
    }

    pub fn is_due(&self, episode: usize) -> bool {
        self.every > 0 && episode > 0 && episode.is_multiple_of(self.every)
    }

    /// Estimate for `belief` as it stands after `episode`.
    pub fn measure(&self, truth: &TrueModel<'_>, belief: &MdpBelief, episode: usize, fallback_count: usize) -> MetricsRow {
        let mut rng = rng_for(derive_seed(self.seed, &[episode as u64]));
        let mut row = truth.estimate(belief, self.n_samples, &mut rng);
        row.episode = episode;
        row.fallback_count = fallback_count;
        row
    }
}

/// One episode of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based, contiguous.
    pub episode: usize,
    pub policy: Policy,
    pub trajectory: Trajectory,
    pub realized_return: f64,
    /// `μ(π_t)` on the true MDP.
    pub expected_value: f64,
    pub posterior_samples: usize,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub episodes: Vec<EpisodeRecord>,
    pub metrics: Vec<MetricsRow>,
    pub fallback_count: usize,
    /// `μ*` of the true MDP.
    pub mu_star: f64,
}

impl RunLog {
    pub fn policies(&self) -> Vec<Policy> {
        self.episodes.iter().map(|e| e.policy.clone()).collect()
    }

    /// `Σ (μ* − μ(π_t))` over episodes with index in `range`, each term
    /// clamped at zero.
    pub fn expected_regret(&self, range: std::ops::RangeInclusive<usize>) -> f64 {
        self.episodes
            .iter()
            .filter(|e| range.contains(&e.episode))
            .map(|e| (self.mu_star - e.expected_value).max(0.0))
            .sum()
    }

    /// `Σ (μ* − G_t)` with `G_t` the realized return.
    pub fn realized_regret(&self, range: std::ops::RangeInclusive<usize>) -> f64 {
        self.episodes
            .iter()
            .filter(|e| range.contains(&e.episode))
            .map(|e| self.mu_star - e.realized_return)
            .sum()
    }
}

/// Continues `belief` for `num_episodes` more episodes, appending to `log`.
#[allow(clippy::too_many_arguments)]
pub fn continue_run<R: Rng + ?Sized>(
    truth: &TrueModel<'_>,
    belief: &mut MdpBelief,
    cfg: &AgentConfig,
    num_episodes: usize,
    rng: &mut R,
    schedule: Option<&MetricsSchedule>,
    log: &mut RunLog,
) -> Result<()> {
    cfg.validate()?;
    let start = log.episodes.len();
    for t in start + 1..=start + num_episodes {
        let sel = select(belief, cfg, rng);
        let trajectory = simulate_episode(truth.mdp, &sel.policy, rng, t)?;
        update_belief(belief, &trajectory)?;
        if sel.fallback {
            log.fallback_count += 1;
        }
        log.episodes.push(EpisodeRecord {
            episode: t,
            realized_return: trajectory.total_reward(),
            expected_value: crate::mdp::mean_episodic_reward_unchecked(truth.mdp, &sel.policy),
            policy: sel.policy,
            trajectory,
            posterior_samples: sel.posterior_samples,
            fallback: sel.fallback,
        });
        if let Some(sch) = schedule.filter(|s| s.is_due(t)) {
            log.metrics.push(sch.measure(truth, belief, t, log.fallback_count));
        }
    }
    Ok(())
}

/// Runs an agent from the default prior on `true_mdp`.
pub fn run_agent<R: Rng + ?Sized>(
    true_mdp: &TabularMdp,
    cfg: &AgentConfig,
    num_episodes: usize,
    rng: &mut R,
    schedule: Option<&MetricsSchedule>,
) -> Result<(MdpBelief, RunLog)> {
    let tie_tol = schedule.map_or(cfg.tie_tol, |s| s.tie_tol);
    let truth = TrueModel::new(true_mdp, tie_tol);
    let mut belief = MdpBelief::for_mdp(true_mdp);
    let mut log = RunLog {
        mu_star: truth.mu_star,
        ..RunLog::default()
    };
    continue_run(&truth, &mut belief, cfg, num_episodes, rng, schedule, &mut log)?;
    Ok((belief, log))
}

/// Settings for [`practice_then_evaluate`] beyond β and the phase lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PracticeOptions {
    /// Posterior samples for the practice-end simple-regret estimate.
    pub eval_samples: usize,
    pub tie_tol: f64,
    /// Keys the practice-end estimate's random stream.
    pub metrics_seed: u64,
    pub max_resamples: usize,
    pub max_rejections: usize,
}

impl Default for PracticeOptions {
    fn default() -> Self {
        Self {
            eval_samples: 1000,
            tie_tol: DEFAULT_TIE_TOL,
            metrics_seed: 0,
            max_resamples: DEFAULT_MAX_RESAMPLES,
            max_rejections: DEFAULT_MAX_REJECTIONS,
        }
    }
}

/// Outcome of a practice-then-evaluate run.
#[derive(Debug, Clone, PartialEq)]
pub struct PracticeRun {
    pub t_practice: usize,
    pub t_eval: usize,
    /// Simple-regret estimate of the belief at the switch point.
    pub practice_end: MetricsRow,
    /// Expected regret over the evaluation episodes only.
    pub eval_cum_regret: f64,
    /// Expected regret over practice and evaluation.
    pub total_cum_regret: f64,
    /// Realized regret over the evaluation episodes only.
    pub eval_realized_regret: f64,
    pub log: RunLog,
}

/// PSPE(β) for `t_practice` episodes, then PSRL on the same belief for
/// `t_eval` episodes. Regret counts from the first evaluation episode.
pub fn practice_then_evaluate<R: Rng + ?Sized>(
    true_mdp: &TabularMdp,
    beta: f64,
    t_practice: usize,
    t_eval: usize,
    rng: &mut R,
    opts: &PracticeOptions,
) -> Result<PracticeRun> {
    if t_eval == 0 {
        return Err(Error::InvalidConfig("t_eval must be >= 1".into()));
    }
    let practice_cfg = AgentConfig {
        max_resamples: opts.max_resamples,
        max_rejections: opts.max_rejections,
        tie_tol: opts.tie_tol,
        ..AgentConfig::pspe(beta)
    };
    let eval_cfg = AgentConfig {
        tie_tol: opts.tie_tol,
        ..AgentConfig::psrl()
    };
    let truth = TrueModel::new(true_mdp, opts.tie_tol);
    let mut belief = MdpBelief::for_mdp(true_mdp);
    let mut log = RunLog {
        mu_star: truth.mu_star,
        ..RunLog::default()
    };
    continue_run(&truth, &mut belief, &practice_cfg, t_practice, rng, None, &mut log)?;
    let schedule = MetricsSchedule {
        every: 1,
        n_samples: opts.eval_samples,
        tie_tol: opts.tie_tol,
        seed: opts.metrics_seed,
    };
    let practice_end = schedule.measure(&truth, &belief, t_practice, log.fallback_count);
    log.metrics.push(practice_end.clone());
    continue_run(&truth, &mut belief, &eval_cfg, t_eval, rng, None, &mut log)?;
    let end = t_practice + t_eval;
    Ok(PracticeRun {
        t_practice,
        t_eval,
        practice_end,
        eval_cum_regret: log.expected_regret(t_practice + 1..=end),
        total_cum_regret: log.expected_regret(1..=end),
        eval_realized_regret: log.realized_regret(t_practice + 1..=end),
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::{init_belief, PriorConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_single_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(random_select(3, 1, 2, &mut rng), Policy::constant(3, 2, 0));
    }

    #[test]
    fn degenerate_belief_falls_back() {
        let b = init_belief(2, 1, 2, vec![1.0, 0.0], PriorConfig::default()).unwrap();
        let cfg = AgentConfig { max_resamples: 7, ..AgentConfig::pspe(0.0) };
        let sel = pspe_select(&b, &cfg, &mut ChaCha8Rng::seed_from_u64(2));
        assert!(sel.fallback);
        assert_eq!(sel.posterior_samples, 8);
        assert_eq!(sel.policy, Policy::constant(2, 2, 0));
    }

    #[test]
    fn config_validation() {
        assert!(AgentConfig::pspe(1.5).validate().is_err());
        assert!(AgentConfig { max_resamples: 0, ..AgentConfig::pspe(0.5) }.validate().is_err());
        assert!(AgentConfig::pspe(0.0).validate().is_ok());
        assert_eq!(AgentConfig::pspe(0.25).label(), "pspe-0.25");
    }

    #[test]
    fn zero_episodes_is_a_no_op() {
        let m = crate::envs::default_chain(3).unwrap();
        let (b, log) = run_agent(&m, &AgentConfig::psrl(), 0, &mut ChaCha8Rng::seed_from_u64(0), None).unwrap();
        assert_eq!(b, MdpBelief::for_mdp(&m));
        assert!(log.episodes.is_empty() && log.metrics.is_empty());
    }
}
