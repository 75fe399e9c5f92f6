//! Conjugate belief over tabular MDPs.
//!
//! Transition rows carry independent Dirichlet posteriors; mean rewards
//! carry independent Normal posteriors under a Gaussian likelihood with
//! known variance. The initial distribution is known and copied through.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Trajectory, SIMPLEX_TOL};

/// Prior hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    /// Dirichlet concentration per successor state.
    pub concentration: f64,
    pub reward_prior_mean: f64,
    pub reward_prior_variance: f64,
    /// Known observation variance of rewards.
    pub likelihood_variance: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            concentration: 1.0,
            reward_prior_mean: 0.0,
            reward_prior_variance: 1.0,
            likelihood_variance: 1.0,
        }
    }
}

impl PriorConfig {
    fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.concentration)
            || !positive(self.reward_prior_variance)
            || !positive(self.likelihood_variance)
            || !self.reward_prior_mean.is_finite()
        {
            return Err(Error::InvalidConfig(format!("invalid prior {self:?}")));
        }
        Ok(())
    }
}

/// Sufficient statistics of observed rewards at one (s, a).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardStats {
    pub count: u64,
    pub sum: f64,
}

/// Exact posterior parameters at one (s, a).
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub concentration: Vec<f64>,
    pub reward_mean: f64,
    pub reward_variance: f64,
}

/// Posterior `f(· | history)` over MDPs. Serializes to JSON for
/// checkpointing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpBelief {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    initial_dist: Vec<f64>,
    prior: PriorConfig,
    /// `[s][a][s']`, flat.
    concentration: Vec<f64>,
    /// `[s][a]`, flat.
    rewards: Vec<RewardStats>,
}

/// Fresh belief with uniform Dirichlet rows and the Normal reward prior.
pub fn init_belief(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    initial_dist: Vec<f64>,
    prior: PriorConfig,
) -> Result<MdpBelief> {
    if num_states == 0 || num_actions == 0 || horizon == 0 {
        return Err(Error::InvalidShape(format!(
            "S={num_states}, A={num_actions}, H={horizon} must all be positive"
        )));
    }
    if initial_dist.len() != num_states {
        return Err(Error::InvalidShape(format!(
            "rho has length {}, expected {num_states}",
            initial_dist.len()
        )));
    }
    let sum: f64 = initial_dist.iter().sum();
    if initial_dist.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidDistribution(format!("rho sums to {sum}")));
    }
    prior.validate()?;
    Ok(MdpBelief {
        num_states,
        num_actions,
        horizon,
        initial_dist,
        prior,
        concentration: vec![prior.concentration; num_states * num_actions * num_states],
        rewards: vec![RewardStats::default(); num_states * num_actions],
    })
}

impl MdpBelief {
    /// Belief with the default prior and the dimensions/`ρ` of `mdp`.
    pub fn for_mdp(mdp: &TabularMdp) -> Self {
        init_belief(
            mdp.num_states(),
            mdp.num_actions(),
            mdp.horizon(),
            mdp.initial_dist().to_vec(),
            PriorConfig::default(),
        )
        .expect("a valid MDP yields a valid belief")
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn prior(&self) -> &PriorConfig {
        &self.prior
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    fn check_index(&self, s: usize, a: usize) -> Result<()> {
        if s >= self.num_states || a >= self.num_actions {
            return Err(Error::IndexOutOfRange(format!(
                "(s={s}, a={a}) with S={}, A={}",
                self.num_states, self.num_actions
            )));
        }
        Ok(())
    }

    /// Records one transition and reward.
    pub fn observe(&mut self, s: usize, a: usize, reward: f64, next: usize) -> Result<()> {
        self.check_index(s, a)?;
        if next >= self.num_states {
            return Err(Error::IndexOutOfRange(format!(
                "successor {next} with S={}",
                self.num_states
            )));
        }
        let sa = s * self.num_actions + a;
        self.concentration[sa * self.num_states + next] += 1.0;
        let stats = &mut self.rewards[sa];
        stats.count += 1;
        stats.sum += reward;
        Ok(())
    }

    /// Closed-form posterior parameters at `(s, a)`.
    pub fn marginals(&self, s: usize, a: usize) -> Result<Marginals> {
        self.check_index(s, a)?;
        let sa = s * self.num_actions + a;
        let (mean, variance) = self.reward_posterior(sa);
        Ok(Marginals {
            concentration: self.concentration[sa * self.num_states..(sa + 1) * self.num_states]
                .to_vec(),
            reward_mean: mean,
            reward_variance: variance,
        })
    }

    pub fn reward_stats(&self, s: usize, a: usize) -> RewardStats {
        self.rewards[s * self.num_actions + a]
    }

    /// Normal-Normal update with known variances:
    /// precision `1/σ₀² + n/σ²`, mean `(μ₀/σ₀² + Σr/σ²) / precision`.
    fn reward_posterior(&self, sa: usize) -> (f64, f64) {
        let RewardStats { count, sum } = self.rewards[sa];
        let p = &self.prior;
        let precision = 1.0 / p.reward_prior_variance + count as f64 / p.likelihood_variance;
        let mean =
            (p.reward_prior_mean / p.reward_prior_variance + sum / p.likelihood_variance) / precision;
        (mean, 1.0 / precision)
    }
}

/// Folds every step of `traj` into the belief.
pub fn update_belief(belief: &mut MdpBelief, traj: &Trajectory) -> Result<()> {
    // validate first so a bad step leaves the belief untouched
    for st in &traj.steps {
        belief.check_index(st.state, st.action)?;
        if st.next_state >= belief.num_states {
            return Err(Error::IndexOutOfRange(format!("successor {}", st.next_state)));
        }
    }
    for st in &traj.steps {
        belief.observe(st.state, st.action, st.reward, st.next_state)?;
    }
    Ok(())
}

/// Accessor for the exact conjugate parameters at `(s, a)`.
pub fn posterior_marginals(belief: &MdpBelief, s: usize, a: usize) -> Result<Marginals> {
    belief.marginals(s, a)
}

/// Draws one MDP from the belief: Dirichlet rows via normalized Gamma
/// variates, Normal mean rewards, reward noise at the likelihood standard
/// deviation.
pub fn sample_mdp<R: Rng + ?Sized>(belief: &MdpBelief, rng: &mut R) -> TabularMdp {
    let (s_n, a_n) = (belief.num_states, belief.num_actions);
    let mut transitions = Vec::with_capacity(s_n * a_n * s_n);
    let mut rewards = Vec::with_capacity(s_n * a_n);
    for sa in 0..s_n * a_n {
        let alpha = &belief.concentration[sa * s_n..(sa + 1) * s_n];
        let start = transitions.len();
        let mut total = 0.0;
        for &k in alpha {
            let g = Gamma::new(k, 1.0).expect("positive concentration").sample(rng);
            total += g;
            transitions.push(g);
        }
        let row = &mut transitions[start..];
        if total > 0.0 && total.is_finite() {
            row.iter_mut().for_each(|x| *x /= total);
        } else {
            // all draws underflowed: put the mass on the heaviest successor
            let best = (0..s_n)
                .max_by(|&i, &j| alpha[i].total_cmp(&alpha[j]))
                .unwrap_or(0);
            row.iter_mut().enumerate().for_each(|(i, x)| *x = f64::from(u8::from(i == best)));
        }
        let (mean, var) = belief.reward_posterior(sa);
        let z: f64 = rng.sample(StandardNormal);
        rewards.push(mean + var.sqrt() * z);
    }
    let noise = vec![belief.prior.likelihood_variance.sqrt(); s_n * a_n];
    TabularMdp::from_flat(
        s_n,
        a_n,
        belief.horizon,
        belief.initial_dist.clone(),
        transitions,
        rewards,
        noise,
    )
    .expect("posterior samples satisfy MDP invariants")
}
