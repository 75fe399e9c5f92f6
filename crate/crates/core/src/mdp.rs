//! Tabular episodic fixed-horizon MDPs, policies and exact evaluation.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simplex tolerance used when validating probability vectors.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A fully specified tabular MDP with Gaussian rewards.
///
/// Storage is flat and 0-based: transitions are laid out as `[s][a][s']`,
/// rewards and noise as `[s][a]`. Instances are immutable once validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMdp", into = "RawMdp")]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    initial_dist: Vec<f64>,
    transitions: Vec<f64>,
    mean_rewards: Vec<f64>,
    reward_noise: Vec<f64>,
}

/// Unvalidated MDP in its JSON layout.
///
/// `P` is indexed `[s][a][s']`, `R` and `noise` are indexed `[s][a]`. When
/// `noise` is omitted every pair gets unit standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMdp {
    #[serde(rename = "S")]
    pub num_states: usize,
    #[serde(rename = "A")]
    pub num_actions: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub rho: Vec<f64>,
    #[serde(rename = "P")]
    pub transitions: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    pub rewards: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Vec<Vec<f64>>>,
}

fn check_simplex(what: &str, v: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for &p in v {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "{what} has entry {p}"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidDistribution(format!("{what} sums to {sum}")));
    }
    Ok(())
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::InvalidShape(format!(
            "{what} has length {got}, expected {want}"
        )));
    }
    Ok(())
}

/// Validates a raw MDP, returning it unchanged in flat form iff every
/// invariant holds.
pub fn validate_mdp(raw: RawMdp) -> Result<TabularMdp> {
    let RawMdp {
        num_states: s_n,
        num_actions: a_n,
        horizon,
        rho,
        transitions,
        rewards,
        noise,
    } = raw;
    if s_n == 0 || a_n == 0 || horizon == 0 {
        return Err(Error::InvalidShape(format!(
            "S={s_n}, A={a_n}, H={horizon} must all be positive"
        )));
    }
    check_len("P", transitions.len(), s_n)?;
    check_len("R", rewards.len(), s_n)?;
    let mut flat_p = Vec::with_capacity(s_n * a_n * s_n);
    for (s, rows) in transitions.iter().enumerate() {
        check_len(&format!("P[{s}]"), rows.len(), a_n)?;
        for row in rows {
            check_len(&format!("P[{s}][.]"), row.len(), s_n)?;
            flat_p.extend_from_slice(row);
        }
    }
    let mut flat_r = Vec::with_capacity(s_n * a_n);
    for (s, row) in rewards.iter().enumerate() {
        check_len(&format!("R[{s}]"), row.len(), a_n)?;
        flat_r.extend_from_slice(row);
    }
    let flat_noise = match noise {
        None => vec![1.0; s_n * a_n],
        Some(noise) => {
            check_len("noise", noise.len(), s_n)?;
            let mut out = Vec::with_capacity(s_n * a_n);
            for (s, row) in noise.iter().enumerate() {
                check_len(&format!("noise[{s}]"), row.len(), a_n)?;
                out.extend_from_slice(row);
            }
            out
        }
    };
    TabularMdp::from_flat(s_n, a_n, horizon, rho, flat_p, flat_r, flat_noise)
}

impl TryFrom<RawMdp> for TabularMdp {
    type Error = Error;

    fn try_from(raw: RawMdp) -> Result<Self> {
        validate_mdp(raw)
    }
}

impl From<TabularMdp> for RawMdp {
    fn from(m: TabularMdp) -> Self {
        let (s_n, a_n) = (m.num_states, m.num_actions);
        let nested = |flat: &[f64]| -> Vec<Vec<f64>> {
            flat.chunks(a_n).map(<[f64]>::to_vec).collect()
        };
        RawMdp {
            num_states: s_n,
            num_actions: a_n,
            horizon: m.horizon,
            rho: m.initial_dist.clone(),
            transitions: m
                .transitions
                .chunks(a_n * s_n)
                .map(|per_s| per_s.chunks(s_n).map(<[f64]>::to_vec).collect())
                .collect(),
            rewards: nested(&m.mean_rewards),
            noise: Some(nested(&m.reward_noise)),
        }
    }
}

impl TabularMdp {
    /// Builds an MDP from flat row-major buffers, checking every invariant.
    pub fn from_flat(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        initial_dist: Vec<f64>,
        transitions: Vec<f64>,
        mean_rewards: Vec<f64>,
        reward_noise: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::InvalidShape(format!(
                "S={num_states}, A={num_actions}, H={horizon} must all be positive"
            )));
        }
        let sa = num_states * num_actions;
        check_len("rho", initial_dist.len(), num_states)?;
        check_len("P", transitions.len(), sa * num_states)?;
        check_len("R", mean_rewards.len(), sa)?;
        check_len("noise", reward_noise.len(), sa)?;
        check_simplex("rho", &initial_dist)?;
        for (i, row) in transitions.chunks(num_states).enumerate() {
            check_simplex(
                &format!("P[{}][{}]", i / num_actions, i % num_actions),
                row,
            )?;
        }
        if let Some(r) = mean_rewards.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidShape(format!("non-finite mean reward {r}")));
        }
        if let Some(n) = reward_noise.iter().find(|n| !n.is_finite() || **n < 0.0) {
            return Err(Error::InvalidShape(format!("invalid reward noise {n}")));
        }
        Ok(Self {
            num_states,
            num_actions,
            horizon,
            initial_dist,
            transitions,
            mean_rewards,
            reward_noise,
        })
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

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    /// Successor distribution `P(· | s, a)`.
    #[inline]
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.transitions[start..start + self.num_states]
    }

    #[inline]
    pub fn mean_reward(&self, s: usize, a: usize) -> f64 {
        self.mean_rewards[s * self.num_actions + a]
    }

    #[inline]
    pub fn reward_noise(&self, s: usize, a: usize) -> f64 {
        self.reward_noise[s * self.num_actions + a]
    }

    /// Same MDP with a different initial distribution.
    pub fn with_initial_dist(&self, rho: Vec<f64>) -> Result<Self> {
        check_len("rho", rho.len(), self.num_states)?;
        check_simplex("rho", &rho)?;
        Ok(Self {
            initial_dist: rho,
            ..self.clone()
        })
    }

    /// Expected one-step lookahead `Σ_{s'} P(s'|s,a) v[s']`.
    #[inline]
    pub(crate) fn expected_next(&self, s: usize, a: usize, v: &[f64]) -> f64 {
        self.transition_row(s, a)
            .iter()
            .zip(v)
            .map(|(p, x)| p * x)
            .sum()
    }

    /// Number of deterministic non-stationary policies, `A^(S·H)`.
    pub fn policy_count(&self) -> num_bigint::BigUint {
        num_bigint::BigUint::from(self.num_actions)
            .pow((self.num_states * self.horizon) as u32)
    }
}

/// Deterministic non-stationary policy: one action per (state, stage).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Policy {
    num_states: usize,
    horizon: usize,
    /// Stage-major action table, `actions[h * S + s]`.
    actions: Vec<usize>,
}

impl Policy {
    /// Builds a policy from a stage-major table `actions[h * S + s]`.
    pub fn new(
        num_states: usize,
        horizon: usize,
        num_actions: usize,
        actions: Vec<usize>,
    ) -> Result<Self> {
        check_len("policy", actions.len(), num_states * horizon)?;
        if let Some(a) = actions.iter().find(|&&a| a >= num_actions) {
            return Err(Error::IndexOutOfRange(format!(
                "action {a} with A={num_actions}"
            )));
        }
        Ok(Self {
            num_states,
            horizon,
            actions,
        })
    }

    /// Policy taking the same action everywhere.
    pub fn constant(num_states: usize, horizon: usize, action: usize) -> Self {
        Self {
            num_states,
            horizon,
            actions: vec![action; num_states * horizon],
        }
    }

    pub(crate) fn from_table_unchecked(num_states: usize, horizon: usize, actions: Vec<usize>) -> Self {
        debug_assert_eq!(actions.len(), num_states * horizon);
        Self {
            num_states,
            horizon,
            actions,
        }
    }

    #[inline]
    pub fn action(&self, s: usize, h: usize) -> usize {
        self.actions[h * self.num_states + s]
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Stage-major action table.
    pub fn table(&self) -> &[usize] {
        &self.actions
    }

    fn check_against(&self, mdp: &TabularMdp) -> Result<()> {
        if self.num_states != mdp.num_states || self.horizon != mdp.horizon {
            return Err(Error::InvalidShape(format!(
                "policy is {}x{}, MDP is S={} H={}",
                self.num_states, self.horizon, mdp.num_states, mdp.horizon
            )));
        }
        if let Some(a) = self.actions.iter().find(|&&a| a >= mdp.num_actions) {
            return Err(Error::IndexOutOfRange(format!(
                "action {a} with A={}",
                mdp.num_actions
            )));
        }
        Ok(())
    }
}

/// One transition observed during an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// A complete episode of exactly `H` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub episode: usize,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.state)
    }
}

/// Action and state values of a policy, stage-major.
///
/// `V(·, H)` is implicitly zero; stage `h` values include rewards from `h`
/// through `H - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    q: Vec<f64>,
    v: Vec<f64>,
}

impl ValueTable {
    pub(crate) fn new(num_states: usize, num_actions: usize, horizon: usize, q: Vec<f64>, v: Vec<f64>) -> Self {
        Self {
            num_states,
            num_actions,
            horizon,
            q,
            v,
        }
    }

    #[inline]
    pub fn q(&self, s: usize, a: usize, h: usize) -> f64 {
        self.q[(h * self.num_states + s) * self.num_actions + a]
    }

    #[inline]
    pub fn v(&self, s: usize, h: usize) -> f64 {
        self.v[h * self.num_states + s]
    }

    /// State values at stage `h`.
    pub fn v_stage(&self, h: usize) -> &[f64] {
        &self.v[h * self.num_states..(h + 1) * self.num_states]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Exact backward recursion
/// `Q(s,a,h) = R̄(s,a) + Σ P(s'|s,a) V(s',h+1)`, `V(s,h) = Q(s, π(s,h), h)`.
pub fn evaluate_policy(mdp: &TabularMdp, policy: &Policy) -> Result<ValueTable> {
    policy.check_against(mdp)?;
    let (s_n, a_n, h_n) = (mdp.num_states, mdp.num_actions, mdp.horizon);
    let mut q = vec![0.0; h_n * s_n * a_n];
    let mut v = vec![0.0; h_n * s_n];
    let zeros = vec![0.0; s_n];
    for h in (0..h_n).rev() {
        let (cur, next) = v.split_at_mut((h + 1) * s_n);
        let next_v = if h + 1 < h_n { &next[..s_n] } else { &zeros[..] };
        for s in 0..s_n {
            for a in 0..a_n {
                q[(h * s_n + s) * a_n + a] =
                    mdp.mean_reward(s, a) + mdp.expected_next(s, a, next_v);
            }
            cur[h * s_n + s] = q[(h * s_n + s) * a_n + policy.action(s, h)];
        }
    }
    Ok(ValueTable::new(s_n, a_n, h_n, q, v))
}

/// Stage-0 state values of a policy, without materializing `Q`.
pub(crate) fn initial_values(mdp: &TabularMdp, policy: &Policy) -> Vec<f64> {
    let s_n = mdp.num_states;
    let mut next = vec![0.0; s_n];
    let mut cur = vec![0.0; s_n];
    for h in (0..mdp.horizon).rev() {
        for (s, slot) in cur.iter_mut().enumerate() {
            let a = policy.action(s, h);
            *slot = mdp.mean_reward(s, a) + mdp.expected_next(s, a, &next);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    next
}

/// Mean episodic reward `μ(π) = Σ_s ρ(s) V_π(s, 0)`.
pub fn mean_episodic_reward(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    policy.check_against(mdp)?;
    Ok(mean_episodic_reward_unchecked(mdp, policy))
}

pub(crate) fn mean_episodic_reward_unchecked(mdp: &TabularMdp, policy: &Policy) -> f64 {
    initial_values(mdp, policy)
        .iter()
        .zip(&mdp.initial_dist)
        .map(|(v, p)| v * p)
        .sum()
}

/// Draws an index from a probability vector.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Runs one episode of `H` steps from `s_1 ~ ρ`.
pub fn simulate_episode<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &Policy,
    rng: &mut R,
    episode: usize,
) -> Result<Trajectory> {
    policy.check_against(mdp)?;
    let mut state = sample_categorical(&mdp.initial_dist, rng);
    let mut steps = Vec::with_capacity(mdp.horizon);
    for h in 0..mdp.horizon {
        let action = policy.action(state, h);
        let noise = mdp.reward_noise(state, action);
        let mut reward = mdp.mean_reward(state, action);
        if noise > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            reward += noise * z;
        }
        let next_state = sample_categorical(mdp.transition_row(state, action), rng);
        steps.push(Step {
            state,
            action,
            reward,
            next_state,
        });
        state = next_state;
    }
    Ok(Trajectory { episode, steps })
}
