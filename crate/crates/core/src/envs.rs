//! Benchmark MDPs.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// Default mean of the small reward for moving left in the first state.
pub const DEFAULT_LEFT_REWARD: f64 = 0.001;
/// Default mean of the reward for moving right in the last state.
pub const DEFAULT_RIGHT_REWARD: f64 = 1.0;

/// Stochastic chain of `n` states with horizon `n`, starting in state 0.
///
/// `LEFT` moves deterministically to `max(s - 1, 0)`. `RIGHT` moves to
/// `min(s + 1, n - 1)` with probability `1 - 1/n` and otherwise slips to
/// `max(s - 1, 0)`. The only rewards are `LEFT` in state 0 and `RIGHT` in
/// state `n - 1`, both with unit noise; every other pair pays exactly 0.
pub fn make_stochastic_chain(n: usize, left_reward_mean: f64, right_reward_mean: f64) -> Result<TabularMdp> {
    if n < 2 {
        return Err(Error::InvalidShape(format!("chain length {n} must be at least 2")));
    }
    let slip = 1.0 / n as f64;
    let mut p = vec![0.0; n * 2 * n];
    let mut r = vec![0.0; n * 2];
    let mut noise = vec![0.0; n * 2];
    for s in 0..n {
        let left = s.saturating_sub(1);
        let right = (s + 1).min(n - 1);
        p[(s * 2 + LEFT) * n + left] = 1.0;
        p[(s * 2 + RIGHT) * n + right] += 1.0 - slip;
        p[(s * 2 + RIGHT) * n + left] += slip;
    }
    r[LEFT] = left_reward_mean;
    noise[LEFT] = 1.0;
    r[(n - 1) * 2 + RIGHT] = right_reward_mean;
    noise[(n - 1) * 2 + RIGHT] = 1.0;
    let mut rho = vec![0.0; n];
    rho[0] = 1.0;
    TabularMdp::from_flat(n, 2, n, rho, p, r, noise)
}

/// Chain with the default reward means.
pub fn default_chain(n: usize) -> Result<TabularMdp> {
    make_stochastic_chain(n, DEFAULT_LEFT_REWARD, DEFAULT_RIGHT_REWARD)
}

/// Random MDP fixture: Dirichlet(1, …, 1) rows, mean rewards uniform in
/// `[-reward_spread, reward_spread]`, uniform `ρ`, unit reward noise.
pub fn make_random_mdp<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
    reward_spread: f64,
) -> Result<TabularMdp> {
    if num_states == 0 || num_actions == 0 || horizon == 0 {
        return Err(Error::InvalidShape(format!(
            "S={num_states}, A={num_actions}, H={horizon} must all be positive"
        )));
    }
    let mut p = Vec::with_capacity(num_states * num_actions * num_states);
    for _ in 0..num_states * num_actions {
        let row: Vec<f64> = (0..num_states).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = row.iter().sum();
        p.extend(row.into_iter().map(|x: f64| x / total));
    }
    let r = (0..num_states * num_actions)
        .map(|_| rng.random_range(-1.0..=1.0) * reward_spread)
        .collect();
    TabularMdp::from_flat(
        num_states,
        num_actions,
        horizon,
        vec![1.0 / num_states as f64; num_states],
        p,
        r,
        vec![1.0; num_states * num_actions],
    )
}
