//! Monte-Carlo estimates of simple regret and policy confidence.
//!
//! The confidence of a policy is `α(π) = E_M[x_π(M)]` with
//! `x_π(M) = 1{π ∈ Π_M} / |Π_M|` and `M` drawn from the belief. Drawing one
//! policy uniformly from `Π_M` per posterior sample is therefore an unbiased
//! draw from the α-mixture, which is how simple regret and the sub-optimal
//! mass are estimated. Each sampled policy feeds both estimates, so the
//! regret sandwich holds sample by sample.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{mean_episodic_reward_unchecked, Policy, TabularMdp};
use crate::planner::{backward_induction, is_optimal_policy, sample_optimal_policy, OptimalActionSets};
use crate::posterior::{sample_mdp, MdpBelief};
use crate::seed::{derive_seed, rng_for};

/// Slack allowed on both sides of the regret sandwich for floating-point
/// round-off between `μ*` computed by backward induction and by enumeration.
pub const SANDWICH_SLACK: f64 = 1e-12;

/// One scheduled estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub episode: usize,
    pub r_hat: f64,
    pub theta_hat: f64,
    pub n_samples: usize,
    pub fallback_count: usize,
    /// Standard error of `r_hat` across posterior samples.
    pub r_se: f64,
    #[serde(skip)]
    pub confidences: Option<BTreeMap<Policy, f64>>,
}

/// Least-squares fit of `ln θ` against `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub window: (usize, usize),
    /// Negated slope: the per-episode exponential decay rate.
    pub rate: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// The true MDP together with its optimal sets and `μ*`.
#[derive(Debug, Clone)]
pub struct TrueModel<'a> {
    pub mdp: &'a TabularMdp,
    pub sets: OptimalActionSets,
    pub mu_star: f64,
    pub tie_tol: f64,
}

impl<'a> TrueModel<'a> {
    pub fn new(mdp: &'a TabularMdp, tie_tol: f64) -> Self {
        let sets = backward_induction(mdp, tie_tol);
        let mu_star = mdp
            .initial_dist()
            .iter()
            .enumerate()
            .map(|(s, p)| p * sets.values().v(s, 0))
            .sum();
        Self {
            mdp,
            sets,
            mu_star,
            tie_tol,
        }
    }

    /// `μ* − μ(π)`, clamped at zero.
    pub fn gap(&self, policy: &Policy) -> f64 {
        (self.mu_star - mean_episodic_reward_unchecked(self.mdp, policy)).max(0.0)
    }

    /// Paired estimate of `r_t` and `Θ(t)` from `n_samples` posterior draws.
    ///
    /// Sample `i` uses its own stream derived from one draw of `rng`, so the
    /// result does not depend on how samples are spread over threads.
    pub fn estimate<R: Rng + ?Sized>(&self, belief: &MdpBelief, n_samples: usize, rng: &mut R) -> MetricsRow {
        let base: u64 = rng.random();
        let per_sample: Vec<(f64, bool)> = (0..n_samples)
            .into_par_iter()
            .with_min_len(32)
            .map(|i| {
                let mut rng = rng_for(derive_seed(base, &[i as u64]));
                let m = sample_mdp(belief, &mut rng);
                let sets = backward_induction(&m, self.tie_tol);
                let p = sample_optimal_policy(&sets, &mut rng);
                let regret = self.mu_star - mean_episodic_reward_unchecked(self.mdp, &p);
                (regret, !is_optimal_policy(&self.sets, &p))
            })
            .collect();
        let n = n_samples.max(1) as f64;
        let r_hat = per_sample.iter().map(|x| x.0).sum::<f64>() / n;
        let theta_hat = per_sample.iter().filter(|x| x.1).count() as f64 / n;
        let var = if per_sample.len() > 1 {
            per_sample.iter().map(|x| (x.0 - r_hat).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MetricsRow {
            episode: 0,
            r_hat,
            theta_hat,
            n_samples,
            fallback_count: 0,
            r_se: (var / n).sqrt(),
            confidences: None,
        }
    }
}

/// Estimates simple regret and sub-optimal confidence mass of `belief`
/// against `true_mdp`. The returned row has `episode = 0`.
pub fn estimate_simple_regret<R: Rng + ?Sized>(
    belief: &MdpBelief,
    true_mdp: &TabularMdp,
    n_samples: usize,
    rng: &mut R,
    tie_tol: f64,
) -> MetricsRow {
    TrueModel::new(true_mdp, tie_tol).estimate(belief, n_samples, rng)
}

/// Per-policy confidences `α̂(π) = (1/n) Σ_i x_π(M_i)`, computed exactly for
/// each sample from the product structure. Only for instances with at most
/// `policy_limit` deterministic policies.
pub fn estimate_confidences<R: Rng + ?Sized>(
    belief: &MdpBelief,
    n_samples: usize,
    rng: &mut R,
    tie_tol: f64,
    policy_limit: u64,
) -> Result<BTreeMap<Policy, f64>> {
    let count = BigUint::from(belief.num_actions())
        .pow((belief.num_states() * belief.horizon()) as u32);
    if count > BigUint::from(policy_limit) {
        return Err(Error::TooManyPolicies {
            count: count.to_string(),
            limit: policy_limit,
        });
    }
    let base: u64 = rng.random();
    let n = n_samples.max(1) as f64;
    let mut alpha: BTreeMap<Policy, f64> = BTreeMap::new();
    for i in 0..n_samples as u64 {
        let mut rng = rng_for(derive_seed(base, &[i]));
        let m = sample_mdp(belief, &mut rng);
        let sets = backward_induction(&m, tie_tol);
        let weight = (-sets.log_policy_count()).exp() / n;
        for p in sets.iter_policies() {
            *alpha.entry(p).or_insert(0.0) += weight;
        }
    }
    Ok(alpha)
}

/// `θ̂·min_gap ≤ r̂ ≤ θ̂·max_gap`, up to [`SANDWICH_SLACK`] on each side.
pub fn sandwich_check(row: &MetricsRow, min_gap: f64, max_gap: f64) -> bool {
    row.theta_hat * min_gap - SANDWICH_SLACK <= row.r_hat
        && row.r_hat <= row.theta_hat * max_gap + SANDWICH_SLACK
}

/// Running sums of `μ* − μ(π_t)` on the true MDP.
pub fn cumulative_regret(true_mdp: &TabularMdp, policies: &[Policy], tie_tol: f64) -> Vec<f64> {
    let truth = TrueModel::new(true_mdp, tie_tol);
    policies
        .iter()
        .scan(0.0, |acc, p| {
            *acc += truth.gap(p);
            Some(*acc)
        })
        .collect()
}

/// Fits `ln θ(t) ≈ c − Γ t` over points with `t` in the inclusive window
/// and `θ > 0`.
pub fn fit_decay_rate(series: &[(usize, f64)], window: (usize, usize)) -> Result<DecayFit> {
    if window.0 >= window.1 {
        return Err(Error::DegenerateWindow(format!("window {window:?} is empty")));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, th)| *t >= window.0 && *t <= window.1 && *th > 0.0)
        .map(|&(t, th)| (t as f64, th.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateWindow(format!(
            "{} positive points in window {window:?}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateWindow("all points share one episode".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy <= f64::EPSILON * n * my.abs().max(1.0) {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        window,
        rate: -slope,
        r_squared,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(r: f64, th: f64) -> MetricsRow {
        MetricsRow {
            episode: 1,
            r_hat: r,
            theta_hat: th,
            n_samples: 1,
            fallback_count: 0,
            r_se: 0.0,
            confidences: None,
        }
    }

    #[test]
    fn sandwich_edges() {
        assert!(sandwich_check(&row(0.0, 0.0), 0.3, 2.0));
        assert!(!sandwich_check(&row(0.1, 0.0), 0.3, 2.0));
        assert!(sandwich_check(&row(0.5, 0.5), 1.0, 1.0));
        assert!(!sandwich_check(&row(0.6, 0.5), 1.0, 1.0));
    }

    #[test]
    fn exact_exponential_rate() {
        let series: Vec<(usize, f64)> = (0..50).map(|i| (i * 10, (-0.02 * (i * 10) as f64).exp())).collect();
        let fit = fit_decay_rate(&series, (0, 490)).unwrap();
        assert!((fit.rate - 0.02).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_zero_rate() {
        let series: Vec<(usize, f64)> = (1..10).map(|t| (t, 0.3)).collect();
        let fit = fit_decay_rate(&series, (1, 9)).unwrap();
        assert!(fit.rate.abs() < 1e-15);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn too_few_points() {
        let series = vec![(1, 0.5), (2, 0.0), (3, 0.25)];
        assert!(matches!(fit_decay_rate(&series, (1, 3)), Err(Error::DegenerateWindow(_))));
        assert!(fit_decay_rate(&series, (3, 3)).is_err());
    }
}
