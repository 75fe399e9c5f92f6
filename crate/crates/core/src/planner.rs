//! Finite-horizon dynamic programming over tabular MDPs.
//!
//! The optimal policy set of an MDP is a product over (state, stage) of the
//! actions attaining the optimal Q-value, so it is stored coordinate-wise
//! and never materialized. Counting, subset tests and intersections all
//! factor over coordinates.

use num_bigint::BigUint;
use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{mean_episodic_reward_unchecked, Policy, TabularMdp, ValueTable};

/// Default tolerance for treating two Q-values as tied.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;
/// Default number of uniform draws from `Π_M̃` before the forced-coordinate
/// fallback in [`sample_policy_from_difference`].
pub const DEFAULT_MAX_REJECTIONS: usize = 64;
/// Default cap on enumerated policies.
pub const DEFAULT_POLICY_LIMIT: u64 = 1_000_000;

/// Per-(state, stage) optimal action sets plus the optimal value table.
#[derive(Debug, Clone)]
pub struct OptimalActionSets {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    /// `mask[(h * S + s) * A + a]`
    mask: Vec<bool>,
    /// Set sizes per coordinate `h * S + s`.
    sizes: Vec<usize>,
    values: ValueTable,
}

impl OptimalActionSets {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Optimal `Q*` and `V*`.
    pub fn values(&self) -> &ValueTable {
        &self.values
    }

    #[inline]
    pub fn contains(&self, s: usize, h: usize, a: usize) -> bool {
        self.mask[(h * self.num_states + s) * self.num_actions + a]
    }

    /// Optimal actions at `(s, h)` in increasing order.
    pub fn actions(&self, s: usize, h: usize) -> Vec<usize> {
        (0..self.num_actions).filter(|&a| self.contains(s, h, a)).collect()
    }

    fn coord_mask(&self, c: usize) -> &[bool] {
        &self.mask[c * self.num_actions..(c + 1) * self.num_actions]
    }

    fn num_coords(&self) -> usize {
        self.num_states * self.horizon
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.num_states == other.num_states
            && self.num_actions == other.num_actions
            && self.horizon == other.horizon
    }

    /// Exact `|Π_M|`.
    pub fn policy_count(&self) -> BigUint {
        self.sizes
            .iter()
            .fold(BigUint::from(1u32), |acc, &n| acc * BigUint::from(n))
    }

    /// Natural log of `|Π_M|`.
    pub fn log_policy_count(&self) -> f64 {
        self.sizes.iter().map(|&n| (n as f64).ln()).sum()
    }

    /// `|Π_self ∩ Π_other|` as the product of coordinate-wise intersections.
    pub fn intersection_count(&self, other: &Self) -> BigUint {
        assert!(self.same_shape(other), "action sets of different shapes");
        (0..self.num_coords()).fold(BigUint::from(1u32), |acc, c| {
            let common = self
                .coord_mask(c)
                .iter()
                .zip(other.coord_mask(c))
                .filter(|(x, y)| **x && **y)
                .count();
            acc * BigUint::from(common)
        })
    }

    /// `Π_self ⊆ Π_other`. Both are products of non-empty sets, so this
    /// holds iff it holds at every coordinate.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        assert!(self.same_shape(other), "action sets of different shapes");
        self.mask.iter().zip(&other.mask).all(|(x, y)| !*x || *y)
    }

    /// Iterates every policy in the product set. Callers bound the count.
    pub fn iter_policies(&self) -> impl Iterator<Item = Policy> + '_ {
        let lists: Vec<Vec<usize>> = (0..self.num_coords())
            .map(|c| {
                self.coord_mask(c)
                    .iter()
                    .enumerate()
                    .filter_map(|(a, &m)| m.then_some(a))
                    .collect()
            })
            .collect();
        let (s_n, h_n) = (self.num_states, self.horizon);
        MixedRadix::new(lists.iter().map(Vec::len).collect()).map(move |digits| {
            let table = digits.iter().enumerate().map(|(c, &d)| lists[c][d]).collect();
            Policy::from_table_unchecked(s_n, h_n, table)
        })
    }
}

/// Odometer over `Π_i [0, radix_i)`, least significant digit first.
struct MixedRadix {
    radices: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl MixedRadix {
    fn new(radices: Vec<usize>) -> Self {
        let current = if radices.contains(&0) {
            None
        } else {
            Some(vec![0; radices.len()])
        };
        Self { radices, current }
    }
}

impl Iterator for MixedRadix {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut i = 0;
        loop {
            if i == cur.len() {
                self.current = None;
                break;
            }
            cur[i] += 1;
            if cur[i] < self.radices[i] {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
        Some(out)
    }
}

/// Iterates all `A^(S·H)` deterministic policies of the given shape.
pub fn enumerate_policies(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
) -> impl Iterator<Item = Policy> {
    MixedRadix::new(vec![num_actions; num_states * horizon])
        .map(move |table| Policy::from_table_unchecked(num_states, horizon, table))
}

/// Backward induction producing `Q*`, `V*` and the per-(s, h) sets
/// `{a : Q*(s,a,h) ≥ V*(s,h) − tie_tol}`.
pub fn backward_induction(mdp: &TabularMdp, tie_tol: f64) -> OptimalActionSets {
    let (s_n, a_n, h_n) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut q = vec![0.0; h_n * s_n * a_n];
    let mut v = vec![0.0; h_n * s_n];
    let mut mask = vec![false; h_n * s_n * a_n];
    let mut sizes = vec![0usize; h_n * s_n];
    let zeros = vec![0.0; s_n];
    for h in (0..h_n).rev() {
        let (cur, next) = v.split_at_mut((h + 1) * s_n);
        let next_v = if h + 1 < h_n { &next[..s_n] } else { &zeros[..] };
        for s in 0..s_n {
            let c = h * s_n + s;
            let row = &mut q[c * a_n..(c + 1) * a_n];
            let mut best = f64::NEG_INFINITY;
            for (a, slot) in row.iter_mut().enumerate() {
                *slot = mdp.mean_reward(s, a) + mdp.expected_next(s, a, next_v);
                best = best.max(*slot);
            }
            cur[c] = best;
            let mut n = 0;
            for (a, &qa) in row.iter().enumerate() {
                if qa >= best - tie_tol {
                    mask[c * a_n + a] = true;
                    n += 1;
                }
            }
            sizes[c] = n;
        }
    }
    OptimalActionSets {
        num_states: s_n,
        num_actions: a_n,
        horizon: h_n,
        mask,
        sizes,
        values: ValueTable::new(s_n, a_n, h_n, q, v),
    }
}

/// Draws the `k`-th (0-based) member of a coordinate mask.
fn nth_member(mask: &[bool], k: usize) -> usize {
    mask.iter()
        .enumerate()
        .filter_map(|(a, &m)| m.then_some(a))
        .nth(k)
        .expect("rank within set size")
}

/// Uniform draw from `Π_M`: each coordinate independently uniform over its
/// optimal set. Singleton coordinates consume no randomness.
pub fn sample_optimal_policy<R: Rng + ?Sized>(sets: &OptimalActionSets, rng: &mut R) -> Policy {
    let table = (0..sets.num_coords())
        .map(|c| {
            let mask = sets.coord_mask(c);
            match sets.sizes[c] {
                1 => nth_member(mask, 0),
                n => nth_member(mask, rng.random_range(0..n)),
            }
        })
        .collect();
    Policy::from_table_unchecked(sets.num_states, sets.horizon, table)
}

/// Membership of `policy` in the product set.
pub fn is_optimal_policy(sets: &OptimalActionSets, policy: &Policy) -> bool {
    if policy.num_states() != sets.num_states || policy.horizon() != sets.horizon {
        return false;
    }
    policy
        .table()
        .iter()
        .enumerate()
        .all(|(c, &a)| a < sets.num_actions && sets.coord_mask(c)[a])
}

/// Draws a policy from `Π_tilde − Π_base`.
///
/// Up to `max_rejections` uniform draws from `Π_tilde` are tried first. If
/// all land in `Π_base`, one coordinate where `tilde ⊄ base` is chosen
/// uniformly, its action is forced uniformly from `tilde − base`, and every
/// other coordinate is uniform over `tilde`. The fallback is not exactly
/// uniform over the difference.
pub fn sample_policy_from_difference<R: Rng + ?Sized>(
    sets_tilde: &OptimalActionSets,
    sets_base: &OptimalActionSets,
    rng: &mut R,
    max_rejections: usize,
) -> Result<Policy> {
    if sets_tilde.is_subset_of(sets_base) {
        return Err(Error::EmptyDifference);
    }
    for _ in 0..max_rejections {
        let p = sample_optimal_policy(sets_tilde, rng);
        if !is_optimal_policy(sets_base, &p) {
            return Ok(p);
        }
    }
    let a_n = sets_tilde.num_actions;
    let escape: Vec<usize> = (0..sets_tilde.num_coords())
        .filter(|&c| {
            sets_tilde
                .coord_mask(c)
                .iter()
                .zip(sets_base.coord_mask(c))
                .any(|(t, b)| *t && !*b)
        })
        .collect();
    let forced = escape[rng.random_range(0..escape.len())];
    let mut p = sample_optimal_policy(sets_tilde, rng);
    let only_tilde: Vec<bool> = (0..a_n)
        .map(|a| sets_tilde.coord_mask(forced)[a] && !sets_base.coord_mask(forced)[a])
        .collect();
    let n = only_tilde.iter().filter(|&&m| m).count();
    let mut table = p.table().to_vec();
    table[forced] = nth_member(&only_tilde, rng.random_range(0..n));
    p = Policy::from_table_unchecked(sets_tilde.num_states, sets_tilde.horizon, table);
    Ok(p)
}

/// Gap statistics from exhaustive policy enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSummary {
    /// `max_π μ(π)` over all enumerated policies.
    pub mu_star: f64,
    /// Smallest `μ* − μ(π)` over non-optimal policies; 0 when every policy
    /// is optimal.
    pub min_gap: f64,
    /// Largest `μ* − μ(π)` over non-optimal policies; 0 when every policy
    /// is optimal.
    pub max_gap: f64,
    pub num_optimal: BigUint,
}

/// Enumerates every deterministic policy and reports gap extremes over the
/// policies outside `Π*`, with `Π*` decided by [`is_optimal_policy`].
pub fn enumerate_gaps(mdp: &TabularMdp, tie_tol: f64, policy_limit: u64) -> Result<GapSummary> {
    let count = mdp.policy_count();
    if count > BigUint::from(policy_limit) {
        return Err(Error::TooManyPolicies {
            count: count.to_string(),
            limit: policy_limit,
        });
    }
    let sets = backward_induction(mdp, tie_tol);
    let mut mu_star = f64::NEG_INFINITY;
    let mut suboptimal = Vec::new();
    let mut num_optimal = 0u64;
    for p in enumerate_policies(mdp.num_states(), mdp.num_actions(), mdp.horizon()) {
        let mu = mean_episodic_reward_unchecked(mdp, &p);
        mu_star = mu_star.max(mu);
        if is_optimal_policy(&sets, &p) {
            num_optimal += 1;
        } else {
            suboptimal.push(mu);
        }
    }
    let (min_gap, max_gap) = suboptimal.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), mu| (lo.min(mu_star - mu), hi.max(mu_star - mu)),
    );
    let (min_gap, max_gap) = if suboptimal.is_empty() {
        (0.0, 0.0)
    } else {
        (min_gap, max_gap)
    };
    Ok(GapSummary {
        mu_star,
        min_gap,
        max_gap,
        num_optimal: BigUint::from(num_optimal),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bandit(means: &[f64]) -> TabularMdp {
        let a = means.len();
        TabularMdp::from_flat(1, a, 1, vec![1.0], vec![1.0; a], means.to_vec(), vec![1.0; a])
            .unwrap()
    }

    #[test]
    fn exact_tie_keeps_both_actions() {
        let sets = backward_induction(&bandit(&[1.0, 1.0]), DEFAULT_TIE_TOL);
        assert_eq!(sets.actions(0, 0), vec![0, 1]);
        assert_eq!(sets.policy_count(), BigUint::from(2u32));
        assert!(is_optimal_policy(&sets, &Policy::constant(1, 1, 0)));
        assert!(is_optimal_policy(&sets, &Policy::constant(1, 1, 1)));
    }

    #[test]
    fn singleton_sets_sample_deterministically() {
        let sets = backward_induction(&bandit(&[0.0, 2.0, 1.0]), DEFAULT_TIE_TOL);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(sample_optimal_policy(&sets, &mut rng), Policy::constant(1, 1, 1));
        }
    }

    #[test]
    fn tie_sampled_uniformly() {
        let sets = backward_induction(&bandit(&[1.0, 1.0]), DEFAULT_TIE_TOL);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let ones = (0..n)
            .filter(|_| sample_optimal_policy(&sets, &mut rng).action(0, 0) == 1)
            .count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.05, "{freq}");
    }

    #[test]
    fn difference_unique_element() {
        let tilde = backward_induction(&bandit(&[1.0, 1.0, 0.0]), DEFAULT_TIE_TOL);
        let base = backward_induction(&bandit(&[1.0, 0.0, 0.0]), DEFAULT_TIE_TOL);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for max_rej in [0, 1, 64] {
            for _ in 0..50 {
                let p = sample_policy_from_difference(&tilde, &base, &mut rng, max_rej).unwrap();
                assert_eq!(p.action(0, 0), 1);
            }
        }
        assert!(matches!(
            sample_policy_from_difference(&base, &tilde, &mut rng, 64),
            Err(Error::EmptyDifference)
        ));
    }

    #[test]
    fn two_policy_gaps() {
        let g = enumerate_gaps(&bandit(&[1.0, 0.0]), DEFAULT_TIE_TOL, DEFAULT_POLICY_LIMIT).unwrap();
        assert_eq!((g.min_gap, g.max_gap, g.mu_star), (1.0, 1.0, 1.0));
        assert_eq!(g.num_optimal, BigUint::from(1u32));
    }

    #[test]
    fn mixed_radix_counts() {
        assert_eq!(enumerate_policies(2, 3, 2).count(), 81);
        let sets = backward_induction(&bandit(&[1.0, 1.0, 1.0]), DEFAULT_TIE_TOL);
        assert_eq!(sets.iter_policies().count(), 3);
    }

    #[test]
    fn tie_tol_monotone() {
        let m = bandit(&[1.0, 0.999, 0.5]);
        let narrow = backward_induction(&m, 1e-9);
        let wide = backward_induction(&m, 0.01);
        assert!(narrow.is_subset_of(&wide));
        assert_eq!(wide.actions(0, 0), vec![0, 1]);
    }
}
