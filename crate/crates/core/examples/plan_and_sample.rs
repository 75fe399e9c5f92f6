//! Optimal action sets, uniform optimal policies and set differences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pspe::envs::{make_random_mdp, make_stochastic_chain};
use pspe::planner::{
    backward_induction, enumerate_gaps, is_optimal_policy, sample_optimal_policy, sample_policy_from_difference,
    DEFAULT_MAX_REJECTIONS, DEFAULT_POLICY_LIMIT, DEFAULT_TIE_TOL,
};

pub fn run() -> pspe::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // left reward 0 leaves every late-stage action tied
    let chain = make_stochastic_chain(3, 0.0, 1.0)?;
    let sets = backward_induction(&chain, DEFAULT_TIE_TOL);
    for h in 0..3 {
        let row: Vec<String> = (0..3).map(|s| format!("{:?}", sets.actions(s, h))).collect();
        println!("stage {h}: {}", row.join(" "));
    }
    println!("|Π_M| = {}", sets.policy_count());
    let p = sample_optimal_policy(&sets, &mut rng);
    println!("sampled optimal policy {:?}", p.table());

    let gaps = enumerate_gaps(&chain, DEFAULT_TIE_TOL, DEFAULT_POLICY_LIMIT)?;
    println!(
        "μ* = {:.4}, gaps in [{:.4}, {:.4}], {} optimal of {}",
        gaps.mu_star,
        gaps.min_gap,
        gaps.max_gap,
        gaps.num_optimal,
        chain.policy_count()
    );

    let a = backward_induction(&make_random_mdp(3, 3, 2, &mut rng, 1.0)?, DEFAULT_TIE_TOL);
    let b = backward_induction(&make_random_mdp(3, 3, 2, &mut rng, 1.0)?, DEFAULT_TIE_TOL);
    println!("shared optimal policies: {}", a.intersection_count(&b));
    if !a.is_subset_of(&b) {
        let q = sample_policy_from_difference(&a, &b, &mut rng, DEFAULT_MAX_REJECTIONS)?;
        println!("from the difference: {:?} (optimal for b: {})", q.table(), is_optimal_policy(&b, &q));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pspe::Result<()> {
    run()
}
