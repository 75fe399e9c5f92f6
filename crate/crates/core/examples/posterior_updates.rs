//! Conjugate updates, posterior draws and belief snapshots.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pspe::envs::{default_chain, RIGHT};
use pspe::mdp::{simulate_episode, Policy};
use pspe::posterior::{posterior_marginals, sample_mdp, update_belief, MdpBelief};

pub fn run() -> pspe::Result<()> {
    let chain = default_chain(4)?;
    let mut belief = MdpBelief::for_mdp(&chain);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let right = Policy::constant(4, 4, RIGHT);
    for t in 1..=50 {
        let traj = simulate_episode(&chain, &right, &mut rng, t)?;
        update_belief(&mut belief, &traj)?;
    }

    for s in 0..4 {
        let m = posterior_marginals(&belief, s, RIGHT)?;
        println!(
            "s={s} right: counts {:?}, reward N({:.3}, {:.4})",
            m.concentration, m.reward_mean, m.reward_variance
        );
    }

    let draw = sample_mdp(&belief, &mut rng);
    println!("one posterior draw of P(·|0, right): {:.3?}", draw.transition_row(0, RIGHT));
    println!("true row:                            {:.3?}", chain.transition_row(0, RIGHT));

    let json = serde_json::to_string(&belief).expect("beliefs serialize");
    let back: MdpBelief = serde_json::from_str(&json).expect("and parse back");
    assert_eq!(back, belief);
    println!("snapshot: {} bytes", json.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> pspe::Result<()> {
    run()
}
