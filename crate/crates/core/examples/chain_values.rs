//! Exact values on the stochastic chain.

use pspe::envs::{default_chain, LEFT, RIGHT};
use pspe::mdp::{evaluate_policy, mean_episodic_reward, Policy};
use pspe::planner::{backward_induction, DEFAULT_TIE_TOL};

pub fn run() -> pspe::Result<()> {
    let chain = default_chain(10)?;
    let right = Policy::constant(10, 10, RIGHT);
    let left = Policy::constant(10, 10, LEFT);
    println!("always right: {:.6}", mean_episodic_reward(&chain, &right)?);
    println!("always left:  {:.6}", mean_episodic_reward(&chain, &left)?);

    let sets = backward_induction(&chain, DEFAULT_TIE_TOL);
    println!("optimal:      {:.6}", sets.values().v(0, 0));
    println!("policies:     {}", chain.policy_count());
    println!("optimal ones: {}", sets.policy_count());

    let v = evaluate_policy(&chain, &right)?;
    let row: Vec<String> = (0..10).map(|h| format!("{:.3}", v.v(h, h))).collect();
    println!("V along the diagonal: {}", row.join(" "));
    Ok(())
}

#[allow(dead_code)]
fn main() -> pspe::Result<()> {
    run()
}
