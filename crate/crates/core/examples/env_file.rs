//! Loading an MDP from JSON and learning it with PSRL.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pspe::agents::run_agent;
use pspe::harness::EnvSpec;
use pspe::planner::{backward_induction, DEFAULT_TIE_TOL};
use pspe::AgentConfig;

pub fn run() -> pspe::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/detour.json");
    let mdp = EnvSpec::File(path).build()?;
    let sets = backward_induction(&mdp, DEFAULT_TIE_TOL);
    println!("S={} A={} H={}, V*(0) = {:.3}", mdp.num_states(), mdp.num_actions(), mdp.horizon(), sets.values().v(0, 0));

    let (_, log) = run_agent(&mdp, &AgentConfig::psrl(), 300, &mut ChaCha8Rng::seed_from_u64(5), None)?;
    for (from, to) in [(1, 100), (101, 200), (201, 300)] {
        println!("episodes {from:>3}-{to:>3}: regret {:.3}", log.expected_regret(from..=to));
    }
    let last = &log.episodes.last().expect("episodes ran").policy;
    println!("last policy {:?}", last.table());
    Ok(())
}

#[allow(dead_code)]
fn main() -> pspe::Result<()> {
    run()
}
