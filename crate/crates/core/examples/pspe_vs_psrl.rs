//! PSRL against PSPE at a few β on one seeded chain run each.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pspe::agents::run_agent;
use pspe::envs::default_chain;
use pspe::AgentConfig;

pub fn run() -> pspe::Result<()> {
    let chain = default_chain(5)?;
    let episodes = 200;
    for cfg in [AgentConfig::psrl(), AgentConfig::pspe(0.5), AgentConfig::pspe(0.0), AgentConfig::random()] {
        let (_, log) = run_agent(&chain, &cfg, episodes, &mut ChaCha8Rng::seed_from_u64(3), None)?;
        let samples: usize = log.episodes.iter().map(|e| e.posterior_samples).sum();
        println!(
            "{:<10} regret {:>7.2}  last 50: {:>6.2}  posterior draws {:>6}  fallbacks {}",
            cfg.label(),
            log.expected_regret(1..=episodes),
            log.expected_regret(episodes - 49..=episodes),
            samples,
            log.fallback_count
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pspe::Result<()> {
    run()
}
