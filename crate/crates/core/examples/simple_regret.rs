//! Simple regret, sub-optimal confidence mass and their decay during a run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pspe::agents::{run_agent, MetricsSchedule};
use pspe::envs::make_stochastic_chain;
use pspe::metrics::{fit_decay_rate, sandwich_check};
use pspe::planner::{enumerate_gaps, DEFAULT_POLICY_LIMIT, DEFAULT_TIE_TOL};
use pspe::AgentConfig;

pub fn run() -> pspe::Result<()> {
    let chain = make_stochastic_chain(3, 0.0, 1.0)?;
    let gaps = enumerate_gaps(&chain, DEFAULT_TIE_TOL, DEFAULT_POLICY_LIMIT)?;
    let schedule = MetricsSchedule::new(10, 200, 11);
    let (_, log) = run_agent(&chain, &AgentConfig::pspe(0.5), 150, &mut ChaCha8Rng::seed_from_u64(2), Some(&schedule))?;

    println!("   t   r_hat  theta  sandwich");
    for row in &log.metrics {
        println!(
            "{:>4}  {:.4}  {:.3}  {}",
            row.episode,
            row.r_hat,
            row.theta_hat,
            sandwich_check(row, gaps.min_gap, gaps.max_gap)
        );
    }
    let series: Vec<(usize, f64)> = log.metrics.iter().map(|r| (r.episode, r.theta_hat)).collect();
    match fit_decay_rate(&series, (10, 150)) {
        Ok(fit) => println!("decay rate {:.4} per episode (r² {:.2})", fit.rate, fit.r_squared),
        Err(e) => println!("no fit: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pspe::Result<()> {
    run()
}
