//! A small β sweep on the chain, written to CSV.

use pspe::harness::{run_sweep, write_sweep, EnvSpec, ExperimentConfig, BETA_GRID};
use pspe::AgentConfig;

pub fn run() -> pspe::Result<()> {
    let mut agents: Vec<AgentConfig> = BETA_GRID.iter().map(|&b| AgentConfig::pspe(b)).collect();
    agents.push(AgentConfig::random());
    let cfg = ExperimentConfig {
        env: EnvSpec::chain(6),
        agents,
        episodes: 100,
        trials: 4,
        eval_samples: 100,
        metrics_every: 25,
        ..ExperimentConfig::default()
    };
    let out = run_sweep(&cfg)?;
    for agent in &cfg.agents {
        let s = out.summary_at(&agent.label(), cfg.episodes).expect("final point is scheduled");
        println!(
            "{:<10} simple regret {:.4} ± {:.4}  theta {:.3}",
            s.agent, s.mean_simple_regret, s.se_simple_regret, s.mean_theta
        );
    }
    let path = std::env::temp_dir().join("pspe-beta-sweep.csv");
    write_sweep(&out, &path)?;
    println!("rows written to {}", path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> pspe::Result<()> {
    run()
}
