//! Practice with PSPE, evaluate with PSRL, and correlate the two regrets.

use pspe::harness::{run_practice_study, EnvSpec, ExperimentConfig};

pub fn run() -> pspe::Result<()> {
    let cfg = ExperimentConfig {
        env: EnvSpec::chain(5),
        trials: 4,
        eval_samples: 100,
        practice_betas: vec![0.0, 0.5, 1.0],
        practice_grid: vec![0, 25, 50, 100],
        t_eval: 50,
        ..ExperimentConfig::default()
    };
    let out = run_practice_study(&cfg)?;
    println!(" beta  T_practice  simple_regret  eval_regret");
    for c in &out.cells {
        println!(
            "{:>5}  {:>10}  {:>13.4}  {:>11.3}",
            c.beta, c.t_practice, c.mean_practice_end_simple_regret, c.mean_eval_cum_regret
        );
    }
    println!(
        "pearson {:.3}, spearman {:.3} over {} cells",
        out.correlation.pearson, out.correlation.spearman, out.correlation.cells
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> pspe::Result<()> {
    run()
}
