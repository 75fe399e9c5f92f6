use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pspe::harness::{
    load_config, run_practice_study, run_sweep, with_workers, write_practice, write_sweep, EnvSpec,
    ExperimentConfig,
};
use pspe::{AgentConfig, Error};

#[derive(Parser)]
#[command(name = "pspe", about = "Posterior sampling experiments on episodic MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simple-regret curves for a grid of agents.
    Sweep(Common),
    /// Practice-then-evaluate correlation study.
    Practice {
        #[command(flatten)]
        common: Common,
        /// Evaluation episodes after practice.
        #[arg(long)]
        t_eval: Option<usize>,
        /// Largest practice length.
        #[arg(long)]
        practice_max: Option<usize>,
        /// Spacing of practice lengths.
        #[arg(long, default_value_t = 10)]
        practice_step: usize,
    },
    /// A single agent over several trials.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = AgentArg::Pspe)]
        agent: AgentArg,
    },
    /// Brute-force cross-checks of planner, evaluation, posterior and
    /// regret bounds on small instances.
    OracleCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AgentArg {
    Psrl,
    Pspe,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvArg {
    Chain,
    File,
}

#[derive(Args)]
struct Common {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the reduced desk-scale protocol instead of full scale.
    #[arg(long)]
    desk: bool,
    #[arg(long, value_enum)]
    env: Option<EnvArg>,
    #[arg(long)]
    chain_n: Option<usize>,
    #[arg(long)]
    env_file: Option<PathBuf>,
    /// PSPE β; repeat for a grid.
    #[arg(long)]
    beta: Vec<f64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    eval_samples: Option<usize>,
    #[arg(long)]
    metrics_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn build(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None if self.desk => ExperimentConfig::desk_scale(),
            None => ExperimentConfig::default(),
        };
        match (self.env, &self.env_file) {
            (Some(EnvArg::File), None) => {
                return Err(Error::InvalidConfig("--env file requires --env-file".into()))
            }
            (Some(EnvArg::File) | None, Some(path)) => cfg.env = EnvSpec::File(path.clone()),
            (Some(EnvArg::Chain), _) => cfg.env = EnvSpec::chain(self.chain_n.unwrap_or(10)),
            (None, None) => {}
        }
        if let (Some(n), EnvSpec::Chain { n: cur, .. }) = (self.chain_n, &mut cfg.env) {
            *cur = n;
        }
        if !self.beta.is_empty() {
            cfg.agents = self.beta.iter().map(|&b| AgentConfig::pspe(b)).collect();
            if self.config.is_none() {
                cfg.agents.push(AgentConfig::random());
            }
            cfg.practice_betas = self.beta.clone();
        }
        cfg.episodes = self.episodes.unwrap_or(cfg.episodes);
        cfg.trials = self.trials.unwrap_or(cfg.trials);
        cfg.eval_samples = self.eval_samples.unwrap_or(cfg.eval_samples);
        cfg.metrics_every = self.metrics_every.unwrap_or(cfg.metrics_every);
        cfg.master_seed = self.seed.unwrap_or(cfg.master_seed);
        if self.out.is_some() {
            cfg.output = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

fn output_path(cfg: &ExperimentConfig, default: &str) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn sweep(cfg: ExperimentConfig, workers: usize) -> Result<(), Error> {
    let out = with_workers(workers, || run_sweep(&cfg))??;
    let path = output_path(&cfg, "sweep.csv");
    write_sweep(&out, &path)?;
    let last = cfg.episodes - cfg.episodes % cfg.metrics_every;
    for s in out.summary.iter().filter(|s| s.episode == last) {
        println!(
            "{:<12} t={:<5} simple_regret={:.5} ± {:.5} theta={:.4}",
            s.agent, s.episode, s.mean_simple_regret, s.se_simple_regret, s.mean_theta
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Sweep(common) => {
            let cfg = common.build()?;
            sweep(cfg, common.workers())
        }
        Command::Run { common, agent } => {
            let mut cfg = common.build()?;
            let beta = common.beta.first().copied().unwrap_or(0.5);
            cfg.agents = vec![match agent {
                AgentArg::Psrl => AgentConfig::psrl(),
                AgentArg::Pspe => AgentConfig::pspe(beta),
                AgentArg::Random => AgentConfig::random(),
            }];
            cfg.validate()?;
            sweep(cfg, common.workers())
        }
        Command::Practice {
            common,
            t_eval,
            practice_max,
            practice_step,
        } => {
            let mut cfg = common.build()?;
            if let Some(t) = t_eval {
                cfg.t_eval = t;
            }
            if let Some(max) = practice_max {
                if practice_step == 0 {
                    return Err(Error::InvalidConfig("--practice-step must be >= 1".into()));
                }
                cfg.practice_grid = (0..=max).step_by(practice_step).collect();
            }
            cfg.validate()?;
            let out = with_workers(common.workers(), || run_practice_study(&cfg))??;
            let path = output_path(&cfg, "practice.csv");
            write_practice(&out, &path)?;
            println!(
                "cells={} pearson={:.4} spearman={:.4}",
                out.correlation.cells, out.correlation.pearson, out.correlation.spearman
            );
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::OracleCheck { seed } => {
            let results = pspe::oracle::run_all(seed);
            for r in &results {
                println!("{r}");
            }
            if results.iter().all(|r| r.passed) {
                Ok(())
            } else {
                Err(Error::CheckFailed("oracle suite".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // malformed command lines count as invalid configuration
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::InvalidConfig(_) | Error::Parse(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
