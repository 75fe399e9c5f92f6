//! Seeded multi-trial experiments and their CSV outputs.
//!
//! Every (agent, trial) cell derives its random streams from the master
//! seed and the cell's own key, runs independently, and is written in a
//! fixed (agent, trial, episode) order. Output bytes therefore do not
//! depend on the worker count.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{
    practice_then_evaluate, run_agent, AgentConfig, MetricsSchedule, PracticeOptions,
};
use crate::envs::{make_stochastic_chain, DEFAULT_LEFT_REWARD, DEFAULT_RIGHT_REWARD};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::planner::{DEFAULT_MAX_REJECTIONS, DEFAULT_TIE_TOL};
use crate::seed::{derive_seed, rng_for};

/// The PSPE β grid used by the experiments; 1.0 is PSRL.
pub const BETA_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Which true MDP an experiment runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum EnvSpec {
    Chain {
        n: usize,
        #[serde(default = "default_left")]
        left_reward: f64,
        #[serde(default = "default_right")]
        right_reward: f64,
    },
    /// Path to an MDP in the JSON layout of [`crate::mdp::RawMdp`].
    File(PathBuf),
}

fn default_left() -> f64 {
    DEFAULT_LEFT_REWARD
}
fn default_right() -> f64 {
    DEFAULT_RIGHT_REWARD
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec::Chain {
            n: 10,
            left_reward: DEFAULT_LEFT_REWARD,
            right_reward: DEFAULT_RIGHT_REWARD,
        }
    }
}

impl EnvSpec {
    pub fn chain(n: usize) -> Self {
        EnvSpec::Chain {
            n,
            left_reward: DEFAULT_LEFT_REWARD,
            right_reward: DEFAULT_RIGHT_REWARD,
        }
    }

    pub fn build(&self) -> Result<TabularMdp> {
        match self {
            EnvSpec::Chain {
                n,
                left_reward,
                right_reward,
            } => make_stochastic_chain(*n, *left_reward, *right_reward),
            EnvSpec::File(path) => {
                let text = fs::read_to_string(path)?;
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
            }
        }
    }
}

/// Full description of a sweep or practice study. Defaults follow the
/// full-scale protocol: 50 trials, 1000 episodes, 1000 posterior samples
/// per estimate, estimates every 10 episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub agents: Vec<AgentConfig>,
    pub episodes: usize,
    pub trials: usize,
    pub eval_samples: usize,
    pub metrics_every: usize,
    pub master_seed: u64,
    pub tie_tol: f64,
    /// β values of the practice phase.
    pub practice_betas: Vec<f64>,
    /// Practice lengths `T_practice`.
    pub practice_grid: Vec<usize>,
    /// Evaluation length after practice.
    pub t_eval: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut agents: Vec<AgentConfig> = BETA_GRID.iter().map(|&b| AgentConfig::pspe(b)).collect();
        agents.push(AgentConfig::random());
        Self {
            env: EnvSpec::default(),
            agents,
            episodes: 1000,
            trials: 50,
            eval_samples: 1000,
            metrics_every: 10,
            master_seed: 0,
            tie_tol: DEFAULT_TIE_TOL,
            practice_betas: BETA_GRID.to_vec(),
            practice_grid: (0..=1000).step_by(10).collect(),
            t_eval: 1000,
            output: None,
        }
    }
}

impl ExperimentConfig {
    /// Reduced protocol: 20 trials, 600 episodes, 500 posterior samples;
    /// practice lengths 0..=500 step 50 with 500 evaluation episodes.
    pub fn desk_scale() -> Self {
        Self {
            episodes: 600,
            trials: 20,
            eval_samples: 500,
            practice_grid: (0..=500).step_by(50).collect(),
            t_eval: 500,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("trials", self.trials),
            ("episodes", self.episodes),
            ("eval_samples", self.eval_samples),
            ("metrics_every", self.metrics_every),
            ("t_eval", self.t_eval),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        if self.agents.is_empty() {
            return Err(Error::InvalidConfig("agent grid is empty".into()));
        }
        for a in &self.agents {
            a.validate()?;
        }
        if let Some(b) = self.practice_betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::InvalidConfig(format!("practice beta {b} outside [0, 1]")));
        }
        if self.tie_tol.is_nan() || self.tie_tol < 0.0 {
            return Err(Error::InvalidConfig("tie_tol must be >= 0".into()));
        }
        if let EnvSpec::Chain { n, .. } = self.env {
            if n < 2 {
                return Err(Error::InvalidConfig(format!("chain length {n} must be >= 2")));
            }
        }
        Ok(())
    }
}

/// Reads, parses and validates a JSON config. Unknown keys are rejected.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// One metrics point of one (agent, trial) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run_id: String,
    pub agent_kind: String,
    pub beta: Option<f64>,
    pub trial: usize,
    pub episode: usize,
    pub simple_regret: f64,
    pub theta: f64,
    pub cum_regret_expected: f64,
    pub cum_regret_realized: f64,
    pub eval_samples: usize,
    pub fallback_count: usize,
    pub seed: u64,
}

/// Mean and standard error across trials at one (agent, episode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub agent: String,
    pub agent_kind: String,
    pub beta: Option<f64>,
    pub episode: usize,
    pub trials: usize,
    pub mean_simple_regret: f64,
    pub se_simple_regret: f64,
    pub mean_theta: f64,
    pub se_theta: f64,
    pub mean_cum_regret_expected: f64,
    pub se_cum_regret_expected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<MetricsRecord>,
    pub summary: Vec<SweepSummary>,
}

impl SweepOutput {
    /// Summary row for `agent` label at `episode`.
    pub fn summary_at(&self, agent: &str, episode: usize) -> Option<&SweepSummary> {
        self.summary.iter().find(|s| s.agent == agent && s.episode == episode)
    }
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn cell_seed(master: u64, agent: &AgentConfig, trial: usize) -> u64 {
    derive_seed(master, &[agent.seed_key(), trial as u64])
}

fn run_cell(cfg: &ExperimentConfig, mdp: &TabularMdp, agent: &AgentConfig, trial: usize) -> Result<Vec<MetricsRecord>> {
    let seed = cell_seed(cfg.master_seed, agent, trial);
    let mut rng = rng_for(derive_seed(seed, &[0]));
    let schedule = MetricsSchedule {
        every: cfg.metrics_every,
        n_samples: cfg.eval_samples,
        tie_tol: cfg.tie_tol,
        seed: derive_seed(seed, &[1]),
    };
    let (_, log) = run_agent(mdp, agent, cfg.episodes, &mut rng, Some(&schedule))?;
    let run_id = format!("{}/{}", agent.label(), trial);
    Ok(log
        .metrics
        .iter()
        .map(|m| MetricsRecord {
            run_id: run_id.clone(),
            agent_kind: agent.kind.as_str().to_string(),
            beta: agent.reported_beta(),
            trial,
            episode: m.episode,
            simple_regret: m.r_hat,
            theta: m.theta_hat,
            cum_regret_expected: log.expected_regret(1..=m.episode),
            cum_regret_realized: log.realized_regret(1..=m.episode),
            eval_samples: m.n_samples,
            fallback_count: m.fallback_count,
            seed,
        })
        .collect())
}

/// Runs every (agent, trial) cell and aggregates across trials.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let mdp = cfg.env.build()?;
    let cells: Vec<(usize, usize)> = (0..cfg.agents.len())
        .flat_map(|a| (0..cfg.trials).map(move |t| (a, t)))
        .collect();
    let per_cell: Vec<Vec<MetricsRecord>> = cells
        .par_iter()
        .map(|&(a, t)| run_cell(cfg, &mdp, &cfg.agents[a], t))
        .collect::<Result<_>>()?;
    let mut summary = Vec::new();
    for (a, agent) in cfg.agents.iter().enumerate() {
        let agent_rows = &per_cell[a * cfg.trials..(a + 1) * cfg.trials];
        let points = agent_rows[0].len();
        for k in 0..points {
            let at = |f: fn(&MetricsRecord) -> f64| -> Vec<f64> { agent_rows.iter().map(|r| f(&r[k])).collect() };
            let (mr, sr) = mean_se(&at(|r| r.simple_regret));
            let (mt, st) = mean_se(&at(|r| r.theta));
            let (mc, sc) = mean_se(&at(|r| r.cum_regret_expected));
            summary.push(SweepSummary {
                agent: agent.label(),
                agent_kind: agent.kind.as_str().to_string(),
                beta: agent.reported_beta(),
                episode: agent_rows[0][k].episode,
                trials: cfg.trials,
                mean_simple_regret: mr,
                se_simple_regret: sr,
                mean_theta: mt,
                se_theta: st,
                mean_cum_regret_expected: mc,
                se_cum_regret_expected: sc,
            });
        }
    }
    Ok(SweepOutput {
        rows: per_cell.into_iter().flatten().collect(),
        summary,
    })
}

/// One (β, T_practice, trial) practice-then-evaluate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PracticeRecord {
    pub run_id: String,
    pub agent_kind: String,
    pub beta: Option<f64>,
    pub trial: usize,
    /// Switch point; the simple regret and θ columns are measured here.
    pub episode: usize,
    pub simple_regret: f64,
    pub theta: f64,
    /// Expected regret over practice and evaluation.
    pub cum_regret_expected: f64,
    /// Realized regret over the evaluation phase.
    pub cum_regret_realized: f64,
    pub eval_samples: usize,
    pub fallback_count: usize,
    pub seed: u64,
    pub t_practice: usize,
    pub practice_end_simple_regret: f64,
    /// Expected regret over the evaluation phase only.
    pub eval_cum_regret: f64,
}

/// Trial means of one (β, T_practice) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PracticeCell {
    pub beta: f64,
    pub t_practice: usize,
    pub trials: usize,
    pub mean_practice_end_simple_regret: f64,
    pub se_practice_end_simple_regret: f64,
    pub mean_eval_cum_regret: f64,
    pub se_eval_cum_regret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PracticeOutput {
    pub rows: Vec<PracticeRecord>,
    pub cells: Vec<PracticeCell>,
    pub correlation: Correlation,
}

/// Pearson correlation; NaN when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Ranks with ties sharing their average rank (1-based).
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Practice-then-evaluate over the (β, T_practice, trial) grid.
///
/// Trials share their acting stream across all cells (common random
/// numbers), so `β = 1` rows replay plain PSRL of the same total length.
pub fn run_practice_study(cfg: &ExperimentConfig) -> Result<PracticeOutput> {
    cfg.validate()?;
    if cfg.practice_grid.is_empty() || cfg.practice_betas.is_empty() {
        return Err(Error::InvalidConfig("practice grid is empty".into()));
    }
    let mdp = cfg.env.build()?;
    let mut cells = Vec::new();
    for &beta in &cfg.practice_betas {
        for &tp in &cfg.practice_grid {
            for trial in 0..cfg.trials {
                cells.push((beta, tp, trial));
            }
        }
    }
    let rows: Vec<PracticeRecord> = cells
        .par_iter()
        .map(|&(beta, tp, trial)| {
            let seed = derive_seed(cfg.master_seed, &[trial as u64]);
            let mut rng = rng_for(derive_seed(seed, &[0]));
            let opts = PracticeOptions {
                eval_samples: cfg.eval_samples,
                tie_tol: cfg.tie_tol,
                metrics_seed: derive_seed(seed, &[1]),
                max_resamples: crate::agents::DEFAULT_MAX_RESAMPLES,
                max_rejections: DEFAULT_MAX_REJECTIONS,
            };
            let run = practice_then_evaluate(&mdp, beta, tp, cfg.t_eval, &mut rng, &opts)?;
            Ok(PracticeRecord {
                run_id: format!("practice-{beta}-{tp}/{trial}"),
                agent_kind: "pspe+psrl".to_string(),
                beta: Some(beta),
                trial,
                episode: tp,
                simple_regret: run.practice_end.r_hat,
                theta: run.practice_end.theta_hat,
                cum_regret_expected: run.total_cum_regret,
                cum_regret_realized: run.eval_realized_regret,
                eval_samples: cfg.eval_samples,
                fallback_count: run.log.fallback_count,
                seed,
                t_practice: tp,
                practice_end_simple_regret: run.practice_end.r_hat,
                eval_cum_regret: run.eval_cum_regret,
            })
        })
        .collect::<Result<_>>()?;
    let summary: Vec<PracticeCell> = rows
        .chunks(cfg.trials)
        .map(|chunk| {
            let sr: Vec<f64> = chunk.iter().map(|r| r.practice_end_simple_regret).collect();
            let cr: Vec<f64> = chunk.iter().map(|r| r.eval_cum_regret).collect();
            let (ms, ss) = mean_se(&sr);
            let (mc, sc) = mean_se(&cr);
            PracticeCell {
                beta: chunk[0].beta.unwrap_or(f64::NAN),
                t_practice: chunk[0].t_practice,
                trials: chunk.len(),
                mean_practice_end_simple_regret: ms,
                se_practice_end_simple_regret: ss,
                mean_eval_cum_regret: mc,
                se_eval_cum_regret: sc,
            }
        })
        .collect();
    let xs: Vec<f64> = summary.iter().map(|c| c.mean_practice_end_simple_regret).collect();
    let ys: Vec<f64> = summary.iter().map(|c| c.mean_eval_cum_regret).collect();
    let correlation = Correlation {
        pearson: pearson(&xs, &ys),
        spearman: spearman(&xs, &ys),
        cells: xs.len(),
    };
    Ok(PracticeOutput {
        rows,
        cells: summary,
        correlation,
    })
}

/// `<dir>/<stem>.<suffix>` next to `path`.
pub fn companion_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Writes the metrics CSV to `path` and the per-episode summary to
/// `<stem>.summary.csv`.
pub fn write_sweep(out: &SweepOutput, path: &Path) -> Result<()> {
    write_csv(path, &out.rows)?;
    write_csv(&companion_path(path, "summary.csv"), &out.summary)
}

/// Writes the per-run CSV to `path`, cell means to `<stem>.summary.csv`
/// and the correlations to `<stem>.correlation.json`.
pub fn write_practice(out: &PracticeOutput, path: &Path) -> Result<()> {
    write_csv(path, &out.rows)?;
    write_csv(&companion_path(path, "summary.csv"), &out.cells)?;
    let json = serde_json::to_string_pretty(&out.correlation).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(companion_path(path, "correlation.json"), json + "\n")?;
    Ok(())
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("{}").unwrap();
        assert_eq!((cfg.eval_samples, cfg.metrics_every, cfg.trials), (1000, 10, 50));
        assert_eq!(cfg.env, EnvSpec::chain(10));
        let cfg = parse_config(r#"{"env": {"chain": {"n": 5}}, "agents": [{"kind": "pspe", "beta": 0.25}]}"#).unwrap();
        assert_eq!(cfg.agents[0], AgentConfig::pspe(0.25));
    }

    #[test]
    fn invalid_and_malformed_configs() {
        assert!(matches!(parse_config(r#"{"trials": 0}"#), Err(Error::InvalidConfig(_))));
        assert!(matches!(parse_config(r#"{"trails": 3}"#), Err(Error::Parse(_))));
        assert!(matches!(parse_config("{not json"), Err(Error::Parse(_))));
    }

    #[test]
    fn spearman_handles_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 100.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn companion_names() {
        assert_eq!(companion_path(Path::new("out/m.csv"), "summary.csv"), PathBuf::from("out/m.summary.csv"));
    }
}
