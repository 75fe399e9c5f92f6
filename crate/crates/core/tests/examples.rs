//! Every example runs to completion.

#[path = "../examples/chain_values.rs"]
mod chain_values;

#[test]
fn chain_values_runs() {
    chain_values::run().unwrap();
}

#[path = "../examples/plan_and_sample.rs"]
mod plan_and_sample;

#[test]
fn plan_and_sample_runs() {
    plan_and_sample::run().unwrap();
}

#[path = "../examples/posterior_updates.rs"]
mod posterior_updates;

#[test]
fn posterior_updates_runs() {
    posterior_updates::run().unwrap();
}

#[path = "../examples/pspe_vs_psrl.rs"]
mod pspe_vs_psrl;

#[test]
fn pspe_vs_psrl_runs() {
    pspe_vs_psrl::run().unwrap();
}

#[path = "../examples/simple_regret.rs"]
mod simple_regret;

#[test]
fn simple_regret_runs() {
    simple_regret::run().unwrap();
}

#[path = "../examples/beta_sweep.rs"]
mod beta_sweep;

#[test]
fn beta_sweep_runs() {
    beta_sweep::run().unwrap();
}

#[path = "../examples/practice_study.rs"]
mod practice_study;

#[test]
fn practice_study_runs() {
    practice_study::run().unwrap();
}

#[path = "../examples/env_file.rs"]
mod env_file;

#[test]
fn env_file_runs() {
    env_file::run().unwrap();
}
