//! Bayesian pure exploration in tabular episodic fixed-horizon MDPs.
//!
//! The crate provides:
//!
//! - [`mdp`]: tabular MDPs, deterministic non-stationary policies, exact
//!   policy evaluation and episode simulation.
//! - [`planner`]: finite-horizon backward induction producing the product
//!   representation of the optimal policy set, with uniform sampling from it
//!   and from the difference of two such sets.
//! - [`posterior`]: Dirichlet-categorical / Normal-Normal conjugate beliefs
//!   over MDPs.
//! - [`agents`]: PSRL, PSPE(β) (posterior sampling with top-two resampling),
//!   uniform random exploration, and the practice-then-evaluate protocol.
//! - [`metrics`]: Monte-Carlo simple regret, sub-optimal confidence mass,
//!   per-policy confidences, the regret sandwich check, cumulative regret
//!   and exponential decay-rate fitting.
//! - [`envs`]: the stochastic chain benchmark and random MDP fixtures.
//! - [`harness`]: seeded multi-trial sweeps and the practice study, with
//!   CSV output.
//! - [`oracle`]: brute-force enumeration routines used to cross-check the
//!   planner and estimators on small instances.
//!
//! All indices (states, actions, stages) are 0-based.

pub mod agents;
pub mod envs;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod metrics;
pub mod oracle;
pub mod planner;
pub mod posterior;
pub mod seed;

pub use agents::{AgentConfig, AgentKind, RunLog};
pub use error::{Error, Result};
pub use mdp::{Policy, TabularMdp, Trajectory, ValueTable};
pub use planner::OptimalActionSets;
pub use posterior::{MdpBelief, PriorConfig};
