//! Incentive schemes for slotted-Aloha random access when the designer
//! can only estimate transmission probabilities through noisy monitoring.
//!
//! Users choose transmission probabilities to maximize `theta ln(T)`;
//! a designer steers them to the welfare optimum either by charging per
//! unit of estimated access (pricing) or by jamming ACKs once the
//! estimate exceeds a target (intervention). The crate covers the model,
//! equilibrium solvers, rule design under each awareness assumption,
//! scenario evaluation and a seeded slot-level simulator.

pub mod design;
pub mod equilibrium;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod noise;
pub mod root;
pub mod sim;

pub use design::{Branch, DesignResult, SearchGrid, SearchResult};
pub use equilibrium::{GameSpec, NeCheck, Perception};
pub use error::{Error, Result};
pub use evaluation::{evaluate_scenario, Design, Evaluation, SweepRow, Threshold};
pub use model::{
    ActionProfile, Awareness, InterventionRule, Monitoring, Outcome, PricingRule, Rule, Scenario,
    Scheme, Slope, User,
};
pub use noise::MonitoringModel;
pub use root::RootRecord;
pub use sim::{EmpiricalOutcome, Estimate, SimConfig};
