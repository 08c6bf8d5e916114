//! Planning and evaluation of knock sequences for doors that open stochastically
//! and give no feedback.

pub mod configurations;
pub mod distributions;
pub mod error;
pub mod evaluator;
pub mod numeric;
pub mod planner;
pub mod price;
pub mod simulator;
pub mod twodoor;

pub use configurations::{ConfigSpec, Dependency, DoorConfiguration, KnockGenerator, KnockSequence};
pub use distributions::{DistributionKind, FundamentalDistribution};
pub use error::{Error, Result, Violation};
pub use evaluator::{expected_time, expected_time_cascading, expected_time_independent, feedback_baseline, EvalOptions};
pub use planner::{a_simp, doubling_sequence, dp_table, optimal_prefix, phase_doubling, DpTable};
pub use price::{price_report, PriceReport};
pub use simulator::{estimate_expected_time, Estimate, SimOptions, TrialOutcome};
pub use twodoor::{SemiFractionalPlan, TwoDoorParams, TwoDoorSequence};
