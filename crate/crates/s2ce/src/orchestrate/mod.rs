//! Cloud and edge resource management: the analytic cost model, placement
//! optimization (greedy construction, local search, and an exhaustive
//! oracle for small instances), the offloading control loop with
//! hysteresis and SLA guards, and successive-halving knob tuning.

mod controller;
mod cost;
mod place;
mod tune;

pub use controller::{
    offload_step, ControllerCfg, ControllerState, MigrationPlan, UtilizationSample,
};
pub use cost::{estimate_cost, validate_placement, CostEstimate, CostModelCfg, Objective};
pub use place::{place_exhaustive, place_greedy, place_local_search};
pub use tune::{tune_parameters, BenchOutcome, RoundResult, RuntimeKnobs, TuneReport};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OrchestrateError {
    #[error("placement is not total or breaks a pin: {0}")]
    PlacementInvalid(String),
    #[error("no feasible node for operator {0}")]
    PlacementInfeasible(String),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
}
