//! Emotion-aware normative BDI agents standing in line for food.
//!
//! A [`World`] holds a population of agents who walk from home to a queue in
//! front of a store, get served eight at a time and eat. Agents in the queue
//! may jump to the front. Four societies differ in how they treat that choice:
//! obedient agents never jump, anarchists jump whenever it helps them, the
//! sanctioning society learns from the emotions others express at it, and Noe
//! agents also anticipate their own guilt and the emotions around them.
//!
//! [`run_simulation`] runs one configuration; [`run_batch`] runs the full
//! society by seed matrix and compares every society against Noe.

pub mod decision;
pub mod emotions;
pub mod environment;
pub mod metrics;
pub mod model;
pub mod norms;
pub mod runner;
pub mod societies;

pub use emotions::EmotionParams;
pub use environment::{ConfigError, FoodParams, Payoffs, SimConfig, World, STORE_CAPACITY};
pub use metrics::{
    cohen_label, glass_delta, independent_t_test, moving_average, EffectLabel, EffectSizeReport,
    StatsError, StepMetrics, TTest,
};
pub use model::{Action, AgentId, AgentState, Emotion, Intention, Location};
pub use norms::{Fulfillment, FulfillmentOutcome};
pub use runner::{
    export_timeseries, run_batch, run_simulation, AggregateMode, ExperimentPlan, ExperimentReport,
    RunAggregates, RunError, RunResult,
};
pub use societies::SocietyKind;
