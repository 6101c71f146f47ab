//! Semi-analytical energy and power estimation for camera systems with
//! on-sensor compute.
//!
//! A [`system::SystemSpec`] describes cameras, links, processors and their
//! memory hierarchies; a [`system::WorkloadSpec`] describes a pipeline of
//! neural-network stages. [`explore`] enumerates where to cut the pipeline
//! between the sensors and the aggregator and evaluates each option with the
//! kernels in [`energy`] and per-layer costs from [`layer`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod explore;
pub mod fixtures;
pub mod layer;
pub mod par;
pub mod report;
pub mod system;
pub mod units;

pub mod cli;

pub use energy::{Category, ModuleEnergy, PowerBreakdown};
pub use explore::{enumerate_plans, evaluate_plan, optimize, sweep, Explorer, PartitionPlan, PlanEvaluation};
pub use system::{load_system_config, load_workload_config, SystemSpec, WorkloadSpec};
