//! Feasibility engine for joint communication, localization and sensing.
//!
//! Maps use-case KPIs to signal, hardware and deployment requirements and
//! scores a concrete scenario against them.

// `!(x > 0.0)` is how validators reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod deployment;
pub mod linkbudget;
pub mod locbounds;
pub mod quantities;
pub mod report;
pub mod sensebounds;
pub mod shell;
pub mod usecases;

pub use deployment::{Heatmap, HeatmapMetric};
pub use report::{Check, Verdict};
pub use usecases::{
    evaluate, recommend, ConfigError, FeasibilityReport, Recommendation, RecommendError, ScenarioConfig, UseCaseId,
    UseCaseKpis,
};
