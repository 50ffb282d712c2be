//! Frequency response of an aggregated low-inertia power system after a
//! supply/demand step, with sizing of the virtual inertia and fast
//! additional power needed to meet windowed ROCOF and nadir limits.
//!
//! - [`dynamics`]: swing equation with thermal and hydro governors, RK4.
//! - [`metrics`]: windowed ROCOF, nadir, compliance checks.
//! - [`sizing`]: minimum virtual inertia and additional power per scenario.
//! - [`sweep`]: scenario grid, parallel driver, summaries and regression.
//! - [`config`], [`report`]: TOML configuration and CSV/JSON outputs.
//!
//! The `parallel` feature (on by default) runs sweeps on a rayon pool;
//! without it every sweep runs on the calling thread.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod ode;
pub mod report;
pub mod sizing;
pub mod stats;
pub mod sweep;

pub use config::RunConfig;
pub use dynamics::{
    compute_h_eq, damping_pu, simulate, FrequencyTrace, GenerationMix, HydroGovernor,
    PlantDynamics, Scenario, SystemConstants, ThermalGovernor,
};
pub use error::{Error, Result};
pub use metrics::{
    check_compliance, extract_metrics, rocof_window, ComplianceReport, FrequencyMetrics,
    RocofLimit, RocofLimits,
};
pub use sizing::{
    h_eq_min, h_res_from_h_min, size_h_res, size_p_add, size_scenario, verify, InertiaSizing,
    SizingResult, SizingSettings, Verification,
};
pub use sweep::{
    fit_regression, generate_grid, run_sweep, summarize, GridSpec, GroupBy, RegressionFit,
    SweepRow, SweepSettings,
};
