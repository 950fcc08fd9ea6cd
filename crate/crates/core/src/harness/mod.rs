//! Experiment orchestration: configuration, numeric-versus-asymptotic
//! sweeps, counting-statistic tables and the self-test.

mod compare;
mod config;
mod moments;
mod selftest;

pub use compare::{
    asymptotic_value, decay_exponent, linear_slope, log_log_slope, numeric_value, run_compare,
    write_compare, AsymptoticValue, CompareReport, ComparisonRow, Route, RowFlag, CSV_HEADER,
};
pub use config::{ConfigLayer, ExperimentConfig, OutputFormat, RGrid, Spacing, VectorMode};
pub use moments::{
    run_moments, write_moments, MomentRow, MomentsReport, FD_STEP, MOMENTS_CSV_HEADER,
};
pub use selftest::{run_selftest, Check, SelfTestOptions, SelfTestReport};
