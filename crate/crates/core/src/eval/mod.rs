//! Cross-validated comparison of transformed against raw targets.

pub mod bench;
pub mod folds;
pub mod linear;
pub mod metrics;
pub mod report;

pub use bench::{
    fit_fold, run_benchmark, BenchmarkCell, BenchmarkConfig, BenchmarkReport, CellStats, FoldFit,
};
pub use folds::{make_fold_plan, splitmix64, Fold, FoldPlan};
pub use linear::{fit_lasso, fit_lasso_traced, fit_model, fit_ridge, LinearModel, ModelKind};
pub use metrics::{rse, smape};
pub use report::{format_cell, markdown, Metric};
