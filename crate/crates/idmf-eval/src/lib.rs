//! Evaluation: RMSE/FDE metrics, learning and physics baselines, the
//! loss-weight x noise-level sweep, and report/plot emission.

pub mod error;
pub mod evaluate;
pub mod metrics;
pub mod plot;
pub mod report;

pub use error::EvalError;
pub use evaluate::{
    evaluate_idm_baseline, evaluate_model, make_examples, sweep, SweepContext,
};
pub use metrics::{fde, rmse};
pub use plot::{render_line_chart, render_loss_curves, render_trajectory_overlay, Series};
pub use report::{MetricReport, MetricRow, SweepModel, SweepSpec};
