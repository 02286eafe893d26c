//! Experiment runner: configuration files, seeded end-to-end pipelines, the
//! ablation / transfer / scale / noise studies, and CSV + SVG reports.

mod commands;
mod config;
mod pipeline;
mod report;
mod studies;
mod table;

pub use commands::{cmd_ablation, cmd_gen_data, cmd_noise_study, cmd_run, cmd_scale_study, cmd_transfer_study};
pub use config::{ExperimentConfig, Toggles};
pub use pipeline::{
    classify_with, common_shape, pair_metrics, prepare_data, run_on, run_pipeline, run_rows, test_view,
    train_similarity, transfer_metrics, weight_stats, CategoryWeightStats, Prepared, RunOutcome,
};
pub use report::{cmd_report, weight_diagnostics, CategoryDiagnostics, RankedImage, Report};
pub use studies::{
    ablation, feature_extractor, mean_accuracy_by_method, noise_gaps, noise_study, pooled_weight_stats, run_row,
    runs_table, scale_charts, scale_study, summarize, summary_curves, train_on_source, transfer_study, Source,
    TransferStudy, ABLATION_ROWS, NOISE_HEADER, PAIR_HEADER, RUN_HEADER, SCALE_HEADER, SOURCE_HEADER,
};
pub use table::{line_chart, mean_std, num, Series, Table};
