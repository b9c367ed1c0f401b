//! Sweeps with per-seed model selection, and the aggregate artifacts built from their results.

mod aggregate;
mod report;
mod sweep;

pub use aggregate::{
    aggregate_mean_std, fractional_ranks, median, percent_change, rank_methods, PercentMatrix, PercentMode, RankVector,
    Ranking, Setting, SummaryRow,
};
pub use report::{
    emit_report, heat_color, matrix_from_csv, matrix_to_csv, matrix_to_json, matrix_to_svg, ranking_to_csv,
    render_report, summary_to_csv, table_to_csv, Report, ReportFormat, UNDEFINED_FILL,
};
pub use sweep::{
    run_sweep, run_sweep_detailed, run_sweep_logged, select_best, CellOutcome, HyperGrid, MethodSpec, MetricsRow,
    MetricsTable, ShiftEntry, SweepSpec, HYPER_KEYS,
};
