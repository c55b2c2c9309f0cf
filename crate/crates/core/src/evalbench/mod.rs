//! Metric suite, leave-one-sample-out harness, and report generation.

mod bench;
mod metrics;
mod peaks;
mod report;

pub use metrics::{
    iqr, mae, pcc, percentile, reduction_percent, rmse, sam, silent_region_noise,
    silent_region_noise_values, spearman,
};
pub use peaks::{
    detect_peaks, peak_height_bias, peak_position_error, PeakDetectParams, PeakMatchReport,
};
pub use bench::{
    foreground_spectra, prepare_cube, prepare_cube_with_mask, prepare_sample, PreparedSample,
    PrepSettings,
    loso_split, metric_set, run_benchmark, run_benchmark_on, BenchConfig, BenchReport,
    FoldReport, Method, MethodFoldReport, MethodOverall, MetricSet, SilentRow, Summary,
};
pub use report::{
    read_report, silent_noise_csv, stability_csv, table1_csv, table1_md, table2_csv, table2_md,
    write_report,
};
