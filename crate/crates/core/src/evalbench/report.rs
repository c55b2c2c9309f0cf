//! Report rendering: `report.json` plus table-shaped CSV/Markdown views.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

use super::bench::{BenchReport, Method};

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_else(|| "n/a".into())
}

/// Reduction percentages per method (RMSE / MAE / SAM), CSV.
pub fn table1_csv(r: &BenchReport) -> String {
    let mut out = String::from("method,rmse_reduction_pct,mae_reduction_pct,sam_reduction_pct\n");
    for m in r.overall.iter().filter(|m| m.method != Method::Raw) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            m.method,
            fmt_opt(m.rmse_reduction_pct, 2),
            fmt_opt(m.mae_reduction_pct, 2),
            fmt_opt(m.sam_reduction_pct, 2)
        );
    }
    out
}

/// Reduction percentages per method, Markdown.
pub fn table1_md(r: &BenchReport) -> String {
    let mut out = String::from(
        "| Method | RMSE reduction (%) | MAE reduction (%) | SAM reduction (%) |\n|---|---|---|---|\n",
    );
    for m in r.overall.iter().filter(|m| m.method != Method::Raw) {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            m.method,
            fmt_opt(m.rmse_reduction_pct, 2),
            fmt_opt(m.mae_reduction_pct, 2),
            fmt_opt(m.sam_reduction_pct, 2)
        );
    }
    out
}

/// Peak-height bias percentiles and IQR per method, CSV.
pub fn table2_csv(r: &BenchReport) -> String {
    let mut out = String::from("method,p25,median,p75,iqr\n");
    for m in r.overall.iter().filter(|m| m.method != Method::Raw) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            m.method,
            fmt_opt(m.height_bias_p25, 4),
            fmt_opt(m.height_bias_p50, 4),
            fmt_opt(m.height_bias_p75, 4),
            fmt_opt(m.height_bias_iqr, 4)
        );
    }
    out
}

/// Peak-height bias percentiles and IQR per method, Markdown.
pub fn table2_md(r: &BenchReport) -> String {
    let mut out = String::from(
        "| Method | 25th perc | Median | 75th perc | IQR |\n|---|---|---|---|---|\n",
    );
    for m in r.overall.iter().filter(|m| m.method != Method::Raw) {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            m.method,
            fmt_opt(m.height_bias_p25, 4),
            fmt_opt(m.height_bias_p50, 4),
            fmt_opt(m.height_bias_p75, 4),
            fmt_opt(m.height_bias_iqr, 4)
        );
    }
    out
}

/// Per-fold RMSE distribution per method, CSV (stability view).
pub fn stability_csv(r: &BenchReport) -> String {
    let mut out =
        String::from("fold,test_sample,method,rmse_mean,rmse_p25,rmse_p50,rmse_p75,rmse_iqr\n");
    for f in &r.folds {
        for m in &f.methods {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                f.fold,
                f.test_sample,
                m.method,
                m.rmse.mean,
                m.rmse.p25,
                m.rmse.p50,
                m.rmse.p75,
                m.rmse.iqr
            );
        }
    }
    out
}

/// Raw-cube silent-window noise per sample and scan count, CSV.
pub fn silent_noise_csv(r: &BenchReport) -> String {
    let mut out = String::from("sample,scan_count,noise_mean,ratio_vs_1scan\n");
    for row in &r.silent_diagnostics {
        let _ = writeln!(
            out,
            "{},{},{:.8},{}",
            row.sample,
            row.scan_count,
            row.noise_mean,
            fmt_opt(row.ratio_vs_1scan, 4)
        );
    }
    out
}

/// Writes `report.json` and every table view into `dir`.
pub fn write_report(r: &BenchReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_vec_pretty(r)?)?;
    std::fs::write(dir.join("table1.csv"), table1_csv(r))?;
    std::fs::write(dir.join("table1.md"), table1_md(r))?;
    std::fs::write(dir.join("table2.csv"), table2_csv(r))?;
    std::fs::write(dir.join("table2.md"), table2_md(r))?;
    std::fs::write(dir.join("stability.csv"), stability_csv(r))?;
    std::fs::write(dir.join("silent_noise.csv"), silent_noise_csv(r))?;
    Ok(())
}

/// Reads a `report.json` back.
pub fn read_report(path: &Path) -> Result<BenchReport> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}
