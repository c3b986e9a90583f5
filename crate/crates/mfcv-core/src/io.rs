//! File formats: recording CSV ingestion and writing, estimate-run JSON,
//! plain-text reports, and plot-ready per-second CSV.
//!
//! All writers are deterministic — no timestamps, stable field order, and
//! floating-point values printed either exactly (shortest round-trip form,
//! for data meant to be re-read) or at fixed precision (for report prose).
//! Running the same pipeline twice therefore produces byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitstream::ModulationGain;
use crate::estimator::{
    mean_and_sample_sd, EstimateStatus, EstimatorConfig, MfcvSeries, SecondStats, TrendLine,
    WindowEstimate,
};
use crate::literature::{compare_literature, ComparisonReport};
use crate::signal::{RecordingError, SamplingRate, TwoChannelRecording};

/// Exact header required of recording CSV files.
pub const RECORDING_CSV_HEADER: &str = "t,chA,chB";

/// Header of the plot-ready per-second CSV.
pub const PLOT_CSV_HEADER: &str = "second,mean_ms,sd_ms,n_valid";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("unexpected header {found:?}; expected {RECORDING_CSV_HEADER:?}")]
    Header { found: String },
    #[error("line {line}: expected 3 comma-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: column {column} has non-numeric value {value:?}")]
    BadNumber {
        line: usize,
        column: &'static str,
        value: String,
    },
    #[error("line {line}: time column must be strictly increasing")]
    NonMonotoneTime { line: usize },
    #[error("recording files need at least 2 data rows, found {rows}")]
    TooFewRows { rows: usize },
    #[error(transparent)]
    Recording(#[from] RecordingError),
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a two-channel recording from a `t,chA,chB` CSV file.
///
/// The time column is informational (samples are assumed uniform at `rate`)
/// but must be strictly increasing. Line numbers in errors are 1-based
/// physical file lines, header included.
pub fn load_recording_csv(
    path: impl AsRef<Path>,
    rate: SamplingRate,
    electrode_distance_m: f64,
) -> Result<TwoChannelRecording, IoError> {
    let text = read_file(path.as_ref())?;
    let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));

    let header = lines.next().unwrap_or("");
    if header != RECORDING_CSV_HEADER {
        return Err(IoError::Header {
            found: header.to_owned(),
        });
    }

    let mut channel_a = Vec::new();
    let mut channel_b = Vec::new();
    let mut previous_t: Option<f64> = None;
    for (index, line) in lines.enumerate() {
        let line_no = index + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(IoError::FieldCount {
                line: line_no,
                found: fields.len(),
            });
        }
        let parse = |column: &'static str, raw: &str| -> Result<f64, IoError> {
            raw.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IoError::BadNumber {
                    line: line_no,
                    column,
                    value: raw.to_owned(),
                })
        };
        let t = parse("t", fields[0])?;
        if previous_t.is_some_and(|prev| t <= prev) {
            return Err(IoError::NonMonotoneTime { line: line_no });
        }
        previous_t = Some(t);
        channel_a.push(parse("chA", fields[1])?);
        channel_b.push(parse("chB", fields[2])?);
    }

    if channel_a.len() < 2 {
        return Err(IoError::TooFewRows {
            rows: channel_a.len(),
        });
    }
    Ok(TwoChannelRecording::new(
        channel_a,
        channel_b,
        rate,
        electrode_distance_m,
    )?)
}

/// Writes a recording as `t,chA,chB` CSV with `t = k / rate`.
///
/// Values are printed in shortest round-trip form, so loading the file back
/// reproduces every sample bit for bit.
pub fn write_recording_csv(
    rec: &TwoChannelRecording,
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    let mut out = String::with_capacity(rec.len() * 24 + 16);
    out.push_str(RECORDING_CSV_HEADER);
    out.push('\n');
    for (k, (a, b)) in rec.channel_a.iter().zip(&rec.channel_b).enumerate() {
        let t = k as f64 / rec.rate.hertz;
        writeln!(out, "{t},{a},{b}").expect("writing to a String cannot fail");
    }
    write_file(path.as_ref(), &out)
}

/// Everything one `estimate` invocation produced, in one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRun {
    pub rate_hz: f64,
    pub electrode_distance_m: f64,
    pub config: EstimatorConfig,
    pub estimates: Vec<WindowEstimate>,
    pub series: MfcvSeries,
}

/// Saves a run as pretty-printed JSON (stable field order, exact floats).
pub fn save_run(run: &EstimateRun, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    let mut json = serde_json::to_string_pretty(run).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })?;
    json.push('\n');
    write_file(path, &json)
}

pub fn load_run(path: impl AsRef<Path>) -> Result<EstimateRun, IoError> {
    let path = path.as_ref();
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Estimate totals per pipeline status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatusCounts {
    pub valid: usize,
    pub low_amplitude: usize,
    pub zero_lag: usize,
    pub wrong_sign: usize,
    pub above_physiological_max: usize,
    pub no_signal: usize,
}

impl StatusCounts {
    pub fn tally(estimates: &[WindowEstimate]) -> Self {
        let mut counts = Self::default();
        for est in estimates {
            match est.status {
                EstimateStatus::Valid => counts.valid += 1,
                EstimateStatus::LowAmplitude => counts.low_amplitude += 1,
                EstimateStatus::ZeroLag => counts.zero_lag += 1,
                EstimateStatus::WrongSign => counts.wrong_sign += 1,
                EstimateStatus::AbovePhysiologicalMax => counts.above_physiological_max += 1,
                EstimateStatus::NoSignal => counts.no_signal += 1,
            }
        }
        counts
    }

    /// Sum over every status; equals the number of tallied estimates.
    pub fn total(&self) -> usize {
        self.valid
            + self.low_amplitude
            + self.zero_lag
            + self.wrong_sign
            + self.above_physiological_max
            + self.no_signal
    }
}

/// Extremes, mean, and deviation over all valid estimates of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverallStats {
    pub n_valid: usize,
    pub min_ms: f64,
    pub max_ms: f64,
    pub mean_ms: f64,
    /// Absent with fewer than two valid estimates.
    pub sd_ms: Option<f64>,
}

/// Complete, self-describing analysis summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub rate_hz: f64,
    pub electrode_distance_m: f64,
    pub config: EstimatorConfig,
    pub total_evaluations: usize,
    pub status_counts: StatusCounts,
    pub per_second: Vec<SecondStats>,
    /// Absent when the run has no valid estimates.
    pub overall: Option<OverallStats>,
    pub trend: Option<TrendLine>,
    /// Absent when no second has a defined mean.
    pub comparison: Option<ComparisonReport>,
}

/// Assembles the report for a run. Degenerate runs (no valid estimates)
/// still produce a complete document, with the optional sections absent.
pub fn build_report(run: &EstimateRun) -> ReportDocument {
    let valid: Vec<f64> = run
        .estimates
        .iter()
        .filter(|e| e.status == EstimateStatus::Valid)
        .filter_map(|e| e.mfcv_ms)
        .collect();
    let overall = if valid.is_empty() {
        None
    } else {
        let (mean, sd) = mean_and_sample_sd(&valid);
        Some(OverallStats {
            n_valid: valid.len(),
            min_ms: valid.iter().copied().fold(f64::INFINITY, f64::min),
            max_ms: valid.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_ms: mean.expect("non-empty values have a mean"),
            sd_ms: sd,
        })
    };
    ReportDocument {
        rate_hz: run.rate_hz,
        electrode_distance_m: run.electrode_distance_m,
        config: run.config.clone(),
        total_evaluations: run.estimates.len(),
        status_counts: StatusCounts::tally(&run.estimates),
        per_second: run.series.per_second.clone(),
        overall,
        trend: run.series.trend,
        comparison: compare_literature(&run.series).ok(),
    }
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "none".to_owned(), |v| format!("{v:.6}"))
}

/// Renders a report as sectioned plain text.
///
/// Statistics are printed at 6 decimal places; configuration values keep
/// their exact shortest form. The output contains no timestamps, so equal
/// reports always serialize to equal bytes.
pub fn render_report(report: &ReportDocument) -> String {
    let mut out = String::new();
    let gains = report
        .config
        .gains
        .iter()
        .map(ModulationGain::to_string)
        .collect::<Vec<_>>()
        .join(", ");

    out.push_str("# conduction velocity report\n\n");
    out.push_str("[configuration]\n");
    let _ = writeln!(out, "rate_hz = {}", report.rate_hz);
    let _ = writeln!(out, "electrode_distance_m = {}", report.electrode_distance_m);
    let _ = writeln!(out, "window_samples = {}", report.config.window_samples);
    let _ = writeln!(out, "hop_samples = {}", report.config.hop_samples);
    let _ = writeln!(out, "gains = {gains}");
    let _ = writeln!(out, "quantizer_v_max = {}", report.config.quantizer.v_max);
    let _ = writeln!(out, "quantizer_n_bits = {}", report.config.quantizer.n_bits);
    let _ = writeln!(
        out,
        "quantizer_base_threshold_v = {}",
        report.config.quantizer.base_threshold_v
    );
    let _ = writeln!(out, "amplitude_min_v = {}", report.config.amplitude_min_v);
    let _ = writeln!(out, "mfcv_max_ms = {}", report.config.mfcv_max_ms);
    let _ = writeln!(out, "expected_sign = {}", report.config.expected_sign);

    out.push_str("\n[status counts]\n");
    let _ = writeln!(out, "total_evaluations = {}", report.total_evaluations);
    let c = &report.status_counts;
    let _ = writeln!(out, "valid = {}", c.valid);
    let _ = writeln!(out, "low_amplitude = {}", c.low_amplitude);
    let _ = writeln!(out, "zero_lag = {}", c.zero_lag);
    let _ = writeln!(out, "wrong_sign = {}", c.wrong_sign);
    let _ = writeln!(
        out,
        "above_physiological_max = {}",
        c.above_physiological_max
    );
    let _ = writeln!(out, "no_signal = {}", c.no_signal);

    out.push_str("\n[overall]\n");
    match &report.overall {
        Some(stats) => {
            let _ = writeln!(out, "n_valid = {}", stats.n_valid);
            let _ = writeln!(out, "min_ms = {:.6}", stats.min_ms);
            let _ = writeln!(out, "max_ms = {:.6}", stats.max_ms);
            let _ = writeln!(out, "mean_ms = {:.6}", stats.mean_ms);
            let _ = writeln!(out, "sd_ms = {}", fmt_opt(stats.sd_ms));
        }
        None => out.push_str("no valid estimates\n"),
    }

    out.push_str("\n[trend]\n");
    match &report.trend {
        Some(trend) => {
            let _ = writeln!(out, "slope_ms_per_s = {:.6}", trend.slope_ms_per_s);
            let _ = writeln!(out, "intercept_ms = {:.6}", trend.intercept_ms);
        }
        None => out.push_str("trend = none\n"),
    }

    out.push_str("\n[per second]\n");
    out.push_str("second,mean_ms,sd_ms,n_valid\n");
    for s in &report.per_second {
        let mean = s.mean_ms.map_or(String::new(), |v| format!("{v:.6}"));
        let sd = s.sd_ms.map_or(String::new(), |v| format!("{v:.6}"));
        let _ = writeln!(out, "{},{},{},{}", s.second_index, mean, sd, s.n_valid);
    }

    out.push_str("\n[literature comparison]\n");
    match &report.comparison {
        Some(cmp) => {
            let _ = writeln!(out, "grand_mean_ms = {:.6}", cmp.grand_mean_ms);
            let _ = writeln!(out, "pooled_sd_ms = {}", fmt_opt(cmp.pooled_sd_ms));
            let _ = writeln!(
                out,
                "second_mean_range_ms = [{:.6}, {:.6}]",
                cmp.mean_range_ms.0, cmp.mean_range_ms.1
            );
            let _ = writeln!(out, "total_valid = {}", cmp.total_valid);
            out.push_str("label,interval_low,interval_high,literature_mean,verdict,abs_mean_diff\n");
            for v in &cmp.verdicts {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    v.label,
                    v.interval_ms.0,
                    v.interval_ms.1,
                    v.literature_mean_ms.map_or(String::new(), |m| m.to_string()),
                    if v.inside_interval { "inside" } else { "outside" },
                    v.abs_mean_diff_ms.map_or(String::new(), |d| format!("{d:.6}")),
                );
            }
        }
        None => out.push_str("no defined per-second means\n"),
    }
    out
}

/// Writes the rendered report to disk.
pub fn write_report(report: &ReportDocument, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_file(path.as_ref(), &render_report(report))
}

/// Writes the `second,mean_ms,sd_ms,n_valid` CSV behind the per-second
/// plot; absent statistics become empty cells.
pub fn emit_plot_data(series: &MfcvSeries, path: impl AsRef<Path>) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(PLOT_CSV_HEADER);
    out.push('\n');
    for s in &series.per_second {
        let mean = s.mean_ms.map_or(String::new(), |v| v.to_string());
        let sd = s.sd_ms.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(out, "{},{},{},{}", s.second_index, mean, sd, s.n_valid);
    }
    write_file(path.as_ref(), &out)
}
