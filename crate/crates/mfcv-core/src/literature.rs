//! Published conduction-velocity references and comparison against them.
//!
//! The built-in table collects biceps-brachii MFCV ranges reported by
//! bitstream- and waveform-correlation studies, so a fresh series can be
//! checked for physiological plausibility: is its grand mean inside each
//! published interval, and how far is it from each published mean?

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::MfcvSeries;

/// One published reference point for biceps-brachii conduction velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiteratureEntry {
    pub label: &'static str,
    pub method: &'static str,
    /// Reported velocity interval, m/s.
    pub interval_ms: (f64, f64),
    /// Reported mean, m/s; some studies publish only an interval.
    pub mean_ms: Option<f64>,
    pub sd_ms: Option<f64>,
    /// Contraction protocol of the study.
    pub contraction_note: &'static str,
}

/// Built-in reference rows. Values are fixed constants; the unit tests pin
/// every one of them.
pub const LITERATURE: [LiteratureEntry; 6] = [
    LiteratureEntry {
        label: "Proposed",
        method: "software bitstream cross-correlation",
        interval_ms: (4.1, 5.5),
        mean_ms: Some(4.5),
        sd_ms: Some(0.6),
        contraction_note: "elbow joint at 90 degrees",
    },
    LiteratureEntry {
        label: "Koutsos2016",
        method: "ASIC bitstream cross-correlation",
        interval_ms: (3.5, 5.6),
        mean_ms: Some(4.5),
        sd_ms: Some(0.8),
        contraction_note: "70% maximum voluntary contraction",
    },
    LiteratureEntry {
        label: "Marco2017",
        method: "cross-correlation",
        interval_ms: (3.0, 4.2),
        mean_ms: Some(4.1),
        sd_ms: Some(0.2),
        contraction_note: "60% maximum voluntary contraction",
    },
    LiteratureEntry {
        label: "Xu2017",
        method: "zero-crossing detection with delay-locked loop",
        interval_ms: (2.6, 4.3),
        mean_ms: Some(3.3),
        sd_ms: Some(0.3),
        contraction_note: "80% maximum voluntary contraction",
    },
    LiteratureEntry {
        label: "Ye2015",
        method: "cross-correlation",
        interval_ms: (2.5, 4.9),
        mean_ms: Some(3.3),
        sd_ms: Some(0.7),
        contraction_note: "elbow joint at 120 degrees, 60% maximum contraction",
    },
    LiteratureEntry {
        label: "Farina2004",
        method: "cross-correlation",
        interval_ms: (3.1, 4.9),
        mean_ms: None,
        sd_ms: None,
        contraction_note: "50% maximum voluntary contraction",
    },
];

/// Verdict of one series against one published row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteratureVerdict {
    pub label: String,
    pub interval_ms: (f64, f64),
    pub literature_mean_ms: Option<f64>,
    /// Whether the series grand mean falls inside the published interval
    /// (inclusive at both ends).
    pub inside_interval: bool,
    /// |series grand mean - published mean|; absent when the study reports
    /// no mean.
    pub abs_mean_diff_ms: Option<f64>,
}

/// Series-level statistics plus one verdict per built-in row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Valid-count-weighted mean over the per-second means, i.e. the mean
    /// over all valid estimates.
    pub grand_mean_ms: f64,
    /// Standard deviation over all valid estimates, recovered from the
    /// per-second decomposition; absent with fewer than two estimates.
    pub pooled_sd_ms: Option<f64>,
    /// Range of the defined per-second means (the finest granularity a
    /// series retains).
    pub mean_range_ms: (f64, f64),
    /// Total valid estimates behind the series.
    pub total_valid: usize,
    pub verdicts: Vec<LiteratureVerdict>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("series has no seconds with a defined mean; nothing to compare")]
    EmptySeries,
}

/// Compares a series against every built-in literature row.
///
/// The grand mean weights each per-second mean by its valid count, which
/// equals the plain mean over all valid estimates. The pooled deviation
/// recombines within-second and between-second scatter:
/// `SS = sum((n_i - 1) * sd_i^2 + n_i * (mean_i - grand)^2)`, then
/// `sqrt(SS / (N - 1))` for `N` total estimates.
pub fn compare_literature(series: &MfcvSeries) -> Result<ComparisonReport, CompareError> {
    let defined: Vec<_> = series
        .per_second
        .iter()
        .filter(|s| s.mean_ms.is_some() && s.n_valid > 0)
        .collect();
    if defined.is_empty() {
        return Err(CompareError::EmptySeries);
    }

    let total_valid: usize = defined.iter().map(|s| s.n_valid).sum();
    let weighted_sum: f64 = defined
        .iter()
        .map(|s| s.n_valid as f64 * s.mean_ms.expect("filtered to defined means"))
        .sum();
    let grand_mean_ms = weighted_sum / total_valid as f64;

    let pooled_sd_ms = if total_valid >= 2 {
        let ss: f64 = defined
            .iter()
            .map(|s| {
                let n = s.n_valid as f64;
                let mean = s.mean_ms.expect("filtered to defined means");
                let within = s.sd_ms.map_or(0.0, |sd| (n - 1.0) * sd * sd);
                within + n * (mean - grand_mean_ms) * (mean - grand_mean_ms)
            })
            .sum();
        Some((ss / (total_valid as f64 - 1.0)).sqrt())
    } else {
        None
    };

    let mean_range_ms = defined.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), s| {
            let m = s.mean_ms.expect("filtered to defined means");
            (lo.min(m), hi.max(m))
        },
    );

    let verdicts = LITERATURE
        .iter()
        .map(|entry| LiteratureVerdict {
            label: entry.label.to_owned(),
            interval_ms: entry.interval_ms,
            literature_mean_ms: entry.mean_ms,
            inside_interval: entry.interval_ms.0 <= grand_mean_ms
                && grand_mean_ms <= entry.interval_ms.1,
            abs_mean_diff_ms: entry.mean_ms.map(|m| (grand_mean_ms - m).abs()),
        })
        .collect();

    Ok(ComparisonReport {
        grand_mean_ms,
        pooled_sd_ms,
        mean_range_ms,
        total_valid,
        verdicts,
    })
}
