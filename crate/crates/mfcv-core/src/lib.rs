//! Muscle-fiber conduction velocity (MFCV) estimation from two-channel
//! surface EMG.
//!
//! Two electrodes along the same fiber direction see the same activity with
//! a propagation delay; velocity is electrode distance over that delay. The
//! pipeline estimates the delay per one-second window:
//!
//! ```text
//! recording ──► window ──► amplitude gate ──► ternary modulation (per gain)
//!                                                   │
//!         per-second mean/SD + trend ◄── Δt ◄── bitstream cross-correlation
//! ```
//!
//! Modulating both channels to {-1, 0, +1} symbols before correlating keeps
//! the correlation peak sharp and the arithmetic cheap while preserving the
//! delay information. A sweep of modulation gains (each gain lowers the
//! ternary threshold) yields several estimates per window; implausible ones
//! are rejected by amplitude, sign, and velocity-ceiling filters, and the
//! survivors are aggregated into per-second statistics with a fatigue trend
//! line.
//!
//! Module map:
//! - [`signal`]: recording types, validation, synthetic ground-truth
//!   generation;
//! - [`bitstream`]: ternary modulation and the gain sweep;
//! - [`xcorr`]: zero-padded cross-correlation and delay extraction;
//! - [`estimator`]: the window pipeline and per-second aggregation;
//! - [`literature`]: published reference ranges and series comparison;
//! - [`io`]: CSV/JSON/report serialization.

pub mod bitstream;
pub mod estimator;
pub mod io;
pub mod literature;
pub mod signal;
pub mod xcorr;

pub use bitstream::{
    gain_sweep, lsb, modulate, BitStream, GainError, ModulateError, ModulationGain,
    QuantizerConfig, QuantizerConfigError, SweepError, GAIN_MAX, GAIN_MIN,
};
pub use estimator::{
    estimate_series, estimate_window, fit_trend, mean_and_sample_sd, mfcv_from_delay,
    EstimateError, EstimateStatus, EstimatorConfig, EstimatorConfigError, MfcvSeries, SecondStats,
    TrendLine, VelocityError, WindowEstimate, DEFAULT_AMPLITUDE_MIN_V, DEFAULT_MFCV_MAX_MS,
    DEFAULT_WINDOW_SAMPLES,
};
pub use io::{
    build_report, emit_plot_data, load_recording_csv, load_run, render_report, save_run,
    write_recording_csv, write_report, EstimateRun, IoError, OverallStats, ReportDocument,
    StatusCounts, PLOT_CSV_HEADER, RECORDING_CSV_HEADER,
};
pub use literature::{
    compare_literature, CompareError, ComparisonReport, LiteratureEntry, LiteratureVerdict,
    LITERATURE,
};
pub use signal::{
    synthesize, validate_recording, DelayProfile, DelayProfileError, RecordingError, SamplingRate,
    SynthesisError, TwoChannelRecording, DEFAULT_ELECTRODE_DISTANCE_M, DEFAULT_RATE_HZ,
};
pub use xcorr::{
    brute_force_correlate, cross_correlate, estimate_delay, CorrelationWindow, DelayEstimate,
    DelayRejection, ExpectedSign, LagProfile, LagProfileError, WindowError,
};
