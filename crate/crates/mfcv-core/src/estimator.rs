//! Window-by-window velocity estimation and per-second aggregation.
//!
//! The pipeline for each window and gain:
//!
//! 1. amplitude gate — windows whose peak voltage never reaches the floor
//!    are dropped before any modulation;
//! 2. ternary modulation of both channels at the gain under test;
//! 3. cross-correlation of the two bitstreams and delay extraction;
//! 4. conversion of the delay to a conduction velocity, then a ceiling
//!    check against the physiological maximum.
//!
//! Every window/gain combination yields a [`WindowEstimate`] whose status
//! records exactly which stage accepted or rejected it. Valid estimates are
//! then grouped by wall-clock second into means and sample standard
//! deviations, and a least-squares trend line over the per-second means
//! summarizes drift across the recording.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitstream::{
    gain_sweep, modulate, ModulateError, ModulationGain, QuantizerConfig, QuantizerConfigError,
};
use crate::signal::{validate_recording, RecordingError, SamplingRate, TwoChannelRecording};
use crate::xcorr::{
    cross_correlate, estimate_delay, CorrelationWindow, DelayEstimate, DelayRejection,
    ExpectedSign, WindowError,
};

/// Default analysis window: one second at the default rate.
pub const DEFAULT_WINDOW_SAMPLES: usize = 2200;

/// Default peak-voltage floor below which a window is discarded.
pub const DEFAULT_AMPLITUDE_MIN_V: f64 = 0.2;

/// Default physiological ceiling on conduction velocity.
pub const DEFAULT_MFCV_MAX_MS: f64 = 6.0;

/// Everything the estimator needs besides the recording itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Analysis window length in samples.
    pub window_samples: usize,
    /// Stride between consecutive window starts, in samples.
    pub hop_samples: usize,
    /// Modulation gains evaluated per window, in sweep order.
    pub gains: Vec<ModulationGain>,
    pub quantizer: QuantizerConfig,
    /// Peak-voltage floor: a window where both channels stay below this is
    /// rejected as low-amplitude before modulation.
    pub amplitude_min_v: f64,
    /// Velocities above this ceiling are flagged as non-physiological.
    pub mfcv_max_ms: f64,
    /// Which side of zero the correlation peak must land on.
    pub expected_sign: ExpectedSign,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimatorConfigError> {
        if self.window_samples < 2 {
            return Err(EstimatorConfigError::WindowTooSmall(self.window_samples));
        }
        if self.hop_samples == 0 {
            return Err(EstimatorConfigError::ZeroHop);
        }
        if self.gains.is_empty() {
            return Err(EstimatorConfigError::NoGains);
        }
        self.quantizer.validate()?;
        if !self.amplitude_min_v.is_finite() || self.amplitude_min_v < 0.0 {
            return Err(EstimatorConfigError::NegativeAmplitudeFloor(
                self.amplitude_min_v,
            ));
        }
        if !self.mfcv_max_ms.is_finite() || self.mfcv_max_ms <= 0.0 {
            return Err(EstimatorConfigError::NonPositiveVelocityCeiling(
                self.mfcv_max_ms,
            ));
        }
        Ok(())
    }
}

impl Default for EstimatorConfig {
    /// One-second non-overlapping windows, the full 1.0..=1.5 gain sweep in
    /// 0.1 steps, 0.2 V amplitude floor, 6 m/s ceiling, negative-lag peaks.
    fn default() -> Self {
        Self {
            window_samples: DEFAULT_WINDOW_SAMPLES,
            hop_samples: DEFAULT_WINDOW_SAMPLES,
            gains: gain_sweep(1.0, 1.5, 0.1).expect("default sweep is valid"),
            quantizer: QuantizerConfig::default(),
            amplitude_min_v: DEFAULT_AMPLITUDE_MIN_V,
            mfcv_max_ms: DEFAULT_MFCV_MAX_MS,
            expected_sign: ExpectedSign::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorConfigError {
    #[error("analysis window must be at least 2 samples, got {0}")]
    WindowTooSmall(usize),
    #[error("hop must be at least 1 sample")]
    ZeroHop,
    #[error("at least one modulation gain is required")]
    NoGains,
    #[error(transparent)]
    Quantizer(#[from] QuantizerConfigError),
    #[error("amplitude floor must be non-negative, got {0} V")]
    NegativeAmplitudeFloor(f64),
    #[error("velocity ceiling must be positive, got {0} m/s")]
    NonPositiveVelocityCeiling(f64),
}

/// How far a window/gain combination made it through the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    /// Delay and velocity both recovered and within bounds.
    Valid,
    /// Peak voltage stayed below the amplitude floor; window skipped before
    /// modulation.
    LowAmplitude,
    /// Correlation peak at lag zero.
    ZeroLag,
    /// Correlation peak on the wrong side of zero for the electrode order.
    WrongSign,
    /// Delay recovered, but the implied velocity exceeds the ceiling.
    AbovePhysiologicalMax,
    /// Both bitstreams correlated to an all-zero profile.
    NoSignal,
}

impl std::fmt::Display for EstimateStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Valid => "valid",
            Self::LowAmplitude => "low_amplitude",
            Self::ZeroLag => "zero_lag",
            Self::WrongSign => "wrong_sign",
            Self::AbovePhysiologicalMax => "above_physiological_max",
            Self::NoSignal => "no_signal",
        };
        f.write_str(s)
    }
}

/// Result of one window at one gain.
///
/// `delta_t_samples` and `mfcv_ms` are both present exactly when the status
/// is [`EstimateStatus::Valid`], with one exception: a delay that implies a
/// velocity above the ceiling keeps its `delta_t_samples` (the measurement
/// was real) but drops the velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    pub window_index: usize,
    /// Start time of the window within the recording.
    pub time_s: f64,
    pub gain: ModulationGain,
    pub delta_t_samples: Option<usize>,
    pub mfcv_ms: Option<f64>,
    pub status: EstimateStatus,
}

/// Valid-estimate statistics for one wall-clock second of the recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondStats {
    pub second_index: usize,
    /// Mean velocity over valid estimates; absent when the second has none.
    pub mean_ms: Option<f64>,
    /// Sample standard deviation (n-1); absent with fewer than two valid
    /// estimates.
    pub sd_ms: Option<f64>,
    pub n_valid: usize,
}

/// Ordinary least-squares line through `(second_index, mean velocity)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendLine {
    pub slope_ms_per_s: f64,
    pub intercept_ms: f64,
}

/// Per-second aggregation of a full recording, plus the fitted trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfcvSeries {
    pub per_second: Vec<SecondStats>,
    /// Absent when fewer than two seconds have a defined mean.
    pub trend: Option<TrendLine>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VelocityError {
    #[error("cannot convert a zero-sample delay to a velocity")]
    ZeroDelay,
    #[error("non-positive electrode distance: {0} m")]
    NonPositiveDistance(f64),
    #[error("non-positive sampling rate: {0} Hz")]
    NonPositiveRate(f64),
}

/// Conduction velocity in m/s from an inter-channel delay in samples:
/// distance divided by delay, scaled by the sampling rate.
pub fn mfcv_from_delay(
    electrode_distance_m: f64,
    delta_t_samples: usize,
    rate: SamplingRate,
) -> Result<f64, VelocityError> {
    if delta_t_samples == 0 {
        return Err(VelocityError::ZeroDelay);
    }
    if !electrode_distance_m.is_finite() || electrode_distance_m <= 0.0 {
        return Err(VelocityError::NonPositiveDistance(electrode_distance_m));
    }
    if !rate.hertz.is_finite() || rate.hertz <= 0.0 {
        return Err(VelocityError::NonPositiveRate(rate.hertz));
    }
    Ok(electrode_distance_m / delta_t_samples as f64 * rate.hertz)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Config(#[from] EstimatorConfigError),
    #[error(transparent)]
    Recording(#[from] RecordingError),
    #[error(transparent)]
    Velocity(#[from] VelocityError),
    #[error(transparent)]
    Modulate(#[from] ModulateError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("window {window_index} spans samples {start}..{end} but the recording has {len}")]
    WindowOutOfBounds {
        window_index: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("recording of {samples} samples is shorter than one {window}-sample window")]
    RecordingTooShort { samples: usize, window: usize },
}

/// Runs the pipeline for one window (indexed by hop count) at one gain.
pub fn estimate_window(
    rec: &TwoChannelRecording,
    window_index: usize,
    gain: ModulationGain,
    config: &EstimatorConfig,
) -> Result<WindowEstimate, EstimateError> {
    config.validate()?;
    validate_recording(rec)?;
    let start = window_index * config.hop_samples;
    let end = start + config.window_samples;
    if end > rec.len() {
        return Err(EstimateError::WindowOutOfBounds {
            window_index,
            start,
            end,
            len: rec.len(),
        });
    }
    estimate_window_unchecked(rec, window_index, start, gain, config)
}

/// Pipeline body; callers have already validated config, recording, and
/// window bounds.
fn estimate_window_unchecked(
    rec: &TwoChannelRecording,
    window_index: usize,
    start: usize,
    gain: ModulationGain,
    config: &EstimatorConfig,
) -> Result<WindowEstimate, EstimateError> {
    let end = start + config.window_samples;
    let a = &rec.channel_a[start..end];
    let b = &rec.channel_b[start..end];
    let time_s = start as f64 / rec.rate.hertz;
    let estimate = |delta_t_samples, mfcv_ms, status| WindowEstimate {
        window_index,
        time_s,
        gain,
        delta_t_samples,
        mfcv_ms,
        status,
    };

    // Amplitude gate, checked on raw voltages before any modulation.
    let peak = a
        .iter()
        .chain(b)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if peak < config.amplitude_min_v {
        return Ok(estimate(None, None, EstimateStatus::LowAmplitude));
    }

    let stream_a = modulate(a, gain, &config.quantizer)?;
    let stream_b = modulate(b, gain, &config.quantizer)?;
    let window = CorrelationWindow::from_bitstreams(&stream_a, &stream_b)?;
    let profile = cross_correlate(&window);

    match estimate_delay(&profile, config.expected_sign) {
        DelayEstimate::Valid {
            delta_t_samples, ..
        } => {
            let mfcv = mfcv_from_delay(rec.electrode_distance_m, delta_t_samples, rec.rate)?;
            if mfcv > config.mfcv_max_ms {
                Ok(estimate(
                    Some(delta_t_samples),
                    None,
                    EstimateStatus::AbovePhysiologicalMax,
                ))
            } else {
                Ok(estimate(
                    Some(delta_t_samples),
                    Some(mfcv),
                    EstimateStatus::Valid,
                ))
            }
        }
        DelayEstimate::Invalid(rejection) => {
            let status = match rejection {
                DelayRejection::ZeroLag => EstimateStatus::ZeroLag,
                DelayRejection::WrongSign => EstimateStatus::WrongSign,
                DelayRejection::NoSignal => EstimateStatus::NoSignal,
            };
            Ok(estimate(None, None, status))
        }
    }
}

/// Runs the pipeline over every window and gain, then aggregates.
///
/// Windows start at multiples of the hop and must fit entirely inside the
/// recording; estimates are ordered window-major, gains in sweep order
/// within each window. Each window belongs to the wall-clock second
/// containing its start sample.
pub fn estimate_series(
    rec: &TwoChannelRecording,
    config: &EstimatorConfig,
) -> Result<(Vec<WindowEstimate>, MfcvSeries), EstimateError> {
    config.validate()?;
    validate_recording(rec)?;
    if rec.len() < config.window_samples {
        return Err(EstimateError::RecordingTooShort {
            samples: rec.len(),
            window: config.window_samples,
        });
    }

    let hertz = rec.rate.hertz;
    let window_count = (rec.len() - config.window_samples) / config.hop_samples + 1;
    let mut estimates = Vec::with_capacity(window_count * config.gains.len());
    let mut last_second = 0usize;
    for window_index in 0..window_count {
        let start = window_index * config.hop_samples;
        last_second = (start as f64 / hertz).floor() as usize;
        for &gain in &config.gains {
            estimates.push(estimate_window_unchecked(
                rec,
                window_index,
                start,
                gain,
                config,
            )?);
        }
    }

    // Cover every full second of the recording even if no window starts in
    // it, and every second a window starts in even when the recording does
    // not span a full second.
    let seconds = ((rec.len() as f64 / hertz).floor() as usize).max(last_second + 1);
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); seconds];
    for est in &estimates {
        if est.status == EstimateStatus::Valid {
            let second = (est.time_s).floor() as usize;
            buckets[second].push(est.mfcv_ms.expect("valid estimates carry a velocity"));
        }
    }

    let per_second: Vec<SecondStats> = buckets
        .iter()
        .enumerate()
        .map(|(second_index, values)| {
            let (mean_ms, sd_ms) = mean_and_sample_sd(values);
            SecondStats {
                second_index,
                mean_ms,
                sd_ms,
                n_valid: values.len(),
            }
        })
        .collect();

    let points: Vec<(f64, f64)> = per_second
        .iter()
        .filter_map(|s| s.mean_ms.map(|m| (s.second_index as f64, m)))
        .collect();
    let trend = fit_trend(&points);

    Ok((estimates, MfcvSeries { per_second, trend }))
}

/// Mean and sample standard deviation (n-1 denominator) of `values`.
///
/// The mean is absent for an empty slice; the deviation additionally needs
/// at least two values. Two-pass computation.
pub fn mean_and_sample_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (Some(mean), Some((ss / (n - 1.0)).sqrt()))
}

/// Ordinary least-squares fit through `(x, y)` points; `None` with fewer
/// than two points or when every `x` coincides.
pub fn fit_trend(points: &[(f64, f64)]) -> Option<TrendLine> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x) * (x - mean_x)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    Some(TrendLine {
        slope_ms_per_s: slope,
        intercept_ms: mean_y - slope * mean_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize, DelayProfile, DEFAULT_ELECTRODE_DISTANCE_M};

    fn rate_2200() -> SamplingRate {
        SamplingRate::default()
    }

    fn clean_recording(delay: f64, duration_s: f64) -> TwoChannelRecording {
        let profile = DelayProfile::constant(delay).unwrap();
        synthesize(duration_s, rate_2200(), &profile, 0.0, 11).unwrap()
    }

    #[test]
    fn default_config_matches_the_reference_setup() {
        let config = EstimatorConfig::default();
        assert_eq!(config.window_samples, 2200);
        assert_eq!(config.hop_samples, 2200);
        assert_eq!(config.gains.len(), 6);
        assert_eq!(config.amplitude_min_v, 0.2);
        assert_eq!(config.mfcv_max_ms, 6.0);
        assert_eq!(config.expected_sign, ExpectedSign::Negative);
        assert!(config.validate().is_ok());
    }

    #[test]
    fn velocity_formula_matches_distance_over_delay_times_rate() {
        let v = mfcv_from_delay(0.025, 11, rate_2200()).unwrap();
        assert_eq!(v, 5.000000000000001);
        assert!((v - 5.0).abs() <= 1e-9);
        let v10 = mfcv_from_delay(0.025, 10, rate_2200()).unwrap();
        assert_eq!(v10, 5.5);
    }

    #[test]
    fn zero_delay_cannot_become_a_velocity() {
        assert_eq!(
            mfcv_from_delay(0.025, 0, rate_2200()).unwrap_err(),
            VelocityError::ZeroDelay
        );
    }

    #[test]
    fn sample_stats_match_hand_computed_values() {
        let values = [5.5, 5.0, 5.0, 4.5833];
        let (mean, sd) = mean_and_sample_sd(&values);
        assert_eq!(mean, Some(5.020825));
        assert_eq!(sd, Some(0.3750129631092769));
        assert_eq!(mean_and_sample_sd(&[4.2]), (Some(4.2), None));
        assert_eq!(mean_and_sample_sd(&[]), (None, None));
    }

    #[test]
    fn trend_fit_recovers_a_known_line() {
        let points = [(0.0, 5.5), (1.0, 5.2), (2.0, 4.9), (3.0, 4.6)];
        let trend = fit_trend(&points).unwrap();
        assert!((trend.slope_ms_per_s - (-0.3)).abs() <= 1e-12);
        assert!((trend.intercept_ms - 5.5).abs() <= 1e-12);
        assert!(fit_trend(&points[..1]).is_none());
        assert!(fit_trend(&[(1.0, 2.0), (1.0, 3.0)]).is_none());
    }

    #[test]
    fn clean_constant_delay_window_is_recovered_exactly() {
        let rec = clean_recording(11.0, 1.0);
        let config = EstimatorConfig::default();
        for &gain in &config.gains {
            let est = estimate_window(&rec, 0, gain, &config).unwrap();
            assert_eq!(est.status, EstimateStatus::Valid, "gain {gain}");
            assert_eq!(est.delta_t_samples, Some(11));
            assert_eq!(est.mfcv_ms, Some(5.000000000000001));
        }
    }

    #[test]
    fn quiet_window_is_gated_before_modulation() {
        let rec = TwoChannelRecording::new(
            vec![0.05; 2200],
            vec![0.05; 2200],
            rate_2200(),
            DEFAULT_ELECTRODE_DISTANCE_M,
        )
        .unwrap();
        let config = EstimatorConfig::default();
        let est = estimate_window(&rec, 0, config.gains[0], &config).unwrap();
        assert_eq!(est.status, EstimateStatus::LowAmplitude);
        assert_eq!(est.delta_t_samples, None);
        assert_eq!(est.mfcv_ms, None);
    }

    #[test]
    fn implausibly_fast_delay_keeps_delta_but_drops_velocity() {
        // Five samples of delay imply 11 m/s, far above the 6 m/s ceiling.
        let rec = clean_recording(5.0, 1.0);
        let config = EstimatorConfig::default();
        let est = estimate_window(&rec, 0, config.gains[0], &config).unwrap();
        assert_eq!(est.status, EstimateStatus::AbovePhysiologicalMax);
        assert_eq!(est.delta_t_samples, Some(5));
        assert_eq!(est.mfcv_ms, None);
    }

    #[test]
    fn silent_recording_with_zero_floor_reports_no_signal() {
        let rec = TwoChannelRecording::new(
            vec![0.0; 2200],
            vec![0.0; 2200],
            rate_2200(),
            DEFAULT_ELECTRODE_DISTANCE_M,
        )
        .unwrap();
        let config = EstimatorConfig {
            amplitude_min_v: 0.0,
            ..EstimatorConfig::default()
        };
        let est = estimate_window(&rec, 0, config.gains[0], &config).unwrap();
        assert_eq!(est.status, EstimateStatus::NoSignal);
    }

    #[test]
    fn out_of_bounds_window_is_an_error() {
        let rec = clean_recording(11.0, 1.0);
        let config = EstimatorConfig::default();
        let err = estimate_window(&rec, 1, config.gains[0], &config).unwrap_err();
        assert!(matches!(err, EstimateError::WindowOutOfBounds { .. }));
    }

    #[test]
    fn series_on_a_clean_recording_is_all_valid_with_zero_spread() {
        let rec = clean_recording(11.0, 3.0);
        let config = EstimatorConfig::default();
        let (estimates, series) = estimate_series(&rec, &config).unwrap();
        assert_eq!(estimates.len(), 3 * 6);
        assert!(estimates
            .iter()
            .all(|e| e.status == EstimateStatus::Valid));
        assert_eq!(series.per_second.len(), 3);
        for stats in &series.per_second {
            assert_eq!(stats.n_valid, 6);
            assert_eq!(stats.mean_ms, Some(5.000000000000001));
            assert_eq!(stats.sd_ms, Some(0.0));
        }
        let trend = series.trend.unwrap();
        assert!(trend.slope_ms_per_s.abs() <= 1e-12);
    }

    #[test]
    fn estimates_are_window_major_in_sweep_order() {
        let rec = clean_recording(11.0, 2.0);
        let config = EstimatorConfig::default();
        let (estimates, _) = estimate_series(&rec, &config).unwrap();
        for (i, est) in estimates.iter().enumerate() {
            assert_eq!(est.window_index, i / config.gains.len());
            assert_eq!(est.gain, config.gains[i % config.gains.len()]);
        }
    }

    #[test]
    fn overlapping_windows_land_in_the_second_of_their_start_sample() {
        let rec = clean_recording(11.0, 2.0);
        let config = EstimatorConfig {
            hop_samples: 1100,
            ..EstimatorConfig::default()
        };
        let (estimates, series) = estimate_series(&rec, &config).unwrap();
        // Starts at samples 0, 1100, 2200: two windows begin in second 0.
        assert_eq!(estimates.len(), 3 * 6);
        assert_eq!(series.per_second.len(), 2);
        assert_eq!(series.per_second[0].n_valid, 12);
        assert_eq!(series.per_second[1].n_valid, 6);
    }

    #[test]
    fn short_recordings_are_rejected() {
        let rec = TwoChannelRecording::new(
            vec![0.0; 1000],
            vec![0.0; 1000],
            rate_2200(),
            DEFAULT_ELECTRODE_DISTANCE_M,
        )
        .unwrap();
        let err = estimate_series(&rec, &EstimatorConfig::default()).unwrap_err();
        assert_eq!(
            err,
            EstimateError::RecordingTooShort {
                samples: 1000,
                window: 2200
            }
        );
    }

    #[test]
    fn config_validation_rejects_degenerate_setups() {
        let mut config = EstimatorConfig::default();
        config.gains.clear();
        assert_eq!(config.validate(), Err(EstimatorConfigError::NoGains));
        let config = EstimatorConfig {
            window_samples: 1,
            ..EstimatorConfig::default()
        };
        assert_eq!(
            config.validate(),
            Err(EstimatorConfigError::WindowTooSmall(1))
        );
        let config = EstimatorConfig {
            hop_samples: 0,
            ..EstimatorConfig::default()
        };
        assert_eq!(config.validate(), Err(EstimatorConfigError::ZeroHop));
    }
}
