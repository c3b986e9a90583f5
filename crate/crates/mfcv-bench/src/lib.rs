//! Shared fixtures for the pipeline benchmarks: deterministic synthetic
//! recordings and pre-modulated correlation windows at the production
//! window size.

use mfcv_core::{
    modulate, synthesize, CorrelationWindow, DelayProfile, EstimatorConfig, ModulationGain,
    QuantizerConfig, SamplingRate, TwoChannelRecording,
};

/// Seed shared by all fixtures so benchmark payloads never drift.
pub const FIXTURE_SEED: u64 = 4242;

/// A zero-noise recording with a constant 11-sample delay.
pub fn clean_recording(duration_s: f64) -> TwoChannelRecording {
    let profile = DelayProfile::constant(11.0).expect("valid delay");
    synthesize(
        duration_s,
        SamplingRate::default(),
        &profile,
        0.0,
        FIXTURE_SEED,
    )
    .expect("synthesis succeeds")
}

/// One production-sized (2200-sample) window pair, already modulated to
/// ternary symbols at unit gain — the exact payload `cross_correlate`
/// receives inside the estimator.
pub fn ternary_window_pair() -> CorrelationWindow {
    let rec = clean_recording(1.0);
    let config = QuantizerConfig::default();
    let gain = ModulationGain::new(1.0).expect("unit gain is in range");
    let a = modulate(&rec.channel_a, gain, &config).expect("finite samples");
    let b = modulate(&rec.channel_b, gain, &config).expect("finite samples");
    CorrelationWindow::from_bitstreams(&a, &b).expect("equal-length streams")
}

/// The default estimator configuration (one-second windows, full gain
/// sweep).
pub fn default_config() -> EstimatorConfig {
    EstimatorConfig::default()
}
