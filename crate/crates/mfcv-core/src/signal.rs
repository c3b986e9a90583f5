//! Recording types, validation, and synthetic two-channel signal generation.
//!
//! The synthesizer produces an EMG-like burst train on channel A and a
//! delayed copy on channel B, with the inter-channel delay controlled by a
//! [`DelayProfile`]. Because the true delay is known, synthesized recordings
//! serve as ground truth for the whole estimation pipeline.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default acquisition rate in hertz.
pub const DEFAULT_RATE_HZ: f64 = 2200.0;

/// Default inter-electrode distance in meters (2.5 cm).
pub const DEFAULT_ELECTRODE_DISTANCE_M: f64 = 0.025;

// Burst-train shape. One biphasic packet per slot on a jittered grid, so
// every second of signal carries activity well above the amplitude floor.
const BURST_SLOTS_PER_SECOND: f64 = 20.0;
const BURST_FREQ_MIN_HZ: f64 = 50.0;
const BURST_FREQ_MAX_HZ: f64 = 150.0;
const BURST_SIGMA_MIN_S: f64 = 0.004;
const BURST_SIGMA_MAX_S: f64 = 0.010;
const BURST_AMP_MIN: f64 = 0.6;
const BURST_AMP_MAX: f64 = 1.0;

/// Samples per second of a recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingRate {
    pub hertz: f64,
}

impl SamplingRate {
    /// A validated rate. The value must be finite and strictly positive.
    pub fn new(hertz: f64) -> Result<Self, RecordingError> {
        if !hertz.is_finite() || hertz <= 0.0 {
            return Err(RecordingError::NonPositiveRate(hertz));
        }
        Ok(Self { hertz })
    }
}

impl Default for SamplingRate {
    fn default() -> Self {
        Self {
            hertz: DEFAULT_RATE_HZ,
        }
    }
}

/// Paired sample sequences from two electrodes placed along the same fiber
/// direction, plus the geometry needed to turn a delay into a velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoChannelRecording {
    /// Proximal electrode samples, in volts.
    pub channel_a: Vec<f64>,
    /// Distal electrode samples, in volts.
    pub channel_b: Vec<f64>,
    pub rate: SamplingRate,
    /// Center-to-center electrode distance in meters.
    pub electrode_distance_m: f64,
}

impl TwoChannelRecording {
    /// Builds a recording and checks every invariant up front.
    pub fn new(
        channel_a: Vec<f64>,
        channel_b: Vec<f64>,
        rate: SamplingRate,
        electrode_distance_m: f64,
    ) -> Result<Self, RecordingError> {
        let rec = Self {
            channel_a,
            channel_b,
            rate,
            electrode_distance_m,
        };
        validate_recording(&rec)?;
        Ok(rec)
    }

    /// Number of samples per channel.
    pub fn len(&self) -> usize {
        self.channel_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channel_a.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.rate.hertz
    }
}

/// Why a recording (or one of its parts) is unusable.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordingError {
    #[error("non-positive sampling rate: {0} Hz")]
    NonPositiveRate(f64),
    #[error("channel length mismatch: channel A has {a} samples, channel B has {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("recording has no samples")]
    Empty,
    #[error("non-positive electrode distance: {0} m")]
    NonPositiveDistance(f64),
    #[error("non-finite sample in channel {channel} at index {index}")]
    NonFiniteSample { channel: char, index: usize },
}

/// Checks all recording invariants, reporting the first violation found.
///
/// Check order: sampling rate, channel lengths, electrode distance, sample
/// finiteness (channel A first).
pub fn validate_recording(rec: &TwoChannelRecording) -> Result<(), RecordingError> {
    if !rec.rate.hertz.is_finite() || rec.rate.hertz <= 0.0 {
        return Err(RecordingError::NonPositiveRate(rec.rate.hertz));
    }
    if rec.channel_a.len() != rec.channel_b.len() {
        return Err(RecordingError::LengthMismatch {
            a: rec.channel_a.len(),
            b: rec.channel_b.len(),
        });
    }
    if rec.channel_a.is_empty() {
        return Err(RecordingError::Empty);
    }
    if !rec.electrode_distance_m.is_finite() || rec.electrode_distance_m <= 0.0 {
        return Err(RecordingError::NonPositiveDistance(rec.electrode_distance_m));
    }
    for (channel, samples) in [('A', &rec.channel_a), ('B', &rec.channel_b)] {
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(RecordingError::NonFiniteSample { channel, index });
        }
    }
    Ok(())
}

/// Ground-truth inter-channel delay as a function of time.
///
/// Delays are expressed in samples and may be fractional; the synthesizer
/// realizes fractional delays by linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DelayProfile {
    /// The same delay over the whole recording.
    Constant { delay_samples: f64 },
    /// Delay interpolated linearly from `start` at t = 0 to `end` at the
    /// end of the recording. Mimics the delay growth seen under fatigue.
    LinearRamp {
        start_delay_samples: f64,
        end_delay_samples: f64,
    },
    /// Piecewise-linear delay through `(time_s, delay_samples)` breakpoints,
    /// held constant outside the breakpoint range.
    Piecewise { breakpoints: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DelayProfileError {
    #[error("delay of {0} samples is below the 1-sample minimum")]
    DelayBelowOneSample(f64),
    #[error("piecewise profile has no breakpoints")]
    NoBreakpoints,
    #[error("piecewise breakpoint times must be finite and strictly increasing (violation at breakpoint {index})")]
    UnorderedBreakpoints { index: usize },
}

impl DelayProfile {
    pub fn constant(delay_samples: f64) -> Result<Self, DelayProfileError> {
        let p = Self::Constant { delay_samples };
        p.validate()?;
        Ok(p)
    }

    pub fn ramp(
        start_delay_samples: f64,
        end_delay_samples: f64,
    ) -> Result<Self, DelayProfileError> {
        let p = Self::LinearRamp {
            start_delay_samples,
            end_delay_samples,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn piecewise(breakpoints: Vec<(f64, f64)>) -> Result<Self, DelayProfileError> {
        let p = Self::Piecewise { breakpoints };
        p.validate()?;
        Ok(p)
    }

    /// Checks that every delay is at least one sample and, for piecewise
    /// profiles, that breakpoint times are finite and strictly increasing.
    pub fn validate(&self) -> Result<(), DelayProfileError> {
        let check = |d: f64| {
            if !d.is_finite() || d < 1.0 {
                Err(DelayProfileError::DelayBelowOneSample(d))
            } else {
                Ok(())
            }
        };
        match self {
            Self::Constant { delay_samples } => check(*delay_samples),
            Self::LinearRamp {
                start_delay_samples,
                end_delay_samples,
            } => {
                check(*start_delay_samples)?;
                check(*end_delay_samples)
            }
            Self::Piecewise { breakpoints } => {
                if breakpoints.is_empty() {
                    return Err(DelayProfileError::NoBreakpoints);
                }
                for (index, (t, d)) in breakpoints.iter().enumerate() {
                    if !t.is_finite()
                        || (index > 0 && *t <= breakpoints[index - 1].0)
                    {
                        return Err(DelayProfileError::UnorderedBreakpoints { index });
                    }
                    check(*d)?;
                }
                Ok(())
            }
        }
    }

    /// The delay, in samples, at time `time_s` of a recording lasting
    /// `duration_s` seconds.
    pub fn delay_at(&self, time_s: f64, duration_s: f64) -> f64 {
        match self {
            Self::Constant { delay_samples } => *delay_samples,
            Self::LinearRamp {
                start_delay_samples,
                end_delay_samples,
            } => {
                let frac = (time_s / duration_s).clamp(0.0, 1.0);
                start_delay_samples + (end_delay_samples - start_delay_samples) * frac
            }
            Self::Piecewise { breakpoints } => {
                let first = breakpoints[0];
                let last = breakpoints[breakpoints.len() - 1];
                if time_s <= first.0 {
                    return first.1;
                }
                if time_s >= last.0 {
                    return last.1;
                }
                let right = breakpoints
                    .iter()
                    .position(|(t, _)| *t > time_s)
                    .expect("time is between breakpoints");
                let (t0, d0) = breakpoints[right - 1];
                let (t1, d1) = breakpoints[right];
                d0 + (d1 - d0) * (time_s - t0) / (t1 - t0)
            }
        }
    }

    /// The largest delay the profile can produce. Linear interpolation never
    /// exceeds the endpoint values, so this is a max over the stored delays.
    pub fn max_delay_samples(&self) -> f64 {
        match self {
            Self::Constant { delay_samples } => *delay_samples,
            Self::LinearRamp {
                start_delay_samples,
                end_delay_samples,
            } => start_delay_samples.max(*end_delay_samples),
            Self::Piecewise { breakpoints } => breakpoints
                .iter()
                .map(|(_, d)| *d)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error("duration must be positive, got {0} s")]
    NonPositiveDuration(f64),
    #[error("noise amplitude must be non-negative, got {0}")]
    NegativeNoise(f64),
    #[error("invalid sampling rate: {0} Hz")]
    InvalidRate(f64),
    #[error(transparent)]
    Profile(#[from] DelayProfileError),
    #[error("maximum profile delay of {max_delay_samples} samples does not fit a {total_samples}-sample recording")]
    DelayExceedsRecording {
        max_delay_samples: f64,
        total_samples: usize,
    },
}

/// Synthesizes a two-channel recording with a known inter-channel delay.
///
/// Channel A is a burst train of Gaussian-windowed sine packets (random
/// center frequency, width, amplitude, and phase per burst) normalized to a
/// 1.0 V peak. Channel B is channel A delayed according to `profile`, with
/// fractional delays realized by linear interpolation. Independent uniform
/// noise of the given amplitude is then added to both channels.
///
/// The output is a pure function of the arguments: the same seed always
/// produces bit-identical recordings.
pub fn synthesize(
    duration_s: f64,
    rate: SamplingRate,
    profile: &DelayProfile,
    noise_amplitude: f64,
    seed: u64,
) -> Result<TwoChannelRecording, SynthesisError> {
    if !duration_s.is_finite() || duration_s <= 0.0 {
        return Err(SynthesisError::NonPositiveDuration(duration_s));
    }
    if !rate.hertz.is_finite() || rate.hertz <= 0.0 {
        return Err(SynthesisError::InvalidRate(rate.hertz));
    }
    if !noise_amplitude.is_finite() || noise_amplitude < 0.0 {
        return Err(SynthesisError::NegativeNoise(noise_amplitude));
    }
    profile.validate()?;

    let hertz = rate.hertz;
    let total_samples = (duration_s * hertz).round().max(1.0) as usize;
    let max_delay = profile.max_delay_samples();
    if max_delay >= total_samples as f64 {
        return Err(SynthesisError::DelayExceedsRecording {
            max_delay_samples: max_delay,
            total_samples,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clean = vec![0.0f64; total_samples];

    // One burst per grid slot, jittered within the slot. A jittered grid
    // keeps burst density near-uniform, so no window falls silent.
    let slot_s = 1.0 / BURST_SLOTS_PER_SECOND;
    let slots = (duration_s * BURST_SLOTS_PER_SECOND).ceil() as usize;
    for slot in 0..slots {
        let jitter = rng.gen_range(-0.3..0.3);
        let center_s = (slot as f64 + 0.5 + jitter) * slot_s;
        let freq_hz = rng.gen_range(BURST_FREQ_MIN_HZ..BURST_FREQ_MAX_HZ);
        let sigma_s = rng.gen_range(BURST_SIGMA_MIN_S..BURST_SIGMA_MAX_S);
        let amplitude = rng.gen_range(BURST_AMP_MIN..BURST_AMP_MAX);
        let phase = rng.gen_range(0.0..TAU);
        add_burst(
            &mut clean, hertz, center_s, freq_hz, sigma_s, amplitude, phase,
        );
    }

    // Normalize the clean train to a 1.0 V peak.
    let peak = clean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        for v in &mut clean {
            *v /= peak;
        }
    }

    let mut delayed = vec![0.0f64; total_samples];
    for (k, out) in delayed.iter_mut().enumerate() {
        let time_s = k as f64 / hertz;
        let delay = profile.delay_at(time_s, duration_s);
        *out = sample_linear(&clean, k as f64 - delay);
    }

    let mut channel_a = clean;
    let mut channel_b = delayed;
    if noise_amplitude > 0.0 {
        for v in &mut channel_a {
            *v += rng.gen_range(-noise_amplitude..=noise_amplitude);
        }
        for v in &mut channel_b {
            *v += rng.gen_range(-noise_amplitude..=noise_amplitude);
        }
    }

    Ok(TwoChannelRecording {
        channel_a,
        channel_b,
        rate,
        electrode_distance_m: DEFAULT_ELECTRODE_DISTANCE_M,
    })
}

/// Adds one Gaussian-windowed sine packet to `signal`, evaluated only within
/// five sigma of the burst center.
fn add_burst(
    signal: &mut [f64],
    hertz: f64,
    center_s: f64,
    freq_hz: f64,
    sigma_s: f64,
    amplitude: f64,
    phase: f64,
) {
    let len = signal.len();
    let lo = (((center_s - 5.0 * sigma_s) * hertz).floor()).max(0.0) as usize;
    let hi = ((((center_s + 5.0 * sigma_s) * hertz).ceil()) as usize).min(len.saturating_sub(1));
    for (k, out) in signal.iter_mut().enumerate().take(hi + 1).skip(lo) {
        let dt = k as f64 / hertz - center_s;
        let envelope = (-dt * dt / (2.0 * sigma_s * sigma_s)).exp();
        *out += amplitude * envelope * (TAU * freq_hz * dt + phase).sin();
    }
}

/// Reads `signal` at a fractional position by linear interpolation.
/// Positions before the start read as zero; integer positions return the
/// stored sample exactly.
fn sample_linear(signal: &[f64], position: f64) -> f64 {
    if position < 0.0 {
        return 0.0;
    }
    let base = position.floor();
    let frac = position - base;
    let index = base as usize;
    if index >= signal.len() {
        return 0.0;
    }
    if frac == 0.0 {
        return signal[index];
    }
    let next = if index + 1 < signal.len() {
        signal[index + 1]
    } else {
        0.0
    };
    (1.0 - frac) * signal[index] + frac * next
}
