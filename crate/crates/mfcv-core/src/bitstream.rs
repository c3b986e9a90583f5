//! Ternary bitstream modulation.
//!
//! Each voltage sample collapses to one of three symbols: +1 above the
//! effective threshold, -1 below its negative, 0 in between. The effective
//! threshold is the base threshold divided by the modulation gain, so raising
//! the gain widens the set of samples that survive as nonzero symbols.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest admissible modulation gain.
pub const GAIN_MIN: f64 = 1.0;
/// Highest admissible modulation gain.
pub const GAIN_MAX: f64 = 1.5;

/// Quantizer front-end parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerConfig {
    /// Full-scale input voltage.
    pub v_max: f64,
    /// ADC resolution in bits.
    pub n_bits: u32,
    /// Ternary decision threshold at unit gain, in volts.
    pub base_threshold_v: f64,
}

impl QuantizerConfig {
    pub fn validate(&self) -> Result<(), QuantizerConfigError> {
        if !self.v_max.is_finite() || self.v_max <= 0.0 {
            return Err(QuantizerConfigError::NonPositiveVMax(self.v_max));
        }
        if self.n_bits == 0 || self.n_bits > 63 {
            return Err(QuantizerConfigError::UnsupportedResolution(self.n_bits));
        }
        if !self.base_threshold_v.is_finite() || self.base_threshold_v <= 0.0 {
            return Err(QuantizerConfigError::NonPositiveThreshold(
                self.base_threshold_v,
            ));
        }
        if self.base_threshold_v >= self.v_max {
            return Err(QuantizerConfigError::ThresholdNotBelowFullScale {
                threshold_v: self.base_threshold_v,
                v_max: self.v_max,
            });
        }
        Ok(())
    }
}

impl Default for QuantizerConfig {
    /// 1.0 V full scale, 12-bit resolution, 0.2 V base threshold.
    fn default() -> Self {
        Self {
            v_max: 1.0,
            n_bits: 12,
            base_threshold_v: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizerConfigError {
    #[error("full-scale voltage must be positive, got {0} V")]
    NonPositiveVMax(f64),
    #[error("resolution of {0} bits is outside the supported 1..=63 range")]
    UnsupportedResolution(u32),
    #[error("base threshold must be positive, got {0} V")]
    NonPositiveThreshold(f64),
    #[error("base threshold of {threshold_v} V must sit below the {v_max} V full scale")]
    ThresholdNotBelowFullScale { threshold_v: f64, v_max: f64 },
}

/// Quantization step: the full-scale voltage divided by the number of
/// quantization levels.
pub fn lsb(config: &QuantizerConfig) -> f64 {
    config.v_max / (1u64 << config.n_bits) as f64
}

/// Modulation gain, restricted to [`GAIN_MIN`]..=[`GAIN_MAX`].
///
/// The newtype guarantees that any `ModulationGain` in circulation is within
/// range, including values arriving through deserialization.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ModulationGain(f64);

impl ModulationGain {
    pub fn new(gain: f64) -> Result<Self, GainError> {
        if !gain.is_finite() || !(GAIN_MIN..=GAIN_MAX).contains(&gain) {
            return Err(GainError::OutOfRange(gain));
        }
        Ok(Self(gain))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Effective ternary threshold in volts: base threshold divided by gain.
    pub fn effective_threshold_v(self, config: &QuantizerConfig) -> f64 {
        config.base_threshold_v / self.0
    }
}

impl TryFrom<f64> for ModulationGain {
    type Error = GainError;

    fn try_from(gain: f64) -> Result<Self, Self::Error> {
        Self::new(gain)
    }
}

impl From<ModulationGain> for f64 {
    fn from(gain: ModulationGain) -> f64 {
        gain.0
    }
}

impl std::fmt::Display for ModulationGain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GainError {
    #[error("modulation gain {0} is outside the supported {GAIN_MIN}..={GAIN_MAX} range")]
    OutOfRange(f64),
}

/// Ternary symbol sequence produced from one window at one gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitStream {
    /// Symbols, each -1, 0, or +1, one per input sample.
    pub bits: Vec<i8>,
    /// Gain the stream was modulated at.
    pub gain: ModulationGain,
}

impl BitStream {
    /// Length of the window the stream came from (one symbol per sample).
    pub fn source_length(&self) -> usize {
        self.bits.len()
    }

    /// Indices of nonzero symbols, in ascending order.
    pub fn nonzero_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModulateError {
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error(transparent)]
    Config(#[from] QuantizerConfigError),
}

/// Collapses voltage samples to ternary symbols at the given gain.
///
/// A sample strictly above the effective threshold maps to +1, strictly below
/// its negative to -1, and anything else (the comparator dead zone, threshold
/// hits included) to 0.
pub fn modulate(
    samples: &[f64],
    gain: ModulationGain,
    config: &QuantizerConfig,
) -> Result<BitStream, ModulateError> {
    config.validate()?;
    let threshold = gain.effective_threshold_v(config);
    let mut bits = Vec::with_capacity(samples.len());
    for (index, &s) in samples.iter().enumerate() {
        if !s.is_finite() {
            return Err(ModulateError::NonFiniteSample { index });
        }
        bits.push(if s > threshold {
            1
        } else if s < -threshold {
            -1
        } else {
            0
        });
    }
    Ok(BitStream { bits, gain })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error("sweep step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("sweep start {min} exceeds sweep end {max}")]
    EmptyRange { min: f64, max: f64 },
}

/// Builds the ascending gain ladder `min, min + step, ...` up to and
/// including `max` (within one part in 10^9, to absorb accumulated float
/// error in steps like 0.1).
pub fn gain_sweep(min: f64, max: f64, step: f64) -> Result<Vec<ModulationGain>, SweepError> {
    if !step.is_finite() || step <= 0.0 {
        return Err(SweepError::NonPositiveStep(step));
    }
    if min > max {
        return Err(SweepError::EmptyRange { min, max });
    }
    // Validate the endpoints eagerly so a bad range fails even if stepping
    // would skip over it.
    ModulationGain::new(min)?;
    ModulationGain::new(max)?;
    let mut gains = Vec::new();
    let mut i = 0u32;
    loop {
        let value = min + f64::from(i) * step;
        if value > max + 1e-9 {
            break;
        }
        gains.push(ModulationGain::new(value.min(max))?);
        i += 1;
    }
    Ok(gains)
}
