//! Discrete linear cross-correlation and delay extraction.
//!
//! Correlation here is the zero-padded, unnormalized form
//! `r[l] = sum_k x[k] * y[k - l]` over lags `-(L-1)..=(L-1)` for windows of
//! length `L`. When channel B lags channel A by `d` samples, the peak of
//! `r` lands at lag `-d`, which is why the estimator expects a negative peak
//! for proximal-to-distal electrode order.
//!
//! Two implementations are kept side by side: [`cross_correlate`], the
//! production slice-based kernel, and [`brute_force_correlate`], a literal
//! transcription of the defining double sum. They accumulate the same terms
//! in the same order, so their outputs must match bit for bit; the test
//! suite holds them to that.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A pair of equal-length sample windows to correlate.
///
/// Fields are private so that every window in circulation has equal lengths,
/// at least two samples, and finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationWindow {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl CorrelationWindow {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, WindowError> {
        if x.len() != y.len() {
            return Err(WindowError::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        if x.len() < 2 {
            return Err(WindowError::TooShort(x.len()));
        }
        for (name, samples) in [('x', &x), ('y', &y)] {
            if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
                return Err(WindowError::NonFiniteSample {
                    sequence: name,
                    index,
                });
            }
        }
        Ok(Self { x, y })
    }

    /// Builds a window from two ternary streams of equal source length.
    pub fn from_bitstreams(
        x: &crate::bitstream::BitStream,
        y: &crate::bitstream::BitStream,
    ) -> Result<Self, WindowError> {
        let to_f64 = |bits: &[i8]| bits.iter().map(|b| f64::from(*b)).collect();
        Self::new(to_f64(&x.bits), to_f64(&y.bits))
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WindowError {
    #[error("window length mismatch: x has {x} samples, y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("correlation needs at least 2 samples per window, got {0}")]
    TooShort(usize),
    #[error("non-finite sample in sequence {sequence} at index {index}")]
    NonFiniteSample { sequence: char, index: usize },
}

/// Correlation values over the full lag range of one window pair.
///
/// For a window length `L` the profile holds `2L - 1` values; entry `i`
/// (0-based) corresponds to lag `i + 1 - L`, so the zero-lag value sits at
/// index `L - 1` and negative lags occupy the first half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagProfile {
    values: Vec<f64>,
    window_len: usize,
}

impl LagProfile {
    pub fn new(values: Vec<f64>, window_len: usize) -> Result<Self, LagProfileError> {
        if window_len < 2 {
            return Err(LagProfileError::WindowTooShort(window_len));
        }
        let expected = 2 * window_len - 1;
        if values.len() != expected {
            return Err(LagProfileError::LengthMismatch {
                expected,
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(LagProfileError::NonFiniteValue { index });
        }
        Ok(Self { values, window_len })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The lag represented by 0-based entry `index`.
    pub fn lag_at(&self, index: usize) -> isize {
        index as isize + 1 - self.window_len as isize
    }

    /// The 0-based entry index of `lag`, if the lag is in range.
    pub fn index_of_lag(&self, lag: isize) -> Option<usize> {
        let index = lag + self.window_len as isize - 1;
        (0..self.values.len() as isize)
            .contains(&index)
            .then_some(index as usize)
    }

    pub fn value_at_lag(&self, lag: isize) -> Option<f64> {
        self.index_of_lag(lag).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LagProfileError {
    #[error("a window of length L yields 2L-1 lags; expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("lag profiles need a window length of at least 2, got {0}")]
    WindowTooShort(usize),
    #[error("non-finite correlation value at index {index}")]
    NonFiniteValue { index: usize },
}

/// Zero-padded linear cross-correlation of a window pair.
///
/// For each lag the overlapping slices are combined with an ascending-index
/// dot product. Direct O(L^2) evaluation; at the 2200-sample windows used by
/// the estimator this is fast enough in an optimized build.
pub fn cross_correlate(window: &CorrelationWindow) -> LagProfile {
    let len = window.len();
    let x = window.x();
    let y = window.y();
    let mut values = Vec::with_capacity(2 * len - 1);
    for index in 0..2 * len - 1 {
        let lag = index as isize + 1 - len as isize;
        let value = if lag >= 0 {
            let l = lag as usize;
            dot(&x[l..], &y[..len - l])
        } else {
            let m = (-lag) as usize;
            dot(&x[..len - m], &y[m..])
        };
        values.push(value);
    }
    LagProfile {
        values,
        window_len: len,
    }
}

/// Ascending-index dot product of two equal-length slices.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Literal transcription of the defining sum, kept as an integrity oracle
/// for [`cross_correlate`].
///
/// Indices run 1-based exactly as in the textbook formulation: entry `m` of
/// the profile (for `m` in `1..=2L-1`) is `sum over k of x[k] * y[k - l]`
/// with `l = m - L`, skipping terms where `y`'s index leaves `1..=L`.
pub fn brute_force_correlate(window: &CorrelationWindow) -> LagProfile {
    let len = window.len();
    let x = window.x();
    let y = window.y();
    let mut values = Vec::with_capacity(2 * len - 1);
    for m in 1..=(2 * len - 1) as isize {
        let l = m - len as isize;
        let mut acc = 0.0;
        for k in 1..=len as isize {
            let j = k - l;
            if (1..=len as isize).contains(&j) {
                acc += x[(k - 1) as usize] * y[(j - 1) as usize];
            }
        }
        values.push(acc);
    }
    LagProfile {
        values,
        window_len: len,
    }
}

/// Which side of zero the correlation peak must fall on to count as a
/// physically meaningful delay.
///
/// With channel A proximal and channel B distal, propagation delays B behind
/// A and the peak must land at a negative lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedSign {
    Positive,
    Negative,
}

impl std::fmt::Display for ExpectedSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
        })
    }
}

/// Outcome of reading a delay off a lag profile.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayEstimate {
    /// The peak fell on the expected side of zero, at least one sample out.
    Valid {
        delta_t_samples: usize,
        peak_value: f64,
    },
    Invalid(DelayRejection),
}

/// Why a lag profile yields no usable delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayRejection {
    /// The peak sits at lag zero: no measurable propagation.
    ZeroLag,
    /// The peak sits on the wrong side of zero for the electrode order.
    WrongSign,
    /// Every correlation value is zero; at least one stream was silent.
    NoSignal,
}

/// Extracts the inter-channel delay from a lag profile.
///
/// The peak is the maximum correlation value; ties resolve to the smallest
/// `|lag|`, then to the negative lag. The signed peak lag must match
/// `expected_sign` and be at least one sample in magnitude; otherwise the
/// profile is rejected with the specific reason.
pub fn estimate_delay(profile: &LagProfile, expected_sign: ExpectedSign) -> DelayEstimate {
    if profile.values().iter().all(|v| *v == 0.0) {
        return DelayEstimate::Invalid(DelayRejection::NoSignal);
    }
    let mut best_lag = profile.lag_at(0);
    let mut best_value = profile.values()[0];
    for (index, &value) in profile.values().iter().enumerate().skip(1) {
        let lag = profile.lag_at(index);
        let better = value > best_value
            || (value == best_value
                && (lag.abs() < best_lag.abs() || (lag.abs() == best_lag.abs() && lag < best_lag)));
        if better {
            best_lag = lag;
            best_value = value;
        }
    }
    if best_lag == 0 {
        return DelayEstimate::Invalid(DelayRejection::ZeroLag);
    }
    let sign_matches = match expected_sign {
        ExpectedSign::Negative => best_lag < 0,
        ExpectedSign::Positive => best_lag > 0,
    };
    if !sign_matches {
        return DelayEstimate::Invalid(DelayRejection::WrongSign);
    }
    DelayEstimate::Valid {
        delta_t_samples: best_lag.unsigned_abs(),
        peak_value: best_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn window(x: Vec<f64>, y: Vec<f64>) -> CorrelationWindow {
        CorrelationWindow::new(x, y).unwrap()
    }

    /// A delayed copy of `x` with the leading `d` samples zeroed.
    fn delayed(x: &[f64], d: usize) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        y[d..].copy_from_slice(&x[..x.len() - d]);
        y
    }

    #[test]
    fn unit_impulse_delay_peaks_at_negative_lag() {
        // y is x delayed by one sample, so the only nonzero correlation
        // term sits at lag -1.
        let w = window(vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]);
        let profile = cross_correlate(&w);
        assert_eq!(profile.len(), 7);
        assert_eq!(profile.value_at_lag(-1), Some(1.0));
        assert_eq!(profile.values().iter().filter(|v| **v != 0.0).count(), 1);
        assert_eq!(
            estimate_delay(&profile, ExpectedSign::Negative),
            DelayEstimate::Valid {
                delta_t_samples: 1,
                peak_value: 1.0
            }
        );
    }

    #[test]
    fn autocorrelation_peaks_at_zero_lag_with_the_dot_product() {
        let w = window(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]);
        let profile = cross_correlate(&w);
        assert_eq!(profile.values(), &[3.0, 8.0, 14.0, 8.0, 3.0]);
        assert_eq!(profile.value_at_lag(0), Some(14.0));
        // Correlating a sequence with itself is symmetric around lag zero.
        for lag in 1..=2 {
            assert_eq!(profile.value_at_lag(lag), profile.value_at_lag(-lag));
        }
    }

    #[test]
    fn smallest_window_resolves_a_one_sample_delay() {
        let w = window(vec![1.0, 0.0], vec![0.0, 1.0]);
        let fast = cross_correlate(&w);
        let brute = brute_force_correlate(&w);
        assert_eq!(fast.values(), &[1.0, 0.0, 0.0]);
        assert_eq!(fast.values(), brute.values());
        assert_eq!(
            estimate_delay(&fast, ExpectedSign::Negative),
            DelayEstimate::Valid {
                delta_t_samples: 1,
                peak_value: 1.0
            }
        );
    }

    #[test]
    fn lag_indexing_round_trips() {
        let profile = LagProfile::new(vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], 4).unwrap();
        assert_eq!(profile.lag_at(0), -3);
        assert_eq!(profile.lag_at(3), 0);
        assert_eq!(profile.lag_at(6), 3);
        assert_eq!(profile.index_of_lag(0), Some(3));
        assert_eq!(profile.index_of_lag(-3), Some(0));
        assert_eq!(profile.index_of_lag(4), None);
        assert_eq!(profile.value_at_lag(0), Some(1.0));
    }

    #[test]
    fn profile_length_is_enforced() {
        assert_eq!(
            LagProfile::new(vec![0.0; 6], 4).unwrap_err(),
            LagProfileError::LengthMismatch {
                expected: 7,
                actual: 6
            }
        );
    }

    #[test]
    fn full_scale_window_peak_index_maps_to_eleven_samples() {
        // A 2200-sample window yields 4399 lags; a peak at 1-based entry
        // 2189 is lag -11, i.e. an 11-sample delay.
        let window_len = 2200;
        let mut values = vec![0.0; 2 * window_len - 1];
        values[2189 - 1] = 5.0;
        let profile = LagProfile::new(values, window_len).unwrap();
        assert_eq!(profile.lag_at(2189 - 1), -11);
        assert_eq!(
            estimate_delay(&profile, ExpectedSign::Negative),
            DelayEstimate::Valid {
                delta_t_samples: 11,
                peak_value: 5.0
            }
        );
    }

    #[test]
    fn zero_lag_peak_is_rejected() {
        let w = window(vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]);
        let profile = cross_correlate(&w);
        assert_eq!(
            estimate_delay(&profile, ExpectedSign::Negative),
            DelayEstimate::Invalid(DelayRejection::ZeroLag)
        );
    }

    #[test]
    fn wrong_sign_peak_is_rejected() {
        // y leads x, so the peak lands at a positive lag.
        let w = window(vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]);
        let profile = cross_correlate(&w);
        assert_eq!(profile.value_at_lag(1), Some(1.0));
        assert_eq!(
            estimate_delay(&profile, ExpectedSign::Negative),
            DelayEstimate::Invalid(DelayRejection::WrongSign)
        );
        assert_eq!(
            estimate_delay(&profile, ExpectedSign::Positive),
            DelayEstimate::Valid {
                delta_t_samples: 1,
                peak_value: 1.0
            }
        );
    }

    #[test]
    fn silent_streams_are_rejected_as_no_signal() {
        let w = window(vec![0.0; 8], vec![0.0; 8]);
        let profile = cross_correlate(&w);
        assert_eq!(
            estimate_delay(&profile, ExpectedSign::Negative),
            DelayEstimate::Invalid(DelayRejection::NoSignal)
        );
    }

    #[test]
    fn value_ties_resolve_to_smallest_lag_magnitude_then_negative() {
        // Peaks of equal value at lags -3 and +2: |+2| < |-3|, so the
        // positive lag wins and the negative expectation rejects it.
        let mut values = vec![0.0; 9];
        let mut profile = LagProfile::new(values.clone(), 5).unwrap();
        let minus3 = profile.index_of_lag(-3).unwrap();
        let plus2 = profile.index_of_lag(2).unwrap();
        values[minus3] = 2.0;
        values[plus2] = 2.0;
        profile = LagProfile::new(values, 5).unwrap();
        assert_eq!(
            estimate_delay(&profile, ExpectedSign::Negative),
            DelayEstimate::Invalid(DelayRejection::WrongSign)
        );

        // Equal value and equal magnitude at -2 and +2: negative wins.
        let mut values = vec![0.0; 9];
        let tied = LagProfile::new(values.clone(), 5).unwrap();
        values[tied.index_of_lag(-2).unwrap()] = 2.0;
        values[tied.index_of_lag(2).unwrap()] = 2.0;
        let profile = LagProfile::new(values, 5).unwrap();
        assert_eq!(
            estimate_delay(&profile, ExpectedSign::Negative),
            DelayEstimate::Valid {
                delta_t_samples: 2,
                peak_value: 2.0
            }
        );
    }

    #[test]
    fn mismatched_windows_are_rejected() {
        assert_eq!(
            CorrelationWindow::new(vec![0.0; 3], vec![0.0; 4]).unwrap_err(),
            WindowError::LengthMismatch { x: 3, y: 4 }
        );
        assert_eq!(
            CorrelationWindow::new(vec![0.0], vec![0.0]).unwrap_err(),
            WindowError::TooShort(1)
        );
    }

    #[test]
    fn non_dyadic_scaling_keeps_the_peak_lag() {
        // Scaling by 3.7 is inexact in binary floating point, but on a
        // well-separated peak the argmax must not move.
        let x = vec![0.0, 0.2, 0.9, 0.3, 0.0, 0.0, 0.0, 0.0];
        let y = delayed(&x, 2);
        let base = cross_correlate(&window(x.clone(), y.clone()));
        let scaled_x: Vec<f64> = x.iter().map(|v| v * 3.7).collect();
        let scaled = cross_correlate(&window(scaled_x, y));
        let argmax = |p: &LagProfile| {
            p.values()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| p.lag_at(i))
                .unwrap()
        };
        assert_eq!(argmax(&base), -2);
        assert_eq!(argmax(&scaled), -2);
    }

    proptest! {
        /// The production kernel and the literal double sum agree bit for
        /// bit on arbitrary windows.
        #[test]
        fn fast_and_brute_force_profiles_are_bit_identical(
            x in proptest::collection::vec(-1.0f64..1.0, 2..64),
            y_seed in proptest::collection::vec(-1.0f64..1.0, 2..64),
        ) {
            let len = x.len().min(y_seed.len());
            let w = window(x[..len].to_vec(), y_seed[..len].to_vec());
            let fast = cross_correlate(&w);
            let brute = brute_force_correlate(&w);
            prop_assert_eq!(fast.values().len(), brute.values().len());
            for (i, (a, b)) in fast.values().iter().zip(brute.values()).enumerate() {
                prop_assert!(
                    a.to_bits() == b.to_bits(),
                    "profiles differ at index {}: {} vs {}", i, a, b
                );
            }
        }

        /// Delaying y relative to x moves the correlation peak to the
        /// negative lag matching the delay.
        #[test]
        fn shift_moves_the_peak_to_minus_delay(
            x in proptest::collection::vec(-1.0f64..1.0, 192..256),
            d in 1usize..8,
        ) {
            let y = delayed(&x, d);
            let profile = cross_correlate(&window(x, y));
            match estimate_delay(&profile, ExpectedSign::Negative) {
                DelayEstimate::Valid { delta_t_samples, .. } => {
                    prop_assert_eq!(delta_t_samples, d);
                }
                other => prop_assert!(false, "expected a valid delay, got {:?}", other),
            }
        }

        /// Scaling the inputs by powers of two scales every correlation
        /// value exactly: once when one side is scaled, squared when both
        /// are, because dyadic factors commute with rounding.
        #[test]
        fn dyadic_scaling_scales_values_exactly(
            x in proptest::collection::vec(-1.0f64..1.0, 8..64),
            exp in -3i32..=3,
        ) {
            let scale = 2f64.powi(exp);
            let y = delayed(&x, 1);
            let base = cross_correlate(&window(x.clone(), y.clone()));
            let scaled_x: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let scaled_y: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let one_side = cross_correlate(&window(scaled_x.clone(), y));
            let both_sides = cross_correlate(&window(scaled_x, scaled_y));
            for ((a, b), c) in base
                .values()
                .iter()
                .zip(one_side.values())
                .zip(both_sides.values())
            {
                prop_assert_eq!((a * scale).to_bits(), b.to_bits());
                prop_assert_eq!((a * scale * scale).to_bits(), c.to_bits());
            }
        }

        /// Swapping the inputs mirrors the profile around lag zero.
        #[test]
        fn swapping_inputs_mirrors_the_profile(
            x in proptest::collection::vec(-1.0f64..1.0, 2..64),
            y_seed in proptest::collection::vec(-1.0f64..1.0, 2..64),
        ) {
            let len = x.len().min(y_seed.len());
            let x = x[..len].to_vec();
            let y = y_seed[..len].to_vec();
            let forward = cross_correlate(&window(x.clone(), y.clone()));
            let backward = cross_correlate(&window(y, x));
            for lag in -(len as isize - 1)..=(len as isize - 1) {
                let a = forward.value_at_lag(lag).unwrap();
                let b = backward.value_at_lag(-lag).unwrap();
                prop_assert!(
                    a.to_bits() == b.to_bits(),
                    "mirror mismatch at lag {}: {} vs {}", lag, a, b
                );
            }
        }
    }
}
