//! IIR filter design (bilinear-transform biquads) and zero-phase
//! application.
//!
//! The preprocessing chain in [`crate::signal`] is built from cascaded
//! second-order sections: a mains notch, a 4th-order bandpass realized as
//! a highpass/lowpass pair, and a 4th-order anti-alias lowpass ahead of
//! decimation. Every filter is run forward and backward ([`filtfilt`]) so
//! the chain has exactly zero phase and window timing is never skewed by
//! group delay.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("frequency {frequency} Hz must lie strictly between 0 and the Nyquist rate {nyquist} Hz")]
    BadFrequency { frequency: f64, nyquist: f64 },
    #[error("quality factor must be positive and finite, got {0}")]
    BadQuality(f64),
    #[error("signal too short to filter: {0} samples")]
    TooShort(usize),
}

/// One second-order section, normalized to `a0 = 1`, applied in direct
/// form II transposed.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

fn check_band(frequency: f64, sample_rate: f64) -> Result<(f64, f64), FilterError> {
    let nyquist = sample_rate / 2.0;
    if !frequency.is_finite() || frequency <= 0.0 || frequency >= nyquist {
        return Err(FilterError::BadFrequency { frequency, nyquist });
    }
    let omega = std::f64::consts::TAU * frequency / sample_rate;
    Ok((omega.cos(), omega.sin()))
}

fn check_quality(q: f64) -> Result<(), FilterError> {
    if !q.is_finite() || q <= 0.0 {
        return Err(FilterError::BadQuality(q));
    }
    Ok(())
}

impl Biquad {
    /// Band-reject section centered on `frequency`; `q` sets the −3 dB
    /// width to roughly `frequency / q`.
    pub fn notch(frequency: f64, sample_rate: f64, q: f64) -> Result<Self, FilterError> {
        check_quality(q)?;
        let (cos_w, sin_w) = check_band(frequency, sample_rate)?;
        let alpha = sin_w / (2.0 * q);
        let a0 = 1.0 + alpha;
        Ok(Self {
            b0: 1.0 / a0,
            b1: -2.0 * cos_w / a0,
            b2: 1.0 / a0,
            a1: -2.0 * cos_w / a0,
            a2: (1.0 - alpha) / a0,
        })
    }

    pub fn lowpass(frequency: f64, sample_rate: f64, q: f64) -> Result<Self, FilterError> {
        check_quality(q)?;
        let (cos_w, sin_w) = check_band(frequency, sample_rate)?;
        let alpha = sin_w / (2.0 * q);
        let a0 = 1.0 + alpha;
        Ok(Self {
            b0: (1.0 - cos_w) / 2.0 / a0,
            b1: (1.0 - cos_w) / a0,
            b2: (1.0 - cos_w) / 2.0 / a0,
            a1: -2.0 * cos_w / a0,
            a2: (1.0 - alpha) / a0,
        })
    }

    pub fn highpass(frequency: f64, sample_rate: f64, q: f64) -> Result<Self, FilterError> {
        check_quality(q)?;
        let (cos_w, sin_w) = check_band(frequency, sample_rate)?;
        let alpha = sin_w / (2.0 * q);
        let a0 = 1.0 + alpha;
        Ok(Self {
            b0: (1.0 + cos_w) / 2.0 / a0,
            b1: -(1.0 + cos_w) / a0,
            b2: (1.0 + cos_w) / 2.0 / a0,
            a1: -2.0 * cos_w / a0,
            a2: (1.0 - alpha) / a0,
        })
    }

    /// DC gain, used to seed the filter state at steady state.
    fn unit_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Runs the section over `x` in place. State starts at the steady
    /// state for a constant input equal to the first sample, so a signal
    /// that begins at rest produces no startup transient (and a highpass
    /// kills a constant signal exactly).
    fn run_in_place(&self, x: &mut [f64]) {
        let g = self.unit_gain();
        let x0 = x.first().copied().unwrap_or(0.0);
        let mut z1 = (g - self.b0) * x0;
        let mut z2 = (self.b2 - self.a2 * g) * x0;
        for v in x.iter_mut() {
            let input = *v;
            let output = self.b0 * input + z1;
            z1 = self.b1 * input - self.a1 * output + z2;
            z2 = self.b2 * input - self.a2 * output;
            *v = output;
        }
    }
}

/// Q values for the two sections of a 4th-order Butterworth cascade
/// (1 / (2 cos(pi/8)) and 1 / (2 cos(3 pi/8))).
const BUTTERWORTH4_Q: [f64; 2] = [0.5411961001461969, 1.3065629648763764];

/// Q of a single 2nd-order Butterworth section.
pub const BUTTERWORTH2_Q: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// 4th-order Butterworth lowpass as two cascaded sections.
pub fn butterworth_lowpass4(frequency: f64, sample_rate: f64) -> Result<[Biquad; 2], FilterError> {
    Ok([
        Biquad::lowpass(frequency, sample_rate, BUTTERWORTH4_Q[0])?,
        Biquad::lowpass(frequency, sample_rate, BUTTERWORTH4_Q[1])?,
    ])
}

/// 4th-order bandpass as a 2nd-order Butterworth highpass at the low edge
/// cascaded with a 2nd-order Butterworth lowpass at the high edge. With
/// well-separated edges (0.5 Hz / 100 Hz) this matches the textbook
/// bandpass response while keeping each section numerically tame.
pub fn bandpass4(low: f64, high: f64, sample_rate: f64) -> Result<[Biquad; 2], FilterError> {
    if !(low < high) {
        return Err(FilterError::BadFrequency {
            frequency: low,
            nyquist: high,
        });
    }
    Ok([
        Biquad::highpass(low, sample_rate, BUTTERWORTH2_Q)?,
        Biquad::lowpass(high, sample_rate, BUTTERWORTH2_Q)?,
    ])
}

/// Zero-phase application of a section cascade: the signal is extended at
/// both ends by odd reflection (`pad_len` samples, capped at `len - 1`),
/// filtered forward, reversed, filtered again, reversed back, and cropped.
/// Squared magnitude response, exactly zero phase.
pub fn filtfilt(sections: &[Biquad], x: &[f64], pad_len: usize) -> Result<Vec<f64>, FilterError> {
    let n = x.len();
    if n < 2 {
        return Err(FilterError::TooShort(n));
    }
    let pad = pad_len.min(n - 1);
    let mut buf = Vec::with_capacity(n + 2 * pad);
    let first = x[0];
    let last = x[n - 1];
    for k in (1..=pad).rev() {
        buf.push(2.0 * first - x[k]);
    }
    buf.extend_from_slice(x);
    for k in 1..=pad {
        buf.push(2.0 * last - x[n - 1 - k]);
    }

    for section in sections {
        section.run_in_place(&mut buf);
    }
    buf.reverse();
    for section in sections {
        section.run_in_place(&mut buf);
    }
    buf.reverse();

    Ok(buf[pad..pad + n].to_vec())
}

/// Keeps every `factor`-th sample starting at index 0. Callers must
/// lowpass first; see [`crate::signal::preprocess`].
pub fn decimate(x: &[f64], factor: usize) -> Vec<f64> {
    assert!(factor >= 1, "decimation factor must be at least 1");
    x.iter().step_by(factor).copied().collect()
}
