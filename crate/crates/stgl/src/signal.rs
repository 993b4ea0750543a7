//! Multichannel recordings, the preprocessing chain, and onset-aligned
//! windowing.
//!
//! A [`Recording`] is a channels-by-samples matrix with a sample rate, an
//! event-onset index, per-channel region labels, and a list of channels
//! marked bad by inspection. [`preprocess`] applies the standard chain —
//! mains notch, bandpass, integer decimation, all zero-phase — and
//! [`make_windows`] cuts the samples into overlapping windows tiled
//! around the onset, labeled pre-onset / onset / post-onset.

use ndarray::Array2;
use thiserror::Error;

use crate::filter::{self, Biquad, FilterError};
use crate::graph::SignalMatrix;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("sample rate must be positive and finite, got {0}")]
    BadSampleRate(f64),
    #[error("recording has no channels or no samples")]
    EmptySamples,
    #[error("{what} has {got} entries but there are {expected} channels")]
    ChannelCountMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("duplicate channel name '{0}'")]
    DuplicateChannel(String),
    #[error("unknown channel '{0}'")]
    UnknownChannel(String),
    #[error("onset sample {onset} outside recording of {n_samples} samples")]
    OnsetOutOfRange { onset: usize, n_samples: usize },
    #[error("non-finite sample value in channel {channel}")]
    NonFinite { channel: usize },
    #[error("bad window parameters: {0}")]
    BadWindowParams(String),
    #[error("not enough samples on the {side} side of the onset: need {needed}, have {available}")]
    InsufficientSamples {
        side: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("cannot drop every channel")]
    NoChannelsLeft,
    #[error("target rate {target} Hz does not divide the sample rate {rate} Hz into an integer factor")]
    NonIntegerDecimation { target: f64, rate: f64 },
    #[error("notch frequency {notch} Hz must lie inside the passband ({low}, {high}) Hz")]
    NotchOutsideBand { notch: f64, low: f64, high: f64 },
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// A multichannel recording: rows are channels, columns are samples
/// (values in microvolts). `soz` marks channels clinically labeled as
/// seizure-onset-zone; `bad_channels` lists channels excluded by expert
/// inspection (dropped from the matrix by [`Recording::drop_channels`],
/// the names kept so reports can say what was removed).
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    channel_names: Vec<String>,
    sample_rate: f64,
    samples: Array2<f64>,
    onset_sample: usize,
    soz: Vec<bool>,
    bad_channels: Vec<String>,
}

impl Recording {
    pub fn new(
        channel_names: Vec<String>,
        sample_rate: f64,
        samples: Array2<f64>,
        onset_sample: usize,
        soz: Vec<bool>,
        bad_channels: Vec<String>,
    ) -> Result<Self, SignalError> {
        if !sample_rate.is_finite() || sample_rate <= 0.0 {
            return Err(SignalError::BadSampleRate(sample_rate));
        }
        let (n_channels, n_samples) = samples.dim();
        if n_channels == 0 || n_samples == 0 {
            return Err(SignalError::EmptySamples);
        }
        if channel_names.len() != n_channels {
            return Err(SignalError::ChannelCountMismatch {
                what: "channel name list",
                got: channel_names.len(),
                expected: n_channels,
            });
        }
        if soz.len() != n_channels {
            return Err(SignalError::ChannelCountMismatch {
                what: "onset-zone label list",
                got: soz.len(),
                expected: n_channels,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for name in &channel_names {
            if !seen.insert(name.as_str()) {
                return Err(SignalError::DuplicateChannel(name.clone()));
            }
        }
        if onset_sample >= n_samples {
            return Err(SignalError::OnsetOutOfRange {
                onset: onset_sample,
                n_samples,
            });
        }
        for (ch, row) in samples.rows().into_iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(SignalError::NonFinite { channel: ch });
            }
        }
        Ok(Self {
            channel_names,
            sample_rate,
            samples,
            onset_sample,
            soz,
            bad_channels,
        })
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn n_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.ncols()
    }

    pub fn onset_sample(&self) -> usize {
        self.onset_sample
    }

    pub fn soz(&self) -> &[bool] {
        &self.soz
    }

    pub fn bad_channels(&self) -> &[String] {
        &self.bad_channels
    }

    /// Returns a copy without the named channels; the removed names are
    /// appended to the `bad_channels` record. Unknown names are an error.
    pub fn drop_channels(&self, names: &[String]) -> Result<Self, SignalError> {
        for name in names {
            if !self.channel_names.contains(name) {
                return Err(SignalError::UnknownChannel(name.clone()));
            }
        }
        let keep: Vec<usize> = (0..self.n_channels())
            .filter(|&ch| !names.contains(&self.channel_names[ch]))
            .collect();
        if keep.is_empty() {
            return Err(SignalError::NoChannelsLeft);
        }
        let mut samples = Array2::<f64>::zeros((keep.len(), self.n_samples()));
        for (row, &ch) in keep.iter().enumerate() {
            samples.row_mut(row).assign(&self.samples.row(ch));
        }
        let mut bad = self.bad_channels.clone();
        for name in names {
            if !bad.contains(name) {
                bad.push(name.clone());
            }
        }
        Ok(Self {
            channel_names: keep.iter().map(|&ch| self.channel_names[ch].clone()).collect(),
            sample_rate: self.sample_rate,
            samples,
            onset_sample: self.onset_sample,
            soz: keep.iter().map(|&ch| self.soz[ch]).collect(),
            bad_channels: bad,
        })
    }

    /// Drops whichever `bad_channels` entries are still present; entries
    /// already removed are ignored.
    pub fn without_bad_channels(&self) -> Result<Self, SignalError> {
        let present: Vec<String> = self
            .bad_channels
            .iter()
            .filter(|name| self.channel_names.contains(name))
            .cloned()
            .collect();
        if present.is_empty() {
            Ok(self.clone())
        } else {
            self.drop_channels(&present)
        }
    }
}

/// Position of a window relative to the event onset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowLabel {
    PreOnset,
    Onset,
    PostOnset,
}

impl std::fmt::Display for WindowLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WindowLabel::PreOnset => "pre",
            WindowLabel::Onset => "onset",
            WindowLabel::PostOnset => "post",
        })
    }
}

impl std::str::FromStr for WindowLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pre" => Ok(WindowLabel::PreOnset),
            "onset" => Ok(WindowLabel::Onset),
            "post" => Ok(WindowLabel::PostOnset),
            other => Err(format!("unknown window label '{other}'")),
        }
    }
}

/// A recording cut into onset-aligned windows. Channel names and
/// onset-zone labels are carried along for downstream scoring.
#[derive(Debug, Clone)]
pub struct WindowedRecording {
    pub windows: Vec<SignalMatrix>,
    pub labels: Vec<WindowLabel>,
    pub window_starts: Vec<usize>,
    pub window_length_ms: f64,
    pub overlap_fraction: f64,
    pub channel_names: Vec<String>,
    pub soz: Vec<bool>,
}

impl WindowedRecording {
    pub fn n_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }
}

/// Cuts `n_pre` windows before the onset, one window starting exactly at
/// the onset sample, and `n_post` windows after it. Consecutive starts
/// differ by `round(window_len * (1 - overlap_fraction))` samples; pre
/// windows tile backward from the onset with that same stride.
pub fn make_windows(
    recording: &Recording,
    window_ms: f64,
    overlap_fraction: f64,
    n_pre: usize,
    n_post: usize,
) -> Result<WindowedRecording, SignalError> {
    if !window_ms.is_finite() || window_ms <= 0.0 {
        return Err(SignalError::BadWindowParams(format!(
            "window length must be positive, got {window_ms} ms"
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(SignalError::BadWindowParams(format!(
            "overlap fraction must lie in [0, 1), got {overlap_fraction}"
        )));
    }
    let window_len = (window_ms / 1000.0 * recording.sample_rate()).round() as usize;
    if window_len < 2 {
        return Err(SignalError::BadWindowParams(format!(
            "window of {window_ms} ms at {} Hz is only {window_len} sample(s)",
            recording.sample_rate()
        )));
    }
    let stride = (window_len as f64 * (1.0 - overlap_fraction)).round() as usize;
    if stride == 0 {
        return Err(SignalError::BadWindowParams(format!(
            "overlap {overlap_fraction} leaves a zero-sample stride"
        )));
    }

    let onset = recording.onset_sample();
    let needed_pre = n_pre * stride;
    if onset < needed_pre {
        return Err(SignalError::InsufficientSamples {
            side: "pre",
            needed: needed_pre,
            available: onset,
        });
    }
    let last_start = onset + n_post * stride;
    let needed_post = last_start + window_len;
    if needed_post > recording.n_samples() {
        return Err(SignalError::InsufficientSamples {
            side: "post",
            needed: needed_post,
            available: recording.n_samples(),
        });
    }

    let mut windows = Vec::with_capacity(n_pre + 1 + n_post);
    let mut labels = Vec::with_capacity(n_pre + 1 + n_post);
    let mut window_starts = Vec::with_capacity(n_pre + 1 + n_post);
    let mut push = |start: usize, label: WindowLabel| {
        let slice = recording
            .samples()
            .slice(ndarray::s![.., start..start + window_len])
            .to_owned();
        windows.push(SignalMatrix::new(slice).expect("finite by recording invariant"));
        labels.push(label);
        window_starts.push(start);
    };
    for k in (1..=n_pre).rev() {
        push(onset - k * stride, WindowLabel::PreOnset);
    }
    push(onset, WindowLabel::Onset);
    for k in 1..=n_post {
        push(onset + k * stride, WindowLabel::PostOnset);
    }

    Ok(WindowedRecording {
        windows,
        labels,
        window_starts,
        window_length_ms: window_ms,
        overlap_fraction,
        channel_names: recording.channel_names().to_vec(),
        soz: recording.soz().to_vec(),
    })
}

/// Notch quality factor: roughly a 2 Hz rejection width at 60 Hz.
pub const NOTCH_Q: f64 = 30.0;
/// Anti-alias cutoff as a fraction of the post-decimation rate.
pub const ANTI_ALIAS_FRACTION: f64 = 0.45;

/// The standard preprocessing chain: drop bad channels, zero-phase mains
/// notch, zero-phase 4th-order bandpass, then integer-factor decimation
/// behind a 4th-order anti-alias lowpass. The onset index is rescaled to
/// the new rate.
pub fn preprocess(
    recording: &Recording,
    notch_hz: f64,
    band: (f64, f64),
    target_rate: f64,
) -> Result<Recording, SignalError> {
    let (low, high) = band;
    if !(notch_hz > low && notch_hz < high) {
        return Err(SignalError::NotchOutsideBand {
            notch: notch_hz,
            low,
            high,
        });
    }
    if !target_rate.is_finite() || target_rate <= 0.0 {
        return Err(SignalError::BadSampleRate(target_rate));
    }
    let rate = recording.sample_rate();
    if target_rate > rate {
        return Err(SignalError::NonIntegerDecimation {
            target: target_rate,
            rate,
        });
    }
    let factor_f = rate / target_rate;
    let factor = factor_f.round() as usize;
    if factor < 1 || (factor_f - factor as f64).abs() > 1e-9 {
        return Err(SignalError::NonIntegerDecimation {
            target: target_rate,
            rate,
        });
    }

    let recording = recording.without_bad_channels()?;

    let mut sections: Vec<Biquad> = Vec::new();
    sections.push(Biquad::notch(notch_hz, rate, NOTCH_Q)?);
    sections.extend(filter::bandpass4(low, high, rate)?);
    if factor > 1 {
        sections.extend(filter::butterworth_lowpass4(
            ANTI_ALIAS_FRACTION * target_rate,
            rate,
        )?);
    }

    let pad_len = rate.round() as usize;
    let n_out = recording.n_samples().div_ceil(factor);
    let mut out = Array2::<f64>::zeros((recording.n_channels(), n_out));
    for (ch, row) in recording.samples().rows().into_iter().enumerate() {
        let filtered = filter::filtfilt(&sections, row.as_slice().expect("row-major"), pad_len)?;
        let kept = filter::decimate(&filtered, factor);
        for (k, v) in kept.into_iter().enumerate() {
            out[[ch, k]] = v;
        }
    }

    let onset = ((recording.onset_sample() as f64 / factor as f64).round() as usize)
        .min(n_out.saturating_sub(1));
    Recording::new(
        recording.channel_names().to_vec(),
        target_rate,
        out,
        onset,
        recording.soz().to_vec(),
        recording.bad_channels().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_recording(n_channels: usize, n_samples: usize, rate: f64, onset: usize) -> Recording {
        let samples = Array2::from_shape_fn((n_channels, n_samples), |(ch, k)| {
            (ch * 1000 + k) as f64 * 1e-3
        });
        Recording::new(
            (0..n_channels).map(|ch| format!("c{ch:04}")).collect(),
            rate,
            samples,
            onset,
            vec![false; n_channels],
            Vec::new(),
        )
        .unwrap()
    }

    #[test]
    fn default_layout_gives_thirteen_labeled_windows() {
        // 250 Hz and 512 ms windows: 128 samples per window, stride 64 at
        // 50% overlap.
        let r = simple_recording(3, 2000, 250.0, 400);
        let wr = make_windows(&r, 512.0, 0.5, 3, 9).unwrap();
        assert_eq!(wr.n_windows(), 13);
        assert_eq!(wr.windows[0].n_samples(), 128);
        let mut expected = vec![WindowLabel::PreOnset; 3];
        expected.push(WindowLabel::Onset);
        expected.extend(vec![WindowLabel::PostOnset; 9]);
        assert_eq!(wr.labels, expected);
        // Onset window starts exactly at the onset sample.
        assert_eq!(wr.window_starts[3], 400);
        for pair in wr.window_starts.windows(2) {
            assert_eq!(pair[1] - pair[0], 64);
        }
    }

    #[test]
    fn zero_overlap_windows_abut() {
        let r = simple_recording(2, 1000, 250.0, 256);
        let wr = make_windows(&r, 512.0, 0.0, 2, 3).unwrap();
        for pair in wr.window_starts.windows(2) {
            assert_eq!(pair[1] - pair[0], 128);
        }
        assert_eq!(wr.window_starts[2], 256);
    }

    #[test]
    fn window_contents_match_the_sample_slices() {
        let r = simple_recording(2, 600, 250.0, 300);
        let wr = make_windows(&r, 512.0, 0.5, 1, 1).unwrap();
        let start = wr.window_starts[0];
        for ch in 0..2 {
            for k in 0..128 {
                assert_eq!(
                    wr.windows[0].values()[[ch, k]],
                    r.samples()[[ch, start + k]]
                );
            }
        }
    }

    #[test]
    fn insufficient_samples_name_the_missing_side() {
        let r = simple_recording(2, 1000, 250.0, 10);
        match make_windows(&r, 512.0, 0.5, 3, 2) {
            Err(SignalError::InsufficientSamples { side: "pre", .. }) => {}
            other => panic!("expected pre-side error, got {other:?}"),
        }
        let r = simple_recording(2, 400, 250.0, 256);
        match make_windows(&r, 512.0, 0.5, 1, 9) {
            Err(SignalError::InsufficientSamples { side: "post", .. }) => {}
            other => panic!("expected post-side error, got {other:?}"),
        }
    }

    #[test]
    fn window_parameter_validation() {
        let r = simple_recording(2, 1000, 250.0, 500);
        assert!(make_windows(&r, 0.0, 0.5, 1, 1).is_err());
        assert!(make_windows(&r, 512.0, 1.0, 1, 1).is_err());
        assert!(make_windows(&r, 512.0, -0.1, 1, 1).is_err());
        // A 1-sample window is rejected.
        assert!(make_windows(&r, 4.0, 0.0, 1, 1).is_err());
    }

    #[test]
    fn recording_validation_catches_bad_inputs() {
        let samples = Array2::<f64>::zeros((2, 10));
        let names = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            Recording::new(names.clone(), 0.0, samples.clone(), 0, vec![false; 2], vec![]),
            Err(SignalError::BadSampleRate(_))
        ));
        assert!(matches!(
            Recording::new(
                vec!["a".into(), "a".into()],
                250.0,
                samples.clone(),
                0,
                vec![false; 2],
                vec![]
            ),
            Err(SignalError::DuplicateChannel(_))
        ));
        assert!(matches!(
            Recording::new(names.clone(), 250.0, samples.clone(), 10, vec![false; 2], vec![]),
            Err(SignalError::OnsetOutOfRange { .. })
        ));
        assert!(matches!(
            Recording::new(names.clone(), 250.0, samples.clone(), 0, vec![false; 3], vec![]),
            Err(SignalError::ChannelCountMismatch { .. })
        ));
        let mut nan = samples;
        nan[[1, 3]] = f64::NAN;
        assert!(matches!(
            Recording::new(names, 250.0, nan, 0, vec![false; 2], vec![]),
            Err(SignalError::NonFinite { channel: 1 })
        ));
    }

    #[test]
    fn dropping_channels_keeps_the_rest_aligned() {
        let samples = Array2::from_shape_fn((3, 5), |(ch, k)| (10 * ch + k) as f64);
        let r = Recording::new(
            vec!["a".into(), "b".into(), "c".into()],
            250.0,
            samples,
            2,
            vec![true, false, true],
            vec![],
        )
        .unwrap();
        let dropped = r.drop_channels(&["b".to_string()]).unwrap();
        assert_eq!(dropped.channel_names(), &["a".to_string(), "c".to_string()]);
        assert_eq!(dropped.soz(), &[true, true]);
        assert_eq!(dropped.samples()[[1, 4]], 24.0);
        assert_eq!(dropped.bad_channels(), &["b".to_string()]);
        assert!(matches!(
            r.drop_channels(&["zz".to_string()]),
            Err(SignalError::UnknownChannel(_))
        ));
    }

    #[test]
    fn preprocess_decimates_and_rescales_the_onset() {
        let fs = 1000.0;
        let n = 4000;
        let samples = Array2::from_shape_fn((2, n), |(ch, k)| {
            let t = k as f64 / fs;
            (std::f64::consts::TAU * 10.0 * t).sin() * (1.0 + ch as f64)
        });
        let r = Recording::new(
            vec!["a".into(), "b".into()],
            fs,
            samples,
            2000,
            vec![false, true],
            vec![],
        )
        .unwrap();
        let out = preprocess(&r, 60.0, (0.5, 100.0), 250.0).unwrap();
        assert_eq!(out.sample_rate(), 250.0);
        assert_eq!(out.n_samples(), 1000);
        assert_eq!(out.onset_sample(), 500);
        assert_eq!(out.soz(), &[false, true]);
    }

    #[test]
    fn preprocess_removes_mains_but_keeps_the_passband() {
        let fs = 1000.0;
        let n = 8000;
        let tone = |f: f64, k: usize| (std::f64::consts::TAU * f * k as f64 / fs).sin();
        let samples = Array2::from_shape_fn((1, n), |(_, k)| tone(10.0, k) + tone(60.0, k));
        let r = Recording::new(
            vec!["a".into()],
            fs,
            samples,
            4000,
            vec![false],
            vec![],
        )
        .unwrap();
        let out = preprocess(&r, 60.0, (0.5, 100.0), 250.0).unwrap();
        // Compare against the clean 10 Hz tone at the decimated rate over
        // the middle stretch.
        let mid = 250..750;
        let mut err = 0.0;
        let mut energy = 0.0;
        for k in mid {
            let t = k as f64 / 250.0;
            let want = (std::f64::consts::TAU * 10.0 * t).sin();
            let got = out.samples()[[0, k]];
            err += (got - want) * (got - want);
            energy += want * want;
        }
        assert!(
            err / energy < 0.05,
            "residual after notch+bandpass: {}",
            err / energy
        );
    }

    #[test]
    fn preprocess_is_channel_permutation_equivariant() {
        let fs = 500.0;
        let n = 2000;
        let samples = Array2::from_shape_fn((3, n), |(ch, k)| {
            ((ch + 1) as f64 * 0.37 * k as f64).sin()
        });
        let r = Recording::new(
            vec!["a".into(), "b".into(), "c".into()],
            fs,
            samples.clone(),
            1000,
            vec![false, true, false],
            vec![],
        )
        .unwrap();
        let perm = [2usize, 0, 1];
        let permuted_samples = Array2::from_shape_fn((3, n), |(ch, k)| samples[[perm[ch], k]]);
        let rp = Recording::new(
            vec!["c".into(), "a".into(), "b".into()],
            fs,
            permuted_samples,
            1000,
            vec![false, false, true],
            vec![],
        )
        .unwrap();
        let out = preprocess(&r, 60.0, (0.5, 100.0), 250.0).unwrap();
        let outp = preprocess(&rp, 60.0, (0.5, 100.0), 250.0).unwrap();
        for k in 0..out.n_samples() {
            for (chp, &ch) in perm.iter().enumerate() {
                assert_eq!(out.samples()[[ch, k]], outp.samples()[[chp, k]]);
            }
        }
    }

    #[test]
    fn preprocess_validates_its_parameters() {
        let r = simple_recording(2, 1000, 1000.0, 500);
        assert!(matches!(
            preprocess(&r, 200.0, (0.5, 100.0), 250.0),
            Err(SignalError::NotchOutsideBand { .. })
        ));
        assert!(matches!(
            preprocess(&r, 60.0, (0.5, 100.0), 300.0),
            Err(SignalError::NonIntegerDecimation { .. })
        ));
        assert!(matches!(
            preprocess(&r, 60.0, (0.5, 100.0), 2000.0),
            Err(SignalError::NonIntegerDecimation { .. })
        ));
    }

    #[test]
    fn preprocess_drops_bad_channels_first() {
        let samples = Array2::from_shape_fn((3, 2000), |(ch, k)| ((ch + k) as f64 * 0.01).sin());
        let r = Recording::new(
            vec!["a".into(), "bad".into(), "c".into()],
            1000.0,
            samples,
            1000,
            vec![true, false, false],
            vec!["bad".to_string()],
        )
        .unwrap();
        let out = preprocess(&r, 60.0, (0.5, 100.0), 500.0).unwrap();
        assert_eq!(out.n_channels(), 2);
        assert_eq!(out.channel_names(), &["a".to_string(), "c".to_string()]);
        assert_eq!(out.soz(), &[true, false]);
    }
}
