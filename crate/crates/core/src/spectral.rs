//! Short-time Fourier analysis and overlap-add synthesis.
//!
//! Frames are centred: the waveform is reflection-padded by `fft_size / 2`
//! samples on both sides before framing, so a signal of `n` samples yields
//! `n / hop_size + 1` frames (integer division). Only the `fft_size / 2 + 1`
//! non-negative frequency bins are stored.
//!
//! Synthesis divides the overlap-added frames by the summed product of the
//! analysis and synthesis windows, which reconstructs every sample whose
//! window envelope is non-zero.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::{Complex, Complex32};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Envelope values below this are treated as uncovered during synthesis.
const ENVELOPE_FLOOR: f64 = 1e-10;

/// Mono time-domain signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        let w = Waveform { samples, sample_rate };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::invalid("waveform is empty"));
        }
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|&s| (s as f64) * (s as f64)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Window {
    /// Periodic Hann analysis window, rectangular synthesis.
    Hann,
    /// Square-root periodic Hann for both analysis and synthesis.
    SqrtHann,
}

impl std::str::FromStr for Window {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "hann" => Ok(Window::Hann),
            "sqrt_hann" => Ok(Window::SqrtHann),
            other => Err(Error::invalid(format!(
                "unknown window `{other}` (expected hann or sqrt_hann)"
            ))),
        }
    }
}

impl Window {
    pub fn name(self) -> &'static str {
        match self {
            Window::Hann => "hann",
            Window::SqrtHann => "sqrt_hann",
        }
    }

    fn hann(n: usize, size: usize) -> f64 {
        0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / size as f64).cos()
    }

    pub fn analysis(self, size: usize) -> Vec<f64> {
        (0..size)
            .map(|n| match self {
                Window::Hann => Self::hann(n, size),
                Window::SqrtHann => Self::hann(n, size).sqrt(),
            })
            .collect()
    }

    pub fn synthesis(self, size: usize) -> Vec<f64> {
        (0..size)
            .map(|n| match self {
                Window::Hann => 1.0,
                Window::SqrtHann => Self::hann(n, size).sqrt(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop_size: usize,
    pub window: Window,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            fft_size: 1024,
            hop_size: 256,
            window: Window::SqrtHann,
        }
    }
}

impl StftConfig {
    pub fn new(fft_size: usize, hop_size: usize, window: Window) -> Result<Self> {
        let c = StftConfig {
            fft_size,
            hop_size,
            window,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn pad(&self) -> usize {
        self.fft_size / 2
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        (len + 2 * self.pad() - self.fft_size) / self.hop_size + 1
    }

    /// Checks sizes and the constant-overlap-add condition on the product of
    /// analysis and synthesis windows.
    pub fn validate(&self) -> Result<()> {
        if self.fft_size < 2 || !self.fft_size.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "fft_size must be even and >= 2, got {}",
                self.fft_size
            )));
        }
        if self.hop_size == 0 || self.hop_size > self.fft_size {
            return Err(Error::invalid(format!(
                "hop_size must be in 1..={}, got {}",
                self.fft_size, self.hop_size
            )));
        }
        let a = self.window.analysis(self.fft_size);
        let s = self.window.synthesis(self.fft_size);
        let sums: Vec<f64> = (0..self.hop_size)
            .map(|n| (n..self.fft_size).step_by(self.hop_size).map(|i| a[i] * s[i]).sum())
            .collect();
        let max = sums.iter().cloned().fold(f64::MIN, f64::max);
        let min = sums.iter().cloned().fold(f64::MAX, f64::min);
        if max <= 0.0 || (max - min) / max > 1e-9 {
            return Err(Error::invalid(format!(
                "window {:?} with hop {} violates constant overlap-add (deviation {:.3e})",
                self.window,
                self.hop_size,
                (max - min) / max.max(f64::MIN_POSITIVE)
            )));
        }
        Ok(())
    }

    /// Sum of squared analysis-window samples per hop. Multiplying a signal's
    /// energy by this factor gives the framed energy captured by the STFT.
    pub fn window_gain(&self) -> f64 {
        self.window.analysis(self.fft_size).iter().map(|w| w * w).sum::<f64>() / self.hop_size as f64
    }
}

/// T×F grid of complex STFT coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    /// Row `t` holds frame `t`.
    pub data: Array2<Complex32>,
    /// Length in samples of the waveform the frames were computed from.
    pub signal_len: usize,
    pub sample_rate: u32,
}

impl ComplexSpectrogram {
    pub fn zeros(frames: usize, bins: usize, signal_len: usize, sample_rate: u32) -> Self {
        ComplexSpectrogram {
            data: Array2::zeros((frames, bins)),
            signal_len,
            sample_rate,
        }
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn bins(&self) -> usize {
        self.data.ncols()
    }

    /// Same metadata, new coefficients.
    pub fn with_data(&self, data: Array2<Complex32>) -> Self {
        ComplexSpectrogram {
            data,
            signal_len: self.signal_len,
            sample_rate: self.sample_rate,
        }
    }
}

fn reflect(idx: isize, len: usize) -> usize {
    let n = len as isize;
    let mut i = idx;
    // A single reflection suffices because pad < len is checked by the caller.
    if i < 0 {
        i = -i;
    }
    if i >= n {
        i = 2 * (n - 1) - i;
    }
    i as usize
}

pub fn stft(w: &Waveform, c: &StftConfig) -> Result<ComplexSpectrogram> {
    w.validate()?;
    c.validate()?;
    let len = w.len();
    if len < c.fft_size {
        return Err(Error::invalid(format!(
            "waveform of {len} samples is shorter than one frame ({})",
            c.fft_size
        )));
    }
    let pad = c.pad() as isize;
    let frames = c.frames_for(len);
    let bins = c.bins();
    let window = c.window.analysis(c.fft_size);
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(c.fft_size);

    let mut out = Array2::<Complex32>::zeros((frames, bins));
    let mut buf = vec![Complex::new(0.0, 0.0); c.fft_size];
    for t in 0..frames {
        let start = (t * c.hop_size) as isize - pad;
        for (n, b) in buf.iter_mut().enumerate() {
            let x = w.samples[reflect(start + n as isize, len)] as f64;
            *b = Complex::new(x * window[n], 0.0);
        }
        fft.process(&mut buf);
        for (f, v) in out.row_mut(t).iter_mut().enumerate() {
            *v = Complex32::new(buf[f].re as f32, buf[f].im as f32);
        }
    }
    Ok(ComplexSpectrogram {
        data: out,
        signal_len: len,
        sample_rate: w.sample_rate,
    })
}

pub fn istft(s: &ComplexSpectrogram, c: &StftConfig) -> Result<Waveform> {
    c.validate()?;
    if s.bins() != c.bins() {
        return Err(Error::invalid(format!(
            "spectrogram has {} bins but fft_size {} implies {}",
            s.bins(),
            c.fft_size,
            c.bins()
        )));
    }
    if s.frames() == 0 {
        return Err(Error::invalid("spectrogram has no frames"));
    }
    let n = c.fft_size;
    let pad = c.pad();
    let padded_len = (s.frames() - 1) * c.hop_size + n;
    let ana = c.window.analysis(n);
    let syn = c.window.synthesis(n);
    let ifft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(n);

    let mut acc = vec![0.0f64; padded_len];
    let mut env = vec![0.0f64; padded_len];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for (t, row) in s.data.rows().into_iter().enumerate() {
        for (f, v) in row.iter().enumerate() {
            buf[f] = Complex::new(v.re as f64, v.im as f64);
        }
        for f in 1..n / 2 {
            buf[n - f] = buf[f].conj();
        }
        ifft.process(&mut buf);
        let start = t * c.hop_size;
        for k in 0..n {
            acc[start + k] += buf[k].re / n as f64 * syn[k];
            env[start + k] += ana[k] * syn[k];
        }
    }

    let samples = (0..s.signal_len)
        .map(|m| {
            let i = m + pad;
            if i < padded_len && env[i] > ENVELOPE_FLOOR {
                (acc[i] / env[i]) as f32
            } else {
                0.0
            }
        })
        .collect();
    Ok(Waveform {
        samples,
        sample_rate: s.sample_rate,
    })
}

/// Entry-wise squared modulus, accumulated in double precision.
pub fn power(s: &ComplexSpectrogram) -> Array2<f64> {
    s.data.mapv(|v| {
        let (re, im) = (v.re as f64, v.im as f64);
        re * re + im * im
    })
}

/// Signal energy implied by a spectrogram: one-sided power summed with
/// Hermitian weights, divided by `fft_size` and the window gain.
pub fn spectrogram_energy(s: &ComplexSpectrogram, c: &StftConfig) -> f64 {
    let p = power(s);
    let last = c.bins() - 1;
    let total: f64 = p
        .indexed_iter()
        .map(|((_, f), &v)| if f == 0 || f == last { v } else { 2.0 * v })
        .sum();
    total / (c.fft_size as f64 * c.window_gain())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..len)
            .map(|_| 0.3 * Distribution::<f32>::sample(&StandardNormal, &mut rng))
            .collect();
        Waveform::new(samples, 16_000).unwrap()
    }

    fn rel_err(a: &[f32], b: &[f32]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(&x, &y)| ((x - y) as f64).powi(2)).sum();
        let den: f64 = b.iter().map(|&y| (y as f64).powi(2)).sum();
        (num / den).sqrt()
    }

    #[test]
    fn default_config_has_513_bins() {
        let c = StftConfig::default();
        assert_eq!(c.bins(), 513);
        let s = stft(&noise(4000, 1), &c).unwrap();
        assert_eq!(s.bins(), 513);
        assert_eq!(s.frames(), 4000 / 256 + 1);
    }

    #[test]
    fn zero_waveform_gives_zero_spectrogram() {
        let w = Waveform::new(vec![0.0; 3000], 8000).unwrap();
        let s = stft(&w, &StftConfig::default()).unwrap();
        assert!(s.data.iter().all(|v| v.re == 0.0 && v.im == 0.0));
    }

    #[test]
    fn zero_spectrogram_gives_zero_waveform() {
        let c = StftConfig::default();
        let s = ComplexSpectrogram::zeros(10, c.bins(), 2304, 16_000);
        let w = istft(&s, &c).unwrap();
        assert_eq!(w.len(), 2304);
        assert!(w.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn short_waveform_rejected() {
        let w = Waveform::new(vec![0.1; 100], 16_000).unwrap();
        assert!(matches!(stft(&w, &StftConfig::default()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn bin_mismatch_rejected() {
        let s = ComplexSpectrogram::zeros(4, 100, 1000, 16_000);
        assert!(istft(&s, &StftConfig::default()).is_err());
    }

    #[test]
    fn cola_validation() {
        assert!(StftConfig::new(1024, 256, Window::SqrtHann).is_ok());
        assert!(StftConfig::new(1024, 512, Window::SqrtHann).is_ok());
        assert!(StftConfig::new(512, 128, Window::Hann).is_ok());
        assert!(StftConfig::new(1024, 300, Window::SqrtHann).is_err());
        assert!(StftConfig::new(1023, 256, Window::SqrtHann).is_err());
        assert!(StftConfig::new(1024, 0, Window::SqrtHann).is_err());
    }

    #[test]
    fn white_noise_round_trip_half_overlap() {
        let c = StftConfig::new(512, 256, Window::SqrtHann).unwrap();
        let w = noise(10_000, 7);
        let r = istft(&stft(&w, &c).unwrap(), &c).unwrap();
        assert_eq!(r.len(), w.len());
        assert!(rel_err(&r.samples, &w.samples) <= 1e-6);
    }

    #[test]
    fn hann_ola_round_trip() {
        let c = StftConfig::new(256, 64, Window::Hann).unwrap();
        let w = noise(5_000, 8);
        let r = istft(&stft(&w, &c).unwrap(), &c).unwrap();
        assert!(rel_err(&r.samples, &w.samples) <= 1e-6);
    }

    #[test]
    fn power_entries() {
        let mut s = ComplexSpectrogram::zeros(1, 2, 10, 1);
        s.data[[0, 0]] = Complex32::new(3.0, 4.0);
        let p = power(&s);
        assert_eq!(p[[0, 0]], 25.0);
        assert_eq!(p[[0, 1]], 0.0);
    }

    #[test]
    fn power_matches_reference_loop() {
        let s = stft(&noise(3000, 3), &StftConfig::new(256, 64, Window::SqrtHann).unwrap()).unwrap();
        let p = power(&s);
        for t in 0..s.frames() {
            for f in 0..s.bins() {
                let v = s.data[[t, f]];
                let expect = (v.re as f64).powi(2) + (v.im as f64).powi(2);
                assert_eq!(p[[t, f]], expect);
                assert!(p[[t, f]] >= 0.0);
            }
        }
    }

    #[test]
    fn parseval_with_window_gain() {
        // Edges are zeroed so that every non-zero sample is fully covered.
        let c = StftConfig::default();
        let mut w = noise(20_000, 11);
        for i in 0..c.fft_size {
            w.samples[i] = 0.0;
            let n = w.samples.len();
            w.samples[n - 1 - i] = 0.0;
        }
        let s = stft(&w, &c).unwrap();
        let est = spectrogram_energy(&s, &c);
        let e = w.energy();
        assert!(((est - e) / e).abs() < 1e-3, "{est} vs {e}");
    }
}
