//! Synthetic noisy mixtures drawn from the generative model itself, and a
//! small benchmark harness built on them.

use ndarray::{Array1, Array2};
use num_complex::Complex32;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::em::{nondecreasing_fraction, run_em, EmConfig};
use crate::error::{Error, Result};
use crate::metrics::{measure_rtf, si_sdr};
use crate::nmf::NmfParams;
use crate::prior::{AffineExpDecoder, Decoder};
use crate::samplers::SamplerKind;
use crate::spectral::{istft, ComplexSpectrogram, StftConfig, Waveform, Window};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub stft: StftConfig,
    pub sample_rate: u32,
    pub frames: usize,
    pub latent_dim: usize,
    pub noise_rank: usize,
    /// Frame-to-frame correlation of the true latent sequence.
    pub latent_rho: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            stft: StftConfig {
                fft_size: 512,
                hop_size: 128,
                window: Window::SqrtHann,
            },
            sample_rate: 16_000,
            frames: 128,
            latent_dim: 8,
            noise_rank: 2,
            latent_rho: 0.9,
        }
    }
}

impl SynthConfig {
    pub fn signal_len(&self) -> usize {
        (self.frames - 1) * self.stft.hop_size
    }

    pub fn validate(&self) -> Result<()> {
        self.stft.validate()?;
        if self.frames < 2 || self.latent_dim == 0 || self.noise_rank == 0 {
            return Err(Error::invalid(
                "synthetic frames >= 2, latent_dim >= 1, noise_rank >= 1",
            ));
        }
        if !(0.0..1.0).contains(&self.latent_rho) {
            return Err(Error::invalid("latent_rho must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Standard deviation of the toy decoder's log-variance under the prior.
pub const TOY_LOG_SPREAD: f64 = 2.0;

/// Affine-exp decoder with a falling spectral tilt, usable as a stand-in
/// speech prior.
pub fn toy_speech_decoder(latent_dim: usize, freq_dim: usize, seed: u64) -> AffineExpDecoder {
    let base = AffineExpDecoder::random(latent_dim, freq_dim, TOY_LOG_SPREAD, seed);
    let tilt = Array1::from_shape_fn(freq_dim, |f| -3.0 * f as f64 / freq_dim as f64);
    AffineExpDecoder::new(base.a, tilt).expect("shapes agree")
}

#[derive(Debug, Clone)]
pub struct SyntheticMixture {
    pub clean: ComplexSpectrogram,
    pub noise: ComplexSpectrogram,
    pub noisy: ComplexSpectrogram,
    pub latents: Array2<f64>,
    pub noise_model: NmfParams,
    pub clean_wave: Waveform,
    pub noisy_wave: Waveform,
}

fn complex_gaussian(rng: &mut ChaCha8Rng, var: f64) -> Complex32 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex32::new((s * re) as f32, (s * im) as f32)
}

/// Draw `x = s + b` with `s ~ N_c(0, decode(z))` for an AR(1) latent path
/// and `b ~ N_c(0, WH)`, with the noise rescaled to `snr_db`.
pub fn generate_mixture<D: Decoder + ?Sized>(
    dec: &D,
    cfg: &SynthConfig,
    snr_db: f64,
    seed: u64,
) -> Result<SyntheticMixture> {
    cfg.validate()?;
    let bins = cfg.stft.bins();
    if dec.freq_dim() != bins {
        return Err(Error::invalid(format!(
            "decoder has {} bins, STFT gives {bins}",
            dec.freq_dim()
        )));
    }
    let (t, l) = (cfg.frames, dec.latent_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let rho = cfg.latent_rho;
    let innov = (1.0 - rho * rho).sqrt();
    let mut z = Array2::<f64>::zeros((t, l));
    for ti in 0..t {
        for li in 0..l {
            let e: f64 = rng.sample(StandardNormal);
            z[[ti, li]] = if ti == 0 { e } else { rho * z[[ti - 1, li]] + innov * e };
        }
    }
    let v = dec.decode(z.view())?;

    // Smooth spectral templates and slowly varying gains.
    let r = cfg.noise_rank;
    let mut w = Array2::<f64>::zeros((bins, r));
    for ri in 0..r {
        let mut walk = 0.0;
        for f in 0..bins {
            walk += 0.15 * rng.sample::<f64, _>(StandardNormal);
            w[[f, ri]] = walk.exp();
        }
    }
    let mut h = Array2::<f64>::zeros((r, t));
    for ri in 0..r {
        let mut g = 0.0;
        for ti in 0..t {
            g = 0.8 * g + 0.3 * rng.sample::<f64, _>(StandardNormal);
            h[[ri, ti]] = g.exp();
        }
    }

    let mut s = Array2::<Complex32>::zeros((t, bins));
    let mut b = Array2::<Complex32>::zeros((t, bins));
    let wh = w.dot(&h);
    for ti in 0..t {
        for f in 0..bins {
            s[[ti, f]] = complex_gaussian(&mut rng, v[[ti, f]]);
            b[[ti, f]] = complex_gaussian(&mut rng, wh[[f, ti]]);
        }
    }
    let es: f64 = s.iter().map(|c| c.norm_sqr() as f64).sum();
    let eb: f64 = b.iter().map(|c| c.norm_sqr() as f64).sum();
    if es <= 0.0 || eb <= 0.0 {
        return Err(Error::Numerical("degenerate synthetic draw".into()));
    }
    let gain = (es / eb / 10f64.powf(snr_db / 10.0)).sqrt();
    b.mapv_inplace(|c| c * gain as f32);
    let noise_model = NmfParams::new(w * gain * gain, h)?;

    let template = ComplexSpectrogram::zeros(t, bins, cfg.signal_len(), cfg.sample_rate);
    let clean = template.with_data(s);
    let noise = template.with_data(b);
    let noisy = template.with_data(&clean.data + &noise.data);
    let clean_wave = istft(&clean, &cfg.stft)?;
    let noisy_wave = istft(&noisy, &cfg.stft)?;
    Ok(SyntheticMixture {
        clean,
        noise,
        noisy,
        latents: z,
        noise_model,
        clean_wave,
        noisy_wave,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub synth: SynthConfig,
    pub utterances: usize,
    pub snrs_db: Vec<f64>,
    pub samplers: Vec<SamplerKind>,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            synth: SynthConfig::default(),
            utterances: 20,
            snrs_db: vec![-5.0, 0.0, 5.0],
            samplers: SamplerKind::ALL.to_vec(),
            iterations: crate::em::DEFAULT_ITERATIONS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub utterance: usize,
    pub snr_db: f64,
    pub sampler: SamplerKind,
    pub si_sdr_in: f64,
    pub si_sdr_out: f64,
    pub seconds: f64,
    pub rtf: f64,
    /// Fraction of consecutive EM iterations whose trace did not decrease.
    pub trace_monotone: f64,
}

impl BenchmarkRow {
    pub const CSV_HEADER: &'static str =
        "utterance,snr_db,sampler,si_sdr_in_db,si_sdr_out_db,seconds,rtf,trace_monotone";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{:.4},{:.4},{:.6},{:.6},{:.4}",
            self.utterance,
            self.snr_db,
            self.sampler.name(),
            self.si_sdr_in,
            self.si_sdr_out,
            self.seconds,
            self.rtf,
            self.trace_monotone
        )
    }
}

/// Mean of `f` over rows of one sampler.
pub fn sampler_mean(rows: &[BenchmarkRow], kind: SamplerKind, f: impl Fn(&BenchmarkRow) -> f64) -> f64 {
    let sel: Vec<f64> = rows.iter().filter(|r| r.sampler == kind).map(f).collect();
    sel.iter().sum::<f64>() / sel.len().max(1) as f64
}

/// Utterance `u` uses SNR `snrs_db[u % len]`; every sampler sees the same
/// mixture and decoder.
pub fn run_benchmark(cfg: &BenchmarkConfig, mut on_row: impl FnMut(&BenchmarkRow)) -> Result<Vec<BenchmarkRow>> {
    if cfg.utterances == 0 || cfg.snrs_db.is_empty() || cfg.samplers.is_empty() {
        return Err(Error::invalid("benchmark needs utterances, SNRs and samplers"));
    }
    let dec = toy_speech_decoder(cfg.synth.latent_dim, cfg.synth.stft.bins(), cfg.seed);
    let mut rows = Vec::new();
    for u in 0..cfg.utterances {
        let snr = cfg.snrs_db[u % cfg.snrs_db.len()];
        let mix = generate_mixture(&dec, &cfg.synth, snr, cfg.seed.wrapping_add(1000 + u as u64))?;
        let si_in = si_sdr(&mix.noisy_wave, &mix.clean_wave)?;
        for &kind in &cfg.samplers {
            let mut em = EmConfig::defaults(kind);
            em.iterations = cfg.iterations;
            em.sampler.seed = cfg.seed.wrapping_add(u as u64);
            em.nmf_seed = cfg.seed.wrapping_add(u as u64);
            let res = run_em(&mix.noisy, &dec, &em)?;
            let est = istft(&res.s_hat, &cfg.synth.stft)?;
            let row = BenchmarkRow {
                utterance: u,
                snr_db: snr,
                sampler: kind,
                si_sdr_in: si_in,
                si_sdr_out: si_sdr(&est, &mix.clean_wave)?,
                seconds: res.seconds,
                rtf: measure_rtf(res.seconds, mix.noisy_wave.duration_seconds())?,
                trace_monotone: nondecreasing_fraction(&res.trace),
            };
            on_row(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}
