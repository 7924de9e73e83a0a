//! EM speech enhancement: alternate a sampler E-step over the latent
//! sequence with a multiplicative NMF M-step, then reconstruct the clean
//! speech with the sample-averaged Wiener gain `v / (v + WH)`.

use ndarray::{Array2, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::nmf::{init_nmf, mixture_loglik, mstep_update, NmfParams, DEFAULT_RANK};
use crate::prior::Decoder;
use crate::samplers::{
    advance_ld, advance_single, ld_step, spawn_chains, ChainState, NoiseSource, Posterior, Purpose, SamplerConfig,
    SamplerKind, SamplerRun, SingleChain, SpeechLikelihood,
};
use crate::spectral::{power, ComplexSpectrogram};

pub const DEFAULT_ITERATIONS: usize = 100;
pub const DEFAULT_WARMUP_STEPS: usize = 20;

/// Chain id used for warm-up noise so it never collides with LD chains.
const WARMUP_CHAIN: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZInit {
    /// Prior mean.
    Zeros,
    /// One draw from the standard-normal prior.
    PriorDraw,
    /// Prior mean followed by this many single-chain Langevin steps under
    /// the initial noise model.
    WarmupLd(usize),
}

/// Which E-step samples feed the M-step statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MstepSamples {
    /// Monte-Carlo average over every retained sample.
    All,
    /// Only the last retained sample.
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub iterations: usize,
    pub sampler: SamplerConfig,
    pub nmf_rank: usize,
    pub nmf_seed: u64,
    pub z_init: ZInit,
    pub mstep_samples: MstepSamples,
}

impl EmConfig {
    /// J = 100 iterations with the sampler's own defaults, NMF rank 8 and a
    /// 20-step warm-up from the prior mean.
    pub fn defaults(kind: SamplerKind) -> Self {
        EmConfig {
            iterations: DEFAULT_ITERATIONS,
            sampler: SamplerConfig::defaults(kind),
            nmf_rank: DEFAULT_RANK,
            nmf_seed: 0,
            z_init: ZInit::WarmupLd(DEFAULT_WARMUP_STEPS),
            mstep_samples: MstepSamples::All,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("number of EM iterations must be at least 1"));
        }
        if self.nmf_rank == 0 {
            return Err(Error::invalid("NMF rank must be at least 1"));
        }
        self.sampler.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationDiag {
    /// Mean summed log-posterior before each sampler step.
    pub log_density: Vec<f64>,
    /// Per-frame acceptance rates (MH/MALA only).
    pub frame_acceptance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceResult {
    pub s_hat: ComplexSpectrogram,
    pub nmf: NmfParams,
    /// Sample-averaged `log p_ψ(x | z)` after each M-step.
    pub trace: Vec<f64>,
    /// Mean of the final retained latent samples.
    pub latent_mean: Array2<f64>,
    pub diagnostics: Vec<IterationDiag>,
    /// Wall-clock seconds spent in `run_em`; zero where no clock exists.
    pub seconds: f64,
}

struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

enum EState {
    Ensemble(Option<ChainState>),
    Single { start: Array2<f64>, next_step: u64 },
}

pub fn run_em<D: Decoder + ?Sized>(x: &ComplexSpectrogram, dec: &D, cfg: &EmConfig) -> Result<EnhanceResult> {
    cfg.validate()?;
    let clock = Stopwatch::start();
    let (frames, bins) = x.data.dim();
    if dec.freq_dim() != bins {
        return Err(Error::invalid(format!(
            "decoder produces {} bins but the spectrogram has {bins}",
            dec.freq_dim()
        )));
    }
    let latent = dec.latent_dim();
    if let Some(((t, f), _)) = x
        .data
        .indexed_iter()
        .find(|(_, c)| !c.re.is_finite() || !c.im.is_finite())
    {
        return Err(Error::invalid(format!(
            "non-finite spectrogram value at frame {t}, bin {f}"
        )));
    }
    let x_pow = power(x);
    let mut nmf = init_nmf(bins, frames, cfg.nmf_rank, cfg.nmf_seed, x_pow.view())?;
    let noise = NoiseSource::new(cfg.sampler.seed);

    let wrap = |iteration: usize, trace: &[f64]| {
        let trace = trace.to_vec();
        move |e: Error| Error::Em {
            iteration,
            partial_trace: trace,
            source: Box::new(e),
        }
    };

    let z0 = initial_latents(x_pow.view(), dec, &nmf, cfg, &noise).map_err(wrap(0, &[]))?;
    let mut state = match cfg.sampler.kind {
        SamplerKind::Ld => EState::Ensemble(None),
        _ => EState::Single {
            start: z0.clone(),
            next_step: 0,
        },
    };

    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut diagnostics = Vec::with_capacity(cfg.iterations);
    let mut samples = Array3::zeros((0, frames, latent));
    let mut variances = Array3::zeros((0, frames, bins));
    for j in 1..=cfg.iterations {
        let step = (|| -> Result<(SamplerRun, Array3<f64>, NmfParams, f64)> {
            let mut lik = SpeechLikelihood::new(dec, x_pow.view(), &nmf)?;
            if matches!(state, EState::Ensemble(Some(_))) {
                // The chains resume where the last M-step decoded them.
                lik = lik.with_known_variances(samples.view(), variances.view())?;
            }
            let tg = Posterior(lik);
            let run = match &mut state {
                EState::Ensemble(st) => {
                    // Chains are jittered once; later iterations continue them.
                    let st = match st {
                        Some(s) => s,
                        None => st.insert(spawn_chains(z0.view(), cfg.sampler.chains, cfg.sampler.sigma2, &noise)?),
                    };
                    advance_ld(&cfg.sampler, &tg, st, &noise)?
                }
                EState::Single { start, next_step } => {
                    let mut chain =
                        SingleChain::new(&tg, start.clone(), cfg.sampler.kind == SamplerKind::Mala, *next_step)?;
                    let run = advance_single(&cfg.sampler, &tg, &mut chain, &noise)?;
                    *start = run.samples.mean_axis(Axis(0)).expect("retained samples");
                    *next_step = chain.step;
                    run
                }
            };
            let v = dec.decode_batch(run.samples.view())?;
            let views: Vec<ArrayView2<f64>> = match cfg.mstep_samples {
                MstepSamples::All => v.axis_iter(Axis(0)).collect(),
                MstepSamples::Last => vec![v.index_axis(Axis(0), v.len_of(Axis(0)) - 1)],
            };
            let updated = mstep_update(&nmf, x_pow.view(), &views)?;
            let mut ll = 0.0;
            for vi in v.axis_iter(Axis(0)) {
                ll += mixture_loglik(x_pow.view(), vi, &updated)?;
            }
            let ll = ll / v.len_of(Axis(0)) as f64;
            if !ll.is_finite() {
                return Err(Error::Numerical("non-finite log-likelihood".into()));
            }
            Ok((run, v, updated, ll))
        })();
        let (run, v, updated, ll) = step.map_err(wrap(j, &trace))?;
        nmf = updated;
        trace.push(ll);
        diagnostics.push(IterationDiag {
            log_density: run.log_density_trace,
            frame_acceptance: run.frame_acceptance,
        });
        samples = run.samples;
        variances = v;
    }

    let views: Vec<ArrayView2<f64>> = variances.axis_iter(Axis(0)).collect();
    let s_hat = wiener_estimate(x, &views, &nmf)?;
    Ok(EnhanceResult {
        s_hat,
        nmf,
        trace,
        latent_mean: samples.mean_axis(Axis(0)).expect("retained samples"),
        diagnostics,
        seconds: clock.seconds(),
    })
}

fn initial_latents<D: Decoder + ?Sized>(
    x_pow: ArrayView2<f64>,
    dec: &D,
    nmf: &NmfParams,
    cfg: &EmConfig,
    noise: &NoiseSource,
) -> Result<Array2<f64>> {
    let shape = (x_pow.nrows(), dec.latent_dim());
    match cfg.z_init {
        ZInit::Zeros => Ok(Array2::zeros(shape)),
        ZInit::PriorDraw => {
            let mut z = Array2::zeros(shape);
            for (t, mut row) in z.rows_mut().into_iter().enumerate() {
                let row = row.as_slice_mut().expect("standard layout");
                noise.fill_gaussian(0, WARMUP_CHAIN, t, Purpose::Init, row);
            }
            Ok(z)
        }
        ZInit::WarmupLd(steps) => {
            let tg = Posterior(SpeechLikelihood::new(dec, x_pow, nmf)?);
            let mut st = ChainState {
                samples: Array3::zeros((1, shape.0, shape.1)),
                chain_ids: vec![WARMUP_CHAIN],
                step: 0,
            };
            for _ in 0..steps {
                ld_step(&tg, &mut st, cfg.sampler.eta, noise)?;
            }
            Ok(st.samples.index_axis(Axis(0), 0).to_owned())
        }
    }
}

/// Share of consecutive pairs `(a, b)` in `trace` with `b >= a`; 1 for
/// traces shorter than two.
pub fn nondecreasing_fraction(trace: &[f64]) -> f64 {
    if trace.len() < 2 {
        return 1.0;
    }
    let ok = trace.windows(2).filter(|w| w[1] >= w[0]).count();
    ok as f64 / (trace.len() - 1) as f64
}

/// `G = mean_i v_i / (v_i + WH)` entry-wise (T×F).
pub fn wiener_gain(v_s_samples: &[ArrayView2<f64>], p: &NmfParams) -> Result<Array2<f64>> {
    let first = v_s_samples
        .first()
        .ok_or_else(|| Error::invalid("Wiener estimate needs at least one sample"))?;
    let nv = p.noise_variance();
    if first.dim() != nv.dim() {
        return Err(Error::invalid(format!(
            "speech variances {:?} do not match noise model {:?}",
            first.dim(),
            nv.dim()
        )));
    }
    let mut gain = Array2::<f64>::zeros(nv.dim());
    for v in v_s_samples {
        if v.dim() != nv.dim() {
            return Err(Error::invalid("speech-variance samples differ in shape"));
        }
        ndarray::Zip::from(&mut gain)
            .and(v)
            .and(&nv)
            .for_each(|g, &v, &n| *g += v / (v + n));
    }
    gain /= v_s_samples.len() as f64;
    Ok(gain)
}

pub fn wiener_estimate(
    x: &ComplexSpectrogram,
    v_s_samples: &[ArrayView2<f64>],
    p: &NmfParams,
) -> Result<ComplexSpectrogram> {
    let gain = wiener_gain(v_s_samples, p)?;
    if gain.dim() != x.data.dim() {
        return Err(Error::invalid(format!(
            "gain {:?} does not match spectrogram {:?}",
            gain.dim(),
            x.data.dim()
        )));
    }
    let mut data = x.data.clone();
    ndarray::Zip::from(&mut data)
        .and(&gain)
        .for_each(|s, &g| *s *= g as f32);
    Ok(x.with_data(data))
}
