//! Browser bindings: a 2-D Gaussian sampler explorer and a synthetic
//! enhancement run.

use std::str::FromStr;

use mcem_core::em::{run_em, EmConfig};
use mcem_core::metrics::si_sdr;
use mcem_core::samplers::{
    ld_step, mala_step, mh_step, spawn_chains, GaussianTarget, NoiseSource, SamplerKind, SingleChain,
};
use mcem_core::spectral::{istft, power, ComplexSpectrogram};
use mcem_core::synth::{generate_mixture, toy_speech_decoder, SynthConfig};
use ndarray::{array, Array2};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Draws {
    points: Vec<f64>,
    acceptance: f64,
}

#[wasm_bindgen]
impl Draws {
    /// Interleaved `x0, y0, x1, y1, ..`.
    #[wasm_bindgen(getter)]
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }

    /// Mean acceptance rate; 1 for Langevin.
    #[wasm_bindgen(getter)]
    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }
}

/// Runs one chain on a unit-variance 2-D Gaussian with correlation `rho`.
#[wasm_bindgen]
pub fn sample_gaussian(sampler: &str, steps: usize, step_size: f64, rho: f64, seed: u32) -> Result<Draws, JsError> {
    let kind = SamplerKind::from_str(sampler).map_err(js_err)?;
    let tg = GaussianTarget::new(1, array![0.0, 0.0], array![[1.0, rho], [rho, 1.0]]).map_err(js_err)?;
    let noise = NoiseSource::new(seed.into());
    let z0 = Array2::from_elem((1, 2), 2.5);
    let mut points = Vec::with_capacity(2 * steps);
    let mut accepted = 0.0;
    match kind {
        SamplerKind::Ld => {
            let mut st = spawn_chains(z0.view(), 1, 0.0, &noise).map_err(js_err)?;
            for _ in 0..steps {
                ld_step(&tg, &mut st, step_size, &noise).map_err(js_err)?;
                points.extend(st.samples.iter().copied());
            }
            accepted = steps as f64;
        }
        SamplerKind::Mh | SamplerKind::Mala => {
            let mala = kind == SamplerKind::Mala;
            let mut chain = SingleChain::new(&tg, z0, mala, 0).map_err(js_err)?;
            for _ in 0..steps {
                let out = if mala {
                    mala_step(&tg, &mut chain, step_size, &noise)
                } else {
                    mh_step(&tg, &mut chain, step_size, &noise)
                }
                .map_err(js_err)?;
                accepted += out.acceptance_rate();
                points.extend(chain.z.iter().copied());
            }
        }
    }
    Ok(Draws {
        points,
        acceptance: accepted / steps.max(1) as f64,
    })
}

#[wasm_bindgen]
pub struct Enhancement {
    trace: Vec<f64>,
    si_sdr_in: f64,
    si_sdr_out: f64,
    frames: usize,
    bins: usize,
    clean_db: Vec<f32>,
    noisy_db: Vec<f32>,
    enhanced_db: Vec<f32>,
}

#[wasm_bindgen]
impl Enhancement {
    #[wasm_bindgen(getter)]
    pub fn trace(&self) -> Vec<f64> {
        self.trace.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn si_sdr_in(&self) -> f64 {
        self.si_sdr_in
    }

    #[wasm_bindgen(getter)]
    pub fn si_sdr_out(&self) -> f64 {
        self.si_sdr_out
    }

    #[wasm_bindgen(getter)]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[wasm_bindgen(getter)]
    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Row-major frames × bins power in dB.
    #[wasm_bindgen(getter)]
    pub fn clean_db(&self) -> Vec<f32> {
        self.clean_db.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn noisy_db(&self) -> Vec<f32> {
        self.noisy_db.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn enhanced_db(&self) -> Vec<f32> {
        self.enhanced_db.clone()
    }
}

fn db(s: &ComplexSpectrogram) -> Vec<f32> {
    power(s).iter().map(|&p| (10.0 * (p + 1e-10).log10()) as f32).collect()
}

/// Generates a toy mixture at `snr_db` and enhances it with MCEM.
#[wasm_bindgen]
pub fn enhance_synthetic(sampler: &str, iterations: usize, snr_db: f64, seed: u32) -> Result<Enhancement, JsError> {
    let kind = SamplerKind::from_str(sampler).map_err(js_err)?;
    let sc = SynthConfig {
        frames: 64,
        ..SynthConfig::default()
    };
    let dec = toy_speech_decoder(sc.latent_dim, sc.stft.bins(), seed.into());
    let mix = generate_mixture(&dec, &sc, snr_db, seed.into()).map_err(js_err)?;
    let mut em = EmConfig::defaults(kind);
    em.iterations = iterations.max(1);
    em.sampler.seed = seed.into();
    let res = run_em(&mix.noisy, &dec, &em).map_err(js_err)?;
    let est = istft(&res.s_hat, &sc.stft).map_err(js_err)?;
    Ok(Enhancement {
        trace: res.trace,
        si_sdr_in: si_sdr(&mix.noisy_wave, &mix.clean_wave).map_err(js_err)?,
        si_sdr_out: si_sdr(&est, &mix.clean_wave).map_err(js_err)?,
        frames: mix.noisy.frames(),
        bins: mix.noisy.bins(),
        clean_db: db(&mix.clean),
        noisy_db: db(&mix.noisy),
        enhanced_db: db(&res.s_hat),
    })
}
