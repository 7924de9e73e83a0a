//! NMF noise model `b_t ~ N_c(0, diag([WH]_t))`, the mixture likelihood of
//! the noisy observation, and the multiplicative M-step.

use ndarray::{Array2, ArrayView2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};

/// Lower bound on every NMF entry and on the noise variance.
pub const NMF_FLOOR: f64 = 1e-8;

pub const DEFAULT_RANK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct NmfParams {
    /// F×R spectral templates.
    pub w: Array2<f64>,
    /// R×T activations.
    pub h: Array2<f64>,
}

impl NmfParams {
    pub fn new(mut w: Array2<f64>, mut h: Array2<f64>) -> Result<Self> {
        if w.ncols() != h.nrows() {
            return Err(Error::invalid(format!("W is {:?} but H is {:?}", w.dim(), h.dim())));
        }
        if w.iter().chain(h.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("NMF factors must be finite"));
        }
        floor(&mut w);
        floor(&mut h);
        Ok(NmfParams { w, h })
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    pub fn freq_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn frames(&self) -> usize {
        self.h.ncols()
    }

    /// T×F matrix with entry `(t, f) = Σ_r W[f,r] H[r,t]`, floored.
    pub fn noise_variance(&self) -> Array2<f64> {
        let mut v = self.h.t().dot(&self.w.t());
        floor(&mut v);
        v
    }
}

fn floor(a: &mut Array2<f64>) {
    a.mapv_inplace(|x| x.max(NMF_FLOOR));
}

pub fn noise_variance(p: &NmfParams) -> Array2<f64> {
    p.noise_variance()
}

/// Uniform(0,1) factors rescaled so that `mean(WH) = mean(x_pow)`.
pub fn init_nmf(freq_dim: usize, frames: usize, rank: usize, seed: u64, x_pow: ArrayView2<f64>) -> Result<NmfParams> {
    if rank == 0 {
        return Err(Error::invalid("NMF rank must be at least 1"));
    }
    if x_pow.dim() != (frames, freq_dim) {
        return Err(Error::invalid(format!(
            "power spectrogram {:?} does not match ({frames}, {freq_dim})",
            x_pow.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    let mut w = Array2::from_shape_simple_fn((freq_dim, rank), || unit.sample(&mut rng));
    let mut h = Array2::from_shape_simple_fn((rank, frames), || unit.sample(&mut rng));
    let target = x_pow.mean().unwrap_or(0.0).max(NMF_FLOOR);
    let current = w.dot(&h).mean().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let scale = (target / current).sqrt();
    w *= scale;
    h *= scale;
    NmfParams::new(w, h)
}

fn check_shapes(x_pow: ArrayView2<f64>, v_s: ArrayView2<f64>, p: &NmfParams) -> Result<()> {
    let expect = (p.frames(), p.freq_dim());
    if x_pow.dim() != expect || v_s.dim() != expect {
        return Err(Error::invalid(format!(
            "x_pow {:?} and speech variances {:?} must both be {expect:?}",
            x_pow.dim(),
            v_s.dim()
        )));
    }
    Ok(())
}

/// Per-frame log-likelihood `log N_c(x_t; 0, diag(v_t + [WH]_t))` given a
/// precomputed noise variance (T×F).
pub fn frame_loglik(x_pow: ArrayView2<f64>, v_s: ArrayView2<f64>, noise_var: ArrayView2<f64>) -> Vec<f64> {
    let ln_pi = std::f64::consts::PI.ln();
    let bins = x_pow.ncols() as f64;
    (0..x_pow.nrows())
        .map(|t| {
            let (x, v, n) = (x_pow.row(t), v_s.row(t), noise_var.row(t));
            let mut log_sum = 0.0;
            let mut ratio = 0.0;
            let mut f = 0;
            while f < x.len() {
                let end = (f + LOG_CHUNK).min(x.len());
                // Σ log V over a chunk as log Π V; one log per chunk.
                let mut prod = 1.0;
                for k in f..end {
                    let var = v[k] + n[k];
                    prod *= var;
                    ratio += x[k] / var;
                }
                log_sum += if prod.is_normal() && prod < f64::MAX {
                    prod.ln()
                } else {
                    (f..end).map(|k| (v[k] + n[k]).ln()).sum()
                };
                f = end;
            }
            -(bins * ln_pi + log_sum + ratio)
        })
        .collect()
}

const LOG_CHUNK: usize = 8;

/// `Σ_{t,f} [-log π - log V - x/V]` with `V = v_s + WH`.
pub fn mixture_loglik(x_pow: ArrayView2<f64>, v_s: ArrayView2<f64>, p: &NmfParams) -> Result<f64> {
    check_shapes(x_pow, v_s, p)?;
    let nv = p.noise_variance();
    let bad = v_s.indexed_iter().find_map(|((t, f), &v)| {
        let var = v + nv[[t, f]];
        (!(var > 0.0 && var.is_finite())).then_some((t, f))
    });
    if let Some((t, f)) = bad {
        return Err(Error::Numerical(format!(
            "non-positive mixture variance at frame {t}, bin {f}"
        )));
    }
    Ok(frame_loglik(x_pow, v_s, nv.view()).iter().sum())
}

/// Monte-Carlo statistics `N = mean_i x/V_i²`, `D = mean_i 1/V_i`.
fn stats(x_pow: ArrayView2<f64>, samples: &[ArrayView2<f64>], nv: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let mut num = Array2::zeros(nv.dim());
    let mut den = Array2::zeros(nv.dim());
    for v_s in samples {
        Zip::from(&mut num)
            .and(&mut den)
            .and(&x_pow)
            .and(v_s)
            .and(nv)
            .for_each(|n, d, &x, &v, &b| {
                let inv = 1.0 / (v + b);
                *n += x * inv * inv;
                *d += inv;
            });
    }
    let m = samples.len() as f64;
    num /= m;
    den /= m;
    (num, den)
}

/// One multiplicative sweep (W, then H with the refreshed W) ascending the
/// sample-averaged mixture log-likelihood.
pub fn mstep_update(p: &NmfParams, x_pow: ArrayView2<f64>, v_s_samples: &[ArrayView2<f64>]) -> Result<NmfParams> {
    if v_s_samples.is_empty() {
        return Err(Error::invalid("M-step needs at least one speech-variance sample"));
    }
    for v in v_s_samples {
        check_shapes(x_pow, *v, p)?;
    }
    let mut w = p.w.clone();
    let mut h = p.h.clone();

    let nv = h.t().dot(&w.t()).mapv(|x: f64| x.max(NMF_FLOOR));
    let (num, den) = stats(x_pow, v_s_samples, &nv);
    // F×R
    let w_num = num.t().dot(&h.t());
    let w_den = den.t().dot(&h.t());
    Zip::from(&mut w).and(&w_num).and(&w_den).for_each(|w, &n, &d| {
        *w = (*w * n / d.max(NMF_FLOOR)).max(NMF_FLOOR);
    });

    let nv = h.t().dot(&w.t()).mapv(|x: f64| x.max(NMF_FLOOR));
    let (num, den) = stats(x_pow, v_s_samples, &nv);
    // R×T
    let h_num = w.t().dot(&num.t());
    let h_den = w.t().dot(&den.t());
    Zip::from(&mut h).and(&h_num).and(&h_den).for_each(|h, &n, &d| {
        *h = (*h * n / d.max(NMF_FLOOR)).max(NMF_FLOOR);
    });
    Ok(NmfParams { w, h })
}
