//! Log-densities over latent sequences.

use ndarray::{Array1, Array2, Array3, ArrayView2, ArrayView3, ArrayViewMut2, Axis};

use crate::error::{Error, Result};
use crate::nmf::{frame_loglik, NmfParams};
use crate::prior::Decoder;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// An unnormalized log-density over T×L latent sequences that splits into
/// per-frame terms. A term may depend on the whole sequence.
pub trait Target {
    /// `(T, L)`
    fn shape(&self) -> (usize, usize);

    /// Per-frame log-density terms; their sum is the log-density.
    fn frame_log_density(&self, z: ArrayView2<f64>) -> Result<Vec<f64>>;

    /// Per-frame terms and the gradient of their sum.
    fn log_density_and_score(&self, z: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)>;

    fn log_density(&self, z: ArrayView2<f64>) -> Result<f64> {
        Ok(self.frame_log_density(z)?.iter().sum())
    }

    /// Per-frame log-densities and scores of M independent sequences.
    fn log_density_and_score_batch(&self, z: ArrayView3<f64>) -> Result<(Vec<Vec<f64>>, Array3<f64>)> {
        let mut g_all = Array3::zeros(z.dim());
        let mut ld_all = Vec::with_capacity(z.len_of(Axis(0)));
        for (i, zi) in z.axis_iter(Axis(0)).enumerate() {
            let (ld, g) = self.log_density_and_score(zi)?;
            g_all.index_axis_mut(Axis(0), i).assign(&g);
            ld_all.push(ld);
        }
        Ok((ld_all, g_all))
    }
}

impl<T: Target + ?Sized> Target for &T {
    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }
    fn frame_log_density(&self, z: ArrayView2<f64>) -> Result<Vec<f64>> {
        (**self).frame_log_density(z)
    }
    fn log_density_and_score(&self, z: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
        (**self).log_density_and_score(z)
    }
    fn log_density_and_score_batch(&self, z: ArrayView3<f64>) -> Result<(Vec<Vec<f64>>, Array3<f64>)> {
        (**self).log_density_and_score_batch(z)
    }
}

/// Score of `tg` at `z`, failing on the first frame with a non-finite entry.
pub fn score<T: Target + ?Sized>(tg: &T, z: ArrayView2<f64>) -> Result<Array2<f64>> {
    check_shape(tg, z)?;
    let (_, g) = tg.log_density_and_score(z)?;
    check_finite_rows(g.view(), "score")?;
    Ok(g)
}

pub(crate) fn check_shape<T: Target + ?Sized>(tg: &T, z: ArrayView2<f64>) -> Result<()> {
    if z.dim() != tg.shape() {
        return Err(Error::invalid(format!(
            "latent sequence {:?} does not match target shape {:?}",
            z.dim(),
            tg.shape()
        )));
    }
    Ok(())
}

pub(crate) fn check_finite_rows(a: ArrayView2<f64>, what: &str) -> Result<()> {
    if let Some(t) = a.rows().into_iter().position(|r| r.iter().any(|x| !x.is_finite())) {
        return Err(Error::Numerical(format!("non-finite {what} at frame {t}")));
    }
    Ok(())
}

/// Per-frame log-likelihood `ℓ_t(z)` of the observation given the latents.
pub trait Likelihood {
    fn shape(&self) -> (usize, usize);
    fn frame_loglik(&self, z: ArrayView2<f64>) -> Result<Vec<f64>>;
    /// Per-frame terms and the gradient of `Σ_t ℓ_t(z)`.
    fn loglik_and_grad(&self, z: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)>;

    fn loglik_and_grad_batch(&self, z: ArrayView3<f64>) -> Result<(Vec<Vec<f64>>, Array3<f64>)> {
        let mut g_all = Array3::zeros(z.dim());
        let mut ll_all = Vec::with_capacity(z.len_of(Axis(0)));
        for (i, zi) in z.axis_iter(Axis(0)).enumerate() {
            let (ll, g) = self.loglik_and_grad(zi)?;
            g_all.index_axis_mut(Axis(0), i).assign(&g);
            ll_all.push(ll);
        }
        Ok((ll_all, g_all))
    }
}

/// `Σ_t [ℓ_t(z) + log N(z_t; 0, I)]`
#[derive(Debug, Clone)]
pub struct Posterior<Lk>(pub Lk);

fn log_std_normal(z: ArrayView2<f64>) -> Vec<f64> {
    let l = z.ncols() as f64;
    z.rows()
        .into_iter()
        .map(|r| -0.5 * r.dot(&r) - l * HALF_LN_2PI)
        .collect()
}

impl<Lk: Likelihood> Target for Posterior<Lk> {
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    fn frame_log_density(&self, z: ArrayView2<f64>) -> Result<Vec<f64>> {
        check_shape(self, z)?;
        let ll = self.0.frame_loglik(z)?;
        Ok(ll.iter().zip(log_std_normal(z)).map(|(a, b)| a + b).collect())
    }

    fn log_density_and_score(&self, z: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
        check_shape(self, z)?;
        let (ll, mut g) = self.0.loglik_and_grad(z)?;
        g -= &z;
        let ld = ll.iter().zip(log_std_normal(z)).map(|(a, b)| a + b).collect();
        Ok((ld, g))
    }

    fn log_density_and_score_batch(&self, z: ArrayView3<f64>) -> Result<(Vec<Vec<f64>>, Array3<f64>)> {
        for zi in z.axis_iter(Axis(0)) {
            check_shape(self, zi)?;
        }
        let (mut ll, mut g) = self.0.loglik_and_grad_batch(z)?;
        g -= &z;
        for (lli, zi) in ll.iter_mut().zip(z.axis_iter(Axis(0))) {
            for (a, b) in lli.iter_mut().zip(log_std_normal(zi)) {
                *a += b;
            }
        }
        Ok((ll, g))
    }
}

/// `p_ψ(x_t | z) = N_c(0, diag(v_t(z) + [WH]_t))` for a fixed noise model.
pub struct SpeechLikelihood<'a, D: Decoder + ?Sized> {
    pub decoder: &'a D,
    /// T×F observed power `|x_tf|²`.
    pub x_pow: ArrayView2<'a, f64>,
    /// T×F noise variance `[WH]ᵀ`.
    pub noise_var: Array2<f64>,
    /// M×T×L latents and their decoded M×T×F variances, reused when a batch
    /// evaluation asks for exactly these latents.
    known: Option<(ArrayView3<'a, f64>, ArrayView3<'a, f64>)>,
}

impl<'a, D: Decoder + ?Sized> SpeechLikelihood<'a, D> {
    pub fn new(decoder: &'a D, x_pow: ArrayView2<'a, f64>, nmf: &NmfParams) -> Result<Self> {
        let noise_var = nmf.noise_variance();
        if noise_var.dim() != x_pow.dim() || decoder.freq_dim() != x_pow.ncols() {
            return Err(Error::invalid(format!(
                "observation {:?}, noise model {:?} and decoder F={} disagree",
                x_pow.dim(),
                noise_var.dim(),
                decoder.freq_dim()
            )));
        }
        Ok(SpeechLikelihood {
            decoder,
            x_pow,
            noise_var,
            known: None,
        })
    }

    /// Records `v = decode_batch(z)` so a later batch evaluation at `z`
    /// skips the forward pass.
    pub fn with_known_variances(mut self, z: ArrayView3<'a, f64>, v: ArrayView3<'a, f64>) -> Result<Self> {
        let (m, t, _) = z.dim();
        if v.dim() != (m, t, self.x_pow.ncols()) || t != self.x_pow.nrows() {
            return Err(Error::invalid(format!(
                "known variances {:?} do not match latents {:?} and observation {:?}",
                v.dim(),
                z.dim(),
                self.x_pow.dim()
            )));
        }
        self.known = Some((z, v));
        Ok(self)
    }

    pub fn set_noise(&mut self, nmf: &NmfParams) {
        self.noise_var = nmf.noise_variance();
    }
}

impl<D: Decoder + ?Sized> SpeechLikelihood<'_, D> {
    // d/dv [-log V - x/V] = (x - V) / V², written over `v` in place.
    fn cotangent_in_place(&self, mut v: ArrayViewMut2<f64>) {
        ndarray::Zip::from(&mut v)
            .and(&self.x_pow)
            .and(&self.noise_var)
            .for_each(|c, &x, &n| {
                let var = *c + n;
                *c = (x - var) / (var * var);
            });
    }

    fn cotangent(&self, v: ArrayView2<f64>) -> Array2<f64> {
        let mut cot = v.to_owned();
        self.cotangent_in_place(cot.view_mut());
        cot
    }

    fn cotangent_batch(&self, v: ArrayView3<f64>) -> Array3<f64> {
        let mut cot = v.to_owned();
        for c in cot.axis_iter_mut(Axis(0)) {
            self.cotangent_in_place(c);
        }
        cot
    }
}

impl<D: Decoder + ?Sized> Likelihood for SpeechLikelihood<'_, D> {
    fn shape(&self) -> (usize, usize) {
        (self.x_pow.nrows(), self.decoder.latent_dim())
    }

    fn frame_loglik(&self, z: ArrayView2<f64>) -> Result<Vec<f64>> {
        let v = self.decoder.decode(z)?;
        Ok(frame_loglik(self.x_pow, v.view(), self.noise_var.view()))
    }

    fn loglik_and_grad(&self, z: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
        let (v, g) = self.decoder.decode_with_pullback(z, &mut |v| self.cotangent(v))?;
        Ok((frame_loglik(self.x_pow, v.view(), self.noise_var.view()), g))
    }

    fn loglik_and_grad_batch(&self, z: ArrayView3<f64>) -> Result<(Vec<Vec<f64>>, Array3<f64>)> {
        let (v, g) = match self.known {
            Some((kz, kv)) if kz == z => {
                let cot = self.cotangent_batch(kv);
                (kv.to_owned(), self.decoder.vjp_decoded_batch(z, kv, cot.view())?)
            }
            _ => self
                .decoder
                .decode_with_pullback_batch(z, &mut |v| self.cotangent_batch(v))?,
        };
        let ll = v
            .axis_iter(Axis(0))
            .map(|vi| frame_loglik(self.x_pow, vi, self.noise_var.view()))
            .collect();
        Ok((ll, g))
    }
}

/// Constant likelihood; the posterior is the prior.
#[derive(Debug, Clone, Copy)]
pub struct FlatLikelihood {
    pub frames: usize,
    pub latent_dim: usize,
}

impl Likelihood for FlatLikelihood {
    fn shape(&self) -> (usize, usize) {
        (self.frames, self.latent_dim)
    }
    fn frame_loglik(&self, z: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(vec![0.0; z.nrows()])
    }
    fn loglik_and_grad(&self, z: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
        Ok((vec![0.0; z.nrows()], Array2::zeros(z.dim())))
    }
}

/// `ℓ_t(z) = log N(z_t; μ_t, I)`
#[derive(Debug, Clone)]
pub struct IsotropicGaussianLikelihood {
    pub mean: Array2<f64>,
}

impl Likelihood for IsotropicGaussianLikelihood {
    fn shape(&self) -> (usize, usize) {
        self.mean.dim()
    }
    fn frame_loglik(&self, z: ArrayView2<f64>) -> Result<Vec<f64>> {
        let d = &z - &self.mean;
        Ok(log_std_normal(d.view()))
    }
    fn loglik_and_grad(&self, z: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
        let d = &z - &self.mean;
        let ll = log_std_normal(d.view());
        Ok((ll, -d))
    }
}

/// Every frame independently `N(mean, cov)`; no standard-normal prior.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    pub frames: usize,
    pub mean: Array1<f64>,
    pub cov: Array2<f64>,
    precision: Array2<f64>,
    log_norm: f64,
}

/// Lower Cholesky factor of a small SPD matrix.
fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[[i, k]] * l[[j, k]]).sum();
            if i == j {
                let d = a[[i, i]] - s;
                if d <= 0.0 {
                    return None;
                }
                l[[i, j]] = d.sqrt();
            } else {
                l[[i, j]] = (a[[i, j]] - s) / l[[j, j]];
            }
        }
    }
    Some(l)
}

impl GaussianTarget {
    pub fn new(frames: usize, mean: Array1<f64>, cov: Array2<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.dim() != (n, n) {
            return Err(Error::invalid("covariance must be square and match the mean"));
        }
        let l = cholesky(&cov).ok_or_else(|| Error::invalid("covariance is not positive definite"))?;
        // Columns of L⁻¹ by forward substitution, then Σ⁻¹ = L⁻ᵀ L⁻¹.
        let mut linv = Array2::<f64>::zeros((n, n));
        for c in 0..n {
            for i in 0..n {
                let rhs = if i == c { 1.0 } else { 0.0 };
                let s: f64 = (0..i).map(|k| l[[i, k]] * linv[[k, c]]).sum();
                linv[[i, c]] = (rhs - s) / l[[i, i]];
            }
        }
        let precision = linv.t().dot(&linv);
        let log_det: f64 = (0..n).map(|i| 2.0 * l[[i, i]].ln()).sum();
        Ok(GaussianTarget {
            frames,
            mean,
            cov,
            precision,
            log_norm: -0.5 * log_det - n as f64 * HALF_LN_2PI,
        })
    }

    pub fn standard(frames: usize, dim: usize) -> Self {
        Self::new(frames, Array1::zeros(dim), Array2::eye(dim)).expect("identity is SPD")
    }
}

impl Target for GaussianTarget {
    fn shape(&self) -> (usize, usize) {
        (self.frames, self.mean.len())
    }

    fn frame_log_density(&self, z: ArrayView2<f64>) -> Result<Vec<f64>> {
        check_shape(self, z)?;
        let d = &z - &self.mean;
        let pd = d.dot(&self.precision);
        Ok((0..z.nrows())
            .map(|t| self.log_norm - 0.5 * d.row(t).dot(&pd.row(t)))
            .collect())
    }

    fn log_density_and_score(&self, z: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
        check_shape(self, z)?;
        let d = &z - &self.mean;
        let pd = d.dot(&self.precision);
        let ld = (0..z.nrows())
            .map(|t| self.log_norm - 0.5 * d.row(t).dot(&pd.row(t)))
            .collect();
        Ok((ld, -pd))
    }
}

/// Same log-density as the wrapped target, score forced to zero.
#[derive(Debug, Clone)]
pub struct ZeroDrift<T>(pub T);

impl<T: Target> Target for ZeroDrift<T> {
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
    fn frame_log_density(&self, z: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.0.frame_log_density(z)
    }
    fn log_density_and_score(&self, z: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
        Ok((self.0.frame_log_density(z)?, Array2::zeros(z.dim())))
    }
}
