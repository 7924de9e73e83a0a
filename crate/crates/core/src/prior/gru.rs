use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use super::{check_cotangent, check_latent, clamped_exp, Decoder, SpeechVariances};
use crate::error::{Error, Result};

/// Single-layer unidirectional GRU followed by an affine map and `exp`.
///
/// ```text
/// r_t = σ(W_ir z_t + W_hr h_{t-1} + b_r)
/// u_t = σ(W_iu z_t + W_hu h_{t-1} + b_u)
/// n_t = tanh(W_in z_t + b_in + r_t ⊙ (W_hn h_{t-1} + b_hn))
/// h_t = (1 - u_t) ⊙ n_t + u_t ⊙ h_{t-1},   h_{-1} = 0
/// v_t = exp(clamp(W_out h_t + b_out))
/// ```
///
/// Every `v_t` depends on `z_1..z_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruDecoder {
    pub w_ir: Array2<f64>,
    pub w_iu: Array2<f64>,
    pub w_in: Array2<f64>,
    pub w_hr: Array2<f64>,
    pub w_hu: Array2<f64>,
    pub w_hn: Array2<f64>,
    pub b_r: Array1<f64>,
    pub b_u: Array1<f64>,
    pub b_in: Array1<f64>,
    pub b_hn: Array1<f64>,
    /// F×H
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
}

pub const DEFAULT_HIDDEN: usize = 32;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Forward activations of one sequence, kept for backpropagation.
struct Trace {
    /// (T+1)×H; row 0 is the zero initial state, row t+1 is h_t.
    h: Array2<f64>,
    r: Array2<f64>,
    u: Array2<f64>,
    n: Array2<f64>,
    /// W_hn h_{t-1} + b_hn
    hn: Array2<f64>,
    v: Array2<f64>,
    live: Array2<bool>,
}

impl GruDecoder {
    pub fn hidden_dim(&self) -> usize {
        self.w_hr.nrows()
    }

    /// PyTorch-style `U(-1/√H, 1/√H)` initialization; the output layer is
    /// scaled by `out_scale`. Values are representable in `f32`.
    pub fn random(latent_dim: usize, freq_dim: usize, hidden: usize, out_scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1.0 / (hidden as f64).sqrt();
        let dist = Uniform::new_inclusive(-k, k).expect("finite bounds");
        let mut mat = |r: usize, c: usize, scale: f64| {
            Array2::from_shape_simple_fn((r, c), || (dist.sample(&mut rng) * scale) as f32 as f64)
        };
        let w_ir = mat(hidden, latent_dim, 1.0);
        let w_iu = mat(hidden, latent_dim, 1.0);
        let w_in = mat(hidden, latent_dim, 1.0);
        let w_hr = mat(hidden, hidden, 1.0);
        let w_hu = mat(hidden, hidden, 1.0);
        let w_hn = mat(hidden, hidden, 1.0);
        let b_r = mat(1, hidden, 1.0).row(0).to_owned();
        let b_u = mat(1, hidden, 1.0).row(0).to_owned();
        let b_in = mat(1, hidden, 1.0).row(0).to_owned();
        let b_hn = mat(1, hidden, 1.0).row(0).to_owned();
        let w_out = mat(freq_dim, hidden, out_scale);
        let b_out = mat(1, freq_dim, 1.0).row(0).to_owned();
        GruDecoder {
            w_ir,
            w_iu,
            w_in,
            w_hr,
            w_hu,
            w_hn,
            b_r,
            b_u,
            b_in,
            b_hn,
            w_out,
            b_out,
        }
    }

    pub(crate) fn check_shapes(&self) -> Result<()> {
        let h = self.hidden_dim();
        let l = self.w_ir.ncols();
        let f = self.w_out.nrows();
        let mats = [
            ("w_ir", &self.w_ir, (h, l)),
            ("w_iu", &self.w_iu, (h, l)),
            ("w_in", &self.w_in, (h, l)),
            ("w_hr", &self.w_hr, (h, h)),
            ("w_hu", &self.w_hu, (h, h)),
            ("w_hn", &self.w_hn, (h, h)),
            ("w_out", &self.w_out, (f, h)),
        ];
        for (name, m, dim) in mats {
            if m.dim() != dim {
                return Err(Error::format(
                    Some(name),
                    format!("shape {:?}, expected {dim:?}", m.dim()),
                ));
            }
        }
        let vecs = [
            ("b_r", &self.b_r, h),
            ("b_u", &self.b_u, h),
            ("b_in", &self.b_in, h),
            ("b_hn", &self.b_hn, h),
            ("b_out", &self.b_out, f),
        ];
        for (name, v, len) in vecs {
            if v.len() != len {
                return Err(Error::format(Some(name), format!("length {}, expected {len}", v.len())));
            }
        }
        Ok(())
    }

    fn forward(&self, z: ArrayView2<f64>) -> Trace {
        let t_len = z.nrows();
        let hd = self.hidden_dim();
        let xr = z.dot(&self.w_ir.t()) + &self.b_r;
        let xu = z.dot(&self.w_iu.t()) + &self.b_u;
        let xn = z.dot(&self.w_in.t()) + &self.b_in;

        let mut h = Array2::zeros((t_len + 1, hd));
        let mut r = Array2::zeros((t_len, hd));
        let mut u = Array2::zeros((t_len, hd));
        let mut n = Array2::zeros((t_len, hd));
        let mut hn = Array2::zeros((t_len, hd));
        for t in 0..t_len {
            let hp = h.row(t).to_owned();
            let gr = self.w_hr.dot(&hp);
            let gu = self.w_hu.dot(&hp);
            let gn = self.w_hn.dot(&hp) + &self.b_hn;
            for j in 0..hd {
                let rj = sigmoid(xr[[t, j]] + gr[j]);
                let uj = sigmoid(xu[[t, j]] + gu[j]);
                let nj = (xn[[t, j]] + rj * gn[j]).tanh();
                r[[t, j]] = rj;
                u[[t, j]] = uj;
                n[[t, j]] = nj;
                hn[[t, j]] = gn[j];
                h[[t + 1, j]] = (1.0 - uj) * nj + uj * hp[j];
            }
        }
        let pre = h.slice(s![1.., ..]).dot(&self.w_out.t()) + &self.b_out;
        let mut v = Array2::zeros(pre.dim());
        let mut live = Array2::from_elem(pre.dim(), false);
        ndarray::Zip::from(&mut v)
            .and(&mut live)
            .and(&pre)
            .for_each(|v, l, &p| (*v, *l) = clamped_exp(p));
        Trace {
            h,
            r,
            u,
            n,
            hn,
            v,
            live,
        }
    }

    fn backward(&self, tr: &Trace, cot: ArrayView2<f64>) -> Array2<f64> {
        let t_len = cot.nrows();
        let hd = self.hidden_dim();
        let mut dpre = cot.to_owned();
        ndarray::Zip::from(&mut dpre)
            .and(&tr.v)
            .and(&tr.live)
            .for_each(|d, &v, &l| *d = if l { *d * v } else { 0.0 });
        // Output-layer contribution to every dh_t at once.
        let dh_out = dpre.dot(&self.w_out);

        let mut dz = Array2::zeros((t_len, self.w_ir.ncols()));
        let mut carry = Array1::<f64>::zeros(hd);
        let mut dar = Array1::<f64>::zeros(hd);
        let mut dau = Array1::<f64>::zeros(hd);
        let mut dan = Array1::<f64>::zeros(hd);
        let mut dhn = Array1::<f64>::zeros(hd);
        for t in (0..t_len).rev() {
            let dh: Array1<f64> = &dh_out.row(t) + &carry;
            let hp: ArrayView1<f64> = tr.h.row(t);
            let mut dh_prev = Array1::<f64>::zeros(hd);
            for j in 0..hd {
                let (r, u, n, hn) = (tr.r[[t, j]], tr.u[[t, j]], tr.n[[t, j]], tr.hn[[t, j]]);
                let dn = dh[j] * (1.0 - u);
                let du = dh[j] * (hp[j] - n);
                dh_prev[j] = dh[j] * u;
                dan[j] = dn * (1.0 - n * n);
                dhn[j] = dan[j] * r;
                dar[j] = dan[j] * hn * r * (1.0 - r);
                dau[j] = du * u * (1.0 - u);
            }
            let dzt = self.w_ir.t().dot(&dar) + self.w_iu.t().dot(&dau) + self.w_in.t().dot(&dan);
            dz.row_mut(t).assign(&dzt);
            dh_prev += &self.w_hr.t().dot(&dar);
            dh_prev += &self.w_hu.t().dot(&dau);
            dh_prev += &self.w_hn.t().dot(&dhn);
            carry = dh_prev;
        }
        dz
    }
}

impl Decoder for GruDecoder {
    fn latent_dim(&self) -> usize {
        self.w_ir.ncols()
    }

    fn freq_dim(&self) -> usize {
        self.w_out.nrows()
    }

    fn decode(&self, z: ArrayView2<f64>) -> Result<SpeechVariances> {
        check_latent(z, self.latent_dim())?;
        Ok(self.forward(z).v)
    }

    fn decode_vjp(&self, z: ArrayView2<f64>, cot: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_latent(z, self.latent_dim())?;
        check_cotangent(z, cot, self.freq_dim())?;
        let tr = self.forward(z);
        Ok(self.backward(&tr, cot))
    }

    fn decode_with_pullback(
        &self,
        z: ArrayView2<f64>,
        cotangent: &mut dyn FnMut(ArrayView2<f64>) -> Array2<f64>,
    ) -> Result<(SpeechVariances, Array2<f64>)> {
        check_latent(z, self.latent_dim())?;
        let tr = self.forward(z);
        let cot = cotangent(tr.v.view());
        check_cotangent(z, cot.view(), self.freq_dim())?;
        let g = self.backward(&tr, cot.view());
        Ok((tr.v, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn randn(shape: (usize, usize), seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_simple_fn(shape, || StandardNormal.sample(&mut rng))
    }

    /// Scalar reference recurrence written independently of the vectorized path.
    fn naive_decode(d: &GruDecoder, z: &Array2<f64>) -> Array2<f64> {
        let (t_len, l) = z.dim();
        let hd = d.hidden_dim();
        let f_len = d.freq_dim();
        let mut h = vec![0.0; hd];
        let mut out = Array2::zeros((t_len, f_len));
        for t in 0..t_len {
            let mut hnew = vec![0.0; hd];
            for j in 0..hd {
                let mut ar = d.b_r[j];
                let mut au = d.b_u[j];
                let mut ax = d.b_in[j];
                for k in 0..l {
                    ar += d.w_ir[[j, k]] * z[[t, k]];
                    au += d.w_iu[[j, k]] * z[[t, k]];
                    ax += d.w_in[[j, k]] * z[[t, k]];
                }
                let mut ahn = d.b_hn[j];
                for k in 0..hd {
                    ar += d.w_hr[[j, k]] * h[k];
                    au += d.w_hu[[j, k]] * h[k];
                    ahn += d.w_hn[[j, k]] * h[k];
                }
                let r = 1.0 / (1.0 + (-ar).exp());
                let u = 1.0 / (1.0 + (-au).exp());
                let n = (ax + r * ahn).tanh();
                hnew[j] = (1.0 - u) * n + u * h[j];
            }
            h = hnew;
            for f in 0..f_len {
                let mut a = d.b_out[f];
                for k in 0..hd {
                    a += d.w_out[[f, k]] * h[k];
                }
                out[[t, f]] = a.clamp(-30.0, 30.0).exp();
            }
        }
        out
    }

    #[test]
    fn matches_scalar_recurrence() {
        let d = GruDecoder::random(5, 9, 7, 1.0, 3);
        let z = randn((6, 5), 4);
        let v = d.decode(z.view()).unwrap();
        let r = naive_decode(&d, &z);
        for (a, b) in v.iter().zip(&r) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn vjp_matches_central_differences() {
        let d = GruDecoder::random(4, 10, 8, 1.0, 11);
        let z = randn((7, 4), 12);
        let cot = randn((7, 10), 13);
        let g = d.decode_vjp(z.view(), cot.view()).unwrap();
        let objective = |z: &Array2<f64>| -> f64 {
            let v = d.decode(z.view()).unwrap();
            (&v * &cot).sum()
        };
        let h = 1e-4;
        let mut fd = Array2::zeros(z.dim());
        for idx in ndarray::indices(z.dim()) {
            let mut zp = z.clone();
            zp[idx] += h;
            let mut zm = z.clone();
            zm[idx] -= h;
            fd[idx] = (objective(&zp) - objective(&zm)) / (2.0 * h);
        }
        let err = (&g - &fd).mapv(|x| x * x).sum().sqrt() / fd.mapv(|x| x * x).sum().sqrt();
        assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn first_frame_influences_later_frames() {
        let d = GruDecoder::random(3, 6, 8, 1.0, 21);
        let z = randn((5, 3), 22);
        let v = d.decode(z.view()).unwrap();
        let mut z2 = z.clone();
        z2[[0, 0]] += 0.5;
        let v2 = d.decode(z2.view()).unwrap();
        assert!((1..5).any(|t| (0..6).any(|f| v[[t, f]] != v2[[t, f]])));
    }

    #[test]
    fn decode_is_deterministic() {
        let d = GruDecoder::random(3, 6, 8, 1.0, 21);
        let z = randn((5, 3), 22);
        assert_eq!(d.decode(z.view()).unwrap(), d.decode(z.view()).unwrap());
    }

    #[test]
    fn pullback_agrees_with_separate_calls() {
        let d = GruDecoder::random(3, 6, 5, 1.0, 2);
        let z = randn((4, 3), 5);
        let (v, g) = d.decode_with_pullback(z.view(), &mut |v| v.mapv(|x| 1.0 / x)).unwrap();
        let cot = v.mapv(|x| 1.0 / x);
        assert_eq!(g, d.decode_vjp(z.view(), cot.view()).unwrap());
    }
}
