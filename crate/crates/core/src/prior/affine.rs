use ndarray::{Array1, Array2, Array3, ArrayView2, ArrayView3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{check_cotangent, check_latent, clamped_exp, Decoder, SpeechVariances};
use crate::error::{Error, Result};

/// Frame-wise decoder `v_t = exp(A z_t + b)`.
///
/// Frames never interact, which makes it the analytically tractable
/// reference for the recurrent decoder and the samplers.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpDecoder {
    /// F×L
    pub a: Array2<f64>,
    /// F
    pub b: Array1<f64>,
}

impl AffineExpDecoder {
    pub fn new(a: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::invalid(format!(
                "A has {} rows but b has {} entries",
                a.nrows(),
                b.len()
            )));
        }
        Ok(AffineExpDecoder { a, b })
    }

    /// Gaussian weights with `A z` having standard deviation `scale` per bin
    /// for `z ~ N(0, I)`, zero bias. Values are representable in `f32`.
    pub fn random(latent_dim: usize, freq_dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = scale / (latent_dim as f64).sqrt();
        let a = Array2::from_shape_simple_fn((freq_dim, latent_dim), || {
            let g: f64 = StandardNormal.sample(&mut rng);
            (g * std) as f32 as f64
        });
        AffineExpDecoder {
            a,
            b: Array1::zeros(freq_dim),
        }
    }

    /// M×T×L chains as one (M·T)×L matrix; frames decode independently.
    fn flatten(&self, z: ArrayView3<f64>) -> Result<Array2<f64>> {
        let (m, t, l) = z.dim();
        if l != self.latent_dim() {
            return Err(Error::invalid(format!(
                "latent width {l} does not match decoder latent_dim {}",
                self.latent_dim()
            )));
        }
        Ok(z.to_shape((m * t, l))
            .map_err(|e| Error::invalid(e.to_string()))?
            .into_owned())
    }

    fn preactivation(&self, z: ArrayView2<f64>) -> Array2<f64> {
        z.dot(&self.a.t()) + &self.b
    }
}

impl Decoder for AffineExpDecoder {
    fn latent_dim(&self) -> usize {
        self.a.ncols()
    }

    fn freq_dim(&self) -> usize {
        self.a.nrows()
    }

    fn decode(&self, z: ArrayView2<f64>) -> Result<SpeechVariances> {
        check_latent(z, self.latent_dim())?;
        Ok(self.preactivation(z).mapv(|p| clamped_exp(p).0))
    }

    fn decode_vjp(&self, z: ArrayView2<f64>, cot: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_latent(z, self.latent_dim())?;
        check_cotangent(z, cot, self.freq_dim())?;
        let mut g = self.preactivation(z);
        g.zip_mut_with(&cot, |p, &c| {
            let (v, live) = clamped_exp(*p);
            *p = if live { v * c } else { 0.0 };
        });
        Ok(g.dot(&self.a))
    }

    fn decode_with_pullback(
        &self,
        z: ArrayView2<f64>,
        cotangent: &mut dyn FnMut(ArrayView2<f64>) -> Array2<f64>,
    ) -> Result<(SpeechVariances, Array2<f64>)> {
        check_latent(z, self.latent_dim())?;
        let pre = self.preactivation(z);
        let v = pre.mapv(|p| clamped_exp(p).0);
        let cot = cotangent(v.view());
        check_cotangent(z, cot.view(), self.freq_dim())?;
        let mut g = cot;
        ndarray::Zip::from(&mut g)
            .and(&pre)
            .and(&v)
            .for_each(|c, &p, &vv| *c = if p.abs() <= super::PREACT_CLAMP { *c * vv } else { 0.0 });
        Ok((v, g.dot(&self.a)))
    }

    fn decode_with_pullback_batch(
        &self,
        z: ArrayView3<f64>,
        cotangent: &mut dyn FnMut(ArrayView3<f64>) -> Array3<f64>,
    ) -> Result<(Array3<f64>, Array3<f64>)> {
        let (m, t, l) = z.dim();
        let f = self.freq_dim();
        let flat = self.flatten(z)?;
        let (v, g) = self.decode_with_pullback(flat.view(), &mut |v| {
            let v3 = v.into_shape_with_order((m, t, f)).expect("contiguous decode output");
            cotangent(v3)
                .into_shape_with_order((m * t, f))
                .expect("cotangent shape")
        })?;
        Ok((
            v.into_shape_with_order((m, t, f))
                .map_err(|e| Error::invalid(e.to_string()))?,
            g.into_shape_with_order((m, t, l))
                .map_err(|e| Error::invalid(e.to_string()))?,
        ))
    }

    fn vjp_decoded_batch(&self, z: ArrayView3<f64>, v: ArrayView3<f64>, cot: ArrayView3<f64>) -> Result<Array3<f64>> {
        let (m, t, l) = z.dim();
        let f = self.freq_dim();
        if v.dim() != (m, t, f) || cot.dim() != (m, t, f) {
            return Err(Error::invalid(format!(
                "variances {:?} and cotangent {:?} must both be {:?}",
                v.dim(),
                cot.dim(),
                (m, t, f)
            )));
        }
        let pre = self.preactivation(self.flatten(z)?.view());
        let v = v.to_shape((m * t, f)).map_err(|e| Error::invalid(e.to_string()))?;
        let mut g = cot
            .to_shape((m * t, f))
            .map_err(|e| Error::invalid(e.to_string()))?
            .into_owned();
        ndarray::Zip::from(&mut g)
            .and(&pre)
            .and(&v)
            .for_each(|c, &p, &vv| *c = if p.abs() <= super::PREACT_CLAMP { *c * vv } else { 0.0 });
        g.dot(&self.a)
            .into_shape_with_order((m, t, l))
            .map_err(|e| Error::invalid(e.to_string()))
    }

    fn decode_batch(&self, z: ArrayView3<f64>) -> Result<Array3<f64>> {
        let (m, t, _) = z.dim();
        let flat = self.flatten(z)?;
        let v = self.preactivation(flat.view()).mapv(|p| clamped_exp(p).0);
        v.into_shape_with_order((m, t, self.freq_dim()))
            .map_err(|e| Error::invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array3, Axis};

    #[test]
    fn zero_weights_decode_to_ones() {
        let d = AffineExpDecoder::new(Array2::zeros((5, 3)), Array1::zeros(5)).unwrap();
        let z = Array2::from_elem((4, 3), 0.7);
        assert!(d.decode(z.view()).unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_frame_closed_form() {
        let d = AffineExpDecoder::new(array![[2.0]], array![0.0]).unwrap();
        let v = d.decode(array![[0.5]].view()).unwrap();
        assert!((v[[0, 0]] - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn vjp_closed_form() {
        let d = AffineExpDecoder::random(3, 6, 1.0, 5);
        let z = array![[0.1, -0.2, 0.3], [1.0, 0.5, -0.5]];
        let cot = Array2::from_shape_fn((2, 6), |(t, f)| (t as f64 + 1.0) * (f as f64 - 2.5));
        let g = d.decode_vjp(z.view(), cot.view()).unwrap();
        let v = d.decode(z.view()).unwrap();
        for t in 0..2 {
            for l in 0..3 {
                let expect: f64 = (0..6).map(|f| d.a[[f, l]] * v[[t, f]] * cot[[t, f]]).sum();
                assert!((g[[t, l]] - expect).abs() < 1e-12);
            }
        }
        let zero = d.decode_vjp(z.view(), Array2::zeros((2, 6)).view()).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn clamp_bounds_output() {
        let d = AffineExpDecoder::new(array![[100.0], [-100.0]], array![0.0, 0.0]).unwrap();
        let v = d.decode(array![[1.0]].view()).unwrap();
        assert_eq!(v[[0, 0]], 30f64.exp());
        assert_eq!(v[[0, 1]], (-30f64).exp());
        let g = d.decode_vjp(array![[1.0]].view(), array![[1.0, 1.0]].view()).unwrap();
        assert_eq!(g[[0, 0]], 0.0);
    }

    #[test]
    fn batch_matches_per_chain() {
        let d = AffineExpDecoder::random(4, 7, 1.5, 9);
        let z = Array3::from_shape_fn((3, 5, 4), |(m, t, l)| ((m * 31 + t * 7 + l) as f64).sin());
        let vb = d.decode_batch(z.view()).unwrap();
        for m in 0..3 {
            let v = d.decode(z.index_axis(Axis(0), m)).unwrap();
            for (a, b) in vb.index_axis(Axis(0), m).iter().zip(&v) {
                assert!((a - b).abs() <= 1e-12 * b);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let d = AffineExpDecoder::random(4, 7, 1.0, 1);
        assert!(d.decode(Array2::zeros((3, 5)).view()).is_err());
        assert!(d
            .decode_vjp(Array2::zeros((3, 4)).view(), Array2::zeros((3, 6)).view())
            .is_err());
    }
}
