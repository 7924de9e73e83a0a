//! Deep speech priors: decoders mapping a latent sequence `z` (T×L) to
//! strictly positive per-frame spectral variances (T×F), with exact
//! vector-Jacobian products for gradient-based samplers.

mod affine;
mod format;
mod gru;

pub use affine::AffineExpDecoder;
pub use format::{load_decoder, read_decoder, save_decoder, write_decoder, ArchTag, MAGIC};
pub use gru::{GruDecoder, DEFAULT_HIDDEN};

use ndarray::{Array2, Array3, ArrayView2, ArrayView3, Axis};

use crate::error::{Error, Result};

/// T×L latent trajectory.
pub type LatentSequence = Array2<f64>;

/// T×F strictly positive speech variances.
pub type SpeechVariances = Array2<f64>;

/// Pre-activations are clamped to this range before the exponential.
pub const PREACT_CLAMP: f64 = 30.0;

pub(crate) fn clamped_exp(a: f64) -> (f64, bool) {
    if a > PREACT_CLAMP {
        (PREACT_CLAMP.exp(), false)
    } else if a < -PREACT_CLAMP {
        ((-PREACT_CLAMP).exp(), false)
    } else {
        (a.exp(), true)
    }
}

pub trait Decoder: Send + Sync {
    fn latent_dim(&self) -> usize;
    fn freq_dim(&self) -> usize;

    fn decode(&self, z: ArrayView2<f64>) -> Result<SpeechVariances>;

    /// `Jᵀ·cot` for the Jacobian `J` of `decode` at `z`.
    fn decode_vjp(&self, z: ArrayView2<f64>, cot: ArrayView2<f64>) -> Result<Array2<f64>>;

    /// Decodes `z`, builds a cotangent from the decoded variances and pulls it
    /// back, sharing one forward pass where the implementation allows it.
    fn decode_with_pullback(
        &self,
        z: ArrayView2<f64>,
        cotangent: &mut dyn FnMut(ArrayView2<f64>) -> Array2<f64>,
    ) -> Result<(SpeechVariances, Array2<f64>)> {
        let v = self.decode(z)?;
        let cot = cotangent(v.view());
        let g = self.decode_vjp(z, cot.view())?;
        Ok((v, g))
    }

    /// `decode_with_pullback` over M sequences at once (M×T×L in).
    fn decode_with_pullback_batch(
        &self,
        z: ArrayView3<f64>,
        cotangent: &mut dyn FnMut(ArrayView3<f64>) -> Array3<f64>,
    ) -> Result<(Array3<f64>, Array3<f64>)> {
        let (m, t, l) = z.dim();
        let mut v_all = Array3::zeros((m, t, self.freq_dim()));
        let mut g_all = Array3::zeros((m, t, l));
        for (i, zi) in z.axis_iter(Axis(0)).enumerate() {
            let (v, g) = self.decode_with_pullback(zi, &mut |v| {
                cotangent(v.insert_axis(Axis(0))).index_axis_move(Axis(0), 0)
            })?;
            v_all.index_axis_mut(Axis(0), i).assign(&v);
            g_all.index_axis_mut(Axis(0), i).assign(&g);
        }
        Ok((v_all, g_all))
    }

    /// `Jᵀ·cot` for M sequences whose variances `v = decode_batch(z)` are
    /// already known.
    fn vjp_decoded_batch(&self, z: ArrayView3<f64>, v: ArrayView3<f64>, cot: ArrayView3<f64>) -> Result<Array3<f64>> {
        let _ = v;
        let mut g_all = Array3::zeros(z.dim());
        for (i, (zi, ci)) in z.axis_iter(Axis(0)).zip(cot.axis_iter(Axis(0))).enumerate() {
            g_all.index_axis_mut(Axis(0), i).assign(&self.decode_vjp(zi, ci)?);
        }
        Ok(g_all)
    }

    /// Decodes M sequences at once (M×T×L in, M×T×F out).
    fn decode_batch(&self, z: ArrayView3<f64>) -> Result<Array3<f64>> {
        let (m, t, _) = z.dim();
        let mut out = Array3::zeros((m, t, self.freq_dim()));
        for (i, zi) in z.axis_iter(Axis(0)).enumerate() {
            out.index_axis_mut(Axis(0), i).assign(&self.decode(zi)?);
        }
        Ok(out)
    }
}

pub(crate) fn check_latent(z: ArrayView2<f64>, latent_dim: usize) -> Result<()> {
    if z.ncols() != latent_dim {
        return Err(Error::invalid(format!(
            "latent width {} does not match decoder latent_dim {latent_dim}",
            z.ncols()
        )));
    }
    if z.nrows() == 0 {
        return Err(Error::invalid("latent sequence has no frames"));
    }
    Ok(())
}

pub(crate) fn check_cotangent(z: ArrayView2<f64>, cot: ArrayView2<f64>, freq_dim: usize) -> Result<()> {
    if cot.dim() != (z.nrows(), freq_dim) {
        return Err(Error::invalid(format!(
            "cotangent shape {:?} does not match ({}, {freq_dim})",
            cot.dim(),
            z.nrows()
        )));
    }
    Ok(())
}

/// A decoder loaded from or written to a weight file.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoderModel {
    AffineExp(AffineExpDecoder),
    Gru(GruDecoder),
}

impl DecoderModel {
    pub fn arch(&self) -> ArchTag {
        match self {
            DecoderModel::AffineExp(_) => ArchTag::AffineExp,
            DecoderModel::Gru(_) => ArchTag::Gru,
        }
    }

    fn inner(&self) -> &dyn Decoder {
        match self {
            DecoderModel::AffineExp(d) => d,
            DecoderModel::Gru(d) => d,
        }
    }
}

impl From<AffineExpDecoder> for DecoderModel {
    fn from(d: AffineExpDecoder) -> Self {
        DecoderModel::AffineExp(d)
    }
}

impl From<GruDecoder> for DecoderModel {
    fn from(d: GruDecoder) -> Self {
        DecoderModel::Gru(d)
    }
}

impl Decoder for DecoderModel {
    fn latent_dim(&self) -> usize {
        self.inner().latent_dim()
    }

    fn freq_dim(&self) -> usize {
        self.inner().freq_dim()
    }

    fn decode(&self, z: ArrayView2<f64>) -> Result<SpeechVariances> {
        self.inner().decode(z)
    }

    fn decode_vjp(&self, z: ArrayView2<f64>, cot: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.inner().decode_vjp(z, cot)
    }

    fn decode_with_pullback(
        &self,
        z: ArrayView2<f64>,
        cotangent: &mut dyn FnMut(ArrayView2<f64>) -> Array2<f64>,
    ) -> Result<(SpeechVariances, Array2<f64>)> {
        self.inner().decode_with_pullback(z, cotangent)
    }

    fn decode_with_pullback_batch(
        &self,
        z: ArrayView3<f64>,
        cotangent: &mut dyn FnMut(ArrayView3<f64>) -> Array3<f64>,
    ) -> Result<(Array3<f64>, Array3<f64>)> {
        self.inner().decode_with_pullback_batch(z, cotangent)
    }

    fn vjp_decoded_batch(&self, z: ArrayView3<f64>, v: ArrayView3<f64>, cot: ArrayView3<f64>) -> Result<Array3<f64>> {
        self.inner().vjp_decoded_batch(z, v, cot)
    }

    fn decode_batch(&self, z: ArrayView3<f64>) -> Result<Array3<f64>> {
        self.inner().decode_batch(z)
    }
}
