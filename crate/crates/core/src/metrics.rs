//! SI-SDR and real-time factor.

use crate::error::{Error, Result};
use crate::spectral::Waveform;

/// SI-SDR values are clamped to `[-SI_SDR_CAP_DB, SI_SDR_CAP_DB]`; a
/// distortion-free estimate reports the upper cap.
pub const SI_SDR_CAP_DB: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub si_sdr_db: f64,
    pub rtf: f64,
}

/// Scale-invariant SDR in dB: `10 log10(‖αr‖² / ‖αr - e‖²)` with
/// `α = ⟨e, r⟩ / ‖r‖²`.
pub fn si_sdr(est: &Waveform, reference: &Waveform) -> Result<f64> {
    si_sdr_samples(&est.samples, &reference.samples)
}

pub fn si_sdr_samples(est: &[f32], reference: &[f32]) -> Result<f64> {
    if est.len() != reference.len() {
        return Err(Error::invalid(format!(
            "estimate has {} samples, reference has {}",
            est.len(),
            reference.len()
        )));
    }
    let mut dot = 0.0f64;
    let mut ref_energy = 0.0f64;
    for (&e, &r) in est.iter().zip(reference) {
        dot += e as f64 * r as f64;
        ref_energy += r as f64 * r as f64;
    }
    if ref_energy == 0.0 {
        return Err(Error::invalid("reference signal is identically zero"));
    }
    let alpha = dot / ref_energy;
    let mut target = 0.0f64;
    let mut distortion = 0.0f64;
    for (&e, &r) in est.iter().zip(reference) {
        let t = alpha * r as f64;
        target += t * t;
        let d = t - e as f64;
        distortion += d * d;
    }
    let db = 10.0 * (target / distortion).log10();
    Ok(if db.is_nan() {
        -SI_SDR_CAP_DB
    } else {
        db.clamp(-SI_SDR_CAP_DB, SI_SDR_CAP_DB)
    })
}

/// Seconds of compute per second of audio.
pub fn measure_rtf(processing_seconds: f64, audio_seconds: f64) -> Result<f64> {
    if !(audio_seconds > 0.0) {
        return Err(Error::invalid("audio duration must be positive"));
    }
    Ok(processing_seconds / audio_seconds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(n: usize, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn identical_signals_hit_cap() {
        let r = randn(1000, 1);
        assert_eq!(si_sdr_samples(&r, &r).unwrap(), SI_SDR_CAP_DB);
        let doubled: Vec<f32> = r.iter().map(|x| 2.0 * x).collect();
        assert_eq!(si_sdr_samples(&doubled, &r).unwrap(), SI_SDR_CAP_DB);
    }

    #[test]
    fn orthogonal_noise_of_equal_energy_is_zero_db() {
        let r = randn(4096, 2);
        let n0 = randn(4096, 3);
        // Gram-Schmidt against r, then match energies.
        let rr: f64 = r.iter().map(|&x| (x as f64).powi(2)).sum();
        let nr: f64 = n0.iter().zip(&r).map(|(&a, &b)| a as f64 * b as f64).sum();
        let mut n: Vec<f64> = n0
            .iter()
            .zip(&r)
            .map(|(&a, &b)| a as f64 - nr / rr * b as f64)
            .collect();
        let nn: f64 = n.iter().map(|x| x * x).sum();
        n.iter_mut().for_each(|x| *x *= (rr / nn).sqrt());
        let e: Vec<f32> = r.iter().zip(&n).map(|(&a, &b)| (a as f64 + b) as f32).collect();
        assert!(si_sdr_samples(&e, &r).unwrap().abs() < 1e-4);
    }

    #[test]
    fn zero_reference_rejected() {
        assert!(si_sdr_samples(&[1.0, 2.0], &[0.0, 0.0]).is_err());
        assert!(si_sdr_samples(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn decreases_with_noise_level() {
        let r = randn(2000, 4);
        let n = randn(2000, 5);
        let mut prev = f64::INFINITY;
        for k in 1..10 {
            let g = 0.05 * k as f32;
            let e: Vec<f32> = r.iter().zip(&n).map(|(a, b)| a + g * b).collect();
            let v = si_sdr_samples(&e, &r).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn rtf_ratio() {
        assert_eq!(measure_rtf(5.0, 10.0).unwrap(), 0.5);
        assert!(measure_rtf(1.0, 0.0).is_err());
    }
}
