use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// What a random draw is used for; part of the stream key so that proposal
/// noise and acceptance uniforms never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Spawn = 1,
    Proposal = 2,
    Accept = 3,
    Init = 4,
}

/// Counter-based noise: every `(step, chain, frame, purpose)` tuple maps to
/// its own ChaCha stream, so draws do not depend on evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSource {
    pub seed: u64,
    /// Test hook: all Gaussian draws are exactly zero.
    pub zero_gaussian: bool,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource {
            seed,
            zero_gaussian: false,
        }
    }

    pub fn zeroed(seed: u64) -> Self {
        NoiseSource {
            seed,
            zero_gaussian: true,
        }
    }

    fn rng(&self, step: u64, chain: u64, frame: usize, purpose: Purpose) -> ChaCha8Rng {
        let mut k = splitmix(self.seed);
        for part in [step, chain, frame as u64, purpose as u64] {
            k = splitmix(k ^ part);
        }
        ChaCha8Rng::seed_from_u64(k)
    }

    pub fn fill_gaussian(&self, step: u64, chain: u64, frame: usize, purpose: Purpose, out: &mut [f64]) {
        if self.zero_gaussian {
            out.fill(0.0);
            return;
        }
        let mut rng = self.rng(step, chain, frame, purpose);
        for o in out {
            *o = rng.sample(StandardNormal);
        }
    }

    /// Uniform on [0, 1).
    pub fn uniform(&self, step: u64, chain: u64, frame: usize) -> f64 {
        self.rng(step, chain, frame, Purpose::Accept).random::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_keyed() {
        let n = NoiseSource::new(5);
        let mut a = [0.0; 4];
        let mut b = [0.0; 4];
        n.fill_gaussian(1, 2, 3, Purpose::Proposal, &mut a);
        n.fill_gaussian(1, 2, 3, Purpose::Proposal, &mut b);
        assert_eq!(a, b);
        n.fill_gaussian(1, 2, 4, Purpose::Proposal, &mut b);
        assert_ne!(a, b);
        n.fill_gaussian(1, 2, 3, Purpose::Spawn, &mut b);
        assert_ne!(a, b);
        NoiseSource::new(6).fill_gaussian(1, 2, 3, Purpose::Proposal, &mut b);
        assert_ne!(a, b);
    }

    #[test]
    fn zero_hook() {
        let mut a = [1.0; 3];
        NoiseSource::zeroed(1).fill_gaussian(0, 0, 0, Purpose::Proposal, &mut a);
        assert_eq!(a, [0.0; 3]);
    }

    #[test]
    fn uniform_in_unit_interval() {
        let n = NoiseSource::new(9);
        for f in 0..1000 {
            let u = n.uniform(3, 0, f);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
