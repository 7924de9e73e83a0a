//! Unsupervised speech enhancement by expectation-maximization with a deep
//! speech prior, an NMF noise model, and MCMC posterior sampling of the
//! latent sequence (Langevin dynamics, Metropolis-Hastings or MALA).
//!
//! The pipeline for one utterance:
//!
//! 1. [`spectral::stft`] of the noisy waveform.
//! 2. [`em::run_em`]: alternate a sampler E-step over the latents with a
//!    multiplicative NMF M-step, then apply the averaged Wiener gain.
//! 3. [`spectral::istft`] back to a waveform.

pub mod diag;
pub mod em;
pub mod error;
pub mod metrics;
pub mod nmf;
pub mod prior;
pub mod samplers;
pub mod spectral;
pub mod synth;
pub mod wav;

pub use error::{Error, Result};
