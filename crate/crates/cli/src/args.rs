use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Unsupervised speech enhancement by Monte-Carlo EM with a deep speech
/// prior and an NMF noise model.
#[derive(Debug, Parser)]
#[command(name = "mcem", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enhance a noisy mono WAV file.
    Enhance(EnhanceArgs),
    /// Run all samplers on a seeded synthetic corpus and tabulate SI-SDR and RTF.
    Benchmark(BenchmarkArgs),
    /// Run the samplers on an analytic Gaussian target and report traces and KS verdicts.
    SamplerDiag(DiagArgs),
    /// Write a randomly initialised decoder weight file.
    GenDecoder(GenArgs),
}

/// EM and sampler settings shared by `enhance`. Every field is optional so a
/// config file can fill gaps; the documented defaults apply last.
#[derive(Debug, Clone, Default, Args)]
pub struct EmFlags {
    /// Flat key=value file; its keys are the long flag names.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Posterior sampler: ld, mh or mala [default: ld]
    #[arg(long)]
    pub sampler: Option<String>,

    /// EM iterations J [default: 100]
    #[arg(long, short = 'J')]
    pub iterations: Option<usize>,

    /// Langevin/MALA step size η [default: 0.005]
    #[arg(long)]
    pub eta: Option<f64>,

    /// MH proposal and chain-initialisation variance σ² [default: 0.02]
    #[arg(long)]
    pub sigma2: Option<f64>,

    /// Sampler steps K per EM iteration [default: 1 for ld, 10 for mh and mala]
    #[arg(long = "K", alias = "steps")]
    pub k: Option<usize>,

    /// Burn-in steps discarded per E-step, mh and mala only [default: 5]
    #[arg(long = "burn-in")]
    pub burn_in: Option<usize>,

    /// Parallel Langevin chains M [default: 8]
    #[arg(long)]
    pub chains: Option<usize>,

    /// NMF noise rank R [default: 8]
    #[arg(long = "nmf-rank")]
    pub nmf_rank: Option<usize>,

    /// Seed for sampler noise and NMF initialisation [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Latent initialisation: zeros, prior or warmup [default: warmup]
    #[arg(long = "z-init")]
    pub z_init: Option<String>,

    /// Langevin warm-up steps for --z-init warmup [default: 20]
    #[arg(long = "warmup-steps")]
    pub warmup_steps: Option<usize>,

    /// Samples feeding the M-step: all or last [default: all]
    #[arg(long = "mstep-samples")]
    pub mstep_samples: Option<String>,

    /// STFT size [default: 1024]
    #[arg(long = "fft-size")]
    pub fft_size: Option<usize>,

    /// STFT hop [default: 256]
    #[arg(long = "hop-size")]
    pub hop_size: Option<usize>,

    /// STFT window: hann or sqrt_hann [default: sqrt_hann]
    #[arg(long)]
    pub window: Option<String>,
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    /// Noisy input WAV (mono or averaged to mono).
    #[arg(long, short)]
    pub input: PathBuf,

    /// Enhanced output WAV.
    #[arg(long, short)]
    pub output: PathBuf,

    /// Decoder weight file.
    #[arg(long, short)]
    pub decoder: PathBuf,

    /// Write the key=value report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,

    /// Write per-step log-density and per-frame acceptance traces here.
    #[arg(long, value_name = "FILE")]
    pub diag: Option<PathBuf>,

    /// Output sample format [default: same as input]
    #[arg(long, value_enum)]
    pub encoding: Option<Encoding>,

    #[command(flatten)]
    pub em: EmFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Encoding {
    Pcm16,
    Float32,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Number of synthetic utterances.
    #[arg(long, default_value_t = 20)]
    pub utterances: usize,

    /// Input SNR ladder in dB, cycled over utterances.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-5,0,5")]
    pub snr: Vec<f64>,

    /// Samplers to run.
    #[arg(long, value_delimiter = ',', default_value = "ld,mh,mala")]
    pub samplers: Vec<String>,

    /// EM iterations J.
    #[arg(long, short = 'J', default_value_t = 100)]
    pub iterations: usize,

    /// Frames per synthetic utterance.
    #[arg(long)]
    pub frames: Option<usize>,

    /// Latent dimension of the synthetic speech model.
    #[arg(long = "latent-dim")]
    pub latent_dim: Option<usize>,

    /// STFT size of the synthetic corpus.
    #[arg(long = "fft-size")]
    pub fft_size: Option<usize>,

    /// Corpus and sampler seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Also write the per-utterance table as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagArgs {
    /// Samplers to run.
    #[arg(long, value_delimiter = ',', default_value = "ld,mh,mala")]
    pub samplers: Vec<String>,

    /// Steps per sampler.
    #[arg(long, default_value_t = 20_000)]
    pub steps: usize,

    /// Discarded leading steps.
    #[arg(long = "burn-in", default_value_t = 1_000)]
    pub burn_in: usize,

    /// Target dimension.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,

    /// Target mean, shared by every coordinate.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mean: f64,

    /// Correlation between neighbouring coordinates (unit variances).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rho: f64,

    /// Langevin/MALA step size.
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,

    /// MH proposal variance.
    #[arg(long, default_value_t = 0.5)]
    pub sigma2: f64,

    /// Parallel Langevin chains.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// KS significance level.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,

    /// Write per-step traces as CSV.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Arch {
    AffineExp,
    Gru,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = Arch::AffineExp)]
    pub arch: Arch,

    #[arg(long = "latent-dim", default_value_t = 16)]
    pub latent_dim: usize,

    /// Frequency bins; defaults to fft-size / 2 + 1.
    #[arg(long = "freq-dim")]
    pub freq_dim: Option<usize>,

    #[arg(long = "fft-size", default_value_t = 1024)]
    pub fft_size: usize,

    /// Recurrent hidden size (gru only).
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, short)]
    pub output: PathBuf,
}
