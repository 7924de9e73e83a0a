//! Posterior sampling over latent sequences.
//!
//! Three kernels share one [`Target`] interface:
//!
//! * Langevin dynamics: `M` independent chains, each moved by
//!   `z ← z + (η/2)∇log p(z) + √η ζ` with no accept/reject.
//! * Metropolis-Hastings: one chain, Gaussian random-walk candidate for the
//!   whole sequence, accepted or rejected frame by frame.
//! * MALA: the Langevin move used as an MH candidate, with the forward and
//!   reverse transition densities in the per-frame acceptance ratio.
//!
//! For MH and MALA every frame's acceptance ratio is evaluated under the full
//! candidate sequence against the shared current state, then the merged
//! sequence is re-evaluated once for the next step.

mod noise;
mod target;

pub use noise::{NoiseSource, Purpose};
pub use target::{
    score, FlatLikelihood, GaussianTarget, IsotropicGaussianLikelihood, Likelihood, Posterior, SpeechLikelihood,
    Target, ZeroDrift,
};

use ndarray::{Array2, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};
use target::{check_finite_rows, check_shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Ld,
    Mh,
    Mala,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [SamplerKind::Ld, SamplerKind::Mh, SamplerKind::Mala];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Ld => "ld",
            SamplerKind::Mh => "mh",
            SamplerKind::Mala => "mala",
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ld" | "langevin" => Ok(SamplerKind::Ld),
            "mh" => Ok(SamplerKind::Mh),
            "mala" => Ok(SamplerKind::Mala),
            other => Err(Error::invalid(format!(
                "unknown sampler `{other}` (expected ld, mh or mala)"
            ))),
        }
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_ETA: f64 = 0.005;
pub const DEFAULT_SIGMA2: f64 = 0.02;
pub const DEFAULT_K_LD: usize = 1;
pub const DEFAULT_K_MCMC: usize = 10;
pub const DEFAULT_BURN_IN: usize = 5;
pub const DEFAULT_CHAINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Langevin step size (LD, MALA).
    pub eta: f64,
    /// Random-walk proposal and chain-initialization variance.
    pub sigma2: f64,
    /// Steps per call.
    pub steps: usize,
    /// Leading MH/MALA states discarded per call.
    pub burn_in: usize,
    /// Parallel LD chains.
    pub chains: usize,
    pub seed: u64,
}

impl SamplerConfig {
    /// Defaults for `kind`: K = 1 for LD, K = 10 with 5 burn-in steps for
    /// MH and MALA, η = 0.005, σ² = 0.02.
    pub fn defaults(kind: SamplerKind) -> Self {
        SamplerConfig {
            kind,
            eta: DEFAULT_ETA,
            sigma2: DEFAULT_SIGMA2,
            steps: match kind {
                SamplerKind::Ld => DEFAULT_K_LD,
                _ => DEFAULT_K_MCMC,
            },
            burn_in: match kind {
                SamplerKind::Ld => 0,
                _ => DEFAULT_BURN_IN,
            },
            chains: DEFAULT_CHAINS,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if self.steps == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        if self.kind != SamplerKind::Ld && self.burn_in >= self.steps {
            return Err(Error::invalid(format!(
                "burn-in ({}) must be smaller than K ({})",
                self.burn_in, self.steps
            )));
        }
        if self.chains == 0 {
            return Err(Error::invalid("number of chains must be at least 1"));
        }
        Ok(())
    }

    /// Number of samples one call hands to the M-step.
    pub fn retained(&self) -> usize {
        match self.kind {
            SamplerKind::Ld => self.chains,
            _ => self.steps - self.burn_in,
        }
    }
}

/// `M` parallel latent sequences (M×T×L).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub samples: Array3<f64>,
    /// Noise-stream identity of each chain; permuted together with `samples`.
    pub chain_ids: Vec<u64>,
    /// Steps taken so far; keys the noise of the next step.
    pub step: u64,
}

impl ChainState {
    pub fn chains(&self) -> usize {
        self.samples.len_of(Axis(0))
    }

    pub fn mean(&self) -> Array2<f64> {
        self.samples.mean_axis(Axis(0)).expect("at least one chain")
    }
}

/// `z⁰_{t,i} = z_t + σ ε_{t,i}` for `i = 1..M`.
pub fn spawn_chains(z0: ArrayView2<f64>, chains: usize, sigma2: f64, noise: &NoiseSource) -> Result<ChainState> {
    if chains == 0 {
        return Err(Error::invalid("number of chains must be at least 1"));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::invalid("sigma2 must be non-negative"));
    }
    let (t_len, l) = z0.dim();
    let sigma = sigma2.sqrt();
    let mut samples = Array3::zeros((chains, t_len, l));
    let mut eps = vec![0.0; l];
    for (i, mut chain) in samples.axis_iter_mut(Axis(0)).enumerate() {
        for (t, mut row) in chain.rows_mut().into_iter().enumerate() {
            noise.fill_gaussian(0, i as u64, t, Purpose::Spawn, &mut eps);
            for ((r, &z), &e) in row.iter_mut().zip(z0.row(t)).zip(&eps) {
                *r = z + sigma * e;
            }
        }
    }
    Ok(ChainState {
        samples,
        chain_ids: (0..chains as u64).collect(),
        step: 0,
    })
}

/// One Langevin move of every chain. Returns the mean over chains of the
/// summed log-density at the pre-move state.
pub fn ld_step<T: Target + ?Sized>(tg: &T, st: &mut ChainState, eta: f64, noise: &NoiseSource) -> Result<f64> {
    if !(eta >= 0.0) {
        return Err(Error::invalid("eta must be non-negative"));
    }
    let (_, _, l) = st.samples.dim();
    let half = 0.5 * eta;
    let root = eta.sqrt();
    let mut zeta = vec![0.0; l];
    for chain in st.samples.axis_iter(Axis(0)) {
        check_shape(tg, chain)?;
    }
    // One batched evaluation for all chains.
    let (ld, g) = tg.log_density_and_score_batch(st.samples.view())?;
    let mut total = 0.0;
    for (((mut chain, gc), ldc), &id) in st
        .samples
        .axis_iter_mut(Axis(0))
        .zip(g.axis_iter(Axis(0)))
        .zip(&ld)
        .zip(&st.chain_ids)
    {
        check_finite_rows(gc, "score")?;
        total += ldc.iter().sum::<f64>();
        for (t, (mut row, grow)) in chain.rows_mut().into_iter().zip(gc.rows()).enumerate() {
            noise.fill_gaussian(st.step, id, t, Purpose::Proposal, &mut zeta);
            for ((z, &gi), &n) in row.iter_mut().zip(grow).zip(&zeta) {
                *z += half * gi + root * n;
            }
        }
        if chain.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!(
                "LD produced a non-finite state at step {}",
                st.step
            )));
        }
    }
    st.step += 1;
    Ok(total / st.chains() as f64)
}

/// A single chain together with its cached per-frame log-density (and score,
/// for MALA) at the current state.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleChain {
    pub z: Array2<f64>,
    pub log_density: Vec<f64>,
    pub score: Option<Array2<f64>>,
    pub step: u64,
}

impl SingleChain {
    pub fn new<T: Target + ?Sized>(tg: &T, z: Array2<f64>, with_score: bool, step: u64) -> Result<Self> {
        check_shape(tg, z.view())?;
        let (log_density, score) = if with_score {
            let (ld, g) = tg.log_density_and_score(z.view())?;
            check_finite_rows(g.view(), "score")?;
            (ld, Some(g))
        } else {
            (tg.frame_log_density(z.view())?, None)
        };
        Ok(SingleChain {
            z,
            log_density,
            score,
            step,
        })
    }

    pub fn total_log_density(&self) -> f64 {
        self.log_density.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Per-frame acceptance probabilities, each in [0, 1].
    pub alpha: Vec<f64>,
    pub accepted: Vec<bool>,
}

impl StepOutcome {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len().max(1) as f64
    }
}

fn accept_frames(chain: &SingleChain, log_ratio: impl Iterator<Item = f64>, noise: &NoiseSource) -> StepOutcome {
    let mut alpha = Vec::with_capacity(chain.log_density.len());
    let mut accepted = Vec::with_capacity(chain.log_density.len());
    for (t, lr) in log_ratio.enumerate() {
        // NaN ratios reject.
        let a = if lr >= 0.0 {
            1.0
        } else if lr.is_nan() {
            0.0
        } else {
            lr.exp()
        };
        let u = noise.uniform(chain.step, 0, t);
        alpha.push(a);
        accepted.push(u <= a);
    }
    StepOutcome { alpha, accepted }
}

/// Replaces accepted frames of `chain` with the candidate and refreshes the
/// cached density (and score if `with_score`).
fn merge<T: Target + ?Sized>(
    tg: &T,
    chain: &mut SingleChain,
    cand: Array2<f64>,
    out: &StepOutcome,
    with_score: bool,
) -> Result<()> {
    for (t, &acc) in out.accepted.iter().enumerate() {
        if acc {
            chain.z.row_mut(t).assign(&cand.row(t));
        }
    }
    if with_score {
        let (ld, g) = tg.log_density_and_score(chain.z.view())?;
        check_finite_rows(g.view(), "score")?;
        chain.log_density = ld;
        chain.score = Some(g);
    } else {
        chain.log_density = tg.frame_log_density(chain.z.view())?;
    }
    chain.step += 1;
    Ok(())
}

/// Random-walk MH: candidate `z + σζ`, per-frame acceptance.
pub fn mh_step<T: Target + ?Sized>(
    tg: &T,
    chain: &mut SingleChain,
    sigma2: f64,
    noise: &NoiseSource,
) -> Result<StepOutcome> {
    let sigma = sigma2.sqrt();
    let l = chain.z.ncols();
    let mut cand = chain.z.clone();
    let mut zeta = vec![0.0; l];
    for (t, mut row) in cand.rows_mut().into_iter().enumerate() {
        noise.fill_gaussian(chain.step, 0, t, Purpose::Proposal, &mut zeta);
        for (z, &n) in row.iter_mut().zip(&zeta) {
            *z += sigma * n;
        }
    }
    let cand_ld = tg.frame_log_density(cand.view())?;
    let out = accept_frames(chain, cand_ld.iter().zip(&chain.log_density).map(|(c, o)| c - o), noise);
    merge(tg, chain, cand, &out, false)?;
    Ok(out)
}

/// `log q(u_t | v) = -‖u_t - v_t - (η/2) f(v)_t‖² / (2η)` per frame.
fn log_transition(u: ArrayView2<f64>, v: ArrayView2<f64>, fv: ArrayView2<f64>, eta: f64) -> Vec<f64> {
    let half = 0.5 * eta;
    (0..u.nrows())
        .map(|t| {
            let sq: f64 = u
                .row(t)
                .iter()
                .zip(v.row(t))
                .zip(fv.row(t))
                .map(|((&a, &b), &g)| {
                    let d = a - b - half * g;
                    d * d
                })
                .sum();
            -sq / (2.0 * eta)
        })
        .collect()
}

/// MALA: Langevin candidate, per-frame acceptance with transition-density
/// correction. `chain` must carry its score.
pub fn mala_step<T: Target + ?Sized>(
    tg: &T,
    chain: &mut SingleChain,
    eta: f64,
    noise: &NoiseSource,
) -> Result<StepOutcome> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta must be positive"));
    }
    if chain.score.is_none() {
        let (ld, g) = tg.log_density_and_score(chain.z.view())?;
        check_finite_rows(g.view(), "score")?;
        chain.log_density = ld;
        chain.score = Some(g);
    }
    let f_cur = chain.score.as_ref().expect("score present");
    let half = 0.5 * eta;
    let root = eta.sqrt();
    let l = chain.z.ncols();
    let mut cand = chain.z.clone();
    let mut zeta = vec![0.0; l];
    for (t, (mut row, g)) in cand.rows_mut().into_iter().zip(f_cur.rows()).enumerate() {
        noise.fill_gaussian(chain.step, 0, t, Purpose::Proposal, &mut zeta);
        for ((z, &gi), &n) in row.iter_mut().zip(g).zip(&zeta) {
            *z += half * gi + root * n;
        }
    }
    let (cand_ld, f_cand) = tg.log_density_and_score(cand.view())?;
    check_finite_rows(f_cand.view(), "score")?;
    let fwd = log_transition(cand.view(), chain.z.view(), f_cur.view(), eta);
    let rev = log_transition(chain.z.view(), cand.view(), f_cand.view(), eta);
    let log_ratio: Vec<f64> = (0..cand_ld.len())
        .map(|t| (cand_ld[t] - chain.log_density[t]) + (rev[t] - fwd[t]))
        .collect();
    let out = accept_frames(chain, log_ratio.into_iter(), noise);
    merge(tg, chain, cand, &out, true)?;
    Ok(out)
}

/// Samples and diagnostics from one sampler call.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerRun {
    /// S×T×L retained samples: the M final LD chain states, or the
    /// K − burn-in post-burn-in MH/MALA states.
    pub samples: Array3<f64>,
    /// Mean summed log-density per step, taken before each move.
    pub log_density_trace: Vec<f64>,
    /// Per-frame acceptance rate over the call (MH/MALA; empty for LD).
    pub frame_acceptance: Vec<f64>,
}

/// Advances an existing LD ensemble by `cfg.steps` moves.
pub fn advance_ld<T: Target + ?Sized>(
    cfg: &SamplerConfig,
    tg: &T,
    st: &mut ChainState,
    noise: &NoiseSource,
) -> Result<SamplerRun> {
    let mut trace = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let step = st.step;
        trace.push(ld_step(tg, st, cfg.eta, noise).map_err(|e| at_step(e, step))?);
    }
    Ok(SamplerRun {
        samples: st.samples.clone(),
        log_density_trace: trace,
        frame_acceptance: Vec::new(),
    })
}

/// Runs `cfg.steps` MH or MALA steps from `chain`, keeping the states after
/// the burn-in.
pub fn advance_single<T: Target + ?Sized>(
    cfg: &SamplerConfig,
    tg: &T,
    chain: &mut SingleChain,
    noise: &NoiseSource,
) -> Result<SamplerRun> {
    let (t_len, l) = chain.z.dim();
    let kept = cfg.steps - cfg.burn_in.min(cfg.steps);
    let mut samples = Array3::zeros((kept, t_len, l));
    let mut trace = Vec::with_capacity(cfg.steps);
    let mut counts = vec![0usize; t_len];
    for k in 1..=cfg.steps {
        trace.push(chain.total_log_density());
        let step = chain.step;
        let out = match cfg.kind {
            SamplerKind::Mh => mh_step(tg, chain, cfg.sigma2, noise),
            SamplerKind::Mala => mala_step(tg, chain, cfg.eta, noise),
            SamplerKind::Ld => return Err(Error::invalid("advance_single does not run LD")),
        }
        .map_err(|e| at_step(e, step))?;
        for (c, &a) in counts.iter_mut().zip(&out.accepted) {
            *c += a as usize;
        }
        if k > cfg.burn_in {
            samples.index_axis_mut(Axis(0), k - cfg.burn_in - 1).assign(&chain.z);
        }
    }
    Ok(SamplerRun {
        samples,
        log_density_trace: trace,
        frame_acceptance: counts.iter().map(|&c| c as f64 / cfg.steps as f64).collect(),
    })
}

fn at_step(e: Error, step: u64) -> Error {
    match e {
        Error::Numerical(m) => Error::Numerical(format!("{m} (sampler step {step})")),
        other => other,
    }
}

/// One complete sampler call from `z_init`: LD spawns `M` jittered chains
/// and returns their state after K moves; MH/MALA run one chain for K steps
/// and return the post-burn-in states.
pub fn run_sampler<T: Target + ?Sized>(cfg: &SamplerConfig, tg: &T, z_init: ArrayView2<f64>) -> Result<SamplerRun> {
    cfg.validate()?;
    check_shape(tg, z_init)?;
    let noise = NoiseSource::new(cfg.seed);
    match cfg.kind {
        SamplerKind::Ld => {
            let mut st = spawn_chains(z_init, cfg.chains, cfg.sigma2, &noise)?;
            advance_ld(cfg, tg, &mut st, &noise)
        }
        SamplerKind::Mh | SamplerKind::Mala => {
            let mut chain = SingleChain::new(tg, z_init.to_owned(), cfg.kind == SamplerKind::Mala, 0)?;
            advance_single(cfg, tg, &mut chain, &noise)
        }
    }
}
