//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use mcem_core::diag::{autocorr_time, ks_p_value, ks_statistic, normal_cdf};
use mcem_core::em::{EmConfig, DEFAULT_ITERATIONS};
use mcem_core::nmf::{init_nmf, mixture_loglik, mstep_update, NmfParams, NMF_FLOOR};
use mcem_core::prior::{AffineExpDecoder, DecoderModel, GruDecoder};
use mcem_core::samplers::{
    ld_step, mala_step, mh_step, score, spawn_chains, GaussianTarget, NoiseSource, Posterior, SamplerKind, SingleChain,
    SpeechLikelihood, Target, ZeroDrift,
};
use mcem_core::spectral::{istft, stft, StftConfig, Waveform, Window};
use mcem_core::synth::{generate_mixture, run_benchmark, sampler_mean, BenchmarkConfig, BenchmarkRow, SynthConfig};
use mcem_core::wav::{write_wav, WavEncoding};
use ndarray::{array, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

type Outcome = Result<String, String>;

fn randn(shape: (usize, usize), rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || Distribution::<f64>::sample(&StandardNormal, rng))
}

fn within(limit: Duration, took: Duration) -> Result<(), String> {
    if took > limit {
        Err(format!(
            "took {:.1}s, limit {:.0}s",
            took.as_secs_f64(),
            limit.as_secs_f64()
        ))
    } else {
        Ok(())
    }
}

// 1

fn gradient_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let instances = 60;
    for i in 0..instances {
        let t = rng.random_range(2..=10);
        let l = rng.random_range(1..=8);
        let f = rng.random_range(2..=32);
        let dec: DecoderModel = if i % 2 == 0 {
            AffineExpDecoder::random(l, f, 1.0, i as u64).into()
        } else {
            GruDecoder::random(l, f, 8, 1.0, i as u64).into()
        };
        let x = Array2::from_shape_simple_fn((t, f), || 2.0 * Distribution::<f64>::sample(&Exp1, &mut rng));
        let nmf = init_nmf(f, t, 2, i as u64, x.view()).map_err(|e| e.to_string())?;
        let tg = Posterior(SpeechLikelihood::new(&dec, x.view(), &nmf).map_err(|e| e.to_string())?);
        let z = randn((t, l), &mut rng);
        let g = score(&tg, z.view()).map_err(|e| e.to_string())?;
        let h = 1e-5;
        let mut num = 0.0;
        let mut den = 0.0;
        for idx in 0..t * l {
            let (r, c) = (idx / l, idx % l);
            let mut zp = z.clone();
            zp[[r, c]] += h;
            let mut zm = z.clone();
            zm[[r, c]] -= h;
            let fd = (tg.log_density(zp.view()).unwrap() - tg.log_density(zm.view()).unwrap()) / (2.0 * h);
            num += (g[[r, c]] - fd).powi(2);
            den += fd * fd;
        }
        worst = worst.max((num / den.max(1e-300)).sqrt());
    }
    within(Duration::from_secs(10), start.elapsed())?;
    let detail = format!("{instances} instances, worst relative error {worst:.2e}");
    if worst <= 1e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 2

struct Moments {
    mean: Array1<f64>,
    cov: Array2<f64>,
}

struct Accum {
    n: f64,
    sum: Array1<f64>,
    outer: Array2<f64>,
}

impl Accum {
    fn new(d: usize) -> Self {
        Accum {
            n: 0.0,
            sum: Array1::zeros(d),
            outer: Array2::zeros((d, d)),
        }
    }

    fn push(&mut self, z: ndarray::ArrayView1<f64>) {
        self.n += 1.0;
        self.sum += &z;
        for i in 0..z.len() {
            for j in 0..z.len() {
                self.outer[[i, j]] += z[i] * z[j];
            }
        }
    }

    fn finish(&self) -> Moments {
        let mean = &self.sum / self.n;
        let d = mean.len();
        let cov = Array2::from_shape_fn((d, d), |(i, j)| self.outer[[i, j]] / self.n - mean[i] * mean[j]);
        Moments { mean, cov }
    }
}

/// Largest mean error, and largest covariance error relative to
/// `sqrt(Σ_ii Σ_jj)`.
fn moment_errors(m: &Moments, tg: &GaussianTarget) -> (f64, f64) {
    let d = tg.mean.len();
    let mean_err = (0..d).map(|i| (m.mean[i] - tg.mean[i]).abs()).fold(0.0, f64::max);
    let mut cov_err: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let scale = (tg.cov[[i, i]] * tg.cov[[j, j]]).sqrt();
            cov_err = cov_err.max((m.cov[[i, j]] - tg.cov[[i, j]]).abs() / scale);
        }
    }
    (mean_err, cov_err)
}

const STEPS: usize = 100_000;
const BURN_IN: usize = 2_000;

fn run_ld(tg: &GaussianTarget, eta: f64, seed: u64) -> Result<Moments, String> {
    let (t, d) = tg.shape();
    let noise = NoiseSource::new(seed);
    let mut st = spawn_chains(Array2::zeros((t, d)).view(), 8, 1.0, &noise).map_err(|e| e.to_string())?;
    let mut acc = Accum::new(d);
    for k in 0..STEPS {
        ld_step(tg, &mut st, eta, &noise).map_err(|e| e.to_string())?;
        if k >= BURN_IN {
            for c in st.samples.axis_iter(Axis(0)) {
                for row in c.rows() {
                    acc.push(row);
                }
            }
        }
    }
    Ok(acc.finish())
}

fn run_single(tg: &GaussianTarget, kind: SamplerKind, step: f64, seed: u64) -> Result<(Moments, Vec<f64>), String> {
    let (t, d) = tg.shape();
    let noise = NoiseSource::new(seed);
    let mala = kind == SamplerKind::Mala;
    let mut chain = SingleChain::new(tg, Array2::zeros((t, d)), mala, 0).map_err(|e| e.to_string())?;
    let mut acc = Accum::new(d);
    let mut first = Vec::with_capacity(STEPS);
    for k in 0..STEPS {
        if mala {
            mala_step(tg, &mut chain, step, &noise)
        } else {
            mh_step(tg, &mut chain, step, &noise)
        }
        .map_err(|e| e.to_string())?;
        if k >= BURN_IN {
            for row in chain.z.rows() {
                acc.push(row);
            }
            first.push(chain.z[[0, 0]]);
        }
    }
    Ok((acc.finish(), first))
}

fn sampler_correctness() -> Outcome {
    let start = Instant::now();
    let targets = [
        GaussianTarget::new(8, array![1.0, -0.5], array![[1.0, 0.6], [0.6, 2.0]]),
        GaussianTarget::new(
            8,
            array![0.5, -1.0, 0.0, 2.0],
            Array2::from_shape_fn((4, 4), |(i, j)| {
                let s = [1.0, 0.7, 1.2, 1.0];
                0.5f64.powi(i.abs_diff(j) as i32) * s[i] * s[j]
            }),
        ),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (n, tg) in targets.iter().enumerate() {
        let tg = tg.as_ref().map_err(|e| e.to_string())?;
        let d = tg.mean.len() as f64;
        let avg_var = tg.cov.diag().sum() / d;
        let seed = 10 * n as u64;
        let runs = [
            ("ld", run_ld(tg, 0.02, seed)?),
            (
                "mh",
                run_single(tg, SamplerKind::Mh, 2.4 * 2.4 / d * avg_var, seed + 1)?.0,
            ),
            ("mala", run_single(tg, SamplerKind::Mala, 0.5, seed + 2)?.0),
        ];
        for (name, m) in &runs {
            let (me, ce) = moment_errors(m, tg);
            ok &= me <= 0.05 && ce <= 0.10;
            lines.push(format!(
                "{name}/dim{}: mean err {me:.3}, cov err {:.1}%",
                tg.mean.len(),
                100.0 * ce
            ));
        }
    }
    // KS on a 1-D Gaussian, thinned to roughly independent draws.
    let tg = GaussianTarget::new(1, array![1.0], array![[2.0]]).map_err(|e| e.to_string())?;
    let (_, xs) = run_single(&tg, SamplerKind::Mh, 6.0, 77)?;
    let thin = (2.0 * autocorr_time(&xs)).ceil().max(1.0) as usize;
    let kept: Vec<f64> = xs.iter().step_by(thin).copied().collect();
    let ks_d = ks_statistic(&kept, |x| normal_cdf(x, 1.0, 2f64.sqrt()));
    let p = ks_p_value(ks_d, kept.len());
    ok &= p > 0.01;
    lines.push(format!("mh KS p={p:.3} (n={}, thin {thin})", kept.len()));
    within(Duration::from_secs(60), start.elapsed())?;
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

// 3

fn mala_mh_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut steps = 0;
    let mut accepted = 0;
    for inst in 0..10u64 {
        let (t, l, f) = (6, 3, 10);
        let dec: DecoderModel = if inst % 2 == 0 {
            AffineExpDecoder::random(l, f, 1.0, inst).into()
        } else {
            GruDecoder::random(l, f, 5, 1.0, inst).into()
        };
        let x = Array2::from_shape_simple_fn((t, f), || Distribution::<f64>::sample(&Exp1, &mut rng));
        let nmf = init_nmf(f, t, 2, inst, x.view()).map_err(|e| e.to_string())?;
        let tg = Posterior(SpeechLikelihood::new(&dec, x.view(), &nmf).map_err(|e| e.to_string())?);
        let flat = ZeroDrift(&tg);
        let sigma2 = rng.random_range(0.01..0.5);
        let noise = NoiseSource::new(inst + 1000);
        let z0 = randn((t, l), &mut rng);
        let mut a = SingleChain::new(&tg, z0.clone(), false, 0).map_err(|e| e.to_string())?;
        let mut b = SingleChain::new(&flat, z0, true, 0).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let oa = mh_step(&tg, &mut a, sigma2, &noise).map_err(|e| e.to_string())?;
            let ob = mala_step(&flat, &mut b, sigma2, &noise).map_err(|e| e.to_string())?;
            let same_alpha = oa.alpha.iter().zip(&ob.alpha).all(|(p, q)| p.to_bits() == q.to_bits());
            if oa.accepted != ob.accepted || !same_alpha || a.z != b.z {
                return Err(format!("decisions diverged at step {steps}"));
            }
            accepted += oa.accepted.iter().filter(|&&x| x).count();
            steps += 1;
        }
    }
    Ok(format!("{steps} steps bit-identical ({accepted} frame acceptances)"))
}

// 4

fn nmf_ascent() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_drop: f64 = 0.0;
    let mut sweeps = 0;
    for inst in 0..100 {
        let f = rng.random_range(2..=16);
        let t = rng.random_range(2..=12);
        let r = rng.random_range(1..=4);
        let m = rng.random_range(1..=4);
        let x = Array2::from_shape_simple_fn((t, f), || {
            if rng.random_bool(0.1) {
                0.0
            } else {
                10f64.powf(rng.random_range(-2.0..2.0)) * Distribution::<f64>::sample(&Exp1, &mut rng)
            }
        });
        let vs: Vec<Array2<f64>> = (0..m)
            .map(|_| Array2::from_shape_simple_fn((t, f), || 10f64.powf(rng.random_range(-3.0..1.0))))
            .collect();
        let views: Vec<_> = vs.iter().map(|v| v.view()).collect();
        // Some factors start at the floor.
        let mut draw = |shape| {
            Array2::from_shape_simple_fn(shape, || {
                if rng.random_bool(0.15) {
                    0.0
                } else {
                    rng.random_range(0.0..2.0)
                }
            })
        };
        let mut p = NmfParams::new(draw((f, r)), draw((r, t))).map_err(|e| e.to_string())?;
        let avg = |p: &NmfParams| -> Result<f64, String> {
            let mut s = 0.0;
            for v in &views {
                s += mixture_loglik(x.view(), *v, p).map_err(|e| e.to_string())?;
            }
            Ok(s / views.len() as f64)
        };
        let mut prev = avg(&p)?;
        for sweep in 0..30 {
            p = mstep_update(&p, x.view(), &views).map_err(|e| e.to_string())?;
            if p.w.iter().chain(p.h.iter()).any(|&e| !(e >= NMF_FLOOR)) {
                return Err(format!("instance {inst}, sweep {sweep}: entry below the floor"));
            }
            let cur = avg(&p)?;
            worst_drop = worst_drop.max(prev - cur);
            if cur < prev - 1e-9 {
                return Err(format!(
                    "instance {inst}, sweep {sweep}: log-likelihood fell by {:.3e}",
                    prev - cur
                ));
            }
            prev = cur;
            sweeps += 1;
        }
    }
    Ok(format!(
        "100 instances, {sweeps} sweeps, largest decrease {worst_drop:.1e}, floor held"
    ))
}

// 5

fn stft_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let configs = [
        StftConfig::default(),
        StftConfig::new(512, 128, Window::SqrtHann).unwrap(),
        StftConfig::new(512, 256, Window::SqrtHann).unwrap(),
        StftConfig::new(256, 64, Window::Hann).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let len = rng.random_range(5_000..30_000);
        let samples: Vec<f32> = if i % 3 == 0 {
            (0..len)
                .map(|_| 0.3 * Distribution::<f32>::sample(&StandardNormal, &mut rng))
                .collect()
        } else {
            // Resonant AR(2) excitation with a syllable-rate envelope.
            let radius: f64 = rng.random_range(0.9..0.995);
            let theta: f64 = rng.random_range(0.05..1.0);
            let (a1, a2) = (2.0 * radius * theta.cos(), -radius * radius);
            let rate: f64 = rng.random_range(2.0..6.0) / 16_000.0;
            let (mut y1, mut y2) = (0.0, 0.0);
            let mut out = Vec::with_capacity(len);
            for n in 0..len {
                let e: f64 = Distribution::<f64>::sample(&StandardNormal, &mut rng);
                let y = a1 * y1 + a2 * y2 + e;
                y2 = y1;
                y1 = y;
                let env = 0.5 + 0.5 * (2.0 * std::f64::consts::PI * rate * n as f64).sin();
                out.push((0.01 * y * env) as f32);
            }
            out
        };
        let c = configs[i % configs.len()];
        let w = Waveform::new(samples, 16_000).map_err(|e| e.to_string())?;
        let back = istft(&stft(&w, &c).map_err(|e| e.to_string())?, &c).map_err(|e| e.to_string())?;
        if back.len() != w.len() {
            return Err(format!("waveform {i}: length {} became {}", w.len(), back.len()));
        }
        let interior = c.fft_size..len - c.fft_size;
        let mut num = 0.0;
        let mut den = 0.0;
        for n in interior {
            num += ((back.samples[n] - w.samples[n]) as f64).powi(2);
            den += (w.samples[n] as f64).powi(2);
        }
        worst = worst.max((num / den).sqrt());
    }
    let detail = format!("20 waveforms, worst interior relative error {worst:.2e}");
    if worst <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 6 and 8

fn enhancement(rows: &[BenchmarkRow], took: Duration) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in SamplerKind::ALL {
        let sel: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.sampler == kind).collect();
        let min_gain = sel
            .iter()
            .map(|r| r.si_sdr_out - r.si_sdr_in)
            .fold(f64::INFINITY, f64::min);
        let min_mono = sel.iter().map(|r| r.trace_monotone).fold(f64::INFINITY, f64::min);
        let short = sel.iter().filter(|r| r.trace_monotone < 0.9).count();
        ok &= min_gain >= 3.0 && short == 0;
        lines.push(format!(
            "{kind}: min SI-SDR gain {min_gain:.2} dB, min non-decreasing share {min_mono:.2} ({short}/{} runs below 0.90)",
            sel.len()
        ));
    }
    within(Duration::from_secs(300), took)?;
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn efficiency_ordering(rows: &[BenchmarkRow]) -> Outcome {
    let rtf: Vec<f64> = SamplerKind::ALL
        .iter()
        .map(|k| sampler_mean(rows, *k, |r| r.rtf))
        .collect();
    let detail = format!("mean RTF ld {:.3}, mh {:.3}, mala {:.3}", rtf[0], rtf[1], rtf[2]);
    if rtf[0] < rtf[1] && rtf[1] < rtf[2] {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 7 and 9

struct Fixture {
    dir: PathBuf,
    noisy: PathBuf,
    decoder: PathBuf,
}

fn mcem(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mcem"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "mcem {} exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn fixture() -> Result<Fixture, String> {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let decoder = dir.join("decoder.bin");
    let sc = SynthConfig::default();
    mcem(&[
        "gen-decoder",
        "--fft-size",
        &sc.stft.fft_size.to_string(),
        "--latent-dim",
        &sc.latent_dim.to_string(),
        "--output",
        decoder.to_str().unwrap(),
    ])?;
    let dec = mcem_core::prior::load_decoder(&decoder).map_err(|e| e.to_string())?;
    let mix = generate_mixture(&dec, &sc, 0.0, 9).map_err(|e| e.to_string())?;
    let noisy = dir.join("noisy.wav");
    write_wav(&noisy, &mix.noisy_wave, WavEncoding::Pcm16).map_err(|e| e.to_string())?;
    Ok(Fixture { dir, noisy, decoder })
}

fn report_value<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

fn configuration_fidelity(fx: &Fixture) -> Outcome {
    let ld = EmConfig::defaults(SamplerKind::Ld);
    let mh = EmConfig::defaults(SamplerKind::Mh);
    let mala = EmConfig::defaults(SamplerKind::Mala);
    let core_ok = ld.iterations == 100
        && DEFAULT_ITERATIONS == 100
        && ld.sampler.eta == 0.005
        && ld.sampler.sigma2 == 0.02
        && ld.sampler.steps == 1
        && [mh, mala].iter().all(|c| {
            c.iterations == 100
                && c.sampler.eta == 0.005
                && c.sampler.sigma2 == 0.02
                && c.sampler.steps == 10
                && c.sampler.burn_in == 5
        });
    if !core_ok {
        return Err("library defaults differ from J=100, eta=0.005, sigma2=0.02, K=1/10, burn-in 5".into());
    }
    let help = mcem(&["enhance", "--help"])?;
    let expect = [
        ("--iterations", "[default: 100]"),
        ("--eta", "[default: 0.005]"),
        ("--sigma2", "[default: 0.02]"),
        ("--K", "[default: 1 for ld, 10 for mh and mala]"),
        ("--burn-in", "[default: 5]"),
    ];
    for (flag, default) in expect {
        let line = help
            .lines()
            .find(|l| {
                l.split_whitespace()
                    .any(|w| w == flag || w.starts_with(&format!("{flag}=")))
            })
            .ok_or_else(|| format!("--help does not list {flag}"))?;
        if !line.contains(default) {
            return Err(format!("--help line for {flag} lacks {default}: {line}"));
        }
    }
    // The binary must resolve to the same values when no flag is given.
    let mut echoed = Vec::new();
    for (sampler, k, burn) in [("ld", "1", None), ("mh", "10", Some("5")), ("mala", "10", Some("5"))] {
        let out = fx.dir.join(format!("defaults_{sampler}.wav"));
        let report = mcem(&[
            "enhance",
            "-i",
            fx.noisy.to_str().unwrap(),
            "-o",
            out.to_str().unwrap(),
            "-d",
            fx.decoder.to_str().unwrap(),
            "--fft-size",
            "512",
            "--sampler",
            sampler,
        ])?;
        let want = [
            ("iterations", Some("100")),
            ("eta", Some("0.005")),
            ("sigma2", Some("0.02")),
            ("K", Some(k)),
            ("burn_in", burn),
        ];
        for (key, value) in want {
            if let Some(v) = value {
                if report_value(&report, key) != Some(v) {
                    return Err(format!(
                        "{sampler} run reports {key}={:?}, expected {v}",
                        report_value(&report, key)
                    ));
                }
            }
        }
        echoed.push(sampler);
    }
    Ok(format!(
        "library defaults, --help text and resolved runs ({}) agree",
        echoed.join(", ")
    ))
}

fn strip_timing(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.starts_with("seconds=") && !l.starts_with("rtf="))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism(fx: &Fixture) -> Outcome {
    let mut lines = Vec::new();
    for sampler in ["ld", "mala"] {
        let out = fx.dir.join(format!("det_{sampler}.wav"));
        let report = fx.dir.join(format!("det_{sampler}.txt"));
        let mut runs = Vec::new();
        for _ in 0..2 {
            mcem(&[
                "enhance",
                "-i",
                fx.noisy.to_str().unwrap(),
                "-o",
                out.to_str().unwrap(),
                "-d",
                fx.decoder.to_str().unwrap(),
                "--fft-size",
                "512",
                "--sampler",
                sampler,
                "--seed",
                "7",
                "--report",
                report.to_str().unwrap(),
            ])?;
            let wav = std::fs::read(&out).map_err(|e| e.to_string())?;
            let rep = std::fs::read_to_string(&report).map_err(|e| e.to_string())?;
            runs.push((wav, rep));
        }
        if runs[0].0 != runs[1].0 {
            return Err(format!("{sampler}: enhanced WAV bytes differ"));
        }
        if strip_timing(&runs[0].1) != strip_timing(&runs[1].1) {
            return Err(format!("{sampler}: reports differ outside timing fields"));
        }
        lines.push(format!("{sampler}: {} WAV bytes identical", runs[0].0.len()));
    }
    Ok(lines.join("; "))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut record = |n, name, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} criterion {n} ({name}): {detail} [{:.1}s]", took.as_secs_f64());
        results.push((n, name, outcome, took));
    };

    record(1, "gradient exactness", &mut gradient_exactness);
    record(2, "sampler correctness", &mut sampler_correctness);
    record(3, "MALA to MH reduction", &mut mala_mh_reduction);
    record(4, "NMF M-step ascent", &mut nmf_ascent);
    record(5, "STFT round trip", &mut stft_round_trip);

    let bench_start = Instant::now();
    let bench = run_benchmark(
        &BenchmarkConfig {
            snrs_db: vec![0.0],
            ..BenchmarkConfig::default()
        },
        |_| {},
    );
    let bench_time = bench_start.elapsed();
    match &bench {
        Ok(rows) => {
            record(6, "synthetic enhancement", &mut || enhancement(rows, bench_time));
            record(8, "efficiency ordering", &mut || efficiency_ordering(rows));
        }
        Err(e) => {
            let msg = format!("benchmark failed: {e}");
            record(6, "synthetic enhancement", &mut || Err(msg.clone()));
            record(8, "efficiency ordering", &mut || Err(msg.clone()));
        }
    }

    match fixture() {
        Ok(fx) => {
            record(7, "shipped configuration defaults", &mut || configuration_fidelity(&fx));
            record(9, "determinism", &mut || determinism(&fx));
        }
        Err(e) => {
            record(7, "shipped configuration defaults", &mut || Err(e.clone()));
            record(9, "determinism", &mut || Err(e.clone()));
        }
    }

    results.sort_by_key(|r| r.0);
    let failed: Vec<String> = results
        .iter()
        .filter(|r| r.2.is_err())
        .map(|r| r.0.to_string())
        .collect();
    println!();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!(
            "acceptance: {} of {} criteria failed ({})",
            failed.len(),
            results.len(),
            failed.join(", ")
        );
        std::process::exit(1);
    }
}
