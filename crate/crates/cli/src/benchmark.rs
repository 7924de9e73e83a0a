use std::io::Write;
use std::str::FromStr;

use mcem_core::samplers::SamplerKind;
use mcem_core::synth::{run_benchmark, sampler_mean, BenchmarkConfig, BenchmarkRow};

use crate::args::BenchmarkArgs;
use crate::CliError;

pub fn run(a: &BenchmarkArgs) -> Result<(), CliError> {
    let mut cfg = BenchmarkConfig {
        utterances: a.utterances,
        snrs_db: a.snr.clone(),
        iterations: a.iterations,
        seed: a.seed,
        ..BenchmarkConfig::default()
    };
    cfg.samplers = a
        .samplers
        .iter()
        .map(|s| SamplerKind::from_str(s))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(t) = a.frames {
        cfg.synth.frames = t;
    }
    if let Some(l) = a.latent_dim {
        cfg.synth.latent_dim = l;
    }
    if let Some(n) = a.fft_size {
        cfg.synth.stft.fft_size = n;
        cfg.synth.stft.hop_size = n / 4;
    }
    if cfg.iterations == 0 || cfg.utterances == 0 || cfg.snrs_db.is_empty() {
        return Err(CliError::Usage(
            "utterances, iterations and snr must be non-empty".into(),
        ));
    }
    cfg.synth.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "{}", BenchmarkRow::CSV_HEADER)?;
    let mut io_err = None;
    let rows = run_benchmark(&cfg, |row| {
        if let Err(e) = writeln!(out, "{}", row.to_csv()) {
            io_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    if let Some(p) = &a.csv {
        let mut text = String::from(BenchmarkRow::CSV_HEADER);
        text.push('\n');
        for r in &rows {
            text.push_str(&r.to_csv());
            text.push('\n');
        }
        std::fs::write(p, text)?;
    }
    writeln!(out)?;
    for kind in &cfg.samplers {
        let k = kind.name();
        writeln!(
            out,
            "mean_si_sdr_in_db.{k}={:.4}",
            sampler_mean(&rows, *kind, |r| r.si_sdr_in)
        )?;
        writeln!(
            out,
            "mean_si_sdr_out_db.{k}={:.4}",
            sampler_mean(&rows, *kind, |r| r.si_sdr_out)
        )?;
        writeln!(
            out,
            "mean_improvement_db.{k}={:.4}",
            sampler_mean(&rows, *kind, |r| r.si_sdr_out - r.si_sdr_in)
        )?;
        writeln!(out, "mean_rtf.{k}={:.6}", sampler_mean(&rows, *kind, |r| r.rtf))?;
        writeln!(
            out,
            "mean_trace_monotone.{k}={:.4}",
            sampler_mean(&rows, *kind, |r| r.trace_monotone)
        )?;
    }
    if cfg.samplers == SamplerKind::ALL {
        let rtf: Vec<f64> = SamplerKind::ALL
            .iter()
            .map(|k| sampler_mean(&rows, *k, |r| r.rtf))
            .collect();
        writeln!(out, "rtf_ordering=ld<mh<mala")?;
        writeln!(out, "rtf_ordering_holds={}", rtf[0] < rtf[1] && rtf[1] < rtf[2])?;
    }
    Ok(())
}
