use std::fmt::Write as _;

use mcem_core::em::{run_em, EnhanceResult, MstepSamples, ZInit};
use mcem_core::metrics::measure_rtf;
use mcem_core::prior::{load_decoder, Decoder};
use mcem_core::spectral::{istft, stft};
use mcem_core::wav::{read_wav, write_wav, WavEncoding};
use mcem_core::Error;

use crate::args::{Encoding, EnhanceArgs};
use crate::config::{resolve, Resolved};
use crate::report::Report;
use crate::{context, CliError};

pub fn run(a: &EnhanceArgs) -> Result<(), CliError> {
    let Resolved { em, stft: sc } = resolve(&a.em)?;
    let (wave, in_enc) = context(read_wav(&a.input), || format!("input {}", a.input.display()))?;
    let dec = context(load_decoder(&a.decoder), || format!("decoder {}", a.decoder.display()))?;
    let spec = stft(&wave, &sc)?;
    if dec.freq_dim() != spec.bins() {
        return Err(Error::InvalidInput(format!(
            "decoder expects {} frequency bins but fft-size {} gives {}",
            dec.freq_dim(),
            sc.fft_size,
            spec.bins()
        ))
        .into());
    }
    let res = run_em(&spec, &dec, &em)?;
    let out = istft(&res.s_hat, &sc)?;
    let enc = match a.encoding {
        Some(Encoding::Pcm16) => WavEncoding::Pcm16,
        Some(Encoding::Float32) => WavEncoding::Float32,
        None => in_enc,
    };
    context(write_wav(&a.output, &out, enc), || {
        format!("output {}", a.output.display())
    })?;
    if let Some(p) = &a.diag {
        std::fs::write(p, diag_dump(&res))?;
    }

    let mut r = Report::default();
    r.push("command", "enhance");
    r.push("input", a.input.display());
    r.push("output", a.output.display());
    r.push("decoder", a.decoder.display());
    r.push("decoder_arch", dec.arch().name());
    r.push("latent_dim", dec.latent_dim());
    r.push("sampler", em.sampler.kind);
    r.push("iterations", em.iterations);
    r.push("eta", em.sampler.eta);
    r.push("sigma2", em.sampler.sigma2);
    r.push("K", em.sampler.steps);
    r.push("burn_in", em.sampler.burn_in);
    r.push("chains", em.sampler.chains);
    r.push("nmf_rank", em.nmf_rank);
    r.push("seed", em.sampler.seed);
    r.push(
        "z_init",
        match em.z_init {
            ZInit::Zeros => "zeros".to_string(),
            ZInit::PriorDraw => "prior".to_string(),
            ZInit::WarmupLd(n) => format!("warmup:{n}"),
        },
    );
    r.push(
        "mstep_samples",
        match em.mstep_samples {
            MstepSamples::All => "all",
            MstepSamples::Last => "last",
        },
    );
    r.push("fft_size", sc.fft_size);
    r.push("hop_size", sc.hop_size);
    r.push("window", sc.window.name());
    r.push("sample_rate", wave.sample_rate);
    r.push("samples", out.len());
    r.push("frames", spec.frames());
    r.push("duration_seconds", wave.duration_seconds());
    r.push("final_loglik", res.trace.last().copied().unwrap_or(f64::NAN));
    for (j, ll) in res.trace.iter().enumerate() {
        r.push(format!("trace.{}", j + 1), ll);
    }
    r.timing("seconds", res.seconds);
    r.timing("rtf", measure_rtf(res.seconds, wave.duration_seconds())?);
    r.emit(a.report.as_deref())?;
    Ok(())
}

/// `iter=j step=k log_density=..` lines, then one acceptance line per
/// iteration for single-chain samplers.
fn diag_dump(res: &EnhanceResult) -> String {
    let mut s = String::new();
    for (j, d) in res.diagnostics.iter().enumerate() {
        for (k, ld) in d.log_density.iter().enumerate() {
            let _ = writeln!(s, "iter={} step={} log_density={}", j + 1, k, ld);
        }
        if !d.frame_acceptance.is_empty() {
            let rates: Vec<String> = d.frame_acceptance.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(s, "iter={} acceptance={}", j + 1, rates.join(","));
        }
    }
    s
}
