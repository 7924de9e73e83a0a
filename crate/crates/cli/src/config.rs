//! Flat `key=value` config files and flag resolution.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use mcem_core::em::{EmConfig, MstepSamples, ZInit, DEFAULT_WARMUP_STEPS};
use mcem_core::samplers::SamplerKind;
use mcem_core::spectral::{StftConfig, Window};

use crate::args::EmFlags;
use crate::CliError;

const KEYS: &[&str] = &[
    "sampler",
    "iterations",
    "eta",
    "sigma2",
    "K",
    "burn-in",
    "chains",
    "nmf-rank",
    "seed",
    "z-init",
    "warmup-steps",
    "mstep-samples",
    "fft-size",
    "hop-size",
    "window",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    /// Blank lines and `#` comments are skipped; keys may use `_` for `-`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
            let k = k.trim().replace('_', "-");
            let key = KEYS
                .iter()
                .find(|known| known.eq_ignore_ascii_case(&k))
                .ok_or_else(|| CliError::Usage(format!("config line {}: unknown key `{k}`", n + 1)))?;
            values.insert(key.to_string(), v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| CliError::Usage(format!("config key `{key}`: invalid value `{v}`: {e}")))
            })
            .transpose()
    }
}

fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

fn parse_with<T>(s: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<T, CliError> {
    f(s).ok_or_else(|| CliError::Usage(format!("invalid {what} `{s}`")))
}

/// Fully resolved settings for one enhancement run.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub em: EmConfig,
    pub stft: StftConfig,
}

pub fn resolve(flags: &EmFlags) -> Result<Resolved, CliError> {
    let file = match &flags.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    resolve_with(flags, &file)
}

pub fn resolve_with(flags: &EmFlags, file: &ConfigFile) -> Result<Resolved, CliError> {
    let kind = match pick(flags.sampler.clone(), file, "sampler")? {
        Some(s) => SamplerKind::from_str(&s).map_err(|e| CliError::Usage(e.to_string()))?,
        None => SamplerKind::Ld,
    };
    let mut em = EmConfig::defaults(kind);
    if let Some(v) = pick(flags.iterations, file, "iterations")? {
        em.iterations = v;
    }
    if let Some(v) = pick(flags.eta, file, "eta")? {
        em.sampler.eta = v;
    }
    if let Some(v) = pick(flags.sigma2, file, "sigma2")? {
        em.sampler.sigma2 = v;
    }
    if let Some(v) = pick(flags.k, file, "K")? {
        em.sampler.steps = v;
    }
    if let Some(v) = pick(flags.burn_in, file, "burn-in")? {
        em.sampler.burn_in = v;
    }
    if let Some(v) = pick(flags.chains, file, "chains")? {
        em.sampler.chains = v;
    }
    if let Some(v) = pick(flags.nmf_rank, file, "nmf-rank")? {
        em.nmf_rank = v;
    }
    if let Some(v) = pick(flags.seed, file, "seed")? {
        em.sampler.seed = v;
        em.nmf_seed = v;
    }
    let warmup = pick(flags.warmup_steps, file, "warmup-steps")?.unwrap_or(DEFAULT_WARMUP_STEPS);
    em.z_init = match pick(flags.z_init.clone(), file, "z-init")?.as_deref() {
        None | Some("warmup") => ZInit::WarmupLd(warmup),
        Some(s) => parse_with(s, "z-init", |s| match s {
            "zeros" => Some(ZInit::Zeros),
            "prior" => Some(ZInit::PriorDraw),
            _ => None,
        })?,
    };
    if let Some(s) = pick(flags.mstep_samples.clone(), file, "mstep-samples")? {
        em.mstep_samples = parse_with(&s, "mstep-samples", |s| match s {
            "all" => Some(MstepSamples::All),
            "last" => Some(MstepSamples::Last),
            _ => None,
        })?;
    }
    em.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut stft = StftConfig::default();
    if let Some(v) = pick(flags.fft_size, file, "fft-size")? {
        stft.fft_size = v;
        stft.hop_size = v / 4;
    }
    if let Some(v) = pick(flags.hop_size, file, "hop-size")? {
        stft.hop_size = v;
    }
    if let Some(s) = pick(flags.window.clone(), file, "window")? {
        stft.window = Window::from_str(&s).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    stft.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Resolved { em, stft })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_flags_or_file() {
        let r = resolve_with(&EmFlags::default(), &ConfigFile::default()).unwrap();
        assert_eq!(r.em, EmConfig::defaults(SamplerKind::Ld));
        assert_eq!(r.stft, StftConfig::default());
    }

    #[test]
    fn sampler_choice_sets_its_step_defaults() {
        let flags = EmFlags {
            sampler: Some("mh".into()),
            ..EmFlags::default()
        };
        let r = resolve_with(&flags, &ConfigFile::default()).unwrap();
        assert_eq!((r.em.sampler.steps, r.em.sampler.burn_in), (10, 5));
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file = ConfigFile::parse("# comment\neta = 0.01\nsampler=mala\nnmf_rank=4\n").unwrap();
        let flags = EmFlags {
            eta: Some(0.02),
            ..EmFlags::default()
        };
        let r = resolve_with(&flags, &file).unwrap();
        assert_eq!(r.em.sampler.eta, 0.02);
        assert_eq!(r.em.sampler.kind, SamplerKind::Mala);
        assert_eq!(r.em.nmf_rank, 4);
        assert_eq!(r.em.iterations, 100);
    }

    #[test]
    fn bad_file_lines_are_usage_errors() {
        assert!(matches!(ConfigFile::parse("nonsense"), Err(CliError::Usage(_))));
        assert!(matches!(ConfigFile::parse("colour=red"), Err(CliError::Usage(_))));
        let file = ConfigFile::parse("eta=fast").unwrap();
        assert!(matches!(
            resolve_with(&EmFlags::default(), &file),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn invalid_ranges_rejected() {
        let flags = EmFlags {
            sampler: Some("mh".into()),
            burn_in: Some(10),
            ..EmFlags::default()
        };
        assert!(resolve_with(&flags, &ConfigFile::default()).is_err());
        let flags = EmFlags {
            hop_size: Some(0),
            ..EmFlags::default()
        };
        assert!(resolve_with(&flags, &ConfigFile::default()).is_err());
    }

    #[test]
    fn fft_size_alone_keeps_quarter_hop() {
        let flags = EmFlags {
            fft_size: Some(512),
            ..EmFlags::default()
        };
        let r = resolve_with(&flags, &ConfigFile::default()).unwrap();
        assert_eq!((r.stft.fft_size, r.stft.hop_size), (512, 128));
    }
}
