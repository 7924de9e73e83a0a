use std::fmt::Write as _;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};

use mcem_core::diag::{autocorr_time, ks_p_value, ks_statistic, normal_cdf};
use mcem_core::samplers::{
    ld_step, mala_step, mh_step, spawn_chains, GaussianTarget, NoiseSource, SamplerKind, SingleChain,
};

use crate::args::DiagArgs;
use crate::CliError;

/// Unit-variance target whose neighbouring coordinates correlate by `rho`.
fn target(a: &DiagArgs) -> Result<GaussianTarget, CliError> {
    let d = a.dim;
    let cov = Array2::from_shape_fn((d, d), |(i, j)| match i.abs_diff(j) {
        0 => 1.0,
        1 => a.rho,
        _ => 0.0,
    });
    GaussianTarget::new(1, Array1::from_elem(d, a.mean), cov).map_err(|e| CliError::Usage(e.to_string()))
}

struct Trace {
    /// Mean log-density of the chains before each step.
    log_density: Vec<f64>,
    /// Fraction of proposals accepted at each step (MH/MALA).
    acceptance: Vec<f64>,
    /// Post-burn-in draws of coordinate 0 of chain 0.
    coord0: Vec<f64>,
    /// Post-burn-in draws of all coordinates, pooled over chains (n×d).
    pooled: Vec<Vec<f64>>,
}

fn simulate(kind: SamplerKind, tg: &GaussianTarget, a: &DiagArgs) -> Result<Trace, CliError> {
    let d = a.dim;
    let noise = NoiseSource::new(a.seed);
    let z0 = Array2::<f64>::zeros((1, d));
    let mut tr = Trace {
        log_density: Vec::with_capacity(a.steps),
        acceptance: Vec::new(),
        coord0: Vec::new(),
        pooled: Vec::new(),
    };
    match kind {
        SamplerKind::Ld => {
            let mut st = spawn_chains(z0.view(), a.chains, a.sigma2, &noise)?;
            for k in 0..a.steps {
                tr.log_density.push(ld_step(tg, &mut st, a.eta, &noise)?);
                if k >= a.burn_in {
                    tr.coord0.push(st.samples[[0, 0, 0]]);
                    for c in st.samples.axis_iter(Axis(0)) {
                        tr.pooled.push(c.row(0).to_vec());
                    }
                }
            }
        }
        SamplerKind::Mh | SamplerKind::Mala => {
            let mala = kind == SamplerKind::Mala;
            let mut chain = SingleChain::new(tg, z0, mala, 0)?;
            for k in 0..a.steps {
                tr.log_density.push(chain.total_log_density());
                let out = if mala {
                    mala_step(tg, &mut chain, a.eta, &noise)?
                } else {
                    mh_step(tg, &mut chain, a.sigma2, &noise)?
                };
                tr.acceptance.push(out.acceptance_rate());
                if k >= a.burn_in {
                    tr.coord0.push(chain.z[[0, 0]]);
                    tr.pooled.push(chain.z.row(0).to_vec());
                }
            }
        }
    }
    Ok(tr)
}

pub fn run(a: &DiagArgs) -> Result<(), CliError> {
    if a.dim == 0 || a.steps <= a.burn_in || a.chains == 0 {
        return Err(CliError::Usage("need dim >= 1, chains >= 1 and steps > burn-in".into()));
    }
    if !(a.eta > 0.0 && a.sigma2 >= 0.0 && a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Usage(
            "eta must be positive, sigma2 non-negative and alpha in (0,1)".into(),
        ));
    }
    let kinds: Vec<SamplerKind> = a
        .samplers
        .iter()
        .map(|s| SamplerKind::from_str(s))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let tg = target(a)?;
    let mut csv = String::from("sampler,step,log_density,acceptance\n");
    for kind in kinds {
        let tr = simulate(kind, &tg, a)?;
        for (k, ld) in tr.log_density.iter().enumerate() {
            let acc = tr.acceptance.get(k).map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(csv, "{kind},{k},{ld},{acc}");
        }
        let n = tr.pooled.len() as f64;
        println!("sampler={kind}");
        println!("target_mean={}", a.mean);
        println!("target_var=1");
        if !tr.acceptance.is_empty() {
            let rate = tr.acceptance.iter().sum::<f64>() / tr.acceptance.len() as f64;
            println!("acceptance_rate={rate:.6}");
        }
        for i in 0..a.dim {
            let mean = tr.pooled.iter().map(|z| z[i]).sum::<f64>() / n;
            let var = tr.pooled.iter().map(|z| (z[i] - mean).powi(2)).sum::<f64>() / n;
            println!("mean.{i}={mean:.6}");
            println!("var.{i}={var:.6}");
        }
        // Thin to roughly independent draws before the KS test.
        let tau = autocorr_time(&tr.coord0);
        let thin = (2.0 * tau).ceil().max(1.0) as usize;
        let kept: Vec<f64> = tr.coord0.iter().step_by(thin).copied().collect();
        let d = ks_statistic(&kept, |x| normal_cdf(x, a.mean, 1.0));
        let p = ks_p_value(d, kept.len());
        println!("autocorr_time={tau:.3}");
        println!("ks_thin={thin}");
        println!("ks_n={}", kept.len());
        println!("ks_d={d:.6}");
        println!("ks_p={p:.6}");
        println!("ks_verdict={}", if p > a.alpha { "pass" } else { "fail" });
    }
    if let Some(p) = &a.trace {
        std::fs::write(p, csv)?;
    }
    Ok(())
}
