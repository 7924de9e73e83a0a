use mcem_core::prior::{save_decoder, DecoderModel, GruDecoder};
use mcem_core::synth::toy_speech_decoder;

use crate::args::{Arch, GenArgs};
use crate::CliError;

pub fn run(a: &GenArgs) -> Result<(), CliError> {
    let freq = a.freq_dim.unwrap_or(a.fft_size / 2 + 1);
    if a.latent_dim == 0 || freq == 0 || a.hidden == 0 {
        return Err(CliError::Usage(
            "latent-dim, freq-dim and hidden must be positive".into(),
        ));
    }
    let model: DecoderModel = match a.arch {
        Arch::AffineExp => toy_speech_decoder(a.latent_dim, freq, a.seed).into(),
        Arch::Gru => GruDecoder::random(a.latent_dim, freq, a.hidden, 1.0, a.seed).into(),
    };
    save_decoder(&a.output, &model)?;
    println!("arch={}", model.arch().name());
    println!("latent_dim={}", a.latent_dim);
    println!("freq_dim={freq}");
    println!("output={}", a.output.display());
    Ok(())
}
