//! BPSK transmission over an AWGN channel.
//!
//! Codewords are mapped to bipolar symbols `x = 1 - 2c`, Gaussian noise with
//! standard deviation sigma is added, and the decoder input is the channel
//! LLR `2y / sigma^2` (positive sign means bit 0). All functions are pure:
//! callers pass an explicit random stream, so samples can be drawn
//! concurrently from disjoint substreams.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("codeword entry at position {index} is not 0 or 1")]
    NonBinarySymbol { index: usize },
    #[error("code rate must lie in (0, 1], got {rate}")]
    RateOutOfRange { rate: f64 },
}

/// One simulated transmission, from codeword to decoder input.
#[derive(Debug, Clone)]
pub struct ChannelSample {
    pub codeword: Vec<u8>,
    pub bipolar: Vec<f64>,
    pub received: Vec<f64>,
    pub llr: Vec<f64>,
    pub sigma: f64,
    pub ebn0_db: f64,
}

/// Maps bits to bipolar symbols: `x = 1 - 2c`.
pub fn modulate(c: &[u8]) -> Result<Vec<f64>, ChannelError> {
    c.iter()
        .enumerate()
        .map(|(index, &bit)| match bit {
            0 => Ok(1.0),
            1 => Ok(-1.0),
            _ => Err(ChannelError::NonBinarySymbol { index }),
        })
        .collect()
}

/// Noise standard deviation for a given Eb/N0 in dB at code rate k/n:
/// `sigma = sqrt(1 / (2 * rate * 10^(ebn0_db / 10)))`.
pub fn ebn0_to_sigma(ebn0_db: f64, rate: f64) -> Result<f64, ChannelError> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(ChannelError::RateOutOfRange { rate });
    }
    Ok((1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt())
}

/// Adds i.i.d. Gaussian noise of standard deviation `sigma` to each symbol.
pub fn add_awgn<R: Rng + ?Sized>(x: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    assert!(sigma > 0.0, "noise standard deviation must be positive");
    x.iter()
        .map(|&xi| xi + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Channel LLRs for AWGN: `2y / sigma^2`, positive sign meaning bit 0.
pub fn llr_from_channel(y: &[f64], sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "noise standard deviation must be positive");
    let scale = 2.0 / (sigma * sigma);
    y.iter().map(|&yi| scale * yi).collect()
}

/// Runs the full chain for one codeword at the given SNR.
pub fn transmit<R: Rng + ?Sized>(
    codeword: &[u8],
    ebn0_db: f64,
    rate: f64,
    rng: &mut R,
) -> Result<ChannelSample, ChannelError> {
    let sigma = ebn0_to_sigma(ebn0_db, rate)?;
    let bipolar = modulate(codeword)?;
    let received = add_awgn(&bipolar, sigma, rng);
    let llr = llr_from_channel(&received, sigma);
    Ok(ChannelSample {
        codeword: codeword.to_vec(),
        bipolar,
        received,
        llr,
        sigma,
        ebn0_db,
    })
}
