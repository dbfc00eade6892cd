//! Binary erasure channel and the Monte-Carlo BER harness.
//!
//! Randomness is reproducible across runs and platforms: every trial owns a
//! ChaCha8 stream (`rand_chacha` 0.9) seeded with
//! `splitmix64(master_seed ^ splitmix64(trial_index))`. A trial first draws
//! its information bits (one `next_u64` per bit, lowest bit kept), then one
//! `next_u64` per transmitted bit; a bit is erased iff that draw is below
//! `ε·2^64`. The same trial therefore sees nested erasure patterns at
//! increasing `ε`.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::erasure::{ErasureVec, Symbol};
use crate::error::{Error, Result};
use crate::pic::{PicCode, PicConfig};

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(trial))
}

/// Random stream of one trial.
pub struct TrialRng(ChaCha8Rng);

impl TrialRng {
    pub fn new(master_seed: u64, trial: u64) -> Self {
        TrialRng(ChaCha8Rng::seed_from_u64(trial_seed(master_seed, trial)))
    }

    pub fn info_bits(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| (self.0.next_u64() & 1) as u8).collect()
    }

    /// Passes `bits` through a BEC with erasure probability `epsilon`.
    pub fn transmit(&mut self, channel: &BecChannel, bits: &[u8]) -> ErasureVec {
        let threshold = channel.threshold();
        bits.iter()
            .map(|&b| {
                if (self.0.next_u64() as u128) < threshold {
                    Symbol::Erased
                } else {
                    Symbol::known(b)
                }
            })
            .collect()
    }
}

/// Binary erasure channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BecChannel {
    pub epsilon: f64,
}

impl BecChannel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidConfig(format!("erasure probability {epsilon} outside [0, 1]")));
        }
        Ok(BecChannel { epsilon })
    }

    /// Draws below this value (out of `2^64`) erase a bit.
    fn threshold(&self) -> u128 {
        (self.epsilon * 18_446_744_073_709_551_616.0) as u128
    }
}

/// Transmits `bits` with the stream of `(master_seed, trial)`.
pub fn bec_transmit(channel: &BecChannel, bits: &[u8], master_seed: u64, trial: u64) -> ErasureVec {
    TrialRng::new(master_seed, trial).transmit(channel, bits)
}

/// How an unresolved erasure is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorAccounting {
    /// One bit error per erased information bit.
    #[default]
    Full,
    /// Half a bit error per erased information bit (a coin-flip guess).
    Half,
}

/// Aggregate over the trials at one erasure probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub epsilon: f64,
    pub trials: u64,
    pub info_bits: u64,
    pub residual_erasures: u64,
    pub ber: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

/// Outcome of a single chain transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub info_bits: usize,
    pub residual_erasures: usize,
    pub sweeps_used: usize,
}

/// Encodes fresh random information, sends it over the BEC and decodes.
pub fn run_trial(code: &PicCode, channel: &BecChannel, master_seed: u64, trial: u64) -> Result<TrialOutcome> {
    let mut rng = TrialRng::new(master_seed, trial);
    let info = rng.info_bits(code.info_len());
    let tx = code.transmitted_bits(&code.encode(&info)?);
    let rx = rng.transmit(channel, &tx);
    let out = code.decode_channel(&rx)?;
    debug_assert!(out.info.consistent_with(&info));
    Ok(TrialOutcome {
        info_bits: info.len(),
        residual_erasures: out.residual_erasures,
        sweeps_used: out.sweeps_used,
    })
}

/// BER versus erasure probability. Trials run in parallel; the reduction is
/// an integer sum and does not depend on scheduling.
pub fn run_ber_experiment(
    config: &PicConfig,
    epsilons: &[f64],
    trials: u64,
    master_seed: u64,
    accounting: ErrorAccounting,
) -> Result<Vec<BerRecord>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    let code = PicCode::new(config.clone())?;
    epsilons
        .iter()
        .map(|&eps| {
            let channel = BecChannel::new(eps)?;
            let start = Instant::now();
            let outcomes = (0..trials)
                .into_par_iter()
                .map(|i| run_trial(&code, &channel, master_seed, i))
                .collect::<Result<Vec<_>>>()?;
            let info_bits: u64 = outcomes.iter().map(|o| o.info_bits as u64).sum();
            let residual: u64 = outcomes.iter().map(|o| o.residual_erasures as u64).sum();
            let scale = match accounting {
                ErrorAccounting::Full => 1.0,
                ErrorAccounting::Half => 0.5,
            };
            Ok(BerRecord {
                epsilon: eps,
                trials,
                info_bits,
                residual_erasures: residual,
                ber: scale * residual as f64 / info_bits as f64,
                wall_time: Some(start.elapsed().as_secs_f64()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pic::Rational;

    #[test]
    fn channel_extremes() {
        let bits: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
        let rx = bec_transmit(&BecChannel::new(0.0).unwrap(), &bits, 1, 0);
        assert_eq!(rx, ErasureVec::from_bits(&bits));
        let rx = bec_transmit(&BecChannel::new(1.0).unwrap(), &bits, 1, 0);
        assert_eq!(rx.erased_count(), 1000);
        assert!(BecChannel::new(1.5).is_err());
    }

    #[test]
    fn channel_erasure_rate() {
        let bits = vec![1u8; 1_000_000];
        let rx = bec_transmit(&BecChannel::new(0.5).unwrap(), &bits, 42, 3);
        let frac = rx.erased_count() as f64 / 1e6;
        assert!((frac - 0.5).abs() < 0.002, "{frac}");
        assert!(rx.iter().all(|s| s.allows(1)));
    }

    #[test]
    fn masks_are_nested_and_reproducible() {
        let bits = vec![0u8; 5000];
        let lo = bec_transmit(&BecChannel::new(0.3).unwrap(), &bits, 9, 1);
        let hi = bec_transmit(&BecChannel::new(0.6).unwrap(), &bits, 9, 1);
        assert!(lo.iter().zip(hi.iter()).all(|(a, b)| a.is_known() || b.is_erased()));
        assert_eq!(lo, bec_transmit(&BecChannel::new(0.3).unwrap(), &bits, 9, 1));
        assert_ne!(lo, bec_transmit(&BecChannel::new(0.3).unwrap(), &bits, 9, 2));
    }

    #[test]
    fn zero_erasure_ber() {
        let cfg = PicConfig::new(64, 5, Rational::new(1, 4), 1).unwrap();
        let recs = run_ber_experiment(&cfg, &[0.0], 3, 7, ErrorAccounting::Full).unwrap();
        assert_eq!(recs[0].residual_erasures, 0);
        assert_eq!(recs[0].ber, 0.0);
        assert_eq!(recs[0].info_bits, 3 * cfg.info_len() as u64);
        assert!(run_ber_experiment(&cfg, &[0.1], 0, 7, ErrorAccounting::Full).is_err());
    }

    #[test]
    fn half_accounting_halves_ber() {
        let cfg = PicConfig::new(64, 5, Rational::new(1, 4), 1).unwrap();
        let full = run_ber_experiment(&cfg, &[0.8], 2, 1, ErrorAccounting::Full).unwrap();
        let half = run_ber_experiment(&cfg, &[0.8], 2, 1, ErrorAccounting::Half).unwrap();
        assert!(full[0].ber > 0.0);
        assert_eq!(half[0].ber * 2.0, full[0].ber);
    }
}
