//! Oracle-equivalence suites shared by `pictc selftest` and the test
//! targets. Every suite is deterministic in its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bcjr::{bcjr_erasure_decode, brute_force_map};
use crate::erasure::ErasureVec;
use crate::error::Result;
use crate::oracle::{exhaustive_map, gf2_map};
use crate::pic::{PicCode, PicConfig, Rational};
use crate::sim::{BecChannel, TrialRng};
use crate::trellis::{RscSpec, Trellis};
use crate::turbo::{Interleaver, TurboCode, TurboObservation};

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    pub detail: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}/{} failing{}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.failures,
            self.instances,
            if self.detail.is_empty() { String::new() } else { format!(" ({})", self.detail) }
        )
    }
}

/// Erasure-domain BCJR against trellis enumeration on random codewords of
/// length 4..=`max_len` with random masks and boundary conditions.
pub fn bcjr_vs_brute_force(instances: usize, max_len: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for i in 0..instances {
        let spec: RscSpec = if i % 4 == 3 { "13,15".parse()? } else { RscSpec::DEFAULT };
        let t = Trellis::new(spec);
        let len = rng.random_range(t.memory() + 2..=max_len);
        let terminate = rng.random_bool(0.7);
        let start_known = rng.random_bool(0.8);
        let info_len = if terminate { len - t.memory() } else { len };
        let info: Vec<u8> = (0..info_len).map(|_| rng.random_range(0..2)).collect();
        let cw = t.encode(&info, terminate);
        let (p, q) = (rng.random_range(0.05..0.95), rng.random_range(0.05..0.95));
        let sys_mask: Vec<bool> = (0..len).map(|_| rng.random_bool(p)).collect();
        let par_mask: Vec<bool> = (0..len).map(|_| rng.random_bool(q)).collect();
        let sys = ErasureVec::from_mask(&cw.inputs(), &sys_mask);
        let par = ErasureVec::from_mask(&cw.parities(), &par_mask);
        let fast = bcjr_erasure_decode(&t, &sys, &par, start_known, terminate)?;
        let slow = brute_force_map(&t, &sys, &par, start_known, terminate)?;
        if fast != slow {
            failures += 1;
        }
    }
    Ok(SuiteReport {
        name: format!("bcjr equals brute-force MAP, length <= {max_len}"),
        instances,
        failures,
        detail: String::new(),
    })
}

fn pic_code(k: usize, l: usize, lambda: Rational, m: usize, seed: u64) -> Result<PicCode> {
    let mut cfg = PicConfig::new(k, l, lambda, m)?;
    cfg.seed = seed;
    PicCode::new(cfg)
}

/// Elimination MAP oracle against enumeration on small chains.
pub fn gf2_vs_exhaustive(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut failures = 0;
    for i in 0..instances {
        let code = pic_code(8, 3, Rational::new(1, 4), 1, i as u64)?;
        let eps = [0.3, 0.5, 0.7, 0.9][i % 4];
        let mut rng = TrialRng::new(seed, i as u64);
        let info = rng.info_bits(code.info_len());
        let rx = rng.transmit(&BecChannel::new(eps)?, &code.transmitted_bits(&code.encode(&info)?));
        let encode = |w: &[u8]| code.transmitted_bits(&code.encode(w).expect("length checked"));
        if gf2_map(code.info_len(), encode, &rx)? != exhaustive_map(code.info_len(), encode, &rx)? {
            failures += 1;
        }
    }
    Ok(SuiteReport {
        name: "elimination MAP equals enumeration MAP".into(),
        instances,
        failures,
        detail: String::new(),
    })
}

/// Comparison of iterative chain decoding with whole-chain MAP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChainMapStats {
    pub instances: usize,
    /// Instances where the decoder output differs from MAP.
    pub mismatches: usize,
    /// Instances where the decoder knows a bit MAP leaves erased, or knows a
    /// wrong value. Either is a bug.
    pub violations: usize,
    /// Erased bits the decoder leaves that MAP resolves, summed.
    pub extra_erasures: usize,
}

/// Iterative decoding of the toy chain `K=12, L=4, λ=1/4, m=1` against the
/// elimination MAP oracle. Instance `i` uses interleaver seed `i` and the
/// erasure probability `epsilons[i % len]`.
pub fn chain_vs_map(instances: usize, epsilons: &[f64], seed: u64) -> Result<ChainMapStats> {
    let mut stats = ChainMapStats {
        instances,
        ..Default::default()
    };
    for i in 0..instances {
        let code = pic_code(12, 4, Rational::new(1, 4), 1, i as u64)?;
        let channel = BecChannel::new(epsilons[i % epsilons.len()])?;
        let mut rng = TrialRng::new(seed, i as u64);
        let info = rng.info_bits(code.info_len());
        let rx = rng.transmit(&channel, &code.transmitted_bits(&code.encode(&info)?));
        let dec = code.decode_channel(&rx)?.info;
        let map = gf2_map(
            code.info_len(),
            |w| code.transmitted_bits(&code.encode(w).expect("length checked")),
            &rx,
        )?;
        if dec != map {
            stats.mismatches += 1;
            stats.extra_erasures += dec.erased_count().saturating_sub(map.erased_count());
        }
        let sound = dec.consistent_with(&info) && dec.iter().zip(map.iter()).all(|(d, m)| d.is_erased() || m.is_known());
        if !sound {
            stats.violations += 1;
        }
    }
    Ok(stats)
}

/// Turbo decoding of `K=10` blocks against enumeration MAP; the decoder
/// must never know more than MAP and never be wrong.
pub fn turbo_vs_exhaustive(instances: usize, seed: u64) -> Result<(SuiteReport, usize)> {
    let mut violations = 0;
    let mut mismatches = 0;
    for i in 0..instances {
        let code = TurboCode::new(Trellis::new(RscSpec::DEFAULT), Interleaver::random(10, i as u64));
        let eps = [0.2, 0.35, 0.5, 0.65][i % 4];
        let mut rng = TrialRng::new(seed, i as u64);
        let info = rng.info_bits(10);
        let tx = code.encode(&info)?.transmitted_bits();
        let rx = rng.transmit(&BecChannel::new(eps)?, &tx);
        let obs = TurboObservation::from_stream(10, 2, &rx)?;
        let dec = code.decode_bec(&obs, &ErasureVec::erased(10))?.info_app;
        let map = exhaustive_map(10, |w| code.encode(w).expect("length checked").transmitted_bits(), &rx)?;
        if dec != map {
            mismatches += 1;
        }
        let sound = dec.consistent_with(&info) && dec.iter().zip(map.iter()).all(|(d, m)| d.is_erased() || m.is_known());
        if !sound {
            violations += 1;
        }
    }
    Ok((
        SuiteReport {
            name: "turbo decoding is sound against enumeration MAP, K = 10".into(),
            instances,
            failures: violations,
            detail: format!("{mismatches} instances with extra erasures"),
        },
        mismatches,
    ))
}

/// The suites run by `pictc selftest`.
pub fn run_all(seed: u64) -> Result<Vec<SuiteReport>> {
    let mut out = vec![bcjr_vs_brute_force(200, 12, seed)?, gf2_vs_exhaustive(40, seed)?];
    out.push(turbo_vs_exhaustive(100, seed)?.0);
    let stats = chain_vs_map(50, &[0.3, 0.4, 0.5, 0.6, 0.7], seed)?;
    out.push(SuiteReport {
        name: "chain decoding is sound against MAP, K = 12, L = 4".into(),
        instances: stats.instances,
        failures: stats.violations,
        detail: format!(
            "{} instances with {} extra erasures",
            stats.mismatches, stats.extra_erasures
        ),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_small() {
        assert!(bcjr_vs_brute_force(30, 10, 1).unwrap().passed());
        assert!(gf2_vs_exhaustive(8, 1).unwrap().passed());
        assert!(turbo_vs_exhaustive(12, 1).unwrap().0.passed());
        let stats = chain_vs_map(10, &[0.3], 1).unwrap();
        assert_eq!(stats.violations, 0);
    }

    #[test]
    fn report_line() {
        let r = SuiteReport {
            name: "x".into(),
            instances: 3,
            failures: 1,
            detail: String::new(),
        };
        assert_eq!(r.line(), "FAIL x: 1/3 failing");
    }
}
