//! Rate-1/3 parallel concatenated turbo code and its erasure-channel decoder.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bcjr::bcjr_erasure_decode;
use crate::erasure::{ErasureVec, Symbol};
use crate::error::{Error, Result};
use crate::trellis::{Tail, Trellis};

/// A permutation of `0..K`. The lower encoder reads `info[perm[i]]` at step `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
    inverse: Vec<usize>,
    seed: u64,
}

impl Interleaver {
    /// Uniformly random permutation drawn by a Fisher-Yates shuffle driven by
    /// ChaCha8 seeded with `seed`.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..len).collect();
        for i in (1..len).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        Self::from_parts(perm, seed)
    }

    /// S-random permutation: inputs closer than `spread` land at least
    /// `spread` apart. Built greedily from a seeded shuffle, restarting on a
    /// dead end. `spread` up to about `0.7 sqrt(len / 2)` succeeds quickly.
    pub fn s_random(len: usize, spread: usize, seed: u64) -> Result<Self> {
        const ATTEMPTS: usize = 1000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        'attempt: for _ in 0..ATTEMPTS {
            let mut pool: Vec<usize> = (0..len).collect();
            for i in (1..len).rev() {
                let j = rng.random_range(0..=i);
                pool.swap(i, j);
            }
            let mut perm = Vec::with_capacity(len);
            for i in 0..len {
                let recent = &perm[i.saturating_sub(spread.saturating_sub(1))..];
                let pick = pool
                    .iter()
                    .position(|&c: &usize| recent.iter().all(|&r: &usize| r.abs_diff(c) >= spread));
                match pick {
                    Some(idx) => perm.push(pool.remove(idx)),
                    None => continue 'attempt,
                }
            }
            return Ok(Self::from_parts(perm, seed));
        }
        Err(Error::InvalidConfig(format!(
            "no S-random interleaver of length {len} with spread {spread} after {ATTEMPTS} attempts"
        )))
    }

    /// Spread used by default for `len`, `0.6 sqrt(len / 2)`.
    pub fn default_spread(len: usize) -> usize {
        ((0.6 * (len as f64 / 2.0).sqrt()).floor() as usize).max(1)
    }

    /// Smallest `|π(i) - π(j)|` over pairs with `|i - j| < window`.
    pub fn min_spread(&self, window: usize) -> usize {
        let mut best = usize::MAX;
        for i in 0..self.len() {
            for j in i + 1..(i + window).min(self.len()) {
                best = best.min(self.perm[i].abs_diff(self.perm[j]));
            }
        }
        best
    }

    pub fn identity(len: usize) -> Self {
        Self::from_parts((0..len).collect(), 0)
    }

    /// Wraps an explicit permutation.
    pub fn from_permutation(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidConfig("interleaver is not a permutation".into()));
            }
        }
        Ok(Self::from_parts(perm, 0))
    }

    fn from_parts(perm: Vec<usize>, seed: u64) -> Self {
        let mut inverse = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        Interleaver { perm, inverse, seed }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Clone>(&self, x: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| x[p].clone()).collect()
    }

    pub fn deinterleave<T: Clone>(&self, y: &[T]) -> Vec<T> {
        self.inverse.iter().map(|&i| y[i].clone()).collect()
    }
}

/// Codeword of the rate-1/3 turbo code; both constituents are terminated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurboCodeword {
    pub systematic: Vec<u8>,
    pub parity_upper: Vec<u8>,
    pub parity_lower: Vec<u8>,
    pub tail_upper: Tail,
    pub tail_lower: Tail,
}

impl TurboCodeword {
    /// Termination bits across both constituents.
    pub fn tail_len(&self) -> usize {
        self.tail_upper.len() + self.tail_lower.len()
    }

    /// Parity and tail bits in transmission order: upper parity, lower
    /// parity, upper tail (systematic then parity), lower tail.
    pub fn redundancy_bits(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(self.parity_upper.len() * 2 + self.tail_len());
        v.extend_from_slice(&self.parity_upper);
        v.extend_from_slice(&self.parity_lower);
        for tail in [&self.tail_upper, &self.tail_lower] {
            v.extend_from_slice(&tail.systematic);
            v.extend_from_slice(&tail.parity);
        }
        v
    }

    /// Every bit of the codeword: systematic part followed by
    /// [`TurboCodeword::redundancy_bits`].
    pub fn transmitted_bits(&self) -> Vec<u8> {
        let mut v = self.systematic.clone();
        v.extend(self.redundancy_bits());
        v
    }
}

/// Channel observations of one turbo codeword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurboObservation {
    pub systematic: ErasureVec,
    pub parity_upper: ErasureVec,
    pub parity_lower: ErasureVec,
    pub tail_upper: TailObservation,
    pub tail_lower: TailObservation,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TailObservation {
    pub systematic: ErasureVec,
    pub parity: ErasureVec,
}

impl TailObservation {
    pub fn known(tail: &Tail) -> Self {
        TailObservation {
            systematic: ErasureVec::from_bits(&tail.systematic),
            parity: ErasureVec::from_bits(&tail.parity),
        }
    }

    pub fn erased(len: usize) -> Self {
        TailObservation {
            systematic: ErasureVec::erased(len),
            parity: ErasureVec::erased(len),
        }
    }
}

impl TurboObservation {
    /// Noise-free observation of a codeword.
    pub fn perfect(cw: &TurboCodeword) -> Self {
        TurboObservation {
            systematic: ErasureVec::from_bits(&cw.systematic),
            parity_upper: ErasureVec::from_bits(&cw.parity_upper),
            parity_lower: ErasureVec::from_bits(&cw.parity_lower),
            tail_upper: TailObservation::known(&cw.tail_upper),
            tail_lower: TailObservation::known(&cw.tail_lower),
        }
    }

    /// Splits an observation of [`TurboCodeword::transmitted_bits`].
    pub fn from_stream(info_len: usize, memory: usize, stream: &[Symbol]) -> Result<Self> {
        let expected = 3 * info_len + 4 * memory;
        if stream.len() != expected {
            return Err(Error::LengthMismatch {
                what: "turbo observation stream",
                expected,
                got: stream.len(),
            });
        }
        let mut rest = stream;
        let mut take = |n: usize| -> ErasureVec {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head.to_vec().into()
        };
        let systematic = take(info_len);
        Ok(TurboObservation {
            systematic,
            ..Self::from_redundancy(info_len, memory, rest)?
        })
    }

    /// Observation whose systematic part is left erased, built from an
    /// observation of [`TurboCodeword::redundancy_bits`].
    pub fn from_redundancy(info_len: usize, memory: usize, stream: &[Symbol]) -> Result<Self> {
        let expected = 2 * info_len + 4 * memory;
        if stream.len() != expected {
            return Err(Error::LengthMismatch {
                what: "redundancy observation stream",
                expected,
                got: stream.len(),
            });
        }
        let mut rest = stream;
        let mut take = |n: usize| -> ErasureVec {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head.to_vec().into()
        };
        let parity_upper = take(info_len);
        let parity_lower = take(info_len);
        let tail_upper = TailObservation {
            systematic: take(memory),
            parity: take(memory),
        };
        let tail_lower = TailObservation {
            systematic: take(memory),
            parity: take(memory),
        };
        Ok(TurboObservation {
            systematic: ErasureVec::erased(info_len),
            parity_upper,
            parity_lower,
            tail_upper,
            tail_lower,
        })
    }

    /// Observation with every bit erased.
    pub fn erased(len: usize, memory: usize) -> Self {
        TurboObservation {
            systematic: ErasureVec::erased(len),
            parity_upper: ErasureVec::erased(len),
            parity_lower: ErasureVec::erased(len),
            tail_upper: TailObservation::erased(memory),
            tail_lower: TailObservation::erased(memory),
        }
    }
}

/// Result of [`TurboCode::decode_bec`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurboDecodeOutput {
    /// Knowledge of each information bit from everything available.
    pub info_app: ErasureVec,
    /// Knowledge of each information bit from the two constituent decoders
    /// only, excluding that bit's channel observation and its coupled prior.
    pub info_extrinsic_total: ErasureVec,
    /// Upper/lower decoding rounds until the fixed point.
    pub rounds: usize,
}

/// Parallel concatenation of two identical RSC codes through an interleaver.
#[derive(Debug, Clone)]
pub struct TurboCode {
    trellis: Trellis,
    interleaver: Interleaver,
}

impl TurboCode {
    pub fn new(trellis: Trellis, interleaver: Interleaver) -> Self {
        TurboCode {
            trellis,
            interleaver,
        }
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    pub fn interleaver(&self) -> &Interleaver {
        &self.interleaver
    }

    /// Information bits per codeword.
    pub fn info_len(&self) -> usize {
        self.interleaver.len()
    }

    pub fn encode(&self, info: &[u8]) -> Result<TurboCodeword> {
        if info.len() != self.info_len() {
            return Err(Error::LengthMismatch {
                what: "turbo encoder input",
                expected: self.info_len(),
                got: info.len(),
            });
        }
        let upper = self.trellis.encode(info, true);
        let lower = self.trellis.encode(&self.interleaver.interleave(info), true);
        Ok(TurboCodeword {
            systematic: info.to_vec(),
            parity_upper: upper.parity,
            parity_lower: lower.parity,
            tail_upper: upper.tail,
            tail_lower: lower.tail,
        })
    }

    fn check_observation(&self, obs: &TurboObservation, coupled_prior: &ErasureVec) -> Result<()> {
        let k = self.info_len();
        let nu = self.trellis.memory();
        let checks = [
            ("systematic observation", k, obs.systematic.len()),
            ("upper parity observation", k, obs.parity_upper.len()),
            ("lower parity observation", k, obs.parity_lower.len()),
            ("coupled prior", k, coupled_prior.len()),
            ("upper tail systematic", nu, obs.tail_upper.systematic.len()),
            ("upper tail parity", nu, obs.tail_upper.parity.len()),
            ("lower tail systematic", nu, obs.tail_lower.systematic.len()),
            ("lower tail parity", nu, obs.tail_lower.parity.len()),
        ];
        for (what, expected, got) in checks {
            if expected != got {
                return Err(Error::LengthMismatch {
                    what,
                    expected,
                    got,
                });
            }
        }
        Ok(())
    }

    /// Runs one constituent decoder; returns the information extrinsics
    /// (tail sections dropped).
    fn constituent(&self, prior: ErasureVec, parity: &ErasureVec, tail: &TailObservation) -> Result<ErasureVec> {
        let mut sys: Vec<_> = prior.into_inner();
        sys.extend_from_slice(&tail.systematic);
        let mut par: Vec<_> = parity.to_vec();
        par.extend_from_slice(&tail.parity);
        let out = bcjr_erasure_decode(&self.trellis, &sys.into(), &par.into(), true, true)?;
        let mut ext = out.info_extrinsic.into_inner();
        ext.truncate(self.info_len());
        Ok(ext.into())
    }

    /// Iterative decoding over the BEC until no information bit changes from
    /// erased to known in a full upper/lower round.
    ///
    /// `coupled_prior` is external knowledge about the information bits
    /// (neighbouring code blocks, zero padding); it is merged with the
    /// systematic observation.
    pub fn decode_bec(&self, obs: &TurboObservation, coupled_prior: &ErasureVec) -> Result<TurboDecodeOutput> {
        self.check_observation(obs, coupled_prior)?;
        let k = self.info_len();
        let prior = obs.systematic.merge(coupled_prior)?;
        let mut ext_upper = ErasureVec::erased(k);
        let mut ext_lower = ErasureVec::erased(k);
        let mut rounds = 0;
        loop {
            rounds += 1;
            let upper_in = prior.merge(&ext_lower)?;
            let new_upper = self.constituent(upper_in, &obs.parity_upper, &obs.tail_upper)?;
            let gained_upper = ext_upper.absorb(&new_upper)?;

            let lower_in = prior.merge(&ext_upper)?;
            let lower_in: ErasureVec = self.interleaver.interleave(&lower_in).into();
            let new_lower = self.constituent(lower_in, &obs.parity_lower, &obs.tail_lower)?;
            let new_lower: ErasureVec = self.interleaver.deinterleave(&new_lower).into();
            let gained_lower = ext_lower.absorb(&new_lower)?;

            if gained_upper + gained_lower == 0 {
                break;
            }
        }
        let info_extrinsic_total = ext_upper.merge(&ext_lower)?;
        let info_app = prior.merge(&info_extrinsic_total)?;
        Ok(TurboDecodeOutput {
            info_app,
            info_extrinsic_total,
            rounds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trellis::RscSpec;

    fn code(k: usize, seed: u64) -> TurboCode {
        TurboCode::new(Trellis::new(RscSpec::DEFAULT), Interleaver::random(k, seed))
    }

    #[test]
    fn s_random_spread() {
        for (len, seed) in [(64, 1), (256, 2), (1024, 3)] {
            let s = Interleaver::default_spread(len);
            let il = Interleaver::s_random(len, s, seed).unwrap();
            assert!(Interleaver::from_permutation(il.permutation().to_vec()).is_ok());
            assert!(il.min_spread(s) >= s);
            assert_eq!(il, Interleaver::s_random(len, s, seed).unwrap());
        }
        assert!(Interleaver::s_random(64, 40, 1).is_err());
    }

    #[test]
    fn interleaver_basics() {
        assert_eq!(Interleaver::random(1, 99).permutation(), &[0]);
        assert_eq!(Interleaver::random(500, 4), Interleaver::random(500, 4));
        assert_ne!(Interleaver::random(500, 4), Interleaver::random(500, 5));
        let il = Interleaver::random(6144, 1);
        let mut sorted = il.permutation().to_vec();
        sorted.sort_unstable();
        assert!(sorted.iter().enumerate().all(|(i, &p)| i == p));
        let x: Vec<usize> = (0..6144).map(|i| i * 7 % 13).collect();
        assert_eq!(il.deinterleave(&il.interleave(&x)), x);
        assert!(Interleaver::from_permutation(vec![0, 0, 1]).is_err());
    }

    #[test]
    fn zero_info_zero_parity() {
        let cw = code(20, 1).encode(&[0; 20]).unwrap();
        assert!(cw.parity_upper.iter().chain(&cw.parity_lower).all(|&b| b == 0));
        assert_eq!(cw.tail_len(), 8);
    }

    #[test]
    fn identity_interleaver_gives_equal_parities() {
        let c = TurboCode::new(Trellis::new(RscSpec::DEFAULT), Interleaver::identity(8));
        let cw = c.encode(&[1, 0, 1, 1, 0, 1, 0, 0]).unwrap();
        assert_eq!(cw.parity_upper, cw.parity_lower);
        assert_eq!(cw.tail_upper, cw.tail_lower);
    }

    #[test]
    fn encoder_is_linear() {
        let c = code(32, 2);
        let a: Vec<u8> = (0..32).map(|i| (i * 5 % 3 == 0) as u8).collect();
        let b: Vec<u8> = (0..32).map(|i| (i % 4 == 1) as u8).collect();
        let x: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p ^ q).collect();
        let (ea, eb, ex) = (c.encode(&a).unwrap(), c.encode(&b).unwrap(), c.encode(&x).unwrap());
        for (pa, pb, px) in [
            (&ea.parity_upper, &eb.parity_upper, &ex.parity_upper),
            (&ea.parity_lower, &eb.parity_lower, &ex.parity_lower),
        ] {
            let sum: Vec<u8> = pa.iter().zip(pb).map(|(p, q)| p ^ q).collect();
            assert_eq!(&sum, px);
        }
    }

    #[test]
    fn length_mismatch() {
        let c = code(10, 1);
        assert!(c.encode(&[0; 9]).is_err());
        let obs = TurboObservation::erased(10, 2);
        assert!(c.decode_bec(&obs, &ErasureVec::erased(9)).is_err());
    }

    #[test]
    fn decode_noiseless_and_fully_erased() {
        let c = code(40, 3);
        let info: Vec<u8> = (0..40).map(|i| (i * i % 7 > 3) as u8).collect();
        let cw = c.encode(&info).unwrap();
        let out = c.decode_bec(&TurboObservation::perfect(&cw), &ErasureVec::erased(40)).unwrap();
        assert_eq!(out.info_app, ErasureVec::from_bits(&info));

        let out = c
            .decode_bec(&TurboObservation::erased(40, 2), &ErasureVec::erased(40))
            .unwrap();
        assert_eq!(out.info_app.erased_count(), 40);
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn coupled_prior_alone_suffices() {
        let c = code(16, 3);
        let info: Vec<u8> = (0..16).map(|i| (i % 3 == 0) as u8).collect();
        let out = c
            .decode_bec(&TurboObservation::erased(16, 2), &ErasureVec::from_bits(&info))
            .unwrap();
        assert_eq!(out.info_app, ErasureVec::from_bits(&info));
    }
}
