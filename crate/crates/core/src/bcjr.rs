//! Symbol-MAP decoding of one RSC code over the BEC.
//!
//! On the erasure channel the BCJR forward and backward metrics collapse to
//! sets of states that are still consistent with the observations: a state is
//! either possible or ruled out. The forward set `A[t]` holds states reachable
//! from the start under observations before `t`; the backward set `B[t]` holds
//! states from which the end can be reached under observations from `t` on.
//! A transition `(s, u)` at position `t` lies on some consistent path iff
//! `s` is in `A[t]`, `next(s, u)` is in `B[t + 1]` and the observations at `t`
//! allow it. A bit is known iff every such transition agrees on it, which is
//! exact MAP decoding.

use crate::erasure::{ErasureVec, Symbol};
use crate::error::{Error, Result};
use crate::trellis::Trellis;

/// Set of trellis states as a bitmask (bit `s` set iff state `s` is possible).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet(pub u16);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);

    pub fn single(state: usize) -> Self {
        StateSet(1 << state)
    }

    pub fn full(state_count: usize) -> Self {
        StateSet(((1u32 << state_count) - 1) as u16)
    }

    #[inline]
    pub fn contains(self, state: usize) -> bool {
        self.0 >> state & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, state: usize) {
        self.0 |= 1 << state;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..16).filter(move |&s| self.contains(s))
    }
}

impl Trellis {
    /// One forward step of the state-set recursion.
    #[inline]
    pub fn forward_step(&self, from: StateSet, sys: Symbol, parity: Symbol) -> StateSet {
        let mut out = StateSet::EMPTY;
        for s in from.iter() {
            for u in 0..2u8 {
                if sys.allows(u) && parity.allows(self.parity(s, u)) {
                    out.insert(self.next_state(s, u));
                }
            }
        }
        out
    }

    /// One backward step: states with a consistent transition into `to`.
    #[inline]
    pub fn backward_step(&self, to: StateSet, sys: Symbol, parity: Symbol) -> StateSet {
        let mut out = StateSet::EMPTY;
        for ns in to.iter() {
            for &(s, u) in self.predecessors(ns) {
                if sys.allows(u) && parity.allows(self.parity(s as usize, u)) {
                    out.insert(s as usize);
                }
            }
        }
        out
    }
}

/// Outputs of a constituent decoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BcjrOutput {
    /// Knowledge of each input bit that does not use its own systematic prior.
    pub info_extrinsic: ErasureVec,
    /// Knowledge of each parity bit that does not use its own observation.
    pub parity_extrinsic: ErasureVec,
    /// Knowledge of each input bit from all observations.
    pub info_app: ErasureVec,
}

fn boundary(trellis: &Trellis, known: bool) -> StateSet {
    if known {
        StateSet::single(0)
    } else {
        StateSet::full(trellis.state_count())
    }
}

fn check_lengths(sys_prior: &ErasureVec, parity_obs: &ErasureVec) -> Result<()> {
    if sys_prior.len() != parity_obs.len() {
        return Err(Error::LengthMismatch {
            what: "parity observations",
            expected: sys_prior.len(),
            got: parity_obs.len(),
        });
    }
    Ok(())
}

/// Forward state sets `A[0..=n]`.
pub fn forward_sets(
    trellis: &Trellis,
    sys_prior: &ErasureVec,
    parity_obs: &ErasureVec,
    start_known: bool,
) -> Vec<StateSet> {
    let mut sets = Vec::with_capacity(sys_prior.len() + 1);
    let mut a = boundary(trellis, start_known);
    sets.push(a);
    for (&x, &p) in sys_prior.iter().zip(parity_obs.iter()) {
        a = trellis.forward_step(a, x, p);
        sets.push(a);
    }
    sets
}

/// Backward state sets `B[0..=n]`.
pub fn backward_sets(
    trellis: &Trellis,
    sys_prior: &ErasureVec,
    parity_obs: &ErasureVec,
    end_known: bool,
) -> Vec<StateSet> {
    let n = sys_prior.len();
    let mut sets = vec![StateSet::EMPTY; n + 1];
    let mut b = boundary(trellis, end_known);
    sets[n] = b;
    for t in (0..n).rev() {
        b = trellis.backward_step(b, sys_prior[t], parity_obs[t]);
        sets[t] = b;
    }
    sets
}

/// Exact erasure-domain BCJR decoding of one constituent code.
///
/// `sys_prior` is the combined a-priori knowledge of the input bits and
/// `parity_obs` the channel observation of the parity bits; both cover every
/// trellis section, termination included.
pub fn bcjr_erasure_decode(
    trellis: &Trellis,
    sys_prior: &ErasureVec,
    parity_obs: &ErasureVec,
    start_known: bool,
    end_known: bool,
) -> Result<BcjrOutput> {
    check_lengths(sys_prior, parity_obs)?;
    let n = sys_prior.len();
    let fwd = forward_sets(trellis, sys_prior, parity_obs, start_known);
    let bwd = backward_sets(trellis, sys_prior, parity_obs, end_known);

    let mut info_extrinsic = Vec::with_capacity(n);
    let mut parity_extrinsic = Vec::with_capacity(n);
    let mut info_app = Vec::with_capacity(n);
    for t in 0..n {
        let sys_ok = sys_prior[t].allowed_mask();
        let par_ok = parity_obs[t].allowed_mask();
        let (mut ext_u, mut ext_p, mut app_u) = (0u8, 0u8, 0u8);
        for s in fwd[t].iter() {
            for u in 0..2u8 {
                if !bwd[t + 1].contains(trellis.next_state(s, u)) {
                    continue;
                }
                let p = trellis.parity(s, u);
                let sys_fits = sys_ok >> u & 1 == 1;
                let par_fits = par_ok >> p & 1 == 1;
                if par_fits {
                    ext_u |= 1 << u;
                }
                if sys_fits {
                    ext_p |= 1 << p;
                }
                if sys_fits && par_fits {
                    app_u |= 1 << u;
                }
            }
        }
        let inconsistent = || Error::Inconsistent(format!("no consistent transition at section {t}"));
        info_extrinsic.push(Symbol::from_seen(ext_u).ok_or_else(inconsistent)?);
        parity_extrinsic.push(Symbol::from_seen(ext_p).ok_or_else(inconsistent)?);
        info_app.push(Symbol::from_seen(app_u).ok_or_else(inconsistent)?);
    }
    if n == 0 && (fwd[0].0 & bwd[0].0) == 0 {
        return Err(Error::Inconsistent("boundaries disagree".into()));
    }
    Ok(BcjrOutput {
        info_extrinsic: info_extrinsic.into(),
        parity_extrinsic: parity_extrinsic.into(),
        info_app: info_app.into(),
    })
}

/// Longest input handled by [`brute_force_map`].
pub const BRUTE_FORCE_MAX_LEN: usize = 20;

/// Exhaustive MAP oracle for [`bcjr_erasure_decode`].
///
/// Every input sequence (and every start state when the start is free) is
/// walked through the trellis and checked against the observations. A bit is
/// known iff all surviving sequences agree on it; the extrinsic variants let
/// a sequence survive when its only violation is the excluded observation.
pub fn brute_force_map(
    trellis: &Trellis,
    sys_prior: &ErasureVec,
    parity_obs: &ErasureVec,
    start_known: bool,
    end_known: bool,
) -> Result<BcjrOutput> {
    check_lengths(sys_prior, parity_obs)?;
    let n = sys_prior.len();
    if n > BRUTE_FORCE_MAX_LEN {
        return Err(Error::TooLarge(format!(
            "length {n} exceeds {BRUTE_FORCE_MAX_LEN}"
        )));
    }
    let starts: Vec<usize> = if start_known {
        vec![0]
    } else {
        (0..trellis.state_count()).collect()
    };
    let mut ext_u = vec![0u8; n];
    let mut ext_p = vec![0u8; n];
    let mut app_u = vec![0u8; n];
    let mut any_survivor = false;
    let mut inputs = vec![0u8; n];
    let mut parities = vec![0u8; n];

    for &start in &starts {
        for word in 0u32..(1 << n) {
            let mut s = start;
            // (kind, position) of the violation when there is exactly one
            let mut violations = 0;
            let mut single: Option<(bool, usize)> = None;
            for t in 0..n {
                let u = (word >> t & 1) as u8;
                let p = trellis.parity(s, u);
                inputs[t] = u;
                parities[t] = p;
                if !sys_prior[t].allows(u) {
                    violations += 1;
                    single = Some((true, t));
                }
                if !parity_obs[t].allows(p) {
                    violations += 1;
                    single = Some((false, t));
                }
                if violations > 1 {
                    break;
                }
                s = trellis.next_state(s, u);
            }
            if violations > 1 || (end_known && s != 0) {
                continue;
            }
            match (violations, single) {
                (0, _) => {
                    any_survivor = true;
                    for t in 0..n {
                        ext_u[t] |= 1 << inputs[t];
                        ext_p[t] |= 1 << parities[t];
                        app_u[t] |= 1 << inputs[t];
                    }
                }
                (1, Some((true, t))) => ext_u[t] |= 1 << inputs[t],
                (1, Some((false, t))) => ext_p[t] |= 1 << parities[t],
                _ => unreachable!(),
            }
        }
    }
    if !any_survivor {
        return Err(Error::Inconsistent("no input sequence matches the observations".into()));
    }
    let convert = |seen: Vec<u8>| -> ErasureVec {
        seen.into_iter()
            .map(|m| Symbol::from_seen(m).expect("a survivor exists for every position"))
            .collect()
    };
    Ok(BcjrOutput {
        info_extrinsic: convert(ext_u),
        parity_extrinsic: convert(ext_p),
        info_app: convert(app_u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trellis::RscSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trellis() -> Trellis {
        Trellis::new(RscSpec::DEFAULT)
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        t: &Trellis,
        len: usize,
        terminate: bool,
        p_sys: f64,
        p_par: f64,
    ) -> (Vec<u8>, Vec<u8>, ErasureVec, ErasureVec) {
        let info_len = if terminate { len - t.memory() } else { len };
        let info: Vec<u8> = (0..info_len).map(|_| rng.random_range(0..2)).collect();
        let cw = t.encode(&info, terminate);
        let (inputs, parities) = (cw.inputs(), cw.parities());
        let sys_mask: Vec<bool> = (0..len).map(|_| rng.random_bool(p_sys)).collect();
        let par_mask: Vec<bool> = (0..len).map(|_| rng.random_bool(p_par)).collect();
        let sys = ErasureVec::from_mask(&inputs, &sys_mask);
        let par = ErasureVec::from_mask(&parities, &par_mask);
        (inputs, parities, sys, par)
    }

    #[test]
    fn all_known() {
        let t = trellis();
        let info = [1, 0, 1, 1, 0, 0, 1, 0];
        let cw = t.encode(&info, true);
        let sys = ErasureVec::from_bits(&cw.inputs());
        let par = ErasureVec::from_bits(&cw.parities());
        let out = bcjr_erasure_decode(&t, &sys, &par, true, true).unwrap();
        assert_eq!(out.info_extrinsic, sys);
        assert_eq!(out.info_app, sys);
        assert_eq!(out.parity_extrinsic, par);
    }

    #[test]
    fn all_erased_free_boundaries() {
        let t = trellis();
        let e = ErasureVec::erased(9);
        let out = bcjr_erasure_decode(&t, &e, &e, false, false).unwrap();
        assert_eq!(out.info_extrinsic.erased_count(), 9);
        assert_eq!(out.parity_extrinsic.erased_count(), 9);
        assert_eq!(out.info_app.erased_count(), 9);
    }

    #[test]
    fn contradiction_is_reported() {
        let t = trellis();
        // from state 0 the input 0 always gives parity 0
        let sys = ErasureVec::from_bits(&[0]);
        let par = ErasureVec::from_bits(&[1]);
        assert!(matches!(
            bcjr_erasure_decode(&t, &sys, &par, true, false),
            Err(Error::Inconsistent(_))
        ));
        assert!(matches!(
            brute_force_map(&t, &sys, &par, true, false),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn single_survivor_is_fully_known() {
        let t = trellis();
        let cw = t.encode(&[1, 1, 0, 1], false);
        let sys = ErasureVec::from_bits(&cw.inputs());
        let par = ErasureVec::erased(4);
        let out = brute_force_map(&t, &sys, &par, true, false).unwrap();
        assert_eq!(out.info_app, sys);
        assert_eq!(out.parity_extrinsic, ErasureVec::from_bits(&cw.parities()));
    }

    #[test]
    fn brute_force_rejects_long_inputs() {
        let t = trellis();
        let e = ErasureVec::erased(BRUTE_FORCE_MAX_LEN + 1);
        assert!(matches!(brute_force_map(&t, &e, &e, true, true), Err(Error::TooLarge(_))));
    }

    #[test]
    fn matches_brute_force_length_8() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for spec in ["7,5", "13,15"] {
            let t = Trellis::new(spec.parse().unwrap());
            for _ in 0..200 {
                let term = rng.random_bool(0.5);
                let start_known = rng.random_bool(0.8);
                let (_, _, sys, par) = random_instance(&mut rng, &t, 8, term, 0.5, 0.5);
                let fast = bcjr_erasure_decode(&t, &sys, &par, start_known, term).unwrap();
                let slow = brute_force_map(&t, &sys, &par, start_known, term).unwrap();
                assert_eq!(fast, slow, "sys={sys} par={par}");
            }
        }
    }

    #[test]
    fn matches_brute_force_length_10() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = trellis();
        for _ in 0..1000 {
            let p = rng.random_range(0.1..0.9);
            let q = rng.random_range(0.1..0.9);
            let (_, _, sys, par) = random_instance(&mut rng, &t, 10, true, p, q);
            let fast = bcjr_erasure_decode(&t, &sys, &par, true, true).unwrap();
            let slow = brute_force_map(&t, &sys, &par, true, true).unwrap();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn never_errs_and_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = trellis();
        for _ in 0..300 {
            let (inputs, parities, sys, par) = random_instance(&mut rng, &t, 40, true, 0.6, 0.6);
            let out = bcjr_erasure_decode(&t, &sys, &par, true, true).unwrap();
            assert!(out.info_app.consistent_with(&inputs));
            assert!(out.info_extrinsic.consistent_with(&inputs));
            assert!(out.parity_extrinsic.consistent_with(&parities));

            // reveal one more observation
            let i = rng.random_range(0..40);
            let mut sys2 = sys.clone();
            let mut par2 = par.clone();
            if rng.random_bool(0.5) {
                sys2[i] = Symbol::known(inputs[i]);
            } else {
                par2[i] = Symbol::known(parities[i]);
            }
            let out2 = bcjr_erasure_decode(&t, &sys2, &par2, true, true).unwrap();
            for (a, b) in [
                (&out.info_app, &out2.info_app),
                (&out.info_extrinsic, &out2.info_extrinsic),
                (&out.parity_extrinsic, &out2.parity_extrinsic),
            ] {
                assert!(a.iter().zip(b.iter()).all(|(x, y)| x.is_erased() || x == y));
            }
        }
    }

    #[test]
    fn zero_state_stays_possible_for_zero_codeword() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = trellis();
        for _ in 0..100 {
            let mask: Vec<bool> = (0..50).map(|_| rng.random_bool(0.7)).collect();
            let mask2: Vec<bool> = (0..50).map(|_| rng.random_bool(0.7)).collect();
            let sys = ErasureVec::from_mask(&[0; 50], &mask);
            let par = ErasureVec::from_mask(&[0; 50], &mask2);
            let f = forward_sets(&t, &sys, &par, true);
            let b = backward_sets(&t, &sys, &par, true);
            assert!(f.iter().all(|s| s.contains(0)));
            assert!(b.iter().all(|s| s.contains(0)));
        }
    }
}
