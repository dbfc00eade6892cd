//! Exact erasure transfer functions of a BCJR constituent decoder.
//!
//! Assume the all-zero codeword (the code is linear and the channel
//! symmetric). With each systematic prior erased with probability `p̄` and
//! each parity observation with probability `q̄`, independently, the forward
//! state set of the erasure BCJR decoder is a Markov chain on sets of states
//! containing state 0, and so is the backward set. In a long block the
//! forward set before a section and the backward set after it are
//! independent draws from the two stationary distributions. The extrinsic on
//! the information bit of that section is erased iff the transitions joining
//! the two sets, filtered by the parity observation, carry both input values;
//! the parity extrinsic is the same with the systematic prior as filter.
//!
//! The chain is tiny for the 4-state code (at most 8 sets), so stationary
//! distributions are solved directly.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bcjr::{bcjr_erasure_decode, StateSet};
use crate::erasure::{ErasureVec, Symbol};
use crate::error::{Error, Result};
use crate::trellis::Trellis;

/// Direction of a state-set chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Distribution over the state sets of a [`ChainModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDistribution {
    pub direction: Direction,
    /// Sets in the support order of the model.
    pub sets: Vec<StateSet>,
    pub probs: Vec<f64>,
}

impl ChainDistribution {
    pub fn prob_of(&self, set: StateSet) -> f64 {
        self.sets
            .iter()
            .position(|&s| s == set)
            .map_or(0.0, |i| self.probs[i])
    }
}

// observation patterns indexed by (sys_erased as usize) | (par_erased as usize) << 1
const PATTERNS: usize = 4;

fn pattern_symbols(pattern: usize) -> (Symbol, Symbol) {
    let sym = |erased: bool| if erased { Symbol::Erased } else { Symbol::Known0 };
    (sym(pattern & 1 == 1), sym(pattern & 2 == 2))
}

fn pattern_prob(pattern: usize, p_bar: f64, q_bar: f64) -> f64 {
    let ps = if pattern & 1 == 1 { p_bar } else { 1.0 - p_bar };
    let pq = if pattern & 2 == 2 { q_bar } else { 1.0 - q_bar };
    ps * pq
}

/// Structure of the forward and backward state-set chains of a trellis.
#[derive(Debug, Clone)]
pub struct ChainModel {
    trellis: Trellis,
    /// Sets containing state 0 reachable from `{0}` in either direction.
    sets: Vec<StateSet>,
    fwd_next: Vec<[usize; PATTERNS]>,
    bwd_next: Vec<[usize; PATTERNS]>,
    /// `info_erased[a][b]` bit `e` is set when the info extrinsic is erased
    /// for forward set `a`, backward set `b` and parity erasure flag `e`.
    info_erased: Vec<Vec<u8>>,
    /// Same for the parity extrinsic, indexed by the systematic erasure flag.
    parity_erased: Vec<Vec<u8>>,
    start: usize,
}

impl ChainModel {
    pub fn new(trellis: &Trellis) -> Self {
        let start = StateSet::single(0);
        let mut sets = vec![start];
        let mut index: HashMap<StateSet, usize> = HashMap::from([(start, 0)]);
        let mut fwd_next: Vec<[usize; PATTERNS]> = Vec::new();
        let mut bwd_next: Vec<[usize; PATTERNS]> = Vec::new();
        let mut i = 0;
        while i < sets.len() {
            let set = sets[i];
            let mut f = [0; PATTERNS];
            let mut b = [0; PATTERNS];
            for pat in 0..PATTERNS {
                let (x, p) = pattern_symbols(pat);
                for (slot, next) in [
                    (&mut f[pat], trellis.forward_step(set, x, p)),
                    (&mut b[pat], trellis.backward_step(set, x, p)),
                ] {
                    *slot = *index.entry(next).or_insert_with(|| {
                        sets.push(next);
                        sets.len() - 1
                    });
                }
            }
            fwd_next.push(f);
            bwd_next.push(b);
            i += 1;
        }

        let n = sets.len();
        let mut info_erased = vec![vec![0u8; n]; n];
        let mut parity_erased = vec![vec![0u8; n]; n];
        for (ai, &a) in sets.iter().enumerate() {
            for (bi, &b) in sets.iter().enumerate() {
                for erased in 0..2u8 {
                    let (mut us, mut ps) = (0u8, 0u8);
                    for s in a.iter() {
                        for u in 0..2u8 {
                            if !b.contains(trellis.next_state(s, u)) {
                                continue;
                            }
                            let p = trellis.parity(s, u);
                            if erased == 1 || p == 0 {
                                us |= 1 << u;
                            }
                            if erased == 1 || u == 0 {
                                ps |= 1 << p;
                            }
                        }
                    }
                    if us == 0b11 {
                        info_erased[ai][bi] |= 1 << erased;
                    }
                    if ps == 0b11 {
                        parity_erased[ai][bi] |= 1 << erased;
                    }
                }
            }
        }
        ChainModel {
            trellis: trellis.clone(),
            sets,
            fwd_next,
            bwd_next,
            info_erased,
            parity_erased,
            start: 0,
        }
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    pub fn sets(&self) -> &[StateSet] {
        &self.sets
    }

    fn next_table(&self, dir: Direction) -> &[[usize; PATTERNS]] {
        match dir {
            Direction::Forward => &self.fwd_next,
            Direction::Backward => &self.bwd_next,
        }
    }

    /// Row-stochastic transition matrix of the chain.
    pub fn transition_matrix(&self, dir: Direction, p_bar: f64, q_bar: f64) -> Vec<Vec<f64>> {
        let n = self.sets.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in self.next_table(dir).iter().enumerate() {
            for (pat, &j) in row.iter().enumerate() {
                m[i][j] += pattern_prob(pat, p_bar, q_bar);
            }
        }
        m
    }

    /// Stationary distribution of the chain started from `{0}`.
    ///
    /// Solves `π (P - I) = 0, Σπ = 1` directly. When that system is singular
    /// (several recurrent classes, only possible on the boundary of the unit
    /// square) the limit of the chain started from `{0}` is found by power
    /// iteration instead.
    pub fn stationary(&self, dir: Direction, p_bar: f64, q_bar: f64) -> ChainDistribution {
        let p = self.transition_matrix(dir, p_bar, q_bar);
        let probs = solve_stationary(&p).unwrap_or_else(|| power_iteration(&p, self.start));
        ChainDistribution {
            direction: dir,
            sets: self.sets.clone(),
            probs,
        }
    }

    fn extrinsic_erasure(&self, fwd: &[f64], bwd: &[f64], table: &[Vec<u8>], erase_prob: f64) -> f64 {
        let mut total = 0.0;
        for (a, &pa) in fwd.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for (b, &pb) in bwd.iter().enumerate() {
                let flags = table[a][b];
                let w = match flags {
                    0 => 0.0,
                    0b10 => erase_prob,
                    0b01 => 1.0 - erase_prob,
                    _ => 1.0,
                };
                inner += pb * w;
            }
            total += pa * inner;
        }
        total.clamp(0.0, 1.0)
    }

    /// `(F_p, F_q)` at `(p̄, q̄)`.
    pub fn evaluate(&self, p_bar: f64, q_bar: f64) -> TransferValue {
        let fwd = self.stationary(Direction::Forward, p_bar, q_bar);
        let bwd = self.stationary(Direction::Backward, p_bar, q_bar);
        TransferValue {
            fp: self.extrinsic_erasure(&fwd.probs, &bwd.probs, &self.info_erased, q_bar),
            fq: self.extrinsic_erasure(&fwd.probs, &bwd.probs, &self.parity_erased, p_bar),
        }
    }
}

const SINGULAR_PIVOT: f64 = 1e-12;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_STEPS: usize = 1_000_000;

/// Direct solve of `π P = π`, `Σπ = 1`; `None` if the system is singular.
fn solve_stationary(p: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = p.len();
    if n == 1 {
        return Some(vec![1.0]);
    }
    // rows of (P^T - I), last one replaced by the normalisation
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < SINGULAR_PIVOT {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..n {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col] / a[col][col];
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut pi: Vec<f64> = (0..n).map(|i| (a[i][n] / a[i][i]).max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= s);
    Some(pi)
}

fn power_iteration(p: &[Vec<f64>], start: usize) -> Vec<f64> {
    let n = p.len();
    let mut pi = vec![0.0; n];
    pi[start] = 1.0;
    for _ in 0..POWER_MAX_STEPS {
        let mut next = vec![0.0; n];
        for (i, row) in p.iter().enumerate() {
            for (j, &pij) in row.iter().enumerate() {
                next[j] += pi[i] * pij;
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < POWER_TOL {
            break;
        }
    }
    pi
}

/// Extrinsic erasure probabilities on information and parity bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferValue {
    pub fp: f64,
    pub fq: f64,
}

const CACHE_CAPACITY: usize = 1 << 16;

/// Transfer functions of one constituent decoder, with a bounded cache keyed
/// by the exact `(p̄, q̄)`.
#[derive(Debug)]
pub struct TransferFn {
    model: ChainModel,
    cache: Mutex<HashMap<(u64, u64), TransferValue>>,
}

impl Clone for TransferFn {
    fn clone(&self) -> Self {
        TransferFn::new(self.model.trellis())
    }
}

impl TransferFn {
    pub fn new(trellis: &Trellis) -> Self {
        TransferFn {
            model: ChainModel::new(trellis),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &ChainModel {
        &self.model
    }

    pub fn eval(&self, p_bar: f64, q_bar: f64) -> TransferValue {
        let p_bar = p_bar.clamp(0.0, 1.0);
        let q_bar = q_bar.clamp(0.0, 1.0);
        let key = (p_bar.to_bits(), q_bar.to_bits());
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return *v;
        }
        let v = self.model.evaluate(p_bar, q_bar);
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= CACHE_CAPACITY {
            cache.clear();
        }
        cache.insert(key, v);
        v
    }

    /// Information extrinsic erasure probability `F_p(p̄, q̄)`.
    pub fn fp(&self, p_bar: f64, q_bar: f64) -> f64 {
        self.eval(p_bar, q_bar).fp
    }

    /// Parity extrinsic erasure probability `F_q(p̄, q̄)`.
    pub fn fq(&self, p_bar: f64, q_bar: f64) -> f64 {
        self.eval(p_bar, q_bar).fq
    }
}

/// Forward stationary distribution.
pub fn forward_chain_stationary(trellis: &Trellis, p_bar: f64, q_bar: f64) -> ChainDistribution {
    ChainModel::new(trellis).stationary(Direction::Forward, p_bar, q_bar)
}

/// Backward stationary distribution.
pub fn backward_chain_stationary(trellis: &Trellis, p_bar: f64, q_bar: f64) -> ChainDistribution {
    ChainModel::new(trellis).stationary(Direction::Backward, p_bar, q_bar)
}

/// Monte-Carlo estimate of the transfer functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub fp: f64,
    pub fq: f64,
    pub fp_stderr: f64,
    pub fq_stderr: f64,
}

/// Number of batches for the batch-means standard error.
const MC_BATCHES: usize = 100;

/// Mean and batch-means standard error of a 0/1 series. Neighbouring
/// extrinsics are correlated, so the binomial formula would understate the
/// error.
pub fn batch_mean(indicators: &[bool], batches: usize) -> (f64, f64) {
    let n = indicators.len();
    let mean = indicators.iter().filter(|&&b| b).count() as f64 / n as f64;
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| indicators[b * size..(b + 1) * size].iter().filter(|&&x| x).count() as f64 / size as f64)
        .collect();
    let bm = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

/// Simulates one long all-zero block with i.i.d. erasures, decodes it once
/// and reports the fraction of erased extrinsics over the bulk.
pub fn mc_transfer_estimate(trellis: &Trellis, p_bar: f64, q_bar: f64, length: usize, seed: u64) -> Result<McEstimate> {
    if length < 10_000 {
        return Err(Error::InvalidConfig(format!("Monte-Carlo length {length} below 10^4")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sys: ErasureVec = (0..length)
        .map(|_| if rng.random_bool(p_bar) { Symbol::Erased } else { Symbol::Known0 })
        .collect();
    let par: ErasureVec = (0..length)
        .map(|_| if rng.random_bool(q_bar) { Symbol::Erased } else { Symbol::Known0 })
        .collect();
    let out = bcjr_erasure_decode(trellis, &sys, &par, true, true)?;
    let trim = 10 * trellis.memory();
    let bulk = trim..length - trim;
    let info: Vec<bool> = out.info_extrinsic[bulk.clone()].iter().map(|s| s.is_erased()).collect();
    let parity: Vec<bool> = out.parity_extrinsic[bulk].iter().map(|s| s.is_erased()).collect();
    let (fp, fp_stderr) = batch_mean(&info, MC_BATCHES);
    let (fq, fq_stderr) = batch_mean(&parity, MC_BATCHES);
    Ok(McEstimate {
        fp,
        fq,
        fp_stderr,
        fq_stderr,
    })
}
