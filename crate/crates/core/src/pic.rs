//! Partial information coupling of turbo code blocks.
//!
//! A chain of `L` code blocks (CBs) shares information between neighbours:
//! the length-`K` encoder input of CB `t` is
//!
//! ```text
//! [u(t-m,t) .. u(t-1,t) | u(t,t) | u(t,t+1) .. u(t,t+m)]
//! ```
//!
//! where each coupled piece `u(t,t+j)` has `D/m` bits and is encoded by both
//! CB `t` and CB `t+j`. Pieces that would reach outside the chain are padded
//! with zeros and not transmitted. Incoming pieces are not retransmitted
//! either: their channel observation comes from the CB that introduced them.
//!
//! Decoding runs feed-forward/feed-back (FF-FB) sweeps over the chain. Each
//! CB is turbo-decoded to its fixed point using, as prior for its coupled
//! pieces, the most recent extrinsic messages exported by the partner CBs.
//!
//! CB indices are zero-based here.

use std::ops::Range;

use num_rational::Ratio;
use rayon::prelude::*;

use crate::erasure::{ErasureVec, Symbol};
use crate::error::{Error, Result};
use crate::trellis::{RscSpec, Trellis};
use crate::turbo::{Interleaver, TurboCode, TurboCodeword, TurboObservation};

/// Exact rational parameter, e.g. the coupling ratio.
pub type Rational = Ratio<i64>;

/// Ensemble and decoder parameters of a coupled chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PicConfig {
    /// Information bits per code block.
    pub k: usize,
    /// Coded bits per code block (`3K` for the rate-1/3 component code).
    pub n: usize,
    /// Number of code blocks.
    pub l: usize,
    /// Coupling ratio `D/K`.
    pub lambda: Rational,
    /// Coupling memory.
    pub m: usize,
    /// Cap on FF-FB rounds.
    pub max_sweeps: usize,
    /// Interleaver seed.
    pub seed: u64,
    pub interleaver: InterleaverKind,
    pub spec: RscSpec,
}

/// Interleaver family of the component turbo code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterleaverKind {
    /// Uniform random permutation.
    #[default]
    Random,
    /// S-random permutation with [`Interleaver::default_spread`].
    SRandom,
}

impl std::str::FromStr for InterleaverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random" => Ok(InterleaverKind::Random),
            "s-random" => Ok(InterleaverKind::SRandom),
            other => Err(Error::Parse(format!("unknown interleaver {other:?}, expected random or s-random"))),
        }
    }
}

impl std::fmt::Display for InterleaverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InterleaverKind::Random => "random",
            InterleaverKind::SRandom => "s-random",
        })
    }
}

impl Default for PicConfig {
    fn default() -> Self {
        PicConfig {
            k: 1024,
            n: 3072,
            l: 20,
            lambda: Rational::new(1, 4),
            m: 1,
            max_sweeps: 100,
            seed: 1,
            interleaver: InterleaverKind::Random,
            spec: RscSpec::DEFAULT,
        }
    }
}

impl PicConfig {
    pub fn new(k: usize, l: usize, lambda: Rational, m: usize) -> Result<Self> {
        let cfg = PicConfig {
            k,
            n: 3 * k,
            l,
            lambda,
            m,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 {
            return bad("K must be positive".into());
        }
        if self.n != 3 * self.k {
            return bad(format!("N = {} but the component code has N = 3K = {}", self.n, 3 * self.k));
        }
        if self.m == 0 {
            return bad("coupling memory must be at least 1".into());
        }
        if self.lambda < Rational::from_integer(0) || self.lambda > Rational::new(1, 2) {
            return bad(format!("coupling ratio {} outside [0, 1/2]", self.lambda));
        }
        let d = self.lambda * Rational::from_integer(self.k as i64);
        if !d.is_integer() {
            return bad(format!("D = {}*{} is not an integer", self.lambda, self.k));
        }
        if d.to_integer() % self.m as i64 != 0 {
            return bad(format!("D = {} is not divisible by m = {}", d, self.m));
        }
        if self.l <= self.m {
            return bad(format!("L = {} must exceed m = {}", self.l, self.m));
        }
        if self.max_sweeps == 0 {
            return bad("at least one FF-FB sweep is required".into());
        }
        Ok(())
    }

    /// Coupled bits per code block, `D = λK`.
    pub fn coupled_len(&self) -> usize {
        (self.lambda * Rational::from_integer(self.k as i64)).to_integer() as usize
    }

    /// Length of one coupled piece, `D/m`.
    pub fn piece_len(&self) -> usize {
        self.coupled_len() / self.m
    }

    /// Layout of the encoder input of CB `t`.
    pub fn layout(&self, t: usize) -> CbLayout {
        let p = self.piece_len();
        let d = self.coupled_len();
        let incoming = (1..=self.m)
            .map(|j| Piece {
                lag: j,
                range: (self.m - j) * p..(self.m - j + 1) * p,
                padded: t < j,
            })
            .collect();
        let outgoing = (1..=self.m)
            .map(|j| Piece {
                lag: j,
                range: self.k - d + (j - 1) * p..self.k - d + j * p,
                padded: t + j >= self.l,
            })
            .collect();
        CbLayout {
            incoming,
            uncoupled: d..self.k - d,
            outgoing,
        }
    }

    /// Length of the information stream carried by the chain.
    pub fn info_len(&self) -> usize {
        (0..self.l).map(|t| self.layout(t).new_info_len()).sum()
    }

    /// Zero-padded information positions that would otherwise carry new
    /// information, `D(m+1)/2`.
    pub fn padded_len(&self) -> usize {
        self.coupled_len() * (self.m + 1) / 2
    }

    pub fn trellis(&self) -> Trellis {
        Trellis::new(self.spec)
    }

    /// Sets one field from its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<usize> {
            v.parse().map_err(|e| Error::Parse(format!("{key} = {v:?}: {e}")))
        };
        match key {
            "k" | "K" => {
                self.k = num(value)?;
                self.n = 3 * self.k;
            }
            "n" | "N" => self.n = num(value)?,
            "l" | "L" => self.l = num(value)?,
            "m" => self.m = num(value)?,
            "lambda" => {
                self.lambda = value
                    .parse()
                    .map_err(|e| Error::Parse(format!("lambda = {value:?}: {e}")))?
            }
            "max_sweeps" | "i_max" => self.max_sweeps = num(value)?,
            "seed" => self.seed = num(value)? as u64,
            "generators" => self.spec = value.parse()?,
            "interleaver" => self.interleaver = value.parse()?,
            _ => return Err(Error::Parse(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Reads flat `key = value` text; `#` starts a comment. Keys not given
    /// keep their defaults.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = PicConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        if !text.lines().any(|l| l.split('#').next().unwrap_or("").trim_start().starts_with(['n', 'N'])) {
            cfg.n = 3 * cfg.k;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        format!(
            "k = {}\nn = {}\nl = {}\nlambda = {}\nm = {}\nmax_sweeps = {}\nseed = {}\ninterleaver = {}\ngenerators = {}\n",
            self.k, self.n, self.l, self.lambda, self.m, self.max_sweeps, self.seed, self.interleaver, self.spec
        )
    }
}

/// One coupled piece inside a CB's encoder input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    /// Distance `j` to the partner CB.
    pub lag: usize,
    pub range: Range<usize>,
    /// Forced to zero because the partner lies outside the chain.
    pub padded: bool,
}

/// Partition of a CB's encoder input into coupled and uncoupled ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbLayout {
    /// `u(t-j,t)` for `j = 1..=m`.
    pub incoming: Vec<Piece>,
    /// `u(t,t)`.
    pub uncoupled: Range<usize>,
    /// `u(t,t+j)` for `j = 1..=m`.
    pub outgoing: Vec<Piece>,
}

impl CbLayout {
    /// Ranges of new information owned by this CB, in stream order.
    pub fn owned_ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        std::iter::once(self.uncoupled.clone())
            .chain(self.outgoing.iter().filter(|p| !p.padded).map(|p| p.range.clone()))
    }

    pub fn new_info_len(&self) -> usize {
        self.owned_ranges().map(|r| r.len()).sum()
    }

    pub fn padded_ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.incoming
            .iter()
            .chain(&self.outgoing)
            .filter(|p| p.padded)
            .map(|p| p.range.clone())
    }
}

/// Encoder and decoder for a coupled chain.
#[derive(Debug, Clone)]
pub struct PicCode {
    config: PicConfig,
    turbo: TurboCode,
    layouts: Vec<CbLayout>,
}

/// Encoded chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PicCodeword {
    pub blocks: Vec<TurboCodeword>,
}

/// Result of [`PicCode::decode`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PicDecodeOutput {
    /// Estimate of the information stream.
    pub info: ErasureVec,
    pub residual_erasures: usize,
    /// FF-FB rounds executed.
    pub sweeps_used: usize,
    /// Residual erasures after each round.
    pub residual_history: Vec<usize>,
    /// Per-CB a-posteriori knowledge of the encoder inputs.
    pub block_app: Vec<ErasureVec>,
}

impl PicCode {
    pub fn new(config: PicConfig) -> Result<Self> {
        config.validate()?;
        let interleaver = match config.interleaver {
            InterleaverKind::Random => Interleaver::random(config.k, config.seed),
            InterleaverKind::SRandom => {
                Interleaver::s_random(config.k, Interleaver::default_spread(config.k), config.seed)?
            }
        };
        Self::with_interleaver(config, interleaver)
    }

    pub fn with_interleaver(config: PicConfig, interleaver: Interleaver) -> Result<Self> {
        config.validate()?;
        if interleaver.len() != config.k {
            return Err(Error::LengthMismatch {
                what: "interleaver",
                expected: config.k,
                got: interleaver.len(),
            });
        }
        let layouts = (0..config.l).map(|t| config.layout(t)).collect();
        Ok(PicCode {
            turbo: TurboCode::new(config.trellis(), interleaver),
            config,
            layouts,
        })
    }

    pub fn config(&self) -> &PicConfig {
        &self.config
    }

    pub fn turbo(&self) -> &TurboCode {
        &self.turbo
    }

    pub fn layout(&self, t: usize) -> &CbLayout {
        &self.layouts[t]
    }

    pub fn info_len(&self) -> usize {
        self.config.info_len()
    }

    /// Assembles the encoder inputs `u_t` from the information stream.
    pub fn encoder_inputs(&self, info: &[u8]) -> Result<Vec<Vec<u8>>> {
        if info.len() != self.info_len() {
            return Err(Error::LengthMismatch {
                what: "information stream",
                expected: self.info_len(),
                got: info.len(),
            });
        }
        let cfg = &self.config;
        let mut inputs = vec![vec![0u8; cfg.k]; cfg.l];
        let mut pos = 0;
        for (t, layout) in self.layouts.iter().enumerate() {
            for r in layout.owned_ranges() {
                inputs[t][r.clone()].copy_from_slice(&info[pos..pos + r.len()]);
                pos += r.len();
            }
            for piece in layout.outgoing.iter().filter(|p| !p.padded) {
                let j = piece.lag;
                let dst = self.layouts[t + j].incoming[j - 1].range.clone();
                let src = inputs[t][piece.range.clone()].to_vec();
                inputs[t + j][dst].copy_from_slice(&src);
            }
        }
        Ok(inputs)
    }

    pub fn encode(&self, info: &[u8]) -> Result<PicCodeword> {
        let blocks = self
            .encoder_inputs(info)?
            .par_iter()
            .map(|u| self.turbo.encode(u))
            .collect::<Result<Vec<_>>>()?;
        Ok(PicCodeword { blocks })
    }

    /// Bits sent over the channel for CB `t`: the owned information ranges
    /// followed by the parity and tail bits.
    pub fn block_transmission(&self, t: usize, cw: &TurboCodeword) -> Vec<u8> {
        let mut out: Vec<u8> = self.layouts[t]
            .owned_ranges()
            .flat_map(|r| cw.systematic[r].to_vec())
            .collect();
        out.extend(cw.redundancy_bits());
        out
    }

    /// Length of CB `t`'s transmission.
    pub fn block_transmission_len(&self, t: usize) -> usize {
        self.layouts[t].new_info_len() + 2 * self.config.k + 4 * self.turbo.trellis().memory()
    }

    /// The whole transmitted stream, CB after CB.
    pub fn transmitted_bits(&self, cw: &PicCodeword) -> Vec<u8> {
        cw.blocks
            .iter()
            .enumerate()
            .flat_map(|(t, b)| self.block_transmission(t, b))
            .collect()
    }

    pub fn transmitted_len(&self) -> usize {
        (0..self.config.l).map(|t| self.block_transmission_len(t)).sum()
    }

    /// Per-CB observations from a channel observation of
    /// [`PicCode::transmitted_bits`]. Incoming pieces take the observation of
    /// the CB that sent them; padded positions are known zeros.
    pub fn observations(&self, channel: &ErasureVec) -> Result<Vec<TurboObservation>> {
        if channel.len() != self.transmitted_len() {
            return Err(Error::LengthMismatch {
                what: "channel observation",
                expected: self.transmitted_len(),
                got: channel.len(),
            });
        }
        let k = self.config.k;
        let nu = self.turbo.trellis().memory();
        let mut obs = Vec::with_capacity(self.config.l);
        let mut pos = 0;
        for layout in &self.layouts {
            let info_len = layout.new_info_len();
            let red_len = 2 * k + 4 * nu;
            let mut o = TurboObservation::from_redundancy(k, nu, &channel[pos + info_len..pos + info_len + red_len])?;
            let mut p = pos;
            for r in layout.owned_ranges() {
                o.systematic[r.clone()].copy_from_slice(&channel[p..p + r.len()]);
                p += r.len();
            }
            for r in layout.padded_ranges() {
                o.systematic[r].fill(Symbol::Known0);
            }
            pos += info_len + red_len;
            obs.push(o);
        }
        for t in 0..self.config.l {
            for piece in self.layouts[t].outgoing.iter().filter(|p| !p.padded) {
                let j = piece.lag;
                let src = obs[t].systematic[piece.range.clone()].to_vec();
                let dst = self.layouts[t + j].incoming[j - 1].range.clone();
                obs[t + j].systematic[dst].copy_from_slice(&src);
            }
        }
        Ok(obs)
    }

    /// Coupled prior of CB `t` from the partners' exported extrinsics.
    fn coupled_prior(&self, t: usize, exported: &[ErasureVec]) -> ErasureVec {
        let layout = &self.layouts[t];
        let mut prior = ErasureVec::erased(self.config.k);
        for piece in layout.incoming.iter().filter(|p| !p.padded) {
            let src = &self.layouts[t - piece.lag].outgoing[piece.lag - 1].range;
            prior[piece.range.clone()].copy_from_slice(&exported[t - piece.lag][src.clone()]);
        }
        for piece in layout.outgoing.iter().filter(|p| !p.padded) {
            let src = &self.layouts[t + piece.lag].incoming[piece.lag - 1].range;
            prior[piece.range.clone()].copy_from_slice(&exported[t + piece.lag][src.clone()]);
        }
        prior
    }

    /// FF-FB decoding.
    ///
    /// Each round decodes CB `0..L` and then `L..0`; decoding stops when every
    /// information bit is known, when a round resolves nothing new, or after
    /// `max_sweeps` rounds.
    pub fn decode(&self, obs: &[TurboObservation]) -> Result<PicDecodeOutput> {
        let cfg = &self.config;
        if obs.len() != cfg.l {
            return Err(Error::LengthMismatch {
                what: "code block observations",
                expected: cfg.l,
                got: obs.len(),
            });
        }
        let mut exported = vec![ErasureVec::erased(cfg.k); cfg.l];
        let mut app: Vec<ErasureVec> = obs.iter().map(|o| o.systematic.clone()).collect();
        let mut history = Vec::new();
        let schedule: Vec<usize> = (0..cfg.l).chain((0..cfg.l).rev()).collect();
        for _ in 0..cfg.max_sweeps {
            let mut gained = 0;
            for &t in &schedule {
                let prior = self.coupled_prior(t, &exported);
                let out = self.turbo.decode_bec(&obs[t], &prior)?;
                gained += exported[t].absorb(&out.info_extrinsic_total)?;
                gained += app[t].absorb(&out.info_app)?;
            }
            let info = self.merge_estimate(&app)?;
            let residual = info.erased_count();
            history.push(residual);
            if residual == 0 || gained == 0 {
                break;
            }
        }
        let info = self.merge_estimate(&app)?;
        Ok(PicDecodeOutput {
            residual_erasures: info.erased_count(),
            sweeps_used: history.len(),
            residual_history: history,
            info,
            block_app: app,
        })
    }

    /// Decodes a channel observation of the transmitted stream.
    pub fn decode_channel(&self, channel: &ErasureVec) -> Result<PicDecodeOutput> {
        self.decode(&self.observations(channel)?)
    }

    /// Information stream estimate; coupled pieces combine both copies.
    fn merge_estimate(&self, app: &[ErasureVec]) -> Result<ErasureVec> {
        let mut info = Vec::with_capacity(self.info_len());
        for (t, layout) in self.layouts.iter().enumerate() {
            info.extend_from_slice(&app[t][layout.uncoupled.clone()]);
            for piece in layout.outgoing.iter().filter(|p| !p.padded) {
                let j = piece.lag;
                let mine = &app[t][piece.range.clone()];
                let theirs = &app[t + j][self.layouts[t + j].incoming[j - 1].range.clone()];
                for (a, b) in mine.iter().zip(theirs) {
                    info.push(a.merge(*b)?);
                }
            }
        }
        Ok(info.into())
    }
}
