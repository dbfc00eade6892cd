//! Rate-1/2 recursive systematic convolutional (RSC) codes and their trellis.
//!
//! Generators use the usual octal convention: the most significant of the
//! `memory + 1` bits is the coefficient of `D^0`. The default component code
//! is `(1, 5/7)`, a 4-state code with feedback `1 + D + D^2` and feedforward
//! `1 + D^2`.
//!
//! A state packs the register contents as `a[t-1] | a[t-2] << 1 | ...`, where
//! `a[t] = u[t] ^ <feedback taps, state>` is the recursion bit.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported memory. State sets are stored as `u16` bitmasks.
pub const MAX_MEMORY: u32 = 4;

/// Definition of a rate-1/2 RSC code by its octal generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RscSpec {
    feedback: u32,
    feedforward: u32,
    memory: u32,
}

impl RscSpec {
    /// The `(1, 5/7)` code used throughout.
    pub const DEFAULT: RscSpec = RscSpec {
        feedback: 0o7,
        feedforward: 0o5,
        memory: 2,
    };

    pub fn new(feedback: u32, feedforward: u32, memory: u32) -> Result<Self> {
        if memory == 0 || memory > MAX_MEMORY {
            return Err(Error::InvalidGenerator(format!(
                "memory {memory} outside 1..={MAX_MEMORY}"
            )));
        }
        let limit = 1u32 << (memory + 1);
        if feedback >= limit || feedforward >= limit {
            return Err(Error::InvalidGenerator(format!(
                "generators {feedback:o},{feedforward:o} do not fit in {} bits",
                memory + 1
            )));
        }
        if feedback >> memory & 1 == 0 {
            return Err(Error::InvalidGenerator(format!(
                "feedback {feedback:o} has no constant term"
            )));
        }
        Ok(RscSpec {
            feedback,
            feedforward,
            memory,
        })
    }

    /// Builds a spec from octal generators, inferring the memory from the
    /// feedback polynomial's width.
    pub fn from_octal(feedback: u32, feedforward: u32) -> Result<Self> {
        if feedback == 0 {
            return Err(Error::InvalidGenerator("zero feedback".into()));
        }
        let memory = 31 - feedback.leading_zeros();
        Self::new(feedback, feedforward, memory)
    }

    pub fn feedback(&self) -> u32 {
        self.feedback
    }

    pub fn feedforward(&self) -> u32 {
        self.feedforward
    }

    pub fn memory(&self) -> u32 {
        self.memory
    }

    pub fn state_count(&self) -> usize {
        1 << self.memory
    }

    /// Coefficient of `D^i` in a generator.
    fn tap(&self, poly: u32, i: u32) -> u32 {
        (poly >> (self.memory - i)) & 1
    }
}

impl Default for RscSpec {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for RscSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:o},{:o}", self.feedback, self.feedforward)
    }
}

/// Parses `"feedback,feedforward"` octal pairs such as `"7,5"`.
impl FromStr for RscSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (fb, ff) = s
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("expected \"feedback,feedforward\", got {s:?}")))?;
        let parse = |t: &str| {
            u32::from_str_radix(t.trim(), 8)
                .map_err(|e| Error::Parse(format!("bad octal generator {t:?}: {e}")))
        };
        Self::from_octal(parse(fb)?, parse(ff)?)
    }
}

/// State-transition table of an RSC code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trellis {
    spec: RscSpec,
    next: Vec<[u8; 2]>,
    parity: Vec<[u8; 2]>,
    // predecessors[s'] lists (s, u) with next(s, u) = s'
    predecessors: Vec<Vec<(u8, u8)>>,
}

impl Trellis {
    pub fn new(spec: RscSpec) -> Self {
        let n = spec.state_count();
        let nu = spec.memory;
        let mask = (n - 1) as u32;
        let mut next = vec![[0u8; 2]; n];
        let mut parity = vec![[0u8; 2]; n];
        let mut predecessors = vec![Vec::new(); n];
        for s in 0..n as u32 {
            // a[t-i] lives in bit i-1 of the state
            let fb_sum = (1..=nu).fold(0, |acc, i| acc ^ (spec.tap(spec.feedback, i) & (s >> (i - 1))));
            let ff_mem = (1..=nu).fold(0, |acc, i| acc ^ (spec.tap(spec.feedforward, i) & (s >> (i - 1))));
            for u in 0..2u32 {
                let a = (u ^ fb_sum) & 1;
                let p = (spec.tap(spec.feedforward, 0) & a) ^ (ff_mem & 1);
                let ns = ((s << 1) | a) & mask;
                next[s as usize][u as usize] = ns as u8;
                parity[s as usize][u as usize] = p as u8;
                predecessors[ns as usize].push((s as u8, u as u8));
            }
        }
        Trellis {
            spec,
            next,
            parity,
            predecessors,
        }
    }

    pub fn spec(&self) -> &RscSpec {
        &self.spec
    }

    pub fn memory(&self) -> usize {
        self.spec.memory as usize
    }

    pub fn state_count(&self) -> usize {
        self.next.len()
    }

    #[inline]
    pub fn next_state(&self, state: usize, input: u8) -> usize {
        self.next[state][input as usize] as usize
    }

    #[inline]
    pub fn parity(&self, state: usize, input: u8) -> u8 {
        self.parity[state][input as usize]
    }

    pub fn predecessors(&self, state: usize) -> &[(u8, u8)] {
        &self.predecessors[state]
    }

    /// Input bit that drives the recursion bit to zero from `state`; applying
    /// it `memory` times returns the encoder to state 0.
    pub fn tail_input(&self, state: usize) -> u8 {
        if self.next_state(state, 0) & 1 == 0 {
            0
        } else {
            1
        }
    }

    /// Encodes `info` from state 0. With `terminate`, `memory` tail inputs
    /// are appended and returned together with their parity.
    pub fn encode(&self, info: &[u8], terminate: bool) -> RscCodeword {
        let mut state = 0;
        let mut parity = Vec::with_capacity(info.len());
        for &u in info {
            debug_assert!(u <= 1);
            parity.push(self.parity(state, u));
            state = self.next_state(state, u);
        }
        let mut tail = Tail::default();
        if terminate {
            for _ in 0..self.memory() {
                let u = self.tail_input(state);
                tail.systematic.push(u);
                tail.parity.push(self.parity(state, u));
                state = self.next_state(state, u);
            }
            debug_assert_eq!(state, 0);
        }
        RscCodeword {
            systematic: info.to_vec(),
            parity,
            tail,
            final_state: state,
        }
    }
}

/// Termination bits of one constituent encoder.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tail {
    pub systematic: Vec<u8>,
    pub parity: Vec<u8>,
}

impl Tail {
    pub fn len(&self) -> usize {
        self.systematic.len() + self.parity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systematic.is_empty()
    }
}

/// Output of [`Trellis::encode`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RscCodeword {
    pub systematic: Vec<u8>,
    pub parity: Vec<u8>,
    pub tail: Tail,
    pub final_state: usize,
}

impl RscCodeword {
    /// Input sequence driving the trellis, tail included.
    pub fn inputs(&self) -> Vec<u8> {
        let mut v = self.systematic.clone();
        v.extend_from_slice(&self.tail.systematic);
        v
    }

    /// Parity sequence, tail included.
    pub fn parities(&self) -> Vec<u8> {
        let mut v = self.parity.clone();
        v.extend_from_slice(&self.tail.parity);
        v
    }
}
