//! Erasure-domain messages.
//!
//! Over the BEC every log-likelihood ratio is `+inf`, `-inf` or `0`, so a
//! message is one of three symbols. Combining two messages about the same bit
//! is "known dominates": any known value wins, and two known values must agree.

use std::fmt;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Symbol {
    Known0,
    Known1,
    #[default]
    Erased,
}

impl Symbol {
    #[inline]
    pub fn known(bit: u8) -> Self {
        if bit == 0 {
            Symbol::Known0
        } else {
            Symbol::Known1
        }
    }

    #[inline]
    pub fn is_known(self) -> bool {
        self != Symbol::Erased
    }

    #[inline]
    pub fn is_erased(self) -> bool {
        self == Symbol::Erased
    }

    #[inline]
    pub fn value(self) -> Option<u8> {
        match self {
            Symbol::Known0 => Some(0),
            Symbol::Known1 => Some(1),
            Symbol::Erased => None,
        }
    }

    /// True when this symbol permits the bit value `bit`.
    #[inline]
    pub fn allows(self, bit: u8) -> bool {
        match self {
            Symbol::Erased => true,
            Symbol::Known0 => bit == 0,
            Symbol::Known1 => bit == 1,
        }
    }

    /// Bitmask of permitted values: bit 0 for value 0, bit 1 for value 1.
    #[inline]
    pub(crate) fn allowed_mask(self) -> u8 {
        match self {
            Symbol::Known0 => 0b01,
            Symbol::Known1 => 0b10,
            Symbol::Erased => 0b11,
        }
    }

    /// Inverse of [`Symbol::allowed_mask`] for a nonempty set of candidate
    /// values.
    #[inline]
    pub(crate) fn from_seen(seen: u8) -> Option<Self> {
        match seen {
            0b01 => Some(Symbol::Known0),
            0b10 => Some(Symbol::Known1),
            0b11 => Some(Symbol::Erased),
            _ => None,
        }
    }

    /// Known-dominates combination.
    #[inline]
    pub fn merge(self, other: Symbol) -> Result<Symbol> {
        match (self, other) {
            (Symbol::Erased, x) | (x, Symbol::Erased) => Ok(x),
            (a, b) if a == b => Ok(a),
            _ => Err(Error::Inconsistent("known values disagree".into())),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symbol::Known0 => "0",
            Symbol::Known1 => "1",
            Symbol::Erased => "?",
        })
    }
}

/// A sequence of erasure-domain messages.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct ErasureVec(Vec<Symbol>);

impl ErasureVec {
    pub fn erased(len: usize) -> Self {
        ErasureVec(vec![Symbol::Erased; len])
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        ErasureVec(bits.iter().map(|&b| Symbol::known(b)).collect())
    }

    /// Keeps `bits[i]` where `erase[i]` is false.
    pub fn from_mask(bits: &[u8], erase: &[bool]) -> Self {
        assert_eq!(bits.len(), erase.len());
        ErasureVec(
            bits.iter()
                .zip(erase)
                .map(|(&b, &e)| if e { Symbol::Erased } else { Symbol::known(b) })
                .collect(),
        )
    }

    pub fn into_inner(self) -> Vec<Symbol> {
        self.0
    }

    pub fn erased_count(&self) -> usize {
        self.0.iter().filter(|s| s.is_erased()).count()
    }

    pub fn known_count(&self) -> usize {
        self.len() - self.erased_count()
    }

    /// Elementwise known-dominates combination.
    pub fn merge(&self, other: &ErasureVec) -> Result<ErasureVec> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                what: "merged erasure vectors",
                expected: self.len(),
                got: other.len(),
            });
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.merge(*b))
            .collect::<Result<Vec<_>>>()
            .map(ErasureVec)
    }

    /// In-place merge; returns how many positions went from erased to known.
    pub fn absorb(&mut self, other: &ErasureVec) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                what: "absorbed erasure vector",
                expected: self.len(),
                got: other.len(),
            });
        }
        let mut gained = 0;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            let merged = a.merge(*b)?;
            if a.is_erased() && merged.is_known() {
                gained += 1;
            }
            *a = merged;
        }
        Ok(gained)
    }

    /// True when every known entry equals the corresponding bit.
    pub fn consistent_with(&self, bits: &[u8]) -> bool {
        self.len() == bits.len() && self.0.iter().zip(bits).all(|(s, &b)| s.allows(b))
    }
}

impl Deref for ErasureVec {
    type Target = [Symbol];

    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl DerefMut for ErasureVec {
    fn deref_mut(&mut self) -> &mut [Symbol] {
        &mut self.0
    }
}

impl From<Vec<Symbol>> for ErasureVec {
    fn from(v: Vec<Symbol>) -> Self {
        ErasureVec(v)
    }
}

impl FromIterator<Symbol> for ErasureVec {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        ErasureVec(iter.into_iter().collect())
    }
}

impl fmt::Display for ErasureVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}
