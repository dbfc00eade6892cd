//! Whole-code MAP oracles for the erasure channel.
//!
//! Both oracles treat the code only through a linear encoding map from
//! information bits to transmitted bits and know nothing about trellises or
//! message passing. Over the BEC the posterior is uniform on the codewords
//! consistent with the unerased positions, so an information bit is
//! recoverable iff all of them agree on it.

use crate::erasure::{ErasureVec, Symbol};
use crate::error::{Error, Result};

/// Largest information length [`exhaustive_map`] enumerates.
pub const EXHAUSTIVE_MAX_INFO: usize = 24;

/// MAP decision by enumerating every information word.
pub fn exhaustive_map<F>(info_len: usize, encode: F, channel: &ErasureVec) -> Result<ErasureVec>
where
    F: Fn(&[u8]) -> Vec<u8>,
{
    if info_len > EXHAUSTIVE_MAX_INFO {
        return Err(Error::TooLarge(format!(
            "{info_len} information bits exceed {EXHAUSTIVE_MAX_INFO}"
        )));
    }
    let mut seen = vec![0u8; info_len];
    let mut word = vec![0u8; info_len];
    let mut any = false;
    for w in 0u64..(1 << info_len) {
        for (i, b) in word.iter_mut().enumerate() {
            *b = (w >> i & 1) as u8;
        }
        let cw = encode(&word);
        if cw.len() != channel.len() {
            return Err(Error::LengthMismatch {
                what: "encoded word",
                expected: channel.len(),
                got: cw.len(),
            });
        }
        if channel.consistent_with(&cw) {
            any = true;
            for (s, &b) in seen.iter_mut().zip(&word) {
                *s |= 1 << b;
            }
        }
    }
    if !any {
        return Err(Error::Inconsistent("no information word matches the observation".into()));
    }
    Ok(seen.into_iter().map(|m| Symbol::from_seen(m).unwrap()).collect())
}

/// Dense GF(2) row with an appended right-hand side bit.
#[derive(Clone, Debug)]
struct Row {
    bits: Vec<u64>,
    rhs: u8,
}

impl Row {
    fn get(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn xor(&mut self, other: &Row) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= b;
        }
        self.rhs ^= other.rhs;
    }

    fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }
}

/// MAP decision by Gaussian elimination over GF(2); exact for any linear
/// code and usable at lengths far beyond enumeration.
///
/// The generator is recovered by encoding unit vectors, so `encode` must be
/// linear. An information bit is known iff its unit vector lies in the row
/// space of the observed generator rows; its value is the matching
/// combination of observed bits.
pub fn gf2_map<F>(info_len: usize, encode: F, channel: &ErasureVec) -> Result<ErasureVec>
where
    F: Fn(&[u8]) -> Vec<u8>,
{
    let words = info_len.div_ceil(64).max(1);
    let mut columns = Vec::with_capacity(info_len);
    let mut unit = vec![0u8; info_len];
    for i in 0..info_len {
        unit[i] = 1;
        let cw = encode(&unit);
        unit[i] = 0;
        if cw.len() != channel.len() {
            return Err(Error::LengthMismatch {
                what: "encoded word",
                expected: channel.len(),
                got: cw.len(),
            });
        }
        columns.push(cw);
    }
    if !encode(&unit).iter().all(|&b| b == 0) {
        return Err(Error::InvalidConfig("encoder is not linear".into()));
    }

    // one equation per unerased transmitted bit
    let mut rows: Vec<Row> = Vec::new();
    for (j, sym) in channel.iter().enumerate() {
        if let Some(v) = sym.value() {
            let mut bits = vec![0u64; words];
            for (i, col) in columns.iter().enumerate() {
                if col[j] == 1 {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            rows.push(Row { bits, rhs: v });
        }
    }

    // reduced row echelon form
    let mut pivots: Vec<(usize, Row)> = Vec::new();
    for mut row in rows {
        for (col, p) in &pivots {
            if row.get(*col) {
                row.xor(p);
            }
        }
        if row.is_zero() {
            if row.rhs != 0 {
                return Err(Error::Inconsistent("observed bits contradict the code".into()));
            }
            continue;
        }
        let col = (0..info_len).find(|&i| row.get(i)).unwrap();
        for (_, p) in pivots.iter_mut() {
            if p.get(col) {
                p.xor(&row);
            }
        }
        pivots.push((col, row));
    }

    // in RREF a unit vector is in the row space iff its pivot row is a unit row
    let mut out = ErasureVec::erased(info_len);
    for (col, row) in &pivots {
        let weight: u32 = row.bits.iter().map(|w| w.count_ones()).sum();
        if weight == 1 {
            out[*col] = Symbol::known(row.rhs);
        }
    }
    Ok(out)
}
