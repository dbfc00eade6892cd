//! Code rates of coupled chains, in exact rational arithmetic.

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::pic::{PicConfig, Rational};

/// How zero padding is charged against the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateAccounting {
    /// Published formula: the numerator loses `λK` and the denominator
    /// `mλK - (λK/m)(2^(m-1) - 1)`.
    #[default]
    Published,
    /// Counts exactly what the encoder sends: both terms lose the `λK(m+1)/2`
    /// padded positions. Agrees with `Published` on the denominator for
    /// `m <= 3` and on the numerator only for `m = 1`.
    Layout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateResult {
    pub finite_rate: Rational,
    pub asymptotic_rate: Rational,
    /// Termination bits of the whole chain, not included in either rate.
    pub tail_overhead: usize,
}

impl RateResult {
    pub fn finite_f64(&self) -> f64 {
        self.finite_rate.to_f64().unwrap_or(f64::NAN)
    }

    pub fn asymptotic_f64(&self) -> f64 {
        self.asymptotic_rate.to_f64().unwrap_or(f64::NAN)
    }
}

/// Row of the `rate` report.
#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub k: usize,
    pub n: usize,
    pub l: usize,
    pub lambda: String,
    pub m: usize,
    pub finite_rate: f64,
    pub finite_rate_exact: String,
    pub asymptotic_rate: f64,
    pub tail_overhead: usize,
}

impl RateRow {
    pub fn new(cfg: &PicConfig, r: &RateResult) -> Self {
        RateRow {
            k: cfg.k,
            n: cfg.n,
            l: cfg.l,
            lambda: cfg.lambda.to_string(),
            m: cfg.m,
            finite_rate: r.finite_f64(),
            finite_rate_exact: r.finite_rate.to_string(),
            asymptotic_rate: r.asymptotic_f64(),
            tail_overhead: r.tail_overhead,
        }
    }
}

/// `(R - λR) / (1 - λR)`, the rate of an infinitely long chain built on a
/// component code of rate `R`.
pub fn asymptotic_rate(rate: Rational, lambda: Rational) -> Rational {
    let one = Rational::from_integer(1);
    (rate - lambda * rate) / (one - lambda * rate)
}

fn int(x: usize) -> Rational {
    Rational::from_integer(x as i64)
}

/// Overall rate of a finite chain.
pub fn finite_rate(cfg: &PicConfig, accounting: RateAccounting) -> RateResult {
    let (k, n, l) = (int(cfg.k), int(cfg.n), int(cfg.l));
    let d = cfg.lambda * k;
    let m = int(cfg.m);
    let (info_loss, coded_loss) = match accounting {
        RateAccounting::Published => {
            let pow = Rational::from_integer((1i64 << (cfg.m - 1)) - 1);
            (d, m * d - d / m * pow)
        }
        RateAccounting::Layout => {
            let pad = d * (m + Rational::from_integer(1)) / Rational::from_integer(2);
            (pad, pad)
        }
    };
    let finite = (l * (k - d) - info_loss) / (l * (n - d) - coded_loss);
    RateResult {
        finite_rate: finite,
        asymptotic_rate: asymptotic_rate(k / n, cfg.lambda),
        tail_overhead: cfg.l * 4 * cfg.spec.memory() as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pic::PicCode;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn table_rates() {
        let third = r(1, 3);
        assert_eq!(asymptotic_rate(third, r(1, 4)), r(3, 11));
        assert_eq!(asymptotic_rate(third, r(1, 2)), r(1, 5));
        assert_eq!(asymptotic_rate(third, r(1, 7)), r(3, 10));
        assert_eq!(asymptotic_rate(third, r(0, 1)), third);
    }

    #[test]
    fn lte_size_chain() {
        let cfg = PicConfig::new(6144, 100, r(1, 8), 1).unwrap();
        let res = finite_rate(&cfg, RateAccounting::Published);
        assert_eq!(res.finite_rate, r(536832, 1765632));
        assert!((res.finite_f64() - 0.30404).abs() < 1e-5);
        assert_eq!(res.tail_overhead, 800);
    }

    #[test]
    fn uncoupled_rate_is_one_third() {
        let cfg = PicConfig::new(6144, 100, r(0, 1), 1).unwrap();
        assert_eq!(finite_rate(&cfg, RateAccounting::Published).finite_rate, r(1, 3));
    }

    #[test]
    fn padding_term_by_memory() {
        // denominator loss equals λK(m+1)/2 for m = 1, 2, 3
        for (m, factor) in [(1, r(1, 1)), (2, r(3, 2)), (3, r(2, 1))] {
            let cfg = PicConfig::new(48, 10, r(1, 4), m).unwrap();
            let d = r(12, 1);
            let published = finite_rate(&cfg, RateAccounting::Published).finite_rate;
            let expect = (r(10, 1) * (r(48, 1) - d) - d) / (r(10, 1) * (r(144, 1) - d) - factor * d);
            assert_eq!(published, expect, "m = {m}");
        }
    }

    #[test]
    fn layout_accounting_matches_encoder() {
        for m in [1, 2, 3] {
            let cfg = PicConfig::new(48, 6, r(1, 4), m).unwrap();
            let code = PicCode::new(cfg.clone()).unwrap();
            let res = finite_rate(&cfg, RateAccounting::Layout);
            let sent = code.transmitted_len() - res.tail_overhead;
            assert_eq!(res.finite_rate, r(code.info_len() as i64, sent as i64), "m = {m}");
        }
        let cfg = PicConfig::new(48, 6, r(1, 4), 1).unwrap();
        assert_eq!(
            finite_rate(&cfg, RateAccounting::Layout),
            finite_rate(&cfg, RateAccounting::Published)
        );
    }

    #[test]
    fn finite_rate_approaches_asymptote() {
        let mut last_gap = f64::INFINITY;
        for l in [100, 1000, 10000] {
            let cfg = PicConfig::new(6144, l, r(1, 4), 1).unwrap();
            let res = finite_rate(&cfg, RateAccounting::Published);
            assert!(res.finite_rate < res.asymptotic_rate);
            let gap = res.asymptotic_f64() - res.finite_f64();
            assert!(gap < last_gap);
            last_gap = gap;
        }
        assert!(last_gap < 1e-4);
    }

    #[test]
    fn asymptotic_rate_decreases_in_lambda() {
        let lambdas = [r(0, 1), r(1, 16), r(1, 8), r(1, 7), r(1, 6), r(1, 5), r(1, 4), r(1, 3), r(3, 8), r(1, 2)];
        for w in lambdas.windows(2) {
            assert!(asymptotic_rate(r(1, 3), w[1]) < asymptotic_rate(r(1, 3), w[0]));
        }
    }
}
