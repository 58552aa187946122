//! The constants `C_{n,d}(d1, d2)` that control the dimension of the locus of
//! reducible forms, the inequalities they satisfy, and the resulting range of
//! admissible degrees `k` for the thin-set form `P`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Result};
use crate::forms::{veronese_dimension, Form};
use crate::gram;

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * i)
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CndValue {
    pub n: usize,
    pub d: usize,
    pub d1: usize,
    pub d2: usize,
    pub value: BigRational,
}

/// `C_{n,d}(d1,d2) = d!(n+d1-1)!/(d1!(n+d-1)!) + d!(n+d2-1)!/(d2!(n+d-1)!)`.
pub fn c_nd(n: usize, d: usize, d1: usize, d2: usize) -> Result<BigRational> {
    if n < 1 {
        return domain("C_{n,d} needs n >= 1");
    }
    if d1 < 1 || d2 < 1 || d1 + d2 != d {
        return domain(format!("need d1 + d2 = d with d1, d2 >= 1 (got {d1} + {d2} vs {d})"));
    }
    let denom_common = factorial(n + d - 1);
    let term = |di: usize| BigRational::new(factorial(d) * factorial(n + di - 1), factorial(di) * &denom_common);
    Ok(term(d1) + term(d2))
}

pub fn cnd_value(n: usize, d: usize, d1: usize, d2: usize) -> Result<CndValue> {
    Ok(CndValue { n, d, d1, d2, value: c_nd(n, d, d1, d2)? })
}

/// `M(d1,d2) = binom(n+d1-1, n-1) + binom(n+d2-1, n-1)`, the sum of the
/// dimensions of the two factor spaces.
pub fn m_value(n: usize, d1: usize, d2: usize) -> BigInt {
    binomial(n + d1 - 1, n - 1) + binomial(n + d2 - 1, n - 1)
}

fn check_lemma_range(n: usize, d: usize) -> Result<()> {
    if n < 3 || d < 3 {
        return domain(format!("stated for n >= 3 and d >= 3 (got n={n}, d={d})"));
    }
    Ok(())
}

/// Exact check of `(n+d)(n+d-1)/(n-1) < binom(n+d, d)`.
pub fn lemma24_holds(n: usize, d: usize) -> Result<bool> {
    check_lemma_range(n, d)?;
    let lhs = BigRational::new(BigInt::from((n + d) * (n + d - 1)), BigInt::from(n - 1));
    let rhs = BigRational::from_integer(binomial(n + d, d));
    Ok(lhs < rhs)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CndMax {
    pub argmax: Vec<(usize, usize)>,
    pub value: BigRational,
}

/// Brute-force maximum of `C_{n,d}` over all splittings `d1 + d2 = d`.
pub fn c_nd_max(n: usize, d: usize) -> Result<CndMax> {
    check_lemma_range(n, d)?;
    let mut best: Option<BigRational> = None;
    let mut argmax = Vec::new();
    for d1 in 1..d {
        let v = c_nd(n, d, d1, d - d1)?;
        match &best {
            Some(b) if v < *b => {}
            Some(b) if v == *b => argmax.push((d1, d - d1)),
            _ => {
                best = Some(v);
                argmax = vec![(d1, d - d1)];
            }
        }
    }
    let value = best.expect("d >= 3 has at least two splittings");
    assert!(value < BigRational::one(), "C_{{n,d}} maximum must stay below 1");
    Ok(CndMax { argmax, value })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegimeReport {
    pub n: usize,
    pub d: usize,
    pub big_n: usize,
    /// `⌊(1 - C_{n,d}(1, d-1)) N⌋`
    pub threshold: usize,
    pub admissible_k: Vec<usize>,
    pub m_values: BTreeMap<(usize, usize), BigInt>,
}

pub fn regime_report(n: usize, d: usize) -> Result<RegimeReport> {
    check_lemma_range(n, d)?;
    let big_n = veronese_dimension(n, d)?;
    let c = c_nd(n, d, 1, d - 1)?;
    let t = (BigRational::one() - c) * BigRational::from_integer(big_n.into());
    let threshold = t.floor().to_integer().to_usize().expect("threshold is non-negative");
    let admissible_k = (2..threshold)
        .filter(|&k| {
            let lhs = BigInt::from(k - 1) << k;
            lhs < BigInt::from(big_n)
        })
        .collect();
    let m_values = (1..d).map(|d1| ((d1, d - d1), m_value(n, d1, d - d1))).collect();
    Ok(RegimeReport { n, d, big_n, threshold, admissible_k, m_values })
}

/// Whether `(n, d, k)` lies in the range where the limit theorem applies.
/// Outside `n, d >= 3` the reducible-locus bound is not available, which is
/// reported as out of regime rather than guessed.
pub fn in_regime(n: usize, d: usize, k: usize) -> bool {
    regime_report(n, d).map(|r| r.admissible_k.contains(&k)).unwrap_or(false)
}

/// Reducibility over ℂ of a quadratic form: rank of the Gram matrix ≤ 2.
pub fn quadratic_is_reducible(f: &Form) -> Result<bool> {
    let g = gram::doubled_gram(f)?;
    Ok(gram::rank(&g) <= 2)
}

/// One row of the combinatorics sweep.
#[derive(Clone, Debug)]
pub struct LemmaRow {
    pub n: usize,
    pub d: usize,
    pub report: RegimeReport,
    pub lemma24: bool,
    pub max: CndMax,
}

pub fn verify_lemmas(n_max: usize, d_max: usize) -> Result<Vec<LemmaRow>> {
    let mut rows = Vec::new();
    for n in 3..=n_max {
        for d in 3..=d_max {
            rows.push(LemmaRow {
                n,
                d,
                report: regime_report(n, d)?,
                lemma24: lemma24_holds(n, d)?,
                max: c_nd_max(n, d)?,
            });
        }
    }
    Ok(rows)
}

pub fn rational_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Cross-multiplied comparison used by tests: `C·N == M` as integers.
pub fn c_times_n_is_m(n: usize, d: usize, d1: usize, d2: usize) -> Result<bool> {
    let c = c_nd(n, d, d1, d2)?;
    let big_n = BigInt::from(veronese_dimension(n, d)?);
    let lhs = c * BigRational::from_integer(big_n);
    Ok(lhs.is_integer() && *lhs.numer() == m_value(n, d1, d2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn cnd_examples() {
        assert_eq!(c_nd(3, 3, 1, 2).unwrap(), q(9, 10));
        assert_eq!(c_nd(4, 3, 1, 2).unwrap(), q(7, 10));
        assert_eq!(c_nd(3, 3, 2, 1).unwrap(), c_nd(3, 3, 1, 2).unwrap());
        assert!(c_nd(3, 3, 1, 1).is_err());
        assert!(c_nd(3, 3, 0, 3).is_err());
    }

    #[test]
    fn lemma24_examples() {
        assert!(lemma24_holds(3, 3).unwrap());
        assert!(lemma24_holds(4, 3).unwrap());
        assert!(lemma24_holds(3, 4).unwrap());
        assert!(lemma24_holds(2, 3).is_err());
        assert!(lemma24_holds(3, 2).is_err());
    }

    #[test]
    fn max_examples() {
        let m = c_nd_max(3, 3).unwrap();
        assert_eq!(m.argmax, vec![(1, 2), (2, 1)]);
        assert_eq!(m.value, q(9, 10));
        let m = c_nd_max(4, 3).unwrap();
        assert_eq!(m.argmax, vec![(1, 2), (2, 1)]);
        assert_eq!(m.value, q(7, 10));
        assert_eq!(c_nd_max(3, 4).unwrap().argmax, vec![(1, 3), (3, 1)]);
    }

    #[test]
    fn regime_examples() {
        let r = regime_report(3, 3).unwrap();
        assert_eq!((r.big_n, r.threshold), (10, 1));
        assert!(r.admissible_k.is_empty());
        let r = regime_report(4, 3).unwrap();
        assert_eq!((r.big_n, r.threshold), (20, 6));
        assert_eq!(r.admissible_k, vec![2, 3]);
        assert_eq!(r.m_values[&(1, 2)], BigInt::from(14));
        let r = regime_report(3, 4).unwrap();
        assert_eq!(r.threshold, 2);
        assert!(r.admissible_k.is_empty());
        assert!(regime_report(2, 4).is_err());
        assert!(!in_regime(2, 2, 2));
        assert!(in_regime(4, 3, 3));
    }

    #[test]
    fn sweep_properties() {
        for n in 3..=12 {
            for d in 3..=12 {
                assert!(lemma24_holds(n, d).unwrap());
                let m = c_nd_max(n, d).unwrap();
                assert_eq!(m.argmax, vec![(1, d - 1), (d - 1, 1)], "n={n} d={d}");
                assert!(m.value < BigRational::one());
                for d1 in 1..d {
                    assert!(c_times_n_is_m(n, d, d1, d - d1).unwrap());
                    let v = c_nd(n, d, d1, d - d1).unwrap();
                    assert!(v > BigRational::zero() && v < BigRational::one());
                    // monotone towards the extreme splitting
                    if d1 >= 2 && d1 <= d - d1 {
                        assert!(v <= c_nd(n, d, d1 - 1, d - d1 + 1).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn quadratic_reducibility() {
        assert!(!quadratic_is_reducible(&Form::from_i64(3, 2, &[1, 0, 0, 1, 0, 1]).unwrap()).unwrap());
        assert!(quadratic_is_reducible(&Form::from_i64(2, 2, &[0, 1, 0]).unwrap()).unwrap());
        assert!(quadratic_is_reducible(&Form::from_i64(2, 2, &[1, 0, 0]).unwrap()).unwrap());
        // (x + y)(x - z) = x² + xy - xz - yz
        assert!(quadratic_is_reducible(&Form::from_i64(3, 2, &[1, 1, -1, 0, -1, 0]).unwrap()).unwrap());
        assert!(quadratic_is_reducible(&Form::from_i64(3, 3, &[1; 10]).unwrap()).is_err());
    }
}
