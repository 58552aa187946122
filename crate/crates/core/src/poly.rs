//! Dense univariate polynomials over ℚ with Sturm sequences, used for exact
//! real-root existence of binary forms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Coefficients from the constant term upward; no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatPoly(Vec<BigRational>);

impl RatPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        RatPoly(coeffs)
    }

    pub fn from_ints(coeffs: &[BigInt]) -> Self {
        RatPoly::new(coeffs.iter().map(|c| BigRational::from_integer(c.clone())).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.0
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.0.last()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> RatPoly {
        RatPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn rem(&self, divisor: &RatPoly) -> RatPoly {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.leading().unwrap().clone();
        let mut r = self.0.clone();
        while r.len() > dd && !r.is_empty() {
            let shift = r.len() - 1 - dd;
            let q = r.last().unwrap() / &lead;
            for (i, c) in divisor.0.iter().enumerate() {
                let v = &q * c;
                r[shift + i] -= v;
            }
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        RatPoly::new(r)
    }

    fn neg(&self) -> RatPoly {
        RatPoly(self.0.iter().map(|c| -c).collect())
    }
}

/// Sturm chain `p, p', -rem(p_{i-1}, p_i), ...`.
pub fn sturm_chain(p: &RatPoly) -> Vec<RatPoly> {
    let mut chain = vec![p.clone()];
    if p.degree().unwrap_or(0) == 0 {
        return chain;
    }
    chain.push(p.derivative());
    loop {
        let k = chain.len();
        let r = chain[k - 2].rem(&chain[k - 1]).neg();
        if r.is_zero() {
            break;
        }
        chain.push(r);
    }
    chain
}

fn variations(signs: impl Iterator<Item = i8>) -> usize {
    let mut last = 0i8;
    let mut count = 0;
    for s in signs.filter(|&s| s != 0) {
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

fn sign(x: &BigRational) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

pub fn variations_at(chain: &[RatPoly], x: &BigRational) -> usize {
    variations(chain.iter().map(|p| sign(&p.eval(x))))
}

pub fn variations_at_infinity(chain: &[RatPoly], positive: bool) -> usize {
    variations(chain.iter().map(|p| {
        let s = p.leading().map(sign).unwrap_or(0);
        let deg = p.degree().unwrap_or(0);
        if positive || deg % 2 == 0 {
            s
        } else {
            -s
        }
    }))
}

/// Number of distinct real roots.
pub fn count_real_roots(p: &RatPoly) -> usize {
    if p.degree().unwrap_or(0) == 0 {
        return 0;
    }
    let chain = sturm_chain(p);
    variations_at_infinity(&chain, false) - variations_at_infinity(&chain, true)
}

/// Distinct roots in the half-open interval `(lo, hi]`.
pub fn count_roots_between(chain: &[RatPoly], lo: &BigRational, hi: &BigRational) -> usize {
    variations_at(chain, lo).saturating_sub(variations_at(chain, hi))
}

/// Cauchy bound: every real root lies in `(-B, B)`.
pub fn root_bound(p: &RatPoly) -> BigRational {
    let lead = p.leading().expect("nonzero polynomial").abs();
    let max = p.coeffs()[..p.coeffs().len() - 1]
        .iter()
        .map(|c| c.abs() / &lead)
        .fold(BigRational::zero(), |a, b| if b > a { b } else { a });
    max + BigRational::one()
}

/// Shrinks an interval containing a root of `p` until its width is at most
/// `2^-bits`; returns the midpoint. `None` if `p` has no real root.
pub fn approximate_root(p: &RatPoly, bits: u32) -> Option<BigRational> {
    if count_real_roots(p) == 0 {
        return None;
    }
    let chain = sturm_chain(p);
    let b = root_bound(p);
    let mut lo = -b.clone();
    let mut hi = b;
    let eps = BigRational::new(BigInt::one(), BigInt::one() << bits);
    let two = BigRational::from_integer(2.into());
    while &hi - &lo > eps {
        let mid = (&lo + &hi) / &two;
        if p.eval(&mid).is_zero() {
            return Some(mid);
        }
        if count_roots_between(&chain, &lo, &mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some((lo + hi) / two)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::ints;

    #[test]
    fn counts() {
        // (t - 1)(t + 2)(t² + 1)
        let p = RatPoly::from_ints(&ints(&[-2, 1, -1, 1, 1]));
        assert_eq!(count_real_roots(&p), 2);
        // t⁴ + 1
        assert_eq!(count_real_roots(&RatPoly::from_ints(&ints(&[1, 0, 0, 0, 1]))), 0);
        // (t - 3)² (t² + 1): double root counted once
        let p = RatPoly::from_ints(&ints(&[9, -6, 10, -6, 1]));
        assert_eq!(count_real_roots(&p), 1);
        let r = approximate_root(&p, 40).unwrap();
        let err = (r - BigRational::from_integer(3.into())).abs();
        assert!(err < BigRational::new(1.into(), BigInt::one() << 39u32));
    }

    #[test]
    fn remainder() {
        let a = RatPoly::from_ints(&ints(&[-1, 0, 1]));
        let b = RatPoly::from_ints(&ints(&[-1, 1]));
        assert!(a.rem(&b).is_zero());
    }
}
