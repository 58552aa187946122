//! Small integer utilities shared by the solvers: primality, Möbius function,
//! valuations and trial-division factoring.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, Result};

/// Deterministic primality test for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    // This witness set is exact below 3.3e24.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i as u64))
        .collect()
}

pub fn next_prime(after: u64) -> u64 {
    let mut q = after + 1;
    while !is_prime(q) {
        q += 1;
    }
    q
}

/// Möbius function μ(e) for e ≥ 1.
pub fn moebius(mut e: u64) -> i64 {
    assert!(e >= 1);
    let mut mu = 1;
    let mut p = 2;
    while p * p <= e {
        if e.is_multiple_of(p) {
            e /= p;
            if e.is_multiple_of(p) {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if e > 1 {
        mu = -mu;
    }
    mu
}

/// p-adic valuation of a nonzero integer; `None` stands for +∞ (L = 0).
pub fn valuation(l: &BigInt, p: u64) -> Option<u32> {
    if l.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut v = 0;
    let mut m = l.abs();
    loop {
        let (q, r) = m.div_rem(&p);
        if !r.is_zero() {
            return Some(v);
        }
        m = q;
        v += 1;
    }
}

pub fn valuation_u128(mut l: u128, p: u128) -> Option<u32> {
    if l == 0 {
        return None;
    }
    let mut v = 0;
    while l.is_multiple_of(p) {
        l /= p;
        v += 1;
    }
    Some(v)
}

pub(crate) fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        domain(format!("{p} is not prime"))
    }
}

/// Legendre symbol (m/p) for an odd prime p; 0 when p | m.
pub fn legendre(m: &BigInt, p: u64) -> i32 {
    let r = m.mod_floor(&BigInt::from(p)).to_u64().unwrap();
    if r == 0 {
        return 0;
    }
    if pow_mod(r, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

pub fn is_perfect_square(m: &BigInt) -> bool {
    if m.is_negative() {
        return false;
    }
    let r = m.sqrt();
    &r * &r == *m
}

/// Exact integer square root when `m` is a perfect square.
pub fn exact_sqrt(m: &BigInt) -> Option<BigInt> {
    if m.is_negative() {
        return None;
    }
    let r = m.sqrt();
    (&r * &r == *m).then_some(r)
}

/// Prime factors of |m| found by trial division up to `bound`; the second
/// component is the unfactored cofactor (1 when the factorisation is complete).
pub fn trial_factor(m: &BigInt, bound: u64) -> (Vec<u64>, BigInt) {
    let mut rest = m.abs();
    let mut out = Vec::new();
    if rest.is_zero() {
        return (out, rest);
    }
    let mut p = 2u64;
    while p <= bound {
        let bp = BigInt::from(p);
        if &bp * &bp > rest {
            break;
        }
        if (&rest % &bp).is_zero() {
            out.push(p);
            while (&rest % &bp).is_zero() {
                rest /= &bp;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > BigInt::one() {
        if let Some(r) = rest.to_u64() {
            if r <= bound.saturating_mul(bound) || is_prime(r) {
                out.push(r);
                rest = BigInt::one();
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    (out, rest)
}

pub fn gcd_all<'a>(xs: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    xs.into_iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_primes() {
        let ps = primes_up_to(50);
        assert_eq!(ps.len(), 15);
        for n in 0..2000u64 {
            let naive = n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
            assert_eq!(is_prime(n), naive, "{n}");
        }
        assert!(is_prime(1_000_000_007));
        assert_eq!(next_prime(100), 101);
    }

    #[test]
    fn moebius_values() {
        let mu: Vec<i64> = (1..=10).map(moebius).collect();
        assert_eq!(mu, vec![1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
    }

    #[test]
    fn valuations() {
        assert_eq!(valuation(&BigInt::from(12), 2), Some(2));
        assert_eq!(valuation(&BigInt::from(-12), 3), Some(1));
        assert_eq!(valuation(&BigInt::zero(), 5), None);
    }

    #[test]
    fn factoring() {
        let (f, rest) = trial_factor(&BigInt::from(-360), 100);
        assert_eq!(f, vec![2, 3, 5]);
        assert!(rest.is_one());
        let (f, _) = trial_factor(&BigInt::from(2 * 1_000_003u64), 10);
        assert_eq!(f, vec![2, 1_000_003]);
    }
}
