//! ℤ_p-solubility of `f_a(x) = 0` for homogeneous `f_a`.
//!
//! The search lifts primitive residue points level by level. A point `x`
//! mod `p^j` with `f(x) ≡ 0 (mod p^j)` whose gradient has a coordinate of
//! valuation `α` with `j ≥ 2α + 1` lifts to a ℤ_p zero by Hensel's lemma. If
//! no primitive residue point survives at some level, no nontrivial ℤ_p zero
//! exists: by homogeneity any such zero scales to a primitive one.
//!
//! Points are kept projectively normalised (first unit coordinate equal to 1),
//! which is sound because `f(cx) = c^d f(x)` for units `c`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{check_prime, legendre, valuation, valuation_u128};
use crate::error::{domain, Error, Result};
use crate::forms::Form;

/// Largest modulus handled by the residue arithmetic (products fit in u128).
const MODULUS_LIMIT: u128 = 1 << 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

pub fn vp(l: &BigInt, p: u64) -> Result<Valuation> {
    check_prime(p)?;
    Ok(match valuation(l, p) {
        Some(v) => Valuation::Finite(v),
        None => Valuation::Infinite,
    })
}

/// Whether the nonzero integer `m` is a square in ℚ_p.
pub fn is_square_in_qp(m: &BigInt, p: u64) -> Result<bool> {
    check_prime(p)?;
    if m.is_zero() {
        return domain("square test needs m != 0");
    }
    let v = valuation(m, p).unwrap();
    if v % 2 == 1 {
        return Ok(false);
    }
    let unit = m / BigInt::from(p).pow(v);
    if p == 2 {
        Ok(unit.mod_floor(&BigInt::from(8)) == BigInt::one())
    } else {
        Ok(legendre(&unit, p) == 1)
    }
}

/// A residue point witnessing a ℤ_p zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HenselCertificate {
    pub p: u64,
    /// Residues in `[0, p^level)`.
    pub point: Vec<BigInt>,
    pub level: u32,
    /// Valuation of the pivot gradient coordinate.
    pub alpha: u32,
    /// Zero-based index of the pivot coordinate.
    pub pivot_index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    DepthExceeded,
    FrontierCapped,
    /// `p^level` outgrew the residue arithmetic.
    PrecisionCapped,
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnknownReason::DepthExceeded => "depth-exceeded",
            UnknownReason::FrontierCapped => "frontier-capped",
            UnknownReason::PrecisionCapped => "precision-capped",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolubilityVerdict {
    Soluble(HenselCertificate),
    /// No primitive residue point mod `p^exhaustion_level` is a root.
    Insoluble { exhaustion_level: u32 },
    Unknown { reason: UnknownReason, level: u32 },
}

impl SolubilityVerdict {
    pub fn is_soluble(&self) -> bool {
        matches!(self, SolubilityVerdict::Soluble(_))
    }

    pub fn is_insoluble(&self) -> bool {
        matches!(self, SolubilityVerdict::Insoluble { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, SolubilityVerdict::Unknown { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolubilityVerdict::Soluble(_) => "soluble",
            SolubilityVerdict::Insoluble { .. } => "insoluble",
            SolubilityVerdict::Unknown { .. } => "unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_level: u32,
    pub frontier_cap: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        // 2·(1 + 12): room to certify gradient valuations up to 12
        SearchBudget { max_level: 26, frontier_cap: 1_000_000 }
    }
}

impl SearchBudget {
    pub fn with_max_level(max_level: u32) -> Self {
        SearchBudget { max_level, ..Default::default() }
    }
}

/// Normalised representatives of 𝔽_p-points of projective space, in
/// lexicographic order: for each pivot `i`, coordinates before `i` are 0,
/// coordinate `i` is 1, the rest range over `[0, p)`.
fn projective_points(n: usize, p: u64) -> impl Iterator<Item = Vec<u128>> {
    (0..n).flat_map(move |pivot| {
        let free = n - pivot - 1;
        let count = (p as u128).pow(free as u32);
        (0..count).map(move |mut code| {
            let mut x = vec![0u128; n];
            x[pivot] = 1;
            for k in (pivot + 1..n).rev() {
                x[k] = code % p as u128;
                code /= p as u128;
            }
            x
        })
    })
}

fn pivot_of(x: &[u128], p: u128) -> usize {
    x.iter().position(|&v| v % p != 0).expect("primitive point")
}

/// Smallest gradient valuation below `level`, with the first coordinate
/// attaining it. Residues that vanish mod `p^level` are not yet resolved.
fn gradient_alpha(grad: &[u128], p: u128) -> Option<(u32, usize)> {
    grad.iter()
        .enumerate()
        .filter_map(|(i, &g)| valuation_u128(g, p).map(|v| (v, i)))
        .min()
}

pub fn zp_solubility(f: &Form, p: u64, budget: SearchBudget) -> Result<SolubilityVerdict> {
    check_prime(p)?;
    if f.coeffs().is_zero() {
        return domain("solubility of the zero form is undefined");
    }
    if budget.max_level < 1 {
        return domain("max_level must be at least 1");
    }
    let n = f.n();
    let pu = p as u128;
    let mut modulus = pu;
    let mut level = 1u32;
    let mut coeffs = f.coeffs_mod(modulus);

    let level_one_count = projective_count(n, p);
    if level_one_count > (budget.frontier_cap as u128).saturating_mul(64) {
        return Ok(SolubilityVerdict::Unknown { reason: UnknownReason::FrontierCapped, level: 0 });
    }
    let mut frontier: Vec<Vec<u128>> =
        projective_points(n, p).filter(|x| f.eval_mod(x, &coeffs, modulus) == 0).collect();

    loop {
        if frontier.is_empty() {
            return Ok(SolubilityVerdict::Insoluble { exhaustion_level: level });
        }
        if frontier.len() > budget.frontier_cap {
            return Ok(SolubilityVerdict::Unknown { reason: UnknownReason::FrontierCapped, level });
        }
        let mut grads = Vec::with_capacity(frontier.len());
        for x in &frontier {
            let g = f.gradient_mod(x, &coeffs, modulus);
            if let Some((alpha, pivot_index)) = gradient_alpha(&g, pu) {
                if 2 * alpha < level {
                    return Ok(SolubilityVerdict::Soluble(HenselCertificate {
                        p,
                        point: x.iter().map(|&v| BigInt::from(v)).collect(),
                        level,
                        alpha,
                        pivot_index,
                    }));
                }
            }
            grads.push(g);
        }
        if level >= budget.max_level {
            return Ok(SolubilityVerdict::Unknown { reason: UnknownReason::DepthExceeded, level });
        }
        let next_modulus = modulus * pu;
        if next_modulus >= MODULUS_LIMIT {
            return Ok(SolubilityVerdict::Unknown { reason: UnknownReason::PrecisionCapped, level });
        }
        let next_coeffs = f.coeffs_mod(next_modulus);
        let lifts_per_point = pu.pow(n as u32 - 1);
        let mut next = Vec::new();
        for (x, g) in frontier.iter().zip(&grads) {
            let pivot = pivot_of(x, pu);
            let grad_vanishes = g.iter().all(|&gi| gi % pu == 0);
            if grad_vanishes {
                // f(x + p^j t) ≡ f(x) (mod p^{j+1}) whenever ∇f(x) ≡ 0 (mod p),
                // so either every lift survives or none does.
                if f.eval_mod(x, &next_coeffs, next_modulus) != 0 {
                    continue;
                }
                if (next.len() as u128 + lifts_per_point) > budget.frontier_cap as u128 {
                    return Ok(SolubilityVerdict::Unknown { reason: UnknownReason::FrontierCapped, level });
                }
                for_each_lift(x, pivot, modulus, pu, |y| next.push(y));
            } else {
                for_each_lift(x, pivot, modulus, pu, |y| {
                    if f.eval_mod(&y, &next_coeffs, next_modulus) == 0 {
                        next.push(y);
                    }
                });
                if next.len() > budget.frontier_cap {
                    return Ok(SolubilityVerdict::Unknown { reason: UnknownReason::FrontierCapped, level });
                }
            }
        }
        frontier = next;
        modulus = next_modulus;
        coeffs = next_coeffs;
        level += 1;
    }
}

fn projective_count(n: usize, p: u64) -> u128 {
    (0..n as u32).map(|k| (p as u128).saturating_pow(k)).fold(0u128, |a, b| a.saturating_add(b))
}

/// All `x + m·t` with `t ∈ [0, p)^n` and `t_pivot = 0`, in lexicographic order.
fn for_each_lift(x: &[u128], pivot: usize, m: u128, p: u128, mut emit: impl FnMut(Vec<u128>)) {
    let n = x.len();
    let free: Vec<usize> = (0..n).filter(|&i| i != pivot).collect();
    let total = p.pow(free.len() as u32);
    for mut code in 0..total {
        let mut y = x.to_vec();
        for &k in free.iter().rev() {
            y[k] += m * (code % p);
            code /= p;
        }
        emit(y);
    }
}

/// Independent re-check of a certificate against the integer form.
pub fn verify_certificate(f: &Form, cert: &HenselCertificate) -> bool {
    let p = BigInt::from(cert.p);
    if cert.point.len() != f.n() || cert.pivot_index >= f.n() {
        return false;
    }
    if cert.point.iter().all(|x| x.is_multiple_of(&p)) {
        return false;
    }
    if cert.level < 2 * cert.alpha + 1 {
        return false;
    }
    let modulus = p.pow(cert.level);
    let Ok(value) = f.eval_int(&cert.point) else {
        return false;
    };
    if !value.is_multiple_of(&modulus) {
        return false;
    }
    let Ok(grad) = f.gradient_int(&cert.point) else {
        return false;
    };
    valuation(&grad[cert.pivot_index], cert.p) == Some(cert.alpha)
}

/// Exhaustive scan of every primitive `x mod p^level`; true iff none is a
/// root mod `p^level`. Refuses scans above `limit` points.
pub fn verify_exhaustion(f: &Form, p: u64, level: u32, limit: u128) -> Result<bool> {
    let m = (p as u128).pow(level);
    let n = f.n() as u32;
    let total = m.checked_pow(n).filter(|&t| t <= limit).ok_or_else(|| {
        Error::Budget(format!("{p}^({level}·{n}) residues exceed the scan limit"))
    })?;
    let coeffs = f.coeffs_mod(m);
    let pu = p as u128;
    let mut x = vec![0u128; n as usize];
    for mut code in 0..total {
        for xi in x.iter_mut() {
            *xi = code % m;
            code /= m;
        }
        if x.iter().all(|&v| v % pu == 0) {
            continue;
        }
        if f.eval_mod(&x, &coeffs, m) == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Radius `p^{-2α}` of the coefficient ball on which the certificate stays valid.
pub fn stability_radius(cert: &HenselCertificate) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(cert.p).pow(2 * cert.alpha))
}

/// Result of scanning every 𝔽_p-point of the projective hypersurface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionScan {
    /// No 𝔽_p-point where `f` and `∇f` both vanish mod p.
    pub smooth: bool,
    /// First 𝔽_p-point with `f ≡ 0` and `∇f ≢ 0`.
    pub smooth_point: Option<Vec<u64>>,
}

pub fn scan_reduction(f: &Form, p: u64, budget: u128) -> Result<ReductionScan> {
    check_prime(p)?;
    let count = projective_count(f.n(), p);
    if count > budget {
        return Err(Error::Budget(format!("{count} points of P^{}(F_{p}) exceed budget {budget}", f.n() - 1)));
    }
    let pu = p as u128;
    let coeffs = f.coeffs_mod(pu);
    let mut smooth_point = None;
    for x in projective_points(f.n(), p) {
        if f.eval_mod(&x, &coeffs, pu) != 0 {
            continue;
        }
        let g = f.gradient_mod(&x, &coeffs, pu);
        if g.iter().all(|&v| v == 0) {
            return Ok(ReductionScan { smooth: false, smooth_point });
        }
        if smooth_point.is_none() {
            smooth_point = Some(x.iter().map(|&v| v as u64).collect());
        }
    }
    Ok(ReductionScan { smooth: true, smooth_point })
}

/// True iff no 𝔽_p-point is singular on the reduction of `f` mod p.
pub fn smooth_reduction(f: &Form, p: u64, budget: u128) -> Result<bool> {
    Ok(scan_reduction(f, p, budget)?.smooth)
}

/// For plane curves of degree d, whether `p + 1 - 2g√p > 0` with
/// `g = (d-1)(d-2)/2`, checked as `(p+1)² > 4g²p`.
pub fn hasse_weil_guarantee(n: usize, d: usize, p: u64) -> Result<bool> {
    if n != 3 {
        return Err(Error::Config(format!("point-count guarantee is for plane curves (n = 3), got n = {n}")));
    }
    check_prime(p)?;
    let g = ((d - 1) * (d - 2) / 2) as u128;
    let p = p as u128;
    Ok((p + 1) * (p + 1) > 4 * g * g * p)
}

/// Solubility at p from the point-count guarantee, using the 𝔽_p-point found
/// by the same scan as an α = 0 certificate. Returns `None` when the shortcut
/// does not apply: the reduction has a singular 𝔽_p-point, the bound fails,
/// or (for reductions singular only over extensions) no 𝔽_p-point exists.
pub fn hasse_weil_certificate(f: &Form, p: u64, budget: u128) -> Result<Option<HenselCertificate>> {
    if !hasse_weil_guarantee(f.n(), f.d(), p)? {
        return Ok(None);
    }
    let scan = scan_reduction(f, p, budget)?;
    if !scan.smooth {
        return Ok(None);
    }
    Ok(scan.smooth_point.map(|x| {
        let coeffs = f.coeffs_mod(p as u128);
        let xr: Vec<u128> = x.iter().map(|&v| v as u128).collect();
        let g = f.gradient_mod(&xr, &coeffs, p as u128);
        let pivot_index = g.iter().position(|&v| v != 0).unwrap();
        HenselCertificate { p, point: x.iter().map(|&v| BigInt::from(v)).collect(), level: 1, alpha: 0, pivot_index }
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Place {
    Prime(u64),
    Infinity,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Prime(p) => write!(f, "{p}"),
            Place::Infinity => f.write_str("inf"),
        }
    }
}

/// Closed-form solubility of `a1 x² + a2 xy + a3 y² = 0` at a place.
pub fn binary_quadratic_oracle(f: &Form, place: Place) -> Result<bool> {
    if f.n() != 2 || f.d() != 2 {
        return domain(format!("binary quadratic oracle needs n = d = 2, got n={}, d={}", f.n(), f.d()));
    }
    let a = f.coeffs().entries();
    if a[0].is_zero() {
        return Ok(true);
    }
    let disc = &a[1] * &a[1] - BigInt::from(4) * &a[0] * &a[2];
    if disc.is_zero() {
        return Ok(true);
    }
    match place {
        Place::Infinity => Ok(disc.is_positive()),
        Place::Prime(p) => is_square_in_qp(&disc, p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith;
    use crate::forms::ints;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn form(n: usize, d: usize, a: &[i64]) -> Form {
        Form::from_i64(n, d, a).unwrap()
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(vp(&BigInt::from(12), 2).unwrap(), Valuation::Finite(2));
        assert_eq!(vp(&BigInt::from(12), 3).unwrap(), Valuation::Finite(1));
        assert_eq!(vp(&BigInt::zero(), 5).unwrap(), Valuation::Infinite);
        assert!(vp(&BigInt::from(12), 4).is_err());
    }

    #[test]
    fn square_classes() {
        assert!(is_square_in_qp(&BigInt::from(17), 2).unwrap());
        assert!(!is_square_in_qp(&BigInt::from(2), 5).unwrap());
        assert!(is_square_in_qp(&BigInt::from(9), 7).unwrap());
        assert!(is_square_in_qp(&BigInt::from(68), 2).unwrap());
        assert!(!is_square_in_qp(&BigInt::from(-1), 3).unwrap());
        assert!(is_square_in_qp(&BigInt::from(-1), 5).unwrap());
        assert!(is_square_in_qp(&BigInt::zero(), 5).is_err());
    }

    #[test]
    fn hensel_example_at_two() {
        let f = form(2, 2, &[1, 0, -17]);
        let v = zp_solubility(&f, 2, SearchBudget::default()).unwrap();
        let SolubilityVerdict::Soluble(cert) = v else { panic!("{v:?}") };
        assert_eq!(cert.alpha, 1);
        assert_eq!(cert.level, 3);
        assert_eq!(cert.point, ints(&[1, 1]));
        assert!(verify_certificate(&f, &cert));
        assert_eq!(stability_radius(&cert), BigRational::new(1.into(), 4.into()));
    }

    #[test]
    fn sum_of_three_squares() {
        let f = form(3, 2, &[1, 0, 0, 1, 0, 1]);
        assert_eq!(
            zp_solubility(&f, 2, SearchBudget::default()).unwrap(),
            SolubilityVerdict::Insoluble { exhaustion_level: 2 }
        );
        // primitive sums of three squares are never 0 mod 4, hence never 0 mod 8
        assert!(!verify_exhaustion(&f, 2, 1, 1 << 20).unwrap());
        assert!(verify_exhaustion(&f, 2, 2, 1 << 20).unwrap());
        assert!(verify_exhaustion(&f, 2, 3, 1 << 20).unwrap());
        let v = zp_solubility(&f, 5, SearchBudget::default()).unwrap();
        let SolubilityVerdict::Soluble(cert) = v else { panic!() };
        assert_eq!(cert.alpha, 0);
        assert!(verify_certificate(&f, &cert));
        // the hand-found point is also a valid certificate
        let hand = HenselCertificate { p: 5, point: ints(&[1, 2, 0]), level: 1, alpha: 0, pivot_index: 0 };
        assert!(verify_certificate(&f, &hand));
    }

    #[test]
    fn zero_form_and_bad_prime() {
        let f = form(2, 2, &[0, 0, 0]);
        assert!(zp_solubility(&f, 3, SearchBudget::default()).is_err());
        let g = form(2, 2, &[1, 0, 1]);
        assert!(zp_solubility(&g, 9, SearchBudget::default()).is_err());
    }

    #[test]
    fn radii() {
        let c = |p, alpha| HenselCertificate { p, point: vec![], level: 0, alpha, pivot_index: 0 };
        assert_eq!(stability_radius(&c(5, 0)), BigRational::one());
        assert_eq!(stability_radius(&c(2, 1)), BigRational::new(1.into(), 4.into()));
        assert_eq!(stability_radius(&c(3, 2)), BigRational::new(1.into(), 81.into()));
    }

    #[test]
    fn reduction_examples() {
        let sos = form(3, 2, &[1, 0, 0, 1, 0, 1]);
        assert!(smooth_reduction(&sos, 3, 1 << 20).unwrap());
        assert!(!smooth_reduction(&sos, 2, 1 << 20).unwrap());
        assert!(smooth_reduction(&form(2, 2, &[0, 1, 0]), 5, 1 << 20).unwrap());
        assert!(matches!(smooth_reduction(&sos, 101, 100), Err(Error::Budget(_))));
    }

    #[test]
    fn point_count_guarantee() {
        for p in arith::primes_up_to(200) {
            assert!(hasse_weil_guarantee(3, 3, p).unwrap());
        }
        assert!(!hasse_weil_guarantee(3, 4, 31).unwrap());
        assert!(hasse_weil_guarantee(3, 4, 37).unwrap());
        assert!(hasse_weil_guarantee(4, 3, 5).is_err());
    }

    // x³ + 2y³ + 4z³ - 6xyz is the norm form of ℚ(∛2): over 𝔽_7 (where 2 is
    // not a cube) it is a triangle of conjugate lines with no 𝔽_7-point.
    #[test]
    fn conjugate_line_triangle_is_not_certified() {
        let f = {
            let basis = crate::forms::veronese_basis(3, 3).unwrap();
            let mut a = vec![0i64; basis.len()];
            a[basis.index_of(&[3, 0, 0]).unwrap()] = 1;
            a[basis.index_of(&[0, 3, 0]).unwrap()] = 2;
            a[basis.index_of(&[0, 0, 3]).unwrap()] = 4;
            a[basis.index_of(&[1, 1, 1]).unwrap()] = -6;
            form(3, 3, &a)
        };
        let scan = scan_reduction(&f, 7, 1 << 20).unwrap();
        assert!(scan.smooth);
        assert!(scan.smooth_point.is_none());
        assert!(hasse_weil_guarantee(3, 3, 7).unwrap());
        assert_eq!(hasse_weil_certificate(&f, 7, 1 << 20).unwrap(), None);
        assert!(zp_solubility(&f, 7, SearchBudget::default()).unwrap().is_insoluble());
    }

    #[test]
    fn oracle_examples() {
        assert!(binary_quadratic_oracle(&form(2, 2, &[1, 0, -17]), Place::Prime(2)).unwrap());
        assert!(!binary_quadratic_oracle(&form(2, 2, &[1, 0, 1]), Place::Infinity).unwrap());
        for place in [Place::Infinity, Place::Prime(2), Place::Prime(7)] {
            assert!(binary_quadratic_oracle(&form(2, 2, &[0, 1, 0]), place).unwrap());
        }
        assert!(binary_quadratic_oracle(&form(3, 2, &[1, 0, 0, 1, 0, 1]), Place::Infinity).is_err());
    }

    #[test]
    fn soundness_against_exhaustion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a: Vec<i64> = (0..3).map(|_| rng.gen_range(-30..=30)).collect();
            if a.iter().all(|&x| x == 0) {
                continue;
            }
            let f = form(2, 2, &a);
            for p in [2u64, 3, 5] {
                match zp_solubility(&f, p, SearchBudget::with_max_level(8)).unwrap() {
                    SolubilityVerdict::Soluble(c) => assert!(verify_certificate(&f, &c)),
                    SolubilityVerdict::Insoluble { exhaustion_level: j } => {
                        if (p as u128).pow(2 * j) <= 10_000_000 {
                            assert!(verify_exhaustion(&f, p, j, 10_000_000).unwrap(), "{a:?} p={p} j={j}");
                        }
                    }
                    SolubilityVerdict::Unknown { .. } => {}
                }
            }
        }
    }

    #[test]
    fn unit_scaling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a: Vec<i64> = (0..6).map(|_| rng.gen_range(-9..=9)).collect();
            if a.iter().all(|&x| x == 0) {
                continue;
            }
            let f = form(3, 2, &a);
            for (p, c) in [(2u64, 3i64), (3, -2), (5, 7)] {
                let g = f.with_coeffs(f.coeffs().scale(&BigInt::from(c))).unwrap();
                let v1 = zp_solubility(&f, p, SearchBudget::with_max_level(10)).unwrap();
                let v2 = zp_solubility(&g, p, SearchBudget::with_max_level(10)).unwrap();
                assert_eq!(v1.label(), v2.label(), "{a:?} p={p}");
            }
        }
    }

    #[test]
    fn frontier_cap_gives_unknown() {
        // x² p^10-divisible everywhere: every residue is a root for many levels
        let f = form(3, 2, &[1024, 0, 0, 0, 0, 0]);
        let v = zp_solubility(&f, 2, SearchBudget { max_level: 20, frontier_cap: 50 }).unwrap();
        assert!(v.is_unknown());
    }
}
