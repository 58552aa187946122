//! Real solubility of `f_a(x) = 0`: odd degree always has a zero, quadratics
//! and binary forms are decided exactly, and the remaining cases are settled
//! by a sign search on the sphere that can only ever prove solubility.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::forms::Form;
use crate::gram::{self, Definiteness};
use crate::poly::{self, RatPoly};

/// Fixed-point scale used when turning float samples into integer points.
const SAMPLE_BITS: u32 = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct RealBudget {
    /// Low-discrepancy points; `None` means `2·n·1000`.
    pub grid_points: Option<usize>,
    pub random_points: usize,
    pub seed: u64,
    /// Target for `|f(w)| / max|a_i|` at the unit witness `w`.
    pub tolerance: f64,
    pub max_bisections: u32,
}

impl Default for RealBudget {
    fn default() -> Self {
        RealBudget { grid_points: None, random_points: 1000, seed: 0, tolerance: 1e-12, max_bisections: 400 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsolubilityMethod {
    Definiteness,
    BinaryRootCount,
}

impl fmt::Display for InsolubilityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InsolubilityMethod::Definiteness => "definiteness",
            InsolubilityMethod::BinaryRootCount => "binary-root-count",
        })
    }
}

/// The exact fact a real witness rests on.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactEvidence {
    /// `f` vanishes at this point.
    Zero(Vec<BigRational>),
    /// `f(positive) > 0 > f(negative)`, and the segment between them misses
    /// the origin.
    Bracket { positive: Vec<BigInt>, negative: Vec<BigInt> },
    /// `f(t, 1)` has a root in `(lo, hi]` by a Sturm count.
    RootInterval { lo: BigRational, hi: BigRational },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealWitness {
    /// Unit vector approximating a zero.
    pub point: Vec<f64>,
    /// Upper bound for `|f(point)| / max|a_i|`.
    pub residual: f64,
    pub evidence: ExactEvidence,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RealVerdict {
    Soluble(RealWitness),
    Insoluble { method: InsolubilityMethod },
    Unknown { samples: usize },
}

impl RealVerdict {
    pub fn is_soluble(&self) -> bool {
        matches!(self, RealVerdict::Soluble(_))
    }

    pub fn is_insoluble(&self) -> bool {
        matches!(self, RealVerdict::Insoluble { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, RealVerdict::Unknown { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            RealVerdict::Soluble(_) => "soluble",
            RealVerdict::Insoluble { .. } => "insoluble",
            RealVerdict::Unknown { .. } => "unknown",
        }
    }

    pub fn class(&self) -> RealClass {
        match self {
            RealVerdict::Soluble(_) => RealClass::Soluble,
            RealVerdict::Insoluble { .. } => RealClass::Insoluble,
            RealVerdict::Unknown { .. } => RealClass::Unknown,
        }
    }
}

/// Verdict without the witness, for bulk classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RealClass {
    Soluble,
    Insoluble,
    Unknown,
}

enum Decision {
    /// Odd degree; no evidence computed yet.
    Odd,
    Evidence(ExactEvidence),
    Insoluble(InsolubilityMethod),
    Unknown(usize),
}

fn sign_of(x: &BigInt) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

fn to_rat(x: &[BigInt]) -> Vec<BigRational> {
    x.iter().map(|c| BigRational::from_integer(c.clone())).collect()
}

/// Radical inverse of `i` in base `b`, the Halton coordinate.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut inv = 1.0 / b as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * inv;
        i /= b;
        inv /= b as f64;
    }
    out
}

const HALTON_BASES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Deterministic grid followed by seeded random points, as integer vectors
/// at scale `2^SAMPLE_BITS` inside the cube `[-1, 1]^n`.
fn sample_points(n: usize, budget: &RealBudget) -> impl Iterator<Item = Vec<i64>> + '_ {
    let grid = budget.grid_points.unwrap_or(2 * n * 1000);
    let scale = (1i64 << SAMPLE_BITS) as f64;
    let quantize = move |u: f64| ((2.0 * u - 1.0) * scale).round() as i64;
    let halton = (1..=grid as u64).map(move |i| {
        (0..n)
            .map(|k| {
                let b = HALTON_BASES.get(k).copied().unwrap_or_else(|| crate::arith::next_prime(53 + 4 * k as u64));
                quantize(radical_inverse(i, b))
            })
            .collect::<Vec<i64>>()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let random = (0..budget.random_points).map(move |_| (0..n).map(|_| quantize(rng.gen::<f64>())).collect());
    halton.chain(random).filter(|x: &Vec<i64>| x.iter().any(|&c| c != 0))
}

/// Searches for exactly verified opposite signs or an exact zero.
fn sign_search(f: &Form, budget: &RealBudget) -> (Option<ExactEvidence>, usize) {
    let coeffs = f.coeffs_f64();
    let scale = (1i64 << SAMPLE_BITS) as f64;
    let amax = f.coeffs().max_abs_f64();
    let mut pos: Option<Vec<BigInt>> = None;
    let mut neg: Option<Vec<BigInt>> = None;
    let mut seen = 0;
    for x in sample_points(f.n(), budget) {
        seen += 1;
        let xf: Vec<f64> = x.iter().map(|&c| c as f64 / scale).collect();
        let v = f.eval_f64(&xf, &coeffs);
        let screen = v.abs() <= 1e-9 * amax;
        let want = if v > 0.0 { pos.is_none() } else { neg.is_none() };
        if !(screen || want) {
            continue;
        }
        let xi: Vec<BigInt> = x.iter().map(|&c| BigInt::from(c)).collect();
        let exact = f.eval_int(&xi).expect("dimension checked");
        match sign_of(&exact) {
            0 => return (Some(ExactEvidence::Zero(to_rat(&xi))), seen),
            1 if pos.is_none() => pos = Some(xi),
            -1 if neg.is_none() => neg = Some(xi),
            _ => {}
        }
        if let (Some(p), Some(q)) = (&pos, &neg) {
            if !parallel(p, q) {
                return (Some(ExactEvidence::Bracket { positive: p.clone(), negative: q.clone() }), seen);
            }
            // antipodal pair through the origin: drop one end and keep looking
            neg = None;
        }
    }
    (None, seen)
}

fn parallel(u: &[BigInt], v: &[BigInt]) -> bool {
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            if &u[i] * &v[j] != &u[j] * &v[i] {
                return false;
            }
        }
    }
    true
}

/// A coordinate axis on which `f` vanishes, i.e. a missing pure power.
fn axis_zero(f: &Form) -> Option<Vec<BigRational>> {
    let n = f.n();
    let d = f.d() as u32;
    (0..n).find_map(|i| {
        let mut e = vec![0u32; n];
        e[i] = d;
        let idx = f.basis().index_of(&e)?;
        f.coeffs().entries()[idx].is_zero().then(|| {
            (0..n).map(|k| BigRational::from_integer(BigInt::from((k == i) as i32))).collect()
        })
    })
}

fn quadratic_decision(f: &Form) -> Decision {
    let g = gram::doubled_gram(f).expect("degree 2");
    match gram::definiteness(&g) {
        Definiteness::Positive | Definiteness::Negative => Decision::Insoluble(InsolubilityMethod::Definiteness),
        Definiteness::Isotropic => {
            let diag = gram::diagonalize(&g);
            if let Some((v, _)) = diag.iter().find(|(_, val)| val.is_zero()) {
                return Decision::Evidence(ExactEvidence::Zero(v.clone()));
            }
            let p = diag.iter().find(|(_, val)| val.is_positive()).expect("indefinite");
            let q = diag.iter().find(|(_, val)| val.is_negative()).expect("indefinite");
            Decision::Evidence(ExactEvidence::Bracket { positive: clear_denominators(&p.0), negative: clear_denominators(&q.0) })
        }
    }
}

fn clear_denominators(v: &[BigRational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, c| num_integer::Integer::lcm(&acc, c.denom()));
    v.iter().map(|c| (c * BigRational::from_integer(l.clone())).to_integer()).collect()
}

/// `f(t, 1)` as a univariate polynomial; the basis order puts `x^d` first.
fn dehomogenize(f: &Form) -> RatPoly {
    let d = f.d();
    let mut c = vec![BigInt::zero(); d + 1];
    for (m, a) in f.basis().monomials().iter().zip(f.coeffs().entries()) {
        c[m.exponents()[0] as usize] = a.clone();
    }
    RatPoly::from_ints(&c)
}

fn binary_decision(f: &Form) -> Decision {
    // (1, 0) is covered by the axis check, so only the chart y = 1 remains.
    let g = dehomogenize(f);
    if poly::count_real_roots(&g) == 0 {
        return Decision::Insoluble(InsolubilityMethod::BinaryRootCount);
    }
    let b = poly::root_bound(&g);
    Decision::Evidence(ExactEvidence::RootInterval { lo: -b.clone(), hi: b })
}

/// Narrows a Sturm root interval of `f(t, 1)` to width `2^-bits`.
fn narrow_root(f: &Form, mut lo: BigRational, mut hi: BigRational, bits: u32) -> ExactEvidence {
    let g = dehomogenize(f);
    let chain = poly::sturm_chain(&g);
    let two = BigRational::from_integer(2.into());
    let eps = BigRational::new(BigInt::one(), BigInt::one() << bits);
    while &hi - &lo > eps {
        let mid = (&lo + &hi) / &two;
        if g.eval(&mid).is_zero() {
            return ExactEvidence::Zero(vec![mid, BigRational::one()]);
        }
        if poly::count_roots_between(&chain, &lo, &mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ExactEvidence::RootInterval { lo, hi }
}

fn decide(f: &Form, budget: &RealBudget) -> Decision {
    if f.d() % 2 == 1 {
        return Decision::Odd;
    }
    if let Some(z) = axis_zero(f) {
        return Decision::Evidence(ExactEvidence::Zero(z));
    }
    if f.d() == 2 {
        return quadratic_decision(f);
    }
    let (found, seen) = sign_search(f, budget);
    if let Some(e) = found {
        return Decision::Evidence(e);
    }
    if f.n() == 2 {
        return binary_decision(f);
    }
    Decision::Unknown(seen)
}

fn check_nonzero(f: &Form) -> Result<()> {
    if f.coeffs().is_zero() {
        return domain("the zero form has no solubility verdict");
    }
    Ok(())
}

/// Verdict without witness refinement.
pub fn real_class(f: &Form, budget: &RealBudget) -> Result<RealClass> {
    check_nonzero(f)?;
    Ok(match decide(f, budget) {
        Decision::Odd | Decision::Evidence(_) => RealClass::Soluble,
        Decision::Insoluble(_) => RealClass::Insoluble,
        Decision::Unknown(_) => RealClass::Unknown,
    })
}

pub fn real_solubility(f: &Form, budget: &RealBudget) -> Result<RealVerdict> {
    check_nonzero(f)?;
    Ok(match decide(f, budget) {
        Decision::Odd => RealVerdict::Soluble(odd_witness(f, budget)),
        Decision::Evidence(e) => RealVerdict::Soluble(refine(f, e, budget)),
        Decision::Insoluble(method) => RealVerdict::Insoluble { method },
        Decision::Unknown(samples) => RealVerdict::Unknown { samples },
    })
}

/// Membership of `a` in `T_∞`; solubility does not see the normalisation
/// into `[-1, 1]^N`, so this is the plain real verdict.
pub fn t_infty_membership(f: &Form, budget: &RealBudget) -> Result<RealVerdict> {
    real_solubility(f, budget)
}

/// For odd `d`, `f(-v) = -f(v)`: pick `v` with `f(v) ≠ 0` and any `w` off the
/// line through `v`; one of the arcs `v → w` or `w → -v` changes sign.
fn odd_witness(f: &Form, budget: &RealBudget) -> RealWitness {
    if let Some(z) = axis_zero(f) {
        return refine(f, ExactEvidence::Zero(z), budget);
    }
    let mut v: Option<(Vec<BigInt>, i8)> = None;
    let n = f.n();
    let axes = (0..n).map(|i| (0..n).map(|k| i64::from(k == i)).collect::<Vec<i64>>());
    for x in axes.chain(sample_points(n, budget)) {
        let xi: Vec<BigInt> = x.into_iter().map(BigInt::from).collect();
        let s = sign_of(&f.eval_int(&xi).expect("dimension checked"));
        if s == 0 {
            return refine(f, ExactEvidence::Zero(to_rat(&xi)), budget);
        }
        match &v {
            None => v = Some((xi, s)),
            Some((v0, s0)) if !parallel(v0, &xi) => {
                let (a, b) = if s != *s0 { (v0.clone(), xi) } else { (xi, v0.iter().map(|c| -c).collect()) };
                let (positive, negative) = if sign_of(&f.eval_int(&a).unwrap()) > 0 { (a, b) } else { (b, a) };
                return refine(f, ExactEvidence::Bracket { positive, negative }, budget);
            }
            _ => {}
        }
    }
    unreachable!("the axes already contain two independent points")
}

fn unit_f64(x: &[BigRational]) -> Vec<f64> {
    let xf: Vec<f64> = x.iter().map(|c| c.to_f64().unwrap_or(0.0)).collect();
    let norm = xf.iter().map(|c| c * c).sum::<f64>().sqrt();
    xf.iter().map(|c| c / norm).collect()
}

/// `|f(x)| / (max|a_i| · ‖x‖_∞^d)`, which bounds the residual at `x / ‖x‖_2`.
fn residual_bound(f: &Form, x: &[BigRational]) -> f64 {
    let v = f.eval_rat(x).expect("dimension checked").abs();
    if v.is_zero() {
        return 0.0;
    }
    let amax = f.coeffs().entries().iter().map(|c| c.abs()).max().unwrap_or_default();
    let xmax = x.iter().map(|c| c.abs()).fold(BigRational::zero(), |a, b| if b > a { b } else { a });
    let denom = BigRational::from_integer(amax) * num_traits::pow(xmax, f.d());
    (v / denom).to_f64().unwrap_or(f64::INFINITY)
}

fn refine(f: &Form, evidence: ExactEvidence, budget: &RealBudget) -> RealWitness {
    match evidence {
        ExactEvidence::Zero(z) => RealWitness { point: unit_f64(&z), residual: 0.0, evidence: ExactEvidence::Zero(z) },
        ExactEvidence::Bracket { positive, negative } => {
            let (mut p, mut q) = (positive.clone(), negative.clone());
            for _ in 0..budget.max_bisections {
                let m: Vec<BigInt> = p.iter().zip(&q).map(|(a, b)| a + b).collect();
                let s = sign_of(&f.eval_int(&m).expect("dimension checked"));
                if s == 0 {
                    let z = to_rat(&m);
                    return RealWitness { point: unit_f64(&z), residual: 0.0, evidence: ExactEvidence::Zero(z) };
                }
                let doubled = |v: &[BigInt]| v.iter().map(|c| c * 2).collect::<Vec<_>>();
                if s > 0 {
                    p = m;
                    q = doubled(&q);
                } else {
                    q = m;
                    p = doubled(&p);
                }
                if residual_bound(f, &to_rat(&p)) < budget.tolerance {
                    break;
                }
            }
            let x = to_rat(&p);
            RealWitness {
                point: unit_f64(&x),
                residual: residual_bound(f, &x),
                evidence: ExactEvidence::Bracket { positive: p, negative: q },
            }
        }
        ExactEvidence::RootInterval { lo, hi } => {
            let (lo, hi) = match narrow_root(f, lo, hi, 60) {
                ExactEvidence::RootInterval { lo, hi } => (lo, hi),
                zero => return refine(f, zero, budget),
            };
            let t = (&lo + &hi) / BigRational::from_integer(2.into());
            let x = vec![t, BigRational::one()];
            RealWitness { point: unit_f64(&x), residual: residual_bound(f, &x), evidence: ExactEvidence::RootInterval { lo, hi } }
        }
    }
}

/// Independent check of a witness's exact evidence.
pub fn verify_witness(f: &Form, w: &RealWitness) -> bool {
    match &w.evidence {
        ExactEvidence::Zero(z) => z.iter().any(|c| !c.is_zero()) && f.eval_rat(z).is_ok_and(|v| v.is_zero()),
        ExactEvidence::Bracket { positive, negative } => {
            !parallel(positive, negative)
                && f.eval_int(positive).is_ok_and(|v| v.is_positive())
                && f.eval_int(negative).is_ok_and(|v| v.is_negative())
        }
        ExactEvidence::RootInterval { lo, hi } => {
            if f.n() != 2 {
                return false;
            }
            let g = dehomogenize(f);
            poly::count_roots_between(&poly::sturm_chain(&g), lo, hi) > 0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn verdict(n: usize, d: usize, a: &[i64]) -> RealVerdict {
        real_solubility(&Form::from_i64(n, d, a).unwrap(), &RealBudget::default()).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(verdict(2, 2, &[1, 0, 1]), RealVerdict::Insoluble { method: InsolubilityMethod::Definiteness });
        assert_eq!(verdict(2, 2, &[2, 0, 2]), RealVerdict::Insoluble { method: InsolubilityMethod::Definiteness });
        let RealVerdict::Soluble(w) = verdict(2, 2, &[1, 0, -1]) else { panic!() };
        assert!((w.point[0].abs() - w.point[1].abs()).abs() < 1e-9);
        assert!(w.residual < 1e-12);
        assert!(verdict(2, 2, &[1, 0, -17]).is_soluble());
        assert!(real_solubility(&Form::from_i64(2, 2, &[0, 0, 0]).unwrap(), &RealBudget::default()).is_err());
    }

    #[test]
    fn odd_degree_is_soluble() {
        for a in [[1, 0, 0, 1], [1, 1, 1, 1], [3, -2, 5, 7], [0, 0, 0, 1]] {
            let f = Form::from_i64(2, 3, &a).unwrap();
            let RealVerdict::Soluble(w) = real_solubility(&f, &RealBudget::default()).unwrap() else { panic!() };
            assert!(verify_witness(&f, &w));
            assert!(w.residual < 1e-12, "{a:?}: {}", w.residual);
        }
        let f = Form::from_i64(3, 3, &[1, 0, 0, 0, 0, 0, 2, 0, 0, 4]).unwrap();
        assert!(real_solubility(&f, &RealBudget::default()).unwrap().is_soluble());
    }

    #[test]
    fn disc_oracle_binary_quadratics() {
        for a0 in -10..=10i64 {
            for a1 in -10..=10i64 {
                for a2 in -10..=10i64 {
                    if a0 == 0 && a1 == 0 && a2 == 0 {
                        continue;
                    }
                    let v = verdict(2, 2, &[a0, a1, a2]);
                    let oracle = a1 * a1 - 4 * a0 * a2 >= 0;
                    assert_eq!(v.is_soluble(), oracle, "{a0} {a1} {a2}");
                    assert!(!v.is_unknown());
                }
            }
        }
    }

    #[test]
    fn ternary_quartics() {
        // x⁴ + y⁴ + z⁴ stays positive: the sampler has nothing to say
        let mut a = vec![0i64; 15];
        a[0] = 1;
        a[10] = 1;
        a[14] = 1;
        assert!(verdict(3, 4, &a).is_unknown());
        // x⁴ - y⁴ + z⁴
        a[10] = -1;
        let f = Form::from_i64(3, 4, &a).unwrap();
        let RealVerdict::Soluble(w) = real_solubility(&f, &RealBudget::default()).unwrap() else { panic!() };
        assert!(verify_witness(&f, &w));
        assert!(w.residual < 1e-12);
    }

    #[test]
    fn binary_quartics_by_sturm() {
        // (x² + y²)(x² + 2y²) has no real zero; (x² - 2y²)² has the double root √2
        assert_eq!(verdict(2, 4, &[1, 0, 3, 0, 2]), RealVerdict::Insoluble { method: InsolubilityMethod::BinaryRootCount });
        let f = Form::from_i64(2, 4, &[1, 0, -4, 0, 4]).unwrap();
        let RealVerdict::Soluble(w) = real_solubility(&f, &RealBudget::default()).unwrap() else { panic!() };
        assert!(matches!(w.evidence, ExactEvidence::RootInterval { .. }));
        assert!(verify_witness(&f, &w));
        assert!((w.point[0] / w.point[1]).abs() - 2f64.sqrt() < 1e-9);
    }

    #[test]
    fn sturm_agrees_with_sampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sampler = RealBudget { grid_points: Some(200), random_points: 100, ..RealBudget::default() };
        for _ in 0..10_000 {
            let a: Vec<i64> = (0..5).map(|_| rng.gen_range(-6..=6)).collect();
            if a.iter().all(|&c| c == 0) {
                continue;
            }
            let f = Form::from_i64(2, 4, &a).unwrap();
            let exact = match binary_decision(&f) {
                Decision::Insoluble(_) => false,
                _ => true,
            } || axis_zero(&f).is_some();
            if let (Some(_), _) = sign_search(&f, &sampler) {
                assert!(exact, "{a:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn scaling_invariance(a in proptest::collection::vec(-20i64..=20, 5), c in prop_oneof![-9i64..=-1, 1i64..=9]) {
            prop_assume!(a.iter().any(|&x| x != 0));
            let base = verdict(2, 4, &a).class();
            let scaled: Vec<i64> = a.iter().map(|x| x * c).collect();
            prop_assert_eq!(verdict(2, 4, &scaled).class(), base);
        }
    }
}
