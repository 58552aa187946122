//! Degree-d forms in n variables, stored as coefficient vectors against the
//! Veronese monomial basis.
//!
//! Monomials are listed in descending lexicographic order of their exponent
//! vectors, so `x_1^d` comes first and `x_n^d` last. A form is
//! `f_a(x) = Σ_i a_i x^{m_i}`. All evaluation is exact.

use std::fmt;
use std::ops::{Add, Mul};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn new(exponents: Vec<u32>) -> Self {
        ExponentVector(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// N = binom(n+d-1, d).
pub fn veronese_dimension(n: usize, d: usize) -> Result<usize> {
    if n < 1 || d < 1 {
        return domain(format!("veronese dimension needs n, d >= 1 (got n={n}, d={d})"));
    }
    let mut acc: u128 = 1;
    // binom(n+d-1, d) = Π_{i=1..d} (n-1+i)/i, exact at every step
    for i in 1..=d as u128 {
        acc = acc * (n as u128 - 1 + i) / i;
        if acc > usize::MAX as u128 {
            return Err(Error::Budget(format!("binom({}, {d}) overflows", n + d - 1)));
        }
    }
    Ok(acc as usize)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VeroneseBasis {
    n: usize,
    d: usize,
    monomials: Vec<ExponentVector>,
}

impl VeroneseBasis {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        let expected = veronese_dimension(n, d)?;
        let mut monomials = Vec::with_capacity(expected);
        let mut current = vec![0u32; n];
        compositions(d as u32, 0, &mut current, &mut monomials);
        debug_assert_eq!(monomials.len(), expected);
        Ok(VeroneseBasis { n, d, monomials })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[ExponentVector] {
        &self.monomials
    }

    pub fn index_of(&self, exps: &[u32]) -> Option<usize> {
        self.monomials.iter().position(|m| m.exponents() == exps)
    }
}

// Emits compositions of `left` into the remaining slots, largest leading
// exponent first, which is exactly descending lex order.
fn compositions(left: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<ExponentVector>) {
    let n = cur.len();
    if pos == n - 1 {
        cur[pos] = left;
        out.push(ExponentVector(cur.clone()));
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e;
        compositions(left - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

pub fn veronese_basis(n: usize, d: usize) -> Result<VeroneseBasis> {
    VeroneseBasis::new(n, d)
}

/// The vector a ∈ ℤ^N.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoefficientVector(Vec<BigInt>);

impl CoefficientVector {
    pub fn new(entries: Vec<BigInt>) -> Self {
        CoefficientVector(entries)
    }

    pub fn from_i64(entries: &[i64]) -> Self {
        CoefficientVector(entries.iter().map(|&e| BigInt::from(e)).collect())
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<BigInt> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        CoefficientVector(self.0.iter().map(|x| x * c).collect())
    }

    pub fn neg(&self) -> Self {
        CoefficientVector(self.0.iter().map(|x| -x).collect())
    }

    /// Max-norm as f64, used only for residual normalisation.
    pub fn max_abs_f64(&self) -> f64 {
        self.0
            .iter()
            .map(|x| x.abs().to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for CoefficientVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// gcd of the entries (0 for the zero vector) and the primitive part.
pub fn content_and_primitive(a: &CoefficientVector) -> (BigInt, Option<CoefficientVector>) {
    let g = crate::arith::gcd_all(a.entries());
    if g.is_zero() {
        return (g, None);
    }
    let prim = CoefficientVector(a.entries().iter().map(|x| x / &g).collect());
    (g, Some(prim))
}

/// A form `f_a` together with its basis; the basis is shared between forms
/// so that exponent tables are built once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    basis: Arc<VeroneseBasis>,
    coeffs: CoefficientVector,
}

impl Form {
    pub fn new(basis: Arc<VeroneseBasis>, coeffs: CoefficientVector) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::Structure(format!(
                "coefficient vector has length {} but the basis for n={}, d={} has {}",
                coeffs.len(),
                basis.n,
                basis.d,
                basis.len()
            )));
        }
        Ok(Form { basis, coeffs })
    }

    pub fn from_i64(n: usize, d: usize, coeffs: &[i64]) -> Result<Self> {
        Form::new(Arc::new(VeroneseBasis::new(n, d)?), CoefficientVector::from_i64(coeffs))
    }

    pub fn basis(&self) -> &Arc<VeroneseBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &CoefficientVector {
        &self.coeffs
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }

    pub fn d(&self) -> usize {
        self.basis.d
    }

    pub fn with_coeffs(&self, coeffs: CoefficientVector) -> Result<Self> {
        Form::new(self.basis.clone(), coeffs)
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.basis.n {
            return Err(Error::Structure(format!(
                "point has {len} coordinates, form has {} variables",
                self.basis.n
            )));
        }
        Ok(())
    }

    fn power_table<T>(&self, x: &[T]) -> Vec<Vec<T>>
    where
        T: Clone + One + for<'a> Mul<&'a T, Output = T>,
    {
        x.iter()
            .map(|xi| {
                let mut row = Vec::with_capacity(self.basis.d + 1);
                row.push(T::one());
                for k in 1..=self.basis.d {
                    let next = row[k - 1].clone() * xi;
                    row.push(next);
                }
                row
            })
            .collect()
    }

    /// Evaluates over any commutative ring given a lift of the integer coefficients.
    pub fn eval_with<T, F>(&self, x: &[T], lift: F) -> Result<T>
    where
        T: Clone + Zero + One + Add<Output = T> + for<'a> Mul<&'a T, Output = T>,
        F: Fn(&BigInt) -> T,
    {
        self.check_point(x.len())?;
        let pw = self.power_table(x);
        let mut acc = T::zero();
        for (m, a) in self.basis.monomials.iter().zip(self.coeffs.entries()) {
            if a.is_zero() {
                continue;
            }
            let mut term = lift(a);
            for (i, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    term = term * &pw[i][e as usize];
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    pub fn gradient_with<T, F>(&self, x: &[T], lift: F) -> Result<Vec<T>>
    where
        T: Clone + Zero + One + Add<Output = T> + for<'a> Mul<&'a T, Output = T>,
        F: Fn(&BigInt) -> T,
    {
        self.check_point(x.len())?;
        let pw = self.power_table(x);
        let n = self.basis.n;
        let mut grad = vec![T::zero(); n];
        for (m, a) in self.basis.monomials.iter().zip(self.coeffs.entries()) {
            if a.is_zero() {
                continue;
            }
            let exps = m.exponents();
            for (j, g) in grad.iter_mut().enumerate() {
                if exps[j] == 0 {
                    continue;
                }
                let mut term = lift(&(a * BigInt::from(exps[j])));
                for (i, &e) in exps.iter().enumerate() {
                    let e = if i == j { e - 1 } else { e };
                    if e > 0 {
                        term = term * &pw[i][e as usize];
                    }
                }
                *g = g.clone() + term;
            }
        }
        Ok(grad)
    }

    pub fn eval_int(&self, x: &[BigInt]) -> Result<BigInt> {
        self.eval_with(x, |a| a.clone())
    }

    pub fn eval_rat(&self, x: &[BigRational]) -> Result<BigRational> {
        self.eval_with(x, |a| BigRational::from_integer(a.clone()))
    }

    pub fn gradient_int(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        self.gradient_with(x, |a| a.clone())
    }

    pub fn gradient_rat(&self, x: &[BigRational]) -> Result<Vec<BigRational>> {
        self.gradient_with(x, |a| BigRational::from_integer(a.clone()))
    }

    /// Floating-point evaluation; only ever used for screening signs, never
    /// for a verdict.
    pub fn eval_f64(&self, x: &[f64], coeffs: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, a) in self.basis.monomials.iter().zip(coeffs) {
            if *a == 0.0 {
                continue;
            }
            let mut term = *a;
            for (i, &e) in m.exponents().iter().enumerate() {
                term *= x[i].powi(e as i32);
            }
            acc += term;
        }
        acc
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs
            .entries()
            .iter()
            .map(|a| a.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    /// f_a(x) mod m for residues `x` in [0, m); requires m < 2^63.
    pub fn eval_mod(&self, x: &[u128], coeffs_mod: &[u128], m: u128) -> u128 {
        let mut acc = 0u128;
        for (mono, &a) in self.basis.monomials.iter().zip(coeffs_mod) {
            if a == 0 {
                continue;
            }
            let mut term = a;
            for (i, &e) in mono.exponents().iter().enumerate() {
                for _ in 0..e {
                    term = term * x[i] % m;
                }
            }
            acc = (acc + term) % m;
        }
        acc
    }

    /// ∇f_a(x) mod m for residues `x` in [0, m); requires m < 2^63.
    pub fn gradient_mod(&self, x: &[u128], coeffs_mod: &[u128], m: u128) -> Vec<u128> {
        let n = self.basis.n;
        let mut grad = vec![0u128; n];
        for (mono, &a) in self.basis.monomials.iter().zip(coeffs_mod) {
            if a == 0 {
                continue;
            }
            let exps = mono.exponents();
            for j in 0..n {
                if exps[j] == 0 {
                    continue;
                }
                let mut term = a * (exps[j] as u128 % m) % m;
                for (i, &e) in exps.iter().enumerate() {
                    let e = if i == j { e - 1 } else { e };
                    for _ in 0..e {
                        term = term * x[i] % m;
                    }
                }
                grad[j] = (grad[j] + term) % m;
            }
        }
        grad
    }

    /// Coefficients reduced into [0, m).
    pub fn coeffs_mod(&self, m: u128) -> Vec<u128> {
        let bm = BigInt::from(m);
        self.coeffs
            .entries()
            .iter()
            .map(|a| a.mod_floor(&bm).to_u128().unwrap())
            .collect()
    }

    /// Coefficient of `x_1^d`, i.e. f(1, 0, ..., 0).
    pub fn leading(&self) -> &BigInt {
        &self.coeffs.entries()[0]
    }
}

/// `f_a(x)` for a coefficient vector over the given basis.
pub fn evaluate_form(basis: &Arc<VeroneseBasis>, a: &CoefficientVector, x: &[BigRational]) -> Result<BigRational> {
    Form::new(basis.clone(), a.clone())?.eval_rat(x)
}

pub fn gradient_form(
    basis: &Arc<VeroneseBasis>,
    a: &CoefficientVector,
    x: &[BigRational],
) -> Result<Vec<BigRational>> {
    Form::new(basis.clone(), a.clone())?.gradient_rat(x)
}

pub fn ints(xs: &[i64]) -> Vec<BigInt> {
    xs.iter().map(|&x| BigInt::from(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(x: i64) -> BigRational {
        BigRational::from_integer(x.into())
    }

    #[test]
    fn dimensions() {
        assert_eq!(veronese_dimension(2, 2).unwrap(), 3);
        assert_eq!(veronese_dimension(3, 3).unwrap(), 10);
        assert_eq!(veronese_dimension(4, 3).unwrap(), 20);
        assert!(veronese_dimension(0, 3).is_err());
        assert!(veronese_dimension(3, 0).is_err());
        for n in 1..=8 {
            for d in 1..=8 {
                assert_eq!(veronese_basis(n, d).unwrap().len(), veronese_dimension(n, d).unwrap());
            }
        }
    }

    // Independent enumeration: every exponent vector in [0,d]^n with sum d,
    // sorted descending.
    fn brute_basis(n: usize, d: u32) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let total = (d as usize + 1).pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                v.push((c % (d as usize + 1)) as u32);
                c /= d as usize + 1;
            }
            if v.iter().sum::<u32>() == d {
                out.push(v);
            }
        }
        out.sort();
        out.reverse();
        out
    }

    #[test]
    fn basis_order() {
        let b = veronese_basis(2, 2).unwrap();
        let got: Vec<_> = b.monomials().iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(got, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let b = veronese_basis(3, 2).unwrap();
        let got: Vec<_> = b.monomials().iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(
            got,
            vec![vec![2, 0, 0], vec![1, 1, 0], vec![1, 0, 1], vec![0, 2, 0], vec![0, 1, 1], vec![0, 0, 2]]
        );
        assert_eq!(veronese_basis(1, 5).unwrap().monomials()[0].exponents(), &[5]);
        for n in 1..=4 {
            for d in 1..=5 {
                let b = veronese_basis(n, d).unwrap();
                let got: Vec<_> = b.monomials().iter().map(|m| m.exponents().to_vec()).collect();
                assert_eq!(got, brute_basis(n, d as u32));
            }
        }
    }

    #[test]
    fn evaluation_examples() {
        let f = Form::from_i64(2, 2, &[1, 0, -17]).unwrap();
        assert_eq!(f.eval_int(&ints(&[4, 1])).unwrap(), BigInt::from(-1));
        assert_eq!(f.gradient_int(&ints(&[4, 1])).unwrap(), ints(&[8, -34]));
        let g = Form::from_i64(3, 2, &[1, 0, 0, 1, 0, 1]).unwrap();
        assert_eq!(g.eval_int(&ints(&[1, 2, 0])).unwrap(), BigInt::from(5));
        assert_eq!(g.gradient_int(&ints(&[1, 2, 0])).unwrap(), ints(&[2, 4, 0]));
        assert!(g.eval_int(&ints(&[0, 0, 0])).unwrap().is_zero());
        assert!(g.gradient_int(&ints(&[0, 0, 0])).unwrap().iter().all(Zero::is_zero));
        assert!(matches!(g.eval_int(&ints(&[1, 2])), Err(Error::Structure(_))));
        assert!(Form::from_i64(3, 2, &[1, 2]).is_err());
    }

    #[test]
    fn content() {
        let (g, p) = content_and_primitive(&CoefficientVector::from_i64(&[2, 4, 6]));
        assert_eq!(g, BigInt::from(2));
        assert_eq!(p.unwrap(), CoefficientVector::from_i64(&[1, 2, 3]));
        let (g, p) = content_and_primitive(&CoefficientVector::from_i64(&[0, 0, 0]));
        assert!(g.is_zero() && p.is_none());
        let (g, p) = content_and_primitive(&CoefficientVector::from_i64(&[3, 5, 7]));
        assert!(g.is_one());
        assert_eq!(p.unwrap(), CoefficientVector::from_i64(&[3, 5, 7]));
    }

    #[test]
    fn modular_matches_exact() {
        let f = Form::from_i64(3, 3, &[3, -1, 4, 1, -5, 9, 2, -6, 5, 3]).unwrap();
        let m = 343u128;
        let cm = f.coeffs_mod(m);
        for x in [[1u128, 2, 3], [0, 0, 1], [300, 17, 5]] {
            let xi: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
            let exact = f.eval_int(&xi).unwrap().mod_floor(&BigInt::from(m));
            assert_eq!(BigInt::from(f.eval_mod(&x, &cm, m)), exact);
            let g = f.gradient_int(&xi).unwrap();
            let gm = f.gradient_mod(&x, &cm, m);
            for (a, b) in g.iter().zip(gm) {
                assert_eq!(a.mod_floor(&BigInt::from(m)), BigInt::from(b));
            }
        }
    }

    // Degree-2 forms: the central difference quotient is exact, so the
    // gradient must match it symbolically.
    #[test]
    fn central_difference_exact_for_quadratics() {
        let f = Form::from_i64(3, 2, &[3, -2, 5, 1, 7, -4]).unwrap();
        let x = vec![rat(2), BigRational::new(1.into(), 3.into()), rat(-1)];
        let h = BigRational::new(1.into(), 7.into());
        let grad = f.gradient_rat(&x).unwrap();
        for j in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += &h;
            xm[j] -= &h;
            let q = (f.eval_rat(&xp).unwrap() - f.eval_rat(&xm).unwrap()) / (rat(2) * &h);
            assert_eq!(q, grad[j]);
        }
    }

    #[test]
    fn central_difference_float_cubic() {
        let f = Form::from_i64(3, 3, &[3, -1, 4, 1, -5, 9, 2, -6, 5, 3]).unwrap();
        let c = f.coeffs_f64();
        let x = [0.7, -1.3, 0.4];
        let h = 1e-4;
        let xr: Vec<BigRational> = x.iter().map(|&v| BigRational::from_float(v).unwrap()).collect();
        let grad = f.gradient_rat(&xr).unwrap();
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let q = (f.eval_f64(&xp, &c) - f.eval_f64(&xm, &c)) / (2.0 * h);
            let g = grad[j].to_f64().unwrap();
            assert!(((q - g) / g).abs() < 1e-6, "{q} vs {g}");
        }
    }

    fn arb_case() -> impl Strategy<Value = (usize, usize, Vec<i64>, Vec<i64>, i64)> {
        (2usize..=4, 2usize..=4).prop_flat_map(|(n, d)| {
            let big_n = veronese_dimension(n, d).unwrap();
            (
                Just(n),
                Just(d),
                proptest::collection::vec(-1000i64..=1000, big_n),
                proptest::collection::vec(-1000i64..=1000, n),
                -1000i64..=1000,
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn homogeneity((n, d, a, x, c) in arb_case()) {
            let f = Form::from_i64(n, d, &a).unwrap();
            let cx: Vec<i64> = x.iter().map(|v| v * c).collect();
            let lhs = f.eval_int(&ints(&cx)).unwrap();
            let rhs = BigInt::from(c).pow(d as u32) * f.eval_int(&ints(&x)).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn euler_identity((n, d, a, x, _c) in arb_case()) {
            let f = Form::from_i64(n, d, &a).unwrap();
            let xs = ints(&x);
            let g = f.gradient_int(&xs).unwrap();
            let dot: BigInt = g.iter().zip(&xs).map(|(gi, xi)| gi * xi).sum();
            prop_assert_eq!(dot, BigInt::from(d) * f.eval_int(&xs).unwrap());
        }
    }
}
