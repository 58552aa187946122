//! Exact linear algebra on the Gram matrix of a quadratic form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{domain, Result};
use crate::forms::Form;

/// `2·G` for the quadratic form `f(x) = xᵀ G x`, so that `f(x) = ½ xᵀ (2G) x`
/// has integer entries: the diagonal holds twice the square coefficients and
/// the off-diagonal entries hold the cross coefficients.
pub fn doubled_gram(f: &Form) -> Result<Vec<Vec<BigInt>>> {
    if f.d() != 2 {
        return domain(format!("Gram matrix needs degree 2, got {}", f.d()));
    }
    let n = f.n();
    let mut g = vec![vec![BigInt::zero(); n]; n];
    for (m, a) in f.basis().monomials().iter().zip(f.coeffs().entries()) {
        let idx: Vec<usize> = m
            .exponents()
            .iter()
            .enumerate()
            .flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize))
            .collect();
        let (i, j) = (idx[0], idx[1]);
        if i == j {
            g[i][i] = a * 2;
        } else {
            g[i][j] = a.clone();
            g[j][i] = a.clone();
        }
    }
    Ok(g)
}

/// Rank by fraction-free (Bareiss) elimination with row and column pivoting.
pub fn rank(m: &[Vec<BigInt>]) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut prev = BigInt::from(1);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                a[i][j] = v / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Leading principal minors `det(M[..k, ..k])` for k = 1..n, via Bareiss
/// elimination without pivoting; a zero pivot stops the sweep (later minors
/// are then computed directly).
pub fn leading_minors(m: &[Vec<BigInt>]) -> Vec<BigInt> {
    (1..=m.len())
        .map(|k| {
            let sub: Vec<Vec<BigInt>> = m[..k].iter().map(|row| row[..k].to_vec()).collect();
            determinant(&sub)
        })
        .collect()
}

/// Determinant by Bareiss elimination with row pivoting.
pub fn determinant(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let mut a = m.to_vec();
    let mut sign = 1;
    let mut prev = BigInt::from(1);
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return BigInt::zero();
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[k][k] * &a[i][j] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    a[n - 1][n - 1].clone() * sign
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definiteness {
    Positive,
    Negative,
    /// Takes both signs or has a nontrivial kernel; either way it has a
    /// nonzero real zero.
    Isotropic,
}

/// Sylvester's criterion on the leading principal minors.
pub fn definiteness(m: &[Vec<BigInt>]) -> Definiteness {
    let minors = leading_minors(m);
    if minors.iter().all(|x| x.is_positive()) {
        return Definiteness::Positive;
    }
    let neg = minors
        .iter()
        .enumerate()
        .all(|(k, x)| if k % 2 == 0 { x.is_negative() } else { x.is_positive() });
    if neg {
        Definiteness::Negative
    } else {
        Definiteness::Isotropic
    }
}

/// Congruence diagonalisation over ℚ: returns pairs `(v_k, f(v_k))` where the
/// `v_k` form a basis of ℚ^n that is orthogonal for the bilinear form.
pub fn diagonalize(gram2: &[Vec<BigInt>]) -> Vec<(Vec<BigRational>, BigRational)> {
    let n = gram2.len();
    let half = BigRational::new(1.into(), 2.into());
    let mut g: Vec<Vec<BigRational>> = gram2
        .iter()
        .map(|row| row.iter().map(|x| BigRational::from_integer(x.clone()) * &half).collect())
        .collect();
    // columns of t are the current basis vectors
    let mut t: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| BigRational::from_integer(BigInt::from((i == j) as i32))).collect())
        .collect();
    let add_into = |g: &mut Vec<Vec<BigRational>>, t: &mut Vec<Vec<BigRational>>, dst: usize, src: usize, c: &BigRational| {
        // basis_dst += c·basis_src, applied as a congruence
        for row in g.iter_mut() {
            let v = &row[src] * c;
            row[dst] += v;
        }
        let src_row = g[src].clone();
        for (j, v) in src_row.iter().enumerate() {
            let add = v * c;
            g[dst][j] += add;
        }
        for i in 0..t.len() {
            let v = &t[i][src] * c;
            t[i][dst] += v;
        }
    };
    for k in 0..n {
        if g[k][k].is_zero() {
            if let Some(i) = (k + 1..n).find(|&i| !g[i][i].is_zero()) {
                g.swap(i, k);
                for row in g.iter_mut() {
                    row.swap(i, k);
                }
                for row in t.iter_mut() {
                    row.swap(i, k);
                }
            } else if let Some(j) = (k + 1..n).find(|&j| !g[k][j].is_zero()) {
                let one = BigRational::from_integer(1.into());
                add_into(&mut g, &mut t, k, j, &one);
            } else {
                continue;
            }
        }
        for j in k + 1..n {
            if g[j][k].is_zero() {
                continue;
            }
            let c = -(&g[j][k] / &g[k][k]);
            add_into(&mut g, &mut t, j, k, &c);
        }
    }
    (0..n)
        .map(|k| ((0..n).map(|i| t[i][k].clone()).collect(), g[k][k].clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::ints;

    #[test]
    fn gram_of_sum_of_squares() {
        let f = Form::from_i64(3, 2, &[1, 0, 0, 1, 0, 1]).unwrap();
        let g = doubled_gram(&f).unwrap();
        assert_eq!(g[0], ints(&[2, 0, 0]));
        assert_eq!(rank(&g), 3);
        assert_eq!(definiteness(&g), Definiteness::Positive);
    }

    #[test]
    fn rank_and_determinant() {
        let m = vec![ints(&[1, 2, 3]), ints(&[2, 4, 6]), ints(&[1, 0, 1])];
        assert_eq!(rank(&m), 2);
        assert!(determinant(&m).is_zero());
        let m = vec![ints(&[0, 1]), ints(&[1, 0])];
        assert_eq!(determinant(&m), BigInt::from(-1));
        assert_eq!(rank(&m), 2);
    }

    #[test]
    fn diagonalisation_is_a_congruence() {
        for coeffs in [[0, 1, 0, 0, 1, 0], [1, 2, 3, 4, 5, 6], [0, 0, 0, 0, 0, 1], [2, -1, 0, 3, 0, -7]] {
            let f = Form::from_i64(3, 2, &coeffs).unwrap();
            let g = doubled_gram(&f).unwrap();
            let diag = diagonalize(&g);
            for (v, val) in &diag {
                assert_eq!(f.eval_rat(v).unwrap(), *val);
            }
            let nonzero = diag.iter().filter(|(_, v)| !v.is_zero()).count();
            assert_eq!(nonzero, rank(&g));
        }
    }
}
