//! Census of local solubility over the primitive thin set, the quantity
//! `d(𝒰, A; P)`, convergence reports against `c_P`, and the positivity probe.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arith::{exact_sqrt, next_prime, primes_up_to, trial_factor, valuation};
use crate::densities::{c_p_estimate, CPEstimate, CpParams};
use crate::error::{Error, Result};
use crate::forms::{veronese_dimension, CoefficientVector, Form, VeroneseBasis};
use crate::gram;
use crate::padic::{is_square_in_qp, zp_solubility, Place, SearchBudget, SolubilityVerdict};
use crate::real::{real_class, RealBudget, RealClass};
use crate::thin::{count_thin, enumerate_thin_points, sample_thin, BoxSpec, CongruenceSpec, Strategy, ThinFormP};

/// Outcome for one coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LocalVerdict {
    Soluble { via: SolubleVia },
    Insoluble { place: Place },
    Unknown { reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolubleVia {
    /// A rational zero, hence a zero at every place.
    RationalPoint,
    /// Quadratic in ≥ 3 variables: primes not dividing `2·det` are isotropic
    /// and the remaining ones were searched.
    QuadraticPrimes,
}

impl LocalVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            LocalVerdict::Soluble { .. } => "soluble",
            LocalVerdict::Insoluble { .. } => "insoluble",
            LocalVerdict::Unknown { .. } => "unknown",
        }
    }
}

impl fmt::Display for SolubleVia {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolubleVia::RationalPoint => "rational-point",
            SolubleVia::QuadraticPrimes => "quadratic-primes",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusBudgets {
    pub search: SearchBudget,
    pub real: RealBudget,
    /// Primes in `(p_max, p_tail]` are probed for insolubility.
    pub p_tail: u64,
    /// Height of the integer search for a rational zero when `n ≥ 3`.
    pub height: i64,
    /// Trial-division bound used to factor discriminants and determinants.
    pub factor_bound: u64,
}

impl Default for CensusBudgets {
    fn default() -> Self {
        CensusBudgets {
            search: SearchBudget::with_max_level(12),
            real: RealBudget::default(),
            p_tail: 1000,
            height: 6,
            factor_bound: 1_000_000,
        }
    }
}

fn zero_vec(n: usize, i: usize) -> Vec<BigInt> {
    (0..n).map(|k| BigInt::from((k == i) as i32)).collect()
}

fn divisors(m: &BigInt, bound: u64) -> Option<Vec<BigInt>> {
    let m = m.abs();
    let (primes, rest) = trial_factor(&m, bound);
    if !rest.is_one() {
        return None;
    }
    let mut divs = vec![BigInt::one()];
    for p in primes {
        let e = valuation(&m, p).unwrap();
        let mut next = Vec::new();
        for d in &divs {
            let mut pk = BigInt::one();
            for _ in 0..=e {
                next.push(d * &pk);
                pk *= p;
            }
        }
        divs = next;
    }
    Some(divs)
}

/// A nonzero rational zero of `f`, scaled to integers, if one is found.
pub fn rational_point(f: &Form, budgets: &CensusBudgets) -> Option<Vec<BigInt>> {
    let n = f.n();
    let d = f.d();
    let a = f.coeffs().entries();
    for i in 0..n {
        let mut e = vec![0u32; n];
        e[i] = d as u32;
        if a[f.basis().index_of(&e).unwrap()].is_zero() {
            return Some(zero_vec(n, i));
        }
    }
    if d == 2 {
        let g = gram::doubled_gram(f).ok()?;
        if n >= 3 && gram::determinant(&g).is_zero() {
            let (v, _) = gram::diagonalize(&g).into_iter().find(|(_, val)| val.is_zero())?;
            return Some(clear(&v));
        }
    }
    if n == 2 {
        return binary_rational_root(f, budgets);
    }
    let h = budgets.height;
    let mut x = vec![-h; n];
    loop {
        // first nonzero coordinate positive: covers each line once
        if x.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) && x.iter().fold(0i64, |g, c| g.gcd(c)) == 1 {
            let xi: Vec<BigInt> = x.iter().map(|&c| BigInt::from(c)).collect();
            if f.eval_int(&xi).ok()?.is_zero() {
                return Some(xi);
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if x[i] < h {
                x[i] += 1;
                break;
            }
            x[i] = -h;
        }
    }
}

fn clear(v: &[BigRational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    v.iter().map(|c| (c * BigRational::from_integer(l.clone())).to_integer()).collect()
}

/// Rational roots of `f(t, 1)` by the rational root theorem; `(1, 0)` is
/// handled by the caller.
fn binary_rational_root(f: &Form, budgets: &CensusBudgets) -> Option<Vec<BigInt>> {
    let a = f.coeffs().entries();
    let d = f.d();
    if d == 2 {
        let disc = &a[1] * &a[1] - BigInt::from(4) * &a[0] * &a[2];
        let s = exact_sqrt(&disc)?;
        // root t = (−b + s) / 2a, i.e. the point (−b + s, 2a)
        let x = vec![-&a[1] + s, BigInt::from(2) * &a[0]];
        let g = x[0].gcd(&x[1]);
        return Some(x.into_iter().map(|c| c / &g).collect());
    }
    // x^d coefficient first, y^d last
    let lead = &a[0];
    let constant = &a[d];
    let us = divisors(constant, budgets.factor_bound)?;
    let vs = divisors(lead, budgets.factor_bound)?;
    for v in &vs {
        for u in &us {
            if !u.gcd(v).is_one() {
                continue;
            }
            for s in [u.clone(), -u] {
                let x = vec![s, v.clone()];
                if f.eval_int(&x).ok()?.is_zero() {
                    return Some(x);
                }
            }
        }
    }
    None
}

fn padic_verdict(f: &Form, p: u64, budgets: &CensusBudgets) -> Result<SolubilityVerdict> {
    zp_solubility(f, p, budgets.search)
}

/// Decides local solubility of `f` everywhere, as far as the budgets allow.
pub fn classify(f: &Form, p_max: u64, budgets: &CensusBudgets) -> Result<LocalVerdict> {
    if real_class(f, &budgets.real)? == RealClass::Insoluble {
        return Ok(LocalVerdict::Insoluble { place: Place::Infinity });
    }
    let mut unknown_primes = Vec::new();
    for p in primes_up_to(p_max) {
        match padic_verdict(f, p, budgets)? {
            SolubilityVerdict::Insoluble { .. } => return Ok(LocalVerdict::Insoluble { place: Place::Prime(p) }),
            SolubilityVerdict::Unknown { .. } => unknown_primes.push(p),
            SolubilityVerdict::Soluble(_) => {}
        }
    }
    if rational_point(f, budgets).is_some() {
        return Ok(LocalVerdict::Soluble { via: SolubleVia::RationalPoint });
    }
    let n = f.n();
    let d = f.d();
    if d == 2 && n == 2 {
        // no rational root: the discriminant is not a square, so some ℚ_p
        // sees a non-square discriminant
        let a = f.coeffs().entries();
        let disc = &a[1] * &a[1] - BigInt::from(4) * &a[0] * &a[2];
        let mut p = p_max;
        while p < budgets.p_tail.max(p_max) {
            p = next_prime(p);
            if !is_square_in_qp(&disc, p)? {
                return Ok(LocalVerdict::Insoluble { place: Place::Prime(p) });
            }
        }
        return Ok(LocalVerdict::Unknown { reason: format!("no non-square prime for the discriminant up to {}", budgets.p_tail) });
    }
    if d == 2 && unknown_primes.is_empty() {
        let det = gram::determinant(&gram::doubled_gram(f)?);
        let (primes, rest) = trial_factor(&det, budgets.factor_bound);
        if rest.is_one() {
            let mut open = Vec::new();
            for p in primes.into_iter().filter(|&p| p > p_max) {
                match padic_verdict(f, p, budgets)? {
                    SolubilityVerdict::Insoluble { .. } => return Ok(LocalVerdict::Insoluble { place: Place::Prime(p) }),
                    SolubilityVerdict::Unknown { .. } => open.push(p),
                    SolubilityVerdict::Soluble(_) => {}
                }
            }
            if open.is_empty() {
                return Ok(LocalVerdict::Soluble { via: SolubleVia::QuadraticPrimes });
            }
            unknown_primes.extend(open);
        } else {
            return Ok(LocalVerdict::Unknown { reason: "determinant not fully factored".into() });
        }
    }
    let mut p = p_max;
    while p < budgets.p_tail {
        p = next_prime(p);
        if p > budgets.p_tail {
            break;
        }
        if padic_verdict(f, p, budgets)?.is_insoluble() {
            return Ok(LocalVerdict::Insoluble { place: Place::Prime(p) });
        }
    }
    let reason = if unknown_primes.is_empty() {
        format!("no certificate for primes above {p_max}")
    } else {
        format!("unresolved primes {unknown_primes:?}")
    };
    Ok(LocalVerdict::Unknown { reason })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CensusMode {
    Exhaustive,
    /// `m` fibre-uniform draws, kept when primitive.
    Sampled { m: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerdictRecord {
    pub a: Vec<i64>,
    pub verdict: LocalVerdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusReport {
    pub a: u64,
    pub total: u64,
    pub soluble: u64,
    pub insoluble: u64,
    pub unknown: u64,
    /// `[soluble/total, 1 − insoluble/total]`; `None` when the thin set is
    /// empty.
    pub rho_interval: Option<(f64, f64)>,
    pub insoluble_by_place: BTreeMap<String, u64>,
    pub records: Vec<VerdictRecord>,
    /// `"exhaustive"` or `"estimator stabilization (fiber-uniform sample)"`.
    pub label: String,
}

impl CensusReport {
    pub fn from_records(a: u64, records: Vec<VerdictRecord>, label: &str) -> Self {
        let mut soluble = 0;
        let mut insoluble = 0;
        let mut unknown = 0;
        let mut by_place = BTreeMap::new();
        for r in &records {
            match &r.verdict {
                LocalVerdict::Soluble { .. } => soluble += 1,
                LocalVerdict::Insoluble { place } => {
                    insoluble += 1;
                    *by_place.entry(place.to_string()).or_insert(0) += 1;
                }
                LocalVerdict::Unknown { .. } => unknown += 1,
            }
        }
        let total = records.len() as u64;
        let rho_interval = (total > 0).then(|| (soluble as f64 / total as f64, 1.0 - insoluble as f64 / total as f64));
        CensusReport { a, total, soluble, insoluble, unknown, rho_interval, insoluble_by_place: by_place, records, label: label.into() }
    }

    pub fn width(&self) -> Option<f64> {
        self.rho_interval.map(|(l, h)| h - l)
    }

    pub fn midpoint(&self) -> Option<f64> {
        self.rho_interval.map(|(l, h)| (l + h) / 2.0)
    }
}

fn check_dims(p_form: &ThinFormP, n: usize, d: usize) -> Result<Arc<VeroneseBasis>> {
    if veronese_dimension(n, d)? != p_form.n_vars() {
        return Err(Error::Structure(format!("P has {} variables but N({n},{d}) = {}", p_form.n_vars(), veronese_dimension(n, d)?)));
    }
    Ok(Arc::new(VeroneseBasis::new(n, d)?))
}

/// Seed for the real sampler of one vector, so verdicts do not depend on
/// the order of the census.
fn seed_for(seed: u64, a: &[i64]) -> u64 {
    a.iter().fold(seed ^ 0x9e37_79b9_7f4a_7c15, |h, &x| (h ^ x as u64).wrapping_mul(0x0100_0000_01b3).rotate_left(17))
}

/// Classifies a batch of vectors in parallel, keeping their order.
pub fn classify_all(points: &[Vec<i64>], n: usize, d: usize, p_max: u64, budgets: &CensusBudgets) -> Result<Vec<VerdictRecord>> {
    let basis = Arc::new(VeroneseBasis::new(n, d)?);
    points
        .par_iter()
        .map(|a| {
            let f = Form::new(basis.clone(), CoefficientVector::from_i64(a))?;
            let mut b = budgets.clone();
            b.real.seed = seed_for(budgets.real.seed, a);
            Ok(VerdictRecord { a: a.clone(), verdict: classify(&f, p_max, &b)? })
        })
        .collect()
}

/// The points of the census at height `A`.
pub fn census_points(p_form: &ThinFormP, a: u64, mode: &CensusMode) -> Result<Vec<Vec<i64>>> {
    let n_vars = p_form.n_vars();
    match mode {
        CensusMode::Exhaustive => {
            let strategy = if p_form.solvable_for_last() { Strategy::SolveLast } else { Strategy::FullScan };
            enumerate_thin_points(p_form, a, &BoxSpec::full(n_vars), &CongruenceSpec::trivial(n_vars), true, strategy)
        }
        CensusMode::Sampled { m, seed } => {
            let s = sample_thin(p_form, a, *m, *seed)?;
            Ok(s.vectors.into_iter().filter(|x| x.iter().fold(0i64, |g, c| g.gcd(c)) == 1).collect())
        }
    }
}

pub fn rho_estimate(
    p_form: &ThinFormP,
    n: usize,
    d: usize,
    a: u64,
    p_max: u64,
    budgets: &CensusBudgets,
    mode: &CensusMode,
) -> Result<CensusReport> {
    check_dims(p_form, n, d)?;
    let points = census_points(p_form, a, mode)?;
    let records = classify_all(&points, n, d, p_max, budgets)?;
    let label = match mode {
        CensusMode::Exhaustive => "exhaustive",
        CensusMode::Sampled { .. } => "estimator stabilization (fiber-uniform sample)",
    };
    Ok(CensusReport::from_records(a, records, label))
}

/// Conditions at the real place.
#[derive(Clone, Debug, PartialEq)]
pub enum RealPart {
    Box(BoxSpec),
    TInfty,
}

/// Conditions at one prime.
#[derive(Clone, Debug, PartialEq)]
pub enum PadicPart {
    /// `a ≡ center (mod p^exponent)`, the ball of radius `p^{−exponent}`.
    Ball { center: Vec<BigInt>, exponent: u32 },
    Tp,
}

/// `𝒰 = real part × Π_{p ∈ 𝔭} I_p × Π_{p ∉ 𝔭} ℤ_p^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalConditionProduct {
    pub real: RealPart,
    pub finite: BTreeMap<u64, PadicPart>,
}

impl LocalConditionProduct {
    pub fn full(n_vars: usize) -> Self {
        LocalConditionProduct { real: RealPart::Box(BoxSpec::full(n_vars)), finite: BTreeMap::new() }
    }

    /// The balls combined into one congruence by the Chinese remainder
    /// theorem.
    pub fn congruence(&self, n_vars: usize) -> Result<CongruenceSpec> {
        let mut modulus = BigInt::one();
        let mut residues = vec![BigInt::zero(); n_vars];
        for (&p, part) in &self.finite {
            let PadicPart::Ball { center, exponent } = part else { continue };
            if center.len() != n_vars {
                return Err(Error::Structure(format!("ball center needs {n_vars} coordinates")));
            }
            let q = BigInt::from(p).pow(*exponent);
            for (r, c) in residues.iter_mut().zip(center) {
                *r = crt(r, &modulus, &c.mod_floor(&q), &q);
            }
            modulus *= &q;
        }
        let m = modulus.to_u64().ok_or_else(|| Error::Budget("combined modulus exceeds 64 bits".into()))?;
        CongruenceSpec::new(m, residues.iter().map(|r| r.to_u64().unwrap()).collect())
    }
}

/// `x ≡ r1 (mod m1)`, `x ≡ r2 (mod m2)` for coprime moduli.
fn crt(r1: &BigInt, m1: &BigInt, r2: &BigInt, m2: &BigInt) -> BigInt {
    let e = m1.extended_gcd(m2);
    let m = m1 * m2;
    let x = r1 + m1 * ((r2 - r1) * &e.x);
    x.mod_floor(&m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DQuantity {
    /// Primitive points of `[−A, A]^N` certified to map into `𝒰`.
    pub numerator: u64,
    /// Points whose membership at a `T` marker stayed undecided.
    pub undecided: u64,
    pub denominator: u64,
    /// `numerator / denominator`; `None` for an empty thin set.
    pub value: Option<BigRational>,
    /// `(numerator + undecided) / denominator`.
    pub upper: Option<BigRational>,
}

/// `d(𝒰, A; P)` with primitive vectors in numerator and denominator.
pub fn d_quantity(
    u: &LocalConditionProduct,
    a: u64,
    p_form: &ThinFormP,
    n: usize,
    d: usize,
    budgets: &CensusBudgets,
) -> Result<DQuantity> {
    let n_vars = p_form.n_vars();
    let basis = check_dims(p_form, n, d)?;
    let strategy = if p_form.solvable_for_last() { Strategy::SolveLast } else { Strategy::FullScan };
    let full = BoxSpec::full(n_vars);
    let trivial = CongruenceSpec::trivial(n_vars);
    let denominator = count_thin(p_form, a, &full, &trivial, true, strategy)?;
    let boxspec = match &u.real {
        RealPart::Box(b) => b.clone(),
        RealPart::TInfty => full,
    };
    let cong = u.congruence(n_vars)?;
    let markers: Vec<u64> = u.finite.iter().filter(|(_, v)| matches!(v, PadicPart::Tp)).map(|(&p, _)| p).collect();
    let needs_real = matches!(u.real, RealPart::TInfty);
    let (numerator, undecided) = if markers.is_empty() && !needs_real {
        (count_thin(p_form, a, &boxspec, &cong, true, strategy)?, 0)
    } else {
        let pts = enumerate_thin_points(p_form, a, &boxspec, &cong, true, strategy)?;
        let flags: Vec<Result<Option<bool>>> = pts
            .par_iter()
            .map(|x| {
                let f = Form::new(basis.clone(), CoefficientVector::from_i64(x))?;
                let mut all = Some(true);
                if needs_real {
                    let mut rb = budgets.real.clone();
                    rb.seed = seed_for(rb.seed, x);
                    match real_class(&f, &rb)? {
                        RealClass::Insoluble => return Ok(Some(false)),
                        RealClass::Unknown => all = None,
                        RealClass::Soluble => {}
                    }
                }
                for &p in &markers {
                    match zp_solubility(&f, p, budgets.search)? {
                        SolubilityVerdict::Insoluble { .. } => return Ok(Some(false)),
                        SolubilityVerdict::Unknown { .. } => all = None,
                        SolubilityVerdict::Soluble(_) => {}
                    }
                }
                Ok(all)
            })
            .collect();
        let (mut yes, mut maybe) = (0u64, 0u64);
        for f in flags {
            match f? {
                Some(true) => yes += 1,
                None => maybe += 1,
                Some(false) => {}
            }
        }
        (yes, maybe)
    };
    let ratio = |x: u64| (denominator > 0).then(|| BigRational::new(x.into(), denominator.into()));
    Ok(DQuantity { numerator, undecided, denominator, value: ratio(numerator), upper: ratio(numerator + undecided) })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConvergenceVerdict {
    Pass,
    Fail(String),
    Skip(String),
}

impl fmt::Display for ConvergenceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvergenceVerdict::Pass => f.write_str("PASS"),
            ConvergenceVerdict::Fail(r) => write!(f, "FAIL: {r}"),
            ConvergenceVerdict::Skip(r) => write!(f, "SKIP: {r}"),
        }
    }
}

const STABILIZATION: &str = "estimator stabilization";

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub reports: Vec<CensusReport>,
    /// `|mid_{i+1} − mid_i|` between successive heights.
    pub deltas: Vec<f64>,
    pub cp: Option<CPEstimate>,
    pub verdict: ConvergenceVerdict,
    /// Always `"estimator stabilization"`: a finite census cannot verify a
    /// limit.
    pub label: &'static str,
}

/// PASS when the midpoint deltas are non-increasing up to `tolerance` and
/// the last ρ interval meets the inflated `c_P` interval.
pub fn assess_convergence(reports: Vec<CensusReport>, cp: Option<CPEstimate>, p_max: u64, tolerance: f64) -> ConvergenceReport {
    let mids: Option<Vec<f64>> = reports.iter().map(|r| r.midpoint()).collect();
    let Some(mids) = mids else {
        let verdict = ConvergenceVerdict::Skip("undefined proportion (empty thin set)".into());
        return ConvergenceReport { reports, deltas: Vec::new(), cp, verdict, label: STABILIZATION };
    };
    let deltas: Vec<f64> = mids.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let verdict = if p_max == 0 {
        ConvergenceVerdict::Skip("p_max = 0 gives no finite-place information".into())
    } else if reports.len() < 3 {
        ConvergenceVerdict::Skip("need at least three heights".into())
    } else if let Some(cp) = &cp {
        let monotone = deltas.windows(2).all(|w| w[1] <= w[0] + tolerance);
        let (lo, hi) = reports.last().unwrap().rho_interval.unwrap();
        let overlap = lo <= cp.inflated.1 + tolerance && cp.inflated.0 - tolerance <= hi;
        match (monotone, overlap) {
            (true, true) => ConvergenceVerdict::Pass,
            (false, _) => ConvergenceVerdict::Fail(format!("midpoint deltas {deltas:?} increase")),
            (_, false) => ConvergenceVerdict::Fail(format!("[{lo}, {hi}] misses c_P interval {:?}", cp.inflated)),
        }
    } else {
        ConvergenceVerdict::Skip("no c_P estimate".into())
    };
    ConvergenceReport { reports, deltas, cp, verdict, label: STABILIZATION }
}

/// Runs the census at every height and compares with `c_P`, whose witness
/// `b` is the first primitive point of the smallest census.
#[allow(clippy::too_many_arguments)]
pub fn convergence_report(
    p_form: &ThinFormP,
    n: usize,
    d: usize,
    a_schedule: &[u64],
    p_max: u64,
    budgets: &CensusBudgets,
    cp_params: &CpParams,
    tolerance: f64,
) -> Result<ConvergenceReport> {
    let mut reports = Vec::new();
    for &a in a_schedule {
        reports.push(rho_estimate(p_form, n, d, a, p_max, budgets, &CensusMode::Exhaustive)?);
    }
    let witness = reports.iter().find_map(|r| r.records.first()).map(|r| r.a.clone());
    let cp = match (witness, p_max) {
        (Some(b), pm) if pm > 0 => {
            let b: Vec<BigInt> = b.into_iter().map(BigInt::from).collect();
            Some(c_p_estimate(p_form, n, d, &b, &CpParams { p_max, ..cp_params.clone() })?)
        }
        _ => None,
    };
    Ok(assess_convergence(reports, cp, p_max, tolerance))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimeBall {
    pub p: u64,
    pub alpha: u32,
    /// `η_p = p^{−2α}`
    pub eta: BigRational,
    pub perturbations_checked: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityCertificate {
    pub b: Vec<BigInt>,
    /// Primitive integer zero of `f_b` with nonzero gradient.
    pub y: Vec<BigInt>,
    pub primes: Vec<PrimeBall>,
    /// Every `a` with `‖a − b‖_∞ < η_∞` keeps a real zero.
    pub eta_infty: BigRational,
    /// `B_∞(b/C, η_∞/C) ⊆ [−1, 1]^N`.
    pub c: BigInt,
    pub real_perturbations_checked: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProbeOutcome {
    Certificate(PositivityCertificate),
    Failure(String),
}

const PERTURBATIONS: usize = 20;

fn smooth_zero(f: &Form, h: i64) -> Option<Vec<BigInt>> {
    let n = f.n();
    let mut x = vec![-h; n];
    loop {
        if x.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) && x.iter().fold(0i64, |g, c| g.gcd(c)) == 1 {
            let xi: Vec<BigInt> = x.iter().map(|&c| BigInt::from(c)).collect();
            if f.eval_int(&xi).ok()?.is_zero() && f.gradient_int(&xi).ok()?.iter().any(|g| !g.is_zero()) {
                return Some(xi);
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if x[i] < h {
                x[i] += 1;
                break;
            }
            x[i] = -h;
        }
    }
}

/// `Σ_m |x^m|` over the Veronese monomials.
fn monomial_mass(f: &Form, x: &[BigRational]) -> BigRational {
    f.basis()
        .monomials()
        .iter()
        .map(|m| m.exponents().iter().zip(x).fold(BigRational::one(), |acc, (&e, c)| acc * num_traits::pow(c.abs(), e as usize)))
        .sum()
}

/// Two points near `y` where `f_b` takes opposite signs, and the radius in
/// coefficient space within which both signs persist.
fn real_ball(f: &Form, y: &[BigInt]) -> Option<(Vec<BigRational>, Vec<BigRational>, BigRational)> {
    let yr: Vec<BigRational> = y.iter().map(|c| BigRational::from_integer(c.clone())).collect();
    let g = f.gradient_int(y).ok()?;
    let mut eps = BigRational::new(1.into(), 16.into());
    for _ in 0..60 {
        let plus: Vec<BigRational> = yr.iter().zip(&g).map(|(c, gi)| c + &eps * BigRational::from_integer(gi.clone())).collect();
        let minus: Vec<BigRational> = yr.iter().zip(&g).map(|(c, gi)| c - &eps * BigRational::from_integer(gi.clone())).collect();
        let fp = f.eval_rat(&plus).ok()?;
        let fm = f.eval_rat(&minus).ok()?;
        if fp.is_positive() && fm.is_negative() {
            let rp = fp / monomial_mass(f, &plus);
            let rm = -fm / monomial_mass(f, &minus);
            let eta = if rp < rm { rp } else { rm };
            return Some((plus, minus, eta));
        }
        eps /= BigRational::from_integer(2.into());
    }
    None
}

/// Looks for a smooth rational point on `f_b = 0` of height ≤ `h` and turns
/// it into explicit solubility balls around `b`.
pub fn positivity_probe(
    p_form: &ThinFormP,
    n: usize,
    d: usize,
    b: &[BigInt],
    h: i64,
    p_max: u64,
    seed: u64,
) -> Result<ProbeOutcome> {
    let basis = check_dims(p_form, n, d)?;
    if b.len() != p_form.n_vars() || b.iter().all(Zero::is_zero) || !p_form.eval(b).is_zero() {
        return Err(Error::Domain("b is not a nontrivial zero of P".into()));
    }
    if h < 1 {
        return Err(Error::Domain("search height must be at least 1".into()));
    }
    let f = Form::new(basis.clone(), CoefficientVector::new(b.to_vec()))?;
    let Some(y) = smooth_zero(&f, h) else {
        return Ok(ProbeOutcome::Failure(format!("no smooth rational point of height <= {h}")));
    };
    let grad = f.gradient_int(&y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut primes = Vec::new();
    for p in primes_up_to(p_max) {
        let alpha = grad.iter().filter_map(|g| valuation(g, p)).min().expect("gradient is nonzero");
        let step = BigInt::from(p).pow(2 * alpha + 1);
        let budget = SearchBudget::with_max_level((2 * alpha + 1).max(8));
        for _ in 0..PERTURBATIONS {
            let a: Vec<BigInt> = b.iter().map(|c| c + &step * BigInt::from(rng.gen_range(-50i64..=50))).collect();
            if a.iter().all(Zero::is_zero) {
                continue;
            }
            let fa = Form::new(basis.clone(), CoefficientVector::new(a))?;
            if !zp_solubility(&fa, p, budget)?.is_soluble() {
                return Ok(ProbeOutcome::Failure(format!("perturbation inside the {p}-adic ball was not certified")));
            }
        }
        primes.push(PrimeBall {
            p,
            alpha,
            eta: BigRational::new(BigInt::one(), BigInt::from(p).pow(2 * alpha)),
            perturbations_checked: PERTURBATIONS,
        });
    }
    let Some((plus, minus, eta)) = real_ball(&f, &y) else {
        return Ok(ProbeOutcome::Failure("no sign change found next to the smooth point".into()));
    };
    // re-check the sign bracket for perturbed coefficients inside the ball
    for _ in 0..PERTURBATIONS {
        let a: Vec<BigRational> = b
            .iter()
            .map(|c| {
                let t = BigRational::new(BigInt::from(rng.gen_range(-1000i64..=1000)), BigInt::from(1001));
                BigRational::from_integer(c.clone()) + t * &eta
            })
            .collect();
        let den = a.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ai: Vec<BigInt> = a.iter().map(|c| (c * BigRational::from_integer(den.clone())).to_integer()).collect();
        let fa = Form::new(basis.clone(), CoefficientVector::new(ai))?;
        if !(fa.eval_rat(&plus)?.is_positive() && fa.eval_rat(&minus)?.is_negative()) {
            return Ok(ProbeOutcome::Failure("real sign bracket did not persist".into()));
        }
    }
    let bmax = b.iter().map(|c| c.abs()).max().unwrap();
    let c = (BigRational::from_integer(bmax) + &eta).ceil().to_integer();
    Ok(ProbeOutcome::Certificate(PositivityCertificate {
        b: b.to_vec(),
        y,
        primes,
        eta_infty: eta,
        c,
        real_perturbations_checked: PERTURBATIONS,
    }))
}

/// Independent re-check of the algebraic parts of a certificate.
pub fn verify_positivity(p_form: &ThinFormP, n: usize, d: usize, cert: &PositivityCertificate) -> Result<bool> {
    let f = Form::new(Arc::new(VeroneseBasis::new(n, d)?), CoefficientVector::new(cert.b.clone()))?;
    let one = BigRational::one();
    let fits = cert
        .b
        .iter()
        .all(|c| (BigRational::from_integer(c.abs()) + &cert.eta_infty) / BigRational::from_integer(cert.c.clone()) <= one);
    Ok(p_form.eval(&cert.b).is_zero()
        && f.eval_int(&cert.y)?.is_zero()
        && f.gradient_int(&cert.y)?.iter().any(|g| !g.is_zero())
        && cert.eta_infty.is_positive()
        && fits)
}
