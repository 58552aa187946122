//! Local densities of the thin set: exact finite-level counts `σ_p`, certified
//! intervals for `σ_p(T_p)`, Monte Carlo slab estimates for `σ_∞`, and the
//! truncated product `c_P`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arith::{check_prime, next_prime, primes_up_to};
use crate::error::{Error, Result};
use crate::forms::{veronese_dimension, CoefficientVector, Form, VeroneseBasis};
use crate::padic::{zp_solubility, Place, SearchBudget, SolubilityVerdict};
use crate::real::{real_class, RealBudget, RealClass};
use crate::thin::{CongruenceSpec, ThinFormP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DensityMethod {
    ExactCount,
    CertifiedInterval,
    MonteCarlo,
}

impl fmt::Display for DensityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DensityMethod::ExactCount => "exact-count",
            DensityMethod::CertifiedInterval => "certified-interval",
            DensityMethod::MonteCarlo => "monte-carlo",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityInterval {
    pub lower: f64,
    pub upper: f64,
    /// Exact endpoints for the counting methods.
    pub exact: Option<(BigRational, BigRational)>,
    pub method: DensityMethod,
    pub level: Option<u32>,
    pub eta: Option<f64>,
    pub samples: u64,
    pub stderr: Option<f64>,
}

impl DensityInterval {
    fn exact(lower: BigRational, upper: BigRational, method: DensityMethod, level: u32, samples: u64) -> Self {
        DensityInterval {
            lower: lower.to_f64().unwrap_or(f64::NAN),
            upper: upper.to_f64().unwrap_or(f64::NAN),
            exact: Some((lower, upper)),
            method,
            level: Some(level),
            eta: None,
            samples,
            stderr: None,
        }
    }

    pub fn midpoint(&self) -> f64 {
        (self.lower + self.upper) / 2.0
    }
}

/// Restriction on the residue classes counted by [`sigma_p_level`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LevelCondition {
    All,
    /// `a ≡ r₀ (mod p^{v_p(B)})`; the prime-to-`p` part of `B` is ignored.
    Congruence(CongruenceSpec),
}

/// Default cap on the number of fibres `p^{r(N−1)}` walked per call.
pub const DEFAULT_FIBRE_BUDGET: u64 = 50_000_000;

fn modulus(p: u64, r: u32) -> Result<u128> {
    let m = (p as u128).checked_pow(r).filter(|&m| m < (1u128 << 63));
    m.ok_or_else(|| Error::Budget(format!("{p}^{r} is too large for residue arithmetic")))
}

/// `p`-part of a congruence condition: `(p^v, r₀ mod p^v)`.
fn p_part(cond: &LevelCondition, p: u64, n_vars: usize, r: u32) -> Result<(u128, Vec<u128>)> {
    match cond {
        LevelCondition::All => Ok((1, vec![0; n_vars])),
        LevelCondition::Congruence(c) => {
            if c.residues().len() != n_vars {
                return Err(Error::Structure(format!("congruence needs {n_vars} residues")));
            }
            let mut b = c.modulus();
            let mut v = 0;
            while b % p == 0 {
                b /= p;
                v += 1;
            }
            if v > r {
                return Err(Error::Domain(format!("condition mod {p}^{v} is finer than the level {r}")));
            }
            let pv = (p as u128).pow(v);
            Ok((pv, c.residues().iter().map(|&x| x as u128 % pv).collect()))
        }
    }
}

struct ModP {
    terms: Vec<(u128, Vec<u32>)>,
    n_vars: usize,
    deg_last: usize,
}

impl ModP {
    fn new(p: &ThinFormP, m: u128) -> Self {
        let mb = BigInt::from(m);
        let terms = p
            .terms()
            .iter()
            .map(|(c, e)| {
                let r = ((c % &mb) + &mb) % &mb;
                (r.to_u128().unwrap(), e.clone())
            })
            .collect();
        let deg_last = p.terms().iter().map(|(_, e)| e[p.n_vars() - 1] as usize).max().unwrap_or(0);
        ModP { terms, n_vars: p.n_vars(), deg_last }
    }

    /// Coefficients in `t_N` after fixing the other coordinates.
    fn fibre_poly(&self, prefix: &[u128], m: u128) -> Vec<u128> {
        let mut c = vec![0u128; self.deg_last + 1];
        for (a, e) in &self.terms {
            let mut v = *a;
            for i in 0..self.n_vars - 1 {
                for _ in 0..e[i] {
                    v = v * prefix[i] % m;
                }
            }
            let k = e[self.n_vars - 1] as usize;
            c[k] = (c[k] + v) % m;
        }
        c
    }
}

fn horner_mod(c: &[u128], t: u128, m: u128) -> u128 {
    c.iter().rev().fold(0, |acc, &x| (acc * t + x) % m)
}

/// Roots of `g` modulo `p^r`, found by lifting roots level by level.
fn roots_mod(c: &[u128], p: u128, r: u32, m: u128) -> Vec<u128> {
    if r == 0 {
        return vec![0];
    }
    let mut roots: Vec<u128> = (0..p).filter(|&t| horner_mod(c, t, m).is_multiple_of(p)).collect();
    let mut pj = p;
    for _ in 1..r {
        let next_mod = pj * p;
        let mut next = Vec::new();
        for &t in &roots {
            for i in 0..p {
                let u = t + i * pj;
                if horner_mod(c, u, m).is_multiple_of(next_mod) {
                    next.push(u);
                }
            }
        }
        roots = next;
        pj = next_mod;
    }
    roots.sort_unstable();
    roots
}

/// Calls `f` on every class `a mod p^r` (least non-negative representative)
/// with `P(a) ≡ 0` satisfying the condition, in lexicographic order.
fn for_each_class(
    p_form: &ThinFormP,
    p: u64,
    r: u32,
    cond: &LevelCondition,
    fibre_budget: u64,
    mut f: impl FnMut(&[u128]),
) -> Result<()> {
    let n = p_form.n_vars();
    let m = modulus(p, r)?;
    let (pv, r0) = p_part(cond, p, n, r)?;
    let per_coord = m / pv;
    let fibres = (per_coord as f64).powi(n as i32 - 1);
    if fibres > fibre_budget as f64 {
        return Err(Error::Budget(format!(
            "{fibres:.3e} fibres mod {p}^{r} exceed the budget {fibre_budget}; use a smaller level"
        )));
    }
    let modp = ModP::new(p_form, m);
    let mut prefix: Vec<u128> = r0[..n - 1].to_vec();
    let mut point = vec![0u128; n];
    loop {
        let g = modp.fibre_poly(&prefix, m);
        point[..n - 1].copy_from_slice(&prefix);
        for t in roots_mod(&g, p as u128, r, m) {
            if t % pv == r0[n - 1] {
                point[n - 1] = t;
                f(&point);
            }
        }
        // odometer over the prefix, stepping by p^v from r₀
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if prefix[i] + pv < m {
                prefix[i] += pv;
                break;
            }
            prefix[i] = r0[i];
        }
    }
}

/// `p^{−r(N−1)} · #{a mod p^r : P(a) ≡ 0 (mod p^r), condition}`.
pub fn sigma_p_level(p_form: &ThinFormP, p: u64, r: u32, cond: &LevelCondition) -> Result<BigRational> {
    sigma_p_level_with_budget(p_form, p, r, cond, DEFAULT_FIBRE_BUDGET)
}

pub fn sigma_p_level_with_budget(
    p_form: &ThinFormP,
    p: u64,
    r: u32,
    cond: &LevelCondition,
    fibre_budget: u64,
) -> Result<BigRational> {
    check_prime(p)?;
    let mut count = 0u64;
    for_each_class(p_form, p, r, cond, fibre_budget, |_| count += 1)?;
    let denom = num_traits::pow(BigInt::from(p), r as usize * (p_form.n_vars() - 1));
    Ok(BigRational::new(BigInt::from(count), denom))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TpDensity {
    /// `[certified-in mass, full mass − certified-out mass]`.
    pub interval: DensityInterval,
    /// `σ_p` at the same level with no condition.
    pub full: BigRational,
    pub classes: u64,
    pub certified_in: u64,
    pub certified_out: u64,
    pub unknown: u64,
}

/// Classifies every class `a mod p^r` on `P ≡ 0` by a ℤ_p search of depth
/// `r` on its least non-negative representative. Certificates found at depth
/// `≤ r` only depend on `a mod p^r`, so they hold for the whole class.
pub fn sigma_p_tp(p_form: &ThinFormP, n: usize, d: usize, p: u64, r: u32, frontier_cap: usize) -> Result<TpDensity> {
    sigma_p_tp_with_budget(p_form, n, d, p, r, frontier_cap, DEFAULT_FIBRE_BUDGET)
}

pub fn sigma_p_tp_with_budget(
    p_form: &ThinFormP,
    n: usize,
    d: usize,
    p: u64,
    r: u32,
    frontier_cap: usize,
    fibre_budget: u64,
) -> Result<TpDensity> {
    check_prime(p)?;
    let basis = Arc::new(VeroneseBasis::new(n, d)?);
    if basis.len() != p_form.n_vars() {
        return Err(Error::Structure(format!("P has {} variables but N({n},{d}) = {}", p_form.n_vars(), basis.len())));
    }
    let mut classes = Vec::new();
    for_each_class(p_form, p, r, &LevelCondition::All, fibre_budget, |a| classes.push(a.to_vec()))?;
    let budget = SearchBudget { max_level: r, frontier_cap };
    let verdicts: Vec<Result<Option<bool>>> = classes
        .par_iter()
        .map(|a| {
            if a.iter().all(|&x| x == 0) {
                return Ok(None);
            }
            let coeffs = CoefficientVector::new(a.iter().map(|&x| BigInt::from(x)).collect());
            let f = Form::new(basis.clone(), coeffs)?;
            Ok(match zp_solubility(&f, p, budget)? {
                SolubilityVerdict::Soluble(_) => Some(true),
                SolubilityVerdict::Insoluble { .. } => Some(false),
                SolubilityVerdict::Unknown { .. } => None,
            })
        })
        .collect();
    let (mut cin, mut cout, mut unk) = (0u64, 0u64, 0u64);
    for v in verdicts {
        match v? {
            Some(true) => cin += 1,
            Some(false) => cout += 1,
            None => unk += 1,
        }
    }
    let total = classes.len() as u64;
    let denom = num_traits::pow(BigInt::from(p), r as usize * (p_form.n_vars() - 1));
    let q = |x: u64| BigRational::new(BigInt::from(x), denom.clone());
    let full = q(total);
    let interval = DensityInterval::exact(q(cin), q(total - cout), DensityMethod::CertifiedInterval, r, total);
    Ok(TpDensity { interval, full, classes: total, certified_in: cin, certified_out: cout, unknown: unk })
}

/// Which part of the slab counts towards `V_∞(η)`.
#[derive(Clone, Debug)]
pub enum Membership {
    All,
    /// `T_∞`, decided by the real solver on the coefficient vector `y`
    /// rounded to `2^-30` (solubility is scale invariant).
    TInfty { n: usize, d: usize, budget: RealBudget },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaEstimate {
    pub eta: f64,
    /// Lower endpoint counts only certified members; upper adds unknowns.
    pub interval: DensityInterval,
    pub unknown_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaInfty {
    pub per_eta: Vec<EtaEstimate>,
    /// Successive estimates agree within two combined standard errors.
    pub consistent: bool,
    /// Unknown real verdicts exceeded 5% of the slab hits at some η.
    pub flagged: bool,
}

impl SigmaInfty {
    pub fn last(&self) -> &DensityInterval {
        &self.per_eta.last().expect("at least two etas").interval
    }
}

const CHUNK: u64 = 1 << 16;

#[derive(Clone, Copy, Default)]
struct SlabCounts {
    hits: u64,
    soluble: u64,
    unknown: u64,
}

fn slab_chunk(
    terms: &[(f64, Vec<i32>)],
    region: &[(f64, f64)],
    eta: f64,
    membership: &Membership,
    basis: Option<&Arc<VeroneseBasis>>,
    seed: u64,
    stream: u64,
    len: u64,
) -> SlabCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut y = vec![0f64; region.len()];
    let mut out = SlabCounts::default();
    for _ in 0..len {
        for (yi, &(lo, hi)) in y.iter_mut().zip(region) {
            *yi = lo + (hi - lo) * rng.gen::<f64>();
        }
        let v: f64 = terms.iter().map(|(c, e)| e.iter().zip(&y).fold(*c, |acc, (&k, x)| acc * x.powi(k))).sum();
        if v.abs() >= eta {
            continue;
        }
        out.hits += 1;
        match membership {
            Membership::All => out.soluble += 1,
            Membership::TInfty { budget, .. } => {
                let coeffs = CoefficientVector::new(y.iter().map(|&c| BigInt::from((c * (1u64 << 30) as f64).round() as i64)).collect());
                if coeffs.is_zero() {
                    out.unknown += 1;
                    continue;
                }
                let f = Form::new(basis.unwrap().clone(), coeffs).expect("length checked");
                match real_class(&f, budget).expect("nonzero form") {
                    RealClass::Soluble => out.soluble += 1,
                    RealClass::Insoluble => {}
                    RealClass::Unknown => out.unknown += 1,
                }
            }
        }
    }
    out
}

/// Monte Carlo estimate of `vol{y ∈ region ∩ membership : |P(y)| < η} / (2η)`
/// for each `η`, with independent samples per `η`.
pub fn sigma_infty(
    p_form: &ThinFormP,
    region: &[(f64, f64)],
    etas: &[f64],
    samples: u64,
    seed: u64,
    membership: &Membership,
) -> Result<SigmaInfty> {
    let n_vars = p_form.n_vars();
    if region.len() != n_vars {
        return Err(Error::Structure(format!("region needs {n_vars} sides")));
    }
    if region.iter().any(|&(lo, hi)| !(lo < hi && lo >= -1.0 && hi <= 1.0)) {
        return Err(Error::Domain("region must be a box inside [-1, 1]^N".into()));
    }
    if etas.len() < 2 || etas.windows(2).any(|w| w[1] >= w[0]) || etas.iter().any(|&e| e <= 0.0) {
        return Err(Error::Domain("need at least two strictly decreasing positive etas".into()));
    }
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let basis = match membership {
        Membership::All => None,
        Membership::TInfty { n, d, .. } => {
            if veronese_dimension(*n, *d)? != n_vars {
                return Err(Error::Structure(format!("N({n},{d}) differs from the {n_vars} variables of P")));
            }
            Some(Arc::new(VeroneseBasis::new(*n, *d)?))
        }
    };
    let terms: Vec<(f64, Vec<i32>)> = p_form
        .terms()
        .iter()
        .map(|(c, e)| (c.to_f64().unwrap_or(f64::NAN), e.iter().map(|&x| x as i32).collect()))
        .collect();
    let volume: f64 = region.iter().map(|(lo, hi)| hi - lo).product();
    let chunks = samples.div_ceil(CHUNK);
    let mut per_eta = Vec::new();
    let mut flagged = false;
    for (k, &eta) in etas.iter().enumerate() {
        let parts: Vec<SlabCounts> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(samples - c * CHUNK);
                slab_chunk(&terms, region, eta, membership, basis.as_ref(), seed, ((k as u64) << 32) | c, len)
            })
            .collect();
        let total = parts.iter().fold(SlabCounts::default(), |a, b| SlabCounts {
            hits: a.hits + b.hits,
            soluble: a.soluble + b.soluble,
            unknown: a.unknown + b.unknown,
        });
        let scale = volume / (2.0 * eta) / samples as f64;
        let lo = total.soluble as f64 * scale;
        let hi = (total.soluble + total.unknown) as f64 * scale;
        let q = (total.soluble as f64 + total.unknown as f64 / 2.0) / samples as f64;
        let stderr = volume / (2.0 * eta) * (q * (1.0 - q) / samples as f64).sqrt();
        let unknown_fraction = if total.hits > 0 { total.unknown as f64 / total.hits as f64 } else { 0.0 };
        flagged |= unknown_fraction > 0.05;
        per_eta.push(EtaEstimate {
            eta,
            interval: DensityInterval {
                lower: lo,
                upper: hi,
                exact: None,
                method: DensityMethod::MonteCarlo,
                level: None,
                eta: Some(eta),
                samples,
                stderr: Some(stderr),
            },
            unknown_fraction,
        });
    }
    let consistent = per_eta.windows(2).all(|w| {
        let (a, b) = (&w[0].interval, &w[1].interval);
        let se = (a.stderr.unwrap().powi(2) + b.stderr.unwrap().powi(2)).sqrt();
        (a.midpoint() - b.midpoint()).abs() <= 2.0 * se
    });
    Ok(SigmaInfty { per_eta, consistent, flagged })
}

#[derive(Clone, Debug)]
pub struct RealDensityParams {
    pub etas: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub budget: RealBudget,
}

impl Default for RealDensityParams {
    fn default() -> Self {
        RealDensityParams { etas: vec![0.1, 0.05, 0.025], samples: 1_000_000, seed: 0, budget: RealBudget::default() }
    }
}

#[derive(Clone, Debug)]
pub struct CpParams {
    pub p_max: u64,
    pub r_max: u32,
    /// Largest number of fibres `p^{r(N−1)}` per prime; fixes the level.
    pub class_budget: u64,
    pub frontier_cap: usize,
    /// Primes beyond `p_max` whose deficit is estimated at level 1.
    pub tail_primes: usize,
    pub real: RealDensityParams,
}

impl Default for CpParams {
    fn default() -> Self {
        CpParams { p_max: 100, r_max: 3, class_budget: 200_000, frontier_cap: 100_000, tail_primes: 5, real: RealDensityParams::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlaceFactor {
    pub place: Place,
    pub numerator: DensityInterval,
    pub denominator: DensityInterval,
    /// `numerator / denominator`, inside `[0, 1]`.
    pub ratio: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimeDeficit {
    pub p: u64,
    /// Bounds for `1 − σ_p(T_p)/σ_p(ℤ_p)` at level 1.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CPEstimate {
    pub factors: Vec<PlaceFactor>,
    pub p_max: u64,
    /// Product of the factor ratios.
    pub value: (f64, f64),
    pub deficits: Vec<PrimeDeficit>,
    /// Primes beyond the listed ones still contribute unknown factors ≤ 1.
    pub tail_unquantified: bool,
    /// `value` widened by the listed deficits, with lower end 0 while the
    /// tail is unquantified.
    pub inflated: (f64, f64),
}

fn level_for(p: u64, n_vars: usize, r_max: u32, class_budget: u64) -> u32 {
    let mut r = 1;
    while r < r_max && (p as f64).powi(((r + 1) * (n_vars as u32 - 1)) as i32) <= class_budget as f64 {
        r += 1;
    }
    r
}

fn ratio(num: &TpDensity) -> (f64, f64) {
    if num.full.is_zero() {
        return (0.0, 1.0);
    }
    let (lo, hi) = num.interval.exact.as_ref().unwrap();
    let clamp = |x: f64| x.clamp(0.0, 1.0);
    (clamp((lo / &num.full).to_f64().unwrap()), clamp((hi / &num.full).to_f64().unwrap()))
}

/// Truncated `c_P` with the real ratio from Monte Carlo and the `p`-adic
/// ratios from certified class counts. `b` must be a nonzero zero of `P`.
pub fn c_p_estimate(p_form: &ThinFormP, n: usize, d: usize, b: &[BigInt], params: &CpParams) -> Result<CPEstimate> {
    let n_vars = p_form.n_vars();
    if veronese_dimension(n, d)? != n_vars {
        return Err(Error::Structure(format!("N({n},{d}) differs from the {n_vars} variables of P")));
    }
    if b.len() != n_vars || b.iter().all(Zero::is_zero) || !p_form.eval(b).is_zero() {
        return Err(Error::Domain("the witness b is not a nontrivial zero of P".into()));
    }
    let mut factors = Vec::new();
    let mut value = (1.0, 1.0);

    let real = if d % 2 == 1 {
        let one = DensityInterval::exact(BigRational::from_integer(1.into()), BigRational::from_integer(1.into()), DensityMethod::ExactCount, 0, 0);
        PlaceFactor { place: Place::Infinity, numerator: one.clone(), denominator: one, ratio: (1.0, 1.0) }
    } else {
        let rp = &params.real;
        let region = vec![(-1.0, 1.0); n_vars];
        let mem = Membership::TInfty { n, d, budget: rp.budget.clone() };
        let num = sigma_infty(p_form, &region, &rp.etas, rp.samples, rp.seed, &mem)?;
        let den = sigma_infty(p_form, &region, &rp.etas, rp.samples, rp.seed, &Membership::All)?;
        // same seed, so the slab hits coincide and the ratio is a proportion
        let (nl, dl) = (num.last(), den.last());
        let ratio = if dl.upper > 0.0 {
            let hits = (dl.upper * 2.0 * rp.etas.last().unwrap() * rp.samples as f64 / 2f64.powi(n_vars as i32)).round();
            let (lo, hi) = (nl.lower / dl.upper, nl.upper / dl.upper);
            let q = (lo + hi) / 2.0;
            let se = if hits > 0.0 { (q * (1.0 - q) / hits).sqrt() } else { 0.5 };
            ((lo - 2.0 * se).clamp(0.0, 1.0), (hi + 2.0 * se).clamp(0.0, 1.0))
        } else {
            (0.0, 1.0)
        };
        PlaceFactor { place: Place::Infinity, numerator: nl.clone(), denominator: dl.clone(), ratio }
    };
    value = (value.0 * real.ratio.0, value.1 * real.ratio.1);
    factors.push(real);

    for p in primes_up_to(params.p_max) {
        let r = level_for(p, n_vars, params.r_max, params.class_budget);
        let num = sigma_p_tp(p_form, n, d, p, r, params.frontier_cap)?;
        let den = DensityInterval::exact(num.full.clone(), num.full.clone(), DensityMethod::ExactCount, r, num.classes);
        let ratio = ratio(&num);
        value = (value.0 * ratio.0, value.1 * ratio.1);
        factors.push(PlaceFactor { place: Place::Prime(p), numerator: num.interval, denominator: den, ratio });
    }

    let mut deficits = Vec::new();
    let mut q = params.p_max;
    let mut keep = 1.0;
    for _ in 0..params.tail_primes {
        q = next_prime(q);
        let t = sigma_p_tp(p_form, n, d, q, 1, params.frontier_cap)?;
        let (lo, hi) = ratio(&t);
        keep *= lo;
        deficits.push(PrimeDeficit { p: q, lower: 1.0 - hi, upper: 1.0 - lo });
    }
    let tail_unquantified = true;
    let inflated = (if tail_unquantified { 0.0 } else { value.0 * keep }, value.1);
    Ok(CPEstimate { factors, p_max: params.p_max, value, deficits, tail_unquantified, inflated })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad4() -> ThinFormP {
        ThinFormP::parse("1 1 1 0 0\n-1 0 0 1 1\n").unwrap()
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    /// Direct count over all of `(ℤ/p^r)^N`.
    fn brute_level(p_form: &ThinFormP, p: u64, r: u32, filter: impl Fn(&[i64]) -> bool) -> BigRational {
        let m = p.pow(r) as i64;
        let n = p_form.n_vars();
        let mut count = 0i64;
        let mut x = vec![0i64; n];
        'outer: loop {
            let v = p_form.eval_i64(&x);
            if (v % BigInt::from(m)).is_zero() && filter(&x) {
                count += 1;
            }
            for i in (0..n).rev() {
                x[i] += 1;
                if x[i] < m {
                    continue 'outer;
                }
                x[i] = 0;
            }
            break;
        }
        BigRational::new(count.into(), BigInt::from(m).pow(n as u32 - 1))
    }

    #[test]
    fn level_examples() {
        let p = quad4();
        assert_eq!(sigma_p_level(&p, 3, 1, &LevelCondition::All).unwrap(), q(11, 9));
        let zero = LevelCondition::Congruence(CongruenceSpec::new(3, vec![0; 4]).unwrap());
        assert_eq!(sigma_p_level(&p, 3, 1, &zero).unwrap(), q(1, 27));
        assert_eq!(sigma_p_level(&p, 3, 0, &LevelCondition::All).unwrap(), q(1, 1));
        assert!(sigma_p_level(&p, 4, 1, &LevelCondition::All).is_err());
        let fine = LevelCondition::Congruence(CongruenceSpec::new(9, vec![0; 4]).unwrap());
        assert!(sigma_p_level(&p, 3, 1, &fine).is_err());
    }

    #[test]
    fn level_matches_brute_force() {
        let forms = [quad4(), ThinFormP::parse("1 2 0 0\n1 0 2 0\n-2 0 0 2").unwrap(), ThinFormP::parse("1 3 0 0\n2 0 3 0\n-1 1 1 1\n5 0 0 3").unwrap()];
        for f in &forms {
            for (p, r) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1)] {
                assert_eq!(sigma_p_level(f, p, r, &LevelCondition::All).unwrap(), brute_level(f, p, r, |_| true), "{f} {p}^{r}");
            }
        }
    }

    #[test]
    fn congruence_slices_sum() {
        let p = quad4();
        for (pr, r, v) in [(3u64, 1u32, 1u32), (3, 2, 1), (2, 2, 1), (2, 3, 2)] {
            let pv = pr.pow(v);
            let mut sum = BigRational::zero();
            for idx in 0..pv.pow(4) {
                let res: Vec<u64> = (0..4).map(|i| (idx / pv.pow(i)) % pv).collect();
                let c = LevelCondition::Congruence(CongruenceSpec::new(pv, res).unwrap());
                sum += sigma_p_level(&p, pr, r, &c).unwrap();
            }
            assert_eq!(sum, sigma_p_level(&p, pr, r, &LevelCondition::All).unwrap());
        }
    }

    #[test]
    fn tp_intervals() {
        let p = ThinFormP::parse("1 2 0 0\n1 0 2 0\n-2 0 0 2").unwrap();
        for r in 1..=3 {
            let t = sigma_p_tp(&p, 2, 2, 3, r, 100_000).unwrap();
            let (lo, hi) = t.interval.exact.clone().unwrap();
            assert!(lo <= hi && hi <= t.full);
            assert_eq!(t.certified_in + t.certified_out + t.unknown, t.classes);
        }
    }

    #[test]
    fn certified_masses_grow_with_level() {
        // Certificates found at level r remain valid at r+1, so certified
        // fractions of the total never shrink.
        let p = quad4();
        for pr in [2u64, 3] {
            let mut last = (0.0, 0.0);
            for r in 1..=3 {
                let t = sigma_p_tp(&p, 2, 3, pr, r, 100_000).unwrap();
                let full = t.full.to_f64().unwrap();
                let cin = t.interval.lower;
                let cout = full - t.interval.upper;
                assert!(cin + 1e-12 >= last.0 && cout + 1e-12 >= last.1, "p={pr} r={r}");
                last = (cin, cout);
            }
        }
    }

    #[test]
    fn empty_slab() {
        let p = ThinFormP::parse("1 2 0 0 0\n1 0 2 0 0\n1 0 0 2 0\n1 0 0 0 2").unwrap();
        let s = sigma_infty(&p, &[(0.5, 1.0); 4], &[0.1, 0.05], 10_000, 1, &Membership::All).unwrap();
        assert!(s.per_eta.iter().all(|e| e.interval.upper == 0.0));
        assert!(sigma_infty(&p, &[(0.5, 1.0); 4], &[0.05, 0.1], 10, 1, &Membership::All).is_err());
    }

    #[test]
    fn slab_reproducible() {
        let p = quad4();
        let a = sigma_infty(&p, &[(-1.0, 1.0); 4], &[0.1, 0.05], 100_000, 9, &Membership::All).unwrap();
        let b = sigma_infty(&p, &[(-1.0, 1.0); 4], &[0.1, 0.05], 100_000, 9, &Membership::All).unwrap();
        assert_eq!(a, b);
        // n = 2, d = 3 is always real-soluble, so T_∞ changes nothing
        let mem = Membership::TInfty { n: 2, d: 3, budget: RealBudget::default() };
        let c = sigma_infty(&p, &[(-1.0, 1.0); 4], &[0.1, 0.05], 100_000, 9, &mem).unwrap();
        assert_eq!(a.per_eta[1].interval.lower, c.per_eta[1].interval.lower);
    }

    #[test]
    fn cp_small() {
        let p = ThinFormP::parse("1 2 0 0\n1 0 2 0\n-2 0 0 2").unwrap();
        let params = CpParams {
            p_max: 7,
            tail_primes: 2,
            real: RealDensityParams { samples: 20_000, ..RealDensityParams::default() },
            ..CpParams::default()
        };
        let b: Vec<BigInt> = [1, 1, 1].iter().map(|&x| BigInt::from(x)).collect();
        let est = c_p_estimate(&p, 2, 2, &b, &params).unwrap();
        assert_eq!(est.factors.len(), 5);
        for f in &est.factors {
            assert!(0.0 <= f.ratio.0 && f.ratio.0 <= f.ratio.1 && f.ratio.1 <= 1.0);
        }
        assert!(est.value.0 <= est.value.1);
        assert_eq!(est.deficits.len(), 2);
        assert_eq!(est.inflated.0, 0.0);
        let bad: Vec<BigInt> = [1, 0, 1].iter().map(|&x| BigInt::from(x)).collect();
        assert!(c_p_estimate(&p, 2, 2, &bad, &params).is_err());
        let none = CpParams { p_max: 0, tail_primes: 0, ..params };
        let est = c_p_estimate(&p, 2, 2, &b, &none).unwrap();
        assert_eq!(est.factors.len(), 1);
    }
}
