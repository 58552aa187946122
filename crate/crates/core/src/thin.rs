//! Integer points on the thin set `P(a) = 0` inside boxes `A·𝔅`, with
//! congruence conditions and primitivity.
//!
//! Enumeration walks the coordinates in lexicographic order and substitutes
//! each fixed coordinate into `P` through a precompiled plan, so the inner
//! loop only touches a handful of coefficients. Arithmetic runs in `i128`
//! whenever the coefficient bound allows it and falls back to `BigInt`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arith::moebius;
use crate::error::{Error, Result};
use crate::forms::CoefficientVector;

/// A homogeneous form `P(t_1, ..., t_N)` given by its terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThinFormP {
    n_vars: usize,
    k: u32,
    terms: Vec<(BigInt, Vec<u32>)>,
}

impl ThinFormP {
    pub fn new(n_vars: usize, terms: Vec<(BigInt, Vec<u32>)>) -> Result<Self> {
        if n_vars < 2 {
            return Err(Error::Domain("P needs at least two variables".into()));
        }
        let mut merged: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        for (c, e) in terms {
            if e.len() != n_vars {
                return Err(Error::Structure(format!("term has {} exponents, expected {n_vars}", e.len())));
            }
            *merged.entry(e).or_default() += c;
        }
        let terms: Vec<(BigInt, Vec<u32>)> =
            merged.into_iter().filter(|(_, c)| !c.is_zero()).map(|(e, c)| (c, e)).rev().collect();
        let Some(k) = terms.first().map(|(_, e)| e.iter().sum::<u32>()) else {
            return Err(Error::Domain("P is the zero polynomial".into()));
        };
        if terms.iter().any(|(_, e)| e.iter().sum::<u32>() != k) {
            return Err(Error::Domain("P is not homogeneous".into()));
        }
        if k < 2 {
            return Err(Error::Domain(format!("P must have degree k >= 2, got {k}")));
        }
        Ok(ThinFormP { n_vars, k, terms })
    }

    pub fn from_i64(n_vars: usize, terms: &[(i64, &[u32])]) -> Result<Self> {
        ThinFormP::new(n_vars, terms.iter().map(|(c, e)| (BigInt::from(*c), e.to_vec())).collect())
    }

    /// Parses the plain-text form file: one `coefficient e1 ... eN` line per
    /// term; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n_vars = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
            let c: BigInt = fields.next().unwrap().parse().map_err(|_| bad("bad coefficient"))?;
            let e: Vec<u32> =
                fields.map(|s| s.parse::<u32>()).collect::<std::result::Result<_, _>>().map_err(|_| bad("bad exponent"))?;
            match n_vars {
                None => n_vars = Some(e.len()),
                Some(m) if m != e.len() => return Err(bad("inconsistent number of exponents")),
                _ => {}
            }
            terms.push((c, e));
        }
        ThinFormP::new(n_vars.ok_or_else(|| Error::Parse("empty form file".into()))?, terms)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        ThinFormP::parse(&text)
    }

    /// `N`, the number of variables.
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn terms(&self) -> &[(BigInt, Vec<u32>)] {
        &self.terms
    }

    /// Every term is a pure power.
    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|(_, e)| e.iter().filter(|&&x| x > 0).count() == 1)
    }

    fn degree_in_last(&self) -> u32 {
        self.terms.iter().map(|(_, e)| e[self.n_vars - 1]).max().unwrap_or(0)
    }

    /// `solve_last` applies: `P` has degree at most 2 in `t_N`, or its top
    /// coefficient in `t_N` is a nonzero constant.
    pub fn solvable_for_last(&self) -> bool {
        let deg = self.degree_in_last();
        if deg == 0 {
            return false;
        }
        deg <= 2 || self.terms.iter().any(|(_, e)| e[self.n_vars - 1] == self.k)
    }

    pub fn eval(&self, a: &[BigInt]) -> BigInt {
        self.terms
            .iter()
            .map(|(c, e)| e.iter().zip(a).fold(c.clone(), |acc, (&k, x)| acc * num_traits::pow(x.clone(), k as usize)))
            .sum()
    }

    pub fn eval_i64(&self, a: &[i64]) -> BigInt {
        self.eval(&a.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>())
    }

    pub fn eval_f64(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| e.iter().zip(y).fold(c.to_f64().unwrap_or(f64::NAN), |acc, (&k, x)| acc * x.powi(k as i32)))
            .sum()
    }
}

impl fmt::Display for ThinFormP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, e) in &self.terms {
            write!(f, "{c}")?;
            for x in e {
                write!(f, " {x}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Per-coordinate closed intervals inside `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxSpec {
    bounds: Vec<(BigRational, BigRational)>,
}

impl BoxSpec {
    pub fn new(bounds: Vec<(BigRational, BigRational)>) -> Result<Self> {
        let one = BigRational::one();
        for (lo, hi) in &bounds {
            if lo >= hi || *lo < -one.clone() || *hi > one {
                return Err(Error::Domain(format!("box side [{lo}, {hi}] is not a proper subinterval of [-1, 1]")));
            }
        }
        Ok(BoxSpec { bounds })
    }

    pub fn full(n_vars: usize) -> Self {
        let one = BigRational::one();
        BoxSpec { bounds: vec![(-one.clone(), one); n_vars] }
    }

    pub fn bounds(&self) -> &[(BigRational, BigRational)] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// Integer ranges of `(A/e)·𝔅`.
    pub fn integer_ranges(&self, a: u64, e: u64) -> Vec<(i64, i64)> {
        let s = BigRational::new(BigInt::from(a), BigInt::from(e));
        self.bounds
            .iter()
            .map(|(lo, hi)| {
                let l = (lo * &s).ceil().to_integer().to_i64().expect("box fits in i64");
                let h = (hi * &s).floor().to_integer().to_i64().expect("box fits in i64");
                (l, h)
            })
            .collect()
    }

    pub fn contains_zero(&self) -> bool {
        self.bounds.iter().all(|(lo, hi)| !lo.is_positive() && !hi.is_negative())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceSpec {
    modulus: u64,
    residues: Vec<u64>,
}

impl CongruenceSpec {
    pub fn new(modulus: u64, residues: Vec<u64>) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Domain("congruence modulus must be positive".into()));
        }
        if residues.iter().any(|&r| r >= modulus) {
            return Err(Error::Domain(format!("residues must lie in [0, {}]", modulus - 1)));
        }
        Ok(CongruenceSpec { modulus, residues })
    }

    pub fn trivial(n_vars: usize) -> Self {
        CongruenceSpec { modulus: 1, residues: vec![0; n_vars] }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    fn first_at_least(&self, i: usize, lo: i64) -> i64 {
        let b = self.modulus as i64;
        let r = self.residues[i] as i64;
        lo + (r - lo).rem_euclid(b)
    }

    fn matches(&self, i: usize, v: i64) -> bool {
        v.rem_euclid(self.modulus as i64) == self.residues[i] as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    FullScan,
    SolveLast,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_scan" | "full-scan" => Ok(Strategy::FullScan),
            "solve_last" | "solve-last" => Ok(Strategy::SolveLast),
            _ => Err(Error::Config(format!("unknown strategy {s:?}"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::FullScan => "full_scan",
            Strategy::SolveLast => "solve_last",
        })
    }
}

/// Ring operations needed by the enumerator.
trait Coef: Clone + Send + Sync {
    fn from_big(x: &BigInt) -> Self;
    fn from_i64(x: i64) -> Self;
    fn zero() -> Self;
    fn is_nil(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn add_mul(&mut self, a: &Self, b: &Self);
    fn mul(&self, b: &Self) -> Self;
    fn sub(&self, b: &Self) -> Self;
    fn neg(&self) -> Self;
    fn exact_sqrt(&self) -> Option<Self>;
    /// `self / d` when exact and within `i64`.
    fn exact_div_i64(&self, d: &Self) -> Option<i64>;
    fn divisible_by(&self, t: i64) -> bool;
    fn abs_u64_capped(&self) -> u64;
}

impl Coef for i128 {
    fn from_big(x: &BigInt) -> Self {
        x.to_i128().expect("bound checked")
    }
    fn from_i64(x: i64) -> Self {
        x as i128
    }
    fn zero() -> Self {
        0
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    fn is_neg(&self) -> bool {
        *self < 0
    }
    #[inline]
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn mul(&self, b: &Self) -> Self {
        self * b
    }
    fn sub(&self, b: &Self) -> Self {
        self - b
    }
    fn neg(&self) -> Self {
        -self
    }
    fn exact_sqrt(&self) -> Option<Self> {
        if *self < 0 {
            return None;
        }
        let r = if *self < (1i128 << 52) {
            let mut r = (*self as f64).sqrt() as i128;
            while r * r > *self {
                r -= 1;
            }
            while (r + 1) * (r + 1) <= *self {
                r += 1;
            }
            r
        } else {
            Roots::sqrt(self)
        };
        (r * r == *self).then_some(r)
    }
    fn exact_div_i64(&self, d: &Self) -> Option<i64> {
        (*d != 0 && self % d == 0).then(|| (self / d).try_into().ok()).flatten()
    }
    fn divisible_by(&self, t: i64) -> bool {
        self % (t as i128) == 0
    }
    fn abs_u64_capped(&self) -> u64 {
        self.unsigned_abs().min(u64::MAX as u128) as u64
    }
}

impl Coef for BigInt {
    fn from_big(x: &BigInt) -> Self {
        x.clone()
    }
    fn from_i64(x: i64) -> Self {
        BigInt::from(x)
    }
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn mul(&self, b: &Self) -> Self {
        self * b
    }
    fn sub(&self, b: &Self) -> Self {
        self - b
    }
    fn neg(&self) -> Self {
        -self
    }
    fn exact_sqrt(&self) -> Option<Self> {
        crate::arith::exact_sqrt(self)
    }
    fn exact_div_i64(&self, d: &Self) -> Option<i64> {
        if Zero::is_zero(d) {
            return None;
        }
        let (q, r) = self.div_rem(d);
        if Zero::is_zero(&r) {
            q.to_i64()
        } else {
            None
        }
    }
    fn divisible_by(&self, t: i64) -> bool {
        Zero::is_zero(&(self % BigInt::from(t)))
    }
    fn abs_u64_capped(&self) -> u64 {
        self.abs().to_u64().unwrap_or(u64::MAX)
    }
}

/// One substitution step: coefficient `src` of the current polynomial,
/// multiplied by `t^power`, is added into coefficient `dst` of the next one.
#[derive(Clone, Debug)]
struct Step {
    src: usize,
    dst: usize,
    power: usize,
}

#[derive(Clone, Debug)]
struct Plan {
    /// `steps[j]` substitutes coordinate `j`; the last stage's destination
    /// index is the exponent of `t_N`.
    steps: Vec<Vec<Step>>,
    /// Number of coefficients after substituting coordinates `0..j`.
    sizes: Vec<usize>,
    k: usize,
}

impl Plan {
    fn new(p: &ThinFormP) -> Plan {
        let n = p.n_vars;
        let mut current: Vec<Vec<u32>> = p.terms.iter().map(|(_, e)| e.clone()).collect();
        let mut steps = Vec::new();
        let mut sizes = vec![current.len()];
        for j in 0..n - 1 {
            let mut index: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
            let mut next: Vec<Vec<u32>> = Vec::new();
            let last_stage = j == n - 2;
            let mut stage = Vec::new();
            for (src, e) in current.iter().enumerate() {
                let rest = e[1..].to_vec();
                let dst = if last_stage {
                    rest[0] as usize
                } else {
                    *index.entry(rest.clone()).or_insert_with(|| {
                        next.push(rest.clone());
                        next.len() - 1
                    })
                };
                stage.push(Step { src, dst, power: e[0] as usize });
            }
            if last_stage {
                sizes.push(p.degree_in_last() as usize + 1);
            } else {
                sizes.push(next.len());
            }
            steps.push(stage);
            current = next;
        }
        Plan { steps, sizes, k: p.k as usize }
    }
}

struct Query<'a> {
    p: &'a ThinFormP,
    ranges: Vec<(i64, i64)>,
    cong: &'a CongruenceSpec,
    primitive_only: bool,
    strategy: Strategy,
}

fn validate(p: &ThinFormP, boxspec: &BoxSpec, cong: &CongruenceSpec, strategy: Strategy) -> Result<()> {
    if boxspec.len() != p.n_vars || cong.residues.len() != p.n_vars {
        return Err(Error::Structure(format!("box and congruence must have {} coordinates", p.n_vars)));
    }
    if strategy == Strategy::SolveLast && !p.solvable_for_last() {
        return Err(Error::Config("solve_last needs P quadratic or monic in its last variable".into()));
    }
    Ok(())
}

/// `Σ|c| · max|t|^k`, which bounds every partial value met while enumerating.
fn value_bound(p: &ThinFormP, ranges: &[(i64, i64)]) -> BigInt {
    let m = ranges.iter().map(|&(l, h)| l.unsigned_abs().max(h.unsigned_abs())).max().unwrap_or(0).max(1);
    let s: BigInt = p.terms.iter().map(|(c, _)| c.abs()).sum();
    s * num_traits::pow(BigInt::from(m), p.k as usize)
}

fn fits_i128(bound: &BigInt) -> bool {
    *bound < (BigInt::one() << 60u32)
}

/// Integer roots of `Σ c_e t^e` in `[lo, hi]`, ascending. `None` means the
/// polynomial vanishes identically.
fn integer_roots<T: Coef>(c: &[T], lo: i64, hi: i64, out: &mut Vec<i64>) -> Option<()> {
    out.clear();
    let mut deg = c.len();
    while deg > 0 && c[deg - 1].is_nil() {
        deg -= 1;
    }
    let c = &c[..deg];
    match deg {
        0 => return None,
        1 => {}
        2 => {
            if let Some(t) = c[0].neg().exact_div_i64(&c[1]) {
                out.push(t);
            }
        }
        3 => {
            let (a, b, cc) = (&c[2], &c[1], &c[0]);
            let four = T::from_i64(4);
            let disc = b.mul(b).sub(&four.mul(&a.mul(cc)));
            if disc.is_neg() {
                return Some(());
            }
            if let Some(s) = disc.exact_sqrt() {
                let two_a = T::from_i64(2).mul(a);
                let nb = b.neg();
                if let Some(t) = nb.sub(&s).exact_div_i64(&two_a) {
                    out.push(t);
                }
                if !s.is_nil() {
                    if let Some(t) = nb.sub(&s.neg()).exact_div_i64(&two_a) {
                        out.push(t);
                    }
                }
            }
        }
        _ => {
            let low = c.iter().position(|x| !x.is_nil()).unwrap();
            if low > 0 {
                out.push(0);
            }
            // a nonzero root divides the lowest nonzero coefficient
            let cap = lo.unsigned_abs().max(hi.unsigned_abs()).min(c[low].abs_u64_capped());
            for t in 1..=cap as i64 {
                if !c[low].divisible_by(t) {
                    continue;
                }
                for s in [t, -t] {
                    if horner(c, s).is_nil() {
                        out.push(s);
                    }
                }
            }
        }
    }
    out.retain(|&t| lo <= t && t <= hi);
    out.sort_unstable();
    out.dedup();
    Some(())
}

fn horner<T: Coef>(c: &[T], t: i64) -> T {
    let tt = T::from_i64(t);
    let mut acc = T::zero();
    for x in c.iter().rev() {
        let mut next = x.clone();
        next.add_mul(&acc, &tt);
        acc = next;
    }
    acc
}

struct Walker<'a, T: Coef> {
    q: &'a Query<'a>,
    plan: &'a Plan,
    buffers: Vec<Vec<T>>,
    point: Vec<i64>,
    powers: Vec<T>,
    roots: Vec<i64>,
}

impl<'a, T: Coef> Walker<'a, T> {
    fn new(q: &'a Query<'a>, plan: &'a Plan) -> Self {
        let mut buffers: Vec<Vec<T>> = plan.sizes.iter().map(|&s| vec![T::zero(); s]).collect();
        buffers[0] = q.p.terms.iter().map(|(c, _)| T::from_big(c)).collect();
        Walker {
            q,
            plan,
            buffers,
            point: vec![0; q.p.n_vars],
            powers: vec![T::zero(); plan.k + 1],
            roots: Vec::new(),
        }
    }

    fn substitute(&mut self, j: usize, v: i64) {
        let tv = T::from_i64(v);
        self.powers[0] = T::from_i64(1);
        for e in 1..self.powers.len() {
            self.powers[e] = self.powers[e - 1].mul(&tv);
        }
        let (head, tail) = self.buffers.split_at_mut(j + 1);
        let src = &head[j];
        let dst = &mut tail[0];
        for x in dst.iter_mut() {
            *x = T::zero();
        }
        for s in &self.plan.steps[j] {
            dst[s.dst].add_mul(&src[s.src], &self.powers[s.power]);
        }
    }

    fn range(&self, j: usize) -> impl Iterator<Item = i64> {
        let (lo, hi) = self.q.ranges[j];
        let start = self.q.cong.first_at_least(j, lo);
        (start..=hi).step_by(self.q.cong.modulus as usize)
    }

    /// Walks coordinates `j..N` below the fixed prefix, calling `emit` on
    /// each solution. `g` is the gcd of the prefix.
    fn walk(&mut self, j: usize, g: i64, emit: &mut dyn FnMut(&[i64])) {
        let n = self.q.p.n_vars;
        if j == n - 1 {
            self.finish(g, emit);
            return;
        }
        for v in self.range(j) {
            self.point[j] = v;
            self.substitute(j, v);
            self.walk(j + 1, g.gcd(&v), emit);
        }
    }

    fn finish(&mut self, g: i64, emit: &mut dyn FnMut(&[i64])) {
        let n = self.q.p.n_vars;
        let last = &self.buffers[n - 1];
        let (lo, hi) = self.q.ranges[n - 1];
        let keep = |t: i64, q: &Query| q.cong.matches(n - 1, t) && (!q.primitive_only || g.gcd(&t) == 1);
        let all = match self.q.strategy {
            Strategy::SolveLast => integer_roots(last, lo, hi, &mut self.roots).is_none(),
            Strategy::FullScan => {
                self.roots.clear();
                for t in self.range(n - 1) {
                    if horner(last, t).is_nil() {
                        self.roots.push(t);
                    }
                }
                false
            }
        };
        if all {
            self.roots.clear();
            self.roots.extend(self.range(n - 1));
        }
        for i in 0..self.roots.len() {
            let t = self.roots[i];
            if keep(t, self.q) {
                self.point[n - 1] = t;
                emit(&self.point);
            }
        }
    }
}

fn run<T: Coef>(q: &Query, first: i64, emit: &mut dyn FnMut(&[i64])) {
    let plan = Plan::new(q.p);
    let mut w: Walker<T> = Walker::new(q, &plan);
    w.point[0] = first;
    w.substitute(0, first);
    w.walk(1, first.abs(), emit);
}

fn first_values(q: &Query) -> Vec<i64> {
    let (lo, hi) = q.ranges[0];
    let start = q.cong.first_at_least(0, lo);
    (start..=hi).step_by(q.cong.modulus as usize).collect()
}

fn dispatch(q: &Query, first: i64, emit: &mut dyn FnMut(&[i64])) {
    if fits_i128(&value_bound(q.p, &q.ranges)) {
        run::<i128>(q, first, emit)
    } else {
        run::<BigInt>(q, first, emit)
    }
}

fn query<'a>(
    p: &'a ThinFormP,
    ranges: Vec<(i64, i64)>,
    cong: &'a CongruenceSpec,
    primitive_only: bool,
    strategy: Strategy,
) -> Query<'a> {
    Query { p, ranges, cong, primitive_only, strategy }
}

/// Calls `f` on every solution in lexicographic order.
pub fn for_each_thin(
    p: &ThinFormP,
    a: u64,
    boxspec: &BoxSpec,
    cong: &CongruenceSpec,
    primitive_only: bool,
    strategy: Strategy,
    mut f: impl FnMut(&[i64]),
) -> Result<()> {
    validate(p, boxspec, cong, strategy)?;
    let q = query(p, boxspec.integer_ranges(a, 1), cong, primitive_only, strategy);
    for v in first_values(&q) {
        dispatch(&q, v, &mut f);
    }
    Ok(())
}

/// All solutions as integer vectors, in lexicographic order.
pub fn enumerate_thin_points(
    p: &ThinFormP,
    a: u64,
    boxspec: &BoxSpec,
    cong: &CongruenceSpec,
    primitive_only: bool,
    strategy: Strategy,
) -> Result<Vec<Vec<i64>>> {
    validate(p, boxspec, cong, strategy)?;
    let q = query(p, boxspec.integer_ranges(a, 1), cong, primitive_only, strategy);
    let chunks: Vec<Vec<Vec<i64>>> = first_values(&q)
        .into_par_iter()
        .map(|v| {
            let mut out = Vec::new();
            dispatch(&q, v, &mut |x| out.push(x.to_vec()));
            out
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

pub fn enumerate_thin(
    p: &ThinFormP,
    a: u64,
    boxspec: &BoxSpec,
    cong: &CongruenceSpec,
    primitive_only: bool,
    strategy: Strategy,
) -> Result<Vec<CoefficientVector>> {
    Ok(enumerate_thin_points(p, a, boxspec, cong, primitive_only, strategy)?
        .into_iter()
        .map(|x| CoefficientVector::from_i64(&x))
        .collect())
}

fn count_ranges(p: &ThinFormP, ranges: Vec<(i64, i64)>, cong: &CongruenceSpec, primitive_only: bool, strategy: Strategy) -> u64 {
    let q = query(p, ranges, cong, primitive_only, strategy);
    first_values(&q)
        .into_par_iter()
        .map(|v| {
            let mut c = 0u64;
            dispatch(&q, v, &mut |_| c += 1);
            c
        })
        .sum()
}

pub fn count_thin(
    p: &ThinFormP,
    a: u64,
    boxspec: &BoxSpec,
    cong: &CongruenceSpec,
    primitive_only: bool,
    strategy: Strategy,
) -> Result<u64> {
    validate(p, boxspec, cong, strategy)?;
    Ok(count_ranges(p, boxspec.integer_ranges(a, 1), cong, primitive_only, strategy))
}

/// All solutions, primitive or not, in `(A/e)·𝔅`, for every `e ≤ A` with
/// `μ(e) ≠ 0`.
pub fn raw_counts(p: &ThinFormP, a: u64, boxspec: &BoxSpec, strategy: Strategy) -> Result<BTreeMap<u64, u64>> {
    let cong = CongruenceSpec::trivial(p.n_vars);
    validate(p, boxspec, &cong, strategy)?;
    Ok((1..=a.max(1))
        .filter(|&e| moebius(e) != 0)
        .map(|e| (e, count_ranges(p, boxspec.integer_ranges(a, e), &cong, false, strategy)))
        .collect())
}

/// `Σ_e μ(e)·(raw(e) − [0 ∈ box])`: the primitive count from raw counts.
pub fn moebius_primitive_count(raw: &BTreeMap<u64, u64>, a: u64, zero_in_box: bool) -> Result<i128> {
    let mut total = 0i128;
    for e in 1..=a.max(1) {
        let mu = moebius(e);
        if mu == 0 {
            continue;
        }
        let r = *raw.get(&e).ok_or_else(|| Error::Domain(format!("raw count at scale {e} is missing")))?;
        total += mu as i128 * (r as i128 - zero_in_box as i128);
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthRow {
    pub a: u64,
    pub count: u64,
    /// `log(count_i / count_{i-1}) / log(A_i / A_{i-1})`; `None` for the first
    /// row or when a count is zero.
    pub log_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    /// `N − k`
    pub target: i64,
}

/// Primitive counts on the full box with successive growth exponents.
pub fn growth_diagnostic(p: &ThinFormP, a_list: &[u64], strategy: Strategy) -> Result<GrowthReport> {
    let boxspec = BoxSpec::full(p.n_vars);
    let cong = CongruenceSpec::trivial(p.n_vars);
    let mut rows: Vec<GrowthRow> = Vec::new();
    for &a in a_list {
        let count = count_thin(p, a, &boxspec, &cong, true, strategy)?;
        let log_ratio = rows.last().and_then(|prev| {
            (prev.count > 0 && count > 0 && a != prev.a)
                .then(|| (count as f64 / prev.count as f64).ln() / (a as f64 / prev.a as f64).ln())
        });
        rows.push(GrowthRow { a, count, log_ratio });
    }
    Ok(GrowthReport { rows, target: p.n_vars as i64 - p.k as i64 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CongruenceBound {
    pub count: u64,
    /// `count / (A/Q)^{N−k}`
    pub normalized_ratio: f64,
}

/// Counts `a ∈ [−A, A]^N` with `P(a) = 0` and `a ≡ c (mod Q)`.
pub fn congruence_bound_check(p: &ThinFormP, a: u64, q: u64, c: &[u64], strategy: Strategy) -> Result<CongruenceBound> {
    if q == 0 || c.iter().any(|&x| x < 1 || x > q) {
        return Err(Error::Domain("need 1 <= c_i <= Q".into()));
    }
    let cong = CongruenceSpec::new(q, c.iter().map(|&x| x % q).collect())?;
    let count = count_thin(p, a, &BoxSpec::full(p.n_vars), &cong, false, strategy)?;
    let scale = (a as f64 / q as f64).powi(p.n_vars as i32 - p.k as i32);
    Ok(CongruenceBound { count, normalized_ratio: count as f64 / scale })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThinSample {
    pub vectors: Vec<Vec<i64>>,
    pub attempts: u64,
    /// Always `"fiber-uniform"`: the first `N − 1` coordinates are uniform in
    /// the box and one integer root in `t_N` is kept.
    pub law: &'static str,
    pub warning: Option<String>,
}

/// Draws `m` points of the thin set in `[−A, A]^N` by sampling fibres.
pub fn sample_thin(p: &ThinFormP, a: u64, m: usize, seed: u64) -> Result<ThinSample> {
    if !p.solvable_for_last() {
        return Err(Error::Config("sampling needs P solvable for its last variable".into()));
    }
    let n = p.n_vars;
    let ranges = BoxSpec::full(n).integer_ranges(a, 1);
    let cong = CongruenceSpec::trivial(n);
    let q = query(p, ranges, &cong, false, Strategy::SolveLast);
    let plan = Plan::new(p);
    let max_attempts = 1000 * m as u64 + 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(m);
    let mut attempts = 0;
    let big = !fits_i128(&value_bound(p, &q.ranges));
    while out.len() < m && attempts < max_attempts {
        attempts += 1;
        let prefix: Vec<i64> = (0..n - 1).map(|_| rng.gen_range(-(a as i64)..=a as i64)).collect();
        let mut sols = Vec::new();
        let mut collect = |x: &[i64]| sols.push(x.to_vec());
        if big {
            fibre::<BigInt>(&q, &plan, &prefix, &mut collect);
        } else {
            fibre::<i128>(&q, &plan, &prefix, &mut collect);
        }
        if !sols.is_empty() {
            let pick = rng.gen_range(0..sols.len());
            out.push(sols.swap_remove(pick));
        }
    }
    let warning = (out.len() < m).then(|| format!("only {} of {m} points after {attempts} draws", out.len()));
    Ok(ThinSample { vectors: out, attempts, law: "fiber-uniform", warning })
}

fn fibre<T: Coef>(q: &Query, plan: &Plan, prefix: &[i64], emit: &mut dyn FnMut(&[i64])) {
    let mut w: Walker<T> = Walker::new(q, plan);
    for (j, &v) in prefix.iter().enumerate() {
        w.point[j] = v;
        w.substitute(j, v);
    }
    w.finish(0, emit);
}
