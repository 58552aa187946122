//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::process::Command as Proc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use locsol::census::{convergence_report, d_quantity, CensusBudgets, ConvergenceVerdict, LocalConditionProduct, PadicPart};
use locsol::combinatorics::{c_nd, c_nd_max, lemma24_holds, regime_report};
use locsol::densities::{sigma_infty, sigma_p_level, CpParams, LevelCondition, Membership};
use locsol::forms::{CoefficientVector, Form, VeroneseBasis};
use locsol::padic::{binary_quadratic_oracle, verify_exhaustion, zp_solubility, Place, SearchBudget, SolubilityVerdict};
use locsol::real::{real_solubility, InsolubilityMethod, RealBudget, RealVerdict};
use locsol::thin::{enumerate_thin_points, growth_diagnostic, moebius_primitive_count, raw_counts, BoxSpec, CongruenceSpec, Strategy, ThinFormP};

const SPLIT: &str = "1 1 1 0 0\n-1 0 0 1 1\n";
const SPLIT6: &str = "1 1 1 0 0 0 0\n-1 0 0 1 1 0 0\n1 0 0 0 0 2 0\n-1 0 0 0 0 0 2\n";
const CONIC: &str = "1 2 0 0\n1 0 2 0\n-2 0 0 2\n";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn all_triples() -> Vec<[i64; 3]> {
    let mut v = Vec::new();
    for a in -10..=10 {
        for b in -10..=10 {
            for c in -10..=10 {
                if (a, b, c) != (0, 0, 0) {
                    v.push([a, b, c]);
                }
            }
        }
    }
    v
}

fn combinatorics() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for n in 3..=12 {
        for d in 3..=12 {
            if !lemma24_holds(n, d).unwrap() {
                bad.push(format!("lemma24({n},{d})"));
            }
            let m = c_nd_max(n, d).unwrap();
            let want: BTreeSet<(usize, usize)> = [(1, d - 1), (d - 1, 1)].into_iter().collect();
            let got: BTreeSet<(usize, usize)> = m.argmax.iter().copied().collect();
            if got != want || m.value >= BigRational::one() {
                bad.push(format!("max({n},{d})"));
            }
        }
    }
    if c_nd(3, 3, 1, 2).unwrap() != rat(9, 10) || c_nd(4, 3, 1, 2).unwrap() != rat(7, 10) {
        bad.push("C values".into());
    }
    let r = regime_report(4, 3).unwrap();
    if r.threshold != 6 || r.admissible_k != vec![2, 3] {
        bad.push(format!("regime(4,3) = {} {:?}", r.threshold, r.admissible_k));
    }
    let t = start.elapsed();
    let pass = bad.is_empty() && t < Duration::from_secs(1);
    outcome(pass, format!("{:.3}s, failures {:?}", t.as_secs_f64(), bad))
}

fn padic_oracle() -> Outcome {
    let start = Instant::now();
    let basis = Arc::new(VeroneseBasis::new(2, 2).unwrap());
    let primes = [2u64, 3, 5, 7, 11];
    let cases: Vec<([i64; 3], u64)> = all_triples().into_iter().flat_map(|a| primes.iter().map(move |&p| (a, p))).collect();
    let res: Vec<(bool, bool)> = cases
        .par_iter()
        .map(|(a, p)| {
            let f = Form::new(basis.clone(), CoefficientVector::from_i64(a)).unwrap();
            let v = zp_solubility(&f, *p, SearchBudget::with_max_level(8)).unwrap();
            let truth = binary_quadratic_oracle(&f, Place::Prime(*p)).unwrap();
            let contradiction = (v.is_soluble() && !truth) || (v.is_insoluble() && truth);
            (contradiction, v.is_unknown())
        })
        .collect();
    let contradictions = res.iter().filter(|r| r.0).count();
    let unknown = res.iter().filter(|r| r.1).count();
    let frac = unknown as f64 / res.len() as f64;
    let t = start.elapsed();
    let pass = contradictions == 0 && frac < 0.01 && t < Duration::from_secs(300);
    outcome(pass, format!("{} cases, {contradictions} contradictions, unknown {:.4}%, {:.1}s", res.len(), 100.0 * frac, t.as_secs_f64()))
}

fn real_oracle() -> Outcome {
    let start = Instant::now();
    let basis = Arc::new(VeroneseBasis::new(2, 2).unwrap());
    let res: Vec<(bool, bool, bool)> = all_triples()
        .par_iter()
        .map(|a| {
            let f = Form::new(basis.clone(), CoefficientVector::from_i64(a)).unwrap();
            let disc = a[1] * a[1] - 4 * a[0] * a[2];
            let v = real_solubility(&f, &RealBudget::default()).unwrap();
            let agrees = match &v {
                RealVerdict::Soluble(_) => disc >= 0,
                RealVerdict::Insoluble { .. } => disc < 0,
                RealVerdict::Unknown { .. } => true,
            };
            let exact_insoluble = match &v {
                RealVerdict::Insoluble { method } => matches!(method, InsolubilityMethod::Definiteness | InsolubilityMethod::BinaryRootCount),
                _ => true,
            };
            (agrees, exact_insoluble, v.is_unknown())
        })
        .collect();
    let disagree = res.iter().filter(|r| !r.0).count();
    let sampled_insoluble = res.iter().filter(|r| !r.1).count();
    let unknown = res.iter().filter(|r| r.2).count();
    let t = start.elapsed();
    let pass = disagree == 0 && sampled_insoluble == 0 && t < Duration::from_secs(60);
    outcome(pass, format!("{} forms, {disagree} disagreements, {unknown} unknown, {:.1}s", res.len(), t.as_secs_f64()))
}

fn insolubility_certificate() -> Outcome {
    let f = Form::from_i64(3, 2, &[1, 0, 0, 1, 0, 1]).unwrap();
    let v = zp_solubility(&f, 2, SearchBudget::default()).unwrap();
    // independent scan of all residue triples mod 8
    let mut primitive_zeros = 0;
    for x in 0..8i64 {
        for y in 0..8i64 {
            for z in 0..8i64 {
                let primitive = x % 2 == 1 || y % 2 == 1 || z % 2 == 1;
                if primitive && (x * x + y * y + z * z) % 8 == 0 {
                    primitive_zeros += 1;
                }
            }
        }
    }
    let level = match v {
        SolubilityVerdict::Insoluble { exhaustion_level } => Some(exhaustion_level),
        _ => None,
    };
    let certified_at_3 = verify_exhaustion(&f, 2, 3, 1 << 20).unwrap();
    let mut odd_ok = true;
    for p in locsol::arith::primes_up_to(50).into_iter().filter(|&p| p > 2) {
        match zp_solubility(&f, p, SearchBudget::default()).unwrap() {
            SolubilityVerdict::Soluble(c) if c.alpha == 0 => {}
            _ => odd_ok = false,
        }
    }
    let pass = level == Some(3) && certified_at_3 && primitive_zeros == 0 && odd_ok;
    outcome(
        pass,
        format!("verdict Insoluble{{{}}}, level-3 exhaustion {certified_at_3}, scan of 512 triples: {primitive_zeros} primitive zeros, odd p <= 50 soluble with alpha 0: {odd_ok}", level.map(|j| j.to_string()).unwrap_or("-".into())),
    )
}

fn hensel_balls() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cases = 0;
    let mut failures = 0;
    let mut by_alpha = [0usize; 4];
    let shapes = [(3usize, 2usize), (2, 3), (3, 3)];
    while cases < 150 {
        let (n, d) = shapes[cases % shapes.len()];
        let basis = Arc::new(VeroneseBasis::new(n, d).unwrap());
        let p = [2u64, 3, 5][rng.gen_range(0..3)];
        let scale = if rng.gen_bool(0.4) { p as i64 } else { 1 };
        let a: Vec<BigInt> = (0..basis.len()).map(|_| BigInt::from(scale * rng.gen_range(-9i64..=9))).collect();
        if a.iter().all(Zero::is_zero) {
            continue;
        }
        let f = Form::new(basis.clone(), CoefficientVector::new(a.clone())).unwrap();
        let SolubilityVerdict::Soluble(cert) = zp_solubility(&f, p, SearchBudget::with_max_level(12)).unwrap() else { continue };
        cases += 1;
        by_alpha[(cert.alpha as usize).min(3)] += 1;
        // |a' − a|_p < p^{−2α}
        let step = BigInt::from(p).pow(2 * cert.alpha + 1);
        for _ in 0..20 {
            let b: Vec<BigInt> = a.iter().map(|c| c + &step * BigInt::from(rng.gen_range(-50i64..=50))).collect();
            if b.iter().all(Zero::is_zero) {
                continue;
            }
            let g = Form::new(basis.clone(), CoefficientVector::new(b)).unwrap();
            let budget = SearchBudget::with_max_level((2 * cert.alpha + 1).max(12));
            if !zp_solubility(&g, p, budget).unwrap().is_soluble() {
                failures += 1;
            }
        }
    }
    outcome(cases >= 100 && failures == 0, format!("{cases} certified cases (alpha 0/1/2/3+: {by_alpha:?}), {failures} failed perturbations"))
}

fn thin_counts() -> Outcome {
    let p = ThinFormP::parse(SPLIT).unwrap();
    let full = BoxSpec::full(4);
    let triv = CongruenceSpec::trivial(4);
    let raw = enumerate_thin_points(&p, 2, &full, &triv, false, Strategy::FullScan).unwrap().len();
    let prim = enumerate_thin_points(&p, 2, &full, &triv, true, Strategy::FullScan).unwrap().len();
    let mut mismatches = Vec::new();
    for a in 1..=8u64 {
        let fs = enumerate_thin_points(&p, a, &full, &triv, false, Strategy::FullScan).unwrap();
        let sl = enumerate_thin_points(&p, a, &full, &triv, false, Strategy::SolveLast).unwrap();
        if fs != sl {
            mismatches.push(format!("strategies at A={a}"));
        }
        let direct = fs.iter().filter(|x| x.iter().fold(0i64, |g, c| g.gcd(c)) == 1).count() as i128;
        let moebius = moebius_primitive_count(&raw_counts(&p, a, &full, Strategy::SolveLast).unwrap(), a, true).unwrap();
        if direct != moebius {
            mismatches.push(format!("moebius at A={a}: {moebius} vs {direct}"));
        }
    }
    outcome(raw == 129 && prim == 96 && mismatches.is_empty(), format!("A=2 raw {raw}, primitive {prim}; A<=8 mismatches {mismatches:?}"))
}

fn growth() -> Outcome {
    let start = Instant::now();
    let p = ThinFormP::parse(SPLIT6).unwrap();
    let g = growth_diagnostic(&p, &[8, 16, 32], Strategy::SolveLast).unwrap();
    let ratios: Vec<f64> = g.rows.iter().filter_map(|r| r.log_ratio).collect();
    let counts: Vec<u64> = g.rows.iter().map(|r| r.count).collect();
    let t = start.elapsed();
    let pass = ratios.len() == 2 && ratios.iter().all(|r| (3.5..=4.5).contains(r)) && t < Duration::from_secs(600);
    outcome(pass, format!("counts {counts:?}, log2 ratios {ratios:?}, target {}, {:.1}s", g.target, t.as_secs_f64()))
}

fn level_density() -> Outcome {
    let p = ThinFormP::parse(SPLIT).unwrap();
    let s1 = sigma_p_level(&p, 3, 1, &LevelCondition::All).unwrap();
    let s2 = sigma_p_level(&p, 3, 2, &LevelCondition::All).unwrap();
    let target = rat(11, 9);
    let rel = ((&s2 - &target) / &target).to_f64().unwrap().abs();
    let mut slices = BigRational::zero();
    for code in 0..81u64 {
        let r: Vec<u64> = (0..4).map(|i| (code / 3u64.pow(i)) % 3).collect();
        let c = CongruenceSpec::new(3, r).unwrap();
        slices += sigma_p_level(&p, 3, 1, &LevelCondition::Congruence(c)).unwrap();
    }
    let mut slices2 = BigRational::zero();
    for code in 0..81u64 {
        let r: Vec<u64> = (0..4).map(|i| (code / 3u64.pow(i)) % 3).collect();
        let c = CongruenceSpec::new(3, r).unwrap();
        slices2 += sigma_p_level(&p, 3, 2, &LevelCondition::Congruence(c)).unwrap();
    }
    let pass = s1 == target && rel < 0.1 && slices == s1 && slices2 == s2;
    outcome(pass, format!("r=1 {s1}, r=2 {s2} (rel. diff {rel:.4}), slices sum r=1 {slices}, r=2 {slices2}"))
}

fn real_density() -> Outcome {
    let p = ThinFormP::parse(SPLIT).unwrap();
    let region = vec![(-1.0, 1.0); 4];
    let run = || sigma_infty(&p, &region, &[0.05, 0.025], 1_000_000, 1, &Membership::All).unwrap();
    let a = run();
    let b = run();
    let (e1, e2) = (&a.per_eta[0].interval, &b.per_eta[1].interval);
    let (s1, s2) = (e1.stderr.unwrap(), e2.stderr.unwrap());
    let combined = (s1 * s1 + s2 * s2).sqrt();
    let diff = (e1.midpoint() - e2.midpoint()).abs();
    let same = a.per_eta.iter().zip(&b.per_eta).all(|(x, y)| {
        x.interval.lower.to_bits() == y.interval.lower.to_bits() && x.interval.stderr.map(f64::to_bits) == y.interval.stderr.map(f64::to_bits)
    });
    let pass = diff <= 2.0 * combined && same;
    outcome(
        pass,
        format!("eta 0.05: {:.4} ± {s1:.4}, eta 0.025: {:.4} ± {s2:.4}, |diff| {diff:.4} vs 2σ {:.4}, reproducible {same}", e1.midpoint(), e2.midpoint(), 2.0 * combined),
    )
}

fn census_stabilization() -> Outcome {
    let start = Instant::now();
    let p = ThinFormP::parse(CONIC).unwrap();
    let params = CpParams { p_max: 100, r_max: 3, ..CpParams::default() };
    let r = convergence_report(&p, 2, 2, &[50, 100, 200], 100, &CensusBudgets::default(), &params, 0.01).unwrap();
    let widths: Vec<f64> = r.reports.iter().filter_map(|x| x.width()).collect();
    let intervals: Vec<(f64, f64)> = r.reports.iter().filter_map(|x| x.rho_interval).collect();
    let cp = r.cp.as_ref().map(|c| c.inflated);
    let t = start.elapsed();
    let pass = widths.len() == 3 && widths.iter().all(|&w| w < 0.01) && r.verdict == ConvergenceVerdict::Pass && t < Duration::from_secs(1800);
    outcome(
        pass,
        format!("{}: rho {intervals:?}, deltas {:?}, c_P inflated {cp:?}, verdict {}, {:.1}s", r.label, r.deltas, r.verdict, t.as_secs_f64()),
    )
}

fn d_quantity_convergence() -> Outcome {
    let p = ThinFormP::parse(SPLIT).unwrap();
    let mut u = LocalConditionProduct::full(4);
    let ones: Vec<BigInt> = vec![BigInt::one(); 4];
    u.finite.insert(3, PadicPart::Ball { center: ones, exponent: 1 });
    let dq = d_quantity(&u, 32, &p, 2, 3, &CensusBudgets::default()).unwrap();
    let d = dq.value.as_ref().unwrap().to_f64().unwrap();
    let cond = LevelCondition::Congruence(CongruenceSpec::new(3, vec![1; 4]).unwrap());
    let mut ratios = Vec::new();
    for r in [1, 2] {
        let num = sigma_p_level(&p, 3, r, &cond).unwrap();
        let den = sigma_p_level(&p, 3, r, &LevelCondition::All).unwrap();
        ratios.push((num / den).to_f64().unwrap());
    }
    let pass = ratios.iter().all(|q| (d - q).abs() < 0.1);
    outcome(pass, format!("d(A=32) = {} = {d:.5}, local ratios {ratios:?}", dq.value.unwrap()))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let split = dir.path().join("split.txt");
    let conic = dir.path().join("conic.txt");
    std::fs::write(&split, SPLIT).unwrap();
    std::fs::write(&conic, CONIC).unwrap();
    let (s, c) = (split.to_str().unwrap(), conic.to_str().unwrap());
    let runs: Vec<Vec<&str>> = vec![
        vec!["real", "--n", "3", "--d", "4", "--coeffs", "1,0,0,0,0,0,0,0,0,0,-3,0,0,0,1"],
        vec!["densities", "--P", s, "--n", "2", "--d", "3", "--p-max", "5", "--r", "1", "--samples", "100000"],
        vec!["census", "--P", c, "--n", "2", "--d", "2", "--A", "20,40", "--p-max", "20"],
        vec!["census", "--P", c, "--n", "2", "--d", "2", "--A", "100", "--p-max", "20", "--mode", "sampled", "--m", "200"],
        vec!["d-quantity", "--P", s, "--n", "2", "--d", "3", "--A", "8", "--real", "tinfty", "--tp", "2,3"],
        vec!["probe-positivity", "--P", s, "--n", "2", "--d", "3", "--b", "1,0,0,1", "--height", "3", "--p-max", "11"],
    ];
    let mut differing = Vec::new();
    for args in &runs {
        let go = || {
            let out = Proc::new(env!("CARGO_BIN_EXE_locsol")).args(args).args(["--seed", "2024"]).env_remove("LOCSOL_CACHE_DIR").output().unwrap();
            assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
            out.stdout
        };
        let (x, y) = (go(), go());
        if x != y || x.is_empty() {
            differing.push(args[0]);
        }
    }
    outcome(differing.is_empty(), format!("{} stochastic runs repeated, differing: {differing:?}", runs.len()))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("combinatorics exactness", combinatorics),
        ("p-adic oracle agreement", padic_oracle),
        ("real oracle agreement", real_oracle),
        ("insolubility certificate", insolubility_certificate),
        ("Hensel-ball stability", hensel_balls),
        ("thin-set counts", thin_counts),
        ("growth exponent", growth),
        ("local density exactness", level_density),
        ("real density self-consistency", real_density),
        ("census stabilization", census_stabilization),
        ("d-quantity convergence", d_quantity_convergence),
        ("determinism", determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let k = i + 1;
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let o = f();
        println!("[{k:>2}] {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(k);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
