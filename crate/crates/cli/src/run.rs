//! Dispatch of a parsed [`RunConfig`] to the library.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use locsol::arith::primes_up_to;
use locsol::census::{
    assess_convergence, census_points, classify_all, d_quantity, positivity_probe, verify_positivity, CensusBudgets, CensusMode,
    CensusReport, ConvergenceVerdict, LocalConditionProduct, PadicPart, ProbeOutcome, RealPart, VerdictRecord,
};
use locsol::combinatorics::{rational_to_string, verify_lemmas};
use locsol::densities::{c_p_estimate, sigma_infty, sigma_p_level, sigma_p_tp, CpParams, DensityInterval, LevelCondition, Membership, RealDensityParams};
use locsol::forms::{CoefficientVector, Form, VeroneseBasis};
use locsol::padic::{stability_radius, zp_solubility, SearchBudget, SolubilityVerdict};
use locsol::real::{real_solubility, ExactEvidence, RealBudget, RealVerdict};
use locsol::thin::{count_thin, BoxSpec, CongruenceSpec, Strategy, ThinFormP};

use crate::cache::{content_key, verdict_json, VerdictCache};
use crate::config::{Budgets, CensusArgs, CensusModeArg, Command, RunConfig};
use crate::output::{big, bigs, emit, float, jsonl, opt_float, Table};
use crate::CliError;

/// Exit status for a completed run whose convergence verdict is FAIL.
pub const EXIT_VERDICT_FAIL: i32 = 2;

/// Runs the configured subcommand on a pool of `config.jobs` threads and
/// returns the process exit status.
pub fn run(config: &RunConfig) -> Result<i32, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CliError::Io(format!("worker pool: {e}")))?;
    pool.install(|| dispatch(config))
}

fn search_budget(b: &Budgets, default_level: u32) -> SearchBudget {
    let mut s = SearchBudget::with_max_level(b.max_level.unwrap_or(default_level));
    if let Some(cap) = b.frontier_cap {
        s.frontier_cap = cap;
    }
    s
}

fn real_budget(b: &Budgets, seed: u64) -> RealBudget {
    let mut r = RealBudget { seed, ..RealBudget::default() };
    if let Some(k) = b.sphere_samples {
        r.random_points = k;
    }
    r
}

fn form(n: usize, d: usize, coeffs: &[BigInt]) -> Result<Form, CliError> {
    Ok(Form::new(Arc::new(VeroneseBasis::new(n, d)?), CoefficientVector::new(coeffs.to_vec()))?)
}

fn dispatch(config: &RunConfig) -> Result<i32, CliError> {
    let seed = config.seed.unwrap_or(0);
    let out = config.out.as_deref();
    match &config.command {
        Command::VerifyLemmas { n_max, d_max } => {
            let mut t = Table::new(&["n", "d", "N", "threshold", "admissible_k", "lemma24", "max_partition", "max_value"]);
            for row in verify_lemmas(*n_max, *d_max)? {
                let ks: Vec<String> = row.report.admissible_k.iter().map(|k| k.to_string()).collect();
                let parts: Vec<String> = row.max.argmax.iter().map(|(a, b)| format!("{a}:{b}")).collect();
                t.row([
                    row.n.to_string(),
                    row.d.to_string(),
                    row.report.big_n.to_string(),
                    row.report.threshold.to_string(),
                    ks.join(";"),
                    row.lemma24.to_string(),
                    parts.join(";"),
                    rational_to_string(&row.max.value),
                ]);
            }
            emit(out, &t.into_bytes())?;
        }
        Command::Solubility { n, d, coeffs, prime } => {
            let f = form(*n, *d, coeffs)?;
            let verdict = zp_solubility(&f, *prime, search_budget(&config.budgets, 26))?;
            let mut rec = json!({ "n": n, "d": d, "coeffs": bigs(coeffs), "p": prime, "verdict": verdict.label() });
            match &verdict {
                SolubilityVerdict::Soluble(c) => {
                    rec["level"] = json!(c.level);
                    rec["alpha"] = json!(c.alpha);
                    rec["pivot_index"] = json!(c.pivot_index);
                    rec["point"] = bigs(&c.point);
                    rec["eta"] = json!(rational_to_string(&stability_radius(c)));
                }
                SolubilityVerdict::Insoluble { exhaustion_level } => rec["exhaustion_level"] = json!(exhaustion_level),
                SolubilityVerdict::Unknown { reason, level } => {
                    rec["reason"] = json!(reason.to_string());
                    rec["level"] = json!(level);
                }
            }
            emit(out, &jsonl(&[rec]))?;
        }
        Command::Real { n, d, coeffs } => {
            let f = form(*n, *d, coeffs)?;
            let verdict = real_solubility(&f, &real_budget(&config.budgets, seed))?;
            let mut rec = json!({ "n": n, "d": d, "coeffs": bigs(coeffs), "verdict": verdict.label() });
            match &verdict {
                RealVerdict::Soluble(w) => {
                    rec["point"] = json!(w.point);
                    rec["residual"] = json!(w.residual);
                    rec["evidence"] = match &w.evidence {
                        ExactEvidence::Zero(x) => {
                            json!({ "kind": "zero", "point": x.iter().map(rational_to_string).collect::<Vec<_>>() })
                        }
                        ExactEvidence::Bracket { positive, negative } => {
                            json!({ "kind": "bracket", "positive": bigs(positive), "negative": bigs(negative) })
                        }
                        ExactEvidence::RootInterval { lo, hi } => {
                            json!({ "kind": "root-interval", "lo": rational_to_string(lo), "hi": rational_to_string(hi) })
                        }
                    };
                }
                RealVerdict::Insoluble { method } => rec["method"] = json!(method.to_string()),
                RealVerdict::Unknown { samples } => rec["samples"] = json!(samples),
            }
            emit(out, &jsonl(&[rec]))?;
        }
        Command::ThinCount { p_file, a, modulus, residues, primitive, strategy } => {
            let p = ThinFormP::from_file(p_file)?;
            let residues = residues.clone().unwrap_or_else(|| vec![0; p.n_vars()]);
            if residues.len() != p.n_vars() {
                return Err(CliError::Usage(format!("r needs {} residues", p.n_vars())));
            }
            let cong = CongruenceSpec::new(*modulus, residues.clone())?;
            let strategy = strategy.unwrap_or(if p.solvable_for_last() { Strategy::SolveLast } else { Strategy::FullScan });
            let start = Instant::now();
            let count = count_thin(&p, *a, &BoxSpec::full(p.n_vars()), &cong, *primitive, strategy)?;
            let secs = start.elapsed().as_secs_f64();
            let r_text: Vec<String> = residues.iter().map(|r| r.to_string()).collect();
            let r_hash = content_key(&[r_text.join(",")])[..12].to_string();
            let mut t = Table::new(&["A", "B", "r_hash", "count", "seconds"]);
            t.row([a.to_string(), modulus.to_string(), r_hash, count.to_string(), format!("{secs:.3}")]);
            emit(out, &t.into_bytes())?;
        }
        Command::Densities { p_file, forms, p_max, levels, etas, samples } => {
            let p = ThinFormP::from_file(p_file)?;
            let frontier = config.budgets.frontier_cap.unwrap_or(100_000);
            let mut t = Table::new(&["place", "quantity", "method", "lower", "upper", "exact", "level", "eta", "samples", "stderr"]);
            for q in primes_up_to(*p_max) {
                for &r in levels {
                    let v = sigma_p_level(&p, q, r, &LevelCondition::All)?;
                    let x = v.to_f64().unwrap_or(f64::NAN);
                    t.row([q.to_string(), "sigma_p".into(), "exact-count".into(), float(x), float(x), rational_to_string(&v), r.to_string(), String::new(), String::new(), String::new()]);
                    if let Some((n, d)) = forms {
                        let tp = sigma_p_tp(&p, *n, *d, q, r, frontier)?;
                        t.row(interval_row(&q.to_string(), "sigma_p_tp", &tp.interval));
                    }
                }
            }
            let region = vec![(-1.0, 1.0); p.n_vars()];
            let full = sigma_infty(&p, &region, etas, *samples, seed, &Membership::All)?;
            for e in &full.per_eta {
                t.row(interval_row("inf", "sigma_inf", &e.interval));
            }
            if let Some((n, d)) = forms {
                let m = Membership::TInfty { n: *n, d: *d, budget: real_budget(&config.budgets, seed) };
                let tinf = sigma_infty(&p, &region, etas, *samples, seed, &m)?;
                for e in &tinf.per_eta {
                    t.row(interval_row("inf", "sigma_inf_tinf", &e.interval));
                }
            }
            emit(out, &t.into_bytes())?;
        }
        Command::Census(args) => return census(config, args, seed),
        Command::DQuantity { p_file, n, d, a, t_infty, box_sides, balls, tp } => {
            let p = ThinFormP::from_file(p_file)?;
            let real = if *t_infty {
                if box_sides.is_some() {
                    return Err(CliError::Usage("a box cannot be combined with the T_inf condition".into()));
                }
                RealPart::TInfty
            } else {
                match box_sides {
                    None => RealPart::Box(BoxSpec::full(p.n_vars())),
                    Some(s) => RealPart::Box(parse_box(s)?),
                }
            };
            let mut finite = BTreeMap::new();
            for b in balls {
                if finite.insert(b.p, PadicPart::Ball { center: b.center.clone(), exponent: b.exponent }).is_some() {
                    return Err(CliError::Usage(format!("two conditions at p = {}", b.p)));
                }
            }
            for &q in tp {
                if finite.insert(q, PadicPart::Tp).is_some() {
                    return Err(CliError::Usage(format!("two conditions at p = {q}")));
                }
            }
            let u = LocalConditionProduct { real, finite };
            let budgets = census_budgets(config, 1000, 6, seed);
            let dq = d_quantity(&u, *a, &p, *n, *d, &budgets)?;
            let show = |x: &Option<num_rational::BigRational>| x.as_ref().map(rational_to_string).unwrap_or_default();
            let as_f = |x: &Option<num_rational::BigRational>| opt_float(x.as_ref().and_then(|v| v.to_f64()));
            let mut t = Table::new(&["A", "numerator", "undecided", "denominator", "value", "upper", "value_float"]);
            t.row([a.to_string(), dq.numerator.to_string(), dq.undecided.to_string(), dq.denominator.to_string(), show(&dq.value), show(&dq.upper), as_f(&dq.value)]);
            emit(out, &t.into_bytes())?;
        }
        Command::ProbePositivity { p_file, n, d, b, height, p_max } => {
            let p = ThinFormP::from_file(p_file)?;
            let rec = match positivity_probe(&p, *n, *d, b, *height, *p_max, seed)? {
                ProbeOutcome::Certificate(c) => {
                    let primes: Vec<Value> = c
                        .primes
                        .iter()
                        .map(|pb| json!({ "p": pb.p, "alpha": pb.alpha, "eta": rational_to_string(&pb.eta), "perturbations": pb.perturbations_checked }))
                        .collect();
                    json!({
                        "status": "certificate",
                        "b": bigs(&c.b),
                        "y": bigs(&c.y),
                        "primes": primes,
                        "eta_infty": rational_to_string(&c.eta_infty),
                        "C": big(&c.c),
                        "real_perturbations": c.real_perturbations_checked,
                        "verified": verify_positivity(&p, *n, *d, &c)?,
                    })
                }
                ProbeOutcome::Failure(reason) => json!({ "status": "failure", "b": bigs(b), "reason": reason }),
            };
            emit(out, &jsonl(&[rec]))?;
        }
    }
    Ok(0)
}

fn interval_row(place: &str, quantity: &str, iv: &DensityInterval) -> Vec<String> {
    let exact = match &iv.exact {
        Some((lo, hi)) if lo == hi => rational_to_string(lo),
        Some((lo, hi)) => format!("{}..{}", rational_to_string(lo), rational_to_string(hi)),
        None => String::new(),
    };
    vec![
        place.into(),
        quantity.into(),
        iv.method.to_string(),
        float(iv.lower),
        float(iv.upper),
        exact,
        iv.level.map(|l| l.to_string()).unwrap_or_default(),
        opt_float(iv.eta),
        iv.samples.to_string(),
        opt_float(iv.stderr),
    ]
}

fn parse_box(s: &str) -> Result<BoxSpec, CliError> {
    let bad = || CliError::Usage(format!("box `{s}` is not a list of lo:hi sides"));
    let sides = s
        .split(';')
        .map(|side| {
            let (lo, hi) = side.split_once(':').ok_or_else(bad)?;
            Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(BoxSpec::new(sides)?)
}

fn census_budgets(config: &RunConfig, p_tail: u64, height: i64, seed: u64) -> CensusBudgets {
    CensusBudgets {
        search: search_budget(&config.budgets, 12),
        real: real_budget(&config.budgets, seed),
        p_tail,
        height,
        ..CensusBudgets::default()
    }
}

fn census(config: &RunConfig, args: &CensusArgs, seed: u64) -> Result<i32, CliError> {
    let p = ThinFormP::from_file(&args.p_file)?;
    let budgets = census_budgets(config, args.p_tail, args.height, seed);
    let mut cache = match &config.cache_dir {
        Some(root) => {
            let key = content_key(&[
                p.to_string(),
                args.n.to_string(),
                args.d.to_string(),
                args.p_max.to_string(),
                format!("{:?}", budgets),
            ]);
            Some(VerdictCache::open(root, &key)?)
        }
        None => None,
    };

    let mut reports = Vec::new();
    let mut log = Vec::new();
    for &a in &args.a_schedule {
        let mode = match args.mode {
            CensusModeArg::Exhaustive => CensusMode::Exhaustive,
            CensusModeArg::Sampled { m } => CensusMode::Sampled { m, seed },
        };
        let points = census_points(&p, a, &mode)?;
        let missing: Vec<Vec<i64>> = match &cache {
            Some(c) => points.iter().filter(|x| c.get(x).is_none()).cloned().collect(),
            None => points.clone(),
        };
        let fresh = classify_all(&missing, args.n, args.d, args.p_max, &budgets)?;
        let records: Vec<VerdictRecord> = match &mut cache {
            Some(c) => {
                for r in fresh {
                    c.insert(r.a, r.verdict);
                }
                points.into_iter().map(|x| VerdictRecord { verdict: c.get(&x).unwrap().clone(), a: x }).collect()
            }
            None => fresh,
        };
        for r in &records {
            let mut v = verdict_json(&r.verdict);
            v["A"] = json!(a);
            v["a"] = json!(r.a);
            log.push(v);
        }
        let label = match args.mode {
            CensusModeArg::Exhaustive => "exhaustive",
            CensusModeArg::Sampled { .. } => "estimator stabilization (fiber-uniform sample)",
        };
        reports.push(CensusReport::from_records(a, records, label));
    }
    if let Some(c) = &mut cache {
        c.save()?;
    }

    let convergence = if args.convergence && args.a_schedule.len() >= 3 {
        let witness = reports.iter().find_map(|r| r.records.first()).map(|r| r.a.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>());
        let cp = match witness {
            Some(b) if args.p_max > 0 => {
                let params = CpParams {
                    p_max: args.p_max,
                    r_max: args.r_max,
                    class_budget: args.class_budget,
                    frontier_cap: config.budgets.frontier_cap.unwrap_or(100_000),
                    tail_primes: args.tail_primes,
                    real: RealDensityParams { samples: args.cp_samples, seed, budget: budgets.real.clone(), ..RealDensityParams::default() },
                };
                Some(c_p_estimate(&p, args.n, args.d, &b, &params)?)
            }
            _ => None,
        };
        Some(assess_convergence(reports.clone(), cp, args.p_max, args.tolerance))
    } else {
        None
    };

    let mut t = Table::new(&["A", "total", "soluble", "insoluble", "unknown", "rho_lower", "rho_upper", "width", "delta", "label"]);
    let mut prev: Option<f64> = None;
    for r in &reports {
        let (lo, hi) = r.rho_interval.map(|(l, h)| (float(l), float(h))).unwrap_or_default();
        let delta = match (prev, r.midpoint()) {
            (Some(a), Some(b)) => float((b - a).abs()),
            _ => String::new(),
        };
        prev = r.midpoint();
        let label = if r.total == 0 { format!("{} (empty thin set)", r.label) } else { r.label.clone() };
        t.row([
            r.a.to_string(),
            r.total.to_string(),
            r.soluble.to_string(),
            r.insoluble.to_string(),
            r.unknown.to_string(),
            lo,
            hi,
            opt_float(r.width()),
            delta,
            label,
        ]);
    }
    emit(config.out.as_deref(), &t.into_bytes())?;
    if let Some(path) = &config.log {
        emit(Some(path), &jsonl(&log))?;
    }
    let Some(conv) = convergence else { return Ok(0) };
    let mut rt = Table::new(&["verdict", "reason", "cp_lower", "cp_upper", "inflated_lower", "inflated_upper", "tail_unquantified", "deficits", "label"]);
    let (verdict, reason) = match &conv.verdict {
        ConvergenceVerdict::Pass => ("PASS", String::new()),
        ConvergenceVerdict::Fail(r) => ("FAIL", r.clone()),
        ConvergenceVerdict::Skip(r) => ("SKIP", r.clone()),
    };
    let cp_cols = match &conv.cp {
        Some(cp) => {
            let deficits: Vec<String> = cp.deficits.iter().map(|d| format!("{}:{}:{}", d.p, d.lower, d.upper)).collect();
            [float(cp.value.0), float(cp.value.1), float(cp.inflated.0), float(cp.inflated.1), cp.tail_unquantified.to_string(), deficits.join(";")]
        }
        None => Default::default(),
    };
    let mut row = vec![verdict.to_string(), reason];
    row.extend(cp_cols);
    row.push(conv.label.to_string());
    rt.row(row);
    match &config.report {
        Some(path) => emit(Some(path), &rt.into_bytes())?,
        None => eprintln!("convergence: {}", conv.verdict),
    }
    Ok(if matches!(conv.verdict, ConvergenceVerdict::Fail(_)) { EXIT_VERDICT_FAIL } else { 0 })
}
