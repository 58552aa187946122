//! Command line and `key=value` run configuration.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, Parser, Subcommand};
use num_bigint::BigInt;
use num_traits::Zero;

use locsol::thin::Strategy;

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "locsol", version, about = "Local solubility statistics for families of forms")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args, Debug)]
struct Shared {
    /// Run configuration in `key=value` lines; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Deepest lifting level of the p-adic search.
    #[arg(long = "budget-max-level", global = true)]
    budget_max_level: Option<String>,
    /// Largest frontier of the p-adic search.
    #[arg(long = "budget-frontier-cap", global = true)]
    budget_frontier_cap: Option<String>,
    /// Seeded random points added to the real sampling grid.
    #[arg(long = "budget-sphere-samples", global = true)]
    budget_sphere_samples: Option<String>,
    /// Cache root for census verdicts (falls back to $LOCSOL_CACHE_DIR).
    #[arg(long = "cache-dir", global = true)]
    cache_dir: Option<String>,
    /// Main output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<String>,
    /// JSON-lines verdict log of the census.
    #[arg(long, global = true)]
    log: Option<String>,
    /// Convergence report of the census.
    #[arg(long, global = true)]
    report: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Combinatorial lemmas for 3 ≤ n ≤ n-max, 3 ≤ d ≤ d-max.
    VerifyLemmas {
        #[arg(long = "n-max")]
        n_max: Option<String>,
        #[arg(long = "d-max")]
        d_max: Option<String>,
    },
    /// ℤ_p-solubility of one form.
    Solubility {
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        d: Option<String>,
        /// Comma-separated coefficients in descending lex monomial order.
        #[arg(long, allow_hyphen_values = true)]
        coeffs: Option<String>,
        #[arg(long)]
        prime: Option<String>,
    },
    /// ℝ-solubility of one form.
    Real {
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        d: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        coeffs: Option<String>,
    },
    /// Count integer points of the thin set in a box.
    ThinCount {
        #[arg(long = "P", visible_alias = "p-file")]
        p_file: Option<String>,
        #[arg(long = "A")]
        a: Option<String>,
        /// Congruence modulus.
        #[arg(long = "B")]
        b: Option<String>,
        /// Comma-separated residues modulo B.
        #[arg(long = "r")]
        r: Option<String>,
        #[arg(long)]
        primitive: bool,
        /// full_scan or solve_last.
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Local densities σ_p and σ_∞.
    Densities {
        #[arg(long = "P", visible_alias = "p-file")]
        p_file: Option<String>,
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        d: Option<String>,
        #[arg(long = "p-max")]
        p_max: Option<String>,
        /// Comma-separated levels.
        #[arg(long = "r")]
        r: Option<String>,
        /// Comma-separated, strictly decreasing slab widths.
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        samples: Option<String>,
    },
    /// Local solubility census over the primitive thin set.
    Census {
        #[arg(long = "P", visible_alias = "p-file")]
        p_file: Option<String>,
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        d: Option<String>,
        /// Comma-separated height schedule.
        #[arg(long = "A")]
        a: Option<String>,
        #[arg(long = "p-max")]
        p_max: Option<String>,
        /// exhaustive or sampled.
        #[arg(long)]
        mode: Option<String>,
        /// Draws per height in sampled mode.
        #[arg(long)]
        m: Option<String>,
        /// Primes up to this bound are probed for insolubility past p-max.
        #[arg(long = "p-tail")]
        p_tail: Option<String>,
        /// Height of the rational point search.
        #[arg(long)]
        height: Option<String>,
        /// Noise tolerance of the convergence verdict.
        #[arg(long)]
        tolerance: Option<String>,
        /// Compare with c_P when at least three heights are given.
        #[arg(long)]
        convergence: Option<String>,
        #[arg(long = "r-max")]
        r_max: Option<String>,
        #[arg(long = "class-budget")]
        class_budget: Option<String>,
        #[arg(long = "tail-primes")]
        tail_primes: Option<String>,
        /// Monte Carlo samples for the real factor of c_P.
        #[arg(long = "cp-samples")]
        cp_samples: Option<String>,
    },
    /// The proportion d(U, A; P) for a product of local conditions.
    DQuantity {
        #[arg(long = "P", visible_alias = "p-file")]
        p_file: Option<String>,
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        d: Option<String>,
        #[arg(long = "A")]
        a: Option<String>,
        /// `box` (optionally narrowed by --box) or `tinfty`.
        #[arg(long)]
        real: Option<String>,
        /// Box sides `lo:hi` separated by `;`, rationals inside [-1, 1].
        #[arg(long = "box", allow_hyphen_values = true)]
        box_sides: Option<String>,
        /// A p-adic ball `p^e:c1,...,cN`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        ball: Vec<String>,
        /// Comma-separated primes whose condition is T_p.
        #[arg(long)]
        tp: Option<String>,
    },
    /// Look for a smooth rational point on f_b and certify solubility balls.
    ProbePositivity {
        #[arg(long = "P", visible_alias = "p-file")]
        p_file: Option<String>,
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        d: Option<String>,
        /// Comma-separated zero of P.
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long)]
        height: Option<String>,
        #[arg(long = "p-max")]
        p_max: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Budgets {
    pub max_level: Option<u32>,
    pub frontier_cap: Option<usize>,
    pub sphere_samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CensusModeArg {
    Exhaustive,
    Sampled { m: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusArgs {
    pub p_file: PathBuf,
    pub n: usize,
    pub d: usize,
    pub a_schedule: Vec<u64>,
    pub p_max: u64,
    pub mode: CensusModeArg,
    pub p_tail: u64,
    pub height: i64,
    pub tolerance: f64,
    pub convergence: bool,
    pub r_max: u32,
    pub class_budget: u64,
    pub tail_primes: usize,
    pub cp_samples: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub p: u64,
    pub exponent: u32,
    pub center: Vec<BigInt>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    VerifyLemmas { n_max: usize, d_max: usize },
    Solubility { n: usize, d: usize, coeffs: Vec<BigInt>, prime: u64 },
    Real { n: usize, d: usize, coeffs: Vec<BigInt> },
    ThinCount { p_file: PathBuf, a: u64, modulus: u64, residues: Option<Vec<u64>>, primitive: bool, strategy: Option<Strategy> },
    Densities { p_file: PathBuf, forms: Option<(usize, usize)>, p_max: u64, levels: Vec<u32>, etas: Vec<f64>, samples: u64 },
    Census(CensusArgs),
    DQuantity { p_file: PathBuf, n: usize, d: usize, a: u64, t_infty: bool, box_sides: Option<String>, balls: Vec<Ball>, tp: Vec<u64> },
    ProbePositivity { p_file: PathBuf, n: usize, d: usize, b: Vec<BigInt>, height: i64, p_max: u64 },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyLemmas { .. } => "verify-lemmas",
            Command::Solubility { .. } => "solubility",
            Command::Real { .. } => "real",
            Command::ThinCount { .. } => "thin-count",
            Command::Densities { .. } => "densities",
            Command::Census(_) => "census",
            Command::DQuantity { .. } => "d-quantity",
            Command::ProbePositivity { .. } => "probe-positivity",
        }
    }
}

/// Subcommands whose output depends on a random stream.
pub const STOCHASTIC: &[&str] = &["real", "densities", "census", "d-quantity", "probe-positivity"];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub jobs: usize,
    pub seed: Option<u64>,
    pub budgets: Budgets,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Environment variable naming the cache root.
pub const CACHE_ENV: &str = "LOCSOL_CACHE_DIR";

fn normalize(key: &str) -> String {
    let k = key.trim().to_lowercase().replace('-', "_");
    match k.as_str() {
        "p" => "p_file".into(),
        "a_schedule" => "a".into(),
        "box" => "box_sides".into(),
        "budget.max_level" | "max_level" => "budget_max_level".into(),
        "budget.frontier_cap" | "frontier_cap" => "budget_frontier_cap".into(),
        "budget.sphere_samples" | "sphere_samples" => "budget_sphere_samples".into(),
        _ => k,
    }
}

fn known_keys() -> Vec<String> {
    let cmd = Cli::command();
    let mut keys: Vec<String> = cmd.get_arguments().map(|a| a.get_id().to_string()).collect();
    for sub in cmd.get_subcommands() {
        keys.extend(sub.get_arguments().map(|a| a.get_id().to_string()));
    }
    keys.retain(|k| k != "config" && k != "help" && k != "version");
    keys.sort();
    keys.dedup();
    keys
}

fn parse_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let known = known_keys();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        let key = normalize(k);
        if !known.contains(&key) {
            return Err(CliError::Usage(format!("{}:{}: unknown key `{}`", path.display(), i + 1, k.trim())));
        }
        let mut value = v.trim().to_string();
        if key == "p_file" && Path::new(&value).is_relative() {
            value = base.join(&value).to_string_lossy().into_owned();
        }
        out.insert(key, value);
    }
    Ok(out)
}

fn flags(m: &ArgMatches, out: &mut BTreeMap<String, String>) {
    for id in m.ids() {
        let id = id.as_str();
        if m.value_source(id) != Some(ValueSource::CommandLine) || id == "config" {
            continue;
        }
        if let Ok(Some(vals)) = m.try_get_raw(id) {
            let v: Vec<String> = vals.map(|s| s.to_string_lossy().into_owned()).collect();
            out.insert(id.to_string(), v.join(";"));
        }
    }
}

struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("invalid value `{s}` for {}", key.replace('_', "-")))),
        }
    }

    fn req<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.opt(key)?.ok_or_else(|| CliError::Usage(format!("missing required value `{}`", key.replace('_', "-"))))
    }

    fn positive<T: FromStr + PartialOrd + Default>(&self, key: &str, default: Option<T>) -> Result<T, CliError> {
        let v = match (self.opt(key)?, default) {
            (Some(v), _) | (None, Some(v)) => v,
            (None, None) => return self.req(key),
        };
        if v <= T::default() {
            return Err(CliError::Usage(format!("`{}` must be positive", key.replace('_', "-"))));
        }
        Ok(v)
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        let Some(s) = self.raw(key) else { return Ok(None) };
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| CliError::Usage(format!("invalid entry `{x}` in {}", key.replace('_', "-")))))
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    fn req_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        self.list(key)?.ok_or_else(|| CliError::Usage(format!("missing required value `{}`", key.replace('_', "-"))))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, CliError> {
        Ok(self.opt(key)?.unwrap_or(default))
    }
}

fn parse_ball(s: &str) -> Result<Ball, CliError> {
    let bad = || CliError::Usage(format!("ball `{s}` is not of the form p^e:c1,...,cN"));
    let (pe, c) = s.split_once(':').ok_or_else(bad)?;
    let (p, e) = pe.split_once('^').unwrap_or((pe, "1"));
    let center = c.split(',').map(|x| x.trim().parse::<BigInt>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?;
    Ok(Ball { p: p.trim().parse().map_err(|_| bad())?, exponent: e.trim().parse().map_err(|_| bad())?, center })
}

/// Parses `argv` (including the program name) and the optional `--config`
/// file into a validated [`RunConfig`].
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = Cli::command().try_get_matches_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Help(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;
    let (sub_name, sub) = matches.subcommand().expect("subcommand is required");
    let config_path = sub.get_one::<PathBuf>("config").or_else(|| matches.get_one::<PathBuf>("config"));
    let mut map = match config_path {
        Some(p) => parse_file(p)?,
        None => BTreeMap::new(),
    };
    flags(&matches, &mut map);
    flags(sub, &mut map);
    let s = Settings { map };

    let command = match sub_name {
        "verify-lemmas" => Command::VerifyLemmas { n_max: s.positive("n_max", None)?, d_max: s.positive("d_max", None)? },
        "solubility" => Command::Solubility {
            n: s.positive("n", None)?,
            d: s.positive("d", None)?,
            coeffs: s.req_list("coeffs")?,
            prime: s.positive("prime", None)?,
        },
        "real" => Command::Real { n: s.positive("n", None)?, d: s.positive("d", None)?, coeffs: s.req_list("coeffs")? },
        "thin-count" => {
            let strategy = match s.raw("strategy") {
                None => None,
                Some(x) => Some(x.parse::<Strategy>().map_err(|e| CliError::Usage(e.to_string()))?),
            };
            Command::ThinCount {
                p_file: s.path("p_file").ok_or_else(|| CliError::Usage("missing required value `P`".into()))?,
                a: s.positive("a", None)?,
                modulus: s.positive("b", Some(1))?,
                residues: s.list("r")?,
                primitive: s.bool("primitive", false)?,
                strategy,
            }
        }
        "densities" => {
            let forms = match (s.opt::<usize>("n")?, s.opt::<usize>("d")?) {
                (Some(n), Some(d)) if n > 0 && d > 0 => Some((n, d)),
                (None, None) => None,
                _ => return Err(CliError::Usage("give both n and d, positive, or neither".into())),
            };
            let levels: Vec<u32> = s.list("r")?.unwrap_or_else(|| vec![1]);
            let etas: Vec<f64> = s.list("eta")?.unwrap_or_else(|| vec![0.1, 0.05, 0.025]);
            if levels.contains(&0) || etas.iter().any(|&e| e <= 0.0) {
                return Err(CliError::Usage("levels and etas must be positive".into()));
            }
            Command::Densities {
                p_file: s.path("p_file").ok_or_else(|| CliError::Usage("missing required value `P`".into()))?,
                forms,
                p_max: s.opt("p_max")?.unwrap_or(0),
                levels,
                etas,
                samples: s.positive("samples", Some(1_000_000))?,
            }
        }
        "census" => {
            let mode = match s.raw("mode").unwrap_or("exhaustive") {
                "exhaustive" => CensusModeArg::Exhaustive,
                "sampled" => CensusModeArg::Sampled { m: s.req("m")? },
                other => return Err(CliError::Usage(format!("unknown census mode `{other}`"))),
            };
            let a_schedule: Vec<u64> = s.req_list("a")?;
            if a_schedule.contains(&0) {
                return Err(CliError::Usage("heights must be positive".into()));
            }
            Command::Census(CensusArgs {
                p_file: s.path("p_file").ok_or_else(|| CliError::Usage("missing required value `P`".into()))?,
                n: s.positive("n", None)?,
                d: s.positive("d", None)?,
                a_schedule,
                p_max: s.opt("p_max")?.unwrap_or(0),
                mode,
                p_tail: s.opt("p_tail")?.unwrap_or(1000),
                height: s.positive("height", Some(6))?,
                tolerance: s.opt("tolerance")?.unwrap_or(0.01),
                convergence: s.bool("convergence", true)?,
                r_max: s.positive("r_max", Some(3))?,
                class_budget: s.positive("class_budget", Some(200_000))?,
                tail_primes: s.opt("tail_primes")?.unwrap_or(5),
                cp_samples: s.positive("cp_samples", Some(200_000))?,
            })
        }
        "d-quantity" => {
            let t_infty = match s.raw("real").unwrap_or("box") {
                "box" => false,
                "tinfty" | "t_infty" | "T_inf" => true,
                other => return Err(CliError::Usage(format!("real part must be `box` or `tinfty`, got `{other}`"))),
            };
            let balls = match s.raw("ball") {
                None => Vec::new(),
                Some(v) => v.split(';').filter(|x| !x.trim().is_empty()).map(parse_ball).collect::<Result<_, _>>()?,
            };
            Command::DQuantity {
                p_file: s.path("p_file").ok_or_else(|| CliError::Usage("missing required value `P`".into()))?,
                n: s.positive("n", None)?,
                d: s.positive("d", None)?,
                a: s.positive("a", None)?,
                t_infty,
                box_sides: s.raw("box_sides").map(str::to_string),
                balls,
                tp: s.list("tp")?.unwrap_or_default(),
            }
        }
        "probe-positivity" => {
            let b: Vec<BigInt> = s.req_list("b")?;
            if b.iter().all(Zero::is_zero) {
                return Err(CliError::Usage("b must be nonzero".into()));
            }
            Command::ProbePositivity {
                p_file: s.path("p_file").ok_or_else(|| CliError::Usage("missing required value `P`".into()))?,
                n: s.positive("n", None)?,
                d: s.positive("d", None)?,
                b,
                height: s.positive("height", Some(10))?,
                p_max: s.opt("p_max")?.unwrap_or(20),
            }
        }
        other => unreachable!("unhandled subcommand {other}"),
    };

    let seed: Option<u64> = s.opt("seed")?;
    if seed.is_none() && STOCHASTIC.contains(&command.name()) {
        return Err(CliError::Usage(format!("`{}` is stochastic and needs --seed", command.name())));
    }
    let default_jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let budgets = Budgets {
        max_level: s.opt::<u32>("budget_max_level")?,
        frontier_cap: s.opt::<usize>("budget_frontier_cap")?,
        sphere_samples: s.opt::<usize>("budget_sphere_samples")?,
    };
    if budgets.max_level == Some(0) || budgets.frontier_cap == Some(0) {
        return Err(CliError::Usage("search budgets must be positive".into()));
    }
    Ok(RunConfig {
        command,
        jobs: s.positive("jobs", Some(default_jobs))?,
        seed,
        budgets,
        cache_dir: s.path("cache_dir").or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from)),
        out: s.path("out"),
        log: s.path("log"),
        report: s.path("report"),
    })
}
