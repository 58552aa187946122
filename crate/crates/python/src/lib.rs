//! Python bindings: forms, local solubility, thin-set counts, densities and
//! the census.

use std::sync::Arc;

use num_bigint::BigInt;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::locsol::census::{self, CensusBudgets, CensusMode, LocalVerdict, ProbeOutcome};
use ::locsol::combinatorics;
use ::locsol::densities::{self, LevelCondition};
use ::locsol::forms::{self, CoefficientVector, VeroneseBasis};
use ::locsol::padic::{self, SearchBudget, SolubilityVerdict};
use ::locsol::real::{self, RealBudget, RealVerdict};
use ::locsol::thin::{self, BoxSpec, CongruenceSpec, Strategy, ThinFormP};
use num_rational::BigRational;

fn err(e: ::locsol::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, r: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((r.numer().clone(), r.denom().clone()))
}

/// A form `Σ a_m x^m` of degree `d` in `n` variables, coefficients in
/// descending lexicographic monomial order.
#[pyclass(name = "Form", frozen, module = "locsol")]
struct PyForm {
    inner: forms::Form,
}

#[pymethods]
impl PyForm {
    #[new]
    fn new(n: usize, d: usize, coeffs: Vec<BigInt>) -> PyResult<Self> {
        let basis = Arc::new(VeroneseBasis::new(n, d).map_err(err)?);
        Ok(PyForm { inner: forms::Form::new(basis, CoefficientVector::new(coeffs)).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn coeffs(&self) -> Vec<BigInt> {
        self.inner.coeffs().entries().to_vec()
    }

    /// Exponent vectors of the monomial basis.
    fn monomials(&self) -> Vec<Vec<u32>> {
        self.inner.basis().monomials().iter().map(|m| m.exponents().to_vec()).collect()
    }

    fn evaluate(&self, x: Vec<BigInt>) -> PyResult<BigInt> {
        self.inner.eval_int(&x).map_err(err)
    }

    #[pyo3(signature = (p, max_level = 26, frontier_cap = 1_000_000))]
    fn zp_solubility<'py>(&self, py: Python<'py>, p: u64, max_level: u32, frontier_cap: usize) -> PyResult<Bound<'py, PyDict>> {
        let v = padic::zp_solubility(&self.inner, p, SearchBudget { max_level, frontier_cap }).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("verdict", v.label())?;
        match v {
            SolubilityVerdict::Soluble(c) => {
                out.set_item("point", c.point.clone())?;
                out.set_item("level", c.level)?;
                out.set_item("alpha", c.alpha)?;
                out.set_item("pivot_index", c.pivot_index)?;
                out.set_item("eta", fraction(py, &padic::stability_radius(&c))?)?;
            }
            SolubilityVerdict::Insoluble { exhaustion_level } => out.set_item("exhaustion_level", exhaustion_level)?,
            SolubilityVerdict::Unknown { reason, level } => {
                out.set_item("reason", reason.to_string())?;
                out.set_item("level", level)?;
            }
        }
        Ok(out)
    }

    #[pyo3(signature = (seed = 0))]
    fn real_solubility<'py>(&self, py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let v = real::real_solubility(&self.inner, &RealBudget { seed, ..RealBudget::default() }).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("verdict", v.label())?;
        match v {
            RealVerdict::Soluble(w) => {
                out.set_item("point", w.point)?;
                out.set_item("residual", w.residual)?;
            }
            RealVerdict::Insoluble { method } => out.set_item("method", method.to_string())?,
            RealVerdict::Unknown { samples } => out.set_item("samples", samples)?,
        }
        Ok(out)
    }

    /// Local solubility everywhere, as far as the default budgets decide it.
    #[pyo3(signature = (p_max, seed = 0))]
    fn classify<'py>(&self, py: Python<'py>, p_max: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let mut b = CensusBudgets::default();
        b.real.seed = seed;
        verdict_dict(py, &census::classify(&self.inner, p_max, &b).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Form(n={}, d={}, coeffs={})", self.inner.n(), self.inner.d(), self.inner.coeffs())
    }
}

fn verdict_dict<'py>(py: Python<'py>, v: &LocalVerdict) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("verdict", v.label())?;
    match v {
        LocalVerdict::Soluble { via } => out.set_item("via", via.to_string())?,
        LocalVerdict::Insoluble { place } => out.set_item("place", place.to_string())?,
        LocalVerdict::Unknown { reason } => out.set_item("reason", reason)?,
    }
    Ok(out)
}

/// The form `P(t_1, ..., t_N)` cutting out the thin set, given as lines
/// `coefficient e1 ... eN`.
#[pyclass(name = "ThinForm", frozen, module = "locsol")]
struct PyThinForm {
    inner: ThinFormP,
}

fn strategy_for(p: &ThinFormP, s: Option<&str>) -> PyResult<Strategy> {
    match s {
        Some(s) => s.parse().map_err(err),
        None => Ok(if p.solvable_for_last() { Strategy::SolveLast } else { Strategy::FullScan }),
    }
}

#[pymethods]
impl PyThinForm {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyThinForm { inner: ThinFormP::parse(text).map_err(err)? })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyThinForm { inner: ThinFormP::from_file(&path).map_err(err)? })
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    #[getter]
    fn k(&self) -> u32 {
        self.inner.k()
    }

    fn evaluate(&self, a: Vec<BigInt>) -> BigInt {
        self.inner.eval(&a)
    }

    #[pyo3(signature = (a, primitive = true, modulus = 1, residues = None, strategy = None))]
    fn count(&self, py: Python<'_>, a: u64, primitive: bool, modulus: u64, residues: Option<Vec<u64>>, strategy: Option<&str>) -> PyResult<u64> {
        let n = self.inner.n_vars();
        let cong = CongruenceSpec::new(modulus, residues.unwrap_or_else(|| vec![0; n])).map_err(err)?;
        let s = strategy_for(&self.inner, strategy)?;
        py.detach(|| thin::count_thin(&self.inner, a, &BoxSpec::full(n), &cong, primitive, s)).map_err(err)
    }

    #[pyo3(signature = (a, primitive = true))]
    fn points(&self, py: Python<'_>, a: u64, primitive: bool) -> PyResult<Vec<Vec<i64>>> {
        let n = self.inner.n_vars();
        let s = strategy_for(&self.inner, None)?;
        py.detach(|| thin::enumerate_thin_points(&self.inner, a, &BoxSpec::full(n), &CongruenceSpec::trivial(n), primitive, s))
            .map_err(err)
    }

    fn sample(&self, a: u64, m: usize, seed: u64) -> PyResult<Vec<Vec<i64>>> {
        Ok(thin::sample_thin(&self.inner, a, m, seed).map_err(err)?.vectors)
    }

    fn __repr__(&self) -> String {
        format!("ThinForm({:?})", self.inner.to_string())
    }
}

#[pyfunction]
fn veronese_dimension(n: usize, d: usize) -> PyResult<usize> {
    forms::veronese_dimension(n, d).map_err(err)
}

#[pyfunction]
fn c_nd<'py>(py: Python<'py>, n: usize, d: usize, d1: usize, d2: usize) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &combinatorics::c_nd(n, d, d1, d2).map_err(err)?)
}

#[pyfunction]
fn lemma24_holds(n: usize, d: usize) -> PyResult<bool> {
    combinatorics::lemma24_holds(n, d).map_err(err)
}

#[pyfunction]
fn regime_report<'py>(py: Python<'py>, n: usize, d: usize) -> PyResult<Bound<'py, PyDict>> {
    let r = combinatorics::regime_report(n, d).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("N", r.big_n)?;
    out.set_item("threshold", r.threshold)?;
    out.set_item("admissible_k", r.admissible_k)?;
    Ok(out)
}

/// `σ_p` at level `r`, exactly.
#[pyfunction]
fn sigma_p_level<'py>(py: Python<'py>, p_form: &PyThinForm, p: u64, r: u32) -> PyResult<Bound<'py, PyAny>> {
    let v = py.detach(|| densities::sigma_p_level(&p_form.inner, p, r, &LevelCondition::All)).map_err(err)?;
    fraction(py, &v)
}

#[pyfunction]
#[pyo3(signature = (p_form, n, d, a, p_max, seed = 0, mode = "exhaustive", m = 0))]
#[allow(clippy::too_many_arguments)]
fn rho_estimate<'py>(
    py: Python<'py>,
    p_form: &PyThinForm,
    n: usize,
    d: usize,
    a: u64,
    p_max: u64,
    seed: u64,
    mode: &str,
    m: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = match mode {
        "exhaustive" => CensusMode::Exhaustive,
        "sampled" => CensusMode::Sampled { m, seed },
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let mut budgets = CensusBudgets::default();
    budgets.real.seed = seed;
    let r = py.detach(|| census::rho_estimate(&p_form.inner, n, d, a, p_max, &budgets, &mode)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("A", r.a)?;
    out.set_item("total", r.total)?;
    out.set_item("soluble", r.soluble)?;
    out.set_item("insoluble", r.insoluble)?;
    out.set_item("unknown", r.unknown)?;
    out.set_item("rho_interval", r.rho_interval)?;
    out.set_item("label", r.label)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (p_form, n, d, b, height = 10, p_max = 20, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn positivity_probe<'py>(
    py: Python<'py>,
    p_form: &PyThinForm,
    n: usize,
    d: usize,
    b: Vec<BigInt>,
    height: i64,
    p_max: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let outcome = census::positivity_probe(&p_form.inner, n, d, &b, height, p_max, seed).map_err(err)?;
    let out = PyDict::new(py);
    match outcome {
        ProbeOutcome::Certificate(c) => {
            out.set_item("status", "certificate")?;
            out.set_item("y", c.y.clone())?;
            out.set_item("eta_infty", fraction(py, &c.eta_infty)?)?;
            out.set_item("C", c.c.clone())?;
            let alphas: Vec<(u64, u32)> = c.primes.iter().map(|pb| (pb.p, pb.alpha)).collect();
            out.set_item("alpha", alphas)?;
        }
        ProbeOutcome::Failure(reason) => {
            out.set_item("status", "failure")?;
            out.set_item("reason", reason)?;
        }
    }
    Ok(out)
}

#[pymodule]
#[pyo3(name = "locsol")]
fn locsol_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyForm>()?;
    m.add_class::<PyThinForm>()?;
    m.add_function(wrap_pyfunction!(veronese_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(c_nd, m)?)?;
    m.add_function(wrap_pyfunction!(lemma24_holds, m)?)?;
    m.add_function(wrap_pyfunction!(regime_report, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_p_level, m)?)?;
    m.add_function(wrap_pyfunction!(rho_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(positivity_probe, m)?)?;
    Ok(())
}
