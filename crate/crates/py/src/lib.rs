//! Python bindings for the equivalence engine and the jet completion.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cartan_core::engine::{run_loop, CharacterReport, EquivalenceReport, Policy};
use cartan_core::expr::{Context, Expr as CoreExpr, Symbol, Q};
use cartan_core::jet::{complete_to_involution, crosscheck_characters, encode_gstructure, jet_characters, JetSpace, JetSystem as CoreSystem};
use cartan_core::problem::{load_problem, parse_problem, ProblemFile};
use cartan_core::report::{render_characters, render_crosscheck, render_report, to_json};

create_exception!(cartan, CartanError, PyValueError);

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    CartanError::new_err(e.to_string())
}

fn parse_q(text: &str) -> PyResult<Q> {
    text.trim().parse::<Q>().map_err(|_| err(format!("not a rational number: `{text}`")))
}

#[pyclass(module = "cartan", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Characters {
    inner: CharacterReport,
}

#[pymethods]
impl Characters {
    #[getter]
    fn s(&self) -> Vec<usize> {
        self.inner.s.clone()
    }

    #[getter]
    fn r2(&self) -> usize {
        self.inner.r2
    }

    #[getter]
    fn weighted_sum(&self) -> usize {
        self.inner.weighted_sum
    }

    #[getter]
    fn involutive(&self) -> bool {
        self.inner.involutive
    }

    fn to_json(&self) -> String {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Characters(s={:?}, r2={}, involutive={})", self.inner.s, self.inner.r2, self.inner.involutive)
    }

    fn __str__(&self) -> String {
        render_characters(&self.inner)
    }
}

#[pyclass(module = "cartan", frozen)]
pub struct Report {
    inner: EquivalenceReport,
}

#[pymethods]
impl Report {
    #[getter]
    fn title(&self) -> String {
        self.inner.title.clone()
    }

    /// Kebab-case outcome name, e.g. "involutive" or "e-structure".
    #[getter]
    fn outcome(&self) -> String {
        to_json(&self.inner.outcome).trim().trim_matches('"').to_string()
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.inner.outcome.exit_code()
    }

    #[getter]
    fn message(&self) -> Option<String> {
        self.inner.message.clone()
    }

    #[getter]
    fn loops(&self) -> usize {
        self.inner.loops.len()
    }

    #[getter]
    fn final_coframe(&self) -> Vec<String> {
        self.inner.final_coframe.clone()
    }

    #[getter]
    fn final_group(&self) -> Vec<Vec<String>> {
        self.inner.final_group.clone()
    }

    /// Characters computed in each loop, in order.
    fn characters(&self) -> Vec<Characters> {
        self.inner.loops.iter().map(|l| Characters { inner: l.characters.clone() }).collect()
    }

    /// Isotropy equations of each reduction performed, per loop.
    fn isotropy(&self) -> Vec<Vec<String>> {
        self.inner
            .loops
            .iter()
            .map(|l| l.reduction.as_ref().map(|r| r.isotropy.clone()).unwrap_or_default())
            .collect()
    }

    fn to_json(&self) -> String {
        to_json(&self.inner)
    }

    fn __str__(&self) -> String {
        render_report(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Report(title={:?}, outcome={:?}, loops={})", self.inner.title, self.outcome(), self.inner.loops.len())
    }
}

#[pyclass(module = "cartan", frozen)]
pub struct Crosscheck {
    #[pyo3(get)]
    agree: bool,
    text: String,
}

#[pymethods]
impl Crosscheck {
    fn __bool__(&self) -> bool {
        self.agree
    }

    fn __str__(&self) -> String {
        self.text.clone()
    }
}

#[pyclass(module = "cartan", frozen)]
pub struct Problem {
    inner: ProblemFile,
}

impl Problem {
    fn policy(&self, max_loops: Option<usize>, seed: Option<u64>) -> Policy {
        let mut p = self.inner.policy.clone();
        if let Some(m) = max_loops {
            p.max_loops = m;
        }
        if let Some(s) = seed {
            p.seed = s;
        }
        p
    }
}

#[pymethods]
impl Problem {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Problem> {
        load_problem(&path).map(|inner| Problem { inner }).map_err(err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Problem> {
        parse_problem(text).map(|inner| Problem { inner }).map_err(err)
    }

    #[getter]
    fn title(&self) -> String {
        self.inner.title.clone()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.problem.n()
    }

    #[getter]
    fn group_dimension(&self) -> usize {
        self.inner.problem.group.r()
    }

    #[pyo3(signature = (max_loops=None, seed=None))]
    fn run(&self, py: Python<'_>, max_loops: Option<usize>, seed: Option<u64>) -> PyResult<Report> {
        let policy = self.policy(max_loops, seed);
        let (p, title) = (self.inner.problem.clone(), self.inner.title.clone());
        py.detach(|| run_loop(p, &title, &policy)).map(|inner| Report { inner }).map_err(err)
    }

    /// Characters of the jet encoding, completed to involution.
    #[pyo3(signature = (cap=8, seed=None))]
    fn jet_characters(&self, py: Python<'_>, cap: usize, seed: Option<u64>) -> PyResult<Characters> {
        let seed = seed.unwrap_or(self.inner.policy.seed);
        let p = self.inner.problem.clone();
        py.detach(|| {
            let enc = encode_gstructure(&p)?;
            let done = complete_to_involution(&enc.system, cap, seed)?;
            jet_characters(&done.system, seed)
        })
        .map(|inner| Characters { inner })
        .map_err(err)
    }

    #[pyo3(signature = (max_loops=None, seed=None))]
    fn crosscheck(&self, py: Python<'_>, max_loops: Option<usize>, seed: Option<u64>) -> PyResult<Crosscheck> {
        let policy = self.policy(max_loops, seed);
        let (p, title) = (self.inner.problem.clone(), self.inner.title.clone());
        let c = py.detach(|| crosscheck_characters(&p, &title, &policy)).map_err(err)?;
        Ok(Crosscheck { agree: c.agree, text: render_crosscheck(&c) })
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(title={:?}, dimension={}, group_dimension={})",
            self.inner.title,
            self.dimension(),
            self.group_dimension()
        )
    }
}

/// An exact rational expression in named coordinates.
#[pyclass(module = "cartan", name = "Expr", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyExpr {
    inner: CoreExpr,
}

fn coordinate(name: &str) -> PyResult<Symbol> {
    Symbol::coordinate(name).map_err(err)
}

#[pymethods]
impl PyExpr {
    #[staticmethod]
    fn parse(text: &str, coordinates: Vec<String>) -> PyResult<PyExpr> {
        let mut ctx = Context::new();
        for c in &coordinates {
            ctx.add_symbol(coordinate(c)?);
        }
        ctx.parse(text).map(|inner| PyExpr { inner }).map_err(err)
    }

    fn diff(&self, name: &str) -> PyResult<PyExpr> {
        Ok(PyExpr { inner: self.inner.differentiate(coordinate(name)?) })
    }

    /// Exact value at a point given as `{name: "p/q"}`.
    fn eval(&self, point: HashMap<String, String>) -> PyResult<String> {
        let mut at = HashMap::new();
        for (k, v) in &point {
            at.insert(coordinate(k)?.indet(), parse_q(v)?);
        }
        self.inner.eval(&at).map(|q| q.to_string()).map_err(err)
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn __add__(&self, o: &PyExpr) -> PyExpr {
        PyExpr { inner: &self.inner + &o.inner }
    }

    fn __sub__(&self, o: &PyExpr) -> PyExpr {
        PyExpr { inner: &self.inner - &o.inner }
    }

    fn __mul__(&self, o: &PyExpr) -> PyExpr {
        PyExpr { inner: &self.inner * &o.inner }
    }

    fn __truediv__(&self, o: &PyExpr) -> PyResult<PyExpr> {
        if o.inner.is_zero() {
            return Err(pyo3::exceptions::PyZeroDivisionError::new_err("division by zero expression"));
        }
        Ok(PyExpr { inner: &self.inner / &o.inner })
    }

    fn __neg__(&self) -> PyExpr {
        PyExpr { inner: -self.inner.clone() }
    }

    fn __eq__(&self, o: &PyExpr) -> bool {
        self.inner == o.inner
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr({:?})", self.inner.to_string())
    }
}

/// A system of PDEs solved for principal derivatives, e.g. `("u_xx", "u")`.
#[pyclass(module = "cartan", frozen)]
pub struct JetSystem {
    inner: CoreSystem,
}

#[pymethods]
impl JetSystem {
    #[new]
    #[pyo3(signature = (independents, dependents, equations, max_order=3))]
    fn new(
        independents: Vec<String>,
        dependents: Vec<String>,
        equations: Vec<(String, String)>,
        max_order: usize,
    ) -> PyResult<JetSystem> {
        let ind: Vec<&str> = independents.iter().map(String::as_str).collect();
        let dep: Vec<&str> = dependents.iter().map(String::as_str).collect();
        let sp = JetSpace::new(&ind, &dep).map_err(err)?;
        let mut ctx = Context::new();
        for &s in sp.independents().iter().chain(sp.dependents()) {
            ctx.add_symbol(s);
        }
        for k in 1..=max_order {
            for s in sp.jets_of_order(k).map_err(err)? {
                ctx.add_symbol(s);
            }
        }
        let mut eqs = Vec::new();
        for (l, r) in &equations {
            let lhs = ctx.symbol(l).ok_or_else(|| err(format!("`{l}` is not a jet of order at most {max_order}")))?;
            eqs.push((lhs, ctx.parse(r).map_err(err)?));
        }
        CoreSystem::new(&sp, eqs).map(|inner| JetSystem { inner }).map_err(err)
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[pyo3(signature = (seed=0))]
    fn characters(&self, py: Python<'_>, seed: u64) -> PyResult<Characters> {
        let sys = &self.inner;
        py.detach(|| jet_characters(sys, seed)).map(|inner| Characters { inner }).map_err(err)
    }

    /// Completes to involution; returns the completed system and the
    /// integrability conditions found at each step.
    #[pyo3(signature = (cap=8, seed=0))]
    fn complete(&self, py: Python<'_>, cap: usize, seed: u64) -> PyResult<(JetSystem, Vec<Vec<String>>)> {
        let sys = &self.inner;
        let done = py.detach(|| complete_to_involution(sys, cap, seed)).map_err(err)?;
        let conditions = done.log.iter().map(|s| s.conditions.clone()).collect();
        Ok((JetSystem { inner: done.system }, conditions))
    }

    fn equations(&self) -> Vec<(String, String)> {
        self.inner.equations().iter().map(|e| (e.lhs.name(), e.rhs.to_string())).collect()
    }
}

#[pymodule]
pub fn cartan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CartanError", m.py().get_type::<CartanError>())?;
    m.add_class::<Problem>()?;
    m.add_class::<Report>()?;
    m.add_class::<Characters>()?;
    m.add_class::<Crosscheck>()?;
    m.add_class::<PyExpr>()?;
    m.add_class::<JetSystem>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
