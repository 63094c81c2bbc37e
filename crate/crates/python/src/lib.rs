//! Python bindings: character tables, the solver, verification and prime
//! graph reports. Structured results come back as plain Python objects built
//! from the library's JSON output.

use std::collections::BTreeMap;
use std::sync::Arc;

use helix_core::chartab::{parse_table, CharacterTable, PaChain};
use helix_core::cyclo::CycValue;
use helix_core::help::{self, SolutionStore};
use helix_core::pq::{self, PairPlan, PqOptions};
use helix_core::psl2gen::{gen_table, gen_table_with_brauer3, Psl2Params, Variant};
use helix_core::{cli, datasets};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyComplex, PyTuple};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    let text: String = if let Ok(s) = obj.extract::<String>() {
        s
    } else {
        obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?
    };
    serde_json::from_str(&text).map_err(err)
}

/// Exact element of a cyclotomic field.
#[pyclass(name = "Cyc", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyCyc(CycValue);

#[pymethods]
impl PyCyc {
    /// `sum c * zeta_n^e` from `(e, c)` pairs with integer c.
    #[new]
    #[pyo3(signature = (n, terms))]
    fn new(n: u64, terms: Vec<(i64, i64)>) -> PyResult<Self> {
        let mut v = CycValue::zero();
        for (e, c) in terms {
            v = v.add(&CycValue::root_of_unity(n, e).map_err(err)?.scale_int(c));
        }
        Ok(PyCyc(v))
    }

    #[staticmethod]
    fn root(n: u64, e: i64) -> PyResult<Self> {
        CycValue::root_of_unity(n, e).map(PyCyc).map_err(err)
    }

    #[staticmethod]
    fn integer(v: i64) -> Self {
        PyCyc(CycValue::from_int(v))
    }

    #[getter]
    fn conductor(&self) -> u64 {
        self.0.conductor()
    }

    fn galois(&self, k: i64) -> PyResult<Self> {
        self.0.galois(k).map(PyCyc).map_err(err)
    }

    fn conj(&self) -> Self {
        PyCyc(self.0.conj())
    }

    /// Trace to Q as a `(numerator, denominator)` pair.
    fn trace(&self) -> (String, String) {
        let t = self.0.trace_to_q();
        (t.numer().to_string(), t.denom().to_string())
    }

    fn to_int(&self) -> Option<i64> {
        self.0.to_i64()
    }

    fn __complex__<'py>(&self, py: Python<'py>) -> Bound<'py, PyComplex> {
        let (re, im) = self.0.approx();
        PyComplex::from_doubles(py, re, im)
    }

    fn __add__(&self, other: &PyCyc) -> Self {
        PyCyc(self.0.add(&other.0))
    }

    fn __sub__(&self, other: &PyCyc) -> Self {
        PyCyc(self.0.sub(&other.0))
    }

    fn __mul__(&self, other: &PyCyc) -> Self {
        PyCyc(self.0.mul(&other.0))
    }

    fn __neg__(&self) -> Self {
        PyCyc(self.0.neg())
    }

    fn __repr__(&self) -> String {
        format!("Cyc({})", self.0)
    }
}

#[pyclass(name = "SolutionSet", frozen)]
struct PySolutionSet {
    table: Arc<CharacterTable>,
    set: Arc<help::SolutionSet>,
}

#[pymethods]
impl PySolutionSet {
    #[getter]
    fn status(&self) -> &'static str {
        self.set.status.as_str()
    }

    #[getter]
    fn count(&self) -> usize {
        self.set.count()
    }

    #[getter]
    fn unit_order(&self) -> u64 {
        self.set.unit_order
    }

    /// Chains as dicts `{"unit_order": n, "entries": {m: {class: value}}}`.
    fn chains<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        self.set.chains.iter().map(|c| to_py(py, &c.to_json(&self.table))).collect()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.set.to_json(&self.table))
    }

    fn to_text(&self) -> String {
        self.set.to_text(&self.table)
    }

    fn __len__(&self) -> usize {
        self.set.count()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolutionSet(order={}, status={}, count={})",
            self.set.unit_order,
            self.set.status.as_str(),
            self.set.count()
        )
    }
}

#[pyclass(name = "CharacterTable", frozen)]
struct PyTable(Arc<CharacterTable>);

#[pymethods]
impl PyTable {
    /// Parse a table in the JSON file format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        parse_table(text).map(|t| PyTable(Arc::new(t))).map_err(err)
    }

    /// Character table of PSL(2,q) (`family="psl2"`) or PGL(2,q) (`"pgl2"`).
    #[staticmethod]
    #[pyo3(signature = (family, q, with_brauer3 = false))]
    fn generate(family: &str, q: u64, with_brauer3: bool) -> PyResult<Self> {
        let v: Variant = family.parse().map_err(err)?;
        let p = Psl2Params::new(v, q).map_err(err)?;
        let t = if with_brauer3 { gen_table_with_brauer3(p) } else { gen_table(p) };
        t.map(|t| PyTable(Arc::new(t))).map_err(err)
    }

    /// One of the embedded partial tables, see `datasets()`.
    #[staticmethod]
    fn embedded(name: &str) -> PyResult<Self> {
        datasets::load(name).map(|t| PyTable(Arc::new(t))).map_err(err)
    }

    #[getter]
    fn group_name(&self) -> String {
        self.0.group_name.clone()
    }

    #[getter]
    fn classes(&self) -> Vec<(String, u64)> {
        self.0.classes().iter().map(|c| (c.name.clone(), c.element_order)).collect()
    }

    #[getter]
    fn characters(&self) -> Vec<String> {
        self.0.characters().iter().map(|c| c.name.clone()).collect()
    }

    /// Value of a character on a class, `None` where the table has no entry.
    fn value(&self, character: &str, class: &str) -> PyResult<Option<PyCyc>> {
        let c = self.0.character_index(character).ok_or_else(|| err(format!("no character {character:?}")))?;
        let k = self.0.class_by_name(class).map_err(err)?;
        Ok(self.0.character(c).value(k).cloned().map(PyCyc))
    }

    fn element_orders(&self) -> Vec<u64> {
        self.0.element_orders()
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    /// `(passed, report_text)`.
    fn validate(&self) -> (bool, String) {
        let r = self.0.validate();
        (r.passed(), r.to_string())
    }

    #[pyo3(signature = (order, chars = "all", s_constant = None, cap = help::DEFAULT_CAP))]
    fn solve(&self, py: Python<'_>, order: u64, chars: &str, s_constant: Option<u64>, cap: usize) -> PyResult<PySolutionSet> {
        let t = self.0.clone();
        let sel = t.select_characters(chars).map_err(err)?;
        let set = py
            .detach(|| {
                let store = SolutionStore::new();
                match s_constant {
                    Some(s) if s == 0 || !order.is_multiple_of(s) => Err(format!("s = {s} does not divide {order}")),
                    Some(s) => help::solve_s_constant(&t, &sel, s, order / s, &store, cap).map_err(|e| e.to_string()),
                    None => help::solve_order(&t, &sel, order, &store, cap).map_err(|e| e.to_string()),
                }
            })
            .map_err(err)?;
        Ok(PySolutionSet { table: t, set })
    }

    /// Check one chain (dict or JSON string); returns the report as a dict.
    #[pyo3(signature = (order, chain, chars = "all"))]
    fn verify<'py>(&self, py: Python<'py>, order: u64, chain: &Bound<'py, PyAny>, chars: &str) -> PyResult<Bound<'py, PyAny>> {
        let sel = self.0.select_characters(chars).map_err(err)?;
        let chain = PaChain::from_json(&self.0, &from_py(chain)?).map_err(err)?;
        let r = help::verify_chain(&self.0, &sel, order, &chain).map_err(err)?;
        to_py(py, &r.to_json())
    }

    /// Prime graph report. `plans` maps `(p, q)` to a selection string or to
    /// `(selection, s)` for s-constant mode.
    #[pyo3(signature = (chars = "all", pairs = None, plans = None, cap = help::DEFAULT_CAP, assume_complete_orders = false))]
    fn pq<'py>(
        &self,
        py: Python<'py>,
        chars: &str,
        pairs: Option<Vec<(u64, u64)>>,
        plans: Option<BTreeMap<(u64, u64), Bound<'py, PyAny>>>,
        cap: usize,
        assume_complete_orders: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut opts = PqOptions {
            default_characters: chars.to_string(),
            pairs,
            cap,
            assume_complete_orders,
            ..PqOptions::default()
        };
        for ((p, q), plan) in plans.unwrap_or_default() {
            let (p, q) = (p.min(q), p.max(q));
            let pl = if let Ok(sel) = plan.extract::<String>() {
                PairPlan {
                    characters: sel,
                    s_constant: None,
                }
            } else {
                let (sel, s): (String, u64) = plan.extract()?;
                let other = if s == p { q } else { p };
                PairPlan {
                    characters: sel,
                    s_constant: Some((s, other)),
                }
            };
            opts.plans.insert((p, q), pl);
        }
        let t = self.0.clone();
        let r = py.detach(|| pq::pq_check(&t, &opts)).map_err(err)?;
        to_py(py, &r.to_json(&t))
    }

    fn __repr__(&self) -> String {
        format!(
            "CharacterTable({:?}, {} classes, {} characters)",
            self.0.group_name,
            self.0.classes().len(),
            self.0.characters().len()
        )
    }
}

/// Names and descriptions of the embedded tables.
#[pyfunction]
fn datasets_list() -> Vec<(&'static str, &'static str)> {
    datasets::DATASETS.iter().map(|d| (d.0, d.1)).collect()
}

/// Run the command line front end in-process: `(exit_code, stdout, stderr)`.
#[pyfunction]
#[pyo3(signature = (*args))]
fn run_cli(py: Python<'_>, args: &Bound<'_, PyTuple>) -> PyResult<(i32, String, String)> {
    let mut argv = vec!["helix".to_string()];
    for a in args.iter() {
        argv.push(a.extract()?);
    }
    let out = py.detach(|| cli::run(argv));
    Ok((out.code, out.stdout, out.stderr))
}

#[pymodule]
fn helix(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCyc>()?;
    m.add_class::<PyTable>()?;
    m.add_class::<PySolutionSet>()?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("datasets", wrap_pyfunction!(datasets_list, m)?)?;
    m.add("DEFAULT_CAP", help::DEFAULT_CAP)?;
    Ok(())
}
