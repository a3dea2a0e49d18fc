//! Python bindings. All types live in one process-wide store.

use std::sync::LazyLock;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use safelam_core::church::{self, Alphabet};
use safelam_core::compiler::{self, ORDER_CONSTANT};
use safelam_core::normalize::{self, Budget};
use safelam_core::safety;
use safelam_core::starfree::{self, StarFreeExpr};
use safelam_core::{infer, infer_at, Ty, TypeStore};

static STORE: LazyLock<TypeStore> = LazyLock::new(TypeStore::new);

create_exception!(safelam, SafelamError, PyException);
create_exception!(safelam, ParseError, SafelamError);
create_exception!(safelam, TypeError, SafelamError);
create_exception!(safelam, BudgetError, SafelamError);

fn parse_err(e: impl ToString) -> PyErr {
    ParseError::new_err(e.to_string())
}

fn type_err(e: impl ToString) -> PyErr {
    TypeError::new_err(e.to_string())
}

fn norm_err(e: normalize::NormalizeError) -> PyErr {
    match e {
        normalize::NormalizeError::BudgetExceeded { .. } => BudgetError::new_err(e.to_string()),
        _ => type_err(e),
    }
}

fn church_err(e: church::ChurchError) -> PyErr {
    match e {
        church::ChurchError::Normalize(n) => norm_err(n),
        e => SafelamError::new_err(e.to_string()),
    }
}

fn budget(steps: Option<u64>, size: Option<u64>) -> Budget {
    let d = Budget::default();
    Budget {
        steps: steps.unwrap_or(d.steps),
        size: size.unwrap_or(d.size),
    }
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn alphabet(letters: &str) -> PyResult<Alphabet> {
    Alphabet::parse(letters).map_err(parse_err)
}

#[pyclass(name = "Type", frozen, eq, hash, from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct PyType(Ty);

#[pymethods]
impl PyType {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        STORE.parse(text).map(PyType).map_err(parse_err)
    }

    #[staticmethod]
    fn base() -> Self {
        PyType(STORE.base())
    }

    fn arrow(&self, result: &PyType) -> Self {
        PyType(STORE.arrow(self.0, result.0))
    }

    /// `self` with every `o` replaced by `b`.
    fn subst_base(&self, b: &PyType) -> Self {
        PyType(STORE.subst_base(self.0, b.0))
    }

    #[getter]
    fn degree(&self) -> u32 {
        STORE.degree(self.0)
    }

    #[getter]
    fn order(&self) -> u32 {
        STORE.order(self.0)
    }

    #[getter]
    fn homogeneous(&self) -> bool {
        STORE.is_homogeneous(self.0)
    }

    /// Tree size, or None when it does not fit in 64 bits.
    #[getter]
    fn size(&self) -> Option<u64> {
        STORE.unfold_size(self.0).ok()
    }

    fn __str__(&self) -> String {
        STORE.display(self.0)
    }

    fn __repr__(&self) -> String {
        format!("Type({:?})", STORE.display(self.0))
    }
}

#[pyclass(name = "Term", frozen, from_py_object)]
#[derive(Clone)]
struct PyTerm(safelam_core::Term);

#[pymethods]
impl PyTerm {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        safelam_core::parse_term(text, &STORE).map(PyTerm).map_err(parse_err)
    }

    #[getter]
    fn size(&self) -> u64 {
        self.0.size()
    }

    #[getter]
    fn height(&self) -> u64 {
        self.0.metrics().height
    }

    fn free_vars(&self) -> Vec<String> {
        self.0.free_vars().into_iter().collect()
    }

    fn is_beta_normal(&self) -> bool {
        self.0.is_beta_normal()
    }

    fn alpha_eq(&self, other: &PyTerm) -> bool {
        safelam_core::alpha_eq(&self.0, &other.0)
    }

    fn __eq__(&self, other: &PyTerm) -> bool {
        self.alpha_eq(other)
    }

    /// Principal type and the types assigned to free variables.
    fn infer(&self) -> PyResult<(PyType, Vec<(String, PyType)>)> {
        let t = infer(&STORE, &self.0).map_err(type_err)?;
        Ok((PyType(t.ty), t.context.into_iter().map(|(x, a)| (x, PyType(a))).collect()))
    }

    #[pyo3(signature = (eta=false, steps=None, size=None))]
    fn normalize(&self, eta: bool, steps: Option<u64>, size: Option<u64>) -> PyResult<PyTerm> {
        let b = budget(steps, size);
        let typing = infer(&STORE, &self.0).map_err(type_err)?;
        let mut r = normalize::normalize_parallel(&STORE, &typing, &b).map_err(norm_err)?.result.erase();
        if eta {
            r = normalize::eta_reduce(&r).map_err(norm_err)?;
        }
        Ok(PyTerm(r))
    }

    /// Leftmost-outermost reduction; works on untyped terms.
    #[pyo3(signature = (steps=None, size=None))]
    fn normalize_naive(&self, steps: Option<u64>, size: Option<u64>) -> PyResult<PyTerm> {
        normalize::normalize_naive(&self.0, &budget(steps, size)).map(PyTerm).map_err(norm_err)
    }

    #[pyo3(signature = (other, eta=false, steps=None, size=None))]
    fn convertible(&self, other: &PyTerm, eta: bool, steps: Option<u64>, size: Option<u64>) -> PyResult<bool> {
        let b = budget(steps, size);
        if eta {
            normalize::beta_eta_convertible(&STORE, &self.0, &other.0, &b)
        } else {
            normalize::beta_convertible(&STORE, &self.0, &other.0, &b)
        }
        .map_err(norm_err)
    }

    /// Safety report as a dict; mode is "safe", "long-safe" or "hls".
    #[pyo3(signature = (ty, mode="safe"))]
    fn check_safety<'py>(&self, py: Python<'py>, ty: &PyType, mode: &str) -> PyResult<Bound<'py, PyAny>> {
        let report = match mode {
            "hls" => safety::check_hls(&STORE, &self.0, ty.0).map_err(type_err)?,
            "safe" | "long-safe" => {
                let typing = infer_at(&STORE, &self.0, ty.0).map_err(type_err)?;
                if mode == "safe" {
                    safety::check_safe(&STORE, &typing)
                } else {
                    safety::check_long_safe(&STORE, &typing)
                }
                .map_err(type_err)?
            }
            m => return Err(SafelamError::new_err(format!("unknown mode {m:?}"))),
        };
        to_py(py, &report.to_json(&STORE))
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Term({:?})", self.0.to_string())
    }
}

#[pyclass(name = "StarFree", frozen, from_py_object)]
#[derive(Clone)]
struct PyStarFree(StarFreeExpr);

#[pymethods]
impl PyStarFree {
    #[new]
    fn new(expr: &str, alphabet_letters: &str) -> PyResult<Self> {
        starfree::parse_expr(expr, &alphabet(alphabet_letters)?).map(PyStarFree).map_err(parse_err)
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    fn member(&self, word: &str) -> PyResult<bool> {
        if let Some(c) = word.chars().find(|&c| !self.0.alphabet.contains(c)) {
            return Err(ParseError::new_err(format!("letter {c:?} not in the alphabet")));
        }
        Ok(starfree::member(&self.0, word))
    }

    /// Least word of length at most `max_len` on which the two disagree.
    #[pyo3(signature = (other, max_len=6, cap=1_000_000))]
    fn first_difference(&self, other: &PyStarFree, max_len: usize, cap: u64) -> PyResult<Option<String>> {
        starfree::first_difference(&self.0, &other.0, max_len, cap).map_err(|e| BudgetError::new_err(e.to_string()))
    }

    #[pyo3(signature = (max_len, cap=1_000_000))]
    fn shortest_word(&self, max_len: usize, cap: u64) -> PyResult<Option<String>> {
        starfree::nonempty_up_to(&self.0, max_len, cap).map_err(|e| BudgetError::new_err(e.to_string()))
    }

    /// The compiled term `t_E`.
    fn compile(&self) -> PyTerm {
        PyTerm(compiler::compile(&STORE, &self.0).term)
    }

    /// Certificate of the compilation as a dict.
    fn certificate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let c = compiler::compile(&STORE, &self.0);
        let cert = compiler::certificate(&STORE, &self.0, &c);
        to_py(py, &serde_json::to_value(cert).expect("certificate serializes"))
    }

    /// Builds `b_E` for tower height `n` and decodes its normal form.
    #[pyo3(signature = (n, steps=None, size=None))]
    fn reduce(&self, n: usize, steps: Option<u64>, size: Option<u64>) -> PyResult<bool> {
        let inst = compiler::build_b(&STORE, &self.0, n);
        church::decode_bool(&inst.term, &budget(steps, size)).map_err(church_err)
    }

    fn reduction_term(&self, n: usize) -> PyTerm {
        PyTerm(compiler::build_b(&STORE, &self.0, n).term)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[pyfunction]
fn encode_word(alphabet_letters: &str, word: &str) -> PyResult<(PyTerm, PyType)> {
    let v = church::encode_word(&STORE, &alphabet(alphabet_letters)?, word).map_err(church_err)?;
    Ok((PyTerm(v.term), PyType(v.claimed_type)))
}

#[pyfunction]
#[pyo3(signature = (term, alphabet_letters, steps=None, size=None))]
fn decode_word(term: &PyTerm, alphabet_letters: &str, steps: Option<u64>, size: Option<u64>) -> PyResult<String> {
    church::decode_word(&term.0, &alphabet(alphabet_letters)?, &budget(steps, size)).map_err(church_err)
}

#[pyfunction]
#[pyo3(signature = (term, steps=None, size=None))]
fn decode_bool(term: &PyTerm, steps: Option<u64>, size: Option<u64>) -> PyResult<bool> {
    church::decode_bool(&term.0, &budget(steps, size)).map_err(church_err)
}

#[pyfunction]
fn bool_term(b: bool) -> PyTerm {
    PyTerm(church::bool_term(b))
}

#[pyfunction]
fn nat(n: usize) -> PyTerm {
    PyTerm(church::nat_term(n))
}

#[pyfunction]
fn tow(n: usize) -> PyTerm {
    PyTerm(church::tow_term(n))
}

/// `tower(n)`, or None past 64 bits.
#[pyfunction]
fn tower(n: usize) -> Option<u64> {
    church::tower(n)
}

#[pyfunction]
fn size_constant(alphabet_letters: &str) -> PyResult<u64> {
    Ok(compiler::size_constant(&alphabet(alphabet_letters)?))
}

#[pymodule]
fn safelam(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("SafelamError", py.get_type::<SafelamError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("TypeError", py.get_type::<TypeError>())?;
    m.add("BudgetError", py.get_type::<BudgetError>())?;
    m.add("ORDER_CONSTANT", ORDER_CONSTANT)?;
    m.add_class::<PyType>()?;
    m.add_class::<PyTerm>()?;
    m.add_class::<PyStarFree>()?;
    m.add_function(wrap_pyfunction!(encode_word, m)?)?;
    m.add_function(wrap_pyfunction!(decode_word, m)?)?;
    m.add_function(wrap_pyfunction!(decode_bool, m)?)?;
    m.add_function(wrap_pyfunction!(bool_term, m)?)?;
    m.add_function(wrap_pyfunction!(nat, m)?)?;
    m.add_function(wrap_pyfunction!(tow, m)?)?;
    m.add_function(wrap_pyfunction!(tower, m)?)?;
    m.add_function(wrap_pyfunction!(size_constant, m)?)?;
    Ok(())
}
