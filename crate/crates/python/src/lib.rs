//! Python bindings: groups, sets, sumset operations, classification and searches.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyTuple;
use serde::Serialize;

use sumset_core::conv::{convolution_counts, popular_sumset, Backend};
use sumset_core::rational::parse_rational;
use sumset_core::search::{delta_scan, niveau_set, semicontinuity_oracle, ScanConfig, DEFAULT_BUDGET};
use sumset_core::sets::{difference_set, stabilizer, sumset};
use sumset_core::structure::{classify_pair, kneser_certificate};
use sumset_core::verify::kneser_suite;
use sumset_core::{Element, GSet, GroupSpec, Rational, SumsetError};

fn err(e: SumsetError) -> PyErr {
    match e {
        SumsetError::Anomaly(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Accepts ints, strings such as "1/4" and `fractions.Fraction`.
fn rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    let text = obj.str()?.to_string();
    parse_rational(&text).map_err(err)
}

fn fraction<'py>(py: Python<'py>, r: Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((*r.numer(), *r.denom()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A finite abelian group `Z/n1 × ... × Z/nk`; the last factor varies fastest.
#[pyclass(name = "Group", frozen, skip_from_py_object, module = "sumset")]
#[derive(Clone)]
struct PyGroup(GroupSpec);

#[pymethods]
impl PyGroup {
    /// `Group([2, 4])`, `Group(7)` or `Group("2x4")`.
    #[new]
    fn new(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        let g = if let Ok(n) = spec.extract::<usize>() {
            GroupSpec::cyclic(n)
        } else if let Ok(orders) = spec.extract::<Vec<usize>>() {
            GroupSpec::new(&orders)
        } else {
            spec.str()?.to_string().parse()
        };
        g.map(PyGroup).map_err(err)
    }

    #[getter]
    fn orders(&self) -> Vec<usize> {
        self.0.orders().to_vec()
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    fn digits(&self, x: usize) -> PyResult<Vec<usize>> {
        let x = element(&self.0, x)?;
        Ok(self.0.digits(x))
    }

    fn encode(&self, digits: Vec<usize>) -> PyResult<usize> {
        self.0.encode(&digits).map(|e| e.0).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.size()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0.same_as(&other.0)
    }

    fn __repr__(&self) -> String {
        format!("Group({:?})", self.0.orders())
    }

    fn __str__(&self) -> String {
        self.0.descriptor()
    }
}

fn element(g: &GroupSpec, x: usize) -> PyResult<Element> {
    if x < g.size() {
        Ok(Element(x))
    } else {
        Err(PyValueError::new_err(format!("element {x} out of range for a group of size {}", g.size())))
    }
}

/// A subset of a group, given as element indices or any text form the CLI accepts.
#[pyclass(name = "Set", frozen, skip_from_py_object, module = "sumset")]
#[derive(Clone)]
struct PySet(GSet);

#[pymethods]
impl PySet {
    #[new]
    #[pyo3(signature = (group, elements=None))]
    fn new(group: &PyGroup, elements: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let g = &group.0;
        let set = match elements {
            None => Ok(GSet::empty(g)),
            Some(obj) => {
                if let Ok(text) = obj.extract::<String>() {
                    GSet::parse(g, &text)
                } else {
                    GSet::from_indices(g, obj.extract::<Vec<usize>>()?)
                }
            }
        };
        set.map(PySet).map_err(err)
    }

    #[getter]
    fn group(&self) -> PyGroup {
        PyGroup(self.0.group().clone())
    }

    fn elements(&self) -> Vec<usize> {
        self.0.indices()
    }

    /// `|A| / |G|` as a `fractions.Fraction`.
    fn measure<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, self.0.measure())
    }

    fn translate(&self, x: usize) -> PyResult<Self> {
        Ok(PySet(self.0.translate(element(self.0.group(), x)?)))
    }

    fn hex(&self) -> String {
        self.0.to_hex()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __contains__(&self, x: usize) -> bool {
        x < self.0.group().size() && self.0.contains(Element(x))
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        sumset(&self.0, &other.0).map(PySet).map_err(err)
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        difference_set(&self.0, &other.0).map(PySet).map_err(err)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Set({}, {:?})", self.0.group().descriptor(), self.0.indices())
    }
}

/// `A + B`.
#[pyfunction(name = "sumset")]
fn py_sumset(a: &PySet, b: &PySet) -> PyResult<PySet> {
    sumset(&a.0, &b.0).map(PySet).map_err(err)
}

/// The period subgroup `{g : g + C = C}` as a set.
#[pyfunction(name = "stabilizer")]
fn py_stabilizer(c: &PySet) -> PySet {
    PySet(stabilizer(&c.0).members().clone())
}

/// Elements with more than `delta·|G|` representations `a + b`.
#[pyfunction(name = "popular_sumset")]
fn py_popular_sumset(a: &PySet, b: &PySet, delta: &Bound<'_, PyAny>) -> PyResult<PySet> {
    popular_sumset(&a.0, &b.0, rational(delta)?).map(PySet).map_err(err)
}

/// Representation counts `|{(a, b) : a + b = t}|` indexed by `t`.
#[pyfunction(name = "convolution_counts")]
#[pyo3(signature = (a, b, backend="auto"))]
fn py_convolution_counts(a: &PySet, b: &PySet, backend: &str) -> PyResult<Vec<u64>> {
    let backend: Backend = backend.parse().map_err(err)?;
    convolution_counts(&a.0, &b.0, backend).map(|t| t.counts).map_err(err)
}

/// Kneser certificate for `(A, B)` as a dict, or `None` when either set is empty.
#[pyfunction(name = "kneser_certificate")]
fn py_kneser_certificate<'py>(py: Python<'py>, a: &PySet, b: &PySet) -> PyResult<Bound<'py, PyAny>> {
    match kneser_certificate(&a.0, &b.0).map_err(err)? {
        Some(c) => to_py(py, &c),
        None => Ok(py.None().into_bound(py)),
    }
}

/// Structural classification of `(A, B)`; returns the JSON result as a dict.
#[pyfunction(name = "classify")]
fn py_classify<'py>(
    py: Python<'py>,
    a: &PySet,
    b: &PySet,
    epsilon: &Bound<'_, PyAny>,
    d: usize,
    delta: &Bound<'_, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let r = classify_pair(&a.0, &b.0, rational(epsilon)?, d, rational(delta)?).map_err(err)?;
    to_py(py, &r)
}

/// Sets `S`, `T` within `epsilon` of `A`, `B` with `|S + T| <= |S| + |T|`, or `None`.
#[pyfunction(name = "semicontinuity_oracle")]
#[pyo3(signature = (a, b, epsilon, delta, budget=DEFAULT_BUDGET))]
fn py_oracle<'py>(
    py: Python<'py>,
    a: &PySet,
    b: &PySet,
    epsilon: &Bound<'_, PyAny>,
    delta: &Bound<'_, PyAny>,
    budget: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let found = semicontinuity_oracle(&a.0, &b.0, rational(epsilon)?, rational(delta)?, budget).map_err(err)?;
    match found {
        Some(w) => to_py(py, &w),
        None => Ok(py.None().into_bound(py)),
    }
}

/// Hamming-ball set in `(Z/2)^N` together with its hyperplane report.
#[pyfunction(name = "niveau_set")]
fn py_niveau_set<'py>(py: Python<'py>, n: usize, shift: &Bound<'_, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let r = niveau_set(n, rational(shift)?).map_err(err)?;
    to_py(py, &r)
}

/// Classifies every small-doubling pair of `group`; returns `(rows, summary)`.
#[pyfunction(name = "delta_scan")]
#[pyo3(signature = (group, epsilon, d, up_to_symmetry=false, max_gap=None))]
fn py_delta_scan<'py>(
    py: Python<'py>,
    group: &PyGroup,
    epsilon: &Bound<'_, PyAny>,
    d: usize,
    up_to_symmetry: bool,
    max_gap: Option<&Bound<'_, PyAny>>,
) -> PyResult<Bound<'py, PyTuple>> {
    let mut cfg = ScanConfig::new(rational(epsilon)?, d);
    cfg.up_to_symmetry = up_to_symmetry;
    cfg.max_gap = max_gap.map(rational).transpose()?;
    let report = py.detach(|| delta_scan(&group.0, &cfg)).map_err(err)?;
    PyTuple::new(py, [to_py(py, &report.rows)?, to_py(py, &report.summary)?])
}

/// Exhaustive Kneser check over every group of order at most `max_size`.
#[pyfunction(name = "kneser_suite")]
fn py_kneser_suite<'py>(py: Python<'py>, max_size: usize) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| kneser_suite(max_size)).map_err(err)?;
    to_py(py, &r)
}

#[pymodule]
#[pyo3(name = "sumset")]
fn sumset_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGroup>()?;
    m.add_class::<PySet>()?;
    m.add_function(wrap_pyfunction!(py_sumset, m)?)?;
    m.add_function(wrap_pyfunction!(py_stabilizer, m)?)?;
    m.add_function(wrap_pyfunction!(py_popular_sumset, m)?)?;
    m.add_function(wrap_pyfunction!(py_convolution_counts, m)?)?;
    m.add_function(wrap_pyfunction!(py_kneser_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(py_classify, m)?)?;
    m.add_function(wrap_pyfunction!(py_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(py_niveau_set, m)?)?;
    m.add_function(wrap_pyfunction!(py_delta_scan, m)?)?;
    m.add_function(wrap_pyfunction!(py_kneser_suite, m)?)?;
    Ok(())
}
