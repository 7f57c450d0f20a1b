//! Python bindings: parse and print models, flatten, simulate, replay and
//! analyze. Structured results come back as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyType;

use vcsys::analysis;
use vcsys::sim;

fn loads<'py>(py: Python<'py>, json: String) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (json,))
}

fn json_of<T: serde::Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A hierarchical system model.
#[pyclass(name = "Spec", module = "vcsys", frozen)]
struct PySpec {
    inner: vcsys::SystemSpec,
}

#[pymethods]
impl PySpec {
    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn level(&self) -> u32 {
        self.inner.level
    }

    #[getter]
    fn history_policy(&self) -> &'static str {
        self.inner.history_policy.as_str()
    }

    fn component_types(&self) -> Vec<String> {
        self.inner.components.iter().map(|c| c.type_id.clone()).collect()
    }

    #[pyo3(signature = (max_depth = vcsys::DEFAULT_MAX_DEPTH))]
    fn depth(&self, max_depth: u32) -> PyResult<u32> {
        vcsys::depth_with(&self.inner, max_depth).map_err(value_error)
    }

    /// Violations as `{scope, item, message}` dicts; empty when valid.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, json_of(&vcsys::validate(&self.inner).violations))
    }

    /// Canonical text form.
    fn print(&self) -> String {
        vcsys::print(&self.inner)
    }

    fn to_json(&self) -> String {
        vcsys::export_json_string(&self.inner)
    }

    #[pyo3(signature = (max_depth = vcsys::DEFAULT_MAX_DEPTH))]
    fn flatten(&self, max_depth: u32) -> PyResult<PyFlatGraph> {
        vcsys::flatten_with(&self.inner, max_depth)
            .map(|inner| PyFlatGraph { inner })
            .map_err(value_error)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Spec(id={:?}, level={}, components={})",
            self.inner.id,
            self.inner.level,
            self.inner.components.len()
        )
    }
}

/// A single-level graph produced by flattening.
#[pyclass(name = "FlatGraph", module = "vcsys", frozen)]
struct PyFlatGraph {
    inner: vcsys::FlatGraph,
}

#[pymethods]
impl PyFlatGraph {
    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn nodes(&self) -> Vec<String> {
        self.inner.nodes.iter().map(|n| n.id.clone()).collect()
    }

    /// `(id, tail, head, substance, capacity)` per edge.
    #[getter]
    fn edges(&self) -> Vec<(String, String, String, String, f64)> {
        self.inner
            .edges
            .iter()
            .map(|e| {
                (
                    e.id.clone(),
                    e.tail.clone(),
                    e.head.clone(),
                    e.knowledge.substance.clone(),
                    e.knowledge.capacity,
                )
            })
            .collect()
    }

    fn model_hash(&self) -> String {
        self.inner.model_hash()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, json_of(&self.inner))
    }

    fn to_dot(&self) -> String {
        vcsys::export_dot(&self.inner)
    }

    fn linkages<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let classes = analysis::classify_linkages(&self.inner).map_err(value_error)?;
        loads(py, json_of(&classes))
    }

    fn governance<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, json_of(&analysis::governance_centrality(&self.inner)))
    }

    fn reachability<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, json_of(&analysis::end_market_reachability(&self.inner)))
    }

    fn weak_linkages<'py>(&self, py: Python<'py>, threshold: f64) -> PyResult<Bound<'py, PyAny>> {
        let report = analysis::weak_linkage_report(&self.inner, threshold).map_err(value_error)?;
        loads(py, json_of(&report))
    }

    fn value_added<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, json_of(&analysis::value_added_profile(&self.inner)))
    }

    fn __repr__(&self) -> String {
        format!(
            "FlatGraph(name={:?}, nodes={}, edges={})",
            self.inner.name,
            self.inner.nodes.len(),
            self.inner.edges.len()
        )
    }
}

#[pyclass(name = "SimulationState", module = "vcsys", frozen)]
struct PyState {
    inner: sim::SimulationState,
}

#[pymethods]
impl PyState {
    #[getter]
    fn tick(&self) -> u64 {
        self.inner.tick
    }

    fn stock(&self, node: &str, substance: &str) -> f64 {
        self.inner.stock(node, substance)
    }

    fn received(&self, sink: &str, substance: &str) -> f64 {
        self.inner.received(sink, substance)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, json_of(&self.inner))
    }

    /// Bit-for-bit equality of every quantity.
    fn __eq__(&self, other: &Self) -> bool {
        self.inner.bit_eq(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!("SimulationState(tick={})", self.inner.tick)
    }
}

#[pyclass(name = "HistoryLog", module = "vcsys", frozen)]
struct PyLog {
    inner: sim::HistoryLog,
}

#[pymethods]
impl PyLog {
    fn header<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, json_of(self.inner.header()))
    }

    fn records<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        loads(py, json_of(self.inner.records()))
    }

    fn to_jsonl(&self) -> String {
        self.inner.to_jsonl()
    }

    #[classmethod]
    fn from_jsonl(_cls: &Bound<'_, PyType>, text: &str) -> PyResult<Self> {
        sim::HistoryLog::read_jsonl(text.as_bytes())
            .map(|inner| PyLog { inner })
            .map_err(value_error)
    }

    fn __len__(&self) -> usize {
        self.inner.records().len()
    }
}

/// Parses model text; raises ValueError listing every diagnostic.
#[pyfunction]
#[pyo3(signature = (text, source_name = "<input>", max_depth = vcsys::DEFAULT_MAX_DEPTH))]
fn parse(text: &str, source_name: &str, max_depth: u32) -> PyResult<PySpec> {
    vcsys::parse_with(source_name, text, max_depth)
        .into_spec()
        .map(|inner| PySpec { inner })
        .map_err(|diags| {
            let lines: Vec<String> = diags.iter().map(|d| format!("{source_name}:{d}")).collect();
            PyValueError::new_err(lines.join("\n"))
        })
}

/// Runs `steps` ticks; returns `(state, log)`.
#[pyfunction]
fn run(flat: &PyFlatGraph, steps: u64) -> PyResult<(PyState, PyLog)> {
    let (state, log) =
        sim::run(&flat.inner, steps).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((PyState { inner: state }, PyLog { inner: log }))
}

#[pyfunction]
fn replay(flat: &PyFlatGraph, log: &PyLog) -> PyResult<PyState> {
    sim::replay(&flat.inner, &log.inner)
        .map(|inner| PyState { inner })
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
fn conservation_check<'py>(
    py: Python<'py>,
    flat: &PyFlatGraph,
    state: &PyState,
    log: &PyLog,
) -> PyResult<Bound<'py, PyAny>> {
    let report = sim::conservation_check(&flat.inner, &state.inner, &log.inner);
    loads(py, json_of(&report))
}

#[pymodule]
#[pyo3(name = "vcsys")]
fn vcsys_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PyFlatGraph>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyLog>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(conservation_check, m)?)?;
    m.add("DEMO", vcsys::fixtures::DEMO)?;
    Ok(())
}
