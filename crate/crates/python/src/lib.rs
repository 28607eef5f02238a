//! Python bindings for the homodiff library.
//!
//! Exposes graphs, label stores, the diffusion run, assignment, homophily
//! matrices and the evaluation report. Node arguments are internal indices;
//! `Graph.ids()` and `Graph.index_of()` translate to and from external ids.

use std::fs::File;
use std::io::BufReader;

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;

use homodiff::assignment::{self, TargetDistribution};
use homodiff::diffusion::{self, DiffusionParams, StateMatrix};
use homodiff::evaluation::{self, Bucketing};
use homodiff::graph::{self, Delimiter, LoadOptions, Node, NodeIdMap};
use homodiff::homophily;
use homodiff::labels::{self, AgeBinning, LabelStore};
use homodiff::synth::{self, SynthConfig};
use homodiff::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::NodeOutOfRange { .. } => PyIndexError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn open(path: &str) -> PyResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PyIOError::new_err(format!("{path}: {e}")))
}

fn delimiter(s: &str) -> PyResult<Delimiter> {
    s.parse().map_err(py_err)
}

fn binning(bounds: Option<Vec<u32>>) -> PyResult<AgeBinning> {
    match bounds {
        Some(b) => AgeBinning::new(b, None).map_err(py_err),
        None => Ok(AgeBinning::default()),
    }
}

/// Undirected graph over dense node indices.
#[pyclass(frozen, name = "Graph", module = "homodiff_py")]
struct PyGraph {
    graph: graph::Graph,
    map: NodeIdMap,
}

#[pymethods]
impl PyGraph {
    /// Build from `(a, b)` index pairs; self-loops are dropped and duplicates collapse.
    #[new]
    fn new(node_count: usize, edges: Vec<(Node, Node)>) -> PyResult<Self> {
        let (graph, _) = graph::Graph::from_edges(node_count, &edges).map_err(py_err)?;
        Ok(PyGraph {
            graph,
            map: NodeIdMap::identity(node_count),
        })
    }

    /// Load a `src,dst[,weight]` edge list file.
    #[staticmethod]
    #[pyo3(signature = (path, delimiter = ","))]
    fn load(path: &str, delimiter: &str) -> PyResult<Self> {
        let opts = LoadOptions {
            delimiter: self::delimiter(delimiter)?,
            ..Default::default()
        };
        let (graph, map, _) = graph::load_edge_list(open(path)?, opts).map_err(py_err)?;
        Ok(PyGraph { graph, map })
    }

    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    fn neighbors(&self, x: usize) -> PyResult<Vec<Node>> {
        self.graph.neighbors(x).map(<[Node]>::to_vec).map_err(py_err)
    }

    fn degree(&self, x: usize) -> PyResult<usize> {
        self.graph.degree(x).map_err(py_err)
    }

    fn edges(&self) -> Vec<(Node, Node)> {
        self.graph.edges().collect()
    }

    /// External id of every node, by index.
    fn ids(&self) -> Vec<String> {
        self.map.ids().to_vec()
    }

    fn index_of(&self, id: &str) -> Option<Node> {
        self.map.get(id)
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={})",
            self.graph.node_count(),
            self.graph.edge_count()
        )
    }
}

/// Partial node → category map.
#[pyclass(frozen, name = "Labels", module = "homodiff_py")]
struct PyLabels {
    store: LabelStore,
}

#[pymethods]
impl PyLabels {
    #[new]
    fn new(d: usize, categories: Vec<Option<usize>>) -> PyResult<Self> {
        Ok(PyLabels {
            store: LabelStore::from_categories(d, &categories).map_err(py_err)?,
        })
    }

    /// Load `id,age` lines for the ids of `graph`, binning ages by `bounds`
    /// (inclusive upper bounds; default 24, 34, 50).
    #[staticmethod]
    #[pyo3(signature = (path, graph, delimiter = ",", bounds = None))]
    fn load(path: &str, graph: &PyGraph, delimiter: &str, bounds: Option<Vec<u32>>) -> PyResult<Self> {
        let (store, _) = labels::load_ground_truth(
            open(path)?,
            &graph.map,
            &binning(bounds)?,
            self::delimiter(delimiter)?,
        )
        .map_err(py_err)?;
        Ok(PyLabels { store })
    }

    fn get(&self, x: Node) -> Option<usize> {
        self.store.get(x)
    }

    fn d(&self) -> usize {
        self.store.d()
    }

    fn nodes(&self) -> Vec<Node> {
        self.store.nodes()
    }

    fn histogram(&self) -> Vec<usize> {
        self.store.histogram()
    }

    fn __len__(&self) -> usize {
        self.store.len()
    }
}

/// Row-per-node probability matrix.
#[pyclass(frozen, name = "State", module = "homodiff_py")]
struct PyState {
    state: StateMatrix,
}

#[pymethods]
impl PyState {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let d = rows.first().map_or(0, Vec::len);
        Ok(PyState {
            state: StateMatrix::from_rows(d, &rows).map_err(py_err)?,
        })
    }

    fn row(&self, x: usize) -> PyResult<Vec<f64>> {
        if x >= self.state.node_count() {
            return Err(PyIndexError::new_err(format!("row {x} out of range")));
        }
        Ok(self.state.row(x).to_vec())
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.state.node_count()).map(|x| self.state.row(x).to_vec()).collect()
    }

    fn d(&self) -> usize {
        self.state.d()
    }

    fn __len__(&self) -> usize {
        self.state.node_count()
    }
}

#[pyfunction]
#[pyo3(signature = (age, bounds = None))]
fn bin_age(age: i64, bounds: Option<Vec<u32>>) -> PyResult<usize> {
    labels::bin_age(age, &binning(bounds)?).map_err(py_err)
}

/// Returns `(seeds, validation)` index lists.
#[pyfunction]
#[pyo3(signature = (labels, fraction = 0.2, seed = 0, stratified = false))]
fn split_train_validation(
    labels: &PyLabels,
    fraction: f64,
    seed: u64,
    stratified: bool,
) -> PyResult<(Vec<Node>, Vec<Node>)> {
    let s = labels::split_train_validation(&labels.store, fraction, seed, stratified)
        .map_err(py_err)?;
    Ok((s.seeds, s.validation))
}

#[pyfunction]
fn init_state(graph: &PyGraph, seeds: Vec<Node>, labels: &PyLabels, d: usize) -> PyResult<PyState> {
    let state = diffusion::init_state(&graph.graph, &seeds, &labels.store, d).map_err(py_err)?;
    Ok(PyState { state })
}

#[pyfunction]
#[pyo3(signature = (graph, current, initial, lam))]
fn step(graph: &PyGraph, current: &PyState, initial: &PyState, lam: f64) -> PyResult<PyState> {
    let state = diffusion::step(&graph.graph, &current.state, &initial.state, lam).map_err(py_err)?;
    Ok(PyState { state })
}

#[pyfunction]
#[pyo3(signature = (graph, state_t, state_prev, initial, lam))]
fn laplacian_residual(
    graph: &PyGraph,
    state_t: &PyState,
    state_prev: &PyState,
    initial: &PyState,
    lam: f64,
) -> PyResult<f64> {
    diffusion::laplacian_residual(&graph.graph, &state_t.state, &state_prev.state, &initial.state, lam)
        .map_err(py_err)
}

/// Run the diffusion; returns `(state, iterations, final_delta, converged)`.
#[pyfunction]
#[pyo3(signature = (graph, seeds, labels, lam = 0.5, max_iters = 20, tol = 1e-6, clamp_seeds = false))]
fn diffuse(
    graph: &PyGraph,
    seeds: Vec<Node>,
    labels: &PyLabels,
    lam: f64,
    max_iters: usize,
    tol: f64,
    clamp_seeds: bool,
) -> PyResult<(PyState, usize, f64, bool)> {
    let params = DiffusionParams {
        lambda: lam,
        d: labels.store.d(),
        max_iterations: max_iters,
        convergence_tolerance: tol,
        clamp_seeds,
    };
    let r = diffusion::run(&graph.graph, &seeds, &labels.store, &params).map_err(py_err)?;
    Ok((PyState { state: r.state }, r.iterations, r.final_delta, r.converged))
}

/// One `(category, confidence)` pair per node.
#[pyfunction]
fn argmax_assign(state: &PyState) -> Vec<(usize, f64)> {
    assignment::argmax_assign(&state.state)
        .iter()
        .map(|(_, a)| (a.category, a.confidence))
        .collect()
}

/// `(node, category, confidence)` for each node in `scope`.
#[pyfunction]
fn constrained_assign(
    state: &PyState,
    target: Vec<f64>,
    scope: Vec<Node>,
) -> PyResult<Vec<(Node, usize, f64)>> {
    let t = TargetDistribution::new(target).map_err(py_err)?;
    let p = assignment::constrained_assign(&state.state, &t, &scope).map_err(py_err)?;
    Ok(p.iter().map(|(x, a)| (x, a.category, a.confidence)).collect())
}

#[pyfunction]
fn empirical_distribution(labels: &PyLabels) -> PyResult<Vec<f64>> {
    Ok(assignment::empirical_distribution(&labels.store)
        .map_err(py_err)?
        .shares()
        .to_vec())
}

#[pyfunction]
fn communication_matrix(graph: &PyGraph, labels: &PyLabels) -> Vec<Vec<f64>> {
    homophily::communication_matrix(&graph.graph, &labels.store).rows()
}

#[pyfunction]
fn surrogate_matrix(graph: &PyGraph, labels: &PyLabels) -> PyResult<Vec<Vec<f64>>> {
    Ok(homophily::surrogate_matrix(&graph.graph, &labels.store)
        .map_err(py_err)?
        .rows())
}

/// Log ratio of observed to expected counts; undefined cells are `None`.
#[pyfunction]
#[pyo3(signature = (graph, labels, pseudocount = 0.0))]
fn social_effect_matrix(
    graph: &PyGraph,
    labels: &PyLabels,
    pseudocount: f64,
) -> PyResult<Vec<Vec<Option<f64>>>> {
    let c = homophily::communication_matrix(&graph.graph, &labels.store);
    let r = homophily::surrogate_matrix(&graph.graph, &labels.store).map_err(py_err)?;
    let s = homophily::social_effect_matrix(&c, &r, pseudocount).map_err(py_err)?;
    let k = s.size();
    Ok((0..k).map(|i| (0..k).map(|j| s.get(i, j)).collect()).collect())
}

#[pyfunction]
fn distance_to_seeds(graph: &PyGraph, seeds: Vec<Node>) -> PyResult<Vec<Option<u32>>> {
    evaluation::distance_to_seeds(&graph.graph, &seeds).map_err(py_err)
}

/// Fraction of `scope` whose entry in `predicted` (indexed by node) matches `truth`.
#[pyfunction]
fn hits(predicted: Vec<usize>, truth: &PyLabels, scope: Vec<Node>) -> PyResult<f64> {
    let mut p = assignment::Prediction::empty(predicted.len());
    for (x, &c) in predicted.iter().enumerate() {
        p.set(
            x as Node,
            assignment::Assigned {
                category: c,
                confidence: 1.0,
            },
        );
    }
    evaluation::hits(&p, &truth.store, &scope).map_err(py_err)
}

/// Full evaluation of the argmax prediction of `state`; returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (graph, state, truth, seeds, scope, taus = None))]
fn evaluate(
    graph: &PyGraph,
    state: &PyState,
    truth: &PyLabels,
    seeds: Vec<Node>,
    scope: Vec<Node>,
    taus: Option<Vec<f64>>,
) -> PyResult<String> {
    let pred = assignment::argmax_assign(&state.state);
    let taus = taus.unwrap_or_else(|| evaluation::DEFAULT_TAUS.to_vec());
    let report = evaluation::evaluate(
        &graph.graph,
        &seeds,
        &pred,
        &truth.store,
        &scope,
        Some(&state.state),
        &taus,
        Bucketing::LogDegree,
    )
    .map_err(py_err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Planted-partition graph; returns `(graph, truth, observed)`.
#[pyfunction]
#[pyo3(signature = (groups = 4, group_size = 2500, intra_degree = 8.0, inter_degree = 3.0, labeled_fraction = 0.1, seed = 0))]
fn generate_sbm(
    groups: usize,
    group_size: usize,
    intra_degree: f64,
    inter_degree: f64,
    labeled_fraction: f64,
    seed: u64,
) -> PyResult<(PyGraph, PyLabels, PyLabels)> {
    let cfg = SynthConfig::from_mean_degrees(
        groups,
        group_size,
        intra_degree,
        inter_degree,
        labeled_fraction,
        seed,
    )
    .map_err(py_err)?;
    let out = synth::generate(&cfg).map_err(py_err)?;
    let n = out.graph.node_count();
    Ok((
        PyGraph {
            graph: out.graph,
            map: NodeIdMap::identity(n),
        },
        PyLabels { store: out.truth },
        PyLabels {
            store: out.observed,
        },
    ))
}

#[pymodule]
fn homodiff_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyLabels>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(bin_age, m)?)?;
    m.add_function(wrap_pyfunction!(split_train_validation, m)?)?;
    m.add_function(wrap_pyfunction!(init_state, m)?)?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(laplacian_residual, m)?)?;
    m.add_function(wrap_pyfunction!(diffuse, m)?)?;
    m.add_function(wrap_pyfunction!(argmax_assign, m)?)?;
    m.add_function(wrap_pyfunction!(constrained_assign, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(communication_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(surrogate_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(social_effect_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(distance_to_seeds, m)?)?;
    m.add_function(wrap_pyfunction!(hits, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(generate_sbm, m)?)?;
    Ok(())
}
