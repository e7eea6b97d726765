//! Python bindings. Matrices cross the boundary as lists of rows.

use jtv_fbank::denoise::{self, DenoiseConfig, Mode, ThresholdRule};
use jtv_fbank::experiments::{seirs_signal, Scenario, SeirsParams};
use jtv_fbank::extension::{self, OversampledExtension};
use jtv_fbank::filterbank::{meyer_qmf_kernels, verify_pr, JointFilterBank};
use jtv_fbank::graph::{self as core_graph, Connectivity};
use jtv_fbank::joint::{self, FillMode, JointGraph, JointSignal, RestrictMode};
use jtv_fbank::Error;
use nalgebra::DMatrix;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    if e.is_io() {
        PyOSError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn matrix_from_rows(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let t = rows.first().map_or(0, Vec::len);
    if n == 0 || t == 0 || rows.iter().any(|r| r.len() != t) {
        return Err(PyValueError::new_err("expected a non-empty rectangular list of rows"));
    }
    Ok(DMatrix::from_fn(n, t, |i, j| rows[i][j]))
}

fn rows_from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn signal(rows: Vec<Vec<f64>>) -> PyResult<JointSignal> {
    JointSignal::new(matrix_from_rows(rows)?).map_err(to_py)
}

fn parse_mode(s: &str) -> PyResult<Mode> {
    match s {
        "oversampled" => Ok(Mode::Oversampled),
        "critical" => Ok(Mode::Critical),
        _ => Err(PyValueError::new_err(format!("unknown mode '{s}'"))),
    }
}

fn parse_fill(s: &str) -> PyResult<FillMode> {
    match s {
        "zero" => Ok(FillMode::Zero),
        "copy" => Ok(FillMode::Copy),
        _ => Err(PyValueError::new_err(format!("unknown fill '{s}'"))),
    }
}

/// Undirected weighted graph.
#[pyclass(name = "Graph", module = "jtv_fbank", frozen)]
struct PyGraph(core_graph::Graph);

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        core_graph::Graph::new(n, edges).map(PyGraph).map_err(to_py)
    }

    #[staticmethod]
    fn ring(t: usize) -> PyResult<Self> {
        core_graph::ring_graph(t).map(PyGraph).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (rows, cols, connectivity = 4))]
    fn grid(rows: usize, cols: usize, connectivity: u32) -> PyResult<Self> {
        let c = Connectivity::try_from(connectivity).map_err(to_py)?;
        core_graph::grid_graph(rows, cols, c).map(PyGraph).map_err(to_py)
    }

    #[staticmethod]
    fn read_edge_list(path: &str) -> PyResult<Self> {
        core_graph::Graph::read_edge_list(path).map(PyGraph).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.0.edges().iter().map(|e| (e.u, e.v, e.w)).collect()
    }

    fn is_connected(&self) -> bool {
        self.0.is_connected()
    }

    fn adjacency(&self) -> Vec<Vec<f64>> {
        rows_from_matrix(self.0.adjacency())
    }

    fn normalized_laplacian(&self) -> Vec<Vec<f64>> {
        rows_from_matrix(core_graph::normalized_laplacian(&self.0).matrix())
    }

    /// Ascending eigenvalues of the normalized Laplacian.
    fn spectrum(&self) -> PyResult<Vec<f64>> {
        let b = core_graph::eigendecompose(&core_graph::normalized_laplacian(&self.0)).map_err(to_py)?;
        Ok(b.eigenvalues().iter().copied().collect())
    }

    fn is_bipartite_with(&self, low: Vec<usize>) -> PyResult<bool> {
        let b = core_graph::Bipartition::new(self.0.n(), low).map_err(to_py)?;
        Ok(core_graph::check_bipartite(&self.0, &b))
    }

    fn to_edge_list(&self) -> String {
        self.0.to_edge_list_string()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.0.n(), self.0.edges().len())
    }
}

/// Bipartite graph containing the original graph's nodes plus duplicates.
#[pyclass(name = "Extension", module = "jtv_fbank", frozen)]
struct PyExtension(OversampledExtension);

#[pymethods]
impl PyExtension {
    #[getter]
    fn rho(&self) -> f64 {
        self.0.rho()
    }

    #[getter]
    fn n0(&self) -> usize {
        self.0.n0()
    }

    #[getter]
    fn n1(&self) -> usize {
        self.0.n1()
    }

    #[getter]
    fn low(&self) -> Vec<usize> {
        self.0.bipartition().low().to_vec()
    }

    #[getter]
    fn high(&self) -> Vec<usize> {
        self.0.bipartition().high().to_vec()
    }

    /// Pairs `(duplicate, original)`.
    #[getter]
    fn duplicate_of(&self) -> Vec<(usize, usize)> {
        self.0.metadata().duplicate_of.iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn graph(&self) -> PyGraph {
        PyGraph(self.0.extended().clone())
    }

    fn metadata_json(&self) -> String {
        serde_json::to_string(&self.0.metadata()).expect("metadata serializes")
    }

    fn __repr__(&self) -> String {
        format!("Extension(n0={}, n1={}, rho={:.6})", self.0.n0(), self.0.n1(), self.0.rho())
    }
}

/// Greedy K-coloring extension; `split` defaults to ceil(K/2).
#[pyfunction]
#[pyo3(signature = (g, split = None, vertical_weight = 1.0))]
fn extend_graph(g: &PyGraph, split: Option<usize>, vertical_weight: f64) -> PyResult<PyExtension> {
    let e = match split {
        Some(l) => extension::extend_graph_with(&g.0, &extension::greedy_coloring(&g.0), l, vertical_weight),
        None => extension::auto_extend(&g.0, vertical_weight),
    };
    e.map(PyExtension).map_err(to_py)
}

#[pyfunction]
fn ring_extend(t: usize) -> PyResult<PyExtension> {
    extension::ring_extend(t).map(PyExtension).map_err(to_py)
}

#[pyfunction]
fn double_cover(g: &PyGraph) -> PyExtension {
    PyExtension(extension::bipartite_double_cover(&g.0))
}

/// Max violations of both perfect-reconstruction conditions for the Meyer kernels.
#[pyfunction]
fn verify_meyer_pr(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let r = verify_pr(&meyer_qmf_kernels());
    let d = PyDict::new(py);
    d.set_item("gain", r.max_gain_violation)?;
    d.set_item("alias", r.max_alias_violation)?;
    d.set_item("grid_points", r.grid_points)?;
    d.set_item("pass", r.pass)?;
    Ok(d)
}

/// Joint Fourier transform over a vertex graph and a time graph.
#[pyfunction]
fn jft(vertex: &PyGraph, time: &PyGraph, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let j = JointGraph::new(&vertex.0, &time.0).map_err(to_py)?;
    let s = joint::jft(&matrix_from_rows(x)?, &j).map_err(to_py)?;
    Ok(rows_from_matrix(&s))
}

/// Cascade analysis and synthesis over extended factors; returns
/// `(reconstruction, relative_error)`.
#[pyfunction]
#[pyo3(signature = (g, x, mode = "oversampled", fill = "zero", seed = 0))]
fn roundtrip(g: &PyGraph, x: Vec<Vec<f64>>, mode: &str, fill: &str, seed: u64) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let x = signal(x)?;
    let fill = parse_fill(fill)?;
    let (_, t) = x.shape();
    let ve = match parse_mode(mode)? {
        Mode::Oversampled => extension::auto_extend(&g.0, 1.0),
        Mode::Critical => {
            let f = extension::harary_bipartition(&g.0, seed);
            OversampledExtension::identity(&f.graph, f.bipartition)
        }
    }
    .map_err(to_py)?;
    let te = extension::ring_extend(t).map_err(to_py)?;
    let j = JointGraph::from_extensions(&ve, &te).map_err(to_py)?;
    let bank = JointFilterBank::new(&j, ve.bipartition(), te.bipartition(), &meyer_qmf_kernels()).map_err(to_py)?;
    let xe = joint::extend_signal(&x, &ve, &te, fill).map_err(to_py)?;
    let y = bank
        .analyze(xe.data())
        .and_then(|s| bank.synthesize(&s))
        .map_err(to_py)?;
    let back = joint::restrict_signal(&xe.with_data(y).map_err(to_py)?, RestrictMode::default_for(fill));
    let err = (back.data() - x.data()).norm() / x.data().norm().max(f64::MIN_POSITIVE);
    Ok((rows_from_matrix(back.data()), err))
}

#[pyfunction]
fn add_gaussian_noise(x: Vec<Vec<f64>>, sigma: f64, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let y = denoise::add_gaussian_noise(&signal(x)?, sigma, seed).map_err(to_py)?;
    Ok(rows_from_matrix(y.data()))
}

/// Returns `(estimate, rho_vertex, rho_time)`.
#[pyfunction]
#[pyo3(signature = (g, noisy, sigma, tau = None, mode = "oversampled", rule = "hard", protect_ll = true, fill = "copy", seed = 0))]
#[allow(clippy::too_many_arguments)]
fn denoise_signal(
    g: &PyGraph,
    noisy: Vec<Vec<f64>>,
    sigma: f64,
    tau: Option<f64>,
    mode: &str,
    rule: &str,
    protect_ll: bool,
    fill: &str,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, f64, f64)> {
    let mut cfg = DenoiseConfig::new(sigma, parse_mode(mode)?);
    cfg.tau = tau.unwrap_or(3.0 * sigma);
    cfg.rule = match rule {
        "hard" => ThresholdRule::Hard,
        "soft" => ThresholdRule::Soft,
        _ => return Err(PyValueError::new_err(format!("unknown rule '{rule}'"))),
    };
    cfg.protect_ll = protect_ll;
    cfg.fill = parse_fill(fill)?;
    cfg.restrict = RestrictMode::default_for(cfg.fill);
    cfg.seed = seed;
    let out = denoise::denoise(&signal(noisy)?, &g.0, &cfg).map_err(to_py)?;
    Ok((rows_from_matrix(out.signal.data()), out.rho_vertex, out.rho_time))
}

#[pyfunction]
fn mse(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> PyResult<f64> {
    denoise::mse(&signal(x)?, &signal(y)?).map_err(to_py)
}

#[pyfunction]
fn snr_db(reference: Vec<Vec<f64>>, estimate: Vec<Vec<f64>>) -> PyResult<f64> {
    denoise::snr_db(&signal(reference)?, &signal(estimate)?).map_err(to_py)
}

/// Infectious fractions (N rows, `t_steps` columns) for a named preset.
#[pyfunction]
#[pyo3(signature = (g, preset = "low-temp", seed = 0, t_steps = None, beta = None))]
fn seirs(g: &PyGraph, preset: &str, seed: u64, t_steps: Option<usize>, beta: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
    let sc: Scenario = preset.parse().map_err(to_py)?;
    let mut p = SeirsParams::preset(sc, g.0.n(), seed);
    if let Some(t) = t_steps {
        p.t_steps = t;
    }
    if let Some(b) = beta {
        p.beta = b;
    }
    let x = seirs_signal(&g.0, &p).map_err(to_py)?;
    Ok(rows_from_matrix(x.data()))
}

#[pymodule]
#[pyo3(name = "jtv_fbank")]
fn jtv_fbank_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyExtension>()?;
    m.add_function(wrap_pyfunction!(extend_graph, m)?)?;
    m.add_function(wrap_pyfunction!(ring_extend, m)?)?;
    m.add_function(wrap_pyfunction!(double_cover, m)?)?;
    m.add_function(wrap_pyfunction!(verify_meyer_pr, m)?)?;
    m.add_function(wrap_pyfunction!(jft, m)?)?;
    m.add_function(wrap_pyfunction!(roundtrip, m)?)?;
    m.add_function(wrap_pyfunction!(add_gaussian_noise, m)?)?;
    m.add_function(wrap_pyfunction!(denoise_signal, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(snr_db, m)?)?;
    m.add_function(wrap_pyfunction!(seirs, m)?)?;
    Ok(())
}
