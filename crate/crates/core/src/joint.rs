//! Joint time-vertex domain: Kronecker-sum Laplacian, joint Fourier
//! transform, joint bipartition, signal extension and gradient norms.
//!
//! Signals are `N x T` matrices (rows are vertices, columns time steps) and
//! `vec` stacks columns, so joint node `(t, v)` has index `t * N + v` and
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::OversampledExtension;
use crate::graph::{
    eigendecompose, normalized_laplacian, Bipartition, Graph, SpectralBasis, SymmetricMatrix,
};

/// Largest `N * T` for which the joint Laplacian may be materialized.
pub const MATERIALIZE_LIMIT: usize = 10_000;

const CLAMP_FLOOR: f64 = -1e-9;

/// Vertex and time graphs with their normalized Laplacians and eigenbases.
#[derive(Debug, Clone)]
pub struct JointGraph {
    vertex: Graph,
    time: Graph,
    vertex_laplacian: SymmetricMatrix,
    time_laplacian: SymmetricMatrix,
    vertex_basis: SpectralBasis,
    time_basis: SpectralBasis,
}

impl JointGraph {
    /// Decomposes both factor Laplacians (concurrently).
    pub fn new(vertex: &Graph, time: &Graph) -> Result<Self> {
        let vertex_laplacian = normalized_laplacian(vertex);
        let time_laplacian = normalized_laplacian(time);
        let (vb, tb) = rayon::join(
            || eigendecompose(&vertex_laplacian),
            || eigendecompose(&time_laplacian),
        );
        Ok(JointGraph {
            vertex: vertex.clone(),
            time: time.clone(),
            vertex_laplacian,
            time_laplacian,
            vertex_basis: vb?,
            time_basis: tb?,
        })
    }

    /// Joint graph over the extended graphs of two extensions.
    pub fn from_extensions(vertex: &OversampledExtension, time: &OversampledExtension) -> Result<Self> {
        JointGraph::new(vertex.extended(), time.extended())
    }

    pub fn vertex_graph(&self) -> &Graph {
        &self.vertex
    }

    pub fn time_graph(&self) -> &Graph {
        &self.time
    }

    pub fn vertex_laplacian(&self) -> &SymmetricMatrix {
        &self.vertex_laplacian
    }

    pub fn time_laplacian(&self) -> &SymmetricMatrix {
        &self.time_laplacian
    }

    pub fn vertex_basis(&self) -> &SpectralBasis {
        &self.vertex_basis
    }

    pub fn time_basis(&self) -> &SpectralBasis {
        &self.time_basis
    }

    /// `(N, T)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.vertex.n(), self.time.n())
    }

    fn check_shape(&self, x: &DMatrix<f64>) -> Result<()> {
        let (n, t) = self.shape();
        if x.shape() != (n, t) {
            return Err(Error::DimensionMismatch(format!(
                "signal is {}x{}, joint graph is {n}x{t}",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(())
    }
}

/// Matrix-free `x ↦ vec(L_G X + X L_Tᵀ)`.
#[derive(Debug, Clone)]
pub struct JointLaplacianOperator {
    vertex: DMatrix<f64>,
    time: DMatrix<f64>,
}

impl JointLaplacianOperator {
    pub fn dim(&self) -> usize {
        self.vertex.nrows() * self.time.nrows()
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (n, t) = (self.vertex.nrows(), self.time.nrows());
        if x.len() != n * t {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for a joint operator of size {}",
                x.len(),
                n * t
            )));
        }
        let xm = DMatrix::from_column_slice(n, t, x.as_slice());
        let y = &self.vertex * &xm + &xm * self.time.transpose();
        Ok(DVector::from_column_slice(y.as_slice()))
    }
}

#[derive(Debug, Clone)]
pub enum JointLaplacian {
    Dense(SymmetricMatrix),
    Implicit(JointLaplacianOperator),
}

/// `L_J = L_T ⊗ I_N + I_T ⊗ L_G`, either as a dense matrix or as an operator.
pub fn joint_laplacian(j: &JointGraph, materialize: bool) -> Result<JointLaplacian> {
    let (n, t) = j.shape();
    if !materialize {
        return Ok(JointLaplacian::Implicit(JointLaplacianOperator {
            vertex: j.vertex_laplacian.matrix().clone(),
            time: j.time_laplacian.matrix().clone(),
        }));
    }
    if n * t > MATERIALIZE_LIMIT {
        return Err(Error::TooLargeToMaterialize {
            size: n * t,
            limit: MATERIALIZE_LIMIT,
        });
    }
    let dense = j.time_laplacian.matrix().kronecker(&DMatrix::<f64>::identity(n, n))
        + DMatrix::<f64>::identity(t, t).kronecker(j.vertex_laplacian.matrix());
    Ok(JointLaplacian::Dense(SymmetricMatrix::symmetrized(dense)))
}

/// Joint Fourier transform `U_Gᵀ X U_T`.
pub fn jft(x: &DMatrix<f64>, j: &JointGraph) -> Result<DMatrix<f64>> {
    j.check_shape(x)?;
    Ok(j.vertex_basis.eigenvectors().transpose() * x * j.time_basis.eigenvectors())
}

/// Inverse joint Fourier transform `U_G S U_Tᵀ`.
pub fn ijft(s: &DMatrix<f64>, j: &JointGraph) -> Result<DMatrix<f64>> {
    j.check_shape(s)?;
    Ok(j.vertex_basis.eigenvectors() * s * j.time_basis.eigenvectors().transpose())
}

/// Joint bipartition over `T1 * N1` nodes indexed `t * N1 + v`: a node is low
/// iff its time and vertex factors are on the same side.
pub fn joint_bipartition(time: &Bipartition, vertex: &Bipartition) -> Bipartition {
    let n = vertex.n();
    Bipartition::from_mask(
        (0..time.n() * n)
            .map(|idx| time.is_low(idx / n) == vertex.is_low(idx % n))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductKind {
    Cartesian,
    Tensor,
}

/// Product of a time graph and a vertex graph with nodes indexed `t * N + v`.
/// Cartesian edges keep the factor weight; tensor edges multiply weights.
pub fn product_graph(time: &Graph, vertex: &Graph, kind: ProductKind) -> Graph {
    let n = vertex.n();
    let mut edges = Vec::new();
    match kind {
        ProductKind::Cartesian => {
            for t in 0..time.n() {
                edges.extend(vertex.edges().iter().map(|e| (t * n + e.u, t * n + e.v, e.w)));
            }
            for e in time.edges() {
                edges.extend((0..n).map(|v| (e.u * n + v, e.v * n + v, e.w)));
            }
        }
        ProductKind::Tensor => {
            for te in time.edges() {
                for ve in vertex.edges() {
                    let w = te.w * ve.w;
                    edges.push((te.u * n + ve.u, te.v * n + ve.v, w));
                    edges.push((te.u * n + ve.v, te.v * n + ve.u, w));
                }
            }
        }
    }
    Graph::new(time.n() * n, edges).expect("product of valid graphs")
}

/// A finite `N x T` joint time-vertex signal.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSignal {
    data: DMatrix<f64>,
}

impl JointSignal {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("signal has non-finite entries".into()));
        }
        Ok(JointSignal { data })
    }

    pub fn zeros(n: usize, t: usize) -> Self {
        JointSignal {
            data: DMatrix::zeros(n, t),
        }
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.shape()
    }

    /// Comma-separated rows, one per vertex, no header.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: format!("bad number {f:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("ragged row: {} fields, expected {}", row.len(), first.len()),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "empty signal file".into(),
            });
        }
        let (n, t) = (rows.len(), rows[0].len());
        JointSignal::new(DMatrix::from_fn(n, t, |r, c| rows[r][c]))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for row in self.data.row_iter() {
            let mut first = true;
            for x in row.iter() {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        JointSignal::from_csv_str(&text)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// How the added rows and columns of an extended signal are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillMode {
    Zero,
    Copy,
}

/// How an extended signal is brought back to the original size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RestrictMode {
    Take,
    Average,
}

/// A signal on the extended joint graph, block layout
/// `[[X00, X10], [X01, X11]]` with the original in the leading block.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedJointSignal {
    data: DMatrix<f64>,
    n0: usize,
    t0: usize,
    fill: FillMode,
    vertex_origin: Vec<usize>,
    time_origin: Vec<usize>,
}

impl ExtendedJointSignal {
    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn fill_mode(&self) -> FillMode {
        self.fill
    }

    /// `(n0, t0, n1, t1)`.
    pub fn sizes(&self) -> (usize, usize, usize, usize) {
        (self.n0, self.t0, self.data.nrows(), self.data.ncols())
    }

    /// Same layout, new values.
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<Self> {
        if data.shape() != self.data.shape() {
            return Err(Error::DimensionMismatch(format!(
                "replacement is {}x{}, layout is {}x{}",
                data.nrows(),
                data.ncols(),
                self.data.nrows(),
                self.data.ncols()
            )));
        }
        Ok(ExtendedJointSignal {
            data,
            ..self.clone()
        })
    }
}

fn origins(e: &OversampledExtension) -> Vec<usize> {
    (0..e.n1()).map(|i| e.origin(i)).collect()
}

/// Places `x` in the leading block of the extended layout. `Copy` gives every
/// duplicated row, column and row-column entry its original's value.
pub fn extend_signal(
    x: &JointSignal,
    vertex: &OversampledExtension,
    time: &OversampledExtension,
    fill: FillMode,
) -> Result<ExtendedJointSignal> {
    let (n0, t0) = x.shape();
    if n0 != vertex.n0() || t0 != time.n0() {
        return Err(Error::DimensionMismatch(format!(
            "signal is {n0}x{t0}, extensions expect {}x{}",
            vertex.n0(),
            time.n0()
        )));
    }
    let vertex_origin = origins(vertex);
    let time_origin = origins(time);
    let data = DMatrix::from_fn(vertex.n1(), time.n1(), |r, c| match fill {
        FillMode::Copy => x.data[(vertex_origin[r], time_origin[c])],
        FillMode::Zero if r < n0 && c < t0 => x.data[(r, c)],
        FillMode::Zero => 0.0,
    });
    Ok(ExtendedJointSignal {
        data,
        n0,
        t0,
        fill,
        vertex_origin,
        time_origin,
    })
}

/// Returns to `n0 x t0`: either the leading block, or each original entry
/// averaged over all of its images.
pub fn restrict_signal(x: &ExtendedJointSignal, mode: RestrictMode) -> JointSignal {
    let (n0, t0) = (x.n0, x.t0);
    let data = match mode {
        RestrictMode::Take => x.data.view((0, 0), (n0, t0)).into_owned(),
        RestrictMode::Average => {
            let mut sum = DMatrix::zeros(n0, t0);
            let mut count = DMatrix::<f64>::zeros(n0, t0);
            for c in 0..x.data.ncols() {
                let oc = x.time_origin[c];
                for r in 0..x.data.nrows() {
                    let or = x.vertex_origin[r];
                    sum[(or, oc)] += x.data[(r, c)];
                    count[(or, oc)] += 1.0;
                }
            }
            sum.component_div(&count)
        }
    };
    JointSignal { data }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientNorms {
    /// `tr(Xᵀ L_G X) + tr(X L_T Xᵀ)`.
    pub l2_sq: f64,
    /// `‖vec(L_G^{1/2} X)‖₁ + ‖vec(X L_T^{1/2})‖₁`.
    pub l1: f64,
    /// `μ_G ‖vec(∇_G X)‖_p^p + μ_T ‖vec(∇_T X)‖_q^q`.
    pub mixed: f64,
    /// Eigenvalues below zero that were clamped before taking square roots.
    pub clamped: usize,
}

/// Gradient-induced smoothness measures of a joint signal.
pub fn gradient_norms(
    x: &DMatrix<f64>,
    j: &JointGraph,
    p: f64,
    q: f64,
    mu_g: f64,
    mu_t: f64,
) -> Result<GradientNorms> {
    j.check_shape(x)?;
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::InvalidParameter(format!("need p, q >= 1, got {p}, {q}")));
    }
    if !(mu_g >= 0.0 && mu_t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need non-negative weights, got {mu_g}, {mu_t}"
        )));
    }
    let lg = j.vertex_laplacian.matrix();
    let lt = j.time_laplacian.matrix();
    let l2_sq = (x.transpose() * lg * x).trace() + (x * lt * x.transpose()).trace();

    let mut clamped = 0;
    let mut sqrt_of = |b: &SpectralBasis| {
        clamped += b.eigenvalues().iter().filter(|&&l| l < 0.0).count();
        if let Some(&worst) = b.eigenvalues().iter().find(|&&l| l < CLAMP_FLOOR) {
            log_clamp(worst);
        }
        b.matrix_function(|l| l.max(0.0).sqrt())
    };
    let grad_g = sqrt_of(&j.vertex_basis).into_matrix() * x;
    let grad_t = x * sqrt_of(&j.time_basis).into_matrix();

    let l1 = grad_g.iter().map(|v| v.abs()).sum::<f64>() + grad_t.iter().map(|v| v.abs()).sum::<f64>();
    let mixed = mu_g * grad_g.iter().map(|v| v.abs().powf(p)).sum::<f64>()
        + mu_t * grad_t.iter().map(|v| v.abs().powf(q)).sum::<f64>();
    Ok(GradientNorms {
        l2_sq,
        l1,
        mixed,
        clamped,
    })
}

#[cold]
fn log_clamp(lambda: f64) {
    eprintln!("warning: clamped Laplacian eigenvalue {lambda:e} below -1e-9 to zero");
}
