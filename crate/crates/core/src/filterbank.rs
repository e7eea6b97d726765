//! Two-channel spectral graph filter banks, per domain and jointly.
//!
//! Channel `k` of a domain filters with `H_k = U h_k(Λ) Uᵀ`, keeps the node
//! set selected by `D_0 = (I - C)/2` (high set) or `D_1 = (I + C)/2` (low
//! set), and is reconstructed with `G_k = U g_k(Λ) Uᵀ`. On a bipartite graph
//! `C h(L) C = h(2I - L)`, so the alias terms cancel whenever the kernels
//! satisfy the two perfect-reconstruction conditions checked by
//! [`verify_pr`].

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{check_bipartite, Bipartition, SpectralBasis, SymmetricMatrix};
use crate::joint::{JointGraph, JointSignal};

/// Tolerance for both perfect-reconstruction conditions.
pub const PR_TOL: f64 = 1e-12;
/// Number of uniformly spaced points of `[0, 2]` used by [`verify_pr`].
pub const PR_GRID_POINTS: usize = 2001;
/// Largest `N * T` for which [`JointFilterBank::two_term`] also evaluates the
/// explicit Kronecker form.
pub const VEC_FORM_LIMIT: usize = 400;
const VEC_FORM_TOL: f64 = 1e-10;

pub type Kernel = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Analysis kernels `h0, h1` and synthesis kernels `g0, g1` on `[0, 2]`.
#[derive(Clone)]
pub struct KernelPair {
    pub name: String,
    h: [Kernel; 2],
    g: [Kernel; 2],
}

impl fmt::Debug for KernelPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelPair").field("name", &self.name).finish()
    }
}

impl KernelPair {
    pub fn new(name: impl Into<String>, h0: Kernel, h1: Kernel, g0: Kernel, g1: Kernel) -> Self {
        KernelPair {
            name: name.into(),
            h: [h0, h1],
            g: [g0, g1],
        }
    }

    pub fn h(&self, channel: usize, lambda: f64) -> f64 {
        (self.h[channel])(lambda)
    }

    pub fn g(&self, channel: usize, lambda: f64) -> f64 {
        (self.g[channel])(lambda)
    }

    /// All four kernels multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> KernelPair {
        let wrap = |k: &Kernel| -> Kernel {
            let k = k.clone();
            Arc::new(move |l| factor * k(l))
        };
        KernelPair {
            name: format!("{}*{factor}", self.name),
            h: [wrap(&self.h[0]), wrap(&self.h[1])],
            g: [wrap(&self.g[0]), wrap(&self.g[1])],
        }
    }
}

fn meyer_nu(x: f64) -> f64 {
    x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x.powi(3))
}

/// Meyer-type lowpass: flat `√2` up to 2/3, zero from 4/3.
pub fn meyer_h0(lambda: f64) -> f64 {
    if lambda <= 2.0 / 3.0 {
        SQRT_2
    } else if lambda < 4.0 / 3.0 {
        SQRT_2 * (FRAC_PI_2 * meyer_nu(1.5 * lambda - 1.0)).cos()
    } else {
        0.0
    }
}

/// QMF pair built from [`meyer_h0`]: `h1(λ) = h0(2 - λ)`, `g0 = h0`, `g1 = h1`.
pub fn meyer_qmf_kernels() -> KernelPair {
    let h0: Kernel = Arc::new(meyer_h0);
    let h1: Kernel = Arc::new(|l| meyer_h0(2.0 - l));
    KernelPair::new("meyer-qmf", h0.clone(), h1.clone(), h0, h1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrReport {
    /// `max |g0 h0 + g1 h1 - 2|`.
    pub max_gain_violation: f64,
    /// `max |g0(λ) h0(2-λ) - g1(λ) h1(2-λ)|`.
    pub max_alias_violation: f64,
    pub grid_points: usize,
    pub pass: bool,
}

/// Evaluates both conditions on a uniform grid of `[0, 2]`. The vertex and
/// time spectra share this domain, so one sweep covers both.
pub fn verify_pr(kp: &KernelPair) -> PrReport {
    let (mut gain, mut alias) = (0.0f64, 0.0f64);
    for i in 0..PR_GRID_POINTS {
        let l = 2.0 * i as f64 / (PR_GRID_POINTS - 1) as f64;
        let m = 2.0 - l;
        gain = gain.max((kp.g(0, l) * kp.h(0, l) + kp.g(1, l) * kp.h(1, l) - 2.0).abs());
        alias = alias.max((kp.g(0, l) * kp.h(0, m) - kp.g(1, l) * kp.h(1, m)).abs());
    }
    PrReport {
        max_gain_violation: gain,
        max_alias_violation: alias,
        grid_points: PR_GRID_POINTS,
        pass: gain <= PR_TOL && alias <= PR_TOL,
    }
}

/// Diagonal `C`: +1 on the low set, -1 on the high set.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOperator {
    c: Vec<f64>,
}

impl SamplingOperator {
    pub fn from_bipartition(b: &Bipartition) -> Self {
        SamplingOperator {
            c: b.mask().iter().map(|&l| if l { 1.0 } else { -1.0 }).collect(),
        }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.c
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.c))
    }

    /// Nodes kept by channel `k`: the high set for 0, the low set for 1.
    pub fn retained(&self, channel: usize) -> Vec<usize> {
        let keep = if channel == 0 { -1.0 } else { 1.0 };
        (0..self.c.len()).filter(|&i| self.c[i] == keep).collect()
    }

    /// `I - C` for channel 0, `I + C` for channel 1.
    fn selector(&self, channel: usize) -> impl Fn(usize) -> f64 + '_ {
        let sign = if channel == 0 { -1.0 } else { 1.0 };
        move |i| 1.0 + sign * self.c[i]
    }
}

/// `U k(Λ) Uᵀ`.
pub fn spectral_filter(b: &SpectralBasis, k: impl Fn(f64) -> f64) -> SymmetricMatrix {
    b.matrix_function(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Vertex,
    Time,
}

/// The four filters and sampling pattern of one domain.
#[derive(Debug, Clone)]
pub struct DomainFilters {
    h: [DMatrix<f64>; 2],
    g: [DMatrix<f64>; 2],
    sampling: SamplingOperator,
}

impl DomainFilters {
    pub fn new(basis: &SpectralBasis, bip: &Bipartition, kp: &KernelPair) -> Result<Self> {
        if bip.n() != basis.dim() {
            return Err(Error::DimensionMismatch(format!(
                "bipartition covers {} nodes, basis has dimension {}",
                bip.n(),
                basis.dim()
            )));
        }
        let filt = |f: &Kernel| basis.matrix_function(|l| f(l)).into_matrix();
        Ok(DomainFilters {
            h: [filt(&kp.h[0]), filt(&kp.h[1])],
            g: [filt(&kp.g[0]), filt(&kp.g[1])],
            sampling: SamplingOperator::from_bipartition(bip),
        })
    }

    pub fn dim(&self) -> usize {
        self.sampling.c.len()
    }

    pub fn sampling(&self) -> &SamplingOperator {
        &self.sampling
    }

    pub fn analysis(&self, channel: usize) -> &DMatrix<f64> {
        &self.h[channel]
    }

    pub fn synthesis(&self, channel: usize) -> &DMatrix<f64> {
        &self.g[channel]
    }

    /// `Q_k = G_k (I ∓ C) H_k` (no factor ½).
    pub fn composite(&self, channel: usize) -> DMatrix<f64> {
        let sel = self.sampling.selector(channel);
        let mut mid = self.h[channel].clone();
        for (i, mut row) in mid.row_iter_mut().enumerate() {
            row *= sel(i);
        }
        &self.g[channel] * mid
    }

    fn check_axis(&self, x: &DMatrix<f64>, axis: Axis) -> Result<()> {
        let len = match axis {
            Axis::Vertex => x.nrows(),
            Axis::Time => x.ncols(),
        };
        if len != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{axis:?} axis has length {len}, filters have dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// `y_k = D_k H_k X` (vertex) or `X H_k D_k` (time).
    pub fn analyze(&self, x: &DMatrix<f64>, axis: Axis) -> Result<[DMatrix<f64>; 2]> {
        self.check_axis(x, axis)?;
        Ok([0, 1].map(|k| {
            let sel = self.sampling.selector(k);
            match axis {
                Axis::Vertex => {
                    let mut y = &self.h[k] * x;
                    for (i, mut row) in y.row_iter_mut().enumerate() {
                        row *= 0.5 * sel(i);
                    }
                    y
                }
                Axis::Time => {
                    let mut y = x * &self.h[k];
                    for (i, mut col) in y.column_iter_mut().enumerate() {
                        col *= 0.5 * sel(i);
                    }
                    y
                }
            }
        }))
    }

    /// `G_0 y_0 + G_1 y_1` (vertex) or `y_0 G_0 + y_1 G_1` (time).
    pub fn synthesize(&self, y: &[DMatrix<f64>; 2], axis: Axis) -> Result<DMatrix<f64>> {
        if y[0].shape() != y[1].shape() {
            return Err(Error::DimensionMismatch("subband shapes differ".into()));
        }
        self.check_axis(&y[0], axis)?;
        Ok(match axis {
            Axis::Vertex => &self.g[0] * &y[0] + &self.g[1] * &y[1],
            Axis::Time => &y[0] * &self.g[0] + &y[1] * &self.g[1],
        })
    }
}

/// Two-channel analysis along one axis.
pub fn analyze_domain(
    x: &DMatrix<f64>,
    basis: &SpectralBasis,
    bip: &Bipartition,
    kp: &KernelPair,
    axis: Axis,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let [y0, y1] = DomainFilters::new(basis, bip, kp)?.analyze(x, axis)?;
    Ok((y0, y1))
}

/// Two-channel synthesis along one axis.
pub fn synthesize_domain(
    y0: &DMatrix<f64>,
    y1: &DMatrix<f64>,
    basis: &SpectralBasis,
    kp: &KernelPair,
    axis: Axis,
) -> Result<DMatrix<f64>> {
    if y0.shape() != y1.shape() {
        return Err(Error::DimensionMismatch("subband shapes differ".into()));
    }
    let len = match axis {
        Axis::Vertex => y0.nrows(),
        Axis::Time => y0.ncols(),
    };
    if len != basis.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{axis:?} axis has length {len}, basis has dimension {}",
            basis.dim()
        )));
    }
    let g0 = basis.matrix_function(|l| kp.g(0, l)).into_matrix();
    let g1 = basis.matrix_function(|l| kp.g(1, l)).into_matrix();
    Ok(match axis {
        Axis::Vertex => g0 * y0 + g1 * y1,
        Axis::Time => y0 * g0 + y1 * g1,
    })
}

/// Four full-size subbands keyed `(vertex channel, time channel)`, each zero
/// outside its retained vertex x time set.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandCoefficients {
    bands: [[DMatrix<f64>; 2]; 2],
    vertex_retained: [Vec<usize>; 2],
    time_retained: [Vec<usize>; 2],
}

#[derive(Serialize)]
struct SubbandManifest<'a> {
    shape: [usize; 2],
    vertex_retained: [&'a [usize]; 2],
    time_retained: [&'a [usize]; 2],
    files: Vec<String>,
}

impl SubbandCoefficients {
    pub fn get(&self, kv: usize, kt: usize) -> &DMatrix<f64> {
        &self.bands[kv][kt]
    }

    pub fn get_mut(&mut self, kv: usize, kt: usize) -> &mut DMatrix<f64> {
        &mut self.bands[kv][kt]
    }

    pub fn vertex_retained(&self, kv: usize) -> &[usize] {
        &self.vertex_retained[kv]
    }

    pub fn time_retained(&self, kt: usize) -> &[usize] {
        &self.time_retained[kt]
    }

    /// Number of retained entries in subband `(kv, kt)`.
    pub fn retained_count(&self, kv: usize, kt: usize) -> usize {
        self.vertex_retained[kv].len() * self.time_retained[kt].len()
    }

    pub fn energy(&self) -> f64 {
        self.bands.iter().flatten().map(|b| b.norm_squared()).sum()
    }

    /// Writes `band_v{kv}_t{kt}.csv` for each subband plus `subbands.json`.
    pub fn dump(&self, dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let mut files = Vec::new();
        for kv in 0..2 {
            for kt in 0..2 {
                let name = format!("band_v{kv}_t{kt}.csv");
                let path = dir.join(&name);
                JointSignal::new(self.bands[kv][kt].clone())?.write_csv(&path)?;
                written.push(path);
                files.push(name);
            }
        }
        let manifest = SubbandManifest {
            shape: [self.bands[0][0].nrows(), self.bands[0][0].ncols()],
            vertex_retained: [&self.vertex_retained[0], &self.vertex_retained[1]],
            time_retained: [&self.time_retained[0], &self.time_retained[1]],
            files,
        };
        let path = dir.join("subbands.json");
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(written)
    }
}

/// Result of the literal two-term reconstruction.
#[derive(Debug, Clone)]
pub struct TwoTermOutput {
    pub output: DMatrix<f64>,
    /// Max difference between matrix and explicit Kronecker forms, when the
    /// latter was evaluated.
    pub vec_form_discrepancy: Option<f64>,
    /// `‖output - input‖_F / ‖input‖_F` (0 for zero input).
    pub relative_residual: f64,
}

/// Separable joint filter bank over a vertex and a time domain.
#[derive(Debug, Clone)]
pub struct JointFilterBank {
    vertex: DomainFilters,
    time: DomainFilters,
}

impl JointFilterBank {
    /// Requires both bipartitions to certify their factor graphs.
    pub fn new(j: &JointGraph, bg: &Bipartition, bt: &Bipartition, kp: &KernelPair) -> Result<Self> {
        if !check_bipartite(j.vertex_graph(), bg) {
            return Err(Error::NotBipartite("vertex"));
        }
        if !check_bipartite(j.time_graph(), bt) {
            return Err(Error::NotBipartite("time"));
        }
        Self::new_unchecked(j, bg, bt, kp)
    }

    /// Skips the bipartiteness check; reconstruction is then generally not
    /// perfect.
    pub fn new_unchecked(
        j: &JointGraph,
        bg: &Bipartition,
        bt: &Bipartition,
        kp: &KernelPair,
    ) -> Result<Self> {
        let (vertex, time) = rayon::join(
            || DomainFilters::new(j.vertex_basis(), bg, kp),
            || DomainFilters::new(j.time_basis(), bt, kp),
        );
        Ok(JointFilterBank {
            vertex: vertex?,
            time: time?,
        })
    }

    pub fn vertex(&self) -> &DomainFilters {
        &self.vertex
    }

    pub fn time(&self) -> &DomainFilters {
        &self.time
    }

    /// Time-axis split first, then a vertex-axis split of each time subband.
    pub fn analyze(&self, x: &DMatrix<f64>) -> Result<SubbandCoefficients> {
        let [z0, z1] = self.time.analyze(x, Axis::Time)?;
        let [y00, y10] = self.vertex.analyze(&z0, Axis::Vertex)?;
        let [y01, y11] = self.vertex.analyze(&z1, Axis::Vertex)?;
        Ok(SubbandCoefficients {
            bands: [[y00, y01], [y10, y11]],
            vertex_retained: [self.vertex.sampling.retained(0), self.vertex.sampling.retained(1)],
            time_retained: [self.time.sampling.retained(0), self.time.sampling.retained(1)],
        })
    }

    /// Vertex-axis synthesis per time subband, then time-axis synthesis.
    pub fn synthesize(&self, s: &SubbandCoefficients) -> Result<DMatrix<f64>> {
        let [[y00, y01], [y10, y11]] = &s.bands;
        let v0 = self.vertex.synthesize(&[y00.clone(), y10.clone()], Axis::Vertex)?;
        let v1 = self.vertex.synthesize(&[y01.clone(), y11.clone()], Axis::Vertex)?;
        self.time.synthesize(&[v0, v1], Axis::Time)
    }

    /// `½ Q⁰_G X (Q⁰_T)ᵀ + ½ Q¹_G X (Q¹_T)ᵀ`, with the explicit
    /// `½ (Q⁰_T ⊗ Q⁰_G + Q¹_T ⊗ Q¹_G) vec(X)` evaluated and compared for small
    /// inputs.
    pub fn two_term(&self, x: &DMatrix<f64>) -> Result<TwoTermOutput> {
        self.vertex.check_axis(x, Axis::Vertex)?;
        self.time.check_axis(x, Axis::Time)?;
        let qg = [self.vertex.composite(0), self.vertex.composite(1)];
        let qt = [self.time.composite(0), self.time.composite(1)];
        let output = (&qg[0] * x * qt[0].transpose() + &qg[1] * x * qt[1].transpose()) * 0.5;

        let vec_form_discrepancy = if x.len() <= VEC_FORM_LIMIT {
            let op = (qt[0].kronecker(&qg[0]) + qt[1].kronecker(&qg[1])) * 0.5;
            let v = op * DVector::from_column_slice(x.as_slice());
            let d = (DVector::from_column_slice(output.as_slice()) - v).amax();
            if d > VEC_FORM_TOL * (1.0 + x.amax()) {
                return Err(Error::Numerical(format!(
                    "two-term matrix and Kronecker forms differ by {d:e}"
                )));
            }
            Some(d)
        } else {
            None
        };
        let norm = x.norm();
        let relative_residual = if norm > 0.0 {
            (&output - x).norm() / norm
        } else {
            0.0
        };
        Ok(TwoTermOutput {
            output,
            vec_form_discrepancy,
            relative_residual,
        })
    }
}

/// Cascaded joint analysis of an (extended) signal.
pub fn joint_analyze(
    x: &DMatrix<f64>,
    j: &JointGraph,
    bg: &Bipartition,
    bt: &Bipartition,
    kp: &KernelPair,
) -> Result<SubbandCoefficients> {
    JointFilterBank::new(j, bg, bt, kp)?.analyze(x)
}

/// Inverse of [`joint_analyze`].
pub fn joint_synthesize(
    s: &SubbandCoefficients,
    j: &JointGraph,
    bg: &Bipartition,
    bt: &Bipartition,
    kp: &KernelPair,
) -> Result<DMatrix<f64>> {
    JointFilterBank::new(j, bg, bt, kp)?.synthesize(s)
}

/// Literal two-term joint reconstruction.
pub fn joint_two_term(
    x: &DMatrix<f64>,
    j: &JointGraph,
    bg: &Bipartition,
    bt: &Bipartition,
    kp: &KernelPair,
) -> Result<TwoTermOutput> {
    JointFilterBank::new(j, bg, bt, kp)?.two_term(x)
}
