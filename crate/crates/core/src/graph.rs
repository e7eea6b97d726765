//! Weighted undirected graphs, normalized Laplacians and the symmetric
//! eigendecomposition every spectral operator in this crate is built on.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance for the symmetry check on [`SymmetricMatrix`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// An undirected weighted edge, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, w: f64) -> Self {
        Edge {
            u: u.min(v),
            v: u.max(v),
            w,
        }
    }
}

/// A finite undirected simple graph with positive weights.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: DMatrix<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    /// Validates the edge list and assembles the adjacency matrix.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::TooSmall {
                what: "node count",
                got: 0,
                min: 1,
            });
        }
        let mut seen = HashSet::new();
        let mut stored = Vec::new();
        let mut adjacency = DMatrix::zeros(n, n);
        let mut neighbors = vec![Vec::new(); n];
        for (u, v, w) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::IndexOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::NonPositiveWeight { u, v, w });
            }
            let e = Edge::new(u, v, w);
            if !seen.insert((e.u, e.v)) {
                return Err(Error::DuplicateEdge(e.u, e.v));
            }
            adjacency[(u, v)] = w;
            adjacency[(v, u)] = w;
            neighbors[u].push((v, w));
            neighbors[v].push((u, w));
            stored.push(e);
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(Graph {
            n,
            edges: stored,
            adjacency,
            neighbors,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    /// Neighbors of `u` with edge weights, sorted by neighbor index.
    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.neighbors[u]
    }

    /// Weighted degree.
    pub fn degree(&self, u: usize) -> f64 {
        self.neighbors[u].iter().map(|&(_, w)| w).sum()
    }

    /// Number of incident edges.
    pub fn neighbor_count(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.adjacency[(u, v)] > 0.0
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// A proper 2-coloring found by breadth-first search, if one exists.
    pub fn two_coloring(&self) -> Option<Vec<u8>> {
        let mut side = vec![u8::MAX; self.n];
        for start in 0..self.n {
            if side[start] != u8::MAX {
                continue;
            }
            side[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.neighbors[u] {
                    if side[v] == u8::MAX {
                        side[v] = 1 - side[u];
                        queue.push_back(v);
                    } else if side[v] == side[u] {
                        return None;
                    }
                }
            }
        }
        Some(side)
    }

    /// Parses the edge-list text format: a `# nodes N` header followed by
    /// `u v [w]` lines (0-based, weight defaults to 1).
    pub fn from_edge_list_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let n = loop {
            let Some((i, line)) = lines.next() else {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing `# nodes N` header".into(),
                });
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.trim_start_matches('#').split_whitespace();
            match (line.starts_with('#'), parts.next(), parts.next()) {
                (true, Some("nodes"), Some(count)) => {
                    break count.parse::<usize>().map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: format!("bad node count: {e}"),
                    })?
                }
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: "expected `# nodes N` header".into(),
                    })
                }
            }
        };
        let mut edges = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected `u v [w]`, got {line:?}"),
                });
            }
            let parse_idx = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: format!("bad node index {s:?}: {e}"),
                })
            };
            let w = match fields.get(2) {
                Some(s) => s.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: format!("bad weight {s:?}: {e}"),
                })?,
                None => 1.0,
            };
            edges.push((parse_idx(fields[0])?, parse_idx(fields[1])?, w));
        }
        Graph::new(n, edges)
    }

    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("# nodes {}\n", self.n);
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.u, e.v, e.w);
        }
        out
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Graph::from_edge_list_str(&text)
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_edge_list_string()).map_err(|e| Error::io(path, e))
    }
}

/// Builds a graph from `(u, v, w)` triples.
pub fn build_graph(n: usize, edges: &[(usize, usize, f64)]) -> Result<Graph> {
    Graph::new(n, edges.iter().copied())
}

/// Cycle on `t` nodes with unit weights.
pub fn ring_graph(t: usize) -> Result<Graph> {
    if t < 3 {
        return Err(Error::TooSmall {
            what: "ring length",
            got: t,
            min: 3,
        });
    }
    Graph::new(t, (0..t).map(|i| (i, (i + 1) % t, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl TryFrom<u32> for Connectivity {
    type Error = Error;

    fn try_from(value: u32) -> Result<Self> {
        match value {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(Error::InvalidParameter(format!(
                "grid connectivity must be 4 or 8, got {other}"
            ))),
        }
    }
}

/// Pixel lattice over row-major indices `r * cols + c` with unit weights.
pub fn grid_graph(rows: usize, cols: usize, connectivity: Connectivity) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::TooSmall {
            what: "grid side",
            got: 0,
            min: 1,
        });
    }
    let idx = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((idx(r, c), idx(r, c + 1), 1.0));
            }
            if r + 1 < rows {
                edges.push((idx(r, c), idx(r + 1, c), 1.0));
                if connectivity == Connectivity::Eight {
                    if c + 1 < cols {
                        edges.push((idx(r, c), idx(r + 1, c + 1), 1.0));
                    }
                    if c > 0 {
                        edges.push((idx(r, c), idx(r + 1, c - 1), 1.0));
                    }
                }
            }
        }
    }
    Graph::new(rows * cols, edges)
}

/// Two disjoint node sets covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    low: Vec<usize>,
    high: Vec<usize>,
    is_low: Vec<bool>,
}

impl Bipartition {
    pub fn new(n: usize, low: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut is_low = vec![false; n];
        for u in low {
            if u >= n {
                return Err(Error::IndexOutOfRange { node: u, n });
            }
            is_low[u] = true;
        }
        Ok(Self::from_mask(is_low))
    }

    pub fn from_mask(is_low: Vec<bool>) -> Self {
        let (mut low, mut high) = (Vec::new(), Vec::new());
        for (u, &l) in is_low.iter().enumerate() {
            if l {
                low.push(u)
            } else {
                high.push(u)
            }
        }
        Bipartition { low, high, is_low }
    }

    pub fn n(&self) -> usize {
        self.is_low.len()
    }

    pub fn low(&self) -> &[usize] {
        &self.low
    }

    pub fn high(&self) -> &[usize] {
        &self.high
    }

    pub fn is_low(&self, u: usize) -> bool {
        self.is_low[u]
    }

    pub fn mask(&self) -> &[bool] {
        &self.is_low
    }
}

/// True iff every edge of `g` joins the low set to the high set.
pub fn check_bipartite(g: &Graph, b: &Bipartition) -> bool {
    b.n() == g.n() && g.edges().iter().all(|e| b.is_low(e.u) != b.is_low(e.v))
}

/// A real symmetric matrix; symmetry is checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = max_asymmetry(&m);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(SymmetricMatrix(m))
    }

    /// Replaces `m` by `(m + mᵀ) / 2`; used for products that are symmetric
    /// in exact arithmetic.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymmetricMatrix((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        SymmetricMatrix(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `D^{-1/2} (D - A) D^{-1/2}`. Zero-degree nodes get a zero row and column.
pub fn normalized_laplacian(g: &Graph) -> SymmetricMatrix {
    let n = g.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|u| {
            let d = g.degree(u);
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut l = DMatrix::zeros(n, n);
    for u in 0..n {
        if inv_sqrt[u] > 0.0 {
            l[(u, u)] = 1.0;
        }
    }
    for e in g.edges() {
        let val = -e.w * inv_sqrt[e.u] * inv_sqrt[e.v];
        l[(e.u, e.v)] = val;
        l[(e.v, e.u)] = val;
    }
    SymmetricMatrix(l)
}

/// Like [`normalized_laplacian`] but rejects zero-degree nodes.
pub fn normalized_laplacian_strict(g: &Graph) -> Result<SymmetricMatrix> {
    if let Some(u) = (0..g.n()).find(|&u| g.neighbor_count(u) == 0) {
        return Err(Error::IsolatedNode(u));
    }
    Ok(normalized_laplacian(g))
}

/// Ascending eigenvalues with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralBasis {
    /// Checks that the columns of `eigenvectors` are orthonormal to 1e-9.
    pub fn new(eigenvalues: DVector<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if eigenvectors.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "{n} eigenvalues but eigenvector matrix is {:?}",
                eigenvectors.shape()
            )));
        }
        let dev = (eigenvectors.transpose() * &eigenvectors - DMatrix::identity(n, n)).amax();
        if dev > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "eigenvectors are not orthonormal (deviation {dev:e})"
            )));
        }
        Ok(SpectralBasis {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `U diag(f(λ)) Uᵀ`.
    pub fn matrix_function(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let fk = f(lambda);
            scaled.column_mut(k).scale_mut(fk);
        }
        SymmetricMatrix::symmetrized(scaled * u.transpose())
    }

    /// `U Λ Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.matrix_function(|l| l).into_matrix()
    }
}

const SIGN_TOL: f64 = 1e-8;

/// Dense symmetric eigendecomposition (implicit QR on the tridiagonal form).
///
/// Eigenvalues are sorted ascending with a stable sort; each eigenvector is
/// flipped so that its first entry of magnitude above 1e-8 is positive.
pub fn eigendecompose(m: &SymmetricMatrix) -> Result<SpectralBasis> {
    let n = m.dim();
    let eig = SymmetricEigen::try_new(m.matrix().clone(), f64::EPSILON, 1000 * n.max(1))
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let flip = col
            .iter()
            .find(|x| x.abs() > SIGN_TOL)
            .is_some_and(|&x| x < 0.0);
        let sign = if flip { -1.0 } else { 1.0 };
        eigenvectors.column_mut(dst).copy_from(&(col * sign));
    }
    Ok(SpectralBasis {
        eigenvalues,
        eigenvectors,
    })
}
