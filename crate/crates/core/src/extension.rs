//! Oversampled bipartite extensions of arbitrary graphs.
//!
//! A proper K-coloring is split into a foundation bipartite graph
//! (`colors < l` versus `colors >= l`). Every node with an intra-set
//! ("dropped") edge gets a duplicate placed on the opposite side, each dropped
//! edge `(u, v)` is rerouted as `(u, v')` and `(v, u')`, and every duplicate is
//! tied to its original by a vertical edge. The result is bipartite and keeps
//! every original edge.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_bipartite, Bipartition, Edge, Graph};

/// Default weight on the edge joining a duplicate to its original.
pub const DEFAULT_VERTICAL_WEIGHT: f64 = 1.0;

const REDUNDANCY_TOL: f64 = 1e-12;
const HARARY_RESTARTS: usize = 8;

/// A proper vertex coloring with colors `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    colors: Vec<usize>,
    k: usize,
}

impl Coloring {
    pub fn new(colors: Vec<usize>) -> Self {
        let k = colors.iter().map(|&c| c + 1).max().unwrap_or(0);
        Coloring { colors, k }
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn class(&self, color: usize) -> Vec<usize> {
        (0..self.colors.len())
            .filter(|&u| self.colors[u] == color)
            .collect()
    }

    pub fn is_proper(&self, g: &Graph) -> bool {
        self.colors.len() == g.n() && g.edges().iter().all(|e| self.colors[e.u] != self.colors[e.v])
    }
}

/// Welsh–Powell: visit nodes by descending neighbor count (ties by index) and
/// give each the smallest color unused by its already colored neighbors.
pub fn greedy_coloring(g: &Graph) -> Coloring {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&u| std::cmp::Reverse(g.neighbor_count(u)));
    let mut colors = vec![usize::MAX; n];
    let mut used = Vec::new();
    for u in order {
        used.clear();
        used.resize(g.neighbor_count(u) + 1, false);
        for &(v, _) in g.neighbors(u) {
            if colors[v] < used.len() {
                used[colors[v]] = true;
            }
        }
        colors[u] = used.iter().position(|&x| !x).unwrap();
    }
    Coloring::new(colors)
}

/// A bipartite subgraph together with the edges it leaves out.
#[derive(Debug, Clone)]
pub struct Foundation {
    pub graph: Graph,
    pub bipartition: Bipartition,
    pub dropped: Vec<Edge>,
}

/// Splits colors into `{0..l-1}` (low) and `{l..K-1}` (high) and keeps only
/// the crossing edges.
pub fn foundation_bipartite(g: &Graph, c: &Coloring, l: usize) -> Result<Foundation> {
    if c.colors.len() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "coloring covers {} nodes, graph has {}",
            c.colors.len(),
            g.n()
        )));
    }
    if l == 0 || l >= c.k {
        return Err(Error::BadSplitIndex {
            split: l,
            colors: c.k,
        });
    }
    let bipartition = Bipartition::from_mask(c.colors.iter().map(|&col| col < l).collect());
    Ok(split_by(g, bipartition))
}

fn split_by(g: &Graph, bipartition: Bipartition) -> Foundation {
    let (kept, dropped): (Vec<Edge>, Vec<Edge>) = g
        .edges()
        .iter()
        .partition(|e| bipartition.is_low(e.u) != bipartition.is_low(e.v));
    let graph = Graph::new(g.n(), kept.iter().map(|e| (e.u, e.v, e.w)))
        .expect("subgraph of a valid graph");
    Foundation {
        graph,
        bipartition,
        dropped,
    }
}

/// An extended bipartite graph and its relation to the original.
#[derive(Debug, Clone)]
pub struct OversampledExtension {
    original: Graph,
    extended: Graph,
    bipartition: Bipartition,
    duplicate_of: Vec<usize>,
    original_bipartition: Bipartition,
    dropped: Vec<Edge>,
    isolated_low: usize,
    isolated_high: usize,
    redundancy: f64,
}

impl OversampledExtension {
    /// Wraps an already bipartite graph without adding nodes.
    pub fn identity(g: &Graph, bipartition: Bipartition) -> Result<Self> {
        if !check_bipartite(g, &bipartition) {
            return Err(Error::NotBipartite("input"));
        }
        Ok(OversampledExtension {
            original: g.clone(),
            extended: g.clone(),
            isolated_low: bipartition.low().len(),
            isolated_high: bipartition.high().len(),
            original_bipartition: bipartition.clone(),
            bipartition,
            duplicate_of: Vec::new(),
            dropped: Vec::new(),
            redundancy: 1.0,
        })
    }

    pub fn original(&self) -> &Graph {
        &self.original
    }

    pub fn extended(&self) -> &Graph {
        &self.extended
    }

    pub fn bipartition(&self) -> &Bipartition {
        &self.bipartition
    }

    pub fn original_bipartition(&self) -> &Bipartition {
        &self.original_bipartition
    }

    pub fn dropped(&self) -> &[Edge] {
        &self.dropped
    }

    pub fn n0(&self) -> usize {
        self.original.n()
    }

    pub fn n1(&self) -> usize {
        self.extended.n()
    }

    /// Original index of extended node `n0 + i`, for `i in 0..n1-n0`.
    pub fn duplicate_of(&self) -> &[usize] {
        &self.duplicate_of
    }

    /// Maps any extended node to the original node it stands for.
    pub fn origin(&self, node: usize) -> usize {
        if node < self.n0() {
            node
        } else {
            self.duplicate_of[node - self.n0()]
        }
    }

    /// Numbers of low and high foundation nodes that were not duplicated.
    pub fn isolated_counts(&self) -> (usize, usize) {
        (self.isolated_low, self.isolated_high)
    }

    pub fn rho(&self) -> f64 {
        self.redundancy
    }

    /// Verifies that every original edge appears exactly once in the
    /// extension, either directly or through one rerouted copy, and that every
    /// non-vertical extended edge projects back onto an original edge.
    pub fn check_edge_preservation(&self) -> Result<()> {
        let n0 = self.n0();
        let mut dup: HashMap<usize, usize> = HashMap::new();
        for (i, &orig) in self.duplicate_of.iter().enumerate() {
            if dup.insert(orig, n0 + i).is_some() {
                return Err(Error::InconsistentExtension(format!(
                    "node {orig} duplicated twice"
                )));
            }
        }
        let weight_matches = |a: usize, b: usize, w: f64| {
            self.extended.has_edge(a, b) && self.extended.adjacency()[(a, b)] == w
        };
        for e in self.original.edges() {
            let direct = weight_matches(e.u, e.v, e.w);
            let rerouted = dup.get(&e.v).is_some_and(|&vd| weight_matches(e.u, vd, e.w))
                || dup.get(&e.u).is_some_and(|&ud| weight_matches(e.v, ud, e.w));
            if direct == rerouted {
                return Err(Error::InconsistentExtension(format!(
                    "edge ({}, {}) preserved {} times",
                    e.u,
                    e.v,
                    if direct { "multiple" } else { "zero" }
                )));
            }
        }
        for e in self.extended.edges() {
            let (pu, pv) = (self.origin(e.u), self.origin(e.v));
            if pu == pv {
                continue;
            }
            if !self.original.has_edge(pu, pv) || self.original.adjacency()[(pu, pv)] != e.w {
                return Err(Error::InconsistentExtension(format!(
                    "extended edge ({}, {}) has no original counterpart",
                    e.u, e.v
                )));
            }
        }
        Ok(())
    }

    pub fn metadata(&self) -> ExtensionMetadata {
        ExtensionMetadata {
            n0: self.n0(),
            n1: self.n1(),
            low: self.bipartition.low().to_vec(),
            high: self.bipartition.high().to_vec(),
            duplicate_of: self
                .duplicate_of
                .iter()
                .enumerate()
                .map(|(i, &o)| [self.n0() + i, o])
                .collect(),
            rho: self.redundancy,
        }
    }
}

/// JSON-facing summary of an extension. `duplicate_of` lists
/// `[extended node, original node]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionMetadata {
    pub n0: usize,
    pub n1: usize,
    pub low: Vec<usize>,
    pub high: Vec<usize>,
    pub duplicate_of: Vec<[usize; 2]>,
    pub rho: f64,
}

/// K-coloring extension with unit vertical edges.
pub fn extend_graph(g: &Graph, c: &Coloring, l: usize) -> Result<OversampledExtension> {
    extend_graph_with(g, c, l, DEFAULT_VERTICAL_WEIGHT)
}

pub fn extend_graph_with(
    g: &Graph,
    c: &Coloring,
    l: usize,
    vertical_weight: f64,
) -> Result<OversampledExtension> {
    let foundation = foundation_bipartite(g, c, l)?;
    extend_foundation(g, foundation, vertical_weight)
}

fn extend_foundation(
    g: &Graph,
    foundation: Foundation,
    vertical_weight: f64,
) -> Result<OversampledExtension> {
    let n0 = g.n();
    let Foundation {
        bipartition: base,
        dropped,
        ..
    } = foundation;

    let mut needs_dup = vec![false; n0];
    for e in &dropped {
        needs_dup[e.u] = true;
        needs_dup[e.v] = true;
    }
    let duplicate_of: Vec<usize> = (0..n0).filter(|&u| needs_dup[u]).collect();
    let mut dup_index = vec![usize::MAX; n0];
    for (i, &u) in duplicate_of.iter().enumerate() {
        dup_index[u] = n0 + i;
    }
    let n1 = n0 + duplicate_of.len();

    let mut edges: Vec<(usize, usize, f64)> = g
        .edges()
        .iter()
        .filter(|e| base.is_low(e.u) != base.is_low(e.v))
        .map(|e| (e.u, e.v, e.w))
        .collect();
    for e in &dropped {
        edges.push((e.u, dup_index[e.v], e.w));
        edges.push((e.v, dup_index[e.u], e.w));
    }
    for &u in &duplicate_of {
        edges.push((u, dup_index[u], vertical_weight));
    }
    let extended = Graph::new(n1, edges)?;

    let mut is_low = base.mask().to_vec();
    is_low.extend(duplicate_of.iter().map(|&u| !base.is_low(u)));
    let bipartition = Bipartition::from_mask(is_low);

    let isolated_low = base.low().iter().filter(|&&u| !needs_dup[u]).count();
    let isolated_high = base.high().iter().filter(|&&u| !needs_dup[u]).count();
    let ext = OversampledExtension {
        original: g.clone(),
        extended,
        bipartition,
        duplicate_of,
        original_bipartition: base,
        dropped,
        isolated_low,
        isolated_high,
        redundancy: n1 as f64 / n0 as f64,
    };
    redundancy(&ext)?;
    Ok(ext)
}

/// Time-domain extension of a ring of length `t`.
///
/// Even rings are already bipartite. Odd rings `t = 2s + 1` are 3-colored as
/// `S1 = {2, 4, .., 2s}`, `S2 = {0}`, `S3 = {1, 3, .., 2s - 1}` and extended
/// with `S1 ∪ S2` as the low foundation set; only the wrap-around edge
/// `(2s, 0)` is dropped, giving low/high sizes `s + 1` and `s + 2`.
pub fn ring_extend(t: usize) -> Result<OversampledExtension> {
    ring_extend_with(t, DEFAULT_VERTICAL_WEIGHT)
}

pub fn ring_extend_with(t: usize, vertical_weight: f64) -> Result<OversampledExtension> {
    let ring = crate::graph::ring_graph(t)?;
    if t.is_multiple_of(2) {
        let b = Bipartition::from_mask((0..t).map(|i| i % 2 == 0).collect());
        return OversampledExtension::identity(&ring, b);
    }
    let colors = (0..t)
        .map(|i| match i {
            0 => 1,
            i if i % 2 == 0 => 0,
            _ => 2,
        })
        .collect();
    extend_graph_with(&ring, &Coloring::new(colors), 2, vertical_weight)
}

/// Tensor product with K2: node `u` keeps index `u` (low), its copy is
/// `n + u` (high), and each edge `(u, v)` becomes `(u, v')` and `(v, u')`.
pub fn bipartite_double_cover(g: &Graph) -> OversampledExtension {
    let n = g.n();
    let edges = g
        .edges()
        .iter()
        .flat_map(|e| [(e.u, n + e.v, e.w), (e.v, n + e.u, e.w)]);
    let extended = Graph::new(2 * n, edges).expect("double cover of a valid graph");
    let bipartition = Bipartition::from_mask((0..2 * n).map(|i| i < n).collect());
    OversampledExtension {
        original: g.clone(),
        extended,
        bipartition,
        duplicate_of: (0..n).collect(),
        original_bipartition: Bipartition::from_mask(vec![true; n]),
        dropped: g.edges().to_vec(),
        isolated_low: 0,
        isolated_high: 0,
        redundancy: 2.0,
    }
}

/// Approximate max-cut bipartite subgraph used by the critically sampled
/// baseline: seeded random starts refined by single-node flips until no flip
/// increases the cut weight; the best of the restarts is kept. When the graph
/// is bipartite its exact 2-coloring is tried first.
pub fn harary_bipartition(g: &Graph, seed: u64) -> Foundation {
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<bool>> = Vec::with_capacity(HARARY_RESTARTS + 1);
    if let Some(side) = g.two_coloring() {
        starts.push(side.iter().map(|&s| s == 0).collect());
    }
    for _ in 0..HARARY_RESTARTS {
        starts.push((0..n).map(|_| rng.random::<bool>()).collect());
    }
    let mut best: Option<(f64, Vec<bool>)> = None;
    for mut side in starts {
        local_max_cut(g, &mut side);
        let cut = cut_weight(g, &side);
        if best.as_ref().is_none_or(|(b, _)| cut > *b) {
            best = Some((cut, side));
        }
    }
    let (_, side) = best.expect("at least one restart");
    split_by(g, Bipartition::from_mask(side))
}

fn local_max_cut(g: &Graph, side: &mut [bool]) {
    loop {
        let mut improved = false;
        for u in 0..g.n() {
            let (mut same, mut cross) = (0.0, 0.0);
            for &(v, w) in g.neighbors(u) {
                if side[v] == side[u] {
                    same += w
                } else {
                    cross += w
                }
            }
            if same > cross {
                side[u] = !side[u];
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
}

fn cut_weight(g: &Graph, side: &[bool]) -> f64 {
    g.edges()
        .iter()
        .filter(|e| side[e.u] != side[e.v])
        .map(|e| e.w)
        .sum()
}

/// `N1 / N0`, cross-checked against `2 - (I(L_b) + I(H_b)) / N0`.
pub fn redundancy(e: &OversampledExtension) -> Result<f64> {
    let n0 = e.n0() as f64;
    let by_size = e.n1() as f64 / n0;
    let by_isolation = 2.0 - (e.isolated_low + e.isolated_high) as f64 / n0;
    if (by_size - by_isolation).abs() > REDUNDANCY_TOL {
        return Err(Error::InconsistentExtension(format!(
            "N1/N0 = {by_size} but 2 - I/N0 = {by_isolation}"
        )));
    }
    Ok(by_size)
}

/// Extends `g` with a greedy coloring and the split `ceil(K / 2)`. Graphs
/// that are already bipartite under that coloring (or edgeless) are returned
/// unextended.
pub fn auto_extend(g: &Graph, vertical_weight: f64) -> Result<OversampledExtension> {
    let coloring = greedy_coloring(g);
    if coloring.k() < 2 {
        let b = Bipartition::from_mask(vec![true; g.n()]);
        return OversampledExtension::identity(g, b);
    }
    let split = coloring.k().div_ceil(2);
    extend_graph_with(g, &coloring, split, vertical_weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, normalized_laplacian, eigendecompose, ring_graph};

    fn triangle() -> Graph {
        build_graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    fn chromatic_number_brute(g: &Graph) -> usize {
        for k in 1..=g.n() {
            let total = k.pow(g.n() as u32);
            for code in 0..total {
                let mut c = code;
                let colors: Vec<usize> = (0..g.n())
                    .map(|_| {
                        let x = c % k;
                        c /= k;
                        x
                    })
                    .collect();
                if g.edges().iter().all(|e| colors[e.u] != colors[e.v]) {
                    return k;
                }
            }
        }
        g.n()
    }

    #[test]
    fn greedy_small_cases() {
        let k2 = build_graph(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(greedy_coloring(&k2).k(), 2);
        let r5 = ring_graph(5).unwrap();
        let c = greedy_coloring(&r5);
        assert_eq!(c.k(), 3);
        assert!(c.is_proper(&r5));
        let star = build_graph(6, &[(0, 1, 1.), (0, 2, 1.), (0, 3, 1.), (0, 4, 1.), (0, 5, 1.)])
            .unwrap();
        assert_eq!(greedy_coloring(&star).k(), 2);
        assert_eq!(chromatic_number_brute(&star), 2);
    }

    #[test]
    fn foundation_dropped_counts() {
        let k2 = build_graph(2, &[(0, 1, 1.0)]).unwrap();
        let f = foundation_bipartite(&k2, &greedy_coloring(&k2), 1).unwrap();
        assert!(f.dropped.is_empty());

        // classes sized (2, 1, 2)
        let r5 = ring_graph(5).unwrap();
        let c = Coloring::new(vec![0, 2, 0, 2, 1]);
        assert!(c.is_proper(&r5));
        assert_eq!(c.class(0).len(), 2);
        assert_eq!(c.class(1).len(), 1);
        assert_eq!(c.class(2).len(), 2);
        let f = foundation_bipartite(&r5, &c, 2).unwrap();
        assert_eq!(f.dropped.len(), 1);

        let greedy = greedy_coloring(&r5);
        assert_eq!(foundation_bipartite(&r5, &greedy, 1).unwrap().dropped.len(), 1);

        let tri = triangle();
        let c3 = greedy_coloring(&tri);
        assert_eq!(c3.k(), 3);
        assert_eq!(foundation_bipartite(&tri, &c3, 1).unwrap().dropped.len(), 1);
        assert!(matches!(
            foundation_bipartite(&tri, &c3, 3),
            Err(Error::BadSplitIndex { split: 3, colors: 3 })
        ));
        assert!(matches!(
            foundation_bipartite(&tri, &c3, 0),
            Err(Error::BadSplitIndex { .. })
        ));
    }

    #[test]
    fn aligned_bipartite_extension_is_identity() {
        let g = ring_graph(6).unwrap();
        let e = extend_graph(&g, &greedy_coloring(&g), 1).unwrap();
        assert_eq!(e.n1(), 6);
        assert_eq!(redundancy(&e).unwrap(), 1.0);
        assert_eq!(e.extended().adjacency(), g.adjacency());
    }

    #[test]
    fn triangle_extension() {
        let tri = triangle();
        let e = extend_graph(&tri, &greedy_coloring(&tri), 2).unwrap();
        assert_eq!(e.n1(), 5);
        assert!((redundancy(&e).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!(check_bipartite(e.extended(), e.bipartition()));
        e.check_edge_preservation().unwrap();
        // two kept, two rerouted, two vertical
        assert_eq!(e.extended().edges().len(), 2 + 2 + 2);
    }

    #[test]
    fn odd_ring_sizes() {
        for t in [3usize, 5, 7, 9, 487] {
            let s = (t - 1) / 2;
            let e = ring_extend(t).unwrap();
            assert_eq!(e.bipartition().low().len(), s + 1);
            assert_eq!(e.bipartition().high().len(), s + 2);
            assert_eq!(
                redundancy(&e).unwrap(),
                (2 * s + 3) as f64 / (2 * s + 1) as f64
            );
            assert!(check_bipartite(e.extended(), e.bipartition()));
            e.check_edge_preservation().unwrap();
        }
        assert_eq!(ring_extend(5).unwrap().n1(), 7);
        assert_eq!(ring_extend(487).unwrap().n1(), 489);
    }

    #[test]
    fn even_ring_identity() {
        let e = ring_extend(4).unwrap();
        assert_eq!(e.rho(), 1.0);
        assert_eq!(e.bipartition().low(), &[0, 2]);
        assert_eq!(e.bipartition().high(), &[1, 3]);
        assert!(matches!(ring_extend(2), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn double_cover_shapes() {
        let k2 = build_graph(2, &[(0, 1, 1.0)]).unwrap();
        let dc = bipartite_double_cover(&k2);
        assert_eq!(dc.n1(), 4);
        assert!((0..4).all(|u| dc.extended().neighbor_count(u) == 1));
        // K2 x K2 is two disjoint edges
        assert!(dc.extended().has_edge(0, 3) && dc.extended().has_edge(1, 2));

        let dc = bipartite_double_cover(&triangle());
        assert_eq!(dc.n1(), 6);
        assert!((0..6).all(|u| dc.extended().neighbor_count(u) == 2));
        assert!(dc.extended().is_connected());
        assert_eq!(redundancy(&dc).unwrap(), 2.0);
        dc.check_edge_preservation().unwrap();
    }

    #[test]
    fn double_cover_spectrum_is_folded_union() {
        let g = build_graph(5, &[(0, 1, 1.), (1, 2, 2.), (2, 0, 1.), (2, 3, 1.), (3, 4, 0.5)])
            .unwrap();
        let base = eigendecompose(&normalized_laplacian(&g)).unwrap();
        let mut expected: Vec<f64> = base
            .eigenvalues()
            .iter()
            .flat_map(|&l| [l, 2.0 - l])
            .collect();
        expected.sort_by(f64::total_cmp);
        let dc = bipartite_double_cover(&g);
        let cover = eigendecompose(&normalized_laplacian(dc.extended())).unwrap();
        for (a, b) in cover.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn harary_small_cases() {
        let tri = triangle();
        assert_eq!(harary_bipartition(&tri, 1).dropped.len(), 1);
        let r5 = ring_graph(5).unwrap();
        for seed in 0..10 {
            assert_eq!(harary_bipartition(&r5, seed).dropped.len(), 1);
        }
        let r6 = ring_graph(6).unwrap();
        let f = harary_bipartition(&r6, 3);
        assert!(f.dropped.is_empty());
        assert!(check_bipartite(&f.graph, &f.bipartition));
    }

    #[test]
    fn brute_force_max_cut_matches_on_tiny_graphs() {
        for g in [triangle(), ring_graph(5).unwrap()] {
            let n = g.n();
            let best = (0u32..1 << n)
                .map(|mask| {
                    let side: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                    cut_weight(&g, &side)
                })
                .fold(0.0, f64::max);
            let f = harary_bipartition(&g, 7);
            assert_eq!(f.graph.total_weight(), best);
        }
    }

    #[test]
    fn metadata_json_fields() {
        let e = ring_extend(5).unwrap();
        let json = serde_json::to_value(e.metadata()).unwrap();
        assert_eq!(json["n0"], 5);
        assert_eq!(json["n1"], 7);
        assert_eq!(json["duplicate_of"][0], serde_json::json!([5, 0]));
        assert_eq!(json["duplicate_of"][1], serde_json::json!([6, 4]));
    }
}
