//! Seeded random graphs for tests, benchmarks and experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

const MAX_ATTEMPTS: usize = 1000;

/// Erdős–Rényi `G(n, p)` with unit weights, redrawn until connected.
pub fn random_connected_graph(n: usize, p: f64, seed: u64) -> Result<Graph> {
    random_connected_weighted(n, p, seed, false)
}

/// Like [`random_connected_graph`]; with `weighted`, edge weights are uniform
/// on `[0.5, 1.5)`.
pub fn random_connected_weighted(n: usize, p: f64, seed: u64, weighted: bool) -> Result<Graph> {
    if n < 2 {
        return Err(Error::TooSmall { what: "node count", got: n, min: 2 });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("edge probability must lie in (0, 1], got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    let w = if weighted { rng.random_range(0.5..1.5) } else { 1.0 };
                    edges.push((u, v, w));
                }
            }
        }
        let g = Graph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::NoConvergence)
}

/// Points uniform in the unit square joined when closer than `radius`,
/// redrawn until connected. Returns the graph and the point coordinates.
pub fn random_geometric_graph(n: usize, radius: f64, seed: u64) -> Result<(Graph, Vec<[f64; 2]>)> {
    if n < 2 {
        return Err(Error::TooSmall { what: "node count", got: n, min: 2 });
    }
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let d = (pts[u][0] - pts[v][0]).hypot(pts[u][1] - pts[v][1]);
                if d < radius {
                    edges.push((u, v, 1.0));
                }
            }
        }
        let g = Graph::new(n, edges)?;
        if g.is_connected() {
            return Ok((g, pts));
        }
    }
    Err(Error::NoConvergence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erdos_renyi_is_connected_and_seeded() {
        let g = random_connected_graph(30, 0.1, 3).unwrap();
        assert!(g.is_connected());
        assert_eq!(g.edges(), random_connected_graph(30, 0.1, 3).unwrap().edges());
        let w = random_connected_weighted(20, 0.3, 1, true).unwrap();
        assert!(w.edges().iter().all(|e| (0.5..1.5).contains(&e.w)));
        assert!(random_connected_graph(1, 0.5, 0).is_err());
        assert!(random_connected_graph(5, 0.0, 0).is_err());
    }

    #[test]
    fn geometric_edges_respect_radius() {
        let (g, pts) = random_geometric_graph(60, 0.25, 2).unwrap();
        assert!(g.is_connected());
        for e in g.edges() {
            let d = (pts[e.u][0] - pts[e.v][0]).hypot(pts[e.u][1] - pts[e.v][1]);
            assert!(d < 0.25);
        }
    }
}
