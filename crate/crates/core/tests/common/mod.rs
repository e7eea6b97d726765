#![allow(dead_code)]

use jtv_fbank::generators::random_connected_weighted;
use jtv_fbank::graph::Graph;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(n: usize, t: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, t, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Connected weighted Erdős–Rényi graph with `n` in `lo..=hi`.
pub fn random_graph(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Graph {
    let n = rng.random_range(lo..=hi);
    let p = rng.random_range(0.15..0.5);
    random_connected_weighted(n, p, rng.random(), true).unwrap()
}

pub fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
