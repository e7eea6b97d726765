"""Smoke test for the jtv_fbank Python module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import math
import random

import jtv_fbank as jf


def main():
    tri = jf.Graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    assert tri.n == 3 and len(tri.edges) == 3
    lam = tri.spectrum()
    assert abs(lam[0]) < 1e-12 and abs(lam[-1] - 1.5) < 1e-12

    ext = jf.extend_graph(tri, split=2)
    assert (ext.n0, ext.n1) == (3, 5)
    assert abs(ext.rho - 5 / 3) < 1e-12
    assert ext.graph.is_bipartite_with(ext.low)

    ring = jf.ring_extend(487)
    assert ring.n1 == 489
    assert jf.double_cover(tri).n1 == 6

    pr = jf.verify_meyer_pr()
    assert pr["pass"] and pr["grid_points"] == 2001

    rng = random.Random(0)
    x = [[rng.gauss(0, 1) for _ in range(9)] for _ in range(3)]
    y, err = jf.roundtrip(tri, x, mode="oversampled", fill="copy")
    assert err < 1e-10, err

    s = jf.jft(tri, jf.Graph.ring(9), x)
    energy = sum(v * v for row in x for v in row)
    assert abs(sum(v * v for row in s for v in row) - energy) < 1e-9 * energy

    noisy = jf.add_gaussian_noise(x, 0.3, 7)
    est, rho_v, rho_t = jf.denoise_signal(tri, noisy, 0.3, seed=7)
    assert len(est) == 3 and len(est[0]) == 9
    assert rho_v > 1 and rho_t > 1
    assert jf.mse(x, x) == 0.0
    assert math.isinf(jf.snr_db(x, x))

    epi = jf.seirs(jf.Graph.grid(4, 4), preset="high-temp", seed=1, t_steps=50)
    assert len(epi) == 16 and len(epi[0]) == 50
    assert all(0.0 <= v <= 1.0 for row in epi for v in row)

    try:
        jf.Graph(2, [(0, 0, 1.0)])
    except ValueError:
        pass
    else:
        raise AssertionError("self loop accepted")
    try:
        jf.Graph.read_edge_list("/nonexistent/graph.txt")
    except OSError:
        pass
    else:
        raise AssertionError("missing file accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
