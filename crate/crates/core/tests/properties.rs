mod common;

use common::{normal_matrix, relative_error, rng};
use jtv_fbank::denoise::{soft_threshold, threshold, DenoiseConfig, Mode, ThresholdRule};
use jtv_fbank::experiments::{seirs_step, SeirsParams, SeirsState};
use jtv_fbank::extension::{
    auto_extend, bipartite_double_cover, extend_graph, greedy_coloring, harary_bipartition, ring_extend,
};
use jtv_fbank::filterbank::{meyer_qmf_kernels, spectral_filter, DomainFilters, JointFilterBank, SamplingOperator};
use jtv_fbank::generators::random_connected_weighted;
use jtv_fbank::graph::{check_bipartite, eigendecompose, normalized_laplacian, Bipartition, Graph};
use jtv_fbank::joint::{
    extend_signal, jft, joint_bipartition, product_graph, restrict_signal, FillMode, JointGraph, JointSignal,
    ProductKind, RestrictMode,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

/// Random weighted edge set on `n` nodes; may be disconnected.
fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let m = pairs.len();
        (Just(n), Just(pairs), proptest::collection::vec((any::<bool>(), 0.1f64..2.0), m))
    })
    .prop_map(|(n, pairs, picks)| {
        let edges = pairs
            .into_iter()
            .zip(picks)
            .filter(|(_, (keep, _))| *keep)
            .map(|((u, v), (_, w))| (u, v, w));
        Graph::new(n, edges).unwrap()
    })
}

fn arb_connected(max_n: usize) -> impl Strategy<Value = Graph> {
    (3..=max_n, 0.2f64..0.7, any::<u64>())
        .prop_map(|(n, p, seed)| random_connected_weighted(n, p, seed, true).unwrap())
}

fn oracle_bipartite(g: &Graph, mask: &[bool]) -> bool {
    g.edges().iter().all(|e| mask[e.u] != mask[e.v])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_spectrum_in_range(g in arb_graph(14)) {
        let b = eigendecompose(&normalized_laplacian(&g)).unwrap();
        for &l in b.eigenvalues().iter() {
            prop_assert!((-1e-10..=2.0 + 1e-10).contains(&l));
        }
        prop_assert!((b.reconstruct() - normalized_laplacian(&g).matrix()).amax() < 1e-9);
    }

    #[test]
    fn bipartite_spectrum_is_symmetric(g in arb_connected(10)) {
        let dc = bipartite_double_cover(&g);
        let ev = eigendecompose(&normalized_laplacian(dc.extended())).unwrap();
        let n = ev.dim();
        for k in 0..n {
            prop_assert!((ev.eigenvalues()[k] + ev.eigenvalues()[n - 1 - k] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn check_bipartite_matches_oracle(g in arb_graph(10), mask_bits in any::<u16>()) {
        let mask: Vec<bool> = (0..g.n()).map(|i| mask_bits >> i & 1 == 1).collect();
        let b = Bipartition::from_mask(mask.clone());
        prop_assert_eq!(check_bipartite(&g, &b), oracle_bipartite(&g, &mask));
        let any_valid = (0u32..1 << g.n()).any(|bits| {
            let m: Vec<bool> = (0..g.n()).map(|i| bits >> i & 1 == 1).collect();
            oracle_bipartite(&g, &m)
        });
        prop_assert_eq!(g.two_coloring().is_some(), any_valid);
    }

    #[test]
    fn greedy_coloring_is_proper(g in arb_graph(16)) {
        let c = greedy_coloring(&g);
        prop_assert!(c.is_proper(&g));
        let max_deg = (0..g.n()).map(|u| g.neighbor_count(u)).max().unwrap_or(0);
        prop_assert!(c.k() <= max_deg + 1);
    }

    #[test]
    fn harary_cut_keeps_half_the_weight(g in arb_graph(14), seed in any::<u64>()) {
        let f = harary_bipartition(&g, seed);
        prop_assert!(check_bipartite(&f.graph, &f.bipartition));
        prop_assert!(f.graph.total_weight() >= 0.5 * g.total_weight() - 1e-12);
        for e in f.graph.edges() {
            prop_assert!(g.has_edge(e.u, e.v));
        }
        let kept = f.graph.total_weight() + f.dropped.iter().map(|e| e.w).sum::<f64>();
        prop_assert!((kept - g.total_weight()).abs() < 1e-9);
    }

    #[test]
    fn extensions_are_bipartite_and_preserve_edges(g in arb_connected(16), split in any::<prop::sample::Index>()) {
        let c = greedy_coloring(&g);
        prop_assume!(c.k() >= 2);
        let l = 1 + split.index(c.k() - 1);
        let e = extend_graph(&g, &c, l).unwrap();
        prop_assert!(check_bipartite(e.extended(), e.bipartition()));
        prop_assert!(e.check_edge_preservation().is_ok());
        prop_assert!(e.rho() >= 1.0 && e.rho() <= 2.0);
    }

    #[test]
    fn spectral_folding_on_bipartite_graphs(g in arb_connected(12)) {
        let e = auto_extend(&g, 1.0).unwrap();
        let b = eigendecompose(&normalized_laplacian(e.extended())).unwrap();
        let c = SamplingOperator::from_bipartition(e.bipartition()).matrix();
        let kp = meyer_qmf_kernels();
        let h = spectral_filter(&b, |l| kp.h(0, l)).into_matrix();
        let folded = spectral_filter(&b, |l| kp.h(0, 2.0 - l)).into_matrix();
        prop_assert!((&c * h * &c - folded).amax() <= 1e-9);
    }

    #[test]
    fn channel_identity(g in arb_connected(12)) {
        let e = auto_extend(&g, 1.0).unwrap();
        let b = eigendecompose(&normalized_laplacian(e.extended())).unwrap();
        let f = DomainFilters::new(&b, e.bipartition(), &meyer_qmf_kernels()).unwrap();
        let sum = (f.composite(0) + f.composite(1)) * 0.5;
        prop_assert!((sum - DMatrix::identity(e.n1(), e.n1())).amax() <= 1e-10);
    }

    #[test]
    fn cartesian_edges_cross_joint_bipartition(g in arb_connected(10), t in 3usize..10) {
        let ge = auto_extend(&g, 1.0).unwrap();
        let te = ring_extend(t).unwrap();
        let jb = joint_bipartition(te.bipartition(), ge.bipartition());
        let p = product_graph(te.extended(), ge.extended(), ProductKind::Cartesian);
        prop_assert!(check_bipartite(&p, &jb));
    }

    #[test]
    fn jft_preserves_energy(g in arb_connected(10), t in 3usize..9, seed in any::<u64>()) {
        let j = JointGraph::new(&g, &jtv_fbank::graph::ring_graph(t).unwrap()).unwrap();
        let x = normal_matrix(g.n(), t, &mut rng(seed));
        let s = jft(&x, &j).unwrap();
        prop_assert!((s.norm() - x.norm()).abs() <= 1e-9 * x.norm());
    }

    #[test]
    fn soft_threshold_is_a_contraction(a in -10.0f64..10.0, b in -10.0f64..10.0, tau in 0.0f64..5.0) {
        prop_assert!((soft_threshold(a, tau) - soft_threshold(b, tau)).abs() <= (a - b).abs() + 1e-15);
    }

    #[test]
    fn seirs_step_conserves(beta in 0.0f64..=1.0, te in 1.0f64..10.0, ti in 1.0f64..10.0,
                            tr in 1.0f64..200.0, g in arb_graph(8), fracs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 8)) {
        let n = g.n();
        let p = SeirsParams { beta, te, ti, tr, pop_per_node: 70.0, t_steps: 10, patient_zero: vec![0], seed: 0 };
        let mut st = SeirsState { s: vec![0.0; n], e: vec![0.0; n], i: vec![0.0; n], r: vec![0.0; n], clamp_events: 0 };
        for (v, &(a, b, c, d)) in fracs.iter().enumerate().take(n) {
            let tot = a + b + c + d + 1e-3;
            st.s[v] = (a + 1e-3) / tot;
            st.e[v] = b / tot;
            st.i[v] = c / tot;
            st.r[v] = d / tot;
        }
        for _ in 0..20 {
            st = seirs_step(&st, &g, &p);
            prop_assert!(st.conservation_error() <= 1e-9);
            prop_assert!(st.in_bounds());
        }
        prop_assert_eq!(st.clamp_events, 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cascade_round_trip(g in arb_connected(20), t in 3usize..12, seed in any::<u64>(), copy in any::<bool>()) {
        let ge = auto_extend(&g, 1.0).unwrap();
        let te = ring_extend(t).unwrap();
        let j = JointGraph::from_extensions(&ge, &te).unwrap();
        let bank = JointFilterBank::new(&j, ge.bipartition(), te.bipartition(), &meyer_qmf_kernels()).unwrap();
        let x = JointSignal::new(normal_matrix(g.n(), t, &mut rng(seed))).unwrap();
        let fill = if copy { FillMode::Copy } else { FillMode::Zero };
        let xe = extend_signal(&x, &ge, &te, fill).unwrap();
        let y = bank.synthesize(&bank.analyze(xe.data()).unwrap()).unwrap();
        prop_assert!(relative_error(&y, xe.data()) <= 1e-10);
        let back = restrict_signal(&xe.with_data(y).unwrap(), RestrictMode::default_for(fill));
        prop_assert!(relative_error(back.data(), x.data()) <= 1e-10);
    }

    #[test]
    fn larger_tau_never_grows_coefficients(g in arb_connected(12), seed in any::<u64>(), t1 in 0.0f64..2.0, dt in 0.0f64..2.0, soft in any::<bool>()) {
        let ge = auto_extend(&g, 1.0).unwrap();
        let te = ring_extend(5).unwrap();
        let j = JointGraph::from_extensions(&ge, &te).unwrap();
        let bank = JointFilterBank::new(&j, ge.bipartition(), te.bipartition(), &meyer_qmf_kernels()).unwrap();
        let mut r = rng(seed);
        let x = normal_matrix(ge.n1(), te.n1(), &mut r);
        let s = bank.analyze(&x).unwrap();
        let mut cfg = DenoiseConfig::new(1.0, Mode::Oversampled);
        cfg.rule = if soft { ThresholdRule::Soft } else { ThresholdRule::Hard };
        cfg.protect_ll = r.random();
        cfg.tau = t1;
        let lo = threshold(&s, &cfg).energy();
        cfg.tau = t1 + dt;
        let hi = threshold(&s, &cfg).energy();
        prop_assert!(hi <= lo + 1e-12);

        let s2 = bank.analyze(&normal_matrix(ge.n1(), te.n1(), &mut r)).unwrap();
        cfg.rule = ThresholdRule::Soft;
        let a = threshold(&s, &cfg);
        let b = threshold(&s2, &cfg);
        let mut da = 0.0;
        let mut dab = 0.0;
        for kv in 0..2 {
            for kt in 0..2 {
                da += (a.get(kv, kt) - b.get(kv, kt)).norm_squared();
                dab += (s.get(kv, kt) - s2.get(kv, kt)).norm_squared();
            }
        }
        prop_assert!(da <= dab + 1e-12);
    }

    #[test]
    fn edge_list_round_trip(g in arb_graph(12)) {
        let back = Graph::from_edge_list_str(&g.to_edge_list_string()).unwrap();
        prop_assert_eq!(back.n(), g.n());
        prop_assert_eq!(back.edges(), g.edges());
    }
}
