//! Property tests for the spec'd invariants: conversion round-trips,
//! quantization bounds, packing identity, and schedule dominance. Each
//! derived expectation is checked against an independent oracle computed
//! in the test (sort-and-compare, reversal, analytic formulas), never
//! against the implementation under test.

use mpgnn::engine::{EmbeddingBuffer, EngineStats, MessageBufferPair};
use mpgnn::fixed::{dequantize, quantize, Fixed, Fixed16, Fixed32};
use mpgnn::fixtures::random_graph;
use mpgnn::graph::{add_virtual_node, coo_to_csc, coo_to_csr, Graph};
use mpgnn::mat::Mat;
use mpgnn::models::{random_weights, ModelConfig, ModelKind};
use mpgnn::oracle::{dense_gcn_layer, DenseGraph};
use mpgnn::packed::{pack_row, unpack_row, words_per_row};
use mpgnn::run_model;
use mpgnn::sim::{simulate_costs, Strategy as SimStrategy};

use proptest::prelude::*;

fn graph_from_edges(n: usize, edges: Vec<(u32, u32)>) -> Graph {
    let e = edges.len();
    Graph::new(n, edges, Mat::zeros(n, 0), Mat::zeros(e, 0)).unwrap()
}

fn arb_graph() -> impl Strategy<Value = Graph> {
    (2usize..50).prop_flat_map(|n| {
        proptest::collection::vec((0..n as u32, 0..n as u32), 0..300)
            .prop_map(move |edges| graph_from_edges(n, edges))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Sort-and-compare oracle: flattening CSR back to (src, dst) pairs
    /// and sorting equals the sorted input COO; same via CSC.
    #[test]
    fn csr_csc_round_trip_matches_sorted_coo(g in arb_graph()) {
        let mut want: Vec<(u32, u32)> = g.edges.clone();
        want.sort_unstable();

        let csr = coo_to_csr(&g).unwrap();
        let mut got: Vec<(u32, u32)> = csr.flatten().iter().map(|&(s, d, _)| (s, d)).collect();
        got.sort_unstable();
        prop_assert_eq!(&got, &want);
        // edge_index is a permutation of 0..E
        let mut idx = csr.edge_index.clone();
        idx.sort_unstable();
        prop_assert!(idx.iter().enumerate().all(|(i, &v)| v as usize == i));

        let csc = coo_to_csc(&g).unwrap();
        let mut got: Vec<(u32, u32)> = csc.flatten().iter().map(|&(d, s, _)| (s, d)).collect();
        got.sort_unstable();
        prop_assert_eq!(&got, &want);

        // degree conservation
        let e = g.num_edges as u32;
        prop_assert_eq!(csr.degree.iter().sum::<u32>(), e);
        prop_assert_eq!(csc.degree.iter().sum::<u32>(), e);
    }

    /// Reversal oracle: the CSC of G equals the CSR of edge-reversed G.
    #[test]
    fn csc_equals_csr_of_reversed(g in arb_graph()) {
        let rev = graph_from_edges(
            g.num_nodes,
            g.edges.iter().map(|&(s, d)| (d, s)).collect(),
        );
        let csc = coo_to_csc(&g).unwrap();
        let csr_rev = coo_to_csr(&rev).unwrap();
        prop_assert_eq!(csc.degree, csr_rev.degree);
        prop_assert_eq!(csc.neighbors, csr_rev.neighbors);
        prop_assert_eq!(csc.edge_index, csr_rev.edge_index);
    }

    /// The virtual node's out-degree is N for any graph.
    #[test]
    fn virtual_node_degree_is_n(g in arb_graph()) {
        let n = g.num_nodes;
        let aug = add_virtual_node(&g).unwrap();
        let csr = coo_to_csr(&aug).unwrap();
        prop_assert_eq!(csr.degree[n] as usize, n);
        let csc = coo_to_csc(&aug).unwrap();
        prop_assert_eq!(csc.degree[n] as usize, n);
    }

    /// Quantize-dequantize error bounded by half an LSB in range.
    #[test]
    fn quantize_round_trip_half_lsb(x in -32000.0f64..32000.0) {
        let q32: Fixed32 = quantize(x);
        prop_assert!((dequantize(q32) - x).abs() <= 1.0 / 131072.0);
        let y = x / 300.0; // into Q8.8 range
        let q16: Fixed16 = quantize(y);
        prop_assert!((dequantize(q16) - y).abs() <= 1.0 / 512.0);
    }

    /// unpack(pack(v)) == v with ceil(len/8) words.
    #[test]
    fn pack_row_identity(raw in proptest::collection::vec(any::<i16>(), 1..64)) {
        let vals: Vec<Fixed16> = raw.iter().map(|&r| Fixed16(r)).collect();
        let (words, len) = pack_row(&vals);
        prop_assert_eq!(words.len(), words_per_row(vals.len()));
        prop_assert_eq!(unpack_row(&words, len), vals);
    }

    /// Schedule dominance (streaming <= fixed <= non-pipelined),
    /// conservation, FIFO-depth monotonicity, and the infinite-FIFO
    /// analytic bound.
    #[test]
    fn schedule_dominance_and_bounds(
        costs in proptest::collection::vec((1u64..100, 1u64..100), 1..60),
        depth in 1usize..20,
    ) {
        let ne: Vec<u64> = costs.iter().map(|&(a, _)| a).collect();
        let mp: Vec<u64> = costs.iter().map(|&(_, b)| b).collect();
        let labels: Vec<u32> = (0..ne.len() as u32).collect();

        let none = simulate_costs(&ne, &mp, &labels, depth, SimStrategy::NonPipelined);
        let fixed = simulate_costs(&ne, &mp, &labels, depth, SimStrategy::FixedPipeline);
        let streaming = simulate_costs(&ne, &mp, &labels, depth, SimStrategy::Streaming);

        prop_assert!(streaming.total_cycles <= fixed.total_cycles);
        prop_assert!(fixed.total_cycles <= none.total_cycles);
        for t in [&none, &fixed, &streaming] {
            prop_assert_eq!(t.ne.busy + t.ne.idle, t.total_cycles);
            prop_assert_eq!(t.mp.busy + t.mp.idle, t.total_cycles);
        }
        prop_assert!(streaming.max_fifo_occupancy <= depth);

        // non-increasing in queue depth
        let deeper = simulate_costs(&ne, &mp, &labels, depth + 7, SimStrategy::Streaming);
        prop_assert!(deeper.total_cycles <= streaming.total_cycles);

        // infinite-FIFO bound: analytic last-MP-completion without
        // back-pressure, computed independently
        let unbounded = simulate_costs(&ne, &mp, &labels, usize::MAX, SimStrategy::Streaming);
        let mut analytic = 0u64;
        for k in 0..ne.len() {
            let ne_prefix: u64 = ne[..=k].iter().sum();
            let mp_suffix: u64 = mp[k..].iter().sum();
            analytic = analytic.max(ne_prefix + mp_suffix);
        }
        let total_ne: u64 = ne.iter().sum();
        prop_assert_eq!(unbounded.total_cycles, analytic.max(total_ne));
    }

    /// Fixed-point mean pooling matches a float reference within 2^-8.
    #[test]
    fn mean_pool_matches_float(rows in proptest::collection::vec(
        proptest::collection::vec(-10.0f64..10.0, 4), 1..20,
    )) {
        let n = rows.len();
        let mut x: EmbeddingBuffer<Fixed32> = EmbeddingBuffer::zeros(n, 4);
        for (i, row) in rows.iter().enumerate() {
            let q: Vec<Fixed32> = row.iter().map(|&v| quantize(v)).collect();
            x.set_row(i as u32, &q);
        }
        let pooled = mpgnn::global_mean_pool(&x, None).unwrap();
        for e in 0..4 {
            let want: f64 = rows.iter().map(|r| r[e]).sum::<f64>() / n as f64;
            prop_assert!((dequantize(pooled[e]) - want).abs() < 1.0 / 256.0);
        }
    }
}

/// Dual-route check: the edge-driven GCN kernel against the dense
/// A-hat X W oracle on a random G(20, 60).
#[test]
fn gcn_layer_matches_dense_spmm_oracle() {
    for seed in 0..5u64 {
        let g = random_graph(20, 3.0, 6, 0, 0xD00D + seed);
        let mut cfg = ModelConfig::paper_default(ModelKind::Gcn, 6, 0);
        cfg.num_layers = 1;
        cfg.embed_dim = 5;
        cfg.head_sizes = vec![1];
        cfg.weights = random_weights(&cfg, seed);

        let run = run_model::<Fixed32>(&g, &cfg, None).unwrap();

        let dense = DenseGraph::from_graph(&g);
        let x0 = g.node_features.map(|v| v as f64);
        let wt = cfg.weights.get("layer0.weight").unwrap();
        let w = Mat::from_vec(5, 6, wt.data.iter().map(|&v| v as f64).collect());
        let b: Vec<f64> = cfg
            .weights
            .get("layer0.bias")
            .unwrap()
            .data
            .iter()
            .map(|&v| v as f64)
            .collect();
        // single layer is the last layer: linear, no ReLU
        let want = dense_gcn_layer(&dense, &x0, &w, &b, false);
        for i in 0..g.num_nodes {
            for (a, bb) in run.final_embeddings.row(i).iter().zip(want.row(i)) {
                assert!(
                    (dequantize(*a) - bb).abs() < 1.0 / 256.0,
                    "seed {seed} node {i}"
                );
            }
        }
    }
}

/// A single isolated node through a 5-layer GIN equals the plain MLP
/// chain on its own features (float oracle computed inline).
#[test]
fn single_node_gin_is_its_own_mlp_chain() {
    let g = Graph::new(
        1,
        vec![],
        Mat::from_vec(1, 9, (0..9).map(|i| 0.1 * i as f32 - 0.4).collect()),
        Mat::zeros(0, 3),
    )
    .unwrap();
    let mut cfg = ModelConfig::paper_default(ModelKind::Gin, 9, 3);
    cfg.eps = vec![0.05, 0.1, 0.0, 0.2, 0.15];
    cfg.weights = random_weights(&cfg, 31);

    let run = run_model::<Fixed32>(&g, &cfg, None).unwrap();

    // float chain: h <- MLP_l((1 + eps_l) * h), messages are all zero
    let fmat = |name: &str| {
        let t = cfg.weights.get(name).unwrap();
        (
            t.shape.clone(),
            t.data.iter().map(|&v| v as f64).collect::<Vec<f64>>(),
        )
    };
    let mut h: Vec<f64> = g.node_features.row(0).iter().map(|&v| v as f64).collect();
    for l in 0..5 {
        let scaled: Vec<f64> = h.iter().map(|&v| v * (1.0 + cfg.eps[l])).collect();
        let (s0, w0) = fmat(&format!("layer{l}.mlp.0.weight"));
        let (_, b0) = fmat(&format!("layer{l}.mlp.0.bias"));
        let hidden: Vec<f64> = (0..s0[0])
            .map(|k| {
                let dot: f64 = (0..s0[1]).map(|c| w0[k * s0[1] + c] * scaled[c]).sum();
                (dot + b0[k]).max(0.0)
            })
            .collect();
        let (s1, w1) = fmat(&format!("layer{l}.mlp.1.weight"));
        let (_, b1) = fmat(&format!("layer{l}.mlp.1.bias"));
        h = (0..s1[0])
            .map(|k| {
                let dot: f64 = (0..s1[1]).map(|c| w1[k * s1[1] + c] * hidden[c]).sum();
                dot + b1[k]
            })
            .collect();
    }
    for (a, want) in run.final_embeddings.row(0).iter().zip(&h) {
        assert!((dequantize(*a) - want).abs() < 1e-2);
    }
}

/// O(N) message state: buffers sized by N with widths set by the kernel,
/// never by E (direct pair-level check complementing the acceptance run).
#[test]
fn message_pair_allocation_tracks_n_not_e() {
    let sizes = [(16usize, 32usize), (16, 256), (64, 128), (64, 1024)];
    let mut peaks = std::collections::HashMap::new();
    for &(n, e) in &sizes {
        let g = random_graph(n, e as f64 / n as f64, 3, 0, (n * 7 + e) as u64);
        let mut cfg = ModelConfig::paper_default(ModelKind::Gcn, 3, 0);
        cfg.num_layers = 2;
        cfg.embed_dim = 8;
        cfg.head_sizes = vec![1];
        cfg.weights = random_weights(&cfg, 3);
        let run = run_model::<Fixed32>(&g, &cfg, None).unwrap();
        let stats: &EngineStats = &run.stats;
        peaks
            .entry(n)
            .or_insert_with(Vec::new)
            .push(stats.peak_msg_elems);
    }
    for (n, list) in peaks {
        assert!(
            list.windows(2).all(|w| w[0] == w[1]),
            "peak message state varies with E at N={n}: {list:?}"
        );
    }
}

/// Applying the VN augmentation twice keeps growing the graph (guards
/// against accidental double augmentation being silently idempotent).
#[test]
fn double_virtual_node_grows_twice() {
    let g = random_graph(6, 2.0, 2, 0, 99);
    let once = add_virtual_node(&g).unwrap();
    let twice = add_virtual_node(&once).unwrap();
    assert_eq!(once.num_nodes, 7);
    assert_eq!(twice.num_nodes, 8);
    assert_eq!(twice.num_edges, once.num_edges + 2 * 7);
}

/// Standalone merged layers on a snapshot-loaded pair: scan-flow kernels
/// accept a caller-provided snapshot.
#[test]
fn standalone_scan_layer_runs_on_snapshot() {
    use mpgnn::models::{GatHeadParams, GatKernel};
    use mpgnn::{coo_to_csr, csc_scan_order, run_layer_merged};

    let g = random_graph(8, 2.0, 4, 0, 123);
    let csr = coo_to_csr(&g).unwrap();
    let csc = csc_scan_order(&g).unwrap();
    let mut proj = Mat::zeros(4, 4);
    for i in 0..4 {
        proj.row_mut(i)[i] = Fixed32::from_f64(1.0);
    }
    let head = GatHeadParams {
        proj,
        att_self: vec![Fixed32::from_f64(0.1); 4],
        att_neigh: vec![Fixed32::from_f64(-0.2); 4],
    };
    let kernel = GatKernel::new(vec![head], vec![Fixed32::ZERO; 4], false, 4);
    let mut x = EmbeddingBuffer::<Fixed32>::from_features(&g.node_features, 4);
    let mut msgs = MessageBufferPair::new(8);
    msgs.load_snapshot(&x);
    let mut stats = EngineStats::default();
    run_layer_merged(
        &mut x,
        &mut msgs,
        &csr,
        Some(&csc),
        &Mat::zeros(g.num_edges, 0),
        &kernel,
        &mut stats,
    )
    .unwrap();
    assert_eq!(x.width(), 4);
    assert!(stats.scan_reads > 0);
}

/// Oracle forward on a permuted graph equals the permuted oracle forward
/// to 1e-12 (value-sorted reductions make it exact in practice).
#[test]
fn oracle_is_permutation_exact() {
    use mpgnn::oracle::{reference_forward, OraclePrediction};
    use rand::{Rng, SeedableRng};
    for kind in [
        ModelKind::Gin,
        ModelKind::Pna,
        ModelKind::Gat,
        ModelKind::Dgn,
    ] {
        let mut cfg = ModelConfig::paper_default(kind, 5, 2);
        match kind {
            ModelKind::Gat => {
                cfg.num_layers = 3;
                cfg.heads = 2;
                cfg.head_features = 8;
                cfg.embed_dim = 16;
            }
            _ => {
                cfg.num_layers = 3;
                cfg.embed_dim = 10;
                cfg.eps = vec![0.1; 3];
            }
        }
        cfg.head_sizes = vec![2];
        cfg.weights = random_weights(&cfg, 71 + kind as u64);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5 + kind as u64);
        let g = random_graph(18, 3.0, 5, 2, 0xFACE + kind as u64);
        let n = g.num_nodes;
        let mut perm: Vec<u32> = (0..n as u32).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let mut feats = vec![0.0f32; n * 5];
        for i in 0..n {
            let pi = perm[i] as usize;
            feats[pi * 5..(pi + 1) * 5].copy_from_slice(g.node_features.row(i));
        }
        let pg = Graph::new(
            n,
            g.edges
                .iter()
                .map(|&(s, d)| (perm[s as usize], perm[d as usize]))
                .collect(),
            Mat::from_vec(n, 5, feats),
            g.edge_features.clone(),
        )
        .unwrap();

        let phi: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut phi_p = vec![0.0; n];
        for i in 0..n {
            phi_p[perm[i] as usize] = phi[i];
        }
        let phi_arg = kind.needs_eigenvector().then_some(phi.as_slice());
        let phi_p_arg = kind.needs_eigenvector().then_some(phi_p.as_slice());

        let a = reference_forward(&g, &cfg, phi_arg).unwrap();
        let b = reference_forward(&pg, &cfg, phi_p_arg).unwrap();
        for i in 0..n {
            for (x, y) in a
                .final_embeddings
                .row(i)
                .iter()
                .zip(b.final_embeddings.row(perm[i] as usize))
            {
                assert!(
                    (x - y).abs() <= 1e-12,
                    "{}: emb drift {}",
                    kind.as_str(),
                    (x - y).abs()
                );
            }
        }
        match (&a.prediction, &b.prediction) {
            (OraclePrediction::Graph(x), OraclePrediction::Graph(y)) => {
                for (p, q) in x.iter().zip(y) {
                    assert!((p - q).abs() <= 1e-12);
                }
            }
            _ => panic!(),
        }
    }
}

/// Dominance over a 100k-graph synthetic corpus with varied statistics.
#[test]
fn dominance_holds_on_100k_synthetic_corpus() {
    use mpgnn::sim::{generate_synthetic, simulate, CostModel};
    use rand::{Rng, SeedableRng};
    let cm = CostModel::calibrated_default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x100_000);
    for i in 0..100_000u64 {
        let n = rng.gen_range(8..=96);
        let deg = rng.gen_range(0.5..16.0);
        let pct = rng.gen_range(0.0..0.25);
        let g = generate_synthetic(n, deg, pct, i).unwrap();
        let none = simulate(&g, &cm, SimStrategy::NonPipelined).total_cycles;
        let fixed = simulate(&g, &cm, SimStrategy::FixedPipeline).total_cycles;
        let streaming = simulate(&g, &cm, SimStrategy::Streaming).total_cycles;
        assert!(
            streaming <= fixed && fixed <= none,
            "dominance violated on graph {i}: {streaming} {fixed} {none}"
        );
    }
}

/// GIN-VN on a single-node graph: the virtual node's aggregated message
/// is exactly the single real node's outgoing message.
#[test]
fn gin_vn_single_node_message_exchange() {
    use mpgnn::engine::{EngineStats, MessageBufferPair};
    use mpgnn::models::build_kernels;
    use mpgnn::{coo_to_csr, csc_scan_order};

    let g = Graph::new(
        1,
        vec![],
        Mat::from_vec(1, 3, vec![0.5, -0.25, 1.0]),
        Mat::zeros(0, 0),
    )
    .unwrap();
    let aug = add_virtual_node(&g).unwrap();
    assert_eq!(aug.edges, vec![(1, 0), (0, 1)]);

    let mut cfg = ModelConfig::paper_default(ModelKind::GinVn, 3, 0);
    cfg.num_layers = 2;
    cfg.eps = vec![0.0; 2];
    cfg.embed_dim = 4;
    cfg.head_sizes = vec![1];
    cfg.weights = random_weights(&cfg, 12);

    let csr = coo_to_csr(&aug).unwrap();
    let csc = csc_scan_order(&aug).unwrap();
    let kernels = build_kernels::<Fixed32>(&cfg, &aug, &csr, &csc, None, Some(1)).unwrap();
    let ef: Mat<Fixed32> = Mat::zeros(2, 0);

    let mut x = EmbeddingBuffer::<Fixed32>::from_features(&aug.node_features, 4);
    let mut msgs = MessageBufferPair::new(2);
    msgs.load_initial(kernels[0].as_ref(), &x);
    let mut stats = EngineStats::default();
    mpgnn::engine::run_layer_merged_with(
        &mut x,
        &mut msgs,
        &csr,
        Some(&csc),
        &ef,
        kernels[0].as_ref(),
        Some(kernels[1].as_ref()),
        &mut stats,
    )
    .unwrap();

    // reconstruct the expected exchange through the layer-1 kernel alone
    let k1 = kernels[1].as_ref();
    let expect = |src: u32, dst: u32, eid: u32| -> Vec<Fixed32> {
        let mut state = vec![Fixed32::ZERO; k1.state_dim()];
        k1.init_state(&mut state);
        k1.scatter(src, dst, eid, &[], x.row(src), &mut state);
        let mut msg = vec![Fixed32::ZERO; k1.msg_dim()];
        k1.finalize(dst, &state, x.row(dst), &mut msg);
        msg
    };
    // edge 1 is (0 -> 1): the VN's message comes solely from node 0
    assert_eq!(msgs.read_row(1), expect(0, 1, 1).as_slice());
    assert_eq!(msgs.read_row(0), expect(1, 0, 0).as_slice());
}

/// VN scheduling on a 1-node graph: overlap is impossible, so VN-first
/// and VN-last schedules are identical.
#[test]
fn vn_overlap_degenerate_single_node() {
    use mpgnn::sim::{simulate_vn_overlap, CostModel, VnPosition};
    let g = Graph::new(1, vec![], Mat::zeros(1, 0), Mat::zeros(0, 0)).unwrap();
    let aug = add_virtual_node(&g).unwrap();
    let cm = CostModel::calibrated_default();
    let first = simulate_vn_overlap(&aug, &cm, VnPosition::First, SimStrategy::Streaming);
    let last = simulate_vn_overlap(&aug, &cm, VnPosition::Last, SimStrategy::Streaming);
    assert_eq!(first.total_cycles, last.total_cycles);
}

/// DGN work scaling: each layer touches each edge exactly once, so the
/// instrumented edge-visit counter is L * E (c = L, c' = 0) on the merged
/// path, linear in E and N as required.
#[test]
fn dgn_edge_visits_are_linear() {
    for (n, avg_deg) in [(16usize, 2.0f64), (16, 6.0), (48, 2.0), (48, 6.0)] {
        let g = random_graph(n, avg_deg, 4, 0, (n as u64) * 1000 + avg_deg as u64);
        let mut cfg = ModelConfig::paper_default(ModelKind::Dgn, 4, 0);
        cfg.num_layers = 3;
        cfg.embed_dim = 8;
        cfg.head_sizes = vec![1];
        cfg.weights = random_weights(&cfg, 77);
        let phi: Vec<f64> = (0..n).map(|i| (i as f64 * 0.31).cos()).collect();
        let run = run_model::<Fixed32>(&g, &cfg, Some(&phi)).unwrap();
        assert_eq!(
            run.stats.edge_visits,
            3 * g.num_edges as u64,
            "N={n} deg={avg_deg}"
        );
    }
}
