//! Deterministic fixture generators: molecule-scale random graphs for the
//! engine and a citation-scale node-classification setup for the
//! out-of-core path. No dataset downloads; everything derives from a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

use crate::graph::Graph;
use crate::mat::Mat;
use crate::models::{ModelConfig, ModelKind, TaskKind};
use crate::weights::ModelWeights;

/// Random undirected graph (both edge directions present, no self-loops,
/// no duplicate pairs) with uniform features in [-1, 1]. A pair's two
/// directed edges share the same edge-feature row, molecule style.
pub fn random_graph(n: usize, avg_degree: f64, d_in: usize, d_e: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target_pairs = ((n as f64 * avg_degree) / 2.0).round() as usize;
    let max_pairs = n * (n - 1) / 2;
    let target_pairs = target_pairs.min(max_pairs);

    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(2 * target_pairs);
    let mut edge_feats = Vec::with_capacity(2 * target_pairs * d_e);
    let mut guard = 0;
    while seen.len() < target_pairs && guard < 50 * target_pairs + 100 {
        guard += 1;
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            continue;
        }
        let feat: Vec<f32> = (0..d_e).map(|_| rng.gen_range(-1.0..1.0)).collect();
        edges.push((a, b));
        edge_feats.extend_from_slice(&feat);
        edges.push((b, a));
        edge_feats.extend_from_slice(&feat);
    }

    let node_feats: Vec<f32> = (0..n * d_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let e = edges.len();
    Graph::new(
        n,
        edges,
        Mat::from_vec(n, d_in, node_feats),
        Mat::from_vec(e, d_e, edge_feats),
    )
    .expect("fixture graph is valid by construction")
}

/// Molecule-shaped sample: 9 node-feature dims, 3 edge-feature dims,
/// 10-40 nodes, average degree around 2.
pub fn molhiv_like(seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(10..=40);
    random_graph(n, 2.0, 9, 3, seed)
}

/// Citation-shaped node-classification fixture: `n` nodes in 7 classes,
/// 1433 sparse input features with a class-indicative block per node,
/// homophilous edges, and a 2-layer width-16 GCN whose planted weights
/// separate the classes. Returns the graph, the model config (weights
/// included), and the ground-truth classes.
pub fn citation_shaped(n: usize, seed: u64) -> (Graph, ModelConfig, Vec<usize>) {
    const CLASSES: usize = 7;
    const D_IN: usize = 1433;
    const HIDDEN: usize = 16;
    const BLOCK: usize = 64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes: Vec<usize> = (0..n).map(|_| rng.gen_range(0..CLASSES)).collect();
    let mut by_class: Vec<Vec<u32>> = vec![Vec::new(); CLASSES];
    for (i, &c) in classes.iter().enumerate() {
        by_class[c].push(i as u32);
    }

    let mut feats = vec![0.0f32; n * D_IN];
    for (i, &c) in classes.iter().enumerate() {
        for _ in 0..12 {
            let j = c * BLOCK + rng.gen_range(0..BLOCK);
            feats[i * D_IN + j] = 0.5;
        }
        for _ in 0..6 {
            let j = rng.gen_range(0..D_IN);
            feats[i * D_IN + j] = 0.25;
        }
    }

    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for _ in 0..2 {
            let c = classes[i as usize];
            let intra = rng.gen::<f64>() < 0.85 && by_class[c].len() > 1;
            let j = if intra {
                loop {
                    let cand = by_class[c][rng.gen_range(0..by_class[c].len())];
                    if cand != i {
                        break cand;
                    }
                }
            } else {
                loop {
                    let cand = rng.gen_range(0..n as u32);
                    if cand != i {
                        break cand;
                    }
                }
            };
            let key = (i.min(j), i.max(j));
            if seen.insert(key) {
                edges.push((i, j));
                edges.push((j, i));
            }
        }
    }
    let e = edges.len();
    let graph = Graph::new(n, edges, Mat::from_vec(n, D_IN, feats), Mat::zeros(e, 0))
        .expect("fixture graph is valid by construction");

    let mut cfg = ModelConfig::paper_default(ModelKind::Gcn, D_IN, 0);
    cfg.num_layers = 2;
    cfg.embed_dim = HIDDEN;
    cfg.head_sizes = vec![CLASSES];
    cfg.task = TaskKind::Node;

    let mut w = ModelWeights::new();
    let mut w0 = vec![0.0f32; HIDDEN * D_IN];
    for k in 0..HIDDEN {
        let c = k % CLASSES;
        for j in 0..D_IN {
            let base = if j / BLOCK == c && j < CLASSES * BLOCK {
                0.12
            } else {
                0.0
            };
            w0[k * D_IN + j] = base + rng.gen_range(-0.005..0.005);
        }
    }
    w.insert("layer0.weight", vec![HIDDEN, D_IN], w0);
    w.insert("layer0.bias", vec![HIDDEN], vec![0.0; HIDDEN]);
    let mut w1 = vec![0.0f32; HIDDEN * HIDDEN];
    for k in 0..HIDDEN {
        for j in 0..HIDDEN {
            w1[k * HIDDEN + j] = if k == j { 0.8 } else { 0.0 } + rng.gen_range(-0.01..0.01);
        }
    }
    w.insert("layer1.weight", vec![HIDDEN, HIDDEN], w1);
    w.insert("layer1.bias", vec![HIDDEN], vec![0.0; HIDDEN]);
    let mut wh = vec![0.0f32; CLASSES * HIDDEN];
    for c in 0..CLASSES {
        for k in 0..HIDDEN {
            wh[c * HIDDEN + k] =
                if k % CLASSES == c { 0.5 } else { 0.0 } + rng.gen_range(-0.01..0.01);
        }
    }
    w.insert("head.0.weight", vec![CLASSES, HIDDEN], wh);
    w.insert("head.0.bias", vec![CLASSES], vec![0.0; CLASSES]);
    cfg.weights = w;

    (graph, cfg, classes)
}

/// Cora-shaped instance: 2708 nodes.
pub fn cora_shaped(seed: u64) -> (Graph, ModelConfig, Vec<usize>) {
    citation_shaped(2708, seed)
}
