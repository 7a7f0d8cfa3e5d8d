//! Full-precision dense reference implementations used to certify the
//! fixed-point engine end to end. Every neighborhood reduction sums its
//! contributions in value-sorted order, which makes the oracle exactly
//! permutation-equivariant (identical multisets reduce identically).

pub mod eigen;

pub use eigen::{
    jacobi_eigen, laplacian, laplacian_eigenvectors, laplacian_eigenvectors_with_values,
    read_eigenvectors, write_eigenvectors, LaplacianKind,
};

use crate::error::{Error, Result};
use crate::graph::{add_virtual_node, Graph, NodeId};
use crate::mat::Mat;
use crate::models::{ModelConfig, ModelKind, TaskKind};

#[derive(Clone, Debug)]
pub enum OraclePrediction {
    Graph(Vec<f64>),
    Node(Mat<f64>),
}

#[derive(Clone, Debug)]
pub struct OracleRun {
    pub prediction: OraclePrediction,
    pub final_embeddings: Mat<f64>,
    pub vn_id: Option<NodeId>,
}

/// Dense graph forms: multiplicity adjacency plus degree tables.
#[derive(Clone, Debug)]
pub struct DenseGraph {
    pub adj: Mat<f64>,
    pub out_degree: Vec<f64>,
    pub in_degree: Vec<f64>,
}

impl DenseGraph {
    pub fn from_graph(g: &Graph) -> Self {
        let n = g.num_nodes;
        let mut adj = Mat::zeros(n, n);
        let mut out_degree = vec![0.0; n];
        let mut in_degree = vec![0.0; n];
        for &(s, d) in &g.edges {
            // row = destination, column = source
            adj.row_mut(d as usize)[s as usize] += 1.0;
            out_degree[s as usize] += 1.0;
            in_degree[d as usize] += 1.0;
        }
        Self {
            adj,
            out_degree,
            in_degree,
        }
    }
}

/// One dense GCN layer, A-hat X W^T + b form, an independent cross-check of
/// the kernel's edge-driven route.
pub fn dense_gcn_layer(
    dense: &DenseGraph,
    x: &Mat<f64>,
    w: &Mat<f64>,
    b: &[f64],
    relu: bool,
) -> Mat<f64> {
    let n = x.rows();
    let mut msgs: Mat<f64> = Mat::zeros(n, x.cols());
    for i in 0..n {
        let recv = 1.0 / (dense.in_degree[i] + 1.0).sqrt();
        for j in 0..n {
            let mult = if i == j {
                dense.adj.row(i)[j] + 1.0 // implicit self-loop
            } else {
                dense.adj.row(i)[j]
            };
            if mult == 0.0 {
                continue;
            }
            let send = 1.0 / (dense.out_degree[j] + 1.0).sqrt();
            for (e, &v) in x.row(j).iter().enumerate() {
                msgs.row_mut(i)[e] += mult * send * recv * v;
            }
        }
    }
    let mut out = Mat::zeros(n, w.rows());
    for i in 0..n {
        for k in 0..w.rows() {
            let mut acc = b[k];
            for (c, &wv) in w.row(k).iter().enumerate() {
                acc += wv * msgs.row(i)[c];
            }
            out.row_mut(i)[k] = if relu { acc.max(0.0) } else { acc };
        }
    }
    out
}

fn sorted_sum(mut vals: Vec<f64>) -> f64 {
    vals.sort_by(f64::total_cmp);
    vals.iter().sum()
}

/// In-edge lists per node, (src, edge-id) sorted by ascending source and
/// arrival order within a source. Built directly from the COO list so the
/// oracle stays independent of the engine's conversion code.
fn in_lists(g: &Graph) -> Vec<Vec<(NodeId, u32)>> {
    let mut triples: Vec<(NodeId, NodeId, u32)> = g
        .edges
        .iter()
        .enumerate()
        .map(|(e, &(s, d))| (d, s, e as u32))
        .collect();
    triples.sort_by_key(|&(d, s, e)| (d, s, e));
    let mut lists = vec![Vec::new(); g.num_nodes];
    for (d, s, e) in triples {
        lists[d as usize].push((s, e));
    }
    lists
}

struct FloatWeights<'a> {
    cfg: &'a ModelConfig,
}

impl FloatWeights<'_> {
    fn mat(&self, name: &str) -> Result<Mat<f64>> {
        let t = self
            .cfg
            .weights
            .get(name)
            .ok_or_else(|| Error::BadWeights(format!("missing tensor `{name}`")))?;
        if t.shape.len() != 2 {
            return Err(Error::BadWeights(format!("tensor `{name}` is not rank 2")));
        }
        Ok(Mat::from_vec(
            t.shape[0],
            t.shape[1],
            t.data.iter().map(|&v| v as f64).collect(),
        ))
    }

    fn vec(&self, name: &str) -> Result<Vec<f64>> {
        let t = self
            .cfg
            .weights
            .get(name)
            .ok_or_else(|| Error::BadWeights(format!("missing tensor `{name}`")))?;
        Ok(t.data.iter().map(|&v| v as f64).collect())
    }
}

fn linear(w: &Mat<f64>, b: &[f64], x: &[f64]) -> Vec<f64> {
    (0..w.rows())
        .map(|k| b[k] + w.row(k).iter().zip(x).map(|(wv, xv)| wv * xv).sum::<f64>())
        .collect()
}

fn mlp(layers: &[(Mat<f64>, Vec<f64>)], x: &[f64]) -> Vec<f64> {
    let mut cur = x.to_vec();
    let last = layers.len() - 1;
    for (i, (w, b)) in layers.iter().enumerate() {
        let mut next = linear(w, b, &cur);
        if i != last {
            for v in next.iter_mut() {
                *v = v.max(0.0);
            }
        }
        cur = next;
    }
    cur
}

fn features_f64(g: &Graph) -> Mat<f64> {
    g.node_features.map(|v| v as f64)
}

/// Full-precision forward pass mirroring the engine's model semantics.
pub fn reference_forward(g: &Graph, cfg: &ModelConfig, phi1: Option<&[f64]>) -> Result<OracleRun> {
    g.validate()?;
    cfg.validate()?;
    cfg.validate_weights()?;

    let augmented;
    let (g_run, vn_id) = if cfg.kind == ModelKind::GinVn {
        augmented = add_virtual_node(g)?;
        (&augmented, Some(g.num_nodes as NodeId))
    } else {
        (g, None)
    };
    let n = g_run.num_nodes;
    if n == 0 {
        return Err(Error::EmptyGraph);
    }

    let fw = FloatWeights { cfg };
    let ins = in_lists(g_run);
    let mut out_degree = vec![0u32; n];
    for &(s, _) in &g_run.edges {
        out_degree[s as usize] += 1;
    }
    let edge_feats: Mat<f64> = g_run.edge_features.map(|v| v as f64);

    let mut x = features_f64(g_run);
    let dims = cfg.layer_dims();
    let last = dims.len() - 1;

    match cfg.kind {
        ModelKind::Gcn => {
            let iso: Vec<f64> = out_degree
                .iter()
                .map(|&d| 1.0 / ((d as f64 + 1.0).sqrt()))
                .collect();
            let isi: Vec<f64> = ins
                .iter()
                .map(|l| 1.0 / ((l.len() as f64 + 1.0).sqrt()))
                .collect();
            for l in 0..dims.len() {
                let w = fw.mat(&format!("layer{l}.weight"))?;
                let b = fw.vec(&format!("layer{l}.bias"))?;
                let d = x.cols();
                let mut next = Mat::zeros(n, w.rows());
                for i in 0..n {
                    let mut m = vec![0.0; d];
                    for (e, mv) in m.iter_mut().enumerate() {
                        let mut terms: Vec<f64> = ins[i]
                            .iter()
                            .map(|&(j, _)| x.row(j as usize)[e] * iso[j as usize])
                            .collect();
                        terms.push(x.row(i)[e] * iso[i]);
                        *mv = sorted_sum(terms) * isi[i];
                    }
                    let mut y = linear(&w, &b, &m);
                    if l != last {
                        for v in y.iter_mut() {
                            *v = v.max(0.0);
                        }
                    }
                    next.row_mut(i).copy_from_slice(&y);
                }
                x = next;
            }
        }
        ModelKind::Gin | ModelKind::GinVn => {
            for l in 0..dims.len() {
                let m0 = fw.mat(&format!("layer{l}.mlp.0.weight"))?;
                let b0 = fw.vec(&format!("layer{l}.mlp.0.bias"))?;
                let m1 = fw.mat(&format!("layer{l}.mlp.1.weight"))?;
                let b1 = fw.vec(&format!("layer{l}.mlp.1.bias"))?;
                let layers = vec![(m0, b0), (m1, b1)];
                let vn_layers = if cfg.kind == ModelKind::GinVn {
                    let v0 = fw.mat(&format!("layer{l}.vn_mlp.0.weight"))?;
                    let vb0 = fw.vec(&format!("layer{l}.vn_mlp.0.bias"))?;
                    let v1 = fw.mat(&format!("layer{l}.vn_mlp.1.weight"))?;
                    let vb1 = fw.vec(&format!("layer{l}.vn_mlp.1.bias"))?;
                    Some(vec![(v0, vb0), (v1, vb1)])
                } else {
                    None
                };
                let enc = if l >= 1 && cfg.edge_dim > 0 {
                    Some((
                        fw.mat(&format!("layer{l}.edge.weight"))?,
                        fw.vec(&format!("layer{l}.edge.bias"))?,
                    ))
                } else {
                    None
                };
                let eps = cfg.eps[l];
                let d = x.cols();
                let mut next = Mat::zeros(n, dims[l].1);
                for i in 0..n {
                    let mut m = vec![0.0; d];
                    if l >= 1 {
                        // collect per-edge messages, then sorted sums
                        let msgs: Vec<Vec<f64>> = ins[i]
                            .iter()
                            .map(|&(j, eid)| {
                                let mut v: Vec<f64> = x.row(j as usize).to_vec();
                                if let Some((ew, eb)) = &enc {
                                    let emb = linear(ew, eb, edge_feats.row(eid as usize));
                                    for (t, e2) in v.iter_mut().zip(emb) {
                                        *t += e2;
                                    }
                                }
                                if cfg.gin_eps_in_message {
                                    for t in v.iter_mut() {
                                        *t *= eps;
                                    }
                                }
                                if cfg.gin_relu_messages {
                                    for t in v.iter_mut() {
                                        *t = t.max(0.0);
                                    }
                                }
                                v
                            })
                            .collect();
                        for (e, mv) in m.iter_mut().enumerate() {
                            *mv = sorted_sum(msgs.iter().map(|r| r[e]).collect());
                        }
                    }
                    let scale = if cfg.gin_eps_in_message {
                        1.0
                    } else {
                        1.0 + eps
                    };
                    let h: Vec<f64> = x
                        .row(i)
                        .iter()
                        .zip(&m)
                        .map(|(&xv, &mv)| xv * scale + mv)
                        .collect();
                    let use_vn = vn_id == Some(i as NodeId);
                    let y = match (&vn_layers, use_vn) {
                        (Some(vl), true) => mlp(vl, &h),
                        _ => mlp(&layers, &h),
                    };
                    next.row_mut(i).copy_from_slice(&y);
                }
                x = next;
            }
        }
        ModelKind::Gat => {
            // layer 0: linear embed
            let w0 = fw.mat("layer0.weight")?;
            let b0 = fw.vec("layer0.bias")?;
            let mut next = Mat::zeros(n, w0.rows());
            for i in 0..n {
                next.row_mut(i).copy_from_slice(&linear(&w0, &b0, x.row(i)));
            }
            x = next;
            let f = cfg.head_features;
            for l in 1..dims.len() {
                let w = fw.mat(&format!("layer{l}.weight"))?;
                let att_s = fw.vec(&format!("layer{l}.att_self"))?;
                let att_n = fw.vec(&format!("layer{l}.att_neigh"))?;
                let bias = fw.vec(&format!("layer{l}.bias"))?;
                let average = l == last;
                let mut next = Mat::zeros(n, dims[l].1);
                // per-head projections of every node
                for i in 0..n {
                    let mut avg = vec![0.0; f];
                    for h in 0..cfg.heads {
                        let proj = |node: usize| -> Vec<f64> {
                            (0..f)
                                .map(|r| {
                                    w.row(h * f + r)
                                        .iter()
                                        .zip(x.row(node))
                                        .map(|(a, b)| a * b)
                                        .sum()
                                })
                                .collect()
                        };
                        let wx_i = proj(i);
                        let s_i: f64 = att_s[h * f..(h + 1) * f]
                            .iter()
                            .zip(&wx_i)
                            .map(|(a, b)| a * b)
                            .sum();
                        let leaky = |v: f64| if v < 0.0 { 0.2 * v } else { v };
                        let mut cand: Vec<Vec<f64>> =
                            ins[i].iter().map(|&(j, _)| proj(j as usize)).collect();
                        cand.push(wx_i.clone());
                        let exps: Vec<f64> = cand
                            .iter()
                            .map(|wx_j| {
                                let t: f64 = att_n[h * f..(h + 1) * f]
                                    .iter()
                                    .zip(wx_j)
                                    .map(|(a, b)| a * b)
                                    .sum();
                                leaky(s_i + t).exp()
                            })
                            .collect();
                        let den = sorted_sum(exps.clone());
                        let head_out: Vec<f64> = (0..f)
                            .map(|e| {
                                sorted_sum(
                                    exps.iter().zip(&cand).map(|(&ex, wx)| ex * wx[e]).collect(),
                                ) / den
                            })
                            .collect();
                        if average {
                            for (a, v) in avg.iter_mut().zip(&head_out) {
                                *a += v;
                            }
                        } else {
                            next.row_mut(i)[h * f..(h + 1) * f].copy_from_slice(&head_out);
                        }
                    }
                    if average {
                        for (e, a) in avg.iter().enumerate() {
                            next.row_mut(i)[e] = a / cfg.heads as f64;
                        }
                    }
                    for (v, b) in next.row_mut(i).iter_mut().zip(&bias) {
                        *v += b;
                    }
                }
                x = next;
            }
        }
        ModelKind::Pna => {
            for l in 0..dims.len() {
                let w = fw.mat(&format!("layer{l}.weight"))?;
                let b = fw.vec(&format!("layer{l}.bias"))?;
                let d = x.cols();
                let skip = dims[l].0 == dims[l].1;
                let mut next = Mat::zeros(n, dims[l].1);
                for i in 0..n {
                    let count = ins[i].len();
                    let mut agg = vec![0.0; 4 * d];
                    if count > 0 {
                        for e in 0..d {
                            let vals: Vec<f64> =
                                ins[i].iter().map(|&(j, _)| x.row(j as usize)[e]).collect();
                            let mean = sorted_sum(vals.clone()) / count as f64;
                            let mean_sq =
                                sorted_sum(vals.iter().map(|v| v * v).collect()) / count as f64;
                            agg[e] = mean;
                            agg[d + e] = (mean_sq - mean * mean).max(0.0).sqrt();
                            agg[2 * d + e] = vals.iter().copied().fold(f64::MIN, f64::max);
                            agg[3 * d + e] = vals.iter().copied().fold(f64::MAX, f64::min);
                        }
                    }
                    let mut scaled = vec![0.0; 12 * d];
                    if count > 0 {
                        let log_d = (count as f64 + 1.0).ln();
                        let s = [1.0, log_d / cfg.avg_log_degree, cfg.avg_log_degree / log_d];
                        for (lane, sv) in s.iter().enumerate() {
                            for (e, &a) in agg.iter().enumerate() {
                                scaled[lane * 4 * d + e] = a * sv;
                            }
                        }
                    }
                    let mut y = linear(&w, &b, &scaled);
                    for v in y.iter_mut() {
                        *v = v.max(0.0);
                    }
                    if skip {
                        for (v, &xv) in y.iter_mut().zip(x.row(i)) {
                            *v += xv;
                        }
                    }
                    next.row_mut(i).copy_from_slice(&y);
                }
                x = next;
            }
        }
        ModelKind::Dgn => {
            let phi = phi1.ok_or_else(|| {
                Error::Config("DGN needs a precomputed Laplacian eigenvector".into())
            })?;
            if phi.len() != n {
                return Err(Error::Config(format!(
                    "eigenvector length {} != node count {n}",
                    phi.len()
                )));
            }
            // directional weights, mirrored in f64 with the same 2^-12
            // degenerate-row rule
            let mut weights: Vec<Vec<f64>> = Vec::with_capacity(n);
            let mut diag = vec![0.0; n];
            for i in 0..n {
                let diffs: Vec<f64> = ins[i]
                    .iter()
                    .map(|&(j, _)| phi[j as usize] - phi[i])
                    .collect();
                let denom = sorted_sum(diffs.iter().map(|d| d.abs()).collect());
                if denom < 1.0 / 4096.0 {
                    weights.push(vec![0.0; diffs.len()]);
                    continue;
                }
                let ws: Vec<f64> = diffs.iter().map(|d| d / denom).collect();
                diag[i] = -sorted_sum(ws.clone());
                weights.push(ws);
            }
            for l in 0..dims.len() {
                let w = fw.mat(&format!("layer{l}.weight"))?;
                let b = fw.vec(&format!("layer{l}.bias"))?;
                let d = x.cols();
                let skip = dims[l].0 == dims[l].1;
                let mut next = Mat::zeros(n, dims[l].1);
                for i in 0..n {
                    let count = ins[i].len();
                    let mut m = vec![0.0; 2 * d];
                    for e in 0..d {
                        if count > 0 {
                            m[e] = sorted_sum(
                                ins[i].iter().map(|&(j, _)| x.row(j as usize)[e]).collect(),
                            ) / count as f64;
                        }
                        let mut terms: Vec<f64> = ins[i]
                            .iter()
                            .zip(&weights[i])
                            .map(|(&(j, _), &wv)| wv * x.row(j as usize)[e])
                            .collect();
                        terms.push(diag[i] * x.row(i)[e]);
                        m[d + e] = sorted_sum(terms).abs();
                    }
                    let mut y = linear(&w, &b, &m);
                    for v in y.iter_mut() {
                        *v = v.max(0.0);
                    }
                    if skip {
                        for (v, &xv) in y.iter_mut().zip(x.row(i)) {
                            *v += xv;
                        }
                    }
                    next.row_mut(i).copy_from_slice(&y);
                }
                x = next;
            }
        }
    }

    // prediction head
    let mut head_layers = Vec::new();
    for k in 0..cfg.head_sizes.len() {
        head_layers.push((
            fw.mat(&format!("head.{k}.weight"))?,
            fw.vec(&format!("head.{k}.bias"))?,
        ));
    }
    let prediction = match cfg.task {
        TaskKind::Graph => {
            let real = n - usize::from(vn_id.is_some());
            let pooled: Vec<f64> = (0..x.cols())
                .map(|e| {
                    sorted_sum(
                        (0..n)
                            .filter(|&i| vn_id != Some(i as NodeId))
                            .map(|i| x.row(i)[e])
                            .collect(),
                    ) / real as f64
                })
                .collect();
            OraclePrediction::Graph(mlp(&head_layers, &pooled))
        }
        TaskKind::Node => {
            let real = n - usize::from(vn_id.is_some());
            let mut rows = Mat::zeros(real, cfg.num_tasks());
            for i in 0..real {
                let y = mlp(&head_layers, x.row(i));
                rows.row_mut(i).copy_from_slice(&y);
            }
            OraclePrediction::Node(rows)
        }
    };

    Ok(OracleRun {
        prediction,
        final_embeddings: x,
        vn_id,
    })
}

/// Comparison report between engine output and the oracle.
#[derive(Clone, Debug)]
pub struct CompareReport {
    pub max_abs_err: f64,
    /// L-infinity error over max(1, ||oracle||_inf).
    pub rel_linf: f64,
    pub argmax_agree: bool,
    pub tol: f64,
    pub pass: bool,
}

pub fn compare(engine: &[f64], oracle: &[f64], tol: f64) -> Result<CompareReport> {
    if engine.len() != oracle.len() {
        return Err(Error::ShapeMismatch(format!(
            "engine len {} != oracle len {}",
            engine.len(),
            oracle.len()
        )));
    }
    if engine.is_empty() {
        return Err(Error::ShapeMismatch("empty comparison".into()));
    }
    let max_abs_err = engine
        .iter()
        .zip(oracle)
        .map(|(e, o)| (e - o).abs())
        .fold(0.0, f64::max);
    let scale = oracle.iter().map(|o| o.abs()).fold(0.0, f64::max).max(1.0);
    let rel_linf = max_abs_err / scale;
    let argmax = |v: &[f64]| {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap()
    };
    let argmax_agree = argmax(engine) == argmax(oracle);
    Ok(CompareReport {
        max_abs_err,
        rel_linf,
        argmax_agree,
        tol,
        pass: rel_linf <= tol,
    })
}

/// Fraction of rows whose argmax class agrees.
pub fn argmax_agreement(engine: &Mat<f64>, oracle: &Mat<f64>) -> Result<f64> {
    if engine.rows() != oracle.rows() || engine.cols() != oracle.cols() {
        return Err(Error::ShapeMismatch("node prediction shapes differ".into()));
    }
    let argmax = |v: &[f64]| {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap()
    };
    let agree = (0..engine.rows())
        .filter(|&i| argmax(engine.row(i)) == argmax(oracle.row(i)))
        .count();
    Ok(agree as f64 / engine.rows() as f64)
}
