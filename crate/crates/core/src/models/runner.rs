//! Whole-model execution: layer loop, pooling, and the prediction head.

use crate::engine::{
    run_layer_gather_first, run_layer_merged_with, EmbeddingBuffer, EngineStats, MessageBufferPair,
};
use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::graph::{add_virtual_node, coo_to_csr, csc_scan_order, Graph, NodeId};
use crate::mat::Mat;

use super::mlp::QuantMlp;
use super::{build_head, build_kernels, ExecPath, ModelConfig, ModelKind, TaskKind};

#[derive(Clone, Debug)]
pub enum Prediction<F> {
    /// Graph-level tasks: one vector of task outputs.
    Graph(Vec<F>),
    /// Node-level tasks: one row per real node.
    Node(Mat<F>),
}

#[derive(Clone, Debug)]
pub struct ModelRun<F> {
    pub prediction: Prediction<F>,
    /// Final-layer embeddings for every node (virtual node last, when
    /// present).
    pub final_embeddings: Mat<F>,
    pub vn_id: Option<NodeId>,
    pub stats: EngineStats,
}

/// Apply the prediction head to one pooled (or per-node) vector.
pub fn head_forward<F: Fixed>(v: &[F], head: &QuantMlp<F>) -> Result<Vec<F>> {
    head.forward(v)
}

/// Run the full model on one graph. `phi1` supplies the precomputed
/// Laplacian eigenvector for DGN; other models ignore it.
pub fn run_model<F: Fixed>(
    g: &Graph,
    cfg: &ModelConfig,
    phi1: Option<&[f64]>,
) -> Result<ModelRun<F>> {
    g.validate()?;
    cfg.validate()?;

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

    let csr = coo_to_csr(g_run)?;
    let csc = csc_scan_order(g_run)?;
    let edge_feats: Mat<F> = g_run.edge_features.map(|v| F::from_f64(v as f64));
    let kernels = build_kernels::<F>(cfg, g_run, &csr, &csc, phi1, vn_id)?;
    let head = build_head::<F>(cfg)?;

    let capacity = cfg
        .layer_dims()
        .iter()
        .flat_map(|&(i, o)| [i, o])
        .max()
        .unwrap();
    let mut x = EmbeddingBuffer::<F>::from_features(&g_run.node_features, capacity);
    let mut stats = EngineStats::default();
    stats.peak_embed_elems = x.elems();

    let num_layers = kernels.len();
    match cfg.exec_path {
        ExecPath::Merged => {
            let mut msgs = MessageBufferPair::<F>::new(n);
            if cfg.kind.layer0_scatter() {
                // initial scatter pass: layer 0 gathers raw features
                let k0 = kernels[0].as_ref();
                msgs.begin_layer(Some(k0));
                for i in 0..n as NodeId {
                    for (dst, eid) in csr.slice(i) {
                        k0.scatter(
                            i,
                            dst,
                            eid,
                            edge_feats.row(eid as usize),
                            x.row(i),
                            msgs.write_row_mut(dst),
                        );
                        stats.scatter_calls += 1;
                        stats.edge_visits += 1;
                    }
                }
                msgs.finalize_and_flip(Some(k0), &x);
            } else {
                msgs.load_initial(kernels[0].as_ref(), &x);
            }
            for l in 0..num_layers {
                let scatter_kernel = if l + 1 < num_layers {
                    Some(kernels[l + 1].as_ref())
                } else {
                    None
                };
                run_layer_merged_with(
                    &mut x,
                    &mut msgs,
                    &csr,
                    Some(&csc),
                    &edge_feats,
                    kernels[l].as_ref(),
                    scatter_kernel,
                    &mut stats,
                )?;
            }
            // layer flips only; the initial message-state pass is setup
            stats.parity_flips = msgs.flips() - 1;
            stats.peak_msg_elems = stats.peak_msg_elems.max(msgs.peak_elems());
        }
        ExecPath::GatherFirst => {
            for (l, kernel) in kernels.iter().enumerate() {
                let gather_edges = l > 0 || cfg.kind.layer0_scatter();
                let next = run_layer_gather_first(
                    &x,
                    &csc,
                    &edge_feats,
                    kernel.as_ref(),
                    gather_edges,
                    &mut stats,
                )?;
                stats.peak_embed_elems = stats.peak_embed_elems.max(x.elems() + next.elems());
                x = next;
            }
        }
    }

    let prediction = match cfg.task {
        TaskKind::Graph => {
            let pooled = crate::engine::global_mean_pool(&x, vn_id)?;
            Prediction::Graph(head_forward(&pooled, &head)?)
        }
        TaskKind::Node => {
            let real = n - usize::from(vn_id.is_some());
            let mut rows = Mat::zeros(real, cfg.num_tasks());
            for i in 0..real as NodeId {
                let out = head_forward(x.row(i), &head)?;
                rows.set_row(i as usize, &out);
            }
            Prediction::Node(rows)
        }
    };

    Ok(ModelRun {
        prediction,
        final_embeddings: x.to_mat(),
        vn_id,
        stats,
    })
}
