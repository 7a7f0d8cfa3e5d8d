//! Quantized streaming message-passing GNN inference engine.
//!
//! Raw COO graphs in, per-model predictions out: on-the-fly CSR/CSC
//! conversion, a generic merged scatter-gather executor with an
//! alternating O(N) message-buffer pair, a library of model kernels
//! (GCN, GIN, GIN with virtual node, GAT, PNA, DGN), a full-precision
//! reference oracle, a cycle-approximate two-PE pipeline simulator, and an
//! out-of-core execution path with degree prefetching and packed
//! transfers.
//!
//! All engine math is generic over a saturating fixed-point scalar; the
//! in-core engine runs Q16.16 ([`Fixed32`]) and the out-of-core path runs
//! Q8.8 ([`Fixed16`]).

pub mod engine;
pub mod error;
pub mod fixed;
pub mod fixtures;
pub mod graph;
pub mod graph_io;
pub mod mat;
pub mod models;
pub mod oracle;
pub mod packed;
pub mod sim;
pub mod store;
pub mod weights;

pub use engine::{
    global_mean_pool, run_layer_gather_first, run_layer_merged, EmbeddingBuffer, EngineStats,
    KernelFlow, LayerKernel, MessageBufferPair,
};
pub use error::{Error, Result};
pub use fixed::{dequantize, quantize, Fixed, Fixed16, Fixed32};
pub use graph::{
    add_virtual_node, coo_to_csc, coo_to_csr, csc_scan_order, CscAdjacency, CsrAdjacency, Graph,
    NodeId,
};
pub use mat::Mat;
pub use models::{run_model, ExecPath, ModelConfig, ModelKind, ModelRun, Prediction, TaskKind};
pub use weights::ModelWeights;

/// Scalar used by the in-core engine.
pub type InCoreScalar = Fixed32;
/// Scalar used by the out-of-core (large-graph) path.
pub type OutOfCoreScalar = Fixed16;
