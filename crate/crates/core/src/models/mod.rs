//! Model-specific library: configurations, weight-tensor layouts, and the
//! per-layer kernels for GCN, GIN (+virtual node), GAT, PNA, and DGN.

pub mod dgn;
pub mod gat;
pub mod gcn;
pub mod gin;
pub mod mlp;
pub mod pna;
mod runner;

pub use dgn::{build_bdx, DgnKernel, DirectionalMatrix};
pub use gat::{gat_attention, GatEmbedKernel, GatHeadParams, GatKernel};
pub use gcn::GcnKernel;
pub use gin::GinKernel;
pub use mlp::{mlp_forward, Linear, QuantMlp};
pub use pna::{pna_aggregate, PnaKernel};
pub use runner::{head_forward, run_model, ModelRun, Prediction};

use crate::engine::LayerKernel;
use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::graph::{CscAdjacency, CsrAdjacency, Graph, NodeId};
use crate::weights::ModelWeights;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Gcn,
    Gin,
    GinVn,
    Gat,
    Pna,
    Dgn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Gcn,
        ModelKind::Gin,
        ModelKind::GinVn,
        ModelKind::Gat,
        ModelKind::Pna,
        ModelKind::Dgn,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Self::Gcn),
            "gin" => Ok(Self::Gin),
            "gin-vn" | "ginvn" | "gin_vn" => Ok(Self::GinVn),
            "gat" => Ok(Self::Gat),
            "pna" => Ok(Self::Pna),
            "dgn" => Ok(Self::Dgn),
            other => Err(Error::UnsupportedModel(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Gcn => "gcn",
            Self::Gin => "gin",
            Self::GinVn => "gin-vn",
            Self::Gat => "gat",
            Self::Pna => "pna",
            Self::Dgn => "dgn",
        }
    }

    /// Models whose first layer gathers raw features via an initial
    /// scatter pass; the others embed raw features directly in layer 0.
    pub fn layer0_scatter(&self) -> bool {
        matches!(self, Self::Gcn | Self::Pna | Self::Dgn)
    }

    pub fn needs_eigenvector(&self) -> bool {
        matches!(self, Self::Dgn)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    /// One prediction vector per graph (pool + head).
    Graph,
    /// One prediction row per node (head applied per node).
    Node,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolKind {
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExecPath {
    #[default]
    Merged,
    GatherFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregator {
    Sum,
    Mean,
    Max,
    Min,
    Std,
    Directional,
}

#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub num_layers: usize,
    pub embed_dim: usize,
    pub input_dim: usize,
    pub edge_dim: usize,
    /// GAT attention heads.
    pub heads: usize,
    /// GAT features per head.
    pub head_features: usize,
    /// GIN per-layer epsilon.
    pub eps: Vec<f64>,
    /// ReLU each GIN message before aggregation (reference behavior).
    pub gin_relu_messages: bool,
    /// Alternate epsilon placement: scale the aggregated neighborhood
    /// instead of the self term.
    pub gin_eps_in_message: bool,
    /// PNA degree-scaler denominator (log-degree scale, must be > 0).
    pub avg_log_degree: f64,
    /// Aggregator set in use (informational; fixed per model kind).
    pub aggregators: Vec<Aggregator>,
    /// Prediction-head layer widths, ending in the task output width.
    pub head_sizes: Vec<usize>,
    pub task: TaskKind,
    pub pool: PoolKind,
    pub exec_path: ExecPath,
    pub weights: ModelWeights,
}

impl ModelConfig {
    /// Reference configuration for a model kind: GCN/GIN/GIN-VN use 5
    /// layers at width 100, PNA 4 layers at 80 with a (40,20,1) head, DGN
    /// 4 layers at 100 with a (50,25,1) head, GAT 5 layers with 4 heads of
    /// 16 features; all graph-level with global mean pooling.
    pub fn paper_default(kind: ModelKind, input_dim: usize, edge_dim: usize) -> Self {
        let (num_layers, embed_dim, head_sizes): (usize, usize, Vec<usize>) = match kind {
            ModelKind::Gcn | ModelKind::Gin | ModelKind::GinVn => (5, 100, vec![1]),
            ModelKind::Pna => (4, 80, vec![40, 20, 1]),
            ModelKind::Dgn => (4, 100, vec![50, 25, 1]),
            ModelKind::Gat => (5, 64, vec![1]),
        };
        let aggregators = match kind {
            ModelKind::Pna => vec![
                Aggregator::Mean,
                Aggregator::Std,
                Aggregator::Max,
                Aggregator::Min,
            ],
            ModelKind::Dgn => vec![Aggregator::Mean, Aggregator::Directional],
            _ => vec![Aggregator::Sum],
        };
        Self {
            kind,
            num_layers,
            embed_dim,
            input_dim,
            edge_dim,
            heads: 4,
            head_features: 16,
            eps: vec![0.0; num_layers],
            gin_relu_messages: true,
            gin_eps_in_message: false,
            avg_log_degree: 3f64.ln(),
            aggregators,
            head_sizes,
            task: TaskKind::Graph,
            pool: PoolKind::Mean,
            exec_path: ExecPath::Merged,
            weights: ModelWeights::new(),
        }
    }

    pub fn num_tasks(&self) -> usize {
        *self.head_sizes.last().unwrap_or(&1)
    }

    /// Width of the embedding entering the pooling/head stage.
    pub fn head_in_dim(&self) -> usize {
        match self.kind {
            ModelKind::Gat => self.head_features,
            _ => self.embed_dim,
        }
    }

    /// Per-layer (input, output) widths.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let l = self.num_layers;
        let mut dims = Vec::with_capacity(l);
        match self.kind {
            ModelKind::Gat => {
                let wide = self.heads * self.head_features;
                dims.push((self.input_dim, wide));
                for i in 1..l {
                    let out = if i == l - 1 { self.head_features } else { wide };
                    dims.push((wide, out));
                }
            }
            _ => {
                dims.push((self.input_dim, self.embed_dim));
                for _ in 1..l {
                    dims.push((self.embed_dim, self.embed_dim));
                }
            }
        }
        dims
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::Config("a model needs at least one layer".into()));
        }
        if self.input_dim == 0 {
            return Err(Error::Config("input feature dimension is zero".into()));
        }
        if self.head_sizes.is_empty() {
            return Err(Error::Config("empty prediction head".into()));
        }
        if self.kind == ModelKind::Gat {
            if self.heads == 0 || self.head_features == 0 {
                return Err(Error::Config("GAT needs heads and head features".into()));
            }
            if self.num_layers < 2 {
                return Err(Error::Config(
                    "GAT needs an embed layer plus at least one attention layer".into(),
                ));
            }
            if self.embed_dim != self.heads * self.head_features {
                return Err(Error::Config(format!(
                    "GAT embed dim {} != heads*features {}",
                    self.embed_dim,
                    self.heads * self.head_features
                )));
            }
        }
        if self.kind == ModelKind::Pna && self.avg_log_degree <= 0.0 {
            return Err(Error::Config("PNA degree scale must be positive".into()));
        }
        if matches!(self.kind, ModelKind::Gin | ModelKind::GinVn)
            && self.eps.len() != self.num_layers
        {
            return Err(Error::Config(format!(
                "GIN eps list has {} entries for {} layers",
                self.eps.len(),
                self.num_layers
            )));
        }
        Ok(())
    }

    /// Every tensor the weights file must provide, with shapes, in load
    /// order.
    pub fn expected_tensors(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let dims = self.layer_dims();
        match self.kind {
            ModelKind::Gcn => {
                for (l, &(i, o)) in dims.iter().enumerate() {
                    out.push((format!("layer{l}.weight"), vec![o, i]));
                    out.push((format!("layer{l}.bias"), vec![o]));
                }
            }
            ModelKind::Gin | ModelKind::GinVn => {
                let hidden = 2 * self.embed_dim;
                for (l, &(i, o)) in dims.iter().enumerate() {
                    out.push((format!("layer{l}.mlp.0.weight"), vec![hidden, i]));
                    out.push((format!("layer{l}.mlp.0.bias"), vec![hidden]));
                    out.push((format!("layer{l}.mlp.1.weight"), vec![o, hidden]));
                    out.push((format!("layer{l}.mlp.1.bias"), vec![o]));
                    if self.kind == ModelKind::GinVn {
                        out.push((format!("layer{l}.vn_mlp.0.weight"), vec![hidden, i]));
                        out.push((format!("layer{l}.vn_mlp.0.bias"), vec![hidden]));
                        out.push((format!("layer{l}.vn_mlp.1.weight"), vec![o, hidden]));
                        out.push((format!("layer{l}.vn_mlp.1.bias"), vec![o]));
                    }
                    if l >= 1 && self.edge_dim > 0 {
                        out.push((format!("layer{l}.edge.weight"), vec![i, self.edge_dim]));
                        out.push((format!("layer{l}.edge.bias"), vec![i]));
                    }
                }
            }
            ModelKind::Gat => {
                let f = self.head_features;
                let h = self.heads;
                for (l, &(i, o)) in dims.iter().enumerate() {
                    if l == 0 {
                        out.push(("layer0.weight".into(), vec![o, i]));
                        out.push(("layer0.bias".into(), vec![o]));
                    } else {
                        out.push((format!("layer{l}.weight"), vec![h * f, i]));
                        out.push((format!("layer{l}.att_self"), vec![h, f]));
                        out.push((format!("layer{l}.att_neigh"), vec![h, f]));
                        out.push((format!("layer{l}.bias"), vec![o]));
                    }
                }
            }
            ModelKind::Pna => {
                for (l, &(i, o)) in dims.iter().enumerate() {
                    out.push((format!("layer{l}.weight"), vec![o, 12 * i]));
                    out.push((format!("layer{l}.bias"), vec![o]));
                }
            }
            ModelKind::Dgn => {
                for (l, &(i, o)) in dims.iter().enumerate() {
                    out.push((format!("layer{l}.weight"), vec![o, 2 * i]));
                    out.push((format!("layer{l}.bias"), vec![o]));
                }
            }
        }
        let mut prev = self.head_in_dim();
        for (k, &width) in self.head_sizes.iter().enumerate() {
            out.push((format!("head.{k}.weight"), vec![width, prev]));
            out.push((format!("head.{k}.bias"), vec![width]));
            prev = width;
        }
        out
    }

    pub fn validate_weights(&self) -> Result<()> {
        for (name, shape) in self.expected_tensors() {
            self.weights.require(&name, &shape)?;
        }
        Ok(())
    }
}

/// Random weights for a configuration: uniform in [-a, a] with
/// a = min(1, 0.5 * sqrt(3 / fan_in)), biases in [-0.05, 0.05]. Every
/// value lies inside [-1, 1]; the sub-unit gain keeps sum-aggregating
/// stacks from drifting out of fixed-point range on dense graphs.
pub fn random_weights(cfg: &ModelConfig, seed: u64) -> ModelWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = ModelWeights::new();
    for (name, shape) in cfg.expected_tensors() {
        let count: usize = shape.iter().product();
        let bound = if name.ends_with(".bias") {
            0.05
        } else {
            let fan_in = *shape.last().unwrap() as f64;
            (0.5 * (3.0 / fan_in).sqrt()).min(1.0)
        };
        let data: Vec<f32> = (0..count)
            .map(|_| rng.gen_range(-bound..bound) as f32)
            .collect();
        w.insert(&name, shape, data);
    }
    w
}

/// Random per-layer epsilons for GIN configs.
pub fn random_eps(num_layers: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    (0..num_layers).map(|_| rng.gen_range(0.0..0.2)).collect()
}

fn quant_linear<F: Fixed>(cfg: &ModelConfig, w_name: &str, b_name: &str) -> Result<Linear<F>> {
    let w = cfg
        .weights
        .get(w_name)
        .ok_or_else(|| Error::BadWeights(format!("missing tensor `{w_name}`")))?;
    let b = cfg
        .weights
        .get(b_name)
        .ok_or_else(|| Error::BadWeights(format!("missing tensor `{b_name}`")))?;
    Ok(Linear::from_f32(&w.as_mat()?, &b.data))
}

fn quant_mlp<F: Fixed>(cfg: &ModelConfig, prefix: &str, chain: usize) -> Result<QuantMlp<F>> {
    let mut layers = Vec::with_capacity(chain);
    for k in 0..chain {
        layers.push(quant_linear(
            cfg,
            &format!("{prefix}.{k}.weight"),
            &format!("{prefix}.{k}.bias"),
        )?);
    }
    QuantMlp::new(layers)
}

pub(crate) fn build_head<F: Fixed>(cfg: &ModelConfig) -> Result<QuantMlp<F>> {
    quant_mlp(cfg, "head", cfg.head_sizes.len())
}

/// Assemble the per-layer kernels for a model on a specific graph.
/// Kernels own their quantized parameters plus any per-graph tables
/// (degree scales, directional weights), so they are independent of the
/// borrowed inputs afterwards.
pub fn build_kernels<F: Fixed>(
    cfg: &ModelConfig,
    graph: &Graph,
    csr: &CsrAdjacency,
    csc: &CscAdjacency,
    phi1: Option<&[f64]>,
    vn_id: Option<NodeId>,
) -> Result<Vec<Box<dyn LayerKernel<F>>>> {
    cfg.validate()?;
    cfg.validate_weights()?;
    if graph.input_dim() != cfg.input_dim {
        return Err(Error::Config(format!(
            "graph feature dim {} != model input dim {}",
            graph.input_dim(),
            cfg.input_dim
        )));
    }
    if graph.edge_dim() != cfg.edge_dim {
        return Err(Error::Config(format!(
            "graph edge dim {} != model edge dim {}",
            graph.edge_dim(),
            cfg.edge_dim
        )));
    }

    let dims = cfg.layer_dims();
    let last = dims.len() - 1;
    let mut kernels: Vec<Box<dyn LayerKernel<F>>> = Vec::with_capacity(dims.len());
    match cfg.kind {
        ModelKind::Gcn => {
            for l in 0..dims.len() {
                let lin =
                    quant_linear::<F>(cfg, &format!("layer{l}.weight"), &format!("layer{l}.bias"))?;
                kernels.push(Box::new(GcnKernel::new(
                    lin,
                    &csr.degree,
                    &csc.degree,
                    l == last,
                )));
            }
        }
        ModelKind::Gin | ModelKind::GinVn => {
            for l in 0..dims.len() {
                let mlp = quant_mlp::<F>(cfg, &format!("layer{l}.mlp"), 2)?;
                let vn_mlp = if cfg.kind == ModelKind::GinVn {
                    Some(quant_mlp::<F>(cfg, &format!("layer{l}.vn_mlp"), 2)?)
                } else {
                    None
                };
                let edge_enc = if l >= 1 && cfg.edge_dim > 0 {
                    Some(quant_linear::<F>(
                        cfg,
                        &format!("layer{l}.edge.weight"),
                        &format!("layer{l}.edge.bias"),
                    )?)
                } else {
                    None
                };
                kernels.push(Box::new(GinKernel::new(
                    mlp,
                    vn_mlp,
                    vn_id,
                    edge_enc,
                    cfg.eps[l],
                    cfg.gin_eps_in_message,
                    cfg.gin_relu_messages,
                )));
            }
        }
        ModelKind::Gat => {
            kernels.push(Box::new(GatEmbedKernel::new(quant_linear::<F>(
                cfg,
                "layer0.weight",
                "layer0.bias",
            )?)));
            let f = cfg.head_features;
            for l in 1..dims.len() {
                let wt = cfg
                    .weights
                    .require(&format!("layer{l}.weight"), &[cfg.heads * f, dims[l].0])?;
                let w_mat = wt.as_mat()?;
                let att_s = cfg
                    .weights
                    .require(&format!("layer{l}.att_self"), &[cfg.heads, f])?
                    .clone();
                let att_n = cfg
                    .weights
                    .require(&format!("layer{l}.att_neigh"), &[cfg.heads, f])?
                    .clone();
                let mut heads = Vec::with_capacity(cfg.heads);
                for h in 0..cfg.heads {
                    let mut proj = crate::mat::Mat::zeros(f, dims[l].0);
                    for r in 0..f {
                        for (c, &v) in w_mat.row(h * f + r).iter().enumerate() {
                            proj.row_mut(r)[c] = F::from_f64(v as f64);
                        }
                    }
                    let slice = |t: &crate::weights::Tensor| -> Vec<F> {
                        t.data[h * f..(h + 1) * f]
                            .iter()
                            .map(|&v| F::from_f64(v as f64))
                            .collect()
                    };
                    heads.push(GatHeadParams {
                        proj,
                        att_self: slice(&att_s),
                        att_neigh: slice(&att_n),
                    });
                }
                let bias = cfg
                    .weights
                    .require(&format!("layer{l}.bias"), &[dims[l].1])?
                    .data
                    .iter()
                    .map(|&v| F::from_f64(v as f64))
                    .collect();
                kernels.push(Box::new(GatKernel::new(heads, bias, l == last, dims[l].0)));
            }
        }
        ModelKind::Pna => {
            let max_deg = csc.degree.iter().copied().max().unwrap_or(0);
            for (l, &(i, o)) in dims.iter().enumerate() {
                let lin =
                    quant_linear::<F>(cfg, &format!("layer{l}.weight"), &format!("layer{l}.bias"))?;
                kernels.push(Box::new(PnaKernel::new(
                    lin,
                    cfg.avg_log_degree,
                    max_deg,
                    i == o,
                )?));
            }
        }
        ModelKind::Dgn => {
            let phi = phi1.ok_or_else(|| {
                Error::Config("DGN needs a precomputed Laplacian eigenvector".into())
            })?;
            if phi.len() != graph.num_nodes {
                return Err(Error::Config(format!(
                    "eigenvector length {} != node count {}",
                    phi.len(),
                    graph.num_nodes
                )));
            }
            let bdx = build_bdx::<F>(csc, phi);
            for (l, &(i, o)) in dims.iter().enumerate() {
                let lin =
                    quant_linear::<F>(cfg, &format!("layer{l}.weight"), &format!("layer{l}.bias"))?;
                kernels.push(Box::new(DgnKernel::new(lin, bdx.clone(), i == o)));
            }
        }
    }
    Ok(kernels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_defaults_match_reference_configs() {
        let gin = ModelConfig::paper_default(ModelKind::Gin, 9, 3);
        assert_eq!((gin.num_layers, gin.embed_dim), (5, 100));
        let pna = ModelConfig::paper_default(ModelKind::Pna, 9, 3);
        assert_eq!((pna.num_layers, pna.embed_dim), (4, 80));
        assert_eq!(pna.head_sizes, vec![40, 20, 1]);
        let dgn = ModelConfig::paper_default(ModelKind::Dgn, 9, 3);
        assert_eq!((dgn.num_layers, dgn.embed_dim), (4, 100));
        assert_eq!(dgn.head_sizes, vec![50, 25, 1]);
        let gat = ModelConfig::paper_default(ModelKind::Gat, 9, 3);
        assert_eq!((gat.num_layers, gat.heads, gat.head_features), (5, 4, 16));
    }

    #[test]
    fn random_weights_satisfy_manifest() {
        for kind in ModelKind::ALL {
            let mut cfg = ModelConfig::paper_default(kind, 9, 3);
            cfg.weights = random_weights(&cfg, 42);
            cfg.validate_weights().unwrap();
            for t in cfg.weights.iter() {
                assert!(t.data.iter().all(|v| v.abs() <= 1.0), "{}", t.name);
            }
        }
    }

    #[test]
    fn missing_tensor_is_bad_weights() {
        let cfg = ModelConfig::paper_default(ModelKind::Gcn, 4, 0);
        assert!(matches!(cfg.validate_weights(), Err(Error::BadWeights(_))));
    }
}
