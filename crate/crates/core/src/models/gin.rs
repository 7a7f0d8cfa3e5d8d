//! GIN layer kernel. Message along (j -> i) is x_j plus the layer's edge
//! embedding, summed at the receiver; the update is MLP((1+eps)*x + m).
//! A per-node override MLP realizes the virtual-node variant.

use crate::engine::LayerKernel;
use crate::fixed::Fixed;
use crate::graph::NodeId;

use super::mlp::{Linear, QuantMlp};

pub struct GinKernel<F> {
    pub(crate) mlp: QuantMlp<F>,
    pub(crate) vn_mlp: Option<QuantMlp<F>>,
    vn_id: Option<NodeId>,
    /// Edge-feature encoder for this layer's incoming messages. `None`
    /// for layers that read the zero-state (layer 0) or when d_e = 0.
    edge_enc: Option<Linear<F>>,
    one_plus_eps: F,
    eps: F,
    /// Apply eps to the aggregated neighborhood instead of the self term
    /// (alternate placement; off by default).
    eps_in_message: bool,
    /// ReLU on each message before aggregation (reference behavior).
    relu_messages: bool,
}

impl<F: Fixed> GinKernel<F> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mlp: QuantMlp<F>,
        vn_mlp: Option<QuantMlp<F>>,
        vn_id: Option<NodeId>,
        edge_enc: Option<Linear<F>>,
        eps: f64,
        eps_in_message: bool,
        relu_messages: bool,
    ) -> Self {
        Self {
            mlp,
            vn_mlp,
            vn_id,
            edge_enc,
            one_plus_eps: F::from_f64(1.0 + eps),
            eps: F::from_f64(eps),
            eps_in_message,
            relu_messages,
        }
    }
}

impl<F: Fixed> LayerKernel<F> for GinKernel<F> {
    fn name(&self) -> &'static str {
        "gin"
    }

    fn in_dim(&self) -> usize {
        self.mlp.in_dim()
    }

    fn out_dim(&self) -> usize {
        self.mlp.out_dim()
    }

    fn state_dim(&self) -> usize {
        self.mlp.in_dim()
    }

    fn msg_dim(&self) -> usize {
        self.mlp.in_dim()
    }

    fn init_state(&self, state: &mut [F]) {
        state.fill(F::zero());
    }

    fn scatter(
        &self,
        _src: NodeId,
        _dst: NodeId,
        _edge: u32,
        edge_feat: &[F],
        x_src: &[F],
        state: &mut [F],
    ) {
        let mut msg = x_src.to_vec();
        if let Some(enc) = &self.edge_enc {
            if !edge_feat.is_empty() {
                let mut emb = vec![F::zero(); enc.out_dim()];
                enc.forward_into(edge_feat, &mut emb);
                for (m, e) in msg.iter_mut().zip(emb) {
                    *m = *m + e;
                }
            }
        }
        for m in msg.iter_mut() {
            if self.eps_in_message {
                *m = *m * self.eps;
            }
            if self.relu_messages {
                *m = m.relu();
            }
        }
        for (acc, m) in state.iter_mut().zip(msg) {
            *acc = *acc + m;
        }
    }

    fn finalize(&self, _node: NodeId, state: &[F], _x_node: &[F], msg: &mut [F]) {
        msg.copy_from_slice(state);
    }

    fn transform(&self, node: NodeId, x: &[F], msg: &[F], out: &mut [F]) {
        let scale = if self.eps_in_message {
            F::one()
        } else {
            self.one_plus_eps
        };
        let mut h = vec![F::zero(); x.len()];
        for ((t, &xv), &m) in h.iter_mut().zip(x).zip(msg) {
            *t = xv * scale + m;
        }
        let mlp = match (self.vn_id, &self.vn_mlp) {
            (Some(vn), Some(vmlp)) if vn == node => vmlp,
            _ => &self.mlp,
        };
        let y = mlp.forward(&h).expect("gin mlp dims checked at build");
        out.copy_from_slice(&y);
    }
}
