//! GCN layer kernel: symmetric degree normalization with implicit
//! self-loops. The send side scales by 1/sqrt(out_deg+1), the receive side
//! by 1/sqrt(in_deg+1); the self-loop term joins at finalization so the
//! message function stays sender-only.

use crate::engine::LayerKernel;
use crate::fixed::Fixed;
use crate::graph::NodeId;

use super::mlp::Linear;

pub struct GcnKernel<F> {
    pub(crate) lin: Linear<F>,
    inv_sqrt_out: Vec<F>,
    inv_sqrt_in: Vec<F>,
    last: bool,
}

impl<F: Fixed> GcnKernel<F> {
    pub fn new(lin: Linear<F>, out_degree: &[u32], in_degree: &[u32], last: bool) -> Self {
        let inv_sqrt_out = out_degree
            .iter()
            .map(|&d| F::from_f64(1.0 / ((d as f64 + 1.0).sqrt())))
            .collect();
        let inv_sqrt_in = in_degree
            .iter()
            .map(|&d| F::from_f64(1.0 / ((d as f64 + 1.0).sqrt())))
            .collect();
        Self {
            lin,
            inv_sqrt_out,
            inv_sqrt_in,
            last,
        }
    }
}

impl<F: Fixed> LayerKernel<F> for GcnKernel<F> {
    fn name(&self) -> &'static str {
        "gcn"
    }

    fn in_dim(&self) -> usize {
        self.lin.in_dim()
    }

    fn out_dim(&self) -> usize {
        self.lin.out_dim()
    }

    fn state_dim(&self) -> usize {
        self.lin.in_dim()
    }

    fn msg_dim(&self) -> usize {
        self.lin.in_dim()
    }

    fn init_state(&self, state: &mut [F]) {
        state.fill(F::zero());
    }

    fn scatter(
        &self,
        src: NodeId,
        _dst: NodeId,
        _edge: u32,
        _edge_feat: &[F],
        x_src: &[F],
        state: &mut [F],
    ) {
        let scale = self.inv_sqrt_out[src as usize];
        for (acc, &v) in state.iter_mut().zip(x_src) {
            *acc = *acc + v * scale;
        }
    }

    fn finalize(&self, node: NodeId, state: &[F], x_node: &[F], msg: &mut [F]) {
        let self_scale = self.inv_sqrt_out[node as usize];
        let recv_scale = self.inv_sqrt_in[node as usize];
        for ((m, &acc), &x) in msg.iter_mut().zip(state).zip(x_node) {
            *m = (acc + x * self_scale) * recv_scale;
        }
    }

    fn transform(&self, _node: NodeId, _x: &[F], msg: &[F], out: &mut [F]) {
        self.lin.forward_into(msg, out);
        if !self.last {
            for v in out.iter_mut() {
                *v = v.relu();
            }
        }
    }
}
