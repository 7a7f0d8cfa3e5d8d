//! DGN layer kernel: mean aggregation concatenated with the absolute
//! directional derivative along the graph Laplacian's first nontrivial
//! eigenvector, followed by an MLP update with a skip connection.

use crate::engine::LayerKernel;
use crate::fixed::Fixed;
use crate::graph::{CscAdjacency, NodeId};

use super::mlp::Linear;

/// Directional-derivative weights built from an eigenvector: off-diagonal
/// entries aligned to CSC slices plus per-node diagonal entries. Rows whose
/// normalizing denominator falls below 2^-12 are all zero.
#[derive(Clone, Debug)]
pub struct DirectionalMatrix<F> {
    /// B(dst, src) indexed by original COO edge id.
    pub coo_weights: Vec<F>,
    /// B(i, i) = -sum of row i's off-diagonal entries.
    pub diag: Vec<F>,
    /// Off-diagonal entries in CSC slot order (for row-structured checks).
    pub slice_weights: Vec<F>,
}

const DEGENERATE_DENOM: f64 = 1.0 / 4096.0; // 2^-12

/// B(i,j) = (phi1_j - phi1_i) / sum_k |phi1_k - phi1_i| over in-neighbors,
/// computed in engine precision. The diagonal is the exact negated sum of
/// the quantized row, so rows sum to zero by construction.
pub fn build_bdx<F: Fixed>(csc: &CscAdjacency, phi1: &[f64]) -> DirectionalMatrix<F> {
    let n = csc.num_nodes();
    assert_eq!(phi1.len(), n, "eigenvector length must match node count");
    let phi_q: Vec<F> = phi1.iter().map(|&v| F::from_f64(v)).collect();

    let mut coo_weights = vec![F::zero(); csc.num_edges()];
    let mut slice_weights = vec![F::zero(); csc.num_edges()];
    let mut diag = vec![F::zero(); n];
    let mut slot = 0usize;
    for i in 0..n as NodeId {
        let here = phi_q[i as usize];
        let start = slot;
        let mut denom = F::zero();
        for (src, _eid) in csc.slice(i) {
            denom = denom + (phi_q[src as usize] - here).abs();
            slot += 1;
        }
        if denom.to_f64() < DEGENERATE_DENOM {
            continue; // degenerate row stays all-zero
        }
        let mut row_sum = F::zero();
        for (k, (src, eid)) in csc.slice(i).enumerate() {
            let w = (phi_q[src as usize] - here) / denom;
            slice_weights[start + k] = w;
            coo_weights[eid as usize] = w;
            row_sum = row_sum + w;
        }
        diag[i as usize] = -row_sum;
    }
    DirectionalMatrix {
        coo_weights,
        diag,
        slice_weights,
    }
}

/// State row layout: [sum d][directional d][count 1]; count is raw.
pub struct DgnKernel<F> {
    pub(crate) lin: Linear<F>,
    bdx: DirectionalMatrix<F>,
    skip: bool,
    in_dim: usize,
}

impl<F: Fixed> DgnKernel<F> {
    pub fn new(lin: Linear<F>, bdx: DirectionalMatrix<F>, skip: bool) -> Self {
        let in_dim = lin.in_dim() / 2;
        assert_eq!(lin.in_dim(), 2 * in_dim);
        Self {
            lin,
            bdx,
            skip,
            in_dim,
        }
    }
}

impl<F: Fixed> LayerKernel<F> for DgnKernel<F> {
    fn name(&self) -> &'static str {
        "dgn"
    }

    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.lin.out_dim()
    }

    fn state_dim(&self) -> usize {
        2 * self.in_dim + 1
    }

    fn msg_dim(&self) -> usize {
        2 * self.in_dim
    }

    fn init_state(&self, state: &mut [F]) {
        state.fill(F::zero());
        let d = self.in_dim;
        state[2 * d] = F::from_raw(0);
    }

    fn scatter(
        &self,
        _src: NodeId,
        _dst: NodeId,
        edge: u32,
        _edge_feat: &[F],
        x_src: &[F],
        state: &mut [F],
    ) {
        let d = self.in_dim;
        let w = self.bdx.coo_weights[edge as usize];
        for (e, &v) in x_src.iter().enumerate() {
            state[e] = state[e] + v;
            state[d + e] = state[d + e] + v * w;
        }
        state[2 * d] = F::from_raw(state[2 * d].raw() + 1);
    }

    fn finalize(&self, node: NodeId, state: &[F], x_node: &[F], msg: &mut [F]) {
        let d = self.in_dim;
        let n = state[2 * d].raw() as u32;
        let dia = self.bdx.diag[node as usize];
        for e in 0..d {
            msg[e] = if n == 0 {
                F::zero()
            } else {
                state[e].div_int(n)
            };
            msg[d + e] = (state[d + e] + dia * x_node[e]).abs();
        }
    }

    fn transform(&self, _node: NodeId, x: &[F], msg: &[F], out: &mut [F]) {
        self.lin.forward_into(msg, out);
        for v in out.iter_mut() {
            *v = v.relu();
        }
        if self.skip {
            for (o, &xv) in out.iter_mut().zip(x) {
                *o = *o + xv;
            }
        }
    }
}
