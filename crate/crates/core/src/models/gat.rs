//! GAT kernels: multi-head LeakyReLU-softmax attention.
//!
//! Attention weights depend on the receiving node's own same-layer
//! embedding inside a nonlinearity, which cannot be folded into an online
//! scatter with O(N) accumulator state. The attention layers therefore run
//! as scan-flow kernels: the buffer pair carries a snapshot of the layer
//! input and each node aggregates its in-neighbors against it, in scatter
//! arrival order. Heads are independent work units.

use crate::engine::{KernelFlow, LayerKernel};
use crate::fixed::{fixed_dot, Fixed};
use crate::graph::NodeId;
use crate::mat::Mat;

use super::mlp::Linear;

/// Layer 0 of the GAT stack: a plain linear embedding of raw features.
pub struct GatEmbedKernel<F> {
    pub(crate) lin: Linear<F>,
}

impl<F: Fixed> GatEmbedKernel<F> {
    pub fn new(lin: Linear<F>) -> Self {
        Self { lin }
    }
}

impl<F: Fixed> LayerKernel<F> for GatEmbedKernel<F> {
    fn name(&self) -> &'static str {
        "gat-embed"
    }

    fn in_dim(&self) -> usize {
        self.lin.in_dim()
    }

    fn out_dim(&self) -> usize {
        self.lin.out_dim()
    }

    fn state_dim(&self) -> usize {
        0
    }

    fn msg_dim(&self) -> usize {
        0
    }

    fn init_state(&self, _state: &mut [F]) {}

    fn scatter(&self, _s: NodeId, _d: NodeId, _e: u32, _ef: &[F], _x: &[F], _st: &mut [F]) {}

    fn finalize(&self, _n: NodeId, _st: &[F], _x: &[F], _m: &mut [F]) {}

    fn transform(&self, _node: NodeId, x: &[F], _msg: &[F], out: &mut [F]) {
        self.lin.forward_into(x, out);
    }
}

/// Parameters of one attention head: a projection and the two halves of
/// the attention vector a = [a_self || a_neigh].
#[derive(Clone, Debug)]
pub struct GatHeadParams<F> {
    /// f x in projection.
    pub proj: Mat<F>,
    pub att_self: Vec<F>,
    pub att_neigh: Vec<F>,
}

impl<F: Fixed> GatHeadParams<F> {
    pub fn feat_dim(&self) -> usize {
        self.proj.rows()
    }

    fn project(&self, x: &[F]) -> Vec<F> {
        let f = self.feat_dim();
        let mut out = vec![F::zero(); f];
        for k in 0..f {
            out[k] = fixed_dot(self.proj.row(k), x);
        }
        out
    }
}

#[inline]
fn leaky_relu<F: Fixed>(v: F, slope: F) -> F {
    if v < F::zero() {
        v * slope
    } else {
        v
    }
}

/// Attention coefficients of node i over candidate senders, softmax of
/// LeakyReLU(a.[Wx_i || Wx_j]). Candidates are the given neighbors in
/// order, with the self term appended last when `include_self` is set.
/// An empty candidate set cannot occur with `include_self`; without it,
/// a softmax over zero exponent mass falls back to uniform weights.
pub fn gat_attention<F: Fixed>(
    x_i: &[F],
    neighbors: &[&[F]],
    head: &GatHeadParams<F>,
    slope: F,
    include_self: bool,
) -> Vec<F> {
    let wx_i = head.project(x_i);
    let s_i = fixed_dot(&head.att_self, &wx_i);
    let mut exps = Vec::with_capacity(neighbors.len() + 1);
    let mut den = F::zero();
    for &xj in neighbors {
        let wx_j = head.project(xj);
        let logit = leaky_relu(s_i + fixed_dot(&head.att_neigh, &wx_j), slope);
        let e = logit.exp_q();
        den = den + e;
        exps.push(e);
    }
    if include_self {
        let logit = leaky_relu(s_i + fixed_dot(&head.att_neigh, &wx_i), slope);
        let e = logit.exp_q();
        den = den + e;
        exps.push(e);
    }
    if den == F::zero() {
        // exp underflowed everywhere; weight candidates uniformly
        let k = exps.len().max(1) as u32;
        return exps.iter().map(|_| F::one().div_int(k)).collect();
    }
    exps.into_iter().map(|e| e / den).collect()
}

/// Attention layer kernel. Each head computes softmax-weighted sums of
/// projected in-neighbor embeddings (self-attention included); heads are
/// concatenated, or averaged on the final layer.
pub struct GatKernel<F> {
    heads: Vec<GatHeadParams<F>>,
    bias: Vec<F>,
    average: bool,
    in_dim: usize,
    slope: F,
}

impl<F: Fixed> GatKernel<F> {
    pub fn new(heads: Vec<GatHeadParams<F>>, bias: Vec<F>, average: bool, in_dim: usize) -> Self {
        Self {
            heads,
            bias,
            average,
            in_dim,
            slope: F::from_f64(0.2),
        }
    }

    fn feat_dim(&self) -> usize {
        self.heads[0].feat_dim()
    }
}

impl<F: Fixed> LayerKernel<F> for GatKernel<F> {
    fn name(&self) -> &'static str {
        "gat"
    }

    fn flow(&self) -> KernelFlow {
        KernelFlow::Scan
    }

    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        if self.average {
            self.feat_dim()
        } else {
            self.heads.len() * self.feat_dim()
        }
    }

    fn state_dim(&self) -> usize {
        self.in_dim
    }

    fn msg_dim(&self) -> usize {
        self.in_dim
    }

    fn init_state(&self, state: &mut [F]) {
        state.fill(F::zero());
    }

    fn scatter(&self, _s: NodeId, _d: NodeId, _e: u32, _ef: &[F], _x: &[F], _st: &mut [F]) {
        unreachable!("gat attention aggregates by scanning, not by scatter");
    }

    fn finalize(&self, _n: NodeId, _st: &[F], _x: &[F], _m: &mut [F]) {}

    fn transform(&self, _n: NodeId, _x: &[F], _m: &[F], _out: &mut [F]) {
        unreachable!("gat attention uses scan_transform");
    }

    fn scan_transform(
        &self,
        _node: NodeId,
        x: &[F],
        in_edges: &mut dyn Iterator<Item = (NodeId, u32)>,
        snapshot: &Mat<F>,
        out: &mut [F],
    ) {
        let senders: Vec<NodeId> = in_edges.map(|(src, _)| src).collect();
        let f = self.feat_dim();
        let h_count = self.heads.len();
        let mut avg_acc = vec![F::zero(); f];
        for (h, head) in self.heads.iter().enumerate() {
            let wx_i = head.project(&x[..self.in_dim]);
            let s_i = fixed_dot(&head.att_self, &wx_i);
            // online softmax accumulation: numerators and denominator
            let mut num = vec![F::zero(); f];
            let mut den = F::zero();
            let fold = |wx_j: &[F], den: &mut F, num: &mut [F], slope: F| {
                let logit = leaky_relu(s_i + fixed_dot(&head.att_neigh, wx_j), slope);
                let e = logit.exp_q();
                *den = *den + e;
                for (n, &v) in num.iter_mut().zip(wx_j) {
                    *n = *n + e * v;
                }
            };
            for &src in &senders {
                let wx_j = head.project(&snapshot.row(src as usize)[..self.in_dim]);
                fold(&wx_j, &mut den, &mut num, self.slope);
            }
            fold(&wx_i, &mut den, &mut num, self.slope);

            let head_out: Vec<F> = if den == F::zero() {
                wx_i.clone()
            } else {
                num.into_iter().map(|n| n / den).collect()
            };
            if self.average {
                for (a, v) in avg_acc.iter_mut().zip(&head_out) {
                    *a = *a + *v;
                }
            } else {
                out[h * f..(h + 1) * f].copy_from_slice(&head_out);
            }
        }
        if self.average {
            for (o, a) in out.iter_mut().zip(avg_acc) {
                *o = a.div_int(h_count as u32);
            }
        }
        for (o, &b) in out.iter_mut().zip(&self.bias) {
            *o = *o + b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::{quantize, Fixed32};

    fn head(f: usize, ind: usize, seed: u64) -> GatHeadParams<Fixed32> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut proj = Mat::zeros(f, ind);
        for r in 0..f {
            for c in 0..ind {
                proj.row_mut(r)[c] = Fixed32::from_f64(rng.gen_range(-0.5..0.5));
            }
        }
        GatHeadParams {
            proj,
            att_self: (0..f)
                .map(|_| Fixed32::from_f64(rng.gen_range(-0.5..0.5)))
                .collect(),
            att_neigh: (0..f)
                .map(|_| Fixed32::from_f64(rng.gen_range(-0.5..0.5)))
                .collect(),
        }
    }

    #[test]
    fn softmax_of_singleton_is_one() {
        let h = head(3, 2, 1);
        let x = [quantize::<Fixed32>(0.3), quantize::<Fixed32>(-0.2)];
        let nb = [quantize::<Fixed32>(1.0), quantize::<Fixed32>(0.5)];
        let coeffs = gat_attention(&x, &[&nb], &h, quantize(0.2), false);
        assert_eq!(coeffs, vec![Fixed32::from_f64(1.0)]);
    }

    #[test]
    fn identical_neighbors_share_equally() {
        let h = head(3, 2, 2);
        let x = [quantize::<Fixed32>(0.3), quantize::<Fixed32>(-0.2)];
        let nb = [quantize::<Fixed32>(0.7), quantize::<Fixed32>(0.1)];
        let coeffs = gat_attention(&x, &[&nb, &nb, &nb, &nb], &h, quantize(0.2), false);
        for c in &coeffs {
            assert!((c.to_f64() - 0.25).abs() < 2.0 / 65536.0);
        }
    }

    #[test]
    fn random_five_neighbor_case_matches_float_softmax() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let h = head(4, 3, 3);
        let xf: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<Fixed32> = xf.iter().map(|&v| Fixed32::from_f64(v)).collect();
        let nbf: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let nbq: Vec<Vec<Fixed32>> = nbf
            .iter()
            .map(|r| r.iter().map(|&v| Fixed32::from_f64(v)).collect())
            .collect();
        let refs: Vec<&[Fixed32]> = nbq.iter().map(|r| r.as_slice()).collect();
        let got = gat_attention(&x, &refs, &h, quantize(0.2), true);

        // float reference with the dequantized parameters
        let projf: Vec<Vec<f64>> = (0..4)
            .map(|r| h.proj.row(r).iter().map(|v| v.to_f64()).collect())
            .collect();
        let asf: Vec<f64> = h.att_self.iter().map(|v| v.to_f64()).collect();
        let anf: Vec<f64> = h.att_neigh.iter().map(|v| v.to_f64()).collect();
        let proj = |v: &[f64]| -> Vec<f64> {
            projf
                .iter()
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect()
        };
        let wx_i = proj(&xf);
        let s_i: f64 = asf.iter().zip(&wx_i).map(|(a, b)| a * b).sum();
        let mut logits: Vec<f64> = nbf
            .iter()
            .map(|nb| {
                let wx_j = proj(nb);
                let t = s_i + anf.iter().zip(&wx_j).map(|(a, b)| a * b).sum::<f64>();
                if t < 0.0 {
                    0.2 * t
                } else {
                    t
                }
            })
            .collect();
        let t_self = s_i + anf.iter().zip(&wx_i).map(|(a, b)| a * b).sum::<f64>();
        logits.push(if t_self < 0.0 { 0.2 * t_self } else { t_self });
        let den: f64 = logits.iter().map(|l| l.exp()).sum();
        let want: Vec<f64> = logits.iter().map(|l| l.exp() / den).collect();

        let mut sum = Fixed32::ZERO;
        for (g, w) in got.iter().zip(&want) {
            assert!((g.to_f64() - w).abs() < 1.0 / 256.0);
            sum = sum + *g;
        }
        // coefficients sum to 1 within 2 LSB and are strictly positive
        assert!((sum.raw() - Fixed32::from_f64(1.0).raw()).abs() <= 2);
        assert!(got.iter().all(|c| c.raw() > 0));
    }
}
