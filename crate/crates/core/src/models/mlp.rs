//! Shared MLP unit: an affine chain with ReLU between hidden layers and a
//! linear final layer. Reused by the GIN node transformation, the PNA/DGN
//! update, and every prediction head.

use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::mat::Mat;

/// One affine layer in engine precision. `w` is out x in, row-major.
#[derive(Clone, Debug)]
pub struct Linear<F> {
    pub w: Mat<F>,
    pub b: Vec<F>,
}

impl<F: Fixed> Linear<F> {
    pub fn new(w: Mat<F>, b: Vec<F>) -> Self {
        assert_eq!(w.rows(), b.len());
        Self { w, b }
    }

    pub fn from_f32(w: &Mat<f32>, b: &[f32]) -> Self {
        Self::new(
            w.map(|v| F::from_f64(v as f64)),
            b.iter().map(|&v| F::from_f64(v as f64)).collect(),
        )
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    /// y = Wx + b with a wide accumulator per output element; the bias
    /// joins the accumulator so each element rounds once.
    pub fn forward_into(&self, x: &[F], out: &mut [F]) {
        debug_assert_eq!(x.len(), self.in_dim());
        debug_assert_eq!(out.len(), self.out_dim());
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc: i128 = (self.b[k].raw() as i128) << F::FRAC_BITS;
            for (w, v) in self.w.row(k).iter().zip(x) {
                acc += w.raw() as i128 * v.raw() as i128;
            }
            *o = F::from_wide_acc(acc);
        }
    }
}

/// Quantized MLP: hidden layers ReLU, final layer linear.
#[derive(Clone, Debug)]
pub struct QuantMlp<F> {
    pub layers: Vec<Linear<F>>,
}

impl<F: Fixed> QuantMlp<F> {
    pub fn new(layers: Vec<Linear<F>>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Config(format!(
                    "mlp chain mismatch: {} -> {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, Linear::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, Linear::out_dim)
    }

    pub fn forward(&self, x: &[F]) -> Result<Vec<F>> {
        if x.len() != self.in_dim() {
            return Err(Error::ShapeMismatch(format!(
                "mlp input width {} != expected {}",
                x.len(),
                self.in_dim()
            )));
        }
        let last = self.layers.len() - 1;
        let mut cur = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = vec![F::zero(); layer.out_dim()];
            layer.forward_into(&cur, &mut next);
            if i != last {
                for v in next.iter_mut() {
                    *v = v.relu();
                }
            }
            cur = next;
        }
        Ok(cur)
    }
}

/// Forward pass through an MLP (dimension-checked).
pub fn mlp_forward<F: Fixed>(x: &[F], mlp: &QuantMlp<F>) -> Result<Vec<F>> {
    mlp.forward(x)
}
