//! PNA layer kernel: four aggregators (mean, std, max, min) crossed with
//! three degree scalers [1, log(D+1)/Dt, Dt/log(D+1)], tensor-product
//! order scaler-major. The update is relu(linear(aggregate)) plus a skip
//! connection.

use crate::engine::LayerKernel;
use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::graph::NodeId;

use super::mlp::Linear;

/// State row layout: [sum d][sumsq d][max d][min d][count 1]; the count
/// slot holds a raw integer, not a fixed-point value.
pub struct PnaKernel<F> {
    pub(crate) lin: Linear<F>,
    dtilde: F,
    log_table: Vec<F>,
    skip: bool,
    in_dim: usize,
}

impl<F: Fixed> PnaKernel<F> {
    pub fn new(lin: Linear<F>, avg_log_degree: f64, max_degree: u32, skip: bool) -> Result<Self> {
        if avg_log_degree <= 0.0 {
            return Err(Error::Config(format!(
                "PNA degree scale must be positive, got {avg_log_degree}"
            )));
        }
        let in_dim = lin.in_dim() / 12;
        if lin.in_dim() != 12 * in_dim {
            return Err(Error::Config(
                "PNA linear input width must be 12 * message dim".into(),
            ));
        }
        Ok(Self {
            lin,
            dtilde: F::from_f64(avg_log_degree),
            log_table: log_degree_table(max_degree),
            skip,
            in_dim,
        })
    }
}

fn log_degree_table<F: Fixed>(max_degree: u32) -> Vec<F> {
    (0..=max_degree)
        .map(|d| F::from_f64(((d + 1) as f64).ln()))
        .collect()
}

/// Fold one message into the [sum, sumsq, max, min, count] state row.
fn pna_accumulate<F: Fixed>(msg: &[F], state: &mut [F]) {
    let d = msg.len();
    let (sums, rest) = state.split_at_mut(d);
    let (sumsq, rest) = rest.split_at_mut(d);
    let (maxs, rest) = rest.split_at_mut(d);
    let (mins, count) = rest.split_at_mut(d);
    for (e, &v) in msg.iter().enumerate() {
        sums[e] = sums[e] + v;
        sumsq[e] = sumsq[e] + v * v;
        if v > maxs[e] {
            maxs[e] = v;
        }
        if v < mins[e] {
            mins[e] = v;
        }
    }
    count[0] = F::from_raw(count[0].raw() + 1);
}

/// State -> 12d output: [agg, agg*s_amp, agg*s_att] with
/// agg = [mean, std, max, min]. Zero when the node has no messages.
fn pna_finalize<F: Fixed>(state: &[F], dtilde: F, log_table: &[F], msg: &mut [F]) {
    let d = (state.len() - 1) / 4;
    let n = state[4 * d].raw() as u32;
    if n == 0 {
        msg.fill(F::zero());
        return;
    }
    let mut agg = vec![F::zero(); 4 * d];
    for e in 0..d {
        let mean = state[e].div_int(n);
        let var = state[d + e].div_int(n) - mean * mean;
        agg[e] = mean;
        agg[d + e] = var.sqrt_q();
        agg[2 * d + e] = state[2 * d + e];
        agg[3 * d + e] = state[3 * d + e];
    }
    let log_d = log_table[n as usize];
    let s_amp = log_d / dtilde;
    let s_att = dtilde / log_d;
    for (m, &a) in msg[..4 * d].iter_mut().zip(&agg) {
        *m = a;
    }
    for (m, &a) in msg[4 * d..8 * d].iter_mut().zip(&agg) {
        *m = a * s_amp;
    }
    for (m, &a) in msg[8 * d..12 * d].iter_mut().zip(&agg) {
        *m = a * s_att;
    }
}

/// Aggregate a neighborhood's messages into the 12d scaled vector, the
/// standalone form of the kernel's accumulate/finalize pair.
pub fn pna_aggregate<F: Fixed>(messages: &[&[F]], avg_log_degree: f64) -> Result<Vec<F>> {
    if avg_log_degree <= 0.0 {
        return Err(Error::Config(format!(
            "PNA degree scale must be positive, got {avg_log_degree}"
        )));
    }
    let d = messages.first().map_or(0, |m| m.len());
    let mut state = vec![F::zero(); 4 * d + 1];
    init_pna_state(&mut state, d);
    for m in messages {
        if m.len() != d {
            return Err(Error::ShapeMismatch("ragged PNA messages".into()));
        }
        pna_accumulate(m, &mut state);
    }
    let table = log_degree_table::<F>(messages.len() as u32);
    let mut out = vec![F::zero(); 12 * d];
    pna_finalize(&state, F::from_f64(avg_log_degree), &table, &mut out);
    Ok(out)
}

fn init_pna_state<F: Fixed>(state: &mut [F], d: usize) {
    state[..d].fill(F::zero());
    state[d..2 * d].fill(F::zero());
    state[2 * d..3 * d].fill(<F as num_traits::Bounded>::min_value());
    state[3 * d..4 * d].fill(<F as num_traits::Bounded>::max_value());
    state[4 * d] = F::from_raw(0);
}

impl<F: Fixed> LayerKernel<F> for PnaKernel<F> {
    fn name(&self) -> &'static str {
        "pna"
    }

    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.lin.out_dim()
    }

    fn state_dim(&self) -> usize {
        4 * self.in_dim + 1
    }

    fn msg_dim(&self) -> usize {
        12 * self.in_dim
    }

    fn init_state(&self, state: &mut [F]) {
        init_pna_state(state, self.in_dim);
    }

    fn scatter(
        &self,
        _src: NodeId,
        _dst: NodeId,
        _edge: u32,
        _edge_feat: &[F],
        x_src: &[F],
        state: &mut [F],
    ) {
        pna_accumulate(x_src, state);
    }

    fn finalize(&self, _node: NodeId, state: &[F], _x_node: &[F], msg: &mut [F]) {
        pna_finalize(state, self.dtilde, &self.log_table, msg);
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
