//! Cycle-approximate simulator of the two-PE architecture: a node
//! embedding (NE) PE feeding a message passing (MP) PE, under three
//! scheduling strategies — no pipelining, fixed pipelining, and
//! streaming pipelining through a bounded FIFO.
//!
//! Streaming semantics: NE processes nodes back to back and blocks on the
//! FIFO push when occupancy is at `fifo_depth`; MP pops in order, a slot
//! freeing when MP starts the node. All schedules are deterministic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::mat::Mat;

/// Per-node cycle costs. NE cost is the node transformation pipelined
/// over hidden elements; MP cost scales with out-degree and the message
/// width over the parallel lanes.
#[derive(Clone, Debug)]
pub struct CostModel {
    pub alpha: f64,
    pub beta: f64,
    pub parallel_lanes: usize,
    pub hidden_dim: usize,
    pub fifo_depth: usize,
}

impl CostModel {
    /// Calibrated defaults (see README): alpha 0.2, beta 1.0, 16 lanes,
    /// hidden width 100, queue depth 10.
    pub fn calibrated_default() -> Self {
        Self {
            alpha: 0.2,
            beta: 1.0,
            parallel_lanes: 16,
            hidden_dim: 100,
            fifo_depth: 10,
        }
    }

    pub fn ne_cost(&self) -> u64 {
        ((self.alpha * self.hidden_dim as f64).round() as u64).max(1)
    }

    pub fn mp_cost(&self, out_degree: u32) -> u64 {
        let words = self.hidden_dim.div_ceil(self.parallel_lanes) as f64;
        ((self.beta * out_degree as f64 * words).round() as u64).max(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    NonPipelined,
    FixedPipeline,
    Streaming,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interval {
    pub start: u64,
    pub end: u64,
    pub node: NodeId,
}

#[derive(Clone, Debug, Default)]
pub struct PeTrace {
    pub intervals: Vec<Interval>,
    pub busy: u64,
    pub idle: u64,
}

#[derive(Clone, Debug)]
pub struct SimTrace {
    pub strategy: Strategy,
    pub ne: PeTrace,
    pub mp: PeTrace,
    pub total_cycles: u64,
    pub max_fifo_occupancy: usize,
    /// Processing order (node ids).
    pub order: Vec<NodeId>,
    /// FIFO push completion times, order-aligned (streaming only).
    pub push_times: Vec<u64>,
}

fn finish_pe(mut pe: PeTrace, total: u64) -> PeTrace {
    pe.busy = pe.intervals.iter().map(|iv| iv.end - iv.start).sum();
    pe.idle = total - pe.busy;
    pe
}

/// Simulate one schedule over explicit per-node costs, `labels` naming the
/// node processed at each position.
pub fn simulate_costs(
    cost_ne: &[u64],
    cost_mp: &[u64],
    labels: &[NodeId],
    fifo_depth: usize,
    strategy: Strategy,
) -> SimTrace {
    assert_eq!(cost_ne.len(), cost_mp.len());
    assert_eq!(cost_ne.len(), labels.len());
    assert!(fifo_depth >= 1);
    let n = cost_ne.len();
    let mut ne = PeTrace::default();
    let mut mp = PeTrace::default();
    let mut push_times = Vec::new();
    let mut max_occ = 0usize;
    let total;

    match strategy {
        Strategy::NonPipelined => {
            let mut t = 0u64;
            for k in 0..n {
                ne.intervals.push(Interval {
                    start: t,
                    end: t + cost_ne[k],
                    node: labels[k],
                });
                t += cost_ne[k];
                mp.intervals.push(Interval {
                    start: t,
                    end: t + cost_mp[k],
                    node: labels[k],
                });
                t += cost_mp[k];
            }
            total = t;
        }
        Strategy::FixedPipeline => {
            let mut t = 0u64;
            for step in 0..=n {
                let ne_dur = if step < n { cost_ne[step] } else { 0 };
                let mp_dur = if step > 0 { cost_mp[step - 1] } else { 0 };
                if step < n {
                    ne.intervals.push(Interval {
                        start: t,
                        end: t + ne_dur,
                        node: labels[step],
                    });
                }
                if step > 0 {
                    mp.intervals.push(Interval {
                        start: t,
                        end: t + mp_dur,
                        node: labels[step - 1],
                    });
                }
                t += ne_dur.max(mp_dur);
            }
            total = t;
            max_occ = usize::from(n > 0);
        }
        Strategy::Streaming => {
            let mut mp_start = vec![0u64; n];
            let mut mp_end = vec![0u64; n];
            let mut ne_start = 0u64;
            push_times = vec![0u64; n];
            for k in 0..n {
                let done = ne_start + cost_ne[k];
                ne.intervals.push(Interval {
                    start: ne_start,
                    end: done,
                    node: labels[k],
                });
                // blocked on the push until the FIFO has a free slot
                let gate = if k >= fifo_depth {
                    mp_start[k - fifo_depth]
                } else {
                    0
                };
                push_times[k] = done.max(gate);
                ne_start = push_times[k];
                mp_start[k] = push_times[k].max(if k > 0 { mp_end[k - 1] } else { 0 });
                mp_end[k] = mp_start[k] + cost_mp[k];
                mp.intervals.push(Interval {
                    start: mp_start[k],
                    end: mp_end[k],
                    node: labels[k],
                });
            }
            total = if n == 0 { 0 } else { mp_end[n - 1] };
            // occupancy: +1 at push, -1 at pop (MP start); pops settle first
            let mut occ = 0usize;
            let mut pop = 0usize;
            for k in 0..n {
                while pop < n && mp_start[pop] <= push_times[k] && pop < k {
                    occ -= 1;
                    pop += 1;
                }
                occ += 1;
                max_occ = max_occ.max(occ);
            }
        }
    }

    SimTrace {
        strategy,
        ne: finish_pe(ne, total),
        mp: finish_pe(mp, total),
        total_cycles: total,
        max_fifo_occupancy: max_occ,
        order: labels.to_vec(),
        push_times,
    }
}

fn out_degrees(g: &Graph) -> Vec<u32> {
    let mut deg = vec![0u32; g.num_nodes];
    for &(s, _) in &g.edges {
        deg[s as usize] += 1;
    }
    deg
}

/// Simulate a processing order over a graph's per-node costs.
pub fn simulate_order(g: &Graph, cm: &CostModel, order: &[NodeId], strategy: Strategy) -> SimTrace {
    let deg = out_degrees(g);
    let ne: Vec<u64> = order.iter().map(|_| cm.ne_cost()).collect();
    let mp: Vec<u64> = order.iter().map(|&v| cm.mp_cost(deg[v as usize])).collect();
    simulate_costs(&ne, &mp, order, cm.fifo_depth, strategy)
}

/// Simulate in ascending node-id order (the default).
pub fn simulate(g: &Graph, cm: &CostModel, strategy: Strategy) -> SimTrace {
    let order: Vec<NodeId> = (0..g.num_nodes as NodeId).collect();
    simulate_order(g, cm, &order, strategy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VnPosition {
    First,
    Last,
}

/// Schedule a virtual-node-augmented graph (VN = highest node id) with the
/// VN first or last in the processing order.
pub fn simulate_vn_overlap(
    g_with_vn: &Graph,
    cm: &CostModel,
    position: VnPosition,
    strategy: Strategy,
) -> SimTrace {
    let n = g_with_vn.num_nodes as NodeId;
    assert!(n >= 1);
    let vn = n - 1;
    let mut order: Vec<NodeId> = Vec::with_capacity(n as usize);
    match position {
        VnPosition::First => {
            order.push(vn);
            order.extend(0..vn);
        }
        VnPosition::Last => {
            order.extend(0..vn);
            order.push(vn);
        }
    }
    simulate_order(g_with_vn, cm, &order, strategy)
}

/// MP idle attributable to one node under a streaming schedule: idle
/// cycles on the MP PE after its first dispatch and before the node's
/// FIFO push — the idle the node's message-passing work could have
/// covered had it been scheduled earlier. Zero by construction when the
/// node is processed first.
pub fn mp_idle_attributable(trace: &SimTrace, node: NodeId) -> u64 {
    assert_eq!(trace.strategy, Strategy::Streaming);
    let k = trace
        .order
        .iter()
        .position(|&v| v == node)
        .expect("node not in schedule");
    let push = trace.push_times[k];
    let Some(first) = trace.mp.intervals.first() else {
        return 0;
    };
    let mut idle = 0u64;
    let mut cursor = first.start;
    for iv in &trace.mp.intervals {
        let gap_start = cursor.max(first.start);
        let gap_end = iv.start.min(push);
        if gap_end > gap_start {
            idle += gap_end - gap_start;
        }
        cursor = cursor.max(iv.end);
        if iv.start >= push {
            break;
        }
    }
    idle
}

/// Random graph for the scheduling study: `pct_high` of nodes target
/// degree 4x the average, the rest are adjusted so the mean lands on
/// `avg_degree`. Destinations are sampled uniformly (no self-loops;
/// repeats allowed). Reproducible per seed.
pub fn generate_synthetic(n: usize, avg_degree: f64, pct_high: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::Parameter("need at least two nodes".into()));
    }
    if avg_degree < 0.0 {
        return Err(Error::Parameter(
            "average degree must be nonnegative".into(),
        ));
    }
    if !(0.0..=1.0).contains(&pct_high) {
        return Err(Error::Parameter(
            "high-degree fraction must be in [0,1]".into(),
        ));
    }
    let high_target = 4.0 * avg_degree;
    let low_target = if pct_high >= 1.0 {
        // degenerate: everyone is a high-degree node
        high_target
    } else {
        let t = avg_degree * (1.0 - 4.0 * pct_high) / (1.0 - pct_high);
        if t < 0.0 {
            return Err(Error::Parameter(format!(
                "infeasible degree sequence: avg {avg_degree} with {pct_high} high-degree nodes"
            )));
        }
        t
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_high = (pct_high * n as f64).round() as usize;
    let mut is_high = vec![false; n];
    for v in is_high.iter_mut().take(num_high) {
        *v = true;
    }
    // spread the high-degree nodes across the id (= processing) order
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        is_high.swap(i, j);
    }

    let mut edges = Vec::new();
    for (i, &high) in is_high.iter().enumerate() {
        let target = if high { high_target } else { low_target };
        let mut deg = target.floor() as usize;
        if rng.gen::<f64>() < target.fract() {
            deg += 1;
        }
        for _ in 0..deg {
            let mut dst = rng.gen_range(0..n - 1) as NodeId;
            if dst as usize >= i {
                dst += 1;
            }
            edges.push((i as NodeId, dst));
        }
    }
    let e = edges.len();
    Graph::new(n, edges, Mat::zeros(n, 0), Mat::zeros(e, 0))
}

/// One sweep cell: mean speed-up ratios over the cell's graphs.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub avg_degree: f64,
    pub pct_high: f64,
    pub graphs: usize,
    pub fixed_over_none: f64,
    pub streaming_over_fixed: f64,
    pub streaming_over_none: f64,
    /// Graphs violating streaming <= fixed <= non-pipelined.
    pub dominance_violations: usize,
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub degrees: Vec<f64>,
    pub pct_high: Vec<f64>,
    pub graphs_per_cell: usize,
    pub nodes_min: usize,
    pub nodes_max: usize,
    pub seed: u64,
}

impl SweepSpec {
    /// The synthetic sweep grid of the scheduling study.
    pub fn paper(graphs_per_cell: usize, seed: u64) -> Self {
        Self {
            degrees: vec![2.0, 4.0, 8.0, 16.0],
            pct_high: vec![0.0, 0.05, 0.1, 0.2],
            graphs_per_cell,
            nodes_min: 32,
            nodes_max: 128,
            seed,
        }
    }
}

/// Run the sweep: per cell, mean of the three speed-up ratios.
pub fn run_sweep(spec: &SweepSpec, cm: &CostModel) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let mut counter = spec.seed;
    for &deg in &spec.degrees {
        for &pct in &spec.pct_high {
            let mut sums = [0.0f64; 3];
            let mut violations = 0usize;
            let mut size_rng = ChaCha8Rng::seed_from_u64(counter ^ 0xABCD_EF01);
            for _ in 0..spec.graphs_per_cell {
                counter = counter.wrapping_add(1);
                let n = size_rng.gen_range(spec.nodes_min..=spec.nodes_max);
                let g = generate_synthetic(n, deg, pct, counter)?;
                let none = simulate(&g, cm, Strategy::NonPipelined).total_cycles as f64;
                let fixed = simulate(&g, cm, Strategy::FixedPipeline).total_cycles as f64;
                let streaming = simulate(&g, cm, Strategy::Streaming).total_cycles as f64;
                if streaming > fixed || fixed > none {
                    violations += 1;
                }
                sums[0] += none / fixed;
                sums[1] += fixed / streaming;
                sums[2] += none / streaming;
            }
            let c = spec.graphs_per_cell as f64;
            rows.push(SweepRow {
                avg_degree: deg,
                pct_high: pct,
                graphs: spec.graphs_per_cell,
                fixed_over_none: sums[0] / c,
                streaming_over_fixed: sums[1] / c,
                streaming_over_none: sums[2] / c,
                dominance_violations: violations,
            });
        }
    }
    Ok(rows)
}

/// Render sweep rows as a tab-separated table with fixed-width decimals.
pub fn speedup_report(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "avg_degree\tpct_high\tfixed_over_none\tstreaming_over_fixed\tstreaming_over_none\tgraphs\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{:10.4}\t{:8.4}\t{:15.4}\t{:20.4}\t{:19.4}\t{:6}\n",
            r.avg_degree,
            r.pct_high,
            r.fixed_over_none,
            r.streaming_over_fixed,
            r.streaming_over_none,
            r.graphs
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_definitions_forced_example() {
        let ne = [5u64, 5, 5];
        let mp = [12u64, 2, 2];
        let labels = [0u32, 1, 2];
        let none = simulate_costs(&ne, &mp, &labels, 10, Strategy::NonPipelined);
        assert_eq!(none.total_cycles, 31);
        let fixed = simulate_costs(&ne, &mp, &labels, 10, Strategy::FixedPipeline);
        assert_eq!(fixed.total_cycles, 24);
        let streaming = simulate_costs(&ne, &mp, &labels, 10, Strategy::Streaming);
        assert_eq!(streaming.total_cycles, 21);
    }

    #[test]
    fn mp_one_cycle_streaming_is_ne_bound() {
        let ne = [7u64; 6];
        let mp = [1u64; 6];
        let labels: Vec<u32> = (0..6).collect();
        let t = simulate_costs(&ne, &mp, &labels, 10, Strategy::Streaming);
        assert_eq!(t.total_cycles, 7 * 6 + 1);
    }

    #[test]
    fn conservation_busy_plus_idle() {
        let g = generate_synthetic(40, 3.0, 0.1, 7).unwrap();
        let cm = CostModel::calibrated_default();
        for s in [
            Strategy::NonPipelined,
            Strategy::FixedPipeline,
            Strategy::Streaming,
        ] {
            let t = simulate(&g, &cm, s);
            assert_eq!(t.ne.busy + t.ne.idle, t.total_cycles);
            assert_eq!(t.mp.busy + t.mp.idle, t.total_cycles);
        }
    }

    #[test]
    fn same_seed_same_edges() {
        let a = generate_synthetic(50, 4.0, 0.1, 99).unwrap();
        let b = generate_synthetic(50, 4.0, 0.1, 99).unwrap();
        assert_eq!(a.edges, b.edges);
        let c = generate_synthetic(50, 4.0, 0.1, 100).unwrap();
        assert_ne!(a.edges, c.edges);
    }

    #[test]
    fn mean_degree_hits_target() {
        let g = generate_synthetic(4000, 2.0, 0.0, 5).unwrap();
        let mean = g.num_edges as f64 / g.num_nodes as f64;
        assert!((mean - 2.0).abs() / 2.0 < 0.05, "mean degree {mean}");
    }

    #[test]
    fn pct_one_degenerates_to_uniform_high() {
        let g = generate_synthetic(500, 2.0, 1.0, 6).unwrap();
        let mean = g.num_edges as f64 / g.num_nodes as f64;
        assert!((mean - 8.0).abs() / 8.0 < 0.1, "mean degree {mean}");
    }

    #[test]
    fn infeasible_fraction_is_parameter_error() {
        assert!(matches!(
            generate_synthetic(100, 2.0, 0.5, 1),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn fifo_occupancy_respects_depth() {
        let ne = [1u64; 30];
        let mp = [50u64; 30];
        let labels: Vec<u32> = (0..30).collect();
        let t = simulate_costs(&ne, &mp, &labels, 4, Strategy::Streaming);
        assert!(t.max_fifo_occupancy <= 4);
        let wide = simulate_costs(&ne, &mp, &labels, 10, Strategy::Streaming);
        assert!(wide.total_cycles <= t.total_cycles);
    }

    #[test]
    fn single_graph_group_ratios() {
        let g = generate_synthetic(60, 2.0, 0.1, 11).unwrap();
        let cm = CostModel::calibrated_default();
        let none = simulate(&g, &cm, Strategy::NonPipelined).total_cycles as f64;
        let fixed = simulate(&g, &cm, Strategy::FixedPipeline).total_cycles as f64;
        let streaming = simulate(&g, &cm, Strategy::Streaming).total_cycles as f64;
        let spec = SweepSpec {
            degrees: vec![2.0],
            pct_high: vec![0.1],
            graphs_per_cell: 1,
            nodes_min: 60,
            nodes_max: 60,
            seed: 10, // run_sweep increments before generating: graph seed = 11
        };
        let rows = run_sweep(&spec, &cm).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].fixed_over_none - none / fixed).abs() < 1e-12);
        assert!((rows[0].streaming_over_none - none / streaming).abs() < 1e-12);
        let report = speedup_report(&rows);
        assert!(report.lines().count() == 2);
    }
}
