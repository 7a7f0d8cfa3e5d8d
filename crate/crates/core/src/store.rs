//! Out-of-core execution: graph tables and node/message buffers live in a
//! byte-addressed external store in Q8.8, moved in packed 128-bit words
//! (eight lanes). On-chip state is limited to per-node scratch rows, the
//! kernels' weights, and the degree prefetch buffer.
//!
//! The store file layout is a text manifest (region offsets, lengths,
//! checksums) followed by the raw little-endian regions, stable across
//! runs for byte-exact replay.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use crate::engine::{EngineStats, LayerKernel};
use crate::error::{Error, Result};
use crate::fixed::{Fixed, Fixed16};
use crate::graph::{add_virtual_node, coo_to_csr, csc_scan_order, Graph, NodeId};
use crate::mat::Mat;
use crate::models::{
    build_head, build_kernels, head_forward, ModelConfig, ModelKind, ModelRun, Prediction, TaskKind,
};
use crate::packed::{pack_row, unpack_row, words_per_row};

pub const WORD_BYTES: usize = 16;
pub const DEFAULT_READ_LATENCY: u64 = 32;
pub const DEFAULT_PREFETCH_CAPACITY: usize = 64;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

#[derive(Clone, Debug)]
pub struct RegionDesc {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    pub checksum: u64,
}

#[derive(Clone, Debug, Default)]
pub struct AccessLog {
    pub reads: u64,
    pub writes: u64,
    pub words_read: u64,
    pub words_written: u64,
}

/// Byte-addressed backing store with named regions and an access log.
#[derive(Clone, Debug)]
pub struct ExternalStore {
    regions: Vec<RegionDesc>,
    index: HashMap<String, usize>,
    data: Vec<u8>,
    pub log: AccessLog,
}

impl ExternalStore {
    fn new() -> Self {
        Self {
            regions: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            log: AccessLog::default(),
        }
    }

    fn add_region(&mut self, name: &str, bytes: Vec<u8>) {
        let offset = self.data.len();
        self.index.insert(name.to_string(), self.regions.len());
        self.regions.push(RegionDesc {
            name: name.to_string(),
            offset,
            len: bytes.len(),
            checksum: fnv1a64(&bytes),
        });
        self.data.extend_from_slice(&bytes);
    }

    pub fn regions(&self) -> &[RegionDesc] {
        &self.regions
    }

    fn region(&self, name: &str) -> Result<&RegionDesc> {
        self.index
            .get(name)
            .map(|&i| &self.regions[i])
            .ok_or_else(|| Error::StoreCorruption {
                region: name.to_string(),
                detail: "missing region".into(),
            })
    }

    pub fn read_u32(&mut self, region: &str, idx: usize) -> Result<u32> {
        let r = self.region(region)?;
        let off = r.offset + idx * 4;
        if idx * 4 + 4 > r.len {
            return Err(Error::StoreCorruption {
                region: region.into(),
                detail: format!("u32 index {idx} out of range"),
            });
        }
        self.log.reads += 1;
        self.log.words_read += 1;
        Ok(u32::from_le_bytes(
            self.data[off..off + 4].try_into().unwrap(),
        ))
    }

    pub fn read_u32_all(&mut self, region: &str) -> Result<Vec<u32>> {
        let r = self.region(region)?.clone();
        let count = r.len / 4;
        self.log.reads += 1;
        self.log.words_read += count as u64;
        Ok((0..count)
            .map(|i| {
                let off = r.offset + i * 4;
                u32::from_le_bytes(self.data[off..off + 4].try_into().unwrap())
            })
            .collect())
    }

    /// Read one packed row: exactly ceil(width/8) word transfers.
    pub fn read_row(&mut self, region: &str, row: usize, width: usize) -> Result<Vec<Fixed16>> {
        let words = words_per_row(width);
        let r = self.region(region)?;
        let off = r.offset + row * words_stride_bytes(r, width)?;
        let mut packed = Vec::with_capacity(words);
        for w in 0..words {
            let p = off + w * WORD_BYTES;
            packed.push(u128::from_le_bytes(
                self.data[p..p + WORD_BYTES].try_into().unwrap(),
            ));
        }
        self.log.reads += 1;
        self.log.words_read += words as u64;
        Ok(unpack_row(&packed, width))
    }

    /// Write one packed row: exactly ceil(len/8) word transfers.
    pub fn write_row(&mut self, region: &str, row: usize, values: &[Fixed16]) -> Result<()> {
        let (packed, len) = pack_row(values);
        let r = self.region(region)?;
        let off = r.offset + row * words_stride_bytes(r, len)?;
        let r_len = r.len;
        let r_offset = r.offset;
        if off + packed.len() * WORD_BYTES > r_offset + r_len {
            return Err(Error::StoreCorruption {
                region: region.into(),
                detail: format!("row {row} out of range"),
            });
        }
        for (w, word) in packed.iter().enumerate() {
            let p = off + w * WORD_BYTES;
            self.data[p..p + WORD_BYTES].copy_from_slice(&word.to_le_bytes());
        }
        self.log.writes += 1;
        self.log.words_written += packed.len() as u64;
        Ok(())
    }

    fn refresh_checksums(&mut self) {
        for r in self.regions.iter_mut() {
            r.checksum = fnv1a64(&self.data[r.offset..r.offset + r.len]);
        }
    }

    pub fn save(&mut self, path: &Path) -> Result<()> {
        self.refresh_checksums();
        let mut head = String::from("store v1\n");
        for r in &self.regions {
            head.push_str(&format!(
                "region {} {} {} {:016x}\n",
                r.name, r.offset, r.len, r.checksum
            ));
        }
        head.push_str("payload\n");
        let mut bytes = head.into_bytes();
        bytes.extend_from_slice(&self.data);
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        let mut pos = 0usize;
        let mut lines = Vec::new();
        loop {
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::Parse("store manifest missing payload marker".into()))?;
            let line = std::str::from_utf8(&bytes[pos..pos + end])
                .map_err(|_| Error::Parse("store manifest is not utf-8".into()))?
                .to_string();
            pos += end + 1;
            if line == "payload" {
                break;
            }
            lines.push(line);
        }
        if lines.first().map(String::as_str) != Some("store v1") {
            return Err(Error::Parse("bad store magic".into()));
        }
        let data = bytes[pos..].to_vec();
        let mut store = Self::new();
        store.data = data;
        for line in &lines[1..] {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 5 || parts[0] != "region" {
                return Err(Error::Parse(format!("bad region line `{line}`")));
            }
            let name = parts[1].to_string();
            let offset: usize = parts[2]
                .parse()
                .map_err(|e| Error::Parse(format!("bad offset: {e}")))?;
            let len: usize = parts[3]
                .parse()
                .map_err(|e| Error::Parse(format!("bad length: {e}")))?;
            let checksum = u64::from_str_radix(parts[4], 16)
                .map_err(|e| Error::Parse(format!("bad checksum: {e}")))?;
            if offset + len > store.data.len() {
                return Err(Error::StoreCorruption {
                    region: name,
                    detail: "region extends past payload".into(),
                });
            }
            let actual = fnv1a64(&store.data[offset..offset + len]);
            if actual != checksum {
                return Err(Error::StoreCorruption {
                    region: name,
                    detail: format!(
                        "checksum mismatch: manifest {checksum:016x}, data {actual:016x}"
                    ),
                });
            }
            store.index.insert(name.clone(), store.regions.len());
            store.regions.push(RegionDesc {
                name,
                offset,
                len,
                checksum,
            });
        }
        Ok(store)
    }
}

// Rows are stored at a fixed stride per region; the stride is recorded as
// part of the region name-independent geometry (len / rows), so the caller
// supplies the row width and the stride is validated against it.
fn words_stride_bytes(r: &RegionDesc, width: usize) -> Result<usize> {
    let stride = words_per_row(width) * WORD_BYTES;
    if stride == 0 {
        return Err(Error::StoreCorruption {
            region: r.name.clone(),
            detail: "zero-width row".into(),
        });
    }
    Ok(stride)
}

fn u32s_bytes(values: &[u32]) -> Vec<u8> {
    let mut v = Vec::with_capacity(values.len() * 4);
    for x in values {
        v.extend_from_slice(&x.to_le_bytes());
    }
    v
}

fn packed_rows_bytes(
    rows: usize,
    width: usize,
    mut row_values: impl FnMut(usize) -> Vec<Fixed16>,
) -> Vec<u8> {
    let words = words_per_row(width).max(1);
    let mut bytes = Vec::with_capacity(rows * words * WORD_BYTES);
    for r in 0..rows {
        let vals = row_values(r);
        debug_assert!(vals.len() <= width);
        let mut padded = vals;
        padded.resize(width.max(1), Fixed16::ZERO);
        let (packed, _) = pack_row(&padded);
        for w in packed {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
    }
    bytes
}

/// Geometry of a staged model+graph, derived from the config.
#[derive(Clone, Debug)]
pub struct StoreLayout {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub input_dim: usize,
    pub edge_dim: usize,
    pub embed_width: usize,
    pub message_width: usize,
    pub has_vn: bool,
}

fn plan_layout(g: &Graph, cfg: &ModelConfig) -> Result<(Graph, StoreLayout)> {
    check_ooc_supported(cfg)?;
    let (g_run, has_vn) = if cfg.kind == ModelKind::GinVn {
        (add_virtual_node(g)?, true)
    } else {
        (g.clone(), false)
    };
    // widths must cover every layer's embeddings and accumulation state
    let embed_width = cfg
        .layer_dims()
        .iter()
        .flat_map(|&(i, o)| [i, o])
        .max()
        .unwrap();
    let csr = coo_to_csr(&g_run)?;
    let csc = csc_scan_order(&g_run)?;
    let vn_id = has_vn.then(|| (g_run.num_nodes - 1) as NodeId);
    let kernels = build_kernels::<Fixed16>(cfg, &g_run, &csr, &csc, None, vn_id)?;
    let message_width = kernels
        .iter()
        .flat_map(|k| [k.state_dim(), k.msg_dim()])
        .max()
        .unwrap()
        .max(1);
    let layout = StoreLayout {
        num_nodes: g_run.num_nodes,
        num_edges: g_run.num_edges,
        input_dim: g_run.input_dim(),
        edge_dim: g_run.edge_dim(),
        embed_width,
        message_width,
        has_vn,
    };
    Ok((g_run, layout))
}

fn check_ooc_supported(cfg: &ModelConfig) -> Result<()> {
    match cfg.kind {
        ModelKind::Gcn | ModelKind::Gin | ModelKind::GinVn | ModelKind::Pna => Ok(()),
        other => Err(Error::UnsupportedModel(format!(
            "out-of-core path supports push-flow models without per-graph eigenvector inputs; got {}",
            other.as_str()
        ))),
    }
}

/// Stage a graph (virtual node applied for GIN-VN) into an external store
/// for the given model.
pub fn stage_graph(g: &Graph, cfg: &ModelConfig) -> Result<ExternalStore> {
    g.validate()?;
    let (g_run, layout) = plan_layout(g, cfg)?;
    let csr = coo_to_csr(&g_run)?;

    let mut store = ExternalStore::new();
    store.add_region(
        "meta",
        u32s_bytes(&[
            layout.num_nodes as u32,
            layout.num_edges as u32,
            layout.input_dim as u32,
            layout.edge_dim as u32,
            layout.embed_width as u32,
            layout.message_width as u32,
            layout.has_vn as u32,
        ]),
    );
    store.add_region("csr_degree", u32s_bytes(&csr.degree));
    store.add_region("csr_neighbors", u32s_bytes(&csr.neighbors));
    store.add_region("csr_edge_index", u32s_bytes(&csr.edge_index));
    let nf = &g_run.node_features;
    store.add_region(
        "node_features",
        packed_rows_bytes(layout.num_nodes, layout.input_dim, |r| {
            nf.row(r)
                .iter()
                .map(|&v| Fixed16::from_f64(v as f64))
                .collect()
        }),
    );
    let ef = &g_run.edge_features;
    store.add_region(
        "edge_features",
        packed_rows_bytes(layout.num_edges.max(1), layout.edge_dim.max(1), |r| {
            if r < layout.num_edges && layout.edge_dim > 0 {
                ef.row(r)
                    .iter()
                    .map(|&v| Fixed16::from_f64(v as f64))
                    .collect()
            } else {
                vec![]
            }
        }),
    );
    store.add_region(
        "embeddings",
        packed_rows_bytes(layout.num_nodes, layout.embed_width, |_| vec![]),
    );
    store.add_region(
        "messages0",
        packed_rows_bytes(layout.num_nodes, layout.message_width, |_| vec![]),
    );
    store.add_region(
        "messages1",
        packed_rows_bytes(layout.num_nodes, layout.message_width, |_| vec![]),
    );
    store.refresh_checksums();
    Ok(store)
}

pub fn read_layout(store: &mut ExternalStore) -> Result<StoreLayout> {
    let meta = store.read_u32_all("meta")?;
    if meta.len() != 7 {
        return Err(Error::StoreCorruption {
            region: "meta".into(),
            detail: format!("expected 7 fields, got {}", meta.len()),
        });
    }
    Ok(StoreLayout {
        num_nodes: meta[0] as usize,
        num_edges: meta[1] as usize,
        input_dim: meta[2] as usize,
        edge_dim: meta[3] as usize,
        embed_width: meta[4] as usize,
        message_width: meta[5] as usize,
        has_vn: meta[6] != 0,
    })
}

/// Run a model with embeddings and messages resident in the store,
/// bitwise-identical to the in-core Fixed16 engine on the same graph.
pub fn run_model_out_of_core(
    store: &mut ExternalStore,
    cfg: &ModelConfig,
) -> Result<ModelRun<Fixed16>> {
    check_ooc_supported(cfg)?;
    let layout = read_layout(store)?;
    let n = layout.num_nodes;
    let vn_id = layout.has_vn.then(|| (n - 1) as NodeId);
    if cfg.kind == ModelKind::GinVn && !layout.has_vn {
        return Err(Error::Config(
            "store was not staged with a virtual node".into(),
        ));
    }

    // one-shot conversion: degree/neighbor tables stream in through the
    // store, the CSR handle itself lives on-chip
    let degree = store.read_u32_all("csr_degree")?;
    let neighbors = store.read_u32_all("csr_neighbors")?;
    let edge_index = store.read_u32_all("csr_edge_index")?;
    let mut edges = vec![(0u32, 0u32); layout.num_edges];
    {
        let mut slot = 0usize;
        for (node, &deg) in degree.iter().enumerate() {
            for _ in 0..deg {
                edges[edge_index[slot] as usize] = (node as u32, neighbors[slot]);
                slot += 1;
            }
        }
    }
    let shell = Graph::new(
        n,
        edges,
        Mat::zeros(n, layout.input_dim),
        Mat::zeros(layout.num_edges, layout.edge_dim),
    )?;
    let csr = coo_to_csr(&shell)?;
    let csc = csc_scan_order(&shell)?;
    let kernels = build_kernels::<Fixed16>(cfg, &shell, &csr, &csc, None, vn_id)?;
    let head = build_head::<Fixed16>(cfg)?;

    let mut stats = EngineStats::default();
    let ew = layout.embed_width;
    let mw = layout.message_width;

    // load raw features into the embedding region
    for i in 0..n {
        let row = store.read_row("node_features", i, layout.input_dim)?;
        store.write_row("embeddings", i, &padded(&row, ew))?;
    }

    let msg_regions = ["messages0", "messages1"];
    let mut write_side = 0usize;
    let mut parity_flips = 0u64;
    let mut x_width = layout.input_dim;

    let edge_row = |store: &mut ExternalStore, eid: u32| -> Result<Vec<Fixed16>> {
        if layout.edge_dim == 0 {
            Ok(Vec::new())
        } else {
            store.read_row("edge_features", eid as usize, layout.edge_dim)
        }
    };

    let init_write_states =
        |store: &mut ExternalStore, side: usize, k: &dyn LayerKernel<Fixed16>| -> Result<()> {
            let mut state = vec![Fixed16::ZERO; k.state_dim()];
            for i in 0..n {
                k.init_state(&mut state);
                store.write_row(msg_regions[side], i, &padded(&state, mw))?;
            }
            Ok(())
        };

    let scatter_node = |store: &mut ExternalStore,
                        side: usize,
                        k: &dyn LayerKernel<Fixed16>,
                        i: NodeId,
                        x_row: &[Fixed16],
                        stats: &mut EngineStats|
     -> Result<()> {
        for (dst, eid) in csr.slice(i) {
            let ef = edge_row(store, eid)?;
            let mut state = store.read_row(msg_regions[side], dst as usize, mw)?;
            k.scatter(i, dst, eid, &ef, x_row, &mut state[..k.state_dim()]);
            store.write_row(msg_regions[side], dst as usize, &state)?;
            stats.scatter_calls += 1;
            stats.edge_visits += 1;
        }
        Ok(())
    };

    let finalize_side = |store: &mut ExternalStore,
                         side: usize,
                         k: &dyn LayerKernel<Fixed16>,
                         x_width: usize|
     -> Result<()> {
        let mut msg = vec![Fixed16::ZERO; k.msg_dim()];
        for i in 0..n {
            let state = store.read_row(msg_regions[side], i, mw)?;
            let x_row = store.read_row("embeddings", i, ew)?;
            k.finalize(
                i as NodeId,
                &state[..k.state_dim()],
                &x_row[..x_width],
                &mut msg,
            );
            store.write_row(msg_regions[side], i, &padded(&msg, mw))?;
        }
        Ok(())
    };

    // layer 0 message state: initial scatter of raw features, or zero-state
    {
        let k0 = kernels[0].as_ref();
        init_write_states(store, write_side, k0)?;
        if cfg.kind.layer0_scatter() {
            for i in 0..n as NodeId {
                let x_row = store.read_row("embeddings", i as usize, ew)?;
                scatter_node(store, write_side, k0, i, &x_row[..x_width], &mut stats)?;
            }
        }
        finalize_side(store, write_side, k0, x_width)?;
        write_side = 1 - write_side;
        parity_flips += 1;
    }

    for l in 0..kernels.len() {
        let kernel = kernels[l].as_ref();
        let scatter_kernel = if l + 1 < kernels.len() {
            Some(kernels[l + 1].as_ref())
        } else {
            None
        };
        if let Some(sk) = scatter_kernel {
            init_write_states(store, write_side, sk)?;
        }
        for i in 0..n as NodeId {
            let x_row = store.read_row("embeddings", i as usize, ew)?;
            let msg_row = store.read_row(msg_regions[1 - write_side], i as usize, mw)?;
            let mut new_row = vec![Fixed16::ZERO; kernel.out_dim()];
            kernel.transform(
                i,
                &x_row[..kernel.in_dim()],
                &msg_row[..kernel.msg_dim()],
                &mut new_row,
            );
            store.write_row("embeddings", i as usize, &padded(&new_row, ew))?;
            if let Some(sk) = scatter_kernel {
                scatter_node(store, write_side, sk, i, &new_row, &mut stats)?;
            }
        }
        x_width = kernel.out_dim();
        if let Some(sk) = scatter_kernel {
            finalize_side(store, write_side, sk, x_width)?;
        }
        write_side = 1 - write_side;
        parity_flips += 1;
    }
    stats.parity_flips = parity_flips - 1; // layer flips only, excluding the initial pass
    stats.peak_msg_elems = 2 * n * mw;
    stats.peak_embed_elems = n * ew;

    // readback: final embeddings, pooling, head
    let mut final_embeddings = Mat::zeros(n, x_width);
    for i in 0..n {
        let row = store.read_row("embeddings", i, ew)?;
        final_embeddings.row_mut(i).copy_from_slice(&row[..x_width]);
    }
    let real = n - usize::from(vn_id.is_some());
    if real == 0 {
        return Err(Error::EmptyGraph);
    }
    let prediction = match cfg.task {
        TaskKind::Graph => {
            let mut sum = vec![Fixed16::ZERO; x_width];
            for i in 0..n {
                if vn_id == Some(i as NodeId) {
                    continue;
                }
                for (s, &v) in sum.iter_mut().zip(final_embeddings.row(i)) {
                    *s = *s + v;
                }
            }
            for s in sum.iter_mut() {
                *s = s.div_int(real as u32);
            }
            Prediction::Graph(head_forward(&sum, &head)?)
        }
        TaskKind::Node => {
            let mut rows = Mat::zeros(real, cfg.num_tasks());
            for i in 0..real {
                let out = head_forward(final_embeddings.row(i), &head)?;
                rows.set_row(i, &out);
            }
            Prediction::Node(rows)
        }
    };

    Ok(ModelRun {
        prediction,
        final_embeddings,
        vn_id,
        stats,
    })
}

fn padded(values: &[Fixed16], width: usize) -> Vec<Fixed16> {
    let mut v = values.to_vec();
    v.resize(width, Fixed16::ZERO);
    v
}

/// Bounded queue of (node id, degree) entries filled with consecutive
/// node ids ahead of the consumer.
#[derive(Clone, Debug)]
pub struct PrefetchBuffer {
    capacity: usize,
    entries: VecDeque<(NodeId, u32)>,
    next_node: NodeId,
    pub refills: u64,
}

impl PrefetchBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
            next_node: 0,
            refills: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Append the next consecutive node's degree if there is room and
    /// nodes remain. Returns whether a refill was issued.
    pub fn step(&mut self, degrees: &[u32]) -> bool {
        if self.is_full() || (self.next_node as usize) >= degrees.len() {
            return false;
        }
        self.entries
            .push_back((self.next_node, degrees[self.next_node as usize]));
        self.next_node += 1;
        self.refills += 1;
        true
    }

    /// Pop the next entry in id order.
    pub fn pop(&mut self) -> Option<(NodeId, u32)> {
        self.entries.pop_front()
    }

    pub fn fill(&mut self, degrees: &[u32]) {
        while self.step(degrees) {}
    }
}

#[derive(Clone, Debug)]
pub struct PrefetchReport {
    pub enabled: bool,
    pub capacity: usize,
    pub read_latency: u64,
    /// MP cycles spent blocked on a degree fetch, cold start excluded.
    pub mp_stall_cycles: u64,
    pub pops: u64,
    pub refills: u64,
    pub total_cycles: u64,
}

/// Degree-fetch timing model for one message-passing pass. The prefetcher
/// issues one read per cycle (`read_latency` cycles to land), holding at
/// most `capacity` outstanding-or-buffered entries; a slot frees when MP
/// pops. Disabled, MP issues each degree read itself and eats the full
/// latency. Stalls exclude the cold start (first fetch).
pub fn simulate_degree_prefetch(
    mp_costs: &[u64],
    capacity: usize,
    read_latency: u64,
    enabled: bool,
) -> PrefetchReport {
    let n = mp_costs.len();
    let mut stalls = 0u64;
    let mut pops = 0u64;
    let mut refills = 0u64;
    let mut total = 0u64;
    if n > 0 {
        if enabled {
            let mut issue = vec![0u64; n];
            let mut pop = vec![0u64; n];
            for k in 0..n {
                let pipeline = if k > 0 { issue[k - 1] + 1 } else { 0 };
                let slot = if k >= capacity { pop[k - capacity] } else { 0 };
                issue[k] = pipeline.max(slot);
                let ready = issue[k] + read_latency;
                let want = if k > 0 {
                    pop[k - 1] + mp_costs[k - 1]
                } else {
                    0
                };
                pop[k] = ready.max(want);
                if k > 0 {
                    stalls += pop[k] - want;
                }
                refills += 1;
                pops += 1;
            }
            total = pop[n - 1] + mp_costs[n - 1];
        } else {
            let mut t = 0u64;
            for (k, &mp) in mp_costs.iter().enumerate() {
                t += read_latency; // direct DRAM degree read
                if k > 0 {
                    stalls += read_latency;
                }
                t += mp;
                pops += 1;
            }
            total = t;
        }
    }
    PrefetchReport {
        enabled,
        capacity,
        read_latency,
        mp_stall_cycles: stalls,
        pops,
        refills,
        total_cycles: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::quantize;
    use crate::models::random_weights;

    fn small_graph(seed: u64) -> Graph {
        crate::fixtures::random_graph(12, 3.0, 4, 2, seed)
    }

    #[test]
    fn stage_save_load_round_trip() {
        let g = small_graph(1);
        let mut cfg = ModelConfig::paper_default(ModelKind::Gin, 4, 2);
        cfg.num_layers = 2;
        cfg.eps = vec![0.0; 2];
        cfg.embed_dim = 6;
        cfg.weights = random_weights(&cfg, 5);
        let mut store = stage_graph(&g, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.store");
        store.save(&path).unwrap();
        let loaded = ExternalStore::load(&path).unwrap();
        assert_eq!(loaded.data.len(), store.data.len());
    }

    #[test]
    fn corrupted_store_is_io_error() {
        let g = small_graph(2);
        let mut cfg = ModelConfig::paper_default(ModelKind::Gcn, 4, 2);
        cfg.num_layers = 2;
        cfg.embed_dim = 6;
        cfg.weights = random_weights(&cfg, 6);
        let mut store = stage_graph(&g, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.store");
        store.save(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let n = bytes.len();
        bytes[n - 3] ^= 0xFF;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            ExternalStore::load(&path),
            Err(Error::StoreCorruption { .. })
        ));
    }

    #[test]
    fn row_transfers_use_ceil_d_over_8_words() {
        let g = small_graph(3);
        let mut cfg = ModelConfig::paper_default(ModelKind::Gcn, 4, 2);
        cfg.num_layers = 2;
        cfg.embed_dim = 13; // 13 -> 2 words
        cfg.weights = random_weights(&cfg, 7);
        let mut store = stage_graph(&g, &cfg).unwrap();
        let before = store.log.words_read;
        let _ = store.read_row("embeddings", 0, 13).unwrap();
        assert_eq!(store.log.words_read - before, 2);
        let before = store.log.words_written;
        store
            .write_row("embeddings", 1, &vec![quantize::<Fixed16>(0.5); 13])
            .unwrap();
        assert_eq!(store.log.words_written - before, 2);
    }

    #[test]
    fn prefetch_buffer_fills_and_conserves() {
        let degrees: Vec<u32> = (0..100).map(|i| i % 7).collect();
        let mut buf = PrefetchBuffer::new(8);
        buf.fill(&degrees);
        assert_eq!(buf.len(), 8);
        assert_eq!(buf.refills, 8);
        for k in 0..5 {
            let (node, deg) = buf.pop().unwrap();
            assert_eq!(node, k as u32);
            assert_eq!(deg, degrees[k]);
            buf.step(&degrees);
        }
        // k pops -> exactly k refills issued past the initial fill
        assert_eq!(buf.refills, 8 + 5);
        assert!(buf.is_full());
    }

    #[test]
    fn capacity_one_terminates_and_matches() {
        let mp = vec![3u64; 50];
        let tight = simulate_degree_prefetch(&mp, 1, 32, true);
        let wide = simulate_degree_prefetch(&mp, 64, 32, true);
        assert_eq!(tight.pops, 50);
        assert_eq!(wide.pops, 50);
        assert!(tight.mp_stall_cycles > 0);
        assert_eq!(wide.mp_stall_cycles, 0);
        let off = simulate_degree_prefetch(&mp, 64, 32, false);
        assert!(off.mp_stall_cycles > 0);
    }
}
