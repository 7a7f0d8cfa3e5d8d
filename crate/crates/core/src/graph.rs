//! Graph representations: raw COO input plus the CSR/CSC traversal tables
//! the engine converts to on the fly, and virtual-node augmentation.

use crate::error::{Error, Result};
use crate::mat::Mat;

pub type NodeId = u32;

/// Raw coordinate-format graph: the unit of streaming input.
#[derive(Clone, Debug)]
pub struct Graph {
    pub num_nodes: usize,
    pub num_edges: usize,
    /// Directed edges as (src, dst), in arrival order.
    pub edges: Vec<(NodeId, NodeId)>,
    /// N x d_in node features.
    pub node_features: Mat<f32>,
    /// E x d_e edge features (d_e may be 0).
    pub edge_features: Mat<f32>,
}

impl Graph {
    pub fn new(
        num_nodes: usize,
        edges: Vec<(NodeId, NodeId)>,
        node_features: Mat<f32>,
        edge_features: Mat<f32>,
    ) -> Result<Self> {
        let g = Self {
            num_nodes,
            num_edges: edges.len(),
            edges,
            node_features,
            edge_features,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_edges != self.edges.len() {
            return Err(Error::MalformedGraph(format!(
                "edge count {} does not match edge list length {}",
                self.num_edges,
                self.edges.len()
            )));
        }
        for &(s, d) in &self.edges {
            if s as usize >= self.num_nodes || d as usize >= self.num_nodes {
                return Err(Error::MalformedGraph(format!(
                    "edge ({s},{d}) out of range for {} nodes",
                    self.num_nodes
                )));
            }
        }
        if self.node_features.rows() != self.num_nodes {
            return Err(Error::MalformedGraph(format!(
                "node feature rows {} != num_nodes {}",
                self.node_features.rows(),
                self.num_nodes
            )));
        }
        if self.edge_features.rows() != self.num_edges {
            return Err(Error::MalformedGraph(format!(
                "edge feature rows {} != num_edges {}",
                self.edge_features.rows(),
                self.num_edges
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.node_features.cols()
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_features.cols()
    }
}

/// Out-neighbor tables: per-node out-degrees plus the row-major
/// concatenation of destination ids. `edge_index` maps each neighbor-table
/// slot back to its original COO position for edge-feature lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrAdjacency {
    pub degree: Vec<u32>,
    pub neighbors: Vec<NodeId>,
    pub edge_index: Vec<u32>,
    offsets: Vec<usize>,
}

/// In-neighbor tables, mirror of [`CsrAdjacency`] with src/dst swapped.
#[derive(Clone, Debug, PartialEq)]
pub struct CscAdjacency {
    pub degree: Vec<u32>,
    pub neighbors: Vec<NodeId>,
    pub edge_index: Vec<u32>,
    offsets: Vec<usize>,
}

fn build_tables(
    num_nodes: usize,
    keyed: impl Iterator<Item = (NodeId, NodeId, u32)> + Clone,
) -> (Vec<u32>, Vec<NodeId>, Vec<u32>, Vec<usize>) {
    let mut degree = vec![0u32; num_nodes];
    let mut count = 0usize;
    for (key, _, _) in keyed.clone() {
        degree[key as usize] += 1;
        count += 1;
    }
    let mut offsets = vec![0usize; num_nodes + 1];
    for i in 0..num_nodes {
        offsets[i + 1] = offsets[i] + degree[i] as usize;
    }
    let mut neighbors = vec![0u32; count];
    let mut edge_index = vec![0u32; count];
    let mut cursor = offsets.clone();
    for (key, other, eid) in keyed {
        let pos = cursor[key as usize];
        neighbors[pos] = other;
        edge_index[pos] = eid;
        cursor[key as usize] += 1;
    }
    (degree, neighbors, edge_index, offsets)
}

macro_rules! impl_adjacency {
    ($ty:ident) => {
        impl $ty {
            pub fn num_nodes(&self) -> usize {
                self.degree.len()
            }

            pub fn num_edges(&self) -> usize {
                self.neighbors.len()
            }

            /// Slice of (neighbor id, original edge id) pairs for `node`.
            pub fn slice(&self, node: NodeId) -> impl Iterator<Item = (NodeId, u32)> + '_ {
                let lo = self.offsets[node as usize];
                let hi = self.offsets[node as usize + 1];
                self.neighbors[lo..hi]
                    .iter()
                    .copied()
                    .zip(self.edge_index[lo..hi].iter().copied())
            }

            /// Flatten back to a COO list in slice order.
            pub fn flatten(&self) -> Vec<(NodeId, NodeId, u32)> {
                let mut out = Vec::with_capacity(self.num_edges());
                for n in 0..self.num_nodes() as NodeId {
                    for (other, eid) in self.slice(n) {
                        out.push((n, other, eid));
                    }
                }
                out
            }
        }
    };
}

impl_adjacency!(CsrAdjacency);
impl_adjacency!(CscAdjacency);

/// Convert COO to CSR. Stable: each node's slice preserves the relative
/// COO order of its out-edges.
pub fn coo_to_csr(g: &Graph) -> Result<CsrAdjacency> {
    g.validate()?;
    let it = g
        .edges
        .iter()
        .enumerate()
        .map(|(i, &(s, d))| (s, d, i as u32));
    let (degree, neighbors, edge_index, offsets) = build_tables(g.num_nodes, it);
    Ok(CsrAdjacency {
        degree,
        neighbors,
        edge_index,
        offsets,
    })
}

/// Convert COO to CSC. Stable with respect to COO order within each
/// destination.
pub fn coo_to_csc(g: &Graph) -> Result<CscAdjacency> {
    g.validate()?;
    let it = g
        .edges
        .iter()
        .enumerate()
        .map(|(i, &(s, d))| (d, s, i as u32));
    let (degree, neighbors, edge_index, offsets) = build_tables(g.num_nodes, it);
    Ok(CscAdjacency {
        degree,
        neighbors,
        edge_index,
        offsets,
    })
}

/// CSC whose per-node slices enumerate in-edges in scatter arrival order:
/// ascending source id, CSR slice order within a source. Both layer
/// execution paths aggregate in this order, which is what makes them agree
/// bitwise.
pub fn csc_scan_order(g: &Graph) -> Result<CscAdjacency> {
    let csr = coo_to_csr(g)?;
    let flat = csr.flatten();
    let it = flat.iter().map(|&(s, d, eid)| (d, s, eid));
    let (degree, neighbors, edge_index, offsets) = build_tables(g.num_nodes, it);
    Ok(CscAdjacency {
        degree,
        neighbors,
        edge_index,
        offsets,
    })
}

/// Append a virtual node connected to every real node. The VN becomes node
/// N; 2N new edges are appended after the originals, (N,i) for all i first,
/// then (i,N). VN node and edge features are zero vectors.
pub fn add_virtual_node(g: &Graph) -> Result<Graph> {
    if g.num_nodes == 0 {
        return Err(Error::EmptyGraph);
    }
    let n = g.num_nodes;
    let vn = n as NodeId;
    let mut edges = g.edges.clone();
    edges.reserve(2 * n);
    for i in 0..n as NodeId {
        edges.push((vn, i));
    }
    for i in 0..n as NodeId {
        edges.push((i, vn));
    }

    let d_in = g.input_dim();
    let mut nf = Vec::with_capacity((n + 1) * d_in);
    nf.extend_from_slice(g.node_features.data());
    nf.extend(std::iter::repeat(0.0).take(d_in));

    let d_e = g.edge_dim();
    let mut ef = Vec::with_capacity((g.num_edges + 2 * n) * d_e);
    ef.extend_from_slice(g.edge_features.data());
    ef.extend(std::iter::repeat(0.0).take(2 * n * d_e));

    Graph::new(
        n + 1,
        edges,
        Mat::from_vec(n + 1, d_in, nf),
        Mat::from_vec(g.num_edges + 2 * n, d_e, ef),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn graph_from_edges(n: usize, edges: &[(u32, u32)]) -> Graph {
        Graph::new(
            n,
            edges.to_vec(),
            Mat::zeros(n, 0),
            Mat::zeros(edges.len(), 0),
        )
        .unwrap()
    }

    #[test]
    fn csr_empty_graph() {
        let g = graph_from_edges(3, &[]);
        let csr = coo_to_csr(&g).unwrap();
        assert_eq!(csr.degree, vec![0, 0, 0]);
        assert!(csr.neighbors.is_empty());
    }

    #[test]
    fn csr_three_node_example() {
        let g = graph_from_edges(3, &[(0, 1), (0, 2), (1, 2)]);
        let csr = coo_to_csr(&g).unwrap();
        assert_eq!(csr.degree, vec![2, 1, 0]);
        assert_eq!(csr.neighbors, vec![1, 2, 2]);
        assert_eq!(csr.edge_index, vec![0, 1, 2]);
    }

    #[test]
    fn csc_three_node_example() {
        let g = graph_from_edges(3, &[(0, 1), (0, 2), (1, 2)]);
        let csc = coo_to_csc(&g).unwrap();
        assert_eq!(csc.degree, vec![0, 1, 2]);
        assert_eq!(csc.neighbors, vec![0, 0, 1]);
    }

    #[test]
    fn csc_self_loop() {
        let g = graph_from_edges(2, &[(1, 1)]);
        let csc = coo_to_csc(&g).unwrap();
        assert_eq!(csc.degree, vec![0, 1]);
        assert_eq!(csc.neighbors, vec![1]);
    }

    #[test]
    fn out_of_range_edge_is_malformed() {
        let g = Graph {
            num_nodes: 2,
            num_edges: 1,
            edges: vec![(0, 5)],
            node_features: Mat::zeros(2, 0),
            edge_features: Mat::zeros(1, 0),
        };
        assert!(matches!(coo_to_csr(&g), Err(Error::MalformedGraph(_))));
    }

    #[test]
    fn virtual_node_counts() {
        let g = graph_from_edges(2, &[(0, 1)]);
        let aug = add_virtual_node(&g).unwrap();
        assert_eq!(aug.num_nodes, 3);
        assert_eq!(aug.num_edges, 5);

        let single = graph_from_edges(1, &[]);
        let aug = add_virtual_node(&single).unwrap();
        assert_eq!(aug.edges, vec![(1, 0), (0, 1)]);
    }

    #[test]
    fn virtual_node_twice_grows_again() {
        let g = graph_from_edges(2, &[(0, 1)]);
        let once = add_virtual_node(&g).unwrap();
        let twice = add_virtual_node(&once).unwrap();
        assert_eq!(twice.num_nodes, 4);
        assert_eq!(twice.num_edges, 5 + 2 * 3);
    }

    #[test]
    fn scan_order_csc_sorts_by_source() {
        // COO deliberately not sorted by src
        let g = graph_from_edges(4, &[(2, 0), (1, 0), (3, 0), (1, 0)]);
        let scan = csc_scan_order(&g).unwrap();
        let ins: Vec<(u32, u32)> = scan.slice(0).collect();
        // ascending source, COO order within equal sources
        assert_eq!(ins, vec![(1, 1), (1, 3), (2, 0), (3, 2)]);
    }
}
