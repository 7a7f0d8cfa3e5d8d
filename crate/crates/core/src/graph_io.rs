//! On-disk graph formats.
//!
//! Text format:
//! ```text
//! N E d_in d_e
//! <N rows of d_in whitespace-separated node features>
//! <E lines: src dst f1..f_{d_e}>
//! ```
//!
//! Binary format: four little-endian u32 counts (N, E, d_in, d_e), then
//! N*d_in little-endian IEEE f32 node features, then E pairs of u32
//! (src, dst), then E*d_e f32 edge features. Files ending in `.bin` are
//! treated as binary, anything else as text.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mat::Mat;

pub fn write_graph_text(g: &Graph, path: &Path) -> Result<()> {
    let mut out = String::new();
    let d_in = g.input_dim();
    let d_e = g.edge_dim();
    out.push_str(&format!(
        "{} {} {} {}\n",
        g.num_nodes, g.num_edges, d_in, d_e
    ));
    for i in 0..g.num_nodes {
        let row: Vec<String> = g
            .node_features
            .row(i)
            .iter()
            .map(|v| v.to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    for (e, &(s, d)) in g.edges.iter().enumerate() {
        out.push_str(&format!("{s} {d}"));
        for v in g.edge_features.row(e) {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_graph_text(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path)?;
    parse_graph_text(&text)
}

pub fn parse_graph_text(text: &str) -> Result<Graph> {
    let mut tokens = text.split_whitespace();
    let mut next_usize = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
    };
    let n = next_usize("node count")?;
    let e = next_usize("edge count")?;
    let d_in = next_usize("node feature dim")?;
    let d_e = next_usize("edge feature dim")?;

    let mut node_feats = Vec::with_capacity(n * d_in);
    for _ in 0..n * d_in {
        let tok = tokens
            .next()
            .ok_or_else(|| Error::Parse("truncated node features".into()))?;
        node_feats.push(
            tok.parse::<f32>()
                .map_err(|err| Error::Parse(format!("bad node feature `{tok}`: {err}")))?,
        );
    }

    let mut edges = Vec::with_capacity(e);
    let mut edge_feats = Vec::with_capacity(e * d_e);
    for _ in 0..e {
        let s: u32 = tokens
            .next()
            .ok_or_else(|| Error::Parse("truncated edge list".into()))?
            .parse()
            .map_err(|err| Error::Parse(format!("bad edge src: {err}")))?;
        let d: u32 = tokens
            .next()
            .ok_or_else(|| Error::Parse("truncated edge list".into()))?
            .parse()
            .map_err(|err| Error::Parse(format!("bad edge dst: {err}")))?;
        edges.push((s, d));
        for _ in 0..d_e {
            let tok = tokens
                .next()
                .ok_or_else(|| Error::Parse("truncated edge features".into()))?;
            edge_feats.push(
                tok.parse::<f32>()
                    .map_err(|err| Error::Parse(format!("bad edge feature `{tok}`: {err}")))?,
            );
        }
    }
    if tokens.next().is_some() {
        return Err(Error::Parse("trailing tokens after edge list".into()));
    }

    Graph::new(
        n,
        edges,
        Mat::from_vec(n, d_in, node_feats),
        Mat::from_vec(e, d_e, edge_feats),
    )
}

pub fn write_graph_binary(g: &Graph, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    for v in [
        g.num_nodes as u32,
        g.num_edges as u32,
        g.input_dim() as u32,
        g.edge_dim() as u32,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in g.node_features.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &(s, d) in &g.edges {
        buf.extend_from_slice(&s.to_le_bytes());
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for v in g.edge_features.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_graph_binary(path: &Path) -> Result<Graph> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;
    let mut take_u32 = || -> Result<u32> {
        if pos + 4 > bytes.len() {
            return Err(Error::Parse("truncated binary graph".into()));
        }
        let v = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
        pos += 4;
        Ok(v)
    };
    let n = take_u32()? as usize;
    let e = take_u32()? as usize;
    let d_in = take_u32()? as usize;
    let d_e = take_u32()? as usize;

    let need = 16 + 4 * (n * d_in) + 8 * e + 4 * (e * d_e);
    if bytes.len() != need {
        return Err(Error::Parse(format!(
            "binary graph length {} != expected {need}",
            bytes.len()
        )));
    }
    let mut pos = 16usize;
    let f32s = |count: usize, pos: &mut usize| -> Vec<f32> {
        let mut v = Vec::with_capacity(count);
        for _ in 0..count {
            v.push(f32::from_le_bytes(
                bytes[*pos..*pos + 4].try_into().unwrap(),
            ));
            *pos += 4;
        }
        v
    };
    let node_feats = f32s(n * d_in, &mut pos);
    let mut edges = Vec::with_capacity(e);
    for _ in 0..e {
        let s = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
        let d = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap());
        pos += 8;
        edges.push((s, d));
    }
    let edge_feats = f32s(e * d_e, &mut pos);

    Graph::new(
        n,
        edges,
        Mat::from_vec(n, d_in, node_feats),
        Mat::from_vec(e, d_e, edge_feats),
    )
}

/// Load a graph, picking the format from the file extension.
pub fn load_graph(path: &Path) -> Result<Graph> {
    match path.extension().and_then(|s| s.to_str()) {
        Some("bin") => read_graph_binary(path),
        _ => read_graph_text(path),
    }
}

/// Save a graph, picking the format from the file extension.
pub fn save_graph(g: &Graph, path: &Path) -> Result<()> {
    match path.extension().and_then(|s| s.to_str()) {
        Some("bin") => write_graph_binary(g, path),
        _ => write_graph_text(g, path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Graph {
        Graph::new(
            3,
            vec![(0, 1), (0, 2), (1, 2)],
            Mat::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            Mat::from_vec(3, 1, vec![0.5, -0.5, 0.25]),
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip() {
        let g = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        write_graph_text(&g, &path).unwrap();
        let back = read_graph_text(&path).unwrap();
        assert_eq!(back.edges, g.edges);
        assert_eq!(back.node_features, g.node_features);
        assert_eq!(back.edge_features, g.edge_features);
    }

    #[test]
    fn binary_round_trip() {
        let g = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        write_graph_binary(&g, &path).unwrap();
        let back = load_graph(&path).unwrap();
        assert_eq!(back.edges, g.edges);
        assert_eq!(back.node_features, g.node_features);
    }

    #[test]
    fn truncated_text_errors() {
        assert!(parse_graph_text("3 1 0 0\n0").is_err());
        assert!(parse_graph_text("").is_err());
    }
}
