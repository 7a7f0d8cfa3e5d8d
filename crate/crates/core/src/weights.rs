//! Model weights: named float tensors plus the on-disk format.
//!
//! A weights file is a text manifest followed by binary payloads:
//!
//! ```text
//! weights v1
//! <name> <d0> [d1 ...]     (one line per tensor)
//! payload
//! <little-endian IEEE f32 payloads, concatenated in manifest order>
//! ```
//!
//! Tensors are quantized to the engine's fixed-point format at load time.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mat::Mat;

#[derive(Clone, Debug)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// View a rank-2 tensor as a matrix.
    pub fn as_mat(&self) -> Result<Mat<f32>> {
        if self.shape.len() != 2 {
            return Err(Error::BadWeights(format!(
                "tensor `{}` is rank {}, expected 2",
                self.name,
                self.shape.len()
            )));
        }
        Ok(Mat::from_vec(
            self.shape[0],
            self.shape[1],
            self.data.clone(),
        ))
    }
}

#[derive(Clone, Debug, Default)]
pub struct ModelWeights {
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ModelWeights {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, shape: Vec<usize>, data: Vec<f32>) {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        self.index.insert(name.to_string(), self.tensors.len());
        self.tensors.push(Tensor {
            name: name.to_string(),
            shape,
            data,
        });
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub fn require(&self, name: &str, shape: &[usize]) -> Result<&Tensor> {
        let t = self
            .get(name)
            .ok_or_else(|| Error::BadWeights(format!("missing tensor `{name}`")))?;
        if t.shape != shape {
            return Err(Error::BadWeights(format!(
                "tensor `{name}` has shape {:?}, expected {:?}",
                t.shape, shape
            )));
        }
        Ok(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        self.tensors.iter()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }
}

pub fn write_weights(w: &ModelWeights, path: &Path) -> Result<()> {
    let mut head = String::from("weights v1\n");
    for t in w.iter() {
        head.push_str(&t.name);
        for d in &t.shape {
            head.push(' ');
            head.push_str(&d.to_string());
        }
        head.push('\n');
    }
    head.push_str("payload\n");
    let mut bytes = head.into_bytes();
    for t in w.iter() {
        for v in &t.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_weights(path: &Path) -> Result<ModelWeights> {
    let bytes = fs::read(path)?;
    parse_weights(&bytes)
}

pub fn parse_weights(bytes: &[u8]) -> Result<ModelWeights> {
    // the manifest is ASCII lines up to and including "payload\n"
    let mut pos = 0usize;
    let mut lines: Vec<String> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Parse("weights manifest missing payload marker".into()))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end])
            .map_err(|_| Error::Parse("weights manifest is not utf-8".into()))?
            .to_string();
        pos += end + 1;
        if line == "payload" {
            break;
        }
        lines.push(line);
    }
    if lines.first().map(String::as_str) != Some("weights v1") {
        return Err(Error::Parse(
            "bad weights magic, expected `weights v1`".into(),
        ));
    }

    let mut w = ModelWeights::new();
    let mut cursor = pos;
    for line in &lines[1..] {
        let mut parts = line.split_whitespace();
        let name = parts
            .next()
            .ok_or_else(|| Error::Parse("empty manifest line".into()))?;
        let shape: Vec<usize> = parts
            .map(|p| {
                p.parse()
                    .map_err(|e| Error::Parse(format!("bad dim in `{line}`: {e}")))
            })
            .collect::<Result<_>>()?;
        let count: usize = shape.iter().product();
        let need = count * 4;
        if cursor + need > bytes.len() {
            return Err(Error::Parse(format!(
                "weights payload truncated at tensor `{name}`"
            )));
        }
        let mut data = Vec::with_capacity(count);
        for i in 0..count {
            let off = cursor + i * 4;
            data.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
        }
        cursor += need;
        w.insert(name, shape, data);
    }
    if cursor != bytes.len() {
        return Err(Error::Parse("trailing bytes after weights payload".into()));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut w = ModelWeights::new();
        w.insert(
            "layer0.weight",
            vec![2, 3],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        );
        w.insert("layer0.bias", vec![2], vec![-1.0, 0.5]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.wts");
        write_weights(&w, &path).unwrap();
        let back = read_weights(&path).unwrap();
        assert_eq!(back.len(), 2);
        let t = back.require("layer0.weight", &[2, 3]).unwrap();
        assert_eq!(t.data, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(back.require("layer0.bias", &[3]).is_err());
        assert!(back.get("nope").is_none());
    }

    #[test]
    fn truncated_payload_errors() {
        let mut w = ModelWeights::new();
        w.insert("t", vec![4], vec![1.0; 4]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.wts");
        write_weights(&w, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(parse_weights(&bytes).is_err());
    }
}
