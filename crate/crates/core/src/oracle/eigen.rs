//! Desk-scale Laplacian eigenvector utility: cyclic Jacobi rotations on
//! the symmetrized graph Laplacian. Deterministic, handles eigenvalue
//! multiplicity, and verifiable by residuals.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mat::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LaplacianKind {
    /// I - D^{-1/2} A D^{-1/2} on the symmetrized simple graph.
    #[default]
    NormalizedSymmetric,
    /// D - A.
    Combinatorial,
}

/// Symmetrized, deduplicated adjacency with self-loops dropped.
pub fn symmetric_adjacency(g: &Graph) -> Mat<f64> {
    let n = g.num_nodes;
    let mut a = Mat::zeros(n, n);
    for &(s, d) in &g.edges {
        if s == d {
            continue;
        }
        a.row_mut(s as usize)[d as usize] = 1.0;
        a.row_mut(d as usize)[s as usize] = 1.0;
    }
    a
}

pub fn laplacian(g: &Graph, kind: LaplacianKind) -> Mat<f64> {
    let n = g.num_nodes;
    let a = symmetric_adjacency(g);
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum()).collect();
    let mut l = Mat::zeros(n, n);
    match kind {
        LaplacianKind::Combinatorial => {
            for i in 0..n {
                for j in 0..n {
                    l.row_mut(i)[j] = if i == j { deg[i] } else { -a.row(i)[j] };
                }
            }
        }
        LaplacianKind::NormalizedSymmetric => {
            let inv_sqrt: Vec<f64> = deg
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
                .collect();
            for i in 0..n {
                for j in 0..n {
                    l.row_mut(i)[j] = if i == j {
                        if deg[i] > 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        -a.row(i)[j] * inv_sqrt[i] * inv_sqrt[j]
                    };
                }
            }
        }
    }
    l
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors as columns), unsorted. Iterates until the
/// off-diagonal Frobenius norm drops below `tol`.
pub fn jacobi_eigen(mat: &Mat<f64>, tol: f64) -> (Vec<f64>, Mat<f64>) {
    let n = mat.rows();
    let mut a = mat.clone();
    let mut v = Mat::zeros(n, n);
    for i in 0..n {
        v.row_mut(i)[i] = 1.0;
    }
    let off = |a: &Mat<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a.row(i)[j] * a.row(i)[j];
                }
            }
        }
        s.sqrt()
    };
    for _sweep in 0..100 {
        if off(&a) < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.row(p)[q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a.row(q)[q] - a.row(p)[p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.row(k)[p];
                    let akq = a.row(k)[q];
                    a.row_mut(k)[p] = c * akp - s * akq;
                    a.row_mut(k)[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a.row(p)[k];
                    let aqk = a.row(q)[k];
                    a.row_mut(p)[k] = c * apk - s * aqk;
                    a.row_mut(q)[k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v.row(k)[p];
                    let vkq = v.row(k)[q];
                    v.row_mut(k)[p] = c * vkp - s * vkq;
                    v.row_mut(k)[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let evals = (0..n).map(|i| a.row(i)[i]).collect();
    (evals, v)
}

const ZERO_EIGENVALUE_TOL: f64 = 1e-8;
const SIGN_FIX_TOL: f64 = 1e-8;

/// The k smallest-nonzero-eigenvalue eigenvectors of the graph Laplacian,
/// ascending by eigenvalue, zero eigenvalues (one per connected component)
/// skipped, sign fixed so the first component with |v_i| > 1e-8 is
/// positive. Also returns the eigenvalues.
pub fn laplacian_eigenvectors_with_values(
    g: &Graph,
    k: usize,
    kind: LaplacianKind,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = g.num_nodes;
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if n > 4096 {
        return Err(Error::Parameter(format!(
            "eigen utility is desk-scale (N <= 4096), got {n}"
        )));
    }
    let l = laplacian(g, kind);
    let (evals, evecs) = jacobi_eigen(&l, 1e-10);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| evals[i].total_cmp(&evals[j]));

    let mut vectors = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for &idx in &order {
        if evals[idx] < ZERO_EIGENVALUE_TOL {
            continue;
        }
        let mut vec: Vec<f64> = (0..n).map(|r| evecs.row(r)[idx]).collect();
        if let Some(first) = vec.iter().find(|v| v.abs() > SIGN_FIX_TOL) {
            if *first < 0.0 {
                for v in vec.iter_mut() {
                    *v = -*v;
                }
            }
        }
        vectors.push(vec);
        values.push(evals[idx]);
        if vectors.len() == k {
            break;
        }
    }
    Ok((vectors, values))
}

pub fn laplacian_eigenvectors(g: &Graph, k: usize, kind: LaplacianKind) -> Result<Vec<Vec<f64>>> {
    laplacian_eigenvectors_with_values(g, k, kind).map(|(v, _)| v)
}

/// Export eigenvectors as a text sidecar, one vector per line.
pub fn write_eigenvectors(vectors: &[Vec<f64>], path: &Path) -> Result<()> {
    let mut out = String::new();
    for v in vectors {
        let row: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_eigenvectors(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|e| Error::Parse(format!("bad eigenvector entry `{t}`: {e}")))
            })
            .collect::<Result<_>>()?;
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(u32, u32)]) -> Graph {
        Graph::new(
            n,
            edges.to_vec(),
            Mat::zeros(n, 0),
            Mat::zeros(edges.len(), 0),
        )
        .unwrap()
    }

    #[test]
    fn path_p2_fiedler_vector() {
        let g = graph(2, &[(0, 1)]);
        let (vecs, vals) =
            laplacian_eigenvectors_with_values(&g, 1, LaplacianKind::NormalizedSymmetric).unwrap();
        assert_eq!(vecs.len(), 1);
        let r = 1.0 / 2f64.sqrt();
        assert!((vecs[0][0] - r).abs() < 1e-9, "{:?}", vecs[0]);
        assert!((vecs[0][1] + r).abs() < 1e-9);
        assert!((vals[0] - 2.0).abs() < 1e-9); // normalized P2 spectrum {0, 2}
    }

    #[test]
    fn complete_k3_eigenvalue_three_halves_multiplicity_two() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let (_, vals) =
            laplacian_eigenvectors_with_values(&g, 2, LaplacianKind::NormalizedSymmetric).unwrap();
        assert_eq!(vals.len(), 2);
        for v in vals {
            assert!((v - 1.5).abs() < 1e-9, "eigenvalue {v}");
        }
    }

    #[test]
    fn disconnected_graph_skips_multiple_zero_eigenvalues() {
        // two disjoint edges: zero eigenvalue with multiplicity 2
        let g = graph(4, &[(0, 1), (2, 3)]);
        let (vecs, vals) =
            laplacian_eigenvectors_with_values(&g, 1, LaplacianKind::NormalizedSymmetric).unwrap();
        assert_eq!(vecs.len(), 1);
        assert!(vals[0] > 1e-8);
    }

    #[test]
    fn residual_and_orthonormality_random_graph() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let n = 32;
        let edges: Vec<(u32, u32)> = (0..96)
            .map(|_| (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32)))
            .filter(|(a, b)| a != b)
            .collect();
        let g = graph(n, &edges);
        let l = laplacian(&g, LaplacianKind::NormalizedSymmetric);
        let (evals, evecs) = jacobi_eigen(&l, 1e-10);
        // residual ||Lv - lambda v||_inf < 1e-8 for every eigenpair
        for idx in 0..n {
            for r in 0..n {
                let lv: f64 = (0..n).map(|c| l.row(r)[c] * evecs.row(c)[idx]).sum();
                assert!(
                    (lv - evals[idx] * evecs.row(r)[idx]).abs() < 1e-8,
                    "residual at ({r},{idx})"
                );
            }
        }
        // ||V^T V - I||_inf < 1e-8
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|r| evecs.row(r)[i] * evecs.row(r)[j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eig.txt");
        let vecs = vec![vec![0.25, -0.5, 0.75], vec![1.0, 0.0, -1.0]];
        write_eigenvectors(&vecs, &path).unwrap();
        assert_eq!(read_eigenvectors(&path).unwrap(), vecs);
    }
}
