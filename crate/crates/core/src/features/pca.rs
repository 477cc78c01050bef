//! Principal component analysis over raw inter-vector-angle rows.
//!
//! Mean-centered covariance PCA. When there are fewer rows than columns the
//! Gram-matrix route gives the same leading eigenpairs at a fraction of the
//! cost, so `fit_pca` picks whichever side is smaller.

use super::FeatureError;
use crate::exec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A fitted PCA basis: `components[k]` is the k-th orthonormal direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }
}

/// Fit a k-component PCA on the given rows.
///
/// Components are the top-k eigenvectors of the sample covariance
/// (n-1 denominator) in descending eigenvalue order; each component's
/// largest-magnitude entry is made positive.
pub fn fit_pca(rows: &[Vec<f64>], k: usize) -> Result<PcaModel, FeatureError> {
    let n = rows.len();
    if n < k {
        return Err(FeatureError::InsufficientData {
            needed: k,
            got: n,
        });
    }
    let d = rows[0].len();
    if d < k {
        return Err(FeatureError::InsufficientData {
            needed: k,
            got: d,
        });
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err(FeatureError::DimensionMismatch {
            expected: d,
            got: rows.iter().find(|r| r.len() != d).unwrap().len(),
        });
    }

    let mut mean = vec![0.0; d];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let (mut eigvals, mut eigvecs) = if d <= n {
        covariance_eig(rows, &mean, d, denom)
    } else {
        gram_eig(rows, &mean, n, denom)
    };

    // Descending eigenvalues; clamp tiny negative round-off to zero.
    let mut order: Vec<usize> = (0..eigvals.len()).collect();
    order.sort_by(|&a, &b| eigvals[b].total_cmp(&eigvals[a]));
    eigvals = order.iter().map(|&i| eigvals[i].max(0.0)).collect();
    eigvecs = order.iter().map(|&i| std::mem::take(&mut eigvecs[i])).collect();

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for i in 0..k {
        let mut v = eigvecs[i].clone();
        // Sign convention: the largest-magnitude entry is positive.
        let mut arg = 0;
        for (j, x) in v.iter().enumerate() {
            if x.abs() > v[arg].abs() {
                arg = j;
            }
        }
        if v[arg] < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        components.push(v);
        explained_variance.push(eigvals[i]);
    }

    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

/// Eigendecomposition of the d x d sample covariance.
fn covariance_eig(rows: &[Vec<f64>], mean: &[f64], d: usize, denom: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    // Accumulate the upper triangle of sum (x-mean)(x-mean)^T over fixed-size
    // chunks so the merge order is independent of thread count.
    let chunk = 512;
    let chunks: Vec<&[Vec<f64>]> = rows.chunks(chunk).collect();
    let partials = exec::map_ordered(&chunks, |rs| {
        let mut acc = vec![0.0; d * (d + 1) / 2];
        let mut centered = vec![0.0; d];
        for row in rs.iter() {
            for i in 0..d {
                centered[i] = row[i] - mean[i];
            }
            let mut pos = 0;
            for i in 0..d {
                let ci = centered[i];
                let dst = &mut acc[pos..pos + (d - i)];
                let src = &centered[i..d];
                for (a, s) in dst.iter_mut().zip(src) {
                    *a += ci * s;
                }
                pos += d - i;
            }
        }
        acc
    });
    let mut tri = vec![0.0; d * (d + 1) / 2];
    for p in partials {
        for (t, v) in tri.iter_mut().zip(&p) {
            *t += v;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut pos = 0;
    for i in 0..d {
        for j in i..d {
            let v = tri[pos] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
            pos += 1;
        }
    }
    let eig = cov.symmetric_eigen();
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let vecs: Vec<Vec<f64>> = (0..d)
        .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (vals, vecs)
}

/// Gram-matrix route for n < d: eigenvectors of B B^T mapped back through
/// B^T u / sigma.
fn gram_eig(rows: &[Vec<f64>], mean: &[f64], n: usize, denom: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = mean.len();
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(mean).map(|(v, m)| v - m).collect())
        .collect();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            gram[(i, j)] = dot;
            gram[(j, i)] = dot;
        }
    }
    let eig = gram.symmetric_eigen();
    let mut vals = Vec::with_capacity(n);
    let mut vecs = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = eig.eigenvalues[i];
        vals.push(lambda / denom);
        let u = eig.eigenvectors.column(i);
        let mut v = vec![0.0; d];
        if lambda > 1e-12 {
            for (r, &ui) in centered.iter().zip(u.iter()) {
                for (vj, rj) in v.iter_mut().zip(r) {
                    *vj += ui * rj;
                }
            }
            let norm = lambda.sqrt();
            for x in &mut v {
                *x /= norm;
            }
        }
        vecs.push(v);
    }
    (vals, vecs)
}

/// Project a raw vector onto the fitted basis: components * (v - mean).
pub fn project(model: &PcaModel, v: &[f64]) -> Result<Vec<f64>, FeatureError> {
    if v.len() != model.dim() {
        return Err(FeatureError::DimensionMismatch {
            expected: model.dim(),
            got: v.len(),
        });
    }
    let centered = DVector::from_iterator(v.len(), v.iter().zip(&model.mean).map(|(a, m)| a - m));
    Ok(model
        .components
        .iter()
        .map(|c| c.iter().zip(centered.iter()).map(|(a, b)| a * b).sum())
        .collect())
}

/// Reconstruct mean + components^T * coords; used by tests and debugging.
pub fn reconstruct(model: &PcaModel, coords: &[f64]) -> Vec<f64> {
    let mut out = model.mean.clone();
    for (c, &w) in model.components.iter().zip(coords) {
        for (o, x) in out.iter_mut().zip(c) {
            *o += w * x;
        }
    }
    out
}
