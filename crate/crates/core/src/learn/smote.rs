//! Synthetic minority over-sampling: interpolated minority points until the
//! class counts balance.

use super::LearnError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Result of rebalancing. `synthetic_base` holds, for each appended row, the
/// index (into the input) of the real minority row it interpolates from.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutput {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u8>,
    pub synthetic_base: Vec<usize>,
}

/// Append synthetic minority rows `x + lambda * (nn - x)` until the classes
/// are balanced. `x` is a uniformly drawn minority row, `nn` a uniformly
/// drawn one of its min(k, minority-1) Euclidean nearest minority
/// neighbors, lambda ~ U[0,1]. Deterministic under a fixed seed.
pub fn smote(
    x: &[Vec<f64>],
    y: &[u8],
    k: usize,
    seed: u64,
) -> Result<SmoteOutput, LearnError> {
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n1 = y.iter().filter(|&&l| l == 1).count();
    let n0 = y.len() - n1;
    if n0 == 0 || n1 == 0 {
        return Err(LearnError::SingleClass);
    }
    if n0 == n1 {
        return Ok(SmoteOutput {
            x: x.to_vec(),
            y: y.to_vec(),
            synthetic_base: Vec::new(),
        });
    }
    let minority_label: u8 = if n1 < n0 { 1 } else { 0 };
    let minority: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority_label).collect();
    if minority.len() < 2 {
        return Err(LearnError::TooFewMinority {
            count: minority.len(),
        });
    }
    let needed = n0.abs_diff(n1);
    let k_eff = k.min(minority.len() - 1);

    // Nearest minority neighbors per minority row; distance ties break by
    // ascending row index.
    let neighbors: Vec<Vec<usize>> = minority
        .iter()
        .map(|&i| {
            let mut dists: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (euclidean(&x[i], &x[j]), j))
                .collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dists.into_iter().take(k_eff).map(|(_, j)| j).collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out_x = x.to_vec();
    let mut out_y = y.to_vec();
    let mut synthetic_base = Vec::with_capacity(needed);
    for _ in 0..needed {
        let pick = rng.gen_range(0..minority.len());
        let base = minority[pick];
        let nn = neighbors[pick][rng.gen_range(0..k_eff)];
        let lambda: f64 = rng.gen();
        let row: Vec<f64> = x[base]
            .iter()
            .zip(&x[nn])
            .map(|(a, b)| a + lambda * (b - a))
            .collect();
        out_x.push(row);
        out_y.push(minority_label);
        synthetic_base.push(base);
    }
    Ok(SmoteOutput {
        x: out_x,
        y: out_y,
        synthetic_base,
    })
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
