//! Hyperparameter search: grouped 3-fold inner cross-validation maximizing
//! mean AUC, with a simplicity-preferring tie rule.

use super::metrics::auc;
use super::tree::{train_decision_tree_on, TreeParams};
use super::LearnError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const INNER_FOLDS: usize = 3;

/// Cartesian hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    /// None = unlimited depth.
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_leaf: Vec<usize>,
    pub min_impurity_decrease: f64,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            max_depth: vec![Some(3), Some(5), Some(8), None],
            min_samples_leaf: vec![1, 5, 10],
            min_impurity_decrease: 0.0,
        }
    }
}

impl HyperGrid {
    pub fn points(&self) -> Vec<TreeParams> {
        let mut out = Vec::with_capacity(self.max_depth.len() * self.min_samples_leaf.len());
        for &md in &self.max_depth {
            for &msl in &self.min_samples_leaf {
                out.push(TreeParams {
                    max_depth: md,
                    min_samples_leaf: msl,
                    min_impurity_decrease: self.min_impurity_decrease,
                    max_features: None,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub best: TreeParams,
    pub best_mean_auc: f64,
    /// True when fewer than three distinct groups forced the row-level
    /// stratified fallback split.
    pub fallback_row_level: bool,
}

/// Pick the grid point with the highest mean inner AUC. Ties prefer the
/// smaller max depth (unlimited counts as largest), then the larger
/// min_samples_leaf.
pub fn tune_hyperparams(
    x: &[Vec<f64>],
    y: &[u8],
    groups: &[String],
    grid: &HyperGrid,
    seed: u64,
) -> Result<TuneOutcome, LearnError> {
    if x.len() != y.len() || x.len() != groups.len() {
        return Err(LearnError::LengthMismatch {
            left: x.len(),
            right: y.len().min(groups.len()),
        });
    }
    if x.is_empty() {
        return Err(LearnError::EmptyTraining);
    }

    let (folds, fallback) = match grouped_folds(groups, seed) {
        Ok(folds) => (folds, false),
        Err(LearnError::TooFewGroups { .. }) => (stratified_folds(y, seed), true),
        Err(e) => return Err(e),
    };

    let points = grid.points();
    let mut scores: Vec<Vec<f64>> = vec![Vec::with_capacity(INNER_FOLDS); points.len()];
    for fold in &folds {
        let mut in_fold = vec![false; x.len()];
        for &i in fold {
            in_fold[i] = true;
        }
        let train: Vec<usize> = (0..x.len()).filter(|&i| !in_fold[i]).collect();
        if train.is_empty() || fold.is_empty() {
            continue;
        }
        let train_y: Vec<u8> = train.iter().map(|&i| y[i]).collect();
        let val_y: Vec<u8> = fold.iter().map(|&i| y[i]).collect();
        if single_class(&train_y) || single_class(&val_y) {
            continue;
        }
        for (p, params) in points.iter().enumerate() {
            let tree = train_decision_tree_on(x, y, &train, params, seed)?;
            let probs: Vec<f64> = fold.iter().map(|&i| tree.predict_proba(&x[i])).collect();
            scores[p].push(auc(&probs, &val_y)?);
        }
    }

    let mut best: Option<(f64, &TreeParams)> = None;
    for (p, params) in points.iter().enumerate() {
        let mean = if scores[p].is_empty() {
            f64::NEG_INFINITY
        } else {
            scores[p].iter().sum::<f64>() / scores[p].len() as f64
        };
        let better = match &best {
            None => true,
            Some((best_score, best_params)) => {
                mean > *best_score || (mean == *best_score && simpler(params, best_params))
            }
        };
        if better {
            best = Some((mean, params));
        }
    }
    let (score, params) = best.expect("non-empty grid");
    Ok(TuneOutcome {
        best: params.clone(),
        best_mean_auc: score,
        fallback_row_level: fallback,
    })
}

fn single_class(y: &[u8]) -> bool {
    y.iter().all(|&l| l == y[0])
}

fn depth_rank(d: Option<usize>) -> usize {
    d.unwrap_or(usize::MAX)
}

fn simpler(a: &TreeParams, b: &TreeParams) -> bool {
    (depth_rank(a.max_depth), std::cmp::Reverse(a.min_samples_leaf))
        < (depth_rank(b.max_depth), std::cmp::Reverse(b.min_samples_leaf))
}

/// Round-robin assignment of shuffled distinct groups to three buckets;
/// fold i holds the row indices of bucket i.
fn grouped_folds(groups: &[String], seed: u64) -> Result<Vec<Vec<usize>>, LearnError> {
    let mut distinct: Vec<&String> = groups.iter().collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < INNER_FOLDS {
        return Err(LearnError::TooFewGroups {
            needed: INNER_FOLDS,
            got: distinct.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    distinct.shuffle(&mut rng);
    let mut bucket_of = std::collections::BTreeMap::new();
    for (i, g) in distinct.iter().enumerate() {
        bucket_of.insert((*g).clone(), i % INNER_FOLDS);
    }
    let mut folds = vec![Vec::new(); INNER_FOLDS];
    for (i, g) in groups.iter().enumerate() {
        folds[bucket_of[g]].push(i);
    }
    Ok(folds)
}

/// Stratified row-level split: per-class shuffled indices dealt round-robin.
fn stratified_folds(y: &[u8], seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); INNER_FOLDS];
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            folds[j % INNER_FOLDS].push(i);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn grouped_data(
        n_groups: usize,
        per_group: usize,
        seed: u64,
    ) -> (Vec<Vec<f64>>, Vec<u8>, Vec<String>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut groups = Vec::new();
        for g in 0..n_groups {
            for i in 0..per_group {
                let label = (i % 2) as u8;
                x.push(vec![
                    if label == 1 { 0.8 } else { -0.8 } + rng.gen_range(-0.3..0.3),
                    rng.gen_range(-1.0..1.0),
                ]);
                y.push(label);
                groups.push(format!("G{g}"));
            }
        }
        (x, y, groups)
    }

    #[test]
    fn singleton_grid_returns_that_point() {
        let (x, y, groups) = grouped_data(4, 10, 1);
        let grid = HyperGrid {
            max_depth: vec![Some(2)],
            min_samples_leaf: vec![5],
            min_impurity_decrease: 0.0,
        };
        let out = tune_hyperparams(&x, &y, &groups, &grid, 3).unwrap();
        assert_eq!(out.best.max_depth, Some(2));
        assert_eq!(out.best.min_samples_leaf, 5);
        assert!(!out.fallback_row_level);
    }

    #[test]
    fn depth_two_signal_rejects_stumps() {
        // XOR-like signal needs depth 2; depth-1 trees cannot express it.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut groups = Vec::new();
        for i in 0..240 {
            let a = rng.gen_range(0..2);
            let b = rng.gen_range(0..2);
            x.push(vec![
                a as f64 + rng.gen_range(-0.2..0.2),
                b as f64 + rng.gen_range(-0.2..0.2),
            ]);
            y.push(((a + b) % 2) as u8);
            groups.push(format!("G{}", i % 6));
        }
        let grid = HyperGrid {
            max_depth: vec![Some(1), Some(2), Some(4)],
            min_samples_leaf: vec![1],
            min_impurity_decrease: 0.0,
        };
        let out = tune_hyperparams(&x, &y, &groups, &grid, 11).unwrap();
        assert!(out.best.max_depth.unwrap() >= 2, "chose {:?}", out.best.max_depth);
    }

    #[test]
    fn tie_prefers_simplest_configuration() {
        // Constant features: every grid point scores the same (0.5-ish
        // degenerate trees), so the tie rule must pick the simplest.
        let x: Vec<Vec<f64>> = (0..30).map(|_| vec![1.0, 1.0]).collect();
        let y: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
        let groups: Vec<String> = (0..30).map(|i| format!("G{}", i % 5)).collect();
        let grid = HyperGrid::default();
        let out = tune_hyperparams(&x, &y, &groups, &grid, 2).unwrap();
        assert_eq!(out.best.max_depth, Some(3));
        assert_eq!(out.best.min_samples_leaf, 10);
    }

    #[test]
    fn two_groups_fall_back_to_stratified_rows() {
        let (x, y, groups) = grouped_data(2, 12, 9);
        let out = tune_hyperparams(&x, &y, &groups, &HyperGrid::default(), 4).unwrap();
        assert!(out.fallback_row_level);
        assert!(out.best_mean_auc > 0.5);
    }

    #[test]
    fn folds_partition_rows() {
        let groups: Vec<String> = (0..20).map(|i| format!("G{}", i % 5)).collect();
        let folds = grouped_folds(&groups, 1).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
        // Rows of one group never straddle folds.
        for fold in &folds {
            for &i in fold {
                let g = &groups[i];
                assert!(folds
                    .iter()
                    .filter(|f| f.iter().any(|&j| &groups[j] == g))
                    .count()
                    == 1);
            }
        }
    }
}
