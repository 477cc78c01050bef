//! Random-forest Gini importance and mean-threshold feature selection.

use super::tree::{train_decision_tree_on, TreeParams};
use super::LearnError;
use crate::exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How many candidate features each node may consider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeaturesRule {
    /// ceil(sqrt(d)); the usual forest default.
    Sqrt,
    /// All features; makes importances exactly equivariant under column
    /// permutation for fixed per-tree seeds.
    All,
    Fixed(usize),
}

impl MaxFeaturesRule {
    fn resolve(&self, d: usize) -> Option<usize> {
        match self {
            MaxFeaturesRule::Sqrt => Some((d as f64).sqrt().ceil() as usize),
            MaxFeaturesRule::All => None,
            MaxFeaturesRule::Fixed(m) => Some((*m).min(d)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeaturesRule,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: MaxFeaturesRule::Sqrt,
        }
    }
}

/// Normalized per-feature Gini importances from a bootstrap forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestImportance {
    pub importances: Vec<f64>,
    pub n_trees: usize,
    pub seed: u64,
}

/// Grow `n_trees` bootstrap trees and average each feature's total weighted
/// impurity decrease, normalized to sum to one. Tree seeds derive from
/// (seed, tree index), so the result is schedule-independent.
pub fn rf_gini_importance(
    x: &[Vec<f64>],
    y: &[u8],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestImportance, LearnError> {
    if x.is_empty() {
        return Err(LearnError::EmptyTraining);
    }
    let classes = y.iter().copied().collect::<std::collections::BTreeSet<u8>>();
    if classes.len() < 2 {
        return Err(LearnError::SingleClass);
    }
    let n = x.len();
    let d = x[0].len();
    let tree_params = TreeParams {
        max_depth: None,
        min_samples_leaf: 1,
        min_impurity_decrease: 0.0,
        max_features: params.max_features.resolve(d),
    };

    let per_tree = exec::map_indices(params.n_trees, |t| {
        let tree_seed = exec::derive_seed_n(seed, t as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
        let indices: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        // Bootstrap may draw a single class; such trees contribute zeros.
        let node_seed = rng.gen::<u64>();
        train_decision_tree_on(x, y, &indices, &tree_params, node_seed)
            .map(|tree| tree.importance_raw)
            .unwrap_or_else(|_| vec![0.0; d])
    });

    let mut total = vec![0.0; d];
    for imp in per_tree {
        for (t, v) in total.iter_mut().zip(&imp) {
            *t += v;
        }
    }
    for t in &mut total {
        *t /= params.n_trees as f64;
    }
    let sum: f64 = total.iter().sum();
    if sum > 0.0 {
        for t in &mut total {
            *t /= sum;
        }
    } else {
        // No split anywhere (degenerate data): fall back to uniform weights.
        for t in &mut total {
            *t = 1.0 / d as f64;
        }
    }
    Ok(ForestImportance {
        importances: total,
        n_trees: params.n_trees,
        seed,
    })
}

/// Indices whose importance strictly exceeds the mean importance. If no
/// feature clears the bar (all equal), every feature is kept.
pub fn select_features(importance: &ForestImportance) -> Vec<usize> {
    let d = importance.importances.len();
    if d == 0 {
        return Vec::new();
    }
    let mean: f64 = importance.importances.iter().sum::<f64>() / d as f64;
    let selected: Vec<usize> = importance
        .importances
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > mean)
        .map(|(i, _)| i)
        .collect();
    if selected.is_empty() {
        (0..d).collect()
    } else {
        selected
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn planted_data(seed: u64, n: usize, d: usize, informative: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = (i % 2) as u8;
            let mut row: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            row[informative] = if label == 1 { 1.0 } else { -1.0 } + rng.gen_range(-0.2..0.2);
            x.push(row);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn planted_signal_dominates_importance() {
        let mut hits = 0;
        let seeds = 20;
        for seed in 0..seeds {
            let (x, y) = planted_data(seed, 80, 6, 2);
            let imp = rf_gini_importance(&x, &y, &ForestParams::default(), seed).unwrap();
            let argmax = imp
                .importances
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            if argmax == 2 {
                hits += 1;
            }
        }
        assert!(
            hits as f64 / seeds as f64 >= 0.95,
            "planted feature won only {hits}/{seeds} seeds"
        );
    }

    #[test]
    fn single_feature_importance_is_one() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let imp = rf_gini_importance(&x, &y, &ForestParams::default(), 0).unwrap();
        assert_eq!(imp.importances, vec![1.0]);
    }

    #[test]
    fn importances_sum_to_one() {
        let (x, y) = planted_data(5, 60, 8, 0);
        let imp = rf_gini_importance(&x, &y, &ForestParams::default(), 9).unwrap();
        let sum: f64 = imp.importances.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(imp.importances.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn column_permutation_permutes_importances() {
        // With all features as candidates the forest is a deterministic
        // function of the bootstrap rows, so permuting columns permutes
        // the importance vector exactly (no exact ties in random data).
        let (x, y) = planted_data(7, 50, 5, 1);
        let params = ForestParams {
            n_trees: 20,
            max_features: MaxFeaturesRule::All,
        };
        let base = rf_gini_importance(&x, &y, &params, 11).unwrap();
        let perm = [3, 0, 4, 1, 2]; // new_col[j] = old_col[perm[j]]
        let x_perm: Vec<Vec<f64>> = x
            .iter()
            .map(|row| perm.iter().map(|&p| row[p]).collect())
            .collect();
        let shuffled = rf_gini_importance(&x_perm, &y, &params, 11).unwrap();
        for (j, &p) in perm.iter().enumerate() {
            assert!(
                (shuffled.importances[j] - base.importances[p]).abs() < 1e-12,
                "column {j} importance mismatch"
            );
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![1, 1];
        assert!(matches!(
            rf_gini_importance(&x, &y, &ForestParams::default(), 0),
            Err(LearnError::SingleClass)
        ));
    }

    #[test]
    fn select_features_threshold_rule() {
        let imp = |v: Vec<f64>| ForestImportance {
            importances: v,
            n_trees: 1,
            seed: 0,
        };
        assert_eq!(select_features(&imp(vec![0.5, 0.3, 0.2])), vec![0]);
        assert_eq!(select_features(&imp(vec![0.25; 4])), vec![0, 1, 2, 3]);
        assert_eq!(select_features(&imp(vec![0.6, 0.4])), vec![0]);
    }

    #[test]
    fn selection_invariant_to_renormalization() {
        let raw = vec![0.4, 0.1, 0.3, 0.2];
        let imp = ForestImportance {
            importances: raw.clone(),
            n_trees: 1,
            seed: 0,
        };
        // Rescaling by a positive constant then renormalizing is the
        // identity on an already-normalized vector.
        let scaled: Vec<f64> = raw.iter().map(|v| v * 7.5).collect();
        let sum: f64 = scaled.iter().sum();
        let renorm: Vec<f64> = scaled.iter().map(|v| v / sum).collect();
        let imp2 = ForestImportance {
            importances: renorm,
            n_trees: 1,
            seed: 0,
        };
        assert_eq!(select_features(&imp), select_features(&imp2));
    }

    #[test]
    fn deterministic_across_runs() {
        let (x, y) = planted_data(2, 40, 4, 3);
        let a = rf_gini_importance(&x, &y, &ForestParams::default(), 21).unwrap();
        let b = rf_gini_importance(&x, &y, &ForestParams::default(), 21).unwrap();
        assert_eq!(a, b);
    }
}
