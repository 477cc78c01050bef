//! Greedy CART-style binary decision tree over Gini impurity.

use super::LearnError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Gini impurity of a two-class count pair: 1 - sum p_i^2, in [0, 0.5].
pub fn gini_impurity(class_counts: &[usize; 2]) -> Result<f64, LearnError> {
    let n = class_counts[0] + class_counts[1];
    if n == 0 {
        return Err(LearnError::EmptyNode);
    }
    let p0 = class_counts[0] as f64 / n as f64;
    let p1 = class_counts[1] as f64 / n as f64;
    Ok(1.0 - p0 * p0 - p1 * p1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// None = unlimited.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_impurity_decrease: f64,
    /// Candidate features per node; None = all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            min_impurity_decrease: 0.0,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: [usize; 2],
        p_high: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
    pub params: TreeParams,
    /// Per-feature total weighted impurity decrease accumulated during
    /// induction (weights relative to the root sample count).
    pub importance_raw: Vec<f64>,
}

impl TreeModel {
    /// Probability of the high class at the reached leaf.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { p_high, .. } => return *p_high,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64], threshold: f64) -> u8 {
        u8::from(self.predict_proba(x) >= threshold)
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], idx: usize) -> usize {
            match &nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Train a tree on the rows selected by `indices` (duplicates allowed, as in
/// bootstrap samples). The seed only matters when `max_features` restricts
/// the per-node candidate set.
pub fn train_decision_tree_on(
    x: &[Vec<f64>],
    y: &[u8],
    indices: &[usize],
    params: &TreeParams,
    seed: u64,
) -> Result<TreeModel, LearnError> {
    if indices.is_empty() || x.is_empty() {
        return Err(LearnError::EmptyTraining);
    }
    if x.len() != y.len() {
        return Err(LengthMismatchOf(x.len(), y.len()).into());
    }
    let n_features = x[0].len();
    let mut builder = Builder {
        x,
        y,
        params,
        rng: ChaCha8Rng::seed_from_u64(seed),
        nodes: Vec::new(),
        importance: vec![0.0; n_features],
        n_root: indices.len() as f64,
        scratch_features: (0..n_features).collect(),
    };
    builder.grow(indices.to_vec(), 0);
    Ok(TreeModel {
        nodes: builder.nodes,
        n_features,
        params: params.clone(),
        importance_raw: builder.importance,
    })
}

/// Train a tree on all rows.
pub fn train_decision_tree(
    x: &[Vec<f64>],
    y: &[u8],
    params: &TreeParams,
    seed: u64,
) -> Result<TreeModel, LearnError> {
    let indices: Vec<usize> = (0..x.len()).collect();
    train_decision_tree_on(x, y, &indices, params, seed)
}

struct LengthMismatchOf(usize, usize);
impl From<LengthMismatchOf> for LearnError {
    fn from(v: LengthMismatchOf) -> Self {
        LearnError::LengthMismatch {
            left: v.0,
            right: v.1,
        }
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    params: &'a TreeParams,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
    importance: Vec<f64>,
    n_root: f64,
    scratch_features: Vec<usize>,
}

struct BestSplit {
    decrease: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    /// Depth-first growth; returns the node index. Recursion order (left
    /// before right) fixes the RNG consumption order, so trees are
    /// deterministic for a given seed.
    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let counts = self.count(&indices);
        let impurity = gini_impurity(&counts).expect("non-empty node");
        let n = indices.len();

        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if depth_reached || impurity == 0.0 || n < 2 * self.params.min_samples_leaf || n < 2 {
            return self.leaf(counts);
        }

        let Some(best) = self.best_split(&indices, impurity) else {
            return self.leaf(counts);
        };
        if best.decrease < self.params.min_impurity_decrease {
            return self.leaf(counts);
        }

        self.importance[best.feature] += (n as f64 / self.n_root) * best.decrease;

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| self.x[i][best.feature] <= best.threshold);
        let node = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            counts,
            p_high: 0.0,
        }); // placeholder
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        self.nodes[node] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        node
    }

    fn leaf(&mut self, counts: [usize; 2]) -> usize {
        let n = (counts[0] + counts[1]) as f64;
        self.nodes.push(TreeNode::Leaf {
            counts,
            p_high: counts[1] as f64 / n,
        });
        self.nodes.len() - 1
    }

    fn count(&self, indices: &[usize]) -> [usize; 2] {
        let mut c = [0usize; 2];
        for &i in indices {
            c[self.y[i] as usize] += 1;
        }
        c
    }

    /// Scan candidate features and midpoint thresholds for the split with
    /// the largest impurity decrease. Ties keep the first candidate found,
    /// which with ascending feature/threshold order means the lowest feature
    /// index, then the lowest threshold.
    fn best_split(&mut self, indices: &[usize], parent_impurity: f64) -> Option<BestSplit> {
        let n = indices.len();
        let msl = self.params.min_samples_leaf;
        let candidates: Vec<usize> = match self.params.max_features {
            Some(m) if m < self.scratch_features.len() => {
                let (subset, _) = self.scratch_features.partial_shuffle(&mut self.rng, m);
                let mut subset = subset.to_vec();
                subset.sort_unstable();
                subset
            }
            _ => self.scratch_features.clone(),
        };

        let mut best: Option<BestSplit> = None;
        let mut order: Vec<usize> = Vec::with_capacity(n);
        for &f in &candidates {
            order.clear();
            order.extend_from_slice(indices);
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));

            // Prefix class counts while walking the sorted rows.
            let mut left = [0usize; 2];
            let mut right = self.count(indices);
            for pos in 0..n - 1 {
                let i = order[pos];
                left[self.y[i] as usize] += 1;
                right[self.y[i] as usize] -= 1;
                let v = self.x[i][f];
                let v_next = self.x[order[pos + 1]][f];
                if v == v_next {
                    continue;
                }
                let n_left = pos + 1;
                let n_right = n - n_left;
                if n_left < msl || n_right < msl {
                    continue;
                }
                let imp_left = gini_impurity(&left).unwrap();
                let imp_right = gini_impurity(&right).unwrap();
                let decrease = (parent_impurity
                    - (n_left as f64 / n as f64) * imp_left
                    - (n_right as f64 / n as f64) * imp_right)
                    .max(0.0);
                if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    best = Some(BestSplit {
                        decrease,
                        feature: f,
                        threshold: v + (v_next - v) / 2.0,
                    });
                }
            }
        }
        best
    }
}
