//! Model training and evaluation: decision trees, random-forest feature
//! selection, SMOTE rebalancing, hyperparameter tuning, and
//! leave-one-participant-out cross-validation.

pub mod forest;
pub mod lopo;
pub mod metrics;
pub mod smote;
pub mod tree;
pub mod tune;

pub use forest::{rf_gini_importance, select_features, ForestImportance, ForestParams, MaxFeaturesRule};
pub use lopo::{
    evaluate_fold, lopo_evaluate, pool_folds, shuffle_labels, EvaluationOutcome, FoldAudit,
    FoldResult, LopoConfig, Target,
};
pub use metrics::{auc, confusion, f1};
pub use smote::{smote, SmoteOutput};
pub use tree::{gini_impurity, train_decision_tree, train_decision_tree_on, TreeModel, TreeNode, TreeParams};
pub use tune::{tune_hyperparams, HyperGrid, TuneOutcome};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("empty node")]
    EmptyNode,
    #[error("empty training set")]
    EmptyTraining,
    #[error("only one class present")]
    SingleClass,
    #[error("too few minority samples: {count}")]
    TooFewMinority { count: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("too few groups: needed {needed}, got {got}")]
    TooFewGroups { needed: usize, got: usize },
    #[error("too few participants: needed {needed}, got {got}")]
    TooFewParticipants { needed: usize, got: usize },
}
