//! The run manifest: config snapshot, seeds, input digests, attrition
//! counters and per-fold audit records. Together with the input files it
//! reproduces any reported metric.

use crate::config::{PcaScope, RunConfig};
use crate::dataset::DropCounters;
use crate::learn::{FoldResult, TreeParams};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaManifest {
    pub scope: PcaScope,
    pub components: usize,
    pub fit_rows: usize,
    pub row_cap: usize,
    pub triangle_pair_count: usize,
    pub triangle_pairs_digest: String,
    pub triangle_pairs: Vec<(usize, usize)>,
    pub centroid_indices: Vec<usize>,
}

/// Reduced per-fold record kept in the manifest (predictions stay out).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub held_out_participant: String,
    pub n_train: usize,
    pub n_test: usize,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    pub confusion: [usize; 4],
    pub selected_feature_indices: Vec<usize>,
    pub best_hyperparams: Option<TreeParams>,
    pub tune_fallback_row_level: bool,
    pub skipped: Option<String>,
    pub train_participants: Vec<String>,
}

impl FoldRecord {
    pub fn from_result(fold: &FoldResult) -> FoldRecord {
        FoldRecord {
            held_out_participant: fold.held_out_participant.clone(),
            n_train: fold.n_train,
            n_test: fold.n_test,
            f1: fold.f1,
            auc: fold.auc,
            confusion: fold.confusion,
            selected_feature_indices: fold.selected_feature_indices.clone(),
            best_hyperparams: fold.best_hyperparams.clone(),
            tune_fallback_row_level: fold.tune_fallback_row_level,
            skipped: fold.skipped.clone(),
            train_participants: fold.train_participants.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed: u64,
    pub config: RunConfig,
    /// Input path -> SHA-256 of the file bytes.
    pub input_digests: BTreeMap<String, String>,
    pub pca: Option<PcaManifest>,
    pub drop_counters: DropCounters,
    pub dropped_featurize_sessions: usize,
    /// "horizon/target" -> fold records.
    pub folds: BTreeMap<String, Vec<FoldRecord>>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(config: &RunConfig) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.model.seed,
            config: config.clone(),
            input_digests: BTreeMap::new(),
            pca: None,
            drop_counters: DropCounters::default(),
            dropped_featurize_sessions: 0,
            folds: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable manifest") + "\n"
    }
}
