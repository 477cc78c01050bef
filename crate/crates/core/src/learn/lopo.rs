//! Leave-one-participant-out evaluation: per fold, feature selection on the
//! training rows, SMOTE rebalancing, hyperparameter tuning, a final tree
//! fit, and held-out probability predictions pooled across folds.

use super::forest::{rf_gini_importance, select_features, ForestParams};
use super::metrics::{auc, confusion, f1_from_confusion};
use super::smote::smote;
use super::tree::{train_decision_tree, TreeParams};
use super::tune::{tune_hyperparams, HyperGrid, TuneOutcome};
use super::LearnError;
use crate::exec;
use crate::types::SampleSet;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Valence,
    Arousal,
}

impl Target {
    pub const BOTH: [Target; 2] = [Target::Valence, Target::Arousal];

    pub fn label(&self) -> &'static str {
        match self {
            Target::Valence => "valence",
            Target::Arousal => "arousal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LopoConfig {
    pub grid: HyperGrid,
    pub forest: ForestParams,
    pub smote_k: usize,
    pub seed: u64,
    /// Probability threshold turning leaf probabilities into F1 predictions.
    pub f1_threshold: f64,
    /// Record full per-stage row-id lists in each fold (leakage audits).
    pub collect_row_audit: bool,
}

impl Default for LopoConfig {
    fn default() -> Self {
        LopoConfig {
            grid: HyperGrid::default(),
            forest: ForestParams::default(),
            smote_k: 5,
            seed: 17,
            f1_threshold: 0.5,
            collect_row_audit: false,
        }
    }
}

/// Row ids seen by each pipeline stage of one fold. Synthetic SMOTE rows
/// carry a `synthetic:` prefix naming their real base row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub selection_rows: Vec<String>,
    pub smote_input_rows: Vec<String>,
    pub tuning_rows: Vec<String>,
    pub fit_rows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub held_out_participant: String,
    pub n_train: usize,
    pub n_test: usize,
    /// Defined only when the held-out rows contain both classes.
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    /// (tp, fp, fn, tn) over the held-out rows.
    pub confusion: [usize; 4],
    pub selected_feature_indices: Vec<usize>,
    pub best_hyperparams: Option<TreeParams>,
    pub tune_fallback_row_level: bool,
    /// Set when the fold was skipped (e.g. single-class training rows).
    pub skipped: Option<String>,
    pub train_participants: Vec<String>,
    /// Held-out predictions (probability of high, label); used for pooling.
    pub predictions: Vec<(f64, u8)>,
    pub audit: Option<FoldAudit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutcome {
    pub target: Target,
    pub folds: Vec<FoldResult>,
    pub pooled_f1: Option<f64>,
    pub pooled_auc: Option<f64>,
    /// Mean of per-fold metrics over folds where they are defined.
    pub fold_mean_f1: Option<f64>,
    pub fold_mean_auc: Option<f64>,
    pub pooled_confusion: [usize; 4],
    pub n_rows_evaluated: usize,
    /// True when pooled F1 is zero because there were no positive
    /// predictions and no positive labels.
    pub degenerate_f1: bool,
}

fn labels_of(set: &SampleSet, target: Target) -> Vec<u8> {
    set.rows
        .iter()
        .map(|r| match target {
            Target::Valence => r.valence_label,
            Target::Arousal => r.arousal_label,
        })
        .collect()
}

/// Per-column median over training rows, ignoring NaN; 0.0 when a column is
/// NaN throughout. Used to fill masked cells in both partitions.
fn impute_columns(train: &mut [Vec<f64>], test: &mut [Vec<f64>]) {
    if train.is_empty() {
        return;
    }
    let d = train[0].len();
    let mut medians = vec![0.0; d];
    let mut col = Vec::with_capacity(train.len());
    for (j, median) in medians.iter_mut().enumerate() {
        col.clear();
        col.extend(train.iter().map(|r| r[j]).filter(|v| !v.is_nan()));
        if !col.is_empty() {
            col.sort_by(|a, b| a.total_cmp(b));
            let n = col.len();
            *median = if n % 2 == 1 {
                col[n / 2]
            } else {
                (col[n / 2 - 1] + col[n / 2]) / 2.0
            };
        }
    }
    for row in train.iter_mut().chain(test.iter_mut()) {
        for (v, m) in row.iter_mut().zip(&medians) {
            if v.is_nan() {
                *v = *m;
            }
        }
    }
}

/// Evaluate one fold: everything the model sees comes from rows whose
/// participant differs from `held_out`.
pub fn evaluate_fold(
    samples: &SampleSet,
    held_out: &str,
    target: Target,
    cfg: &LopoConfig,
) -> FoldResult {
    let labels = labels_of(samples, target);
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) =
        (0..samples.rows.len()).partition(|&i| samples.rows[i].participant_id != held_out);

    let mut train_participants: Vec<String> = train_idx
        .iter()
        .map(|&i| samples.rows[i].participant_id.clone())
        .collect();
    train_participants.sort();
    train_participants.dedup();

    let test_labels: Vec<u8> = test_idx.iter().map(|&i| labels[i]).collect();
    let base = FoldResult {
        held_out_participant: held_out.to_string(),
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        f1: None,
        auc: None,
        confusion: [0; 4],
        selected_feature_indices: Vec::new(),
        best_hyperparams: None,
        tune_fallback_row_level: false,
        skipped: None,
        train_participants,
        predictions: Vec::new(),
        audit: None,
    };

    let train_labels: Vec<u8> = train_idx.iter().map(|&i| labels[i]).collect();
    if train_idx.is_empty() || train_labels.iter().all(|&l| l == train_labels[0]) {
        return FoldResult {
            skipped: Some("single_class_training".to_string()),
            ..base
        };
    }

    let fold_seed = exec::derive_seed(cfg.seed, held_out);
    let mut train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| samples.rows[i].values.clone()).collect();
    let mut test_x: Vec<Vec<f64>> = test_idx.iter().map(|&i| samples.rows[i].values.clone()).collect();
    impute_columns(&mut train_x, &mut test_x);

    let train_row_ids: Vec<String> = train_idx
        .iter()
        .map(|&i| samples.rows[i].row_id.clone())
        .collect();

    // 1. Feature selection on real training rows only.
    let importance = match rf_gini_importance(
        &train_x,
        &train_labels,
        &cfg.forest,
        exec::derive_seed(fold_seed, "forest"),
    ) {
        Ok(imp) => imp,
        Err(e) => {
            return FoldResult {
                skipped: Some(format!("feature_selection: {e}")),
                ..base
            }
        }
    };
    let selected = select_features(&importance);
    let sel_train: Vec<Vec<f64>> = train_x
        .iter()
        .map(|r| selected.iter().map(|&j| r[j]).collect())
        .collect();
    let sel_test: Vec<Vec<f64>> = test_x
        .iter()
        .map(|r| selected.iter().map(|&j| r[j]).collect())
        .collect();

    // 2. SMOTE on the selected training rows.
    let smoted = match smote(
        &sel_train,
        &train_labels,
        cfg.smote_k,
        exec::derive_seed(fold_seed, "smote"),
    ) {
        Ok(s) => s,
        Err(e) => {
            return FoldResult {
                skipped: Some(format!("smote: {e}")),
                ..base
            }
        }
    };
    // Synthetic rows inherit the participant (group) of their base row.
    let mut groups: Vec<String> = train_idx
        .iter()
        .map(|&i| samples.rows[i].participant_id.clone())
        .collect();
    let mut balanced_row_ids = train_row_ids.clone();
    for &b in &smoted.synthetic_base {
        groups.push(samples.rows[train_idx[b]].participant_id.clone());
        balanced_row_ids.push(format!("synthetic:{}", train_row_ids[b]));
    }

    // 3. Hyperparameter tuning on the balanced training set.
    let tune: TuneOutcome = match tune_hyperparams(
        &smoted.x,
        &smoted.y,
        &groups,
        &cfg.grid,
        exec::derive_seed(fold_seed, "tune"),
    ) {
        Ok(t) => t,
        Err(e) => {
            return FoldResult {
                skipped: Some(format!("tuning: {e}")),
                ..base
            }
        }
    };

    // 4. Final fit and held-out predictions.
    let tree = match train_decision_tree(
        &smoted.x,
        &smoted.y,
        &tune.best,
        exec::derive_seed(fold_seed, "fit"),
    ) {
        Ok(t) => t,
        Err(e) => {
            return FoldResult {
                skipped: Some(format!("fit: {e}")),
                ..base
            }
        }
    };
    let predictions: Vec<(f64, u8)> = sel_test
        .iter()
        .zip(&test_labels)
        .map(|(row, &l)| (tree.predict_proba(row), l))
        .collect();
    let preds_bin: Vec<u8> = predictions
        .iter()
        .map(|(p, _)| u8::from(*p >= cfg.f1_threshold))
        .collect();
    let conf = confusion(&preds_bin, &test_labels).unwrap_or([0; 4]);

    let both_classes = test_labels.iter().any(|&l| l == 0) && test_labels.iter().any(|&l| l == 1);
    let probs: Vec<f64> = predictions.iter().map(|(p, _)| *p).collect();
    let (fold_f1, fold_auc) = if both_classes {
        (
            Some(f1_from_confusion(conf[0], conf[1], conf[2])),
            auc(&probs, &test_labels).ok(),
        )
    } else {
        (None, None)
    };

    let audit = cfg.collect_row_audit.then(|| FoldAudit {
        selection_rows: train_row_ids.clone(),
        smote_input_rows: train_row_ids.clone(),
        tuning_rows: balanced_row_ids.clone(),
        fit_rows: balanced_row_ids,
    });

    FoldResult {
        f1: fold_f1,
        auc: fold_auc,
        confusion: conf,
        selected_feature_indices: selected,
        best_hyperparams: Some(tune.best),
        tune_fallback_row_level: tune.fallback_row_level,
        predictions,
        audit,
        ..base
    }
}

/// Pool fold predictions into the headline metrics.
pub fn pool_folds(target: Target, folds: Vec<FoldResult>, f1_threshold: f64) -> EvaluationOutcome {
    let mut probs = Vec::new();
    let mut labels = Vec::new();
    for fold in &folds {
        for &(p, l) in &fold.predictions {
            probs.push(p);
            labels.push(l);
        }
    }
    let preds: Vec<u8> = probs.iter().map(|&p| u8::from(p >= f1_threshold)).collect();
    let pooled_confusion = confusion(&preds, &labels).unwrap_or([0; 4]);
    let [tp, fp, fnn, _tn] = pooled_confusion;
    let degenerate_f1 = tp + fp + fnn == 0 && !labels.is_empty();
    let pooled_f1 = (!labels.is_empty()).then(|| f1_from_confusion(tp, fp, fnn));
    let pooled_auc = auc(&probs, &labels).ok();

    let defined =
        |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    let fold_mean_f1 = defined(folds.iter().filter_map(|f| f.f1).collect());
    let fold_mean_auc = defined(folds.iter().filter_map(|f| f.auc).collect());

    EvaluationOutcome {
        target,
        pooled_f1,
        pooled_auc,
        fold_mean_f1,
        fold_mean_auc,
        pooled_confusion,
        n_rows_evaluated: labels.len(),
        degenerate_f1,
        folds,
    }
}

/// Independently permute the (valence, arousal) label pairs across rows;
/// the null-control for pipeline calibration checks.
pub fn shuffle_labels(samples: &SampleSet, seed: u64) -> SampleSet {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..samples.rows.len()).collect();
    perm.shuffle(&mut rng);
    let mut out = samples.clone();
    for (row, &src) in out.rows.iter_mut().zip(&perm) {
        row.valence_label = samples.rows[src].valence_label;
        row.arousal_label = samples.rows[src].arousal_label;
    }
    out
}

/// Full leave-one-participant-out evaluation over a sample set. Folds run
/// in parallel; each derives its RNG stream from (seed, participant id), so
/// the outcome is identical at any thread count.
pub fn lopo_evaluate(
    samples: &SampleSet,
    target: Target,
    cfg: &LopoConfig,
) -> Result<EvaluationOutcome, LearnError> {
    let participants = samples.participants();
    if participants.len() < 2 {
        return Err(LearnError::TooFewParticipants {
            needed: 2,
            got: participants.len(),
        });
    }
    let folds = exec::map_ordered(&participants, |p| evaluate_fold(samples, p, target, cfg));
    Ok(pool_folds(target, folds, cfg.f1_threshold))
}
