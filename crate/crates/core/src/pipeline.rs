//! End-to-end orchestration: featurize sessions, build the horizon sample
//! sets, run LOPO per (model, target) cell, and assemble reports and the
//! run manifest.

use crate::ablation::{run_ablation, AblationHorizon};
use crate::config::{ConfigError, PcaScope, RunConfig};
use crate::dataset::{
    at_moment_samples, build_day_table, daily_samples, next_day_samples, DatasetError,
    DropCounters,
};
use crate::exec;
use crate::features::{
    collect_pca_rows, featurize_sessions, fit_pca, CentroidRule, FeatureError, FeatureExtractor,
    FeaturizedSession, TriangleSpec,
};
use crate::io::DataError;
use crate::learn::{
    evaluate_fold, lopo_evaluate, pool_folds, EvaluationOutcome, LearnError, LopoConfig, Target,
};
use crate::manifest::{FoldRecord, PcaManifest, RunManifest};
use crate::report::{
    AblationReport, AblationTable, CellMetrics, MainReport, MainRow, ModelRow,
};
use crate::synth::SynthError;
use crate::types::{LandmarkLayout, SampleSet, Session, SurveyResponse};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Data(_) => "data",
            PipelineError::Feature(_) => "feature",
            PipelineError::Dataset(_) => "dataset",
            PipelineError::Learn(_) => "learn",
            PipelineError::Synth(_) => "synth",
            PipelineError::Io(_) => "io",
        }
    }
}

/// Which sample set a cell evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    AtMoment,
    Daily,
    NextDay(u32),
}

impl SetKind {
    pub fn model_row(&self) -> Option<ModelRow> {
        match self {
            SetKind::AtMoment => Some(ModelRow::AtMoment),
            SetKind::Daily => Some(ModelRow::DailyAverage),
            SetKind::NextDay(lag) => ModelRow::next_day(*lag),
        }
    }
}

pub fn lopo_config(cfg: &RunConfig) -> Result<LopoConfig, ConfigError> {
    Ok(LopoConfig {
        grid: cfg.model.hyper_grid(),
        forest: cfg.model.forest_params()?,
        smote_k: cfg.model.smote_k,
        seed: cfg.model.seed,
        f1_threshold: cfg.model.f1_threshold,
        collect_row_audit: cfg.model.audit_rows,
    })
}

/// Fit the PCA basis and assemble the feature extractor from the given
/// sessions (the PCA fitting scope).
pub fn build_extractor(
    cfg: &RunConfig,
    pca_sessions: &[&Session],
) -> Result<(FeatureExtractor, usize), PipelineError> {
    let layout = LandmarkLayout::default();
    let rule = match cfg.features.centroid_index {
        Some(i) => CentroidRule::Index(i),
        None => CentroidRule::NoseMean,
    };
    let spec = TriangleSpec::within_region(&layout, &rule, cfg.features.pair_stride);
    let rows = collect_pca_rows(
        pca_sessions,
        &spec,
        cfg.features.eps,
        cfg.features.pca_max_rows,
    );
    let n_rows = rows.len();
    let pca = fit_pca(&rows, cfg.features.pca_components)?;
    Ok((
        FeatureExtractor {
            layout,
            spec,
            pca,
            au_ids: cfg.data.au_ids.clone(),
            eps: cfg.features.eps,
            emit_acceleration: cfg.features.emit_acceleration,
        },
        n_rows,
    ))
}

/// The sample sets a run needs, keyed by kind.
pub struct BuiltSets {
    pub sets: Vec<(SetKind, SampleSet)>,
    pub drops: DropCounters,
}

impl BuiltSets {
    pub fn get(&self, kind: SetKind) -> Option<&SampleSet> {
        self.sets.iter().find(|(k, _)| *k == kind).map(|(_, s)| s)
    }
}

/// Build one sample set from featurized sessions.
pub fn build_one_set(
    cfg: &RunConfig,
    featurized: &[FeaturizedSession],
    surveys: &[SurveyResponse],
    schema: &crate::types::FeatureSchema,
    kind: SetKind,
    drops: &mut DropCounters,
) -> Result<SampleSet, PipelineError> {
    match kind {
        SetKind::AtMoment => Ok(at_moment_samples(
            featurized,
            surveys,
            schema,
            cfg.windows.at_moment_minutes,
            drops,
        )?),
        SetKind::Daily => {
            let table = build_day_table(featurized, surveys, schema.len(), drops)?;
            Ok(daily_samples(&table, schema))
        }
        SetKind::NextDay(lag) => {
            let table = build_day_table(featurized, surveys, schema.len(), drops)?;
            Ok(next_day_samples(&table, schema, lag, drops))
        }
    }
}

/// Build every set the main run reports: at-moment, daily, and one
/// next-day set per configured lag.
pub fn build_sets(
    cfg: &RunConfig,
    featurized: &[FeaturizedSession],
    surveys: &[SurveyResponse],
    schema: &crate::types::FeatureSchema,
) -> Result<BuiltSets, PipelineError> {
    let mut drops = DropCounters::default();
    let mut kinds = vec![SetKind::AtMoment, SetKind::Daily];
    for &lag in &cfg.windows.lags {
        kinds.push(SetKind::NextDay(lag));
    }
    // The day table is shared by the daily and next-day builders.
    let table = build_day_table(featurized, surveys, schema.len(), &mut drops)?;
    let mut sets = Vec::with_capacity(kinds.len());
    for kind in kinds {
        let set = match kind {
            SetKind::AtMoment => at_moment_samples(
                featurized,
                surveys,
                schema,
                cfg.windows.at_moment_minutes,
                &mut drops,
            )?,
            SetKind::Daily => daily_samples(&table, schema),
            SetKind::NextDay(lag) => next_day_samples(&table, schema, lag, &mut drops),
        };
        sets.push((kind, set));
    }
    Ok(BuiltSets { sets, drops })
}

fn pca_manifest(cfg: &RunConfig, extractor: &FeatureExtractor, fit_rows: usize) -> PcaManifest {
    PcaManifest {
        scope: cfg.features.pca_scope,
        components: cfg.features.pca_components,
        fit_rows,
        row_cap: cfg.features.pca_max_rows,
        triangle_pair_count: extractor.spec.pairs.len(),
        triangle_pairs_digest: extractor.spec.digest(),
        triangle_pairs: extractor.spec.pairs.clone(),
        centroid_indices: extractor.spec.centroid_indices.clone(),
    }
}

/// Evaluate one cell with per-fold PCA refitting: for each held-out
/// participant the basis is fit on the other participants' frames, every
/// session is featurized with it, and the fold is evaluated on the rebuilt
/// sample set.
#[allow(clippy::too_many_arguments)]
fn evaluate_per_fold_pca(
    cfg: &RunConfig,
    sessions: &[Session],
    surveys: &[SurveyResponse],
    kind: SetKind,
    target: Target,
    participants: &[String],
    lopo: &LopoConfig,
) -> Result<EvaluationOutcome, PipelineError> {
    let results = exec::map_ordered(participants, |p| -> Result<_, PipelineError> {
        let train_refs: Vec<&Session> = sessions
            .iter()
            .filter(|s| s.participant_id != *p)
            .collect();
        let (extractor, _) = build_extractor(cfg, &train_refs)?;
        let feat = featurize_sessions(&extractor, sessions);
        let mut drops = DropCounters::default();
        let set = build_one_set(cfg, &feat.sessions, surveys, &feat.schema, kind, &mut drops)?;
        Ok(evaluate_fold(&set, p, target, lopo))
    });
    let mut folds = Vec::with_capacity(results.len());
    for r in results {
        folds.push(r?);
    }
    Ok(pool_folds(target, folds, lopo.f1_threshold))
}

pub struct RunOutput {
    pub report: MainReport,
    pub manifest: RunManifest,
    pub sets: BuiltSets,
}

/// The `run` pipeline over already-loaded inputs.
pub fn execute_run(
    cfg: &RunConfig,
    sessions: &[Session],
    surveys: &[SurveyResponse],
    input_digests: BTreeMap<String, String>,
) -> Result<RunOutput, PipelineError> {
    cfg.validate()?;
    let lopo = lopo_config(cfg)?;
    let all_refs: Vec<&Session> = sessions.iter().collect();
    let (extractor, fit_rows) = build_extractor(cfg, &all_refs)?;
    let feat = featurize_sessions(&extractor, sessions);
    let built = build_sets(cfg, &feat.sessions, surveys, &feat.schema)?;

    let mut manifest = RunManifest::new(cfg);
    manifest.input_digests = input_digests;
    manifest.pca = Some(pca_manifest(cfg, &extractor, fit_rows));
    manifest.drop_counters = built.drops.clone();
    manifest.dropped_featurize_sessions = feat.dropped_sessions;

    let mut rows = Vec::new();
    for (kind, set) in &built.sets {
        let Some(model) = kind.model_row() else {
            continue;
        };
        let mut cells: BTreeMap<Target, CellMetrics> = BTreeMap::new();
        for target in Target::BOTH {
            let outcome = match cfg.features.pca_scope {
                PcaScope::Global => lopo_evaluate(set, target, &lopo).map_err(PipelineError::from),
                PcaScope::PerFold => evaluate_per_fold_pca(
                    cfg,
                    sessions,
                    surveys,
                    *kind,
                    target,
                    &set.participants(),
                    &lopo,
                ),
            };
            let cell = match outcome {
                Ok(out) => {
                    let key = format!("{}/{}", model.label(), target.label());
                    manifest.folds.insert(
                        key,
                        out.folds.iter().map(FoldRecord::from_result).collect(),
                    );
                    if out.folds.iter().any(|f| f.tune_fallback_row_level) {
                        manifest.notes.push(format!(
                            "{}/{}: inner CV fell back to stratified row folds",
                            model.label(),
                            target.label()
                        ));
                    }
                    CellMetrics::from_outcome(&out)
                }
                Err(e) => CellMetrics::from_error(e.to_string()),
            };
            cells.insert(target, cell);
        }
        rows.push(MainRow {
            model,
            label: model.label().to_string(),
            valence: cells.remove(&Target::Valence).unwrap(),
            arousal: cells.remove(&Target::Arousal).unwrap(),
        });
    }

    Ok(RunOutput {
        report: MainReport {
            rows,
            drop_counters: built.drops.clone(),
        },
        manifest,
        sets: built,
    })
}

pub struct AblateOutput {
    pub report: AblationReport,
    pub manifest: RunManifest,
}

/// The `ablate` pipeline: the fixed 4-horizon grid (at-moment, daily,
/// next-day lag 1 and lag 2) for each configured mode. Features always come
/// from the run-wide PCA basis.
pub fn execute_ablate(
    cfg: &RunConfig,
    sessions: &[Session],
    surveys: &[SurveyResponse],
    input_digests: BTreeMap<String, String>,
) -> Result<AblateOutput, PipelineError> {
    cfg.validate()?;
    let lopo = lopo_config(cfg)?;
    let all_refs: Vec<&Session> = sessions.iter().collect();
    let (extractor, fit_rows) = build_extractor(cfg, &all_refs)?;
    let feat = featurize_sessions(&extractor, sessions);

    let mut drops = DropCounters::default();
    let table = build_day_table(&feat.sessions, surveys, feat.schema.len(), &mut drops)?;
    let at_moment = at_moment_samples(
        &feat.sessions,
        surveys,
        &feat.schema,
        cfg.windows.at_moment_minutes,
        &mut drops,
    )?;
    let daily = daily_samples(&table, &feat.schema);
    let lag1 = next_day_samples(&table, &feat.schema, 1, &mut drops);
    let lag2 = next_day_samples(&table, &feat.schema, 2, &mut drops);
    let horizon_sets: Vec<(AblationHorizon, &SampleSet)> = vec![
        (AblationHorizon::AtMoment, &at_moment),
        (AblationHorizon::Daily, &daily),
        (AblationHorizon::NextDayLag1, &lag1),
        (AblationHorizon::NextDayLag2, &lag2),
    ];

    let tables = cfg
        .ablation
        .modes
        .iter()
        .map(|&mode| AblationTable::from_grid(&run_ablation(&horizon_sets, mode, &lopo)))
        .collect();

    let mut manifest = RunManifest::new(cfg);
    manifest.input_digests = input_digests;
    manifest.pca = Some(pca_manifest(cfg, &extractor, fit_rows));
    manifest.drop_counters = drops;
    manifest.dropped_featurize_sessions = feat.dropped_sessions;
    manifest
        .notes
        .push("ablation cells reuse the run-wide PCA basis".to_string());

    Ok(AblateOutput {
        report: AblationReport { tables },
        manifest,
    })
}
