//! Feature-group ablation: re-evaluate every horizon and target with one
//! group's columns removed (or with only that group kept).

use crate::exec;
use crate::learn::{lopo_evaluate, LopoConfig, Target};
use crate::types::{FeatureGroup, SampleSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AblationError {
    #[error("group {group} has no columns in this schema")]
    EmptySchema { group: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    RemoveGroup,
    OnlyGroup,
}

impl AblationMode {
    pub const BOTH: [AblationMode; 2] = [AblationMode::RemoveGroup, AblationMode::OnlyGroup];

    pub fn label(&self) -> &'static str {
        match self {
            AblationMode::RemoveGroup => "remove_group",
            AblationMode::OnlyGroup => "only_group",
        }
    }
}

/// The four ablation horizons in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationHorizon {
    AtMoment,
    Daily,
    NextDayLag1,
    NextDayLag2,
}

impl AblationHorizon {
    pub const ALL: [AblationHorizon; 4] = [
        AblationHorizon::AtMoment,
        AblationHorizon::Daily,
        AblationHorizon::NextDayLag1,
        AblationHorizon::NextDayLag2,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            AblationHorizon::AtMoment => "At moment",
            AblationHorizon::Daily => "Daily",
            AblationHorizon::NextDayLag1 => "Next Day (1 Day Lag)",
            AblationHorizon::NextDayLag2 => "Next Day (2 Day Lag)",
        }
    }
}

/// Column indices the mode keeps for a group. Empty keep sets are an error
/// (only_group over a group with no columns).
pub fn ablation_columns(
    samples: &SampleSet,
    group: FeatureGroup,
    mode: AblationMode,
) -> Result<Vec<usize>, AblationError> {
    let keep: Vec<usize> = samples
        .schema
        .entries
        .iter()
        .enumerate()
        .filter(|(_, (_, g))| match mode {
            AblationMode::RemoveGroup => *g != group,
            AblationMode::OnlyGroup => *g == group,
        })
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(AblationError::EmptySchema {
            group: group.label().to_string(),
        });
    }
    Ok(keep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub group: FeatureGroup,
    pub horizon: AblationHorizon,
    pub target: Target,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    pub n_columns: usize,
    /// Cells that could not be evaluated carry the reason; they are never
    /// silently absent.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub mode: AblationMode,
    /// Exactly 6 groups x 4 horizons x 2 targets cells, group-major in the
    /// published row order.
    pub cells: Vec<AblationCell>,
}

/// Evaluate the full 48-cell grid for one mode. Every cell reuses the run
/// seed so fold streams pair with the main run's.
pub fn run_ablation(
    samplesets: &[(AblationHorizon, &SampleSet)],
    mode: AblationMode,
    cfg: &LopoConfig,
) -> AblationGrid {
    let mut jobs = Vec::new();
    for group in FeatureGroup::ALL {
        for &(horizon, set) in samplesets {
            for target in Target::BOTH {
                jobs.push((group, horizon, set, target));
            }
        }
    }
    let cells = exec::map_ordered(&jobs, |&(group, horizon, set, target)| {
        match ablation_columns(set, group, mode) {
            Ok(keep) => {
                let filtered = set.subset_columns(&keep);
                match lopo_evaluate(&filtered, target, cfg) {
                    Ok(outcome) => AblationCell {
                        group,
                        horizon,
                        target,
                        f1: outcome.pooled_f1,
                        auc: outcome.pooled_auc,
                        n_columns: keep.len(),
                        error: None,
                    },
                    Err(e) => AblationCell {
                        group,
                        horizon,
                        target,
                        f1: None,
                        auc: None,
                        n_columns: keep.len(),
                        error: Some(e.to_string()),
                    },
                }
            }
            Err(e) => AblationCell {
                group,
                horizon,
                target,
                f1: None,
                auc: None,
                n_columns: 0,
                error: Some(e.to_string()),
            },
        }
    });
    AblationGrid { mode, cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::base_schema;
    use crate::types::{Horizon, SampleRow};

    fn base_set() -> SampleSet {
        let schema = base_schema(&crate::types::DEFAULT_AU_IDS, 10);
        let rows = (0..8)
            .map(|i| SampleRow {
                participant_id: format!("P{:02}", i % 4),
                row_id: format!("r{i}"),
                reference_time_ms: i as i64,
                values: vec![0.5; schema.len()],
                valence_label: (i % 2) as u8,
                arousal_label: (i % 2) as u8,
            })
            .collect();
        SampleSet {
            horizon: Horizon::AtMoment,
            lag_days: 0,
            schema,
            rows,
        }
    }

    #[test]
    fn remove_group_column_arithmetic() {
        let set = base_set();
        let keep = ablation_columns(&set, FeatureGroup::ActionUnits, AblationMode::RemoveGroup)
            .unwrap();
        assert_eq!(keep.len(), 28);
        let only = ablation_columns(&set, FeatureGroup::ActionUnits, AblationMode::OnlyGroup)
            .unwrap();
        assert_eq!(only.len(), 12);
        assert_eq!(keep.len() + only.len(), set.schema.len());
    }

    #[test]
    fn daily_schema_remove_group_arithmetic() {
        let base = base_schema(&crate::types::DEFAULT_AU_IDS, 10);
        let daily = crate::dataset::daily_schema(&base);
        let set = SampleSet {
            horizon: Horizon::Daily,
            lag_days: 0,
            schema: daily,
            rows: vec![],
        };
        let keep =
            ablation_columns(&set, FeatureGroup::EyeAspectRatio, AblationMode::RemoveGroup)
                .unwrap();
        assert_eq!(keep.len(), 1280 - 2 * 4 * 8);
    }

    #[test]
    fn partition_property_for_every_group() {
        let set = base_set();
        for group in FeatureGroup::ALL {
            let removed =
                ablation_columns(&set, group, AblationMode::RemoveGroup).unwrap().len();
            let only = ablation_columns(&set, group, AblationMode::OnlyGroup).unwrap().len();
            assert_eq!(removed + only, set.schema.len());
        }
    }

    #[test]
    fn empty_group_is_an_error() {
        let mut set = base_set();
        set.schema.entries.retain(|(_, g)| *g != FeatureGroup::Smiling);
        for row in &mut set.rows {
            row.values.truncate(set.schema.len());
        }
        assert!(matches!(
            ablation_columns(&set, FeatureGroup::Smiling, AblationMode::OnlyGroup),
            Err(AblationError::EmptySchema { .. })
        ));
    }
}
