//! Report structures and rendering: the 4-model main table and the 6 x 16
//! ablation grids, as JSON (full precision) and markdown (two decimals).

use crate::ablation::{AblationGrid, AblationHorizon, AblationMode};
use crate::dataset::DropCounters;
use crate::learn::{EvaluationOutcome, Target};
use crate::types::FeatureGroup;
use serde::{Deserialize, Serialize};

/// The four main-table model rows, in published order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRow {
    AtMoment,
    DailyAverage,
    NextDayLag1,
    NextDayLag2,
    NextDayLag4,
    NextDayLag8,
}

impl ModelRow {
    pub fn label(&self) -> &'static str {
        match self {
            ModelRow::AtMoment => "At moment",
            ModelRow::DailyAverage => "Daily Average",
            ModelRow::NextDayLag1 => "Next Day Average (1 Day Lag)",
            ModelRow::NextDayLag2 => "Next Day Average (2 Day Lag)",
            ModelRow::NextDayLag4 => "Next Day Average (4 Day Lag)",
            ModelRow::NextDayLag8 => "Next Day Average (8 Day Lag)",
        }
    }

    pub fn next_day(lag: u32) -> Option<ModelRow> {
        match lag {
            1 => Some(ModelRow::NextDayLag1),
            2 => Some(ModelRow::NextDayLag2),
            4 => Some(ModelRow::NextDayLag4),
            8 => Some(ModelRow::NextDayLag8),
            _ => None,
        }
    }
}

/// One (model, target) cell of the main table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    /// Mean over folds where the per-fold metric is defined.
    pub fold_mean_f1: Option<f64>,
    pub fold_mean_auc: Option<f64>,
    pub n_rows: usize,
    pub degenerate_f1: bool,
    pub error: Option<String>,
}

impl CellMetrics {
    pub fn from_outcome(outcome: &EvaluationOutcome) -> CellMetrics {
        CellMetrics {
            f1: outcome.pooled_f1,
            auc: outcome.pooled_auc,
            fold_mean_f1: outcome.fold_mean_f1,
            fold_mean_auc: outcome.fold_mean_auc,
            n_rows: outcome.n_rows_evaluated,
            degenerate_f1: outcome.degenerate_f1,
            error: None,
        }
    }

    pub fn from_error(message: String) -> CellMetrics {
        CellMetrics {
            f1: None,
            auc: None,
            fold_mean_f1: None,
            fold_mean_auc: None,
            n_rows: 0,
            degenerate_f1: false,
            error: Some(message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainRow {
    pub model: ModelRow,
    pub label: String,
    pub valence: CellMetrics,
    pub arousal: CellMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainReport {
    pub rows: Vec<MainRow>,
    pub drop_counters: DropCounters,
}

fn fmt2(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.2}"),
        None => "-".to_string(),
    }
}

impl MainReport {
    pub fn render_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| Mood Model | Valence F1 | Valence AUC | Arousal F1 | Arousal AUC |\n");
        out.push_str("|---|---|---|---|---|\n");
        for row in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                row.label,
                fmt2(row.valence.f1),
                fmt2(row.valence.auc),
                fmt2(row.arousal.f1),
                fmt2(row.arousal.auc),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCellOut {
    pub horizon: AblationHorizon,
    pub target: Target,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    pub n_columns: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRowOut {
    pub group: FeatureGroup,
    pub label: String,
    /// 4 horizons x 2 targets cells, horizon-major.
    pub cells: Vec<AblationCellOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub mode: AblationMode,
    pub rows: Vec<AblationRowOut>,
}

impl AblationTable {
    pub fn from_grid(grid: &AblationGrid) -> AblationTable {
        let mut rows = Vec::with_capacity(FeatureGroup::ALL.len());
        for group in FeatureGroup::ALL {
            let cells = grid
                .cells
                .iter()
                .filter(|c| c.group == group)
                .map(|c| AblationCellOut {
                    horizon: c.horizon,
                    target: c.target,
                    f1: c.f1,
                    auc: c.auc,
                    n_columns: c.n_columns,
                    error: c.error.clone(),
                })
                .collect();
            rows.push(AblationRowOut {
                group,
                label: group.label().to_string(),
                cells,
            });
        }
        AblationTable {
            mode: grid.mode,
            rows,
        }
    }

    pub fn render_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("Mode: {}\n\n", self.mode.label()));
        out.push_str("| Feature |");
        for horizon in AblationHorizon::ALL {
            for target in ["Valence", "Arousal"] {
                out.push_str(&format!(" {} {target} F1 | {} {target} AUC |", horizon.label(), horizon.label()));
            }
        }
        out.push('\n');
        out.push_str(&format!("|---|{}\n", "---|".repeat(16)));
        for row in &self.rows {
            out.push_str(&format!("| {} |", row.label));
            for cell in &row.cells {
                out.push_str(&format!(" {} | {} |", fmt2(cell.f1), fmt2(cell.auc)));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub tables: Vec<AblationTable>,
}

impl AblationReport {
    pub fn render_markdown(&self) -> String {
        self.tables
            .iter()
            .map(|t| t.render_markdown())
            .collect::<Vec<_>>()
            .join("\n")
    }
}
