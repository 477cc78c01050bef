//! Labeled sample-set construction for the three horizons: at-moment rows
//! from a 30-minute pre-survey window, daily rows from per-epoch statistics,
//! and next-day rows from lagged daily features.

use crate::features::FeaturizedSession;
use crate::types::{FeatureSchema, Horizon, SampleRow, SampleSet, SurveyResponse};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const MS_PER_DAY: i64 = 86_400_000;
pub const MS_PER_EPOCH: i64 = 21_600_000;
pub const EPOCH_NAMES: [&str; 4] = ["midnight", "morning", "afternoon", "evening"];
pub const STAT_NAMES: [&str; 8] = ["min", "max", "mean", "median", "sum", "std", "q1", "q3"];

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("score {0} outside [-4, 4]")]
    OutOfRange(i64),
    #[error("schema mismatch: expected {expected} columns, got {got}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("participant-day has no sessions")]
    EmptyDay,
}

/// Binarization of a Circumplex score: below zero is low (0), zero or
/// higher is high (1).
pub fn binarize(score: i64) -> Result<u8, DatasetError> {
    if !(-4..=4).contains(&score) {
        return Err(DatasetError::OutOfRange(score));
    }
    Ok(u8::from(score >= 0))
}

fn binarize_mean(scores: &[i8]) -> u8 {
    let mean: f64 = scores.iter().map(|&s| s as f64).sum::<f64>() / scores.len() as f64;
    u8::from(mean >= 0.0)
}

/// Epoch milliseconds shifted into local wall-clock time.
pub fn local_ms(timestamp_ms: i64, tz_offset_minutes: i32) -> i64 {
    timestamp_ms + tz_offset_minutes as i64 * 60_000
}

/// Local calendar day index (days since the epoch, local time).
pub fn local_day(timestamp_ms: i64, tz_offset_minutes: i32) -> i64 {
    local_ms(timestamp_ms, tz_offset_minutes).div_euclid(MS_PER_DAY)
}

/// Which 6-hour local segment a timestamp falls in: 0 midnight, 1 morning,
/// 2 afternoon, 3 evening.
pub fn epoch_index(timestamp_ms: i64, tz_offset_minutes: i32) -> usize {
    (local_ms(timestamp_ms, tz_offset_minutes).rem_euclid(MS_PER_DAY) / MS_PER_EPOCH) as usize
}

/// The eight per-cell statistics, in schema order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatCell {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub sum: f64,
    pub std: f64,
    pub q1: f64,
    pub q3: f64,
}

impl StatCell {
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.min, self.max, self.mean, self.median, self.sum, self.std, self.q1, self.q3,
        ]
    }
}

/// Linear-interpolation quantile at rank (n-1)p over a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = (n - 1) as f64 * p;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Statistics of one feature's values within one epoch. Values must be
/// non-empty.
pub fn epoch_stats(values: &[f64]) -> StatCell {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let sum: f64 = values.iter().sum();
    let mean = sum / n as f64;
    let std = if n > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    StatCell {
        min: sorted[0],
        max: sorted[n - 1],
        mean,
        median: quantile_sorted(&sorted, 0.5),
        sum,
        std,
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
    }
}

/// Per-epoch statistics of one participant-day. Empty epochs are masked:
/// their 8 x n_features cells are NaN until imputed at training time.
#[derive(Debug, Clone)]
pub struct DailyFeatures {
    /// Length = n_features x 4 epochs x 8 statistics.
    pub values: Vec<f64>,
    pub epoch_present: [bool; 4],
    pub n_sessions: usize,
}

/// Compute the day's epoch-statistics vector from its featurized sessions.
/// Sessions are bucketed by their start time's local epoch.
pub fn daily_epoch_features(
    day_sessions: &[&FeaturizedSession],
    n_features: usize,
) -> Result<DailyFeatures, DatasetError> {
    if day_sessions.is_empty() {
        return Err(DatasetError::EmptyDay);
    }
    for s in day_sessions {
        if s.values.len() != n_features {
            return Err(DatasetError::SchemaMismatch {
                expected: n_features,
                got: s.values.len(),
            });
        }
    }
    let mut buckets: [Vec<&FeaturizedSession>; 4] = Default::default();
    for s in day_sessions {
        buckets[epoch_index(s.start_ms, s.tz_offset_minutes)].push(s);
    }
    let mut values = Vec::with_capacity(n_features * 4 * 8);
    let mut epoch_present = [false; 4];
    for (e, bucket) in buckets.iter().enumerate() {
        epoch_present[e] = !bucket.is_empty();
        for f in 0..n_features {
            if bucket.is_empty() {
                values.extend_from_slice(&[f64::NAN; 8]);
            } else {
                let col: Vec<f64> = bucket.iter().map(|s| s.values[f]).collect();
                values.extend_from_slice(&epoch_stats(&col).as_array());
            }
        }
    }
    Ok(DailyFeatures {
        values,
        epoch_present,
        n_sessions: day_sessions.len(),
    })
}

/// Derived schema for daily vectors: epoch-major, then base feature, then
/// statistic; groups inherited from the base feature.
pub fn daily_schema(base: &FeatureSchema) -> FeatureSchema {
    let mut entries = Vec::with_capacity(base.len() * 32);
    for epoch in EPOCH_NAMES {
        for (name, group) in &base.entries {
            for stat in STAT_NAMES {
                entries.push((format!("{epoch}_{name}_{stat}"), *group));
            }
        }
    }
    FeatureSchema { entries }
}

/// Lagged schema for next-day vectors: chronological day offsets
/// lag..1 before the target day.
pub fn lagged_schema(base: &FeatureSchema, lag: u32) -> FeatureSchema {
    let daily = daily_schema(base);
    let mut entries = Vec::with_capacity(daily.len() * lag as usize);
    for offset in (1..=lag).rev() {
        for (name, group) in &daily.entries {
            entries.push((format!("lag{offset}_{name}"), *group));
        }
    }
    FeatureSchema { entries }
}

/// Attrition counters surfaced in every run manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounters {
    /// Sessions with no survey in the following 30-minute window.
    pub unmatched_sessions: usize,
    /// Participant-days with sessions but no survey.
    pub labelless_days: usize,
    /// Participant-days with surveys but no sessions.
    pub sessionless_days: usize,
    /// Next-day rows dropped for an incomplete lag history, keyed by lag.
    pub incomplete_lag_rows: BTreeMap<u32, usize>,
}

/// At-moment rows: one per session whose end time falls within the
/// `window_minutes` before some survey of the same participant. A session
/// matching several surveys goes to the nearest one (earliest on ties).
pub fn at_moment_samples(
    sessions: &[FeaturizedSession],
    surveys: &[SurveyResponse],
    schema: &FeatureSchema,
    window_minutes: i64,
    drops: &mut DropCounters,
) -> Result<SampleSet, DatasetError> {
    let window_ms = window_minutes * 60_000;
    let mut by_participant: BTreeMap<&str, Vec<&SurveyResponse>> = BTreeMap::new();
    for s in surveys {
        by_participant.entry(&s.participant_id).or_default().push(s);
    }

    let mut rows = Vec::new();
    for session in sessions {
        if session.values.len() != schema.len() {
            return Err(DatasetError::SchemaMismatch {
                expected: schema.len(),
                got: session.values.len(),
            });
        }
        let end = session.end_ms;
        let candidates = by_participant
            .get(session.participant_id.as_str())
            .map(|v| v.as_slice())
            .unwrap_or(&[]);
        let best = candidates
            .iter()
            .filter(|s| end <= s.timestamp_ms && s.timestamp_ms - end <= window_ms)
            .min_by_key(|s| (s.timestamp_ms - end, s.timestamp_ms));
        match best {
            Some(survey) => rows.push(SampleRow {
                participant_id: session.participant_id.clone(),
                row_id: session.session_id.clone(),
                reference_time_ms: end,
                values: session.values.clone(),
                valence_label: binarize(survey.valence as i64)?,
                arousal_label: binarize(survey.arousal as i64)?,
            }),
            None => drops.unmatched_sessions += 1,
        }
    }
    rows.sort_by(|a, b| {
        (&a.participant_id, a.reference_time_ms, &a.row_id)
            .cmp(&(&b.participant_id, b.reference_time_ms, &b.row_id))
    });
    Ok(SampleSet {
        horizon: Horizon::AtMoment,
        lag_days: 0,
        schema: schema.clone(),
        rows,
    })
}

/// Per-participant-day feature vectors and day labels, the shared substrate
/// of the daily and next-day builders.
pub struct DayTable {
    /// (participant, local day) -> daily feature vector.
    pub features: BTreeMap<(String, i64), DailyFeatures>,
    /// (participant, local day) -> (valence label, arousal label).
    pub labels: BTreeMap<(String, i64), (u8, u8)>,
}

pub fn build_day_table(
    sessions: &[FeaturizedSession],
    surveys: &[SurveyResponse],
    n_features: usize,
    drops: &mut DropCounters,
) -> Result<DayTable, DatasetError> {
    let mut by_day: BTreeMap<(String, i64), Vec<&FeaturizedSession>> = BTreeMap::new();
    for s in sessions {
        let day = local_day(s.start_ms, s.tz_offset_minutes);
        by_day
            .entry((s.participant_id.clone(), day))
            .or_default()
            .push(s);
    }
    let mut survey_days: BTreeMap<(String, i64), Vec<&SurveyResponse>> = BTreeMap::new();
    for s in surveys {
        let day = local_day(s.timestamp_ms, s.tz_offset_minutes);
        survey_days
            .entry((s.participant_id.clone(), day))
            .or_default()
            .push(s);
    }

    let mut features = BTreeMap::new();
    for (key, day_sessions) in &by_day {
        features.insert(
            key.clone(),
            daily_epoch_features(day_sessions, n_features)?,
        );
    }
    let mut labels = BTreeMap::new();
    for (key, day_surveys) in &survey_days {
        let valences: Vec<i8> = day_surveys.iter().map(|s| s.valence).collect();
        let arousals: Vec<i8> = day_surveys.iter().map(|s| s.arousal).collect();
        labels.insert(key.clone(), (binarize_mean(&valences), binarize_mean(&arousals)));
        if !features.contains_key(key) {
            drops.sessionless_days += 1;
        }
    }
    for key in features.keys() {
        if !labels.contains_key(key) {
            drops.labelless_days += 1;
        }
    }
    Ok(DayTable { features, labels })
}

/// Daily rows: one per participant-day holding both sessions and at least
/// one survey; the label binarizes the day's mean score.
pub fn daily_samples(table: &DayTable, base: &FeatureSchema) -> SampleSet {
    let schema = daily_schema(base);
    let mut rows = Vec::new();
    for ((pid, day), feats) in &table.features {
        let Some(&(valence_label, arousal_label)) = table.labels.get(&(pid.clone(), *day)) else {
            continue;
        };
        rows.push(SampleRow {
            participant_id: pid.clone(),
            row_id: format!("{pid}:day{day}"),
            reference_time_ms: day * MS_PER_DAY,
            values: feats.values.clone(),
            valence_label,
            arousal_label,
        });
    }
    SampleSet {
        horizon: Horizon::Daily,
        lag_days: 0,
        schema,
        rows,
    }
}

/// Next-day rows: the target day's label with the concatenated features of
/// the `lag` preceding days; rows with any missing prior day are dropped.
pub fn next_day_samples(
    table: &DayTable,
    base: &FeatureSchema,
    lag: u32,
    drops: &mut DropCounters,
) -> SampleSet {
    let schema = lagged_schema(base, lag);
    let mut rows = Vec::new();
    for ((pid, day), &(valence_label, arousal_label)) in &table.labels {
        let history: Vec<Option<&DailyFeatures>> = (1..=lag as i64)
            .rev()
            .map(|offset| table.features.get(&(pid.clone(), day - offset)))
            .collect();
        if history.iter().any(|h| h.is_none()) {
            *drops.incomplete_lag_rows.entry(lag).or_default() += 1;
            continue;
        }
        let mut values = Vec::with_capacity(schema.len());
        for h in history.into_iter().flatten() {
            values.extend_from_slice(&h.values);
        }
        rows.push(SampleRow {
            participant_id: pid.clone(),
            row_id: format!("{pid}:day{day}:lag{lag}"),
            reference_time_ms: day * MS_PER_DAY,
            values,
            valence_label,
            arousal_label,
        });
    }
    SampleSet {
        horizon: Horizon::NextDay,
        lag_days: lag,
        schema,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::FeatureGroup;
    use approx::assert_abs_diff_eq;

    fn fsession(pid: &str, sid: &str, end_ms: i64, values: Vec<f64>) -> FeaturizedSession {
        FeaturizedSession {
            participant_id: pid.into(),
            session_id: sid.into(),
            start_ms: end_ms - 10_000,
            end_ms,
            tz_offset_minutes: 0,
            values,
            acceleration: None,
        }
    }

    fn survey(pid: &str, ts: i64, valence: i8, arousal: i8) -> SurveyResponse {
        SurveyResponse {
            participant_id: pid.into(),
            timestamp_ms: ts,
            tz_offset_minutes: 0,
            valence,
            arousal,
        }
    }

    fn tiny_schema() -> FeatureSchema {
        FeatureSchema {
            entries: vec![
                ("a".into(), FeatureGroup::Smiling),
                ("b".into(), FeatureGroup::EyeOpen),
            ],
        }
    }

    #[test]
    fn binarize_threshold_rule() {
        assert_eq!(binarize(-1).unwrap(), 0);
        assert_eq!(binarize(0).unwrap(), 1);
        assert_eq!(binarize(4).unwrap(), 1);
        assert_eq!(binarize(-4).unwrap(), 0);
        assert!(binarize(5).is_err());
    }

    #[test]
    fn epoch_stats_fixture() {
        let s = epoch_stats(&[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(s.min, 1.0);
        assert_abs_diff_eq!(s.max, 4.0);
        assert_abs_diff_eq!(s.mean, 2.5);
        assert_abs_diff_eq!(s.median, 2.5);
        assert_abs_diff_eq!(s.sum, 10.0);
        assert_abs_diff_eq!(s.std, (5.0_f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.q1, 1.75);
        assert_abs_diff_eq!(s.q3, 3.25);
    }

    #[test]
    fn epoch_stats_single_value() {
        let s = epoch_stats(&[7.0]);
        assert_eq!(
            s.as_array(),
            [7.0, 7.0, 7.0, 7.0, 7.0, 0.0, 7.0, 7.0]
        );
    }

    #[test]
    fn local_time_bucketing() {
        // 1970-01-01 05:00 UTC at UTC-6 is 23:00 the previous local day.
        let ts = 5 * 3_600_000;
        assert_eq!(local_day(ts, -360), -1);
        assert_eq!(epoch_index(ts, -360), 3);
        assert_eq!(epoch_index(ts, 0), 0);
        assert_eq!(epoch_index(7 * 3_600_000, 0), 1);
        assert_eq!(epoch_index(13 * 3_600_000, 0), 2);
    }

    #[test]
    fn at_moment_window_membership() {
        let schema = tiny_schema();
        let noon = 12 * 3_600_000;
        let sessions = vec![
            fsession("P1", "s-ok", noon - 15 * 60_000, vec![1.0, 2.0]),
            fsession("P1", "s-outside", noon - 35 * 60_000, vec![1.0, 2.0]),
            fsession("P1", "s-after", noon + 5 * 60_000, vec![1.0, 2.0]),
        ];
        let surveys = vec![survey("P1", noon, -3, 2)];
        let mut drops = DropCounters::default();
        let set = at_moment_samples(&sessions, &surveys, &schema, 30, &mut drops).unwrap();
        assert_eq!(set.rows.len(), 1);
        assert_eq!(set.rows[0].row_id, "s-ok");
        assert_eq!(set.rows[0].valence_label, 0);
        assert_eq!(set.rows[0].arousal_label, 1);
        assert_eq!(drops.unmatched_sessions, 2);
    }

    #[test]
    fn at_moment_nearest_survey_wins() {
        let schema = tiny_schema();
        let end = 10 * 3_600_000;
        let sessions = vec![fsession("P1", "s1", end, vec![0.0, 0.0])];
        let surveys = vec![
            survey("P1", end + 20 * 60_000, 3, 3),
            survey("P1", end + 5 * 60_000, -2, -2),
        ];
        let mut drops = DropCounters::default();
        let set = at_moment_samples(&sessions, &surveys, &schema, 30, &mut drops).unwrap();
        assert_eq!(set.rows[0].valence_label, 0);
    }

    #[test]
    fn at_moment_boundary_is_inclusive() {
        let schema = tiny_schema();
        let end = 9 * 3_600_000;
        let sessions = vec![fsession("P1", "s1", end, vec![0.0, 0.0])];
        let surveys = vec![survey("P1", end + 30 * 60_000, 1, 1)];
        let mut drops = DropCounters::default();
        let set = at_moment_samples(&sessions, &surveys, &schema, 30, &mut drops).unwrap();
        assert_eq!(set.rows.len(), 1);
    }

    #[test]
    fn daily_vector_dimensions_and_masking() {
        let schema = tiny_schema();
        let s1 = fsession("P1", "s1", 8 * 3_600_000, vec![1.0, 2.0]);
        let s2 = fsession("P1", "s2", 9 * 3_600_000, vec![3.0, 4.0]);
        let feats = daily_epoch_features(&[&s1, &s2], 2).unwrap();
        assert_eq!(feats.values.len(), 2 * 4 * 8);
        assert_eq!(feats.epoch_present, [false, true, false, false]);
        // Morning cell for feature "a": values [1, 3].
        let base = 8 * 2; // skip masked midnight epoch (2 features x 8 stats)
        assert_abs_diff_eq!(feats.values[base], 1.0); // min
        assert_abs_diff_eq!(feats.values[base + 1], 3.0); // max
        assert_abs_diff_eq!(feats.values[base + 4], 4.0); // sum
        assert!(feats.values[0].is_nan()); // masked midnight
    }

    #[test]
    fn empty_day_rejected() {
        assert_eq!(
            daily_epoch_features(&[], 2).unwrap_err(),
            DatasetError::EmptyDay
        );
    }

    #[test]
    fn daily_label_is_mean_then_threshold() {
        let schema = tiny_schema();
        let sessions = vec![fsession("P1", "s1", 8 * 3_600_000, vec![1.0, 2.0])];
        let surveys = vec![
            survey("P1", 9 * 3_600_000, -1, -1),
            survey("P1", 14 * 3_600_000, 2, -1),
            survey("P1", 20 * 3_600_000, 0, -1),
        ];
        let mut drops = DropCounters::default();
        let table = build_day_table(&sessions, &surveys, 2, &mut drops).unwrap();
        let set = daily_samples(&table, &schema);
        assert_eq!(set.rows.len(), 1);
        assert_eq!(set.rows[0].valence_label, 1); // mean 1/3 -> high
        assert_eq!(set.rows[0].arousal_label, 0);
        assert_eq!(set.schema.len(), 64);
    }

    #[test]
    fn labelless_day_dropped_and_counted() {
        let schema = tiny_schema();
        let sessions = vec![fsession("P1", "s1", 8 * 3_600_000, vec![1.0, 2.0])];
        let mut drops = DropCounters::default();
        let table = build_day_table(&sessions, &[], 2, &mut drops).unwrap();
        let set = daily_samples(&table, &schema);
        assert!(set.rows.is_empty());
        assert_eq!(drops.labelless_days, 1);
    }

    #[test]
    fn next_day_requires_complete_history() {
        let schema = tiny_schema();
        let day = |d: i64, h: i64| (d * 24 + h) * 3_600_000;
        // Sessions on days 0 and 2; surveys on days 1, 2, 3.
        let sessions = vec![
            fsession("P1", "s0", day(0, 9), vec![1.0, 2.0]),
            fsession("P1", "s2", day(2, 9), vec![3.0, 4.0]),
        ];
        let surveys = vec![
            survey("P1", day(1, 10), 2, 2),
            survey("P1", day(2, 10), -2, -2),
            survey("P1", day(3, 10), 1, 1),
        ];
        let mut drops = DropCounters::default();
        let table = build_day_table(&sessions, &surveys, 2, &mut drops).unwrap();
        let set = next_day_samples(&table, &schema, 1, &mut drops);
        // Day 1 has day-0 features; day 3 has day-2 features; day 2 lacks day 1.
        assert_eq!(set.rows.len(), 2);
        assert_eq!(set.schema.len(), 64);
        assert_eq!(drops.incomplete_lag_rows[&1], 1);

        let mut drops2 = DropCounters::default();
        let set2 = next_day_samples(&table, &schema, 2, &mut drops2);
        assert_eq!(set2.schema.len(), 128);
        assert_eq!(set2.rows.len(), 0);
        assert_eq!(drops2.incomplete_lag_rows[&2], 3);
    }

    #[test]
    fn builders_stable_under_input_shuffle() {
        let schema = tiny_schema();
        let noon = 12 * 3_600_000;
        let mut sessions = vec![
            fsession("P2", "s3", noon - 600_000, vec![1.0, 1.0]),
            fsession("P1", "s2", noon - 300_000, vec![2.0, 2.0]),
            fsession("P1", "s1", noon - 900_000, vec![3.0, 3.0]),
        ];
        let surveys = vec![survey("P1", noon, 1, 1), survey("P2", noon, -1, -1)];
        let mut drops = DropCounters::default();
        let a = at_moment_samples(&sessions, &surveys, &schema, 30, &mut drops).unwrap();
        sessions.reverse();
        let b = at_moment_samples(&sessions, &surveys, &schema, 30, &mut drops).unwrap();
        assert_eq!(a, b);
        let ids: Vec<&str> = a.rows.iter().map(|r| r.row_id.as_str()).collect();
        assert_eq!(ids, vec!["s1", "s2", "s3"]);
    }
}
