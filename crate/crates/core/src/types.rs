//! Canonical data model for the pipeline: frames, sessions, surveys,
//! feature schemas and labeled sample sets, plus input validation.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Number of 2-D landmarks per frame.
pub const N_LANDMARKS: usize = 133;
/// Number of action-unit intensity channels per frame.
pub const N_AU: usize = 12;
/// Total scalar channels per frame: 12 AU + smile + 2 eye-open + 3 head + 133 landmarks.
pub const N_CHANNELS: usize = N_AU + 1 + 2 + 3 + N_LANDMARKS;

/// Default action-unit id list. The upstream extractor publishes eleven ids
/// (1, 2, 4, 6, 7, 10, 12, 14, 17, 23, 24) but twelve intensity channels;
/// the final slot is configurable and defaults to AU25.
pub const DEFAULT_AU_IDS: [u8; N_AU] = [1, 2, 4, 6, 7, 10, 12, 14, 17, 23, 24, 25];

/// A 2-D point in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// The eight facial regions a landmark can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    NoseCenter,
    Jawline,
    LeftEyebrow,
    LeftEye,
    RightEyebrow,
    RightEye,
    Mouth,
    Cheeks,
}

impl Region {
    /// All regions in a fixed canonical order.
    pub const ALL: [Region; 8] = [
        Region::NoseCenter,
        Region::Jawline,
        Region::LeftEyebrow,
        Region::LeftEye,
        Region::RightEyebrow,
        Region::RightEye,
        Region::Mouth,
        Region::Cheeks,
    ];
}

/// The six landmark indices that enter the eye-aspect-ratio formula:
/// `p1`/`p4` are the horizontal corners, (`p2`,`p6`) and (`p3`,`p5`) the
/// vertical pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EyeIndices {
    pub p1: usize,
    pub p2: usize,
    pub p3: usize,
    pub p4: usize,
    pub p5: usize,
    pub p6: usize,
}

impl EyeIndices {
    pub fn as_array(&self) -> [usize; 6] {
        [self.p1, self.p2, self.p3, self.p4, self.p5, self.p6]
    }
}

/// Assignment of the 133 landmark indices to regions, plus the per-eye
/// index sets used for EAR. Shared by every frame of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkLayout {
    pub regions: Vec<Region>,
    pub left_eye: EyeIndices,
    pub right_eye: EyeIndices,
}

// Default layout: 36-point face oval, two 10-point eyebrows, two 16-point
// eye rings, 38-point mouth, 5-point nose, 2 cheek points. Eye rings are
// ordered around the contour starting at the temple-side corner, so within
// a ring: 0 and 8 are the corners, (2, 14) and (6, 10) are vertical pairs.
pub const JAWLINE_RANGE: std::ops::Range<usize> = 0..36;
pub const LEFT_EYEBROW_RANGE: std::ops::Range<usize> = 36..46;
pub const RIGHT_EYEBROW_RANGE: std::ops::Range<usize> = 46..56;
pub const LEFT_EYE_RANGE: std::ops::Range<usize> = 56..72;
pub const RIGHT_EYE_RANGE: std::ops::Range<usize> = 72..88;
pub const MOUTH_RANGE: std::ops::Range<usize> = 88..126;
pub const NOSE_RANGE: std::ops::Range<usize> = 126..131;
pub const CHEEKS_RANGE: std::ops::Range<usize> = 131..133;

impl Default for LandmarkLayout {
    fn default() -> Self {
        let mut regions = vec![Region::Jawline; N_LANDMARKS];
        for i in LEFT_EYEBROW_RANGE {
            regions[i] = Region::LeftEyebrow;
        }
        for i in RIGHT_EYEBROW_RANGE {
            regions[i] = Region::RightEyebrow;
        }
        for i in LEFT_EYE_RANGE {
            regions[i] = Region::LeftEye;
        }
        for i in RIGHT_EYE_RANGE {
            regions[i] = Region::RightEye;
        }
        for i in MOUTH_RANGE {
            regions[i] = Region::Mouth;
        }
        for i in NOSE_RANGE {
            regions[i] = Region::NoseCenter;
        }
        for i in CHEEKS_RANGE {
            regions[i] = Region::Cheeks;
        }
        let eye = |base: usize| EyeIndices {
            p1: base,
            p2: base + 2,
            p3: base + 6,
            p4: base + 8,
            p5: base + 10,
            p6: base + 14,
        };
        LandmarkLayout {
            regions,
            left_eye: eye(LEFT_EYE_RANGE.start),
            right_eye: eye(RIGHT_EYE_RANGE.start),
        }
    }
}

impl LandmarkLayout {
    /// Landmark indices belonging to `region`, in ascending order.
    pub fn region_indices(&self, region: Region) -> Vec<usize> {
        self.regions
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == region)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.regions.len() != N_LANDMARKS {
            return Err(ValidationError::MissingChannel {
                channel: format!("layout regions ({} of {})", self.regions.len(), N_LANDMARKS),
            });
        }
        for eye in [&self.left_eye, &self.right_eye] {
            let idx = eye.as_array();
            for &i in &idx {
                if i >= N_LANDMARKS {
                    return Err(ValidationError::OutOfRange {
                        channel: format!("eye index {i}"),
                        value: i as f64,
                    });
                }
            }
            for a in 0..6 {
                for b in (a + 1)..6 {
                    if idx[a] == idx[b] {
                        return Err(ValidationError::DuplicateEyeIndex { index: idx[a] });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Head pose Euler angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadPose {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

/// One camera frame: the full 151-channel record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDescriptor {
    pub timestamp_ms: i64,
    /// AU intensities in [0,1], aligned with the run's configured AU id list.
    pub au: Vec<f64>,
    pub smile_p: f64,
    pub left_eye_open_p: f64,
    pub right_eye_open_p: f64,
    pub head: HeadPose,
    pub landmarks: Vec<Point>,
}

/// A timestamped burst of frames for one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub participant_id: String,
    pub session_id: String,
    pub tz_offset_minutes: i32,
    pub frames: Vec<FrameDescriptor>,
}

impl Session {
    pub fn start_ms(&self) -> i64 {
        self.frames.first().map(|f| f.timestamp_ms).unwrap_or(0)
    }

    pub fn end_ms(&self) -> i64 {
        self.frames.last().map(|f| f.timestamp_ms).unwrap_or(0)
    }
}

/// One Circumplex mood report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub participant_id: String,
    pub timestamp_ms: i64,
    pub tz_offset_minutes: i32,
    pub valence: i8,
    pub arousal: i8,
}

impl SurveyResponse {
    pub fn validate(&self) -> Result<(), ValidationError> {
        for (name, v) in [("valence", self.valence), ("arousal", self.arousal)] {
            if !(-4..=4).contains(&v) {
                return Err(ValidationError::OutOfRange {
                    channel: name.to_string(),
                    value: v as f64,
                });
            }
        }
        Ok(())
    }
}

/// The six feature groups of the ablation table, in its row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    EyeOpen,
    Smiling,
    HeadEuler,
    ActionUnits,
    EyeAspectRatio,
    InterVectorAngle,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::EyeOpen,
        FeatureGroup::Smiling,
        FeatureGroup::HeadEuler,
        FeatureGroup::ActionUnits,
        FeatureGroup::EyeAspectRatio,
        FeatureGroup::InterVectorAngle,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            FeatureGroup::EyeOpen => "Eye Open",
            FeatureGroup::Smiling => "Smiling",
            FeatureGroup::HeadEuler => "Head Euler Angle",
            FeatureGroup::ActionUnits => "Action Units",
            FeatureGroup::EyeAspectRatio => "Eye Aspect Ratios",
            FeatureGroup::InterVectorAngle => "Inter-Vector Angles",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Ordered list of (feature name, feature group) describing the columns of
/// a feature matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub entries: Vec<(String, FeatureGroup)>,
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn group_indices(&self, group: FeatureGroup) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, (_, g))| *g == group)
            .map(|(i, _)| i)
            .collect()
    }

    /// New schema keeping only the given column indices, in the given order.
    pub fn subset(&self, keep: &[usize]) -> FeatureSchema {
        FeatureSchema {
            entries: keep.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }
}

/// Prediction horizon of a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    AtMoment,
    Daily,
    NextDay,
}

/// One labeled row: a feature vector plus binarized valence/arousal labels.
/// Masked (unobserved) feature cells are stored as NaN and filled from
/// training-partition medians at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub participant_id: String,
    /// Stable identifier of the row's source (session id or participant-day).
    pub row_id: String,
    pub reference_time_ms: i64,
    #[serde(with = "crate::io::nanable")]
    pub values: Vec<f64>,
    pub valence_label: u8,
    pub arousal_label: u8,
}

/// A labeled feature matrix for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub horizon: Horizon,
    /// 0 except for next-day sets.
    pub lag_days: u32,
    pub schema: FeatureSchema,
    pub rows: Vec<SampleRow>,
}

impl SampleSet {
    pub fn participants(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.rows.iter().map(|r| r.participant_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// New set keeping only the given columns.
    pub fn subset_columns(&self, keep: &[usize]) -> SampleSet {
        SampleSet {
            horizon: self.horizon,
            lag_days: self.lag_days,
            schema: self.schema.subset(keep),
            rows: self
                .rows
                .iter()
                .map(|r| SampleRow {
                    participant_id: r.participant_id.clone(),
                    row_id: r.row_id.clone(),
                    reference_time_ms: r.reference_time_ms,
                    values: keep.iter().map(|&i| r.values[i]).collect(),
                    valence_label: r.valence_label,
                    arousal_label: r.arousal_label,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("missing channel: {channel}")]
    MissingChannel { channel: String },
    #[error("value out of range for {channel}: {value}")]
    OutOfRange { channel: String, value: f64 },
    #[error("non-monotonic frame timestamps in session {session_id}")]
    NonMonotonicTime { session_id: String },
    #[error("session {session_id} has no frames")]
    EmptySession { session_id: String },
    #[error("duplicate eye landmark index {index}")]
    DuplicateEyeIndex { index: usize },
    #[error("session {session_id} mixes participants {a} and {b}")]
    MixedParticipants {
        session_id: String,
        a: String,
        b: String,
    },
}

fn check_prob(channel: &str, value: f64) -> Result<(), ValidationError> {
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(ValidationError::OutOfRange {
            channel: channel.to_string(),
            value,
        });
    }
    Ok(())
}

/// Validate a parsed session record against every channel and ordering
/// invariant. Records failing any invariant are rejected, never repaired.
pub fn validate_session(session: Session) -> Result<Session, ValidationError> {
    let sid = session.session_id.clone();
    if session.frames.is_empty() {
        return Err(ValidationError::EmptySession { session_id: sid });
    }
    let mut prev_ts = i64::MIN;
    for frame in &session.frames {
        if frame.au.len() != N_AU {
            return Err(ValidationError::MissingChannel {
                channel: format!("au ({} of {})", frame.au.len(), N_AU),
            });
        }
        if frame.landmarks.len() != N_LANDMARKS {
            return Err(ValidationError::MissingChannel {
                channel: format!("landmarks ({} of {})", frame.landmarks.len(), N_LANDMARKS),
            });
        }
        for (i, &a) in frame.au.iter().enumerate() {
            check_prob(&format!("au[{i}]"), a)?;
        }
        check_prob("smile_p", frame.smile_p)?;
        check_prob("left_eye_open_p", frame.left_eye_open_p)?;
        check_prob("right_eye_open_p", frame.right_eye_open_p)?;
        for (name, v) in [
            ("yaw", frame.head.yaw),
            ("pitch", frame.head.pitch),
            ("roll", frame.head.roll),
        ] {
            if !v.is_finite() {
                return Err(ValidationError::OutOfRange {
                    channel: name.to_string(),
                    value: v,
                });
            }
        }
        for p in &frame.landmarks {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(ValidationError::OutOfRange {
                    channel: "landmark".to_string(),
                    value: if p.x.is_finite() { p.y } else { p.x },
                });
            }
        }
        if frame.timestamp_ms < prev_ts {
            return Err(ValidationError::NonMonotonicTime { session_id: sid });
        }
        prev_ts = frame.timestamp_ms;
    }
    Ok(session)
}
