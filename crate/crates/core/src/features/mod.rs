//! The 40-dimensional session feature vector: per-session means of 12 AU
//! intensities, smile probability, two eye-open probabilities, three head
//! Euler angles, two eye aspect ratios, ten inter-vector-angle principal
//! components and their ten mean angular velocities.

pub mod geometry;
pub mod kinematics;
pub mod pca;

pub use geometry::{eye_aspect_ratio, inter_vector_angle, iva_raw, CentroidRule, TriangleSpec};
pub use kinematics::angular_kinematics;
pub use pca::{fit_pca, project, PcaModel};

use crate::exec;
use crate::types::{FeatureGroup, FeatureSchema, LandmarkLayout, Point, Session};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("degenerate eye: horizontal width {width}")]
    DegenerateEye { width: f64 },
    #[error("degenerate vector{}", pair_index.map(|i| format!(" at pair {i}")).unwrap_or_default())]
    DegenerateVector { pair_index: Option<usize> },
    #[error("insufficient data: needed {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("too few frames: needed {needed}, got {got}")]
    TooFewFrames { needed: usize, got: usize },
    #[error("non-increasing timestamp at {timestamp_ms}")]
    ZeroDt { timestamp_ms: i64 },
    #[error("no usable frames in session {session_id}")]
    EmptySession { session_id: String },
}

/// Everything needed to turn a session into its feature vector.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub layout: LandmarkLayout,
    pub spec: TriangleSpec,
    pub pca: PcaModel,
    pub au_ids: Vec<u8>,
    pub eps: f64,
    /// Also compute mean angular accelerations (debug channel, not part of
    /// the 40-feature schema).
    pub emit_acceleration: bool,
}

/// A session reduced to its feature vector.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeaturizedSession {
    pub participant_id: String,
    pub session_id: String,
    pub start_ms: i64,
    pub end_ms: i64,
    pub tz_offset_minutes: i32,
    pub values: Vec<f64>,
    /// Mean angular accelerations, present only with `emit_acceleration`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub acceleration: Option<Vec<f64>>,
}

/// Build the 40-entry base schema for a given AU id list and component count.
pub fn base_schema(au_ids: &[u8], k: usize) -> FeatureSchema {
    let mut entries = Vec::with_capacity(40);
    entries.push(("eye_open_left".to_string(), FeatureGroup::EyeOpen));
    entries.push(("eye_open_right".to_string(), FeatureGroup::EyeOpen));
    entries.push(("smile_p".to_string(), FeatureGroup::Smiling));
    for name in ["head_yaw", "head_pitch", "head_roll"] {
        entries.push((name.to_string(), FeatureGroup::HeadEuler));
    }
    for id in au_ids {
        entries.push((format!("au{id:02}"), FeatureGroup::ActionUnits));
    }
    for name in ["ear_left", "ear_right"] {
        entries.push((name.to_string(), FeatureGroup::EyeAspectRatio));
    }
    for i in 1..=k {
        entries.push((format!("iva_pc{i:02}"), FeatureGroup::InterVectorAngle));
    }
    for i in 1..=k {
        entries.push((format!("iva_vel{i:02}"), FeatureGroup::InterVectorAngle));
    }
    FeatureSchema { entries }
}

struct FrameFeatures {
    timestamp_ms: i64,
    scalar: Vec<f64>,
    projected: Vec<f64>,
}

impl FeatureExtractor {
    pub fn schema(&self) -> FeatureSchema {
        base_schema(&self.au_ids, self.pca.k())
    }

    /// Raw IVA vector of one frame's landmarks.
    pub fn frame_iva(&self, landmarks: &[Point]) -> Result<Vec<f64>, FeatureError> {
        iva_raw(landmarks, &self.spec, self.eps)
    }

    /// Per-channel session means. Frames whose geometry fails EAR or IVA are
    /// skipped; if none survive the session is rejected.
    pub fn session_features(&self, session: &Session) -> Result<FeaturizedSession, FeatureError> {
        let k = self.pca.k();
        let mut frames = Vec::with_capacity(session.frames.len());
        for frame in &session.frames {
            let Ok(geometric) = self.frame_geometry(&frame.landmarks) else {
                continue;
            };
            let (ear_left, ear_right, projected) = geometric;
            let mut scalar = Vec::with_capacity(20 + self.au_ids.len());
            scalar.push(frame.left_eye_open_p);
            scalar.push(frame.right_eye_open_p);
            scalar.push(frame.smile_p);
            scalar.push(frame.head.yaw);
            scalar.push(frame.head.pitch);
            scalar.push(frame.head.roll);
            scalar.extend_from_slice(&frame.au);
            scalar.push(ear_left);
            scalar.push(ear_right);
            frames.push(FrameFeatures {
                timestamp_ms: frame.timestamp_ms,
                scalar,
                projected,
            });
        }
        if frames.is_empty() {
            return Err(FeatureError::EmptySession {
                session_id: session.session_id.clone(),
            });
        }

        let n = frames.len() as f64;
        let scalar_dim = frames[0].scalar.len();
        let mut values = vec![0.0; scalar_dim];
        for f in &frames {
            for (v, s) in values.iter_mut().zip(&f.scalar) {
                *v += s;
            }
        }
        for v in &mut values {
            *v /= n;
        }

        let mut pc_mean = vec![0.0; k];
        for f in &frames {
            for (m, p) in pc_mean.iter_mut().zip(&f.projected) {
                *m += p;
            }
        }
        for m in &mut pc_mean {
            *m /= n;
        }
        values.extend_from_slice(&pc_mean);

        // Mean angular velocity over strictly increasing timestamps; frames
        // sharing a timestamp collapse to the first occurrence.
        let mut series: Vec<(i64, Vec<f64>)> = Vec::with_capacity(frames.len());
        for f in &frames {
            if series.last().map(|(t, _)| *t) != Some(f.timestamp_ms) {
                series.push((f.timestamp_ms, f.projected.clone()));
            }
        }
        let (vel_mean, acc_mean) = if series.len() >= 2 {
            let (vel, acc) = angular_kinematics(&series)?;
            (mean_rows(&vel, k), mean_rows(&acc, k))
        } else {
            (vec![0.0; k], vec![0.0; k])
        };
        values.extend_from_slice(&vel_mean);

        Ok(FeaturizedSession {
            participant_id: session.participant_id.clone(),
            session_id: session.session_id.clone(),
            start_ms: session.start_ms(),
            end_ms: session.end_ms(),
            tz_offset_minutes: session.tz_offset_minutes,
            values,
            acceleration: self.emit_acceleration.then_some(acc_mean),
        })
    }

    fn frame_geometry(&self, landmarks: &[Point]) -> Result<(f64, f64, Vec<f64>), FeatureError> {
        let eye_points = |idx: &crate::types::EyeIndices| {
            let a = idx.as_array();
            [
                landmarks[a[0]],
                landmarks[a[1]],
                landmarks[a[2]],
                landmarks[a[3]],
                landmarks[a[4]],
                landmarks[a[5]],
            ]
        };
        let ear_left = eye_aspect_ratio(&eye_points(&self.layout.left_eye), self.eps)?;
        let ear_right = eye_aspect_ratio(&eye_points(&self.layout.right_eye), self.eps)?;
        let raw = iva_raw(landmarks, &self.spec, self.eps)?;
        let projected = project(&self.pca, &raw)?;
        Ok((ear_left, ear_right, projected))
    }
}

fn mean_rows(rows: &[Vec<f64>], dim: usize) -> Vec<f64> {
    if rows.is_empty() {
        return vec![0.0; dim];
    }
    let mut out = vec![0.0; dim];
    for r in rows {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v;
        }
    }
    for o in &mut out {
        *o /= rows.len() as f64;
    }
    out
}

/// Featurize many sessions; order of results matches input order. Sessions
/// with no usable frame are dropped and counted.
pub struct FeaturizeOutput {
    pub sessions: Vec<FeaturizedSession>,
    pub schema: FeatureSchema,
    pub dropped_sessions: usize,
}

pub fn featurize_sessions(
    extractor: &FeatureExtractor,
    sessions: &[Session],
) -> FeaturizeOutput {
    let results = exec::map_ordered(sessions, |s| extractor.session_features(s));
    let mut out = Vec::with_capacity(results.len());
    let mut dropped = 0;
    for r in results {
        match r {
            Ok(f) => out.push(f),
            Err(_) => dropped += 1,
        }
    }
    FeaturizeOutput {
        sessions: out,
        schema: extractor.schema(),
        dropped_sessions: dropped,
    }
}

/// Collect raw IVA rows for PCA fitting from the given sessions, visiting
/// frames in session order and keeping at most `max_rows` by uniform stride.
pub fn collect_pca_rows(
    sessions: &[&Session],
    spec: &TriangleSpec,
    eps: f64,
    max_rows: usize,
) -> Vec<Vec<f64>> {
    let total: usize = sessions.iter().map(|s| s.frames.len()).sum();
    let stride = if max_rows > 0 && total > max_rows {
        total.div_ceil(max_rows)
    } else {
        1
    };
    let picks: Vec<(usize, usize)> = {
        let mut v = Vec::new();
        let mut global = 0usize;
        for (si, s) in sessions.iter().enumerate() {
            for fi in 0..s.frames.len() {
                if global % stride == 0 {
                    v.push((si, fi));
                }
                global += 1;
            }
        }
        v
    };
    exec::map_ordered(&picks, |&(si, fi)| {
        iva_raw(&sessions[si].frames[fi].landmarks, spec, eps).ok()
    })
    .into_iter()
    .flatten()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{FrameDescriptor, HeadPose, N_LANDMARKS};
    use approx::assert_abs_diff_eq;

    fn test_extractor() -> FeatureExtractor {
        let layout = LandmarkLayout::default();
        let spec = TriangleSpec::within_region(&layout, &CentroidRule::NoseMean, 40);
        FeatureExtractor {
            layout,
            spec,
            pca: PcaModel {
                mean: vec![0.0; 42],
                components: identity_components(10, 42),
                explained_variance: vec![1.0; 10],
            },
            au_ids: crate::types::DEFAULT_AU_IDS.to_vec(),
            eps: geometry::DEFAULT_EPS,
            emit_acceleration: false,
        }
    }

    fn identity_components(k: usize, d: usize) -> Vec<Vec<f64>> {
        (0..k)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    fn face_frame(ts: i64) -> FrameDescriptor {
        // Simple synthetic face: ellipses per region, non-degenerate.
        let mut pts = vec![Point::new(0.0, 0.0); N_LANDMARKS];
        let ellipse = |c: (f64, f64), a: f64, b: f64, n: usize, out: &mut [Point]| {
            for (k, p) in out.iter_mut().enumerate().take(n) {
                let th = std::f64::consts::TAU * k as f64 / n as f64;
                *p = Point::new(c.0 + a * th.cos(), c.1 + b * th.sin());
            }
        };
        ellipse((320.0, 240.0), 110.0, 140.0, 36, &mut pts[0..36]);
        ellipse((265.0, 180.0), 28.0, 8.0, 10, &mut pts[36..46]);
        ellipse((375.0, 180.0), 28.0, 8.0, 10, &mut pts[46..56]);
        ellipse((265.0, 215.0), 24.0, 12.0, 16, &mut pts[56..72]);
        ellipse((375.0, 215.0), 24.0, 12.0, 16, &mut pts[72..88]);
        ellipse((320.0, 300.0), 45.0, 20.0, 38, &mut pts[88..126]);
        pts[126] = Point::new(320.0, 240.0);
        pts[127] = Point::new(308.0, 258.0);
        pts[128] = Point::new(332.0, 258.0);
        pts[129] = Point::new(320.0, 262.0);
        pts[130] = Point::new(320.0, 250.0);
        pts[131] = Point::new(240.0, 270.0);
        pts[132] = Point::new(400.0, 270.0);
        FrameDescriptor {
            timestamp_ms: ts,
            au: vec![0.3; 12],
            smile_p: 0.6,
            left_eye_open_p: 0.9,
            right_eye_open_p: 0.8,
            head: HeadPose {
                yaw: 2.0,
                pitch: -1.0,
                roll: 0.5,
            },
            landmarks: pts,
        }
    }

    fn session_of(frames: Vec<FrameDescriptor>) -> Session {
        Session {
            participant_id: "P01".into(),
            session_id: "P01-S1".into(),
            tz_offset_minutes: 0,
            frames,
        }
    }

    #[test]
    fn identical_frames_give_constant_means_and_zero_velocity() {
        let ex = test_extractor();
        let frames: Vec<_> = (0..4).map(|i| face_frame(i * 2000)).collect();
        let session = session_of(frames);
        let f = ex.session_features(&session).unwrap();
        assert_eq!(f.values.len(), 40);
        assert_abs_diff_eq!(f.values[0], 0.9); // eye_open_left
        assert_abs_diff_eq!(f.values[2], 0.6); // smile_p
        assert_abs_diff_eq!(f.values[3], 2.0); // yaw
        for v in &f.values[30..40] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12); // velocities
        }
    }

    #[test]
    fn schema_group_sizes_match_inventory() {
        let ex = test_extractor();
        let schema = ex.schema();
        assert_eq!(schema.len(), 40);
        let sizes: Vec<usize> = FeatureGroup::ALL
            .iter()
            .map(|g| schema.group_indices(*g).len())
            .collect();
        assert_eq!(sizes, vec![2, 1, 3, 12, 2, 20]);
    }

    #[test]
    fn single_frame_session_zero_velocities() {
        let ex = test_extractor();
        let session = session_of(vec![face_frame(0)]);
        let f = ex.session_features(&session).unwrap();
        let frame = &session.frames[0];
        assert_abs_diff_eq!(f.values[2], frame.smile_p);
        for v in &f.values[30..40] {
            assert_abs_diff_eq!(*v, 0.0);
        }
    }

    #[test]
    fn all_degenerate_frames_rejected() {
        let ex = test_extractor();
        let mut bad = face_frame(0);
        // Collapse the left eye corners to force a degenerate EAR.
        let p1 = ex.layout.left_eye.p1;
        let p4 = ex.layout.left_eye.p4;
        bad.landmarks[p4] = bad.landmarks[p1];
        let session = session_of(vec![bad]);
        assert!(matches!(
            ex.session_features(&session),
            Err(FeatureError::EmptySession { .. })
        ));
    }

    #[test]
    fn featurize_drops_bad_sessions_and_counts() {
        let ex = test_extractor();
        let good = session_of(vec![face_frame(0), face_frame(2000)]);
        let mut bad_frame = face_frame(0);
        let p1 = ex.layout.left_eye.p1;
        let p4 = ex.layout.left_eye.p4;
        bad_frame.landmarks[p4] = bad_frame.landmarks[p1];
        let bad = session_of(vec![bad_frame]);
        let out = featurize_sessions(&ex, &[good, bad]);
        assert_eq!(out.sessions.len(), 1);
        assert_eq!(out.dropped_sessions, 1);
    }

    #[test]
    fn pca_row_collection_respects_cap() {
        let ex = test_extractor();
        let sessions: Vec<Session> = (0..6)
            .map(|i| {
                let mut s = session_of((0..5).map(|k| face_frame(k * 1000)).collect());
                s.session_id = format!("P01-S{i}");
                s
            })
            .collect();
        let refs: Vec<&Session> = sessions.iter().collect();
        let rows = collect_pca_rows(&refs, &ex.spec, ex.eps, 10);
        assert!(rows.len() <= 10);
        assert_eq!(rows[0].len(), ex.spec.pairs.len());
        let all = collect_pca_rows(&refs, &ex.spec, ex.eps, 0);
        assert_eq!(all.len(), 30);
    }
}
