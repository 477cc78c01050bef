//! Line-oriented input formats: sessions as JSON Lines (one frame per line)
//! and surveys as CSV, plus readers that assemble validated in-memory types.

use crate::types::{
    validate_session, FrameDescriptor, HeadPose, Point, Session, SurveyResponse, ValidationError,
};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

/// Serde adapter storing NaN-masked feature cells as JSON `null`.
pub mod nanable {
    use serde::de::{SeqAccess, Visitor};
    use serde::ser::SerializeSeq;
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(values: &[f64], ser: S) -> Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(values.len()))?;
        for v in values {
            if v.is_nan() {
                seq.serialize_element(&Option::<f64>::None)?;
            } else {
                seq.serialize_element(&Some(*v))?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<f64>, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Vec<f64>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a sequence of numbers or nulls")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::with_capacity(seq.size_hint().unwrap_or(0));
                while let Some(v) = seq.next_element::<Option<f64>>()? {
                    out.push(v.unwrap_or(f64::NAN));
                }
                Ok(out)
            }
        }
        de.deserialize_seq(V)
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: {message}")]
    Record {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("validation failed for session {session_id}: {source}")]
    Validation {
        session_id: String,
        #[source]
        source: ValidationError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Wire format of one sessions.jsonl line: a single frame tagged with its
/// session and participant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRecord {
    pub participant_id: String,
    pub session_id: String,
    pub timestamp_ms: i64,
    pub tz_offset_minutes: i32,
    pub au: Vec<f64>,
    pub smile_p: f64,
    pub left_eye_open_p: f64,
    pub right_eye_open_p: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub landmarks: Vec<[f64; 2]>,
}

impl FrameRecord {
    pub fn from_frame(session: &Session, frame: &FrameDescriptor) -> Self {
        FrameRecord {
            participant_id: session.participant_id.clone(),
            session_id: session.session_id.clone(),
            timestamp_ms: frame.timestamp_ms,
            tz_offset_minutes: session.tz_offset_minutes,
            au: frame.au.clone(),
            smile_p: frame.smile_p,
            left_eye_open_p: frame.left_eye_open_p,
            right_eye_open_p: frame.right_eye_open_p,
            yaw: frame.head.yaw,
            pitch: frame.head.pitch,
            roll: frame.head.roll,
            landmarks: frame.landmarks.iter().map(|p| [p.x, p.y]).collect(),
        }
    }

    fn into_frame(self) -> FrameDescriptor {
        FrameDescriptor {
            timestamp_ms: self.timestamp_ms,
            au: self.au,
            smile_p: self.smile_p,
            left_eye_open_p: self.left_eye_open_p,
            right_eye_open_p: self.right_eye_open_p,
            head: HeadPose {
                yaw: self.yaw,
                pitch: self.pitch,
                roll: self.roll,
            },
            landmarks: self.landmarks.iter().map(|c| Point::new(c[0], c[1])).collect(),
        }
    }
}

/// Read sessions.jsonl, grouping consecutive lines that share a
/// (participant, session) key and validating each assembled session.
pub fn read_sessions(path: &Path) -> Result<Vec<Session>, DataError> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let path_str = path.display().to_string();

    let mut sessions: Vec<Session> = Vec::new();
    let mut current: Option<Session> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FrameRecord = serde_json::from_str(&line).map_err(|e| DataError::Parse {
            path: path_str.clone(),
            line: i + 1,
            source: e,
        })?;
        let same = current.as_ref().is_some_and(|s| {
            s.participant_id == rec.participant_id && s.session_id == rec.session_id
        });
        if same {
            let s = current.as_mut().unwrap();
            if rec.tz_offset_minutes != s.tz_offset_minutes {
                return Err(DataError::Record {
                    path: path_str,
                    line: i + 1,
                    message: format!("tz offset changes within session {}", s.session_id),
                });
            }
            s.frames.push(rec.into_frame());
        } else {
            if let Some(done) = current.take() {
                sessions.push(finish_session(done)?);
            }
            current = Some(Session {
                participant_id: rec.participant_id.clone(),
                session_id: rec.session_id.clone(),
                tz_offset_minutes: rec.tz_offset_minutes,
                frames: vec![rec.into_frame()],
            });
        }
    }
    if let Some(done) = current.take() {
        sessions.push(finish_session(done)?);
    }
    sessions.sort_by(|a, b| {
        (&a.participant_id, a.start_ms(), &a.session_id)
            .cmp(&(&b.participant_id, b.start_ms(), &b.session_id))
    });
    Ok(sessions)
}

fn finish_session(s: Session) -> Result<Session, DataError> {
    let sid = s.session_id.clone();
    validate_session(s).map_err(|e| DataError::Validation {
        session_id: sid,
        source: e,
    })
}

/// Write sessions as JSON Lines, one frame per line.
pub fn write_sessions(path: &Path, sessions: &[Session]) -> Result<(), DataError> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for s in sessions {
        for f in &s.frames {
            let rec = FrameRecord::from_frame(s, f);
            serde_json::to_writer(&mut w, &rec).map_err(|e| DataError::Parse {
                path: path.display().to_string(),
                line: 0,
                source: e,
            })?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read surveys.csv (header: participant_id,timestamp_ms,tz_offset_minutes,valence,arousal).
pub fn read_surveys(path: &Path) -> Result<Vec<SurveyResponse>, DataError> {
    let path_str = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| DataError::Csv {
        path: path_str.clone(),
        source: e,
    })?;
    let mut out = Vec::new();
    for (i, rec) in reader.deserialize::<SurveyResponse>().enumerate() {
        let survey = rec.map_err(|e| DataError::Csv {
            path: path_str.clone(),
            source: e,
        })?;
        survey.validate().map_err(|e| DataError::Record {
            path: path_str.clone(),
            line: i + 2,
            message: e.to_string(),
        })?;
        out.push(survey);
    }
    out.sort_by(|a, b| {
        (&a.participant_id, a.timestamp_ms).cmp(&(&b.participant_id, b.timestamp_ms))
    });
    Ok(out)
}

/// Write surveys as CSV with the canonical header.
pub fn write_surveys(path: &Path, surveys: &[SurveyResponse]) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| DataError::Csv {
        path: path.display().to_string(),
        source: e,
    })?;
    for s in surveys {
        w.serialize(s).map_err(|e| DataError::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Hex SHA-256 digest of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String, DataError> {
    use sha2::{Digest, Sha256};
    let bytes = fs::read(path)?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Hex SHA-256 digest of an in-memory byte string.
pub fn bytes_digest(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    format!("{:x}", Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::N_LANDMARKS;

    fn sample_session(pid: &str, sid: &str, t0: i64) -> Session {
        Session {
            participant_id: pid.into(),
            session_id: sid.into(),
            tz_offset_minutes: -300,
            frames: (0..3)
                .map(|i| FrameDescriptor {
                    timestamp_ms: t0 + i * 2000,
                    au: vec![0.25; 12],
                    smile_p: 0.5,
                    left_eye_open_p: 0.9,
                    right_eye_open_p: 0.85,
                    head: HeadPose {
                        yaw: 0.5,
                        pitch: -1.25,
                        roll: 2.0,
                    },
                    landmarks: (0..N_LANDMARKS)
                        .map(|k| Point::new(k as f64 * 0.5, 100.0 - k as f64))
                        .collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn sessions_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sessions.jsonl");
        let sessions = vec![
            sample_session("P01", "P01-S1", 1_700_000_000_000),
            sample_session("P01", "P01-S2", 1_700_000_600_000),
            sample_session("P02", "P02-S1", 1_700_000_300_000),
        ];
        write_sessions(&path, &sessions).unwrap();
        let back = read_sessions(&path).unwrap();
        assert_eq!(back, sessions);
    }

    #[test]
    fn surveys_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("surveys.csv");
        let surveys = vec![
            SurveyResponse {
                participant_id: "P01".into(),
                timestamp_ms: 1_700_000_000_000,
                tz_offset_minutes: -300,
                valence: -2,
                arousal: 3,
            },
            SurveyResponse {
                participant_id: "P02".into(),
                timestamp_ms: 1_700_000_100_000,
                tz_offset_minutes: 60,
                valence: 0,
                arousal: -4,
            },
        ];
        write_surveys(&path, &surveys).unwrap();
        let back = read_surveys(&path).unwrap();
        assert_eq!(back, surveys);
    }

    #[test]
    fn survey_out_of_range_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("surveys.csv");
        fs::write(
            &path,
            "participant_id,timestamp_ms,tz_offset_minutes,valence,arousal\nP01,1000,0,5,0\n",
        )
        .unwrap();
        assert!(read_surveys(&path).is_err());
    }

    #[test]
    fn invalid_session_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sessions.jsonl");
        fs::write(&path, "{not json}\n").unwrap();
        let err = read_sessions(&path).unwrap_err();
        assert!(err.to_string().contains(":1:"));
    }
}
