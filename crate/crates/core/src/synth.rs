//! Deterministic synthetic-cohort generator with a plantable mood signal.
//!
//! Each participant gets a latent valence/arousal trajectory: a bounded,
//! mean-reverting day-to-day random walk plus a slow intraday curve. Surveys
//! report the rounded latent mood; session frame channels are baseline noise
//! shifted by the configured per-group effect sizes conditioned on the
//! latent mood at session time. The ground-truth manifest records every
//! latent state for oracle checks.

use crate::dataset::MS_PER_DAY;
use crate::exec;
use crate::io;
use crate::types::{
    FeatureGroup, FrameDescriptor, HeadPose, Point, Session, SurveyResponse, CHEEKS_RANGE,
    DEFAULT_AU_IDS, JAWLINE_RANGE, LEFT_EYEBROW_RANGE, LEFT_EYE_RANGE, MOUTH_RANGE, NOSE_RANGE,
    N_LANDMARKS, RIGHT_EYEBROW_RANGE, RIGHT_EYE_RANGE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] io::DataError),
}

fn default_participants() -> usize {
    25
}
fn default_days() -> u32 {
    28
}
fn default_sessions_per_day() -> f64 {
    23.0
}
fn default_frames_per_session() -> usize {
    5
}
fn default_survey_hours() -> Vec<f64> {
    vec![10.0, 15.0, 20.0]
}
fn default_survey_jitter() -> f64 {
    45.0
}
fn default_response_rate() -> f64 {
    0.9
}
fn default_missing_day_rate() -> f64 {
    0.1
}
fn default_signal_spec() -> BTreeMap<FeatureGroup, f64> {
    BTreeMap::from([
        (FeatureGroup::Smiling, 0.4),
        (FeatureGroup::ActionUnits, 0.35),
    ])
}
fn default_mood_sigma_day() -> f64 {
    1.6
}
fn default_mood_reversion() -> f64 {
    0.55
}
fn default_mood_sigma_intraday() -> f64 {
    0.6
}
fn default_survey_noise() -> f64 {
    0.3
}
fn default_tz_offsets() -> Vec<i32> {
    vec![-480, -300, -240, 0, 60, 330]
}
fn default_start_day() -> i64 {
    19_700
}
fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortConfig {
    pub n_participants: usize,
    pub n_days: u32,
    /// Poisson mean of sessions per active day.
    pub sessions_per_day: f64,
    pub frames_per_session: usize,
    /// Local wall-clock hours of the daily survey prompts.
    pub survey_hours: Vec<f64>,
    /// Uniform +- jitter around each prompt, minutes.
    pub survey_jitter_minutes: f64,
    pub survey_response_rate: f64,
    /// Probability a day records no sessions at all.
    pub missing_day_rate: f64,
    /// Effect size per feature group on mood-conditioned channel means;
    /// groups absent from the map carry no signal.
    pub signal_spec: BTreeMap<FeatureGroup, f64>,
    pub mood_sigma_day: f64,
    pub mood_mean_reversion: f64,
    pub mood_sigma_intraday: f64,
    pub survey_noise: f64,
    /// Participant time zones, cycled in order.
    pub tz_offsets: Vec<i32>,
    /// First local day index (days since the epoch).
    pub start_day: i64,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            n_participants: default_participants(),
            n_days: default_days(),
            sessions_per_day: default_sessions_per_day(),
            frames_per_session: default_frames_per_session(),
            survey_hours: default_survey_hours(),
            survey_jitter_minutes: default_survey_jitter(),
            survey_response_rate: default_response_rate(),
            missing_day_rate: default_missing_day_rate(),
            signal_spec: default_signal_spec(),
            mood_sigma_day: default_mood_sigma_day(),
            mood_mean_reversion: default_mood_reversion(),
            mood_sigma_intraday: default_mood_sigma_intraday(),
            survey_noise: default_survey_noise(),
            tz_offsets: default_tz_offsets(),
            start_day: default_start_day(),
            seed: default_seed(),
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_participants == 0 || self.n_days == 0 || self.frames_per_session == 0 {
            return Err(SynthError::InvalidConfig("counts must be positive".into()));
        }
        if !(self.sessions_per_day > 0.0) {
            return Err(SynthError::InvalidConfig(
                "sessions_per_day must be positive".into(),
            ));
        }
        for (name, rate) in [
            ("survey_response_rate", self.survey_response_rate),
            ("missing_day_rate", self.missing_day_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(SynthError::InvalidConfig(format!(
                    "{name} must be in [0, 1], got {rate}"
                )));
            }
        }
        if self.signal_spec.values().any(|e| !e.is_finite()) {
            return Err(SynthError::InvalidConfig(
                "signal effect sizes must be finite".into(),
            ));
        }
        if self.survey_hours.is_empty() || self.tz_offsets.is_empty() {
            return Err(SynthError::InvalidConfig(
                "survey_hours and tz_offsets must be non-empty".into(),
            ));
        }
        Ok(())
    }

    fn effect(&self, group: FeatureGroup) -> f64 {
        self.signal_spec.get(&group).copied().unwrap_or(0.0)
    }
}

/// Latent mood recorded alongside each emitted artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPoint {
    pub id: String,
    pub timestamp_ms: i64,
    pub valence: f64,
    pub arousal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantTruth {
    pub participant_id: String,
    pub tz_offset_minutes: i32,
    /// Per-day (day index, base valence, base arousal, missing).
    pub days: Vec<(i64, f64, f64, bool)>,
    pub surveys: Vec<LatentPoint>,
    pub sessions: Vec<LatentPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthManifest {
    pub config: CohortConfig,
    pub participants: Vec<ParticipantTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub sessions: Vec<Session>,
    pub surveys: Vec<SurveyResponse>,
    pub truth: TruthManifest,
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (v * scale).round() / scale
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Neutral face template in pixel coordinates, matching the default layout's
/// region ranges. `openness` scales the eye rings' vertical radius; `curve`
/// lifts the mouth corners; `width` scales the mouth horizontally.
fn face_points(openness: f64, curve: f64, width: f64) -> Vec<Point> {
    let (cx, cy) = (320.0, 240.0);
    let mut pts = vec![Point::new(0.0, 0.0); N_LANDMARKS];
    let ellipse = |pts: &mut [Point], range: std::ops::Range<usize>, c: (f64, f64), a: f64, b: f64| {
        let n = range.len();
        for (k, i) in range.enumerate() {
            let th = std::f64::consts::TAU * k as f64 / n as f64;
            pts[i] = Point::new(c.0 + a * th.cos(), c.1 + b * th.sin());
        }
    };
    ellipse(&mut pts, JAWLINE_RANGE, (cx, cy + 10.0), 110.0, 140.0);
    ellipse(&mut pts, LEFT_EYEBROW_RANGE, (cx - 55.0, cy - 60.0), 28.0, 8.0);
    ellipse(&mut pts, RIGHT_EYEBROW_RANGE, (cx + 55.0, cy - 60.0), 28.0, 8.0);
    ellipse(
        &mut pts,
        LEFT_EYE_RANGE,
        (cx - 55.0, cy - 25.0),
        24.0,
        12.0 * openness,
    );
    ellipse(
        &mut pts,
        RIGHT_EYE_RANGE,
        (cx + 55.0, cy - 25.0),
        24.0,
        12.0 * openness,
    );
    // Two concentric mouth rings with a smile parabola: positive curve
    // raises the corners relative to the center.
    let mouth_center = (cx, cy + 60.0);
    let mouth = |pts: &mut [Point], range: std::ops::Range<usize>, a: f64, b: f64| {
        let n = range.len();
        for (k, i) in range.enumerate() {
            let th = std::f64::consts::TAU * k as f64 / n as f64;
            let x_rel = a * width * th.cos();
            let y_rel = b * th.sin() + curve * ((x_rel / 45.0).powi(2) - 0.5);
            pts[i] = Point::new(mouth_center.0 + x_rel, mouth_center.1 - y_rel);
        }
    };
    let mouth_outer_end = MOUTH_RANGE.start + 20;
    mouth(&mut pts, MOUTH_RANGE.start..mouth_outer_end, 45.0, 20.0);
    mouth(&mut pts, mouth_outer_end..MOUTH_RANGE.end, 32.0, 10.0);
    let nose = [
        (0.0, -6.0),
        (-10.0, 6.0),
        (0.0, 2.0),
        (10.0, 6.0),
        (0.0, 12.0),
    ];
    for (k, i) in NOSE_RANGE.enumerate() {
        pts[i] = Point::new(cx + nose[k].0, cy + 18.0 + nose[k].1);
    }
    for (k, i) in CHEEKS_RANGE.enumerate() {
        pts[i] = Point::new(cx + if k == 0 { -80.0 } else { 80.0 }, cy + 25.0);
    }
    pts
}

struct MoodCurve {
    base_v: f64,
    base_a: f64,
    amp_v: f64,
    amp_a: f64,
    phase_hours: f64,
}

impl MoodCurve {
    fn at(&self, hour: f64) -> (f64, f64) {
        let arg = std::f64::consts::TAU * (hour - self.phase_hours) / 24.0;
        (
            (self.base_v + self.amp_v * arg.sin()).clamp(-4.0, 4.0),
            (self.base_a + self.amp_a * arg.cos()).clamp(-4.0, 4.0),
        )
    }
}

struct ParticipantGen<'a> {
    cfg: &'a CohortConfig,
    rng: ChaCha8Rng,
    pid: String,
    tz: i32,
    au_baseline: Vec<f64>,
}

impl ParticipantGen<'_> {
    fn normal(&mut self, sd: f64) -> f64 {
        if sd <= 0.0 {
            return 0.0;
        }
        Normal::new(0.0, sd).unwrap().sample(&mut self.rng)
    }

    fn generate(mut self) -> (Vec<Session>, Vec<SurveyResponse>, ParticipantTruth) {
        let cfg = self.cfg;
        let mut sessions = Vec::new();
        let mut surveys = Vec::new();
        let mut truth = ParticipantTruth {
            participant_id: self.pid.clone(),
            tz_offset_minutes: self.tz,
            days: Vec::new(),
            surveys: Vec::new(),
            sessions: Vec::new(),
        };

        let mut base_v = self.normal(1.2).clamp(-3.0, 3.0);
        let mut base_a = self.normal(1.2).clamp(-3.0, 3.0);
        let mut session_counter = 0usize;
        for d in 0..cfg.n_days as i64 {
            let day = cfg.start_day + d;
            let rho = cfg.mood_mean_reversion;
            base_v = (rho * base_v + self.normal(cfg.mood_sigma_day)).clamp(-3.8, 3.8);
            base_a = (rho * base_a + self.normal(cfg.mood_sigma_day)).clamp(-3.8, 3.8);
            let curve = MoodCurve {
                base_v,
                base_a,
                amp_v: self.normal(cfg.mood_sigma_intraday).abs(),
                amp_a: self.normal(cfg.mood_sigma_intraday).abs(),
                phase_hours: self.rng.gen_range(0.0..24.0),
            };
            let missing: bool = self.rng.gen_bool(cfg.missing_day_rate);
            truth.days.push((day, base_v, base_a, missing));

            // Surveys at the jittered prompt slots.
            for &slot in &cfg.survey_hours {
                if !self.rng.gen_bool(cfg.survey_response_rate) {
                    continue;
                }
                let jitter_h = self
                    .rng
                    .gen_range(-cfg.survey_jitter_minutes..=cfg.survey_jitter_minutes)
                    / 60.0;
                let hour = (slot + jitter_h).clamp(0.0, 23.99);
                let ts = self.local_to_utc(day, hour);
                let (lv, la) = curve.at(hour);
                let report = |m: f64, noise: f64| -> i8 {
                    (m + noise).round().clamp(-4.0, 4.0) as i8
                };
                let nv = self.normal(cfg.survey_noise);
                let na = self.normal(cfg.survey_noise);
                surveys.push(SurveyResponse {
                    participant_id: self.pid.clone(),
                    timestamp_ms: ts,
                    tz_offset_minutes: self.tz,
                    valence: report(lv, nv),
                    arousal: report(la, na),
                });
                truth.surveys.push(LatentPoint {
                    id: format!("{}:survey:{ts}", self.pid),
                    timestamp_ms: ts,
                    valence: lv,
                    arousal: la,
                });
            }

            if missing {
                continue;
            }
            let n_sessions = Poisson::new(cfg.sessions_per_day)
                .map(|p| p.sample(&mut self.rng) as usize)
                .unwrap_or(0);
            let mut starts: Vec<f64> = (0..n_sessions)
                .map(|_| {
                    if self.rng.gen_bool(0.15) {
                        self.rng.gen_range(0.0..6.0)
                    } else {
                        self.rng.gen_range(6.0..24.0)
                    }
                })
                .collect();
            starts.sort_by(|a, b| a.total_cmp(b));
            for hour in starts {
                let ts = self.local_to_utc(day, hour.min(23.99));
                let (lv, la) = curve.at(hour);
                let session_id = format!("{}-S{session_counter:05}", self.pid);
                session_counter += 1;
                let session = self.emit_session(&session_id, ts, lv, la);
                truth.sessions.push(LatentPoint {
                    id: session_id,
                    timestamp_ms: ts,
                    valence: lv,
                    arousal: la,
                });
                sessions.push(session);
            }
        }
        (sessions, surveys, truth)
    }

    fn local_to_utc(&self, day: i64, hour: f64) -> i64 {
        let local = day * MS_PER_DAY + (hour * 3_600_000.0) as i64;
        local - self.tz as i64 * 60_000
    }

    fn emit_session(&mut self, session_id: &str, start_ms: i64, lv: f64, la: f64) -> Session {
        let cfg = self.cfg;
        let v_norm = lv / 4.0;
        let a_norm = la / 4.0;
        let e_smile = cfg.effect(FeatureGroup::Smiling);
        let e_au = cfg.effect(FeatureGroup::ActionUnits);
        let e_eye = cfg.effect(FeatureGroup::EyeOpen);
        let e_head = cfg.effect(FeatureGroup::HeadEuler);
        let e_ear = cfg.effect(FeatureGroup::EyeAspectRatio);
        let e_iva = cfg.effect(FeatureGroup::InterVectorAngle);

        // Per-session head pose base; frames add small jitter.
        let head_base = (
            self.normal(6.0),
            self.normal(6.0) + 8.0 * e_head * v_norm,
            self.normal(4.0),
        );
        let spacing_ms = (10_000 / cfg.frames_per_session).max(1) as i64;
        let au_index = |id: u8| DEFAULT_AU_IDS.iter().position(|&a| a == id);

        let frames: Vec<FrameDescriptor> = (0..cfg.frames_per_session)
            .map(|k| {
                let mut au = self.au_baseline.clone();
                for v in au.iter_mut() {
                    *v += self.normal(0.06);
                }
                if let Some(i) = au_index(12) {
                    au[i] += 0.6 * e_au * v_norm;
                }
                if let Some(i) = au_index(6) {
                    au[i] += 0.4 * e_au * v_norm;
                }
                if let Some(i) = au_index(4) {
                    au[i] -= 0.5 * e_au * v_norm;
                }
                if let Some(i) = au_index(1) {
                    au[i] += 0.3 * e_au * a_norm;
                }
                if let Some(i) = au_index(23) {
                    au[i] += 0.25 * e_au * a_norm;
                }
                for v in au.iter_mut() {
                    *v = round_to(clamp01(*v), 4);
                }

                let smile_p = round_to(
                    clamp01(0.45 + 0.8 * e_smile * v_norm + self.normal(0.08)),
                    4,
                );
                let eye_open = |rng_noise: f64| {
                    round_to(clamp01(0.82 + 0.35 * e_eye * a_norm + rng_noise), 4)
                };
                let left_noise = self.normal(0.05);
                let right_noise = self.normal(0.05);

                let openness = (1.0 + 0.5 * e_ear * a_norm).clamp(0.3, 1.8);
                let mouth_curve = 10.0 * e_iva * v_norm;
                let mouth_width = (1.0 + 0.12 * e_iva * v_norm).clamp(0.7, 1.3);
                let mut pts = face_points(openness, mouth_curve, mouth_width);
                // Per-frame similarity transform plus landmark jitter.
                let scale = self.rng.gen_range(0.9..1.1);
                let theta: f64 = self.rng.gen_range(-0.087..0.087); // ~5 degrees
                let (tx, ty) = (self.rng.gen_range(-20.0..20.0), self.rng.gen_range(-20.0..20.0));
                let (sin, cos) = theta.sin_cos();
                for p in &mut pts {
                    let (x, y) = (p.x - 320.0, p.y - 240.0);
                    let xr = scale * (x * cos - y * sin) + 320.0 + tx;
                    let yr = scale * (x * sin + y * cos) + 240.0 + ty;
                    *p = Point::new(
                        round_to(xr + self.normal(0.4), 2),
                        round_to(yr + self.normal(0.4), 2),
                    );
                }

                FrameDescriptor {
                    timestamp_ms: start_ms + k as i64 * spacing_ms,
                    au,
                    smile_p,
                    left_eye_open_p: eye_open(left_noise),
                    right_eye_open_p: eye_open(right_noise),
                    head: HeadPose {
                        yaw: round_to(head_base.0 + self.normal(1.5), 2),
                        pitch: round_to(head_base.1 + self.normal(1.5), 2),
                        roll: round_to(head_base.2 + self.normal(1.5), 2),
                    },
                    landmarks: pts,
                }
            })
            .collect();

        Session {
            participant_id: self.pid.clone(),
            session_id: session_id.to_string(),
            tz_offset_minutes: self.tz,
            frames,
        }
    }
}

/// Generate the full cohort. Participants are generated in parallel with
/// per-participant derived seeds; the same config always yields the same
/// cohort, bit for bit.
pub fn generate_cohort(config: &CohortConfig) -> Result<Cohort, SynthError> {
    config.validate()?;
    let ids: Vec<usize> = (0..config.n_participants).collect();
    let parts = exec::map_ordered(&ids, |&p| {
        let pid = format!("P{:02}", p + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(exec::derive_seed(config.seed, &pid));
        let au_baseline: Vec<f64> = (0..DEFAULT_AU_IDS.len())
            .map(|_| rng.gen_range(0.2..0.4))
            .collect();
        let gen = ParticipantGen {
            cfg: config,
            pid: pid.clone(),
            tz: config.tz_offsets[p % config.tz_offsets.len()],
            au_baseline,
            rng,
        };
        gen.generate()
    });

    let mut sessions = Vec::new();
    let mut surveys = Vec::new();
    let mut participants = Vec::new();
    for (s, sv, t) in parts {
        sessions.extend(s);
        surveys.extend(sv);
        participants.push(t);
    }
    Ok(Cohort {
        sessions,
        surveys,
        truth: TruthManifest {
            config: config.clone(),
            participants,
        },
    })
}

/// Write sessions.jsonl, surveys.csv and manifest.json into `out_dir`.
pub fn write_cohort(cohort: &Cohort, out_dir: &Path) -> Result<(), SynthError> {
    std::fs::create_dir_all(out_dir).map_err(io::DataError::from)?;
    io::write_sessions(&out_dir.join("sessions.jsonl"), &cohort.sessions)?;
    io::write_surveys(&out_dir.join("surveys.csv"), &cohort.surveys)?;
    let manifest = serde_json::to_string_pretty(&cohort.truth).expect("serializable manifest");
    std::fs::write(out_dir.join("manifest.json"), manifest + "\n").map_err(io::DataError::from)?;
    Ok(())
}
