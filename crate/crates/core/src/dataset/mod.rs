//! Viewing-study data: participants, videos, sessions with resolution events,
//! and the flattened rows used for modelling.

mod bfi;
mod csvio;

pub use bfi::{bfi10_score, dominant_traits, Trait, TraitProfile, TraitScores};
pub use csvio::{export_dir, ingest_dir, ingest_readers, HeaderAliases};

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Still,
    Walking,
    Running,
    InVehicle,
}

impl Activity {
    pub const ALL: [Activity; 4] = [
        Activity::Still,
        Activity::Walking,
        Activity::Running,
        Activity::InVehicle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Still => "still",
            Activity::Walking => "walking",
            Activity::Running => "running",
            Activity::InVehicle => "in_vehicle",
        }
    }
}

impl std::fmt::Display for Activity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Activity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        match norm.as_str() {
            "still" | "sitting" | "standing" => Ok(Activity::Still),
            "walking" | "walk" => Ok(Activity::Walking),
            "running" | "run" => Ok(Activity::Running),
            "in_vehicle" | "vehicle" | "invehicle" | "car" | "driving" => Ok(Activity::InVehicle),
            _ => Err(Error::invalid(format!("unknown activity {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

impl std::str::FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Ok(Gender::Male),
            "female" | "f" => Ok(Gender::Female),
            _ => Err(Error::invalid(format!("unknown gender {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Study {
    One,
    Two,
}

impl Study {
    pub fn number(self) -> u8 {
        match self {
            Study::One => 1,
            Study::Two => 2,
        }
    }
}

impl From<Study> for u8 {
    fn from(s: Study) -> u8 {
        s.number()
    }
}

impl TryFrom<u8> for Study {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Study::One),
            2 => Ok(Study::Two),
            _ => Err(Error::invalid(format!("study must be 1 or 2, got {v}"))),
        }
    }
}

impl std::str::FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: u8 = s
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("study must be 1 or 2, got {s:?}")))?;
        Study::try_from(v)
    }
}

impl std::fmt::Display for Study {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Available playback resolutions in vertical lines, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ladder(Vec<u32>);

impl Ladder {
    pub fn new(mut lines: Vec<u32>) -> Result<Self> {
        lines.sort_unstable();
        lines.dedup();
        if lines.is_empty() || lines[0] == 0 {
            return Err(Error::invalid(
                "a ladder needs at least one positive resolution",
            ));
        }
        Ok(Self(lines))
    }

    pub fn for_study(study: Study) -> Self {
        match study {
            Study::One => Self(vec![144, 240, 360, 480, 720, 1080]),
            Study::Two => Self(vec![360, 480, 720, 1080]),
        }
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn contains(&self, lines: u32) -> bool {
        self.0.binary_search(&lines).is_ok()
    }

    pub fn min(&self) -> u32 {
        self.0[0]
    }

    pub fn max(&self) -> u32 {
        *self.0.last().expect("ladder is non-empty")
    }

    /// Smallest rung at or above `raw`; the top rung when `raw` exceeds it.
    pub fn ceil(&self, raw: f64) -> u32 {
        self.0
            .iter()
            .copied()
            .find(|&r| f64::from(r) >= raw)
            .unwrap_or_else(|| self.max())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub study: Study,
    pub gender: Gender,
    pub age: u32,
    pub glasses: bool,
    pub device: String,
    pub bfi_answers: Option<[u8; 10]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub id: String,
    pub study: Study,
    pub si: f64,
    pub ti: f64,
    pub category: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionEvent {
    pub t_ms: u64,
    pub new_resolution: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewingSession {
    pub participant_id: String,
    pub video_id: String,
    pub study: Study,
    pub activity: Activity,
    pub start_resolution: u32,
    pub events: Vec<ResolutionEvent>,
}

impl ViewingSession {
    /// Resolution the session ended in: the last event's, or the start one.
    pub fn final_resolution(&self) -> u32 {
        self.events
            .last()
            .map_or(self.start_resolution, |e| e.new_resolution)
    }
}

/// Flattened modelling record for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub participant_id: String,
    pub video_id: String,
    pub study: Study,
    pub final_resolution: u32,
    pub activity: Activity,
    pub si: f64,
    pub ti: f64,
    pub gender: Gender,
    pub age: u32,
    pub glasses: bool,
    pub traits: Option<TraitProfile>,
}

/// A validated, immutable study dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    participants: Vec<Participant>,
    videos: Vec<VideoMeta>,
    sessions: Vec<ViewingSession>,
    participant_index: HashMap<String, usize>,
    video_index: HashMap<(Study, String), usize>,
}

fn row_err(file: &str, row: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        file: file.to_string(),
        row,
        message: message.into(),
    }
}

impl Dataset {
    /// Validates and indexes the parts. Row numbers in errors are 1-based
    /// positions within each list.
    pub fn from_parts(
        participants: Vec<Participant>,
        videos: Vec<VideoMeta>,
        sessions: Vec<ViewingSession>,
    ) -> Result<Self> {
        let mut participant_index = HashMap::new();
        for (i, p) in participants.iter().enumerate() {
            validate_participant(p).map_err(|m| row_err("participants", i + 1, m))?;
            if participant_index.insert(p.id.clone(), i).is_some() {
                return Err(row_err(
                    "participants",
                    i + 1,
                    format!("duplicate participant id {:?}", p.id),
                ));
            }
        }
        let mut video_index = HashMap::new();
        for (i, v) in videos.iter().enumerate() {
            if v.id.is_empty() {
                return Err(row_err("videos", i + 1, "empty video id"));
            }
            if !(v.si.is_finite() && v.si >= 0.0 && v.ti.is_finite() && v.ti >= 0.0) {
                return Err(row_err(
                    "videos",
                    i + 1,
                    format!("SI/TI must be finite and >= 0, got {}/{}", v.si, v.ti),
                ));
            }
            if video_index.insert((v.study, v.id.clone()), i).is_some() {
                return Err(row_err(
                    "videos",
                    i + 1,
                    format!("duplicate video id {:?} in study {}", v.id, v.study),
                ));
            }
        }
        let ds = Self {
            participants,
            videos,
            sessions: Vec::new(),
            participant_index,
            video_index,
        };
        let mut seen = HashSet::new();
        for (i, s) in sessions.iter().enumerate() {
            ds.check_session(s)
                .map_err(|m| row_err("sessions", i + 1, m))?;
            if !seen.insert((s.participant_id.clone(), s.video_id.clone())) {
                return Err(row_err(
                    "sessions",
                    i + 1,
                    format!(
                        "duplicate session for participant {:?} and video {:?}",
                        s.participant_id, s.video_id
                    ),
                ));
            }
        }
        Ok(Self { sessions, ..ds })
    }

    fn check_session(&self, s: &ViewingSession) -> std::result::Result<(), String> {
        let p = self
            .participant(&s.participant_id)
            .ok_or_else(|| format!("unknown participant id {:?}", s.participant_id))?;
        if p.study != s.study {
            return Err(format!(
                "session study {} differs from participant study {}",
                s.study, p.study
            ));
        }
        if self.video(s.study, &s.video_id).is_none() {
            return Err(format!(
                "unknown video id {:?} in study {}",
                s.video_id, s.study
            ));
        }
        let ladder = Ladder::for_study(s.study);
        if !ladder.contains(s.start_resolution) {
            return Err(format!(
                "start resolution {} not in ladder {:?}",
                s.start_resolution,
                ladder.values()
            ));
        }
        if s.study == Study::Two {
            if s.activity == Activity::InVehicle {
                return Err("study 2 has no in_vehicle sessions".into());
            }
            if s.start_resolution != ladder.min() {
                return Err(format!(
                    "study 2 sessions start at {}, got {}",
                    ladder.min(),
                    s.start_resolution
                ));
            }
        }
        let mut last: Option<u64> = None;
        for e in &s.events {
            if !ladder.contains(e.new_resolution) {
                return Err(format!(
                    "event resolution {} not in ladder {:?}",
                    e.new_resolution,
                    ladder.values()
                ));
            }
            if last.is_some_and(|t| e.t_ms <= t) {
                return Err(format!(
                    "event times not strictly increasing at t_ms={}",
                    e.t_ms
                ));
            }
            last = Some(e.t_ms);
        }
        Ok(())
    }

    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new(), Vec::new()).expect("empty dataset is valid")
    }

    pub fn participants(&self) -> &[Participant] {
        &self.participants
    }

    pub fn videos(&self) -> &[VideoMeta] {
        &self.videos
    }

    pub fn sessions(&self) -> &[ViewingSession] {
        &self.sessions
    }

    pub fn participant(&self, id: &str) -> Option<&Participant> {
        self.participant_index
            .get(id)
            .map(|&i| &self.participants[i])
    }

    pub fn video(&self, study: Study, id: &str) -> Option<&VideoMeta> {
        self.video_index
            .get(&(study, id.to_string()))
            .map(|&i| &self.videos[i])
    }

    pub fn sessions_of(&self, study: Study) -> impl Iterator<Item = &ViewingSession> {
        self.sessions.iter().filter(move |s| s.study == study)
    }

    pub fn has_study(&self, study: Study) -> bool {
        self.sessions.iter().any(|s| s.study == study)
    }

    /// Trait profiles for the participants of `study` who answered the BFI-10.
    /// Percentiles are ranked within that group.
    pub fn trait_profiles(&self, study: Study) -> BTreeMap<String, TraitProfile> {
        let scores: BTreeMap<String, TraitScores> = self
            .participants
            .iter()
            .filter(|p| p.study == study)
            .filter_map(|p| {
                let answers = p.bfi_answers?;
                Some((
                    p.id.clone(),
                    bfi10_score(&answers).expect("answers validated at construction"),
                ))
            })
            .collect();
        dominant_traits(&scores)
    }

    /// One row per session of `study`, in session order.
    pub fn analysis_rows(&self, study: Study) -> Vec<AnalysisRow> {
        let traits = self.trait_profiles(study);
        self.sessions_of(study)
            .map(|s| {
                let p = self
                    .participant(&s.participant_id)
                    .expect("validated reference");
                let v = self
                    .video(s.study, &s.video_id)
                    .expect("validated reference");
                AnalysisRow {
                    participant_id: s.participant_id.clone(),
                    video_id: s.video_id.clone(),
                    study: s.study,
                    final_resolution: s.final_resolution(),
                    activity: s.activity,
                    si: v.si,
                    ti: v.ti,
                    gender: p.gender,
                    age: p.age,
                    glasses: p.glasses,
                    traits: traits.get(&p.id).cloned(),
                }
            })
            .collect()
    }

    /// Like [`analysis_rows`](Self::analysis_rows) but every row must carry a
    /// trait profile; personality is never imputed.
    pub fn personality_rows(&self, study: Study) -> Result<Vec<AnalysisRow>> {
        let rows = self.analysis_rows(study);
        if rows.is_empty() {
            return Err(Error::invalid(format!("study {study} has no sessions")));
        }
        if let Some(r) = rows.iter().find(|r| r.traits.is_none()) {
            return Err(Error::invalid(format!(
                "participant {:?} in study {study} has no BFI-10 answers; personality analyses need them",
                r.participant_id
            )));
        }
        Ok(rows)
    }
}

fn validate_participant(p: &Participant) -> std::result::Result<(), String> {
    if p.id.is_empty() {
        return Err("empty participant id".into());
    }
    if let Some(a) = p.bfi_answers {
        if let Some((i, v)) = a.iter().enumerate().find(|(_, v)| !(1..=5).contains(*v)) {
            return Err(format!("BFI answer {} is {v}, expected 1..=5", i + 1));
        }
    }
    Ok(())
}
