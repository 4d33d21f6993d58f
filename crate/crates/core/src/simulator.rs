//! Scripted playback under a resolution model, and replay of recorded
//! sessions under alternative policies.
//!
//! Per-context-event prediction is an extrapolation: the study models predict
//! one final resolution per session.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Activity, AnalysisRow, Dataset, Gender, Ladder, Study};
use crate::energy::{estimate_energy, EnergyCalibration, PlaybackTrace, Segment};
use crate::error::{Error, Result};
use crate::predictor::{FeatureRow, Features, Personality, SavedModel};

/// Default minimum time between two switches.
pub const DEFAULT_MIN_DWELL_S: f64 = 10.0;
/// Default replayed session length.
pub const DEFAULT_SESSION_S: f64 = 60.0;

/// Anything that maps a context to a continuous resolution in lines.
pub trait ResolutionModel: Sync {
    fn predict_lines(&self, features: &Features) -> Result<f64>;
}

impl ResolutionModel for SavedModel {
    fn predict_lines(&self, features: &Features) -> Result<f64> {
        self.predict(features)
    }
}

impl<F: Fn(&Features) -> f64 + Sync> ResolutionModel for F {
    fn predict_lines(&self, features: &Features) -> Result<f64> {
        Ok(self(features))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptVideo {
    pub si: f64,
    pub ti: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextEvent {
    pub t_s: f64,
    pub activity: Activity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptViewer {
    pub gender: Gender,
    pub age: u32,
    pub glasses: bool,
    #[serde(default)]
    pub personality: Option<Personality>,
}

/// JSON session script.
///
/// ```json
/// {
///   "video": {"si": 62.0, "ti": 14.0, "duration_s": 60},
///   "timeline": [{"t_s": 0, "activity": "still"}, {"t_s": 25, "activity": "walking"}],
///   "viewer": {"gender": "female", "age": 27, "glasses": false},
///   "ladder": [360, 480, 720, 1080]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScript {
    pub video: ScriptVideo,
    pub timeline: Vec<ContextEvent>,
    pub viewer: ScriptViewer,
    pub ladder: Vec<u32>,
}

impl SessionScript {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: SessionScript = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.video.duration_s;
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::invalid(format!(
                "video duration must be positive, got {d}"
            )));
        }
        if !(self.video.si.is_finite() && self.video.ti.is_finite()) {
            return Err(Error::invalid("video SI/TI must be finite"));
        }
        let first = self
            .timeline
            .first()
            .ok_or_else(|| Error::invalid("timeline is empty"))?;
        if first.t_s != 0.0 {
            return Err(Error::invalid(format!(
                "timeline must start at t=0, starts at {}",
                first.t_s
            )));
        }
        for w in self.timeline.windows(2) {
            if w[1].t_s.partial_cmp(&w[0].t_s) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::invalid(format!(
                    "timeline times must increase strictly ({} then {})",
                    w[0].t_s, w[1].t_s
                )));
            }
        }
        if let Some(e) = self.timeline.iter().find(|e| e.t_s >= d) {
            return Err(Error::invalid(format!(
                "event at {} s is not before the end ({d} s)",
                e.t_s
            )));
        }
        Ladder::new(self.ladder.clone())?;
        Ok(())
    }

    pub fn features(&self, activity: Activity) -> Features {
        Features {
            activity,
            si: self.video.si,
            ti: self.video.ti,
            gender: self.viewer.gender,
            age: self.viewer.age,
            glasses: self.viewer.glasses,
            personality: self.viewer.personality.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub t_s: f64,
    pub activity: Activity,
    pub raw_prediction: f64,
    /// Ladder rung the prediction maps to.
    pub chosen: u32,
    /// Whether playback switched to (or started at) `chosen` here.
    pub applied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub resolution: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRun {
    pub segments: Vec<TimedSegment>,
    pub decisions: Vec<PolicyDecision>,
}

impl SessionRun {
    pub fn trace(&self) -> PlaybackTrace {
        PlaybackTrace {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    resolution: s.resolution,
                    duration_s: s.end_s - s.start_s,
                })
                .collect(),
        }
    }

    /// Decision log as CSV with columns `t_s,activity,raw_prediction,chosen`.
    pub fn write_decisions_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t_s", "activity", "raw_prediction", "chosen"])?;
        for d in &self.decisions {
            out.write_record([
                crate::json::format_g17(d.t_s),
                d.activity.to_string(),
                crate::json::format_g17(d.raw_prediction),
                d.chosen.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Predicts at t=0 and at every context event, rounds up to the ladder, and
/// switches only when `min_dwell_s` has passed since the last switch.
/// Suppressed switches are not deferred.
pub fn run_session(
    script: &SessionScript,
    model: &dyn ResolutionModel,
    min_dwell_s: f64,
) -> Result<SessionRun> {
    script.validate()?;
    if min_dwell_s.is_nan() || min_dwell_s < 0.0 {
        return Err(Error::invalid(format!(
            "min_dwell_s must be >= 0, got {min_dwell_s}"
        )));
    }
    let ladder = Ladder::new(script.ladder.clone())?;
    let mut decisions = Vec::with_capacity(script.timeline.len());
    let mut segments: Vec<TimedSegment> = Vec::new();
    let mut last_switch = 0.0;
    for ev in &script.timeline {
        let raw = model.predict_lines(&script.features(ev.activity))?;
        if !raw.is_finite() {
            return Err(Error::invalid(format!(
                "model produced a non-finite prediction at t={}",
                ev.t_s
            )));
        }
        let chosen = ladder.ceil(raw);
        let applied = match segments.last_mut() {
            None => true,
            Some(cur) if cur.resolution != chosen && ev.t_s - last_switch >= min_dwell_s => {
                cur.end_s = ev.t_s;
                true
            }
            Some(_) => false,
        };
        if applied {
            segments.push(TimedSegment {
                start_s: ev.t_s,
                end_s: script.video.duration_s,
                resolution: chosen,
            });
            last_switch = ev.t_s;
        }
        decisions.push(PolicyDecision {
            t_s: ev.t_s,
            activity: ev.activity,
            raw_prediction: raw,
            chosen,
            applied,
        });
    }
    Ok(SessionRun {
        segments,
        decisions,
    })
}

/// How a recorded session is replayed.
#[derive(Clone, Copy)]
pub enum ReplayPolicy<'a> {
    /// The session's final resolution for its whole length.
    Observed,
    /// Start resolution, then each logged switch at its timestamp.
    ObservedEvents,
    /// One model prediction per session, rounded up to the study ladder.
    Model(&'a dyn ResolutionModel),
    Fixed(u32),
}

impl ReplayPolicy<'_> {
    pub fn name(&self) -> String {
        match self {
            ReplayPolicy::Observed => "observed".into(),
            ReplayPolicy::ObservedEvents => "observed_events".into(),
            ReplayPolicy::Model(_) => "model".into(),
            ReplayPolicy::Fixed(r) => format!("fixed_{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEnergy {
    pub participant_id: String,
    pub video_id: String,
    pub activity: Activity,
    pub policy_mwh: f64,
    pub baseline_mwh: f64,
    pub savings_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub policy: String,
    pub baseline: String,
    pub duration_s: f64,
    pub sessions: Vec<SessionEnergy>,
    pub total_policy_mwh: f64,
    pub total_baseline_mwh: f64,
    /// Savings of the summed policy energy against the summed baseline.
    pub aggregate_savings_percent: f64,
}

fn savings(base: f64, policy: f64) -> f64 {
    if base > 0.0 {
        100.0 * (base - policy) / base
    } else {
        0.0
    }
}

/// Trace of a recorded session under `policy`, clipped to `duration_s`.
pub fn replay_trace(
    row: &AnalysisRow,
    session_events: Option<(u32, &[crate::dataset::ResolutionEvent])>,
    policy: ReplayPolicy<'_>,
    duration_s: f64,
) -> Result<PlaybackTrace> {
    let ladder = Ladder::for_study(row.study);
    match policy {
        ReplayPolicy::Observed => PlaybackTrace::constant(row.final_resolution, duration_s),
        ReplayPolicy::Fixed(r) => PlaybackTrace::constant(r, duration_s),
        ReplayPolicy::Model(m) => {
            let raw = m.predict_lines(&FeatureRow::from(row).features)?;
            PlaybackTrace::constant(ladder.ceil(raw), duration_s)
        }
        ReplayPolicy::ObservedEvents => {
            let (start, events) =
                session_events.ok_or_else(|| Error::invalid("event replay needs the session"))?;
            let mut segs: Vec<Segment> = Vec::new();
            let (mut t, mut res) = (0.0, start);
            for e in events {
                let te = (e.t_ms as f64 / 1000.0).min(duration_s);
                if te > t {
                    segs.push(Segment {
                        resolution: res,
                        duration_s: te - t,
                    });
                    t = te;
                }
                res = e.new_resolution;
            }
            if duration_s > t {
                segs.push(Segment {
                    resolution: res,
                    duration_s: duration_s - t,
                });
            }
            PlaybackTrace::new(segs)
        }
    }
}

/// Replays every session of `study` under `policy` and a fixed baseline.
pub fn replay_study(
    dataset: &Dataset,
    study: Study,
    policy: ReplayPolicy<'_>,
    cal: &EnergyCalibration,
    baseline_resolution: u32,
    duration_s: f64,
) -> Result<ReplayReport> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::invalid(format!(
            "session duration must be positive, got {duration_s}"
        )));
    }
    let ladder = Ladder::for_study(study);
    let mut needed: Vec<u32> = ladder.values().to_vec();
    needed.push(baseline_resolution);
    if let ReplayPolicy::Fixed(r) = policy {
        needed.push(r);
    }
    if let Some(r) = needed.iter().find(|r| !cal.entries.contains_key(r)) {
        return Err(Error::invalid(format!(
            "calibration has no entry for {r}p used by study {study}"
        )));
    }
    let sessions: Vec<_> = dataset.sessions_of(study).collect();
    let rows = dataset.analysis_rows(study);
    if rows.is_empty() {
        return Err(Error::invalid(format!("study {study} has no sessions")));
    }
    let mut results = rows
        .par_iter()
        .zip(sessions.par_iter())
        .enumerate()
        .map(|(i, (row, s))| {
            let trace = replay_trace(
                row,
                Some((s.start_resolution, &s.events)),
                policy,
                duration_s,
            )?;
            let policy_mwh = estimate_energy(&trace, cal)?;
            let baseline_mwh = estimate_energy(
                &PlaybackTrace::constant(baseline_resolution, duration_s)?,
                cal,
            )?;
            Ok((
                (
                    row.participant_id.clone(),
                    row.video_id.clone(),
                    row.activity,
                    i,
                ),
                SessionEnergy {
                    participant_id: row.participant_id.clone(),
                    video_id: row.video_id.clone(),
                    activity: row.activity,
                    policy_mwh,
                    baseline_mwh,
                    savings_percent: savings(baseline_mwh, policy_mwh),
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| a.0.cmp(&b.0));
    let sessions: Vec<SessionEnergy> = results.into_iter().map(|(_, s)| s).collect();
    let total_policy_mwh: f64 = sessions.iter().map(|s| s.policy_mwh).sum();
    let total_baseline_mwh: f64 = sessions.iter().map(|s| s.baseline_mwh).sum();
    Ok(ReplayReport {
        policy: policy.name(),
        baseline: ReplayPolicy::Fixed(baseline_resolution).name(),
        duration_s,
        sessions,
        total_policy_mwh,
        total_baseline_mwh,
        aggregate_savings_percent: savings(total_baseline_mwh, total_policy_mwh),
    })
}

/// Per-policy energy of one script, for [`crate::energy::compare_policies`].
pub fn script_traces(
    script: &SessionScript,
    model: &dyn ResolutionModel,
    min_dwell_s: f64,
    fixed: &[u32],
) -> Result<BTreeMap<String, PlaybackTrace>> {
    let mut out = BTreeMap::new();
    out.insert(
        "model".to_string(),
        run_session(script, model, min_dwell_s)?.trace(),
    );
    for &r in fixed {
        out.insert(
            ReplayPolicy::Fixed(r).name(),
            PlaybackTrace::constant(r, script.video.duration_s)?,
        );
    }
    Ok(out)
}
