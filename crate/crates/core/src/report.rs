//! Tidy CSV tables for plotting. No rendering.

use std::io::Write;

use serde::Serialize;

use crate::dataset::{Activity, Dataset, Gender, Study};
use crate::error::{Error, Result};
use crate::json::format_g17;

pub const FIGURES: [&str; 3] = ["fig3", "fig4", "fig9-11"];

/// Final resolution of one session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalResolutionRow {
    pub study: u8,
    pub activity: Activity,
    pub participant_id: String,
    pub video_id: String,
    pub final_resolution: u32,
}

/// One upward or downward switch within a session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchRow {
    pub study: u8,
    pub activity: Activity,
    pub participant_id: String,
    pub video_id: String,
    pub t_s: String,
    pub from_resolution: u32,
    pub to_resolution: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionSiRow {
    pub study: u8,
    pub activity: Activity,
    pub participant_id: String,
    pub video_id: String,
    pub si: String,
    pub final_resolution: u32,
    pub gender: Gender,
    /// Empty when the participant has no personality data.
    pub dominant_trait: String,
}

pub fn final_resolutions(ds: &Dataset, study: Study) -> Vec<FinalResolutionRow> {
    ds.analysis_rows(study)
        .into_iter()
        .map(|r| FinalResolutionRow {
            study: study.number(),
            activity: r.activity,
            participant_id: r.participant_id,
            video_id: r.video_id,
            final_resolution: r.final_resolution,
        })
        .collect()
}

pub fn switch_times(ds: &Dataset, study: Study) -> Vec<SwitchRow> {
    let mut out = Vec::new();
    for s in ds.sessions_of(study) {
        let mut from = s.start_resolution;
        for e in &s.events {
            out.push(SwitchRow {
                study: study.number(),
                activity: s.activity,
                participant_id: s.participant_id.clone(),
                video_id: s.video_id.clone(),
                t_s: format_g17(e.t_ms as f64 / 1000.0),
                from_resolution: from,
                to_resolution: e.new_resolution,
            });
            from = e.new_resolution;
        }
    }
    out
}

pub fn resolution_vs_si(ds: &Dataset, study: Study) -> Vec<ResolutionSiRow> {
    ds.analysis_rows(study)
        .into_iter()
        .map(|r| ResolutionSiRow {
            study: study.number(),
            activity: r.activity,
            participant_id: r.participant_id,
            video_id: r.video_id,
            si: format_g17(r.si),
            final_resolution: r.final_resolution,
            gender: r.gender,
            dominant_trait: r.traits.map(|t| t.dominant.to_string()).unwrap_or_default(),
        })
        .collect()
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T], header: &[&str]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the CSV for `figure` (one of [`FIGURES`]).
pub fn write_figure<W: Write>(ds: &Dataset, study: Study, figure: &str, w: W) -> Result<()> {
    match figure {
        "fig3" => write_rows(
            w,
            &final_resolutions(ds, study),
            &[
                "study",
                "activity",
                "participant_id",
                "video_id",
                "final_resolution",
            ],
        ),
        "fig4" => write_rows(
            w,
            &switch_times(ds, study),
            &[
                "study",
                "activity",
                "participant_id",
                "video_id",
                "t_s",
                "from_resolution",
                "to_resolution",
            ],
        ),
        "fig9-11" => write_rows(
            w,
            &resolution_vs_si(ds, study),
            &[
                "study",
                "activity",
                "participant_id",
                "video_id",
                "si",
                "final_resolution",
                "gender",
                "dominant_trait",
            ],
        ),
        other => Err(Error::invalid(format!(
            "unknown figure {other:?}; available: {}",
            FIGURES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig3_has_one_row_per_session() {
        let ds = crate::synth::synthetic_dataset(&Default::default()).unwrap();
        let mut buf = Vec::new();
        write_figure(&ds, Study::One, "fig3", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 264);
        assert!(text.starts_with("study,activity,participant_id,video_id,final_resolution\n"));
    }
}
