//! Named analysis configurations with pinned formulas and reference levels.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::dataset::{Activity, AnalysisRow, Dataset, Study};
use crate::error::{Error, Result};
use crate::stats::{
    build_design, eta_squared, kruskal_wallis, lmm_fit, ols_fit, pearson, Formula, KwResult,
    LmmFit, OlsFit, References,
};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// `None` for offline presets.
    pub default_study: Option<Study>,
    /// Only this study is accepted.
    pub requires: Option<Study>,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "eta-checkpoints",
        description: "eta-squared from reported H, k and design-implied n",
        default_study: None,
        requires: None,
    },
    Preset {
        name: "kw-activity-study1",
        description: "Kruskal-Wallis of final resolution by activity",
        default_study: Some(Study::One),
        requires: Some(Study::One),
    },
    Preset {
        name: "kw-activity-study2",
        description: "Kruskal-Wallis of final resolution by activity",
        default_study: Some(Study::Two),
        requires: Some(Study::Two),
    },
    Preset {
        name: "kw-activity",
        description: "Kruskal-Wallis of final resolution by activity",
        default_study: Some(Study::One),
        requires: None,
    },
    Preset {
        name: "kw-video",
        description: "Kruskal-Wallis of final resolution by video",
        default_study: Some(Study::One),
        requires: None,
    },
    Preset {
        name: "kw-personality-study2",
        description: "Kruskal-Wallis of final resolution by dominant trait",
        default_study: Some(Study::Two),
        requires: Some(Study::Two),
    },
    Preset {
        name: "pearson-study1",
        description: "per-activity Pearson of per-video mean resolution vs SI and TI",
        default_study: Some(Study::One),
        requires: None,
    },
    Preset {
        name: "table4",
        description: "OLS: activity*si + activity*ti, activity reference still",
        default_study: Some(Study::One),
        requires: None,
    },
    Preset {
        name: "table5",
        description: "OLS with ordinal activity, demographics and dominant-trait code",
        default_study: Some(Study::Two),
        requires: Some(Study::Two),
    },
    Preset {
        name: "table5-percentiles",
        description: "OLS with ordinal activity, demographics and trait percentiles",
        default_study: Some(Study::Two),
        requires: Some(Study::Two),
    },
    Preset {
        name: "lmm-icc",
        description: "intercept-only mixed model grouped by dominant trait",
        default_study: Some(Study::Two),
        requires: Some(Study::Two),
    },
    Preset {
        name: "table6",
        description: "mixed model si*activity + si*gender + si*glasses, activity reference running",
        default_study: Some(Study::Two),
        requires: Some(Study::Two),
    },
];

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::invalid(format!(
            "unknown preset {name:?}; available: {}",
            names.join(", ")
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaCheckpoint {
    pub label: &'static str,
    pub h: f64,
    pub k: usize,
    pub n: usize,
    pub eta_squared: f64,
}

/// Reported H and group counts with n = participants x 12 videos
/// (22 in study 1, 23 in study 2).
pub const ETA_INPUTS: [(&str, f64, usize, usize); 4] = [
    ("activity-study1", 14.139, 4, 264),
    ("activity-study2", 19.817, 3, 276),
    ("video-study1", 65.328, 12, 264),
    ("video-study2", 79.045, 12, 276),
];

pub fn eta_checkpoints() -> Result<Vec<EtaCheckpoint>> {
    ETA_INPUTS
        .iter()
        .map(|&(label, h, k, n)| {
            Ok(EtaCheckpoint {
                label,
                h,
                k,
                n,
                eta_squared: eta_squared(h, k, n)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedKw {
    pub groups: Vec<String>,
    pub sizes: Vec<usize>,
    #[serde(flatten)]
    pub test: KwResult,
}

fn rows_of(ds: &Dataset, study: Study) -> Result<Vec<AnalysisRow>> {
    let rows = ds.analysis_rows(study);
    if rows.is_empty() {
        return Err(Error::invalid(format!(
            "dataset has no study {study} sessions"
        )));
    }
    Ok(rows)
}

fn grouped_kw(rows: &[AnalysisRow], key: impl Fn(&AnalysisRow) -> String) -> Result<GroupedKw> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(key(r))
            .or_default()
            .push(f64::from(r.final_resolution));
    }
    let values: Vec<&Vec<f64>> = groups.values().collect();
    let test = kruskal_wallis(&values)?;
    Ok(GroupedKw {
        groups: groups.keys().cloned().collect(),
        sizes: values.iter().map(|v| v.len()).collect(),
        test,
    })
}

pub fn kw_by_activity(ds: &Dataset, study: Study) -> Result<GroupedKw> {
    grouped_kw(&rows_of(ds, study)?, |r| r.activity.to_string())
}

pub fn kw_by_video(ds: &Dataset, study: Study) -> Result<GroupedKw> {
    grouped_kw(&rows_of(ds, study)?, |r| r.video_id.clone())
}

pub fn kw_by_personality(ds: &Dataset, study: Study) -> Result<GroupedKw> {
    let rows = ds.personality_rows(study)?;
    grouped_kw(&rows, |r| {
        r.traits.as_ref().expect("checked").dominant.to_string()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PearsonRow {
    pub activity: Activity,
    pub n_videos: usize,
    /// `None` when either series is constant or fewer than 2 videos exist.
    pub resolution_vs_si: Option<f64>,
    pub resolution_vs_ti: Option<f64>,
}

/// For each activity: mean final resolution per video against that video's SI and TI.
pub fn pearson_by_activity(ds: &Dataset, study: Study) -> Result<Vec<PearsonRow>> {
    let rows = rows_of(ds, study)?;
    let mut out = Vec::new();
    for a in Activity::ALL {
        let mut per_video: BTreeMap<&str, (f64, f64, Vec<f64>)> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.activity == a) {
            per_video
                .entry(&r.video_id)
                .or_insert((r.si, r.ti, Vec::new()))
                .2
                .push(f64::from(r.final_resolution));
        }
        if per_video.is_empty() {
            continue;
        }
        let means: Vec<f64> = per_video
            .values()
            .map(|(_, _, v)| crate::numeric::mean(v))
            .collect();
        let si: Vec<f64> = per_video.values().map(|v| v.0).collect();
        let ti: Vec<f64> = per_video.values().map(|v| v.1).collect();
        out.push(PearsonRow {
            activity: a,
            n_videos: means.len(),
            resolution_vs_si: pearson(&means, &si).ok(),
            resolution_vs_ti: pearson(&means, &ti).ok(),
        });
    }
    Ok(out)
}

fn refs(pairs: &[(&str, &str)]) -> References {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub const TABLE4_FORMULA: &str = "resolution ~ activity*si + activity*ti";
pub const TABLE5_FORMULA: &str =
    "resolution ~ activity_ordinal + si + ti + gender + age + glasses + dominant_code";
pub const TABLE5_PERCENTILE_FORMULA: &str = "resolution ~ activity_ordinal + si + ti + gender + age + glasses + extraversion + agreeableness + openness + conscientiousness + neuroticism";
pub const TABLE6_FORMULA: &str = "resolution ~ si*activity + si*gender + si*glasses";

pub fn table4(ds: &Dataset, study: Study) -> Result<OlsFit> {
    let rows = rows_of(ds, study)?;
    ols_fit(&build_design(
        &rows,
        &Formula::parse(TABLE4_FORMULA)?,
        &refs(&[("activity", "still")]),
    )?)
}

pub fn table5(ds: &Dataset, percentiles: bool) -> Result<OlsFit> {
    let rows = ds.personality_rows(Study::Two)?;
    let f = if percentiles {
        TABLE5_PERCENTILE_FORMULA
    } else {
        TABLE5_FORMULA
    };
    ols_fit(&build_design(
        &rows,
        &Formula::parse(f)?,
        &refs(&[("gender", "female")]),
    )?)
}

fn dominant_groups(rows: &[AnalysisRow]) -> Vec<String> {
    rows.iter()
        .map(|r| {
            r.traits
                .as_ref()
                .expect("personality rows")
                .dominant
                .to_string()
        })
        .collect()
}

pub fn lmm_icc(ds: &Dataset) -> Result<LmmFit> {
    let rows = ds.personality_rows(Study::Two)?;
    let design = build_design(
        &rows,
        &Formula::parse("resolution ~ 1")?,
        &References::new(),
    )?;
    lmm_fit(&design, &dominant_groups(&rows))
}

pub fn table6(ds: &Dataset) -> Result<LmmFit> {
    let rows = ds.personality_rows(Study::Two)?;
    let design = build_design(
        &rows,
        &Formula::parse(TABLE6_FORMULA)?,
        &refs(&[("activity", "running"), ("gender", "female")]),
    )?;
    lmm_fit(&design, &dominant_groups(&rows))
}

/// Runs a preset and returns `{preset, study, result}`.
pub fn run_preset(name: &str, ds: Option<&Dataset>, study: Option<Study>) -> Result<Value> {
    let preset = find(name)?;
    if let (Some(req), Some(s)) = (preset.requires, study) {
        if req != s {
            return Err(Error::invalid(format!(
                "preset {name} runs on study {req} only{}",
                if req == Study::Two {
                    " (it needs personality data)"
                } else {
                    ""
                }
            )));
        }
    }
    let Some(study) = study.or(preset.default_study) else {
        return Ok(json!({ "preset": name, "result": eta_checkpoints()? }));
    };
    let ds = ds.ok_or_else(|| Error::invalid(format!("preset {name} needs a dataset")))?;
    if !ds.has_study(study) {
        return Err(Error::invalid(format!(
            "preset {name} needs study {study} sessions, none in the dataset"
        )));
    }
    let result = match name {
        "kw-activity-study1" | "kw-activity-study2" | "kw-activity" => {
            serde_json::to_value(kw_by_activity(ds, study)?)?
        }
        "kw-video" => serde_json::to_value(kw_by_video(ds, study)?)?,
        "kw-personality-study2" => serde_json::to_value(kw_by_personality(ds, study)?)?,
        "pearson-study1" => serde_json::to_value(pearson_by_activity(ds, study)?)?,
        "table4" => serde_json::to_value(table4(ds, study)?)?,
        "table5" => serde_json::to_value(table5(ds, false)?)?,
        "table5-percentiles" => serde_json::to_value(table5(ds, true)?)?,
        "lmm-icc" => serde_json::to_value(lmm_icc(ds)?)?,
        "table6" => serde_json::to_value(table6(ds)?)?,
        other => unreachable!("preset {other} listed but not dispatched"),
    };
    Ok(json!({ "preset": name, "study": study.number(), "result": result }))
}
