//! Spatial (SI) and temporal (TI) information indices.
//!
//! SI of a frame is the population standard deviation of its Sobel gradient
//! magnitudes over the interior pixels (the one-pixel border is dropped, not
//! padded). TI of a frame pair is the population standard deviation of the
//! signed pixel differences. Convolutions and differences are exact integer
//! arithmetic; only the deviations are floating point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LumaFrame, VideoSequence};
use crate::error::{Error, Result};
use crate::numeric::{mean, pairwise_sum};

/// Gradient magnitudes of the `(width-2) x (height-2)` interior, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

pub fn sobel_magnitude(frame: &LumaFrame) -> Result<GradientField> {
    let (w, h) = (frame.width(), frame.height());
    if w < 3 || h < 3 {
        return Err(Error::invalid(format!(
            "Sobel needs at least 3x3 pixels, frame is {w}x{h}"
        )));
    }
    let px = |x: usize, y: usize| i32::from(frame.at(x, y));
    let mut values = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
            let gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
            values.push(f64::from(gx * gx + gy * gy).sqrt());
        }
    }
    Ok(GradientField {
        width: w - 2,
        height: h - 2,
        values,
    })
}

pub fn frame_si(frame: &LumaFrame) -> Result<f64> {
    let field = sobel_magnitude(frame)?;
    let m = mean(&field.values);
    let dev: Vec<f64> = field.values.iter().map(|v| (v - m) * (v - m)).collect();
    Ok((pairwise_sum(&dev) / field.values.len() as f64).sqrt())
}

pub fn frame_ti(prev: &LumaFrame, curr: &LumaFrame) -> Result<f64> {
    if prev.width() != curr.width() || prev.height() != curr.height() {
        return Err(Error::invalid(format!(
            "TI needs equal frame sizes, got {}x{} and {}x{}",
            prev.width(),
            prev.height(),
            curr.width(),
            curr.height()
        )));
    }
    let (mut sum, mut sum_sq) = (0i64, 0i64);
    for (&a, &b) in prev.samples().iter().zip(curr.samples()) {
        let d = i64::from(b) - i64::from(a);
        sum += d;
        sum_sq += d * d;
    }
    // N^2 * variance = N * sum(d^2) - (sum d)^2, exact in integers
    let n = prev.samples().len() as i128;
    let scaled = n * i128::from(sum_sq) - i128::from(sum) * i128::from(sum);
    Ok((scaled as f64).sqrt() / n as f64)
}

/// Temporal aggregation of the per-frame series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "max" => Ok(Self::Max),
            _ => Err(Error::invalid(format!(
                "aggregation must be mean or max, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiTiProfile {
    pub si_series: Vec<f64>,
    pub ti_series: Vec<f64>,
    pub si_max: f64,
    pub si_mean: f64,
    /// `None` when the sequence has a single frame: TI needs a pair.
    pub ti_max: Option<f64>,
    pub ti_mean: Option<f64>,
}

impl SiTiProfile {
    pub fn si(&self, agg: Aggregation) -> f64 {
        match agg {
            Aggregation::Mean => self.si_mean,
            Aggregation::Max => self.si_max,
        }
    }

    pub fn ti(&self, agg: Aggregation) -> Option<f64> {
        match agg {
            Aggregation::Mean => self.ti_mean,
            Aggregation::Max => self.ti_max,
        }
    }

    /// One record per frame; `ti` of frame `n` compares it with frame `n-1`.
    pub fn frame_records(&self) -> Vec<FrameRecord> {
        self.si_series
            .iter()
            .enumerate()
            .map(|(i, &si)| FrameRecord {
                frame_index: i,
                si,
                ti: i.checked_sub(1).map(|j| self.ti_series[j]),
            })
            .collect()
    }

    pub fn summary(&self, thresholds: &SiTiThresholds, agg: Aggregation) -> Result<SiTiSummary> {
        let category = match self.ti(agg) {
            Some(_) => Some(classify_siti(self, thresholds, agg)?.label),
            None => None,
        };
        Ok(SiTiSummary {
            si_max: self.si_max,
            si_mean: self.si_mean,
            ti_max: self.ti_max,
            ti_mean: self.ti_mean,
            aggregation: agg,
            category,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub si: f64,
    pub ti: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiTiSummary {
    pub si_max: f64,
    pub si_mean: f64,
    pub ti_max: Option<f64>,
    pub ti_mean: Option<f64>,
    pub aggregation: Aggregation,
    pub category: Option<SiTiLabel>,
}

fn series_max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Per-frame SI and per-pair TI with max and mean aggregates.
///
/// Frames are processed in parallel; the aggregates use pairwise summation so
/// they do not depend on the worker count.
pub fn compute_siti(seq: &VideoSequence) -> Result<SiTiProfile> {
    let frames = seq.frames();
    let si_series = frames
        .par_iter()
        .map(frame_si)
        .collect::<Result<Vec<_>>>()?;
    let ti_series = frames
        .par_windows(2)
        .map(|pair| frame_ti(&pair[0], &pair[1]))
        .collect::<Result<Vec<_>>>()?;
    let (ti_max, ti_mean) = if ti_series.is_empty() {
        (None, None)
    } else {
        (
            Some(series_max(&ti_series)),
            Some(mean(&ti_series).min(series_max(&ti_series))),
        )
    };
    Ok(SiTiProfile {
        si_max: series_max(&si_series),
        si_mean: mean(&si_series).min(series_max(&si_series)),
        si_series,
        ti_series,
        ti_max,
        ti_mean,
    })
}

/// Everything the `siti` command reports for one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiTiReport {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub frame_rate: f64,
    pub thresholds: SiTiThresholds,
    pub summary: SiTiSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_frame: Option<Vec<FrameRecord>>,
}

pub fn siti_report(
    seq: &VideoSequence,
    thresholds: &SiTiThresholds,
    agg: Aggregation,
    per_frame: bool,
) -> Result<SiTiReport> {
    let profile = compute_siti(seq)?;
    Ok(SiTiReport {
        width: seq.width(),
        height: seq.height(),
        frames: seq.len(),
        frame_rate: seq.frame_rate(),
        thresholds: *thresholds,
        summary: profile.summary(thresholds, agg)?,
        per_frame: per_frame.then(|| profile.frame_records()),
    })
}

/// Category boundaries: "low" is `<= low`, "high" is `>= high`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiTiThresholds {
    pub si_low: f64,
    pub si_high: f64,
    pub ti_low: f64,
    pub ti_high: f64,
}

impl Default for SiTiThresholds {
    fn default() -> Self {
        Self {
            si_low: 40.0,
            si_high: 110.0,
            ti_low: 10.0,
            ti_high: 25.0,
        }
    }
}

impl SiTiThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.si_low < self.si_high && self.ti_low < self.ti_high) {
            return Err(Error::invalid(format!(
                "thresholds not well ordered: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiTiLabel {
    LowSiLowTi,
    LowSiHighTi,
    HighSiLowTi,
    HighSiHighTi,
    Mid,
}

impl std::fmt::Display for SiTiLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::LowSiLowTi => "LowSiLowTi",
            Self::LowSiHighTi => "LowSiHighTi",
            Self::HighSiLowTi => "HighSiLowTi",
            Self::HighSiHighTi => "HighSiHighTi",
            Self::Mid => "Mid",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiTiCategory {
    pub label: SiTiLabel,
    pub thresholds: SiTiThresholds,
}

/// Classifies an (SI, TI) pair. Anything strictly inside a (low, high) band is `Mid`.
pub fn classify(si: f64, ti: f64, thresholds: &SiTiThresholds) -> Result<SiTiCategory> {
    thresholds.validate()?;
    let si_high = if si <= thresholds.si_low {
        Some(false)
    } else if si >= thresholds.si_high {
        Some(true)
    } else {
        None
    };
    let ti_high = if ti <= thresholds.ti_low {
        Some(false)
    } else if ti >= thresholds.ti_high {
        Some(true)
    } else {
        None
    };
    let label = match (si_high, ti_high) {
        (Some(false), Some(false)) => SiTiLabel::LowSiLowTi,
        (Some(false), Some(true)) => SiTiLabel::LowSiHighTi,
        (Some(true), Some(false)) => SiTiLabel::HighSiLowTi,
        (Some(true), Some(true)) => SiTiLabel::HighSiHighTi,
        _ => SiTiLabel::Mid,
    };
    Ok(SiTiCategory {
        label,
        thresholds: *thresholds,
    })
}

pub fn classify_siti(
    profile: &SiTiProfile,
    thresholds: &SiTiThresholds,
    agg: Aggregation,
) -> Result<SiTiCategory> {
    let ti = profile
        .ti(agg)
        .ok_or_else(|| Error::invalid("TI is undefined for a single-frame sequence"))?;
    classify(profile.si(agg), ti, thresholds)
}
