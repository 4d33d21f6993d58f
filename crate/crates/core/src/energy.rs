//! Playback energy from a per-resolution current calibration.
//!
//! Calibration file layout:
//!
//! ```text
//! # voltage: 4.2
//! # codec_tag: hw-h264
//! # baseline_current_ma: 0      (optional idle draw added to every segment)
//! resolution,current_ma
//! 360,300
//! 720,380
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCalibration {
    pub codec_tag: String,
    pub voltage: f64,
    /// Constant draw added to every segment, in mA.
    pub baseline_current_ma: f64,
    /// Resolution (lines) to average current (mA).
    pub entries: BTreeMap<u32, f64>,
}

impl EnergyCalibration {
    pub fn new(
        codec_tag: impl Into<String>,
        voltage: f64,
        entries: BTreeMap<u32, f64>,
    ) -> Result<Self> {
        let cal = EnergyCalibration {
            codec_tag: codec_tag.into(),
            voltage,
            baseline_current_ma: 0.0,
            entries,
        };
        cal.validate()?;
        Ok(cal)
    }

    pub fn with_baseline(mut self, current_ma: f64) -> Result<Self> {
        self.baseline_current_ma = current_ma;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.voltage > 0.0 && self.voltage.is_finite()) {
            return Err(Error::invalid(format!(
                "voltage must be positive, got {}",
                self.voltage
            )));
        }
        if !(self.baseline_current_ma >= 0.0 && self.baseline_current_ma.is_finite()) {
            return Err(Error::invalid(format!(
                "baseline current must be >= 0, got {}",
                self.baseline_current_ma
            )));
        }
        if self.entries.is_empty() {
            return Err(Error::invalid("calibration has no entries"));
        }
        for (&r, &c) in &self.entries {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!(
                    "current for {r}p must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }

    /// Pairs of adjacent resolutions where the current does not increase.
    pub fn monotonicity_violations(&self) -> Vec<(u32, u32)> {
        let v: Vec<(&u32, &f64)> = self.entries.iter().collect();
        v.windows(2)
            .filter(|w| w[1].1 <= w[0].1)
            .map(|w| (*w[0].0, *w[1].0))
            .collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violations().is_empty()
    }

    pub fn current_ma(&self, resolution: u32) -> Result<f64> {
        self.entries
            .get(&resolution)
            .copied()
            .ok_or_else(|| Error::invalid(format!("calibration has no entry for {resolution}p")))
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut header = BTreeMap::new();
        let mut body = String::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once(':') {
                    header.insert(k.trim().to_ascii_lowercase(), (i + 1, v.trim().to_string()));
                }
                continue;
            }
            body.push_str(&line);
            body.push('\n');
        }
        let num = |key: &str| -> Result<Option<f64>> {
            header
                .get(key)
                .map(|(line, v)| {
                    v.parse::<f64>().map_err(|_| {
                        Error::invalid(format!("line {line}: {key} {v:?} is not a number"))
                    })
                })
                .transpose()
        };
        let voltage = num("voltage")?
            .ok_or_else(|| Error::invalid("calibration is missing a '# voltage:' line"))?;
        let baseline = num("baseline_current_ma")?.unwrap_or(0.0);
        let codec_tag = header
            .get("codec_tag")
            .map(|(_, v)| v.clone())
            .unwrap_or_default();

        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::invalid(format!("calibration header lacks column {name:?}")))
        };
        let (ri, ci) = (col("resolution")?, col("current_ma")?);
        let mut entries = BTreeMap::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let res: u32 = field(ri)
                .trim_end_matches(['p', 'P'])
                .parse()
                .map_err(|_| {
                    Error::invalid(format!(
                        "calibration row {}: bad resolution {:?}",
                        row + 1,
                        field(ri)
                    ))
                })?;
            let cur: f64 = field(ci).parse().map_err(|_| {
                Error::invalid(format!(
                    "calibration row {}: bad current {:?}",
                    row + 1,
                    field(ci)
                ))
            })?;
            if entries.insert(res, cur).is_some() {
                return Err(Error::invalid(format!(
                    "calibration row {}: duplicate resolution {res}",
                    row + 1
                )));
            }
        }
        let cal = EnergyCalibration {
            codec_tag,
            voltage,
            baseline_current_ma: baseline,
            entries,
        };
        cal.validate()?;
        Ok(cal)
    }

    pub fn to_writer<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# voltage: {}", self.voltage)?;
        writeln!(w, "# codec_tag: {}", self.codec_tag)?;
        if self.baseline_current_ma != 0.0 {
            writeln!(w, "# baseline_current_ma: {}", self.baseline_current_ma)?;
        }
        writeln!(w, "resolution,current_ma")?;
        for (r, c) in &self.entries {
            writeln!(w, "{r},{c}")?;
        }
        Ok(())
    }
}

/// Reads a calibration file and logs a warning if it is non-monotone.
pub fn load_calibration(path: &Path) -> Result<EnergyCalibration> {
    let cal = EnergyCalibration::from_reader(std::fs::File::open(path)?)?;
    for (a, b) in cal.monotonicity_violations() {
        log::warn!(
            "calibration {}: current does not increase from {a}p to {b}p",
            path.display()
        );
    }
    Ok(cal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub resolution: u32,
    pub duration_s: f64,
}

/// Consecutive playback segments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaybackTrace {
    pub segments: Vec<Segment>,
}

impl PlaybackTrace {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if let Some(s) = segments
            .iter()
            .find(|s| !(s.duration_s > 0.0 && s.duration_s.is_finite()))
        {
            return Err(Error::invalid(format!(
                "segment durations must be positive, got {}",
                s.duration_s
            )));
        }
        Ok(PlaybackTrace { segments })
    }

    pub fn constant(resolution: u32, duration_s: f64) -> Result<Self> {
        Self::new(vec![Segment {
            resolution,
            duration_s,
        }])
    }

    pub fn duration_s(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    /// Reads a `resolution,duration_s` CSV.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let segments = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<Segment>, _>>()?;
        Self::new(segments)
    }

    pub fn to_csv_writer<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for s in &self.segments {
            out.serialize(s)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `sum(duration_s * (I(res) + idle) * V) / 3600`, in mWh.
pub fn estimate_energy(trace: &PlaybackTrace, cal: &EnergyCalibration) -> Result<f64> {
    trace.segments.iter().try_fold(0.0, |acc, s| {
        let current = cal.current_ma(s.resolution)? + cal.baseline_current_ma;
        Ok(acc + s.duration_s * current * cal.voltage / 3600.0)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEnergy {
    pub energy_mwh: f64,
    /// 100 * (E_baseline - E_policy) / E_baseline.
    pub savings_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub baseline: String,
    pub policies: BTreeMap<String, PolicyEnergy>,
}

/// Relative tolerance on equal trace durations.
const DURATION_TOL: f64 = 1e-9;

pub fn compare_policies(
    traces: &BTreeMap<String, PlaybackTrace>,
    baseline: &str,
    cal: &EnergyCalibration,
) -> Result<EnergyReport> {
    let base = traces
        .get(baseline)
        .ok_or_else(|| Error::invalid(format!("baseline policy {baseline:?} has no trace")))?;
    let base_dur = base.duration_s();
    for (name, t) in traces {
        let d = t.duration_s();
        if (d - base_dur).abs() > DURATION_TOL * base_dur.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "policy {name:?} covers {d} s but baseline {baseline:?} covers {base_dur} s"
            )));
        }
    }
    let e_base = estimate_energy(base, cal)?;
    let policies = traces
        .iter()
        .map(|(name, t)| {
            let e = estimate_energy(t, cal)?;
            let savings_percent = if e_base > 0.0 {
                100.0 * (e_base - e) / e_base
            } else {
                0.0
            };
            Ok((
                name.clone(),
                PolicyEnergy {
                    energy_mwh: e,
                    savings_percent,
                },
            ))
        })
        .collect::<Result<_>>()?;
    Ok(EnergyReport {
        baseline: baseline.to_string(),
        policies,
    })
}
