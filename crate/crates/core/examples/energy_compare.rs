//! Energy of an adaptive trace against fixed-resolution playback.
//! The calibration file is synthetic.

use std::collections::BTreeMap;
use std::path::Path;

use resadapt::energy::{compare_policies, load_calibration, PlaybackTrace, Segment};

fn main() -> resadapt::Result<()> {
    let cal = load_calibration(
        &Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/calibration_synthetic.csv"),
    )?;
    println!(
        "calibration {} at {} V, monotone: {}",
        cal.codec_tag,
        cal.voltage,
        cal.is_monotone()
    );

    let mut traces = BTreeMap::new();
    for r in [360, 720, 1080] {
        traces.insert(format!("fixed_{r}"), PlaybackTrace::constant(r, 60.0)?);
    }
    let seg = |resolution, duration_s| Segment {
        resolution,
        duration_s,
    };
    traces.insert(
        "adaptive".into(),
        PlaybackTrace::new(vec![seg(720, 20.0), seg(480, 25.0), seg(360, 15.0)])?,
    );

    let report = compare_policies(&traces, "fixed_1080", &cal)?;
    for (name, e) in &report.policies {
        println!(
            "{name:<10} {:>7.3} mWh  {:>6.2}% saved",
            e.energy_mwh, e.savings_percent
        );
    }
    Ok(())
}
