//! SI/TI of a synthetic moving-bar clip, written to Y4M and read back.

use resadapt::synth::moving_bar;
use resadapt::video::{parse_y4m, siti_report, write_y4m, Aggregation, SiTiThresholds};

fn main() -> resadapt::Result<()> {
    let clip = moving_bar(64, 36, 10, 8, 3)?;
    let mut bytes = Vec::new();
    write_y4m(&clip, &mut bytes)?;
    let seq = parse_y4m(bytes.as_slice())?;

    for agg in [Aggregation::Mean, Aggregation::Max] {
        let s = siti_report(&seq, &SiTiThresholds::default(), agg, false)?.summary;
        let (si, ti) = match agg {
            Aggregation::Mean => (s.si_mean, s.ti_mean),
            Aggregation::Max => (s.si_max, s.ti_max),
        };
        println!(
            "{agg:?}: SI {si:.3} TI {:.3} -> {:?}",
            ti.unwrap_or(f64::NAN),
            s.category
        );
    }
    Ok(())
}
