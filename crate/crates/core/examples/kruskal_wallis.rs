//! Rank tests and correlations on a synthetic study (not real data).

use resadapt::dataset::Study;
use resadapt::presets::{kw_by_activity, kw_by_personality, kw_by_video, pearson_by_activity};
use resadapt::synth::{synthetic_dataset, SynthConfig};

fn main() -> resadapt::Result<()> {
    let ds = synthetic_dataset(&SynthConfig::default())?;
    for (label, r) in [
        ("activity, study 1", kw_by_activity(&ds, Study::One)?),
        ("video, study 1", kw_by_video(&ds, Study::One)?),
        ("activity, study 2", kw_by_activity(&ds, Study::Two)?),
        (
            "dominant trait, study 2",
            kw_by_personality(&ds, Study::Two)?,
        ),
    ] {
        println!(
            "{label:<24} H({}) = {:>7.3}  p = {:.2e}  eta2 = {:.3}",
            r.test.df, r.test.h, r.test.p, r.test.eta_squared
        );
    }
    println!("\nper-video mean resolution vs SI / TI (study 1)");
    for row in pearson_by_activity(&ds, Study::One)? {
        println!(
            "{:<11} {:>6.2} {:>6.2}",
            row.activity,
            row.resolution_vs_si.unwrap_or(f64::NAN),
            row.resolution_vs_ti.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
