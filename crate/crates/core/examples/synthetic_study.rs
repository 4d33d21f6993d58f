//! Writes a seeded SYNTHETIC two-study dataset in canonical CSV form, for
//! exercising the CLI without the real study logs.
//!
//! cargo run --example synthetic_study -- OUT_DIR [SEED]

use std::path::PathBuf;

use resadapt::dataset::export_dir;
use resadapt::synth::{synthetic_dataset, SynthConfig};

fn main() -> resadapt::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synthetic-study".into()));
    let seed = args
        .next()
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(7);
    let ds = synthetic_dataset(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })?;
    export_dir(&ds, &out)?;
    println!(
        "wrote {} sessions to {}",
        ds.sessions().len(),
        out.display()
    );
    Ok(())
}
