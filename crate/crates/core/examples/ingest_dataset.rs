//! Ingest a study directory (default: the bundled 5-session sample), print a
//! summary and optionally export it in canonical form.
//!
//! cargo run --example ingest_dataset -- [SOURCE_DIR] [EXPORT_DIR]

use std::path::PathBuf;

use resadapt::dataset::{export_dir, ingest_dir, HeaderAliases, Study};

fn main() -> resadapt::Result<()> {
    let mut args = std::env::args().skip(1);
    let src = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/sample"));
    let ds = ingest_dir(&src, &HeaderAliases::new())?;
    println!(
        "{} participants, {} videos, {} sessions",
        ds.participants().len(),
        ds.videos().len(),
        ds.sessions().len()
    );
    for study in [Study::One, Study::Two] {
        for (id, t) in ds.trait_profiles(study) {
            println!(
                "{id}: dominant {} percentiles {:?}",
                t.dominant, t.percentiles
            );
        }
        for r in ds.analysis_rows(study) {
            println!(
                "  {} {} {:<8} final {}p",
                r.participant_id, r.video_id, r.activity, r.final_resolution
            );
        }
    }
    if let Some(out) = args.next() {
        export_dir(&ds, &PathBuf::from(&out))?;
        println!("exported to {out}");
    }
    Ok(())
}
