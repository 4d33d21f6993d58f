//! A scripted session driven by a forest trained on a synthetic study.

use std::path::Path;

use resadapt::dataset::Study;
use resadapt::energy::{compare_policies, load_calibration};
use resadapt::predictor::{
    feature_rows, train_forest, FeatureSchema, FeatureSet, ForestParams, SavedModel,
};
use resadapt::simulator::{run_session, script_traces, SessionScript, DEFAULT_MIN_DWELL_S};
use resadapt::synth::{synthetic_dataset, SynthConfig};

fn main() -> resadapt::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let ds = synthetic_dataset(&SynthConfig::default())?;
    // the script carries no personality, so train without it
    let schema = FeatureSchema::new(FeatureSet {
        personality: false,
        ..FeatureSet::default()
    });
    let samples = schema.encode_rows(&feature_rows(&ds, Study::Two))?;
    let model = SavedModel::forest(schema, train_forest(&samples, &ForestParams::default(), 1)?);

    let script = SessionScript::from_json(&std::fs::read_to_string(
        root.join("fixtures/session_script.json"),
    )?)?;
    let run = run_session(&script, &model, DEFAULT_MIN_DWELL_S)?;
    for d in &run.decisions {
        println!(
            "t={:>4}s {:<8} raw {:>7.1} -> {:>4}p{}",
            d.t_s,
            d.activity,
            d.raw_prediction,
            d.chosen,
            if d.applied { "" } else { " (held: dwell)" }
        );
    }
    for s in &run.segments {
        println!("[{:>4}, {:>4}) {}p", s.start_s, s.end_s, s.resolution);
    }

    let cal = load_calibration(&root.join("fixtures/calibration_synthetic.csv"))?;
    let traces = script_traces(&script, &model, DEFAULT_MIN_DWELL_S, &[1080])?;
    let report = compare_policies(&traces, "fixed_1080", &cal)?;
    println!(
        "model saves {:.2}% vs fixed 1080p",
        report.policies["model"].savings_percent
    );
    Ok(())
}
