//! Leave-one-viewer-out comparison of the forest and the mean baseline.
//! Runs on a synthetic study; pass a canonical dataset directory to use real data.

use std::path::PathBuf;

use resadapt::dataset::{ingest_dir, HeaderAliases, Study};
use resadapt::predictor::{
    loocv_by_viewer, per_personality_eval, FeatureSet, ForestBuilder, ForestParams, MeanBuilder,
};
use resadapt::synth::{synthetic_dataset, SynthConfig};

fn main() -> resadapt::Result<()> {
    let ds = match std::env::args().nth(1) {
        Some(dir) => ingest_dir(&PathBuf::from(dir), &HeaderAliases::new())?,
        None => synthetic_dataset(&SynthConfig::default())?,
    };
    let set = FeatureSet::for_study(Study::Two);
    let params = ForestParams::default();
    let seed = 20240601;

    let forest = loocv_by_viewer(&ds, Study::Two, set, &ForestBuilder { params, seed })?;
    let mean = loocv_by_viewer(&ds, Study::Two, set, &MeanBuilder)?;
    println!(
        "{:<8} {:>8} {:>6} {:>8} {:>6} {:>8} {:>6}",
        "model", "acc", "std", "MAE", "std", "RMSE", "std"
    );
    for e in [&forest, &mean] {
        println!(
            "{:<8} {:>7.1}% {:>6.1} {:>8.1} {:>6.1} {:>8.1} {:>6.1}",
            e.model,
            e.accuracy_mean,
            e.accuracy_std,
            e.mae_mean,
            e.mae_std,
            e.rmse_mean,
            e.rmse_std
        );
    }

    let per = per_personality_eval(&ds, Study::Two, set, &params, seed)?;
    for (t, e) in &per.traits {
        println!(
            "{t:<18} viewers {:>2}  forest {:>5.1}%  mean {:>5.1}%",
            e.n_viewers, e.forest.accuracy_mean, e.mean.accuracy_mean
        );
    }
    for (t, n) in &per.excluded {
        println!("{t:<18} excluded ({n} viewer(s))");
    }
    Ok(())
}
