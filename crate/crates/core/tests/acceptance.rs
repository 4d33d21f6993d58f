//! End-to-end acceptance run: one line per criterion.
//!
//! Criteria 7-11 need the public viewing-study dataset. Point `RESADAPT_DATA`
//! at its directory (and optionally `RESADAPT_ALIASES` at a header alias file)
//! to enable them; otherwise they are skipped.
//!
//! The run is a report and exits 0 regardless of outcome; set
//! `RESADAPT_ACCEPTANCE_STRICT=1` to exit non-zero on any failure.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use common::{close, naive_si, naive_ti, planted_lmm, raw_design, CHI2_ORACLE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resadapt::dataset::{ingest_dir, Activity, Dataset, HeaderAliases, Study};
use resadapt::energy::{
    compare_policies, estimate_energy, EnergyCalibration, PlaybackTrace, Segment,
};
use resadapt::predictor::{
    loocv, loocv_by_viewer, metrics, train_forest, FeatureSet, ForestBuilder, ForestParams,
    MeanBuilder, MeanRegressor, Regressor, Sample,
};
use resadapt::presets;
use resadapt::simulator::{run_session, ContextEvent, ScriptVideo, ScriptViewer, SessionScript};
use resadapt::stats::{chi2_sf, eta_squared, kruskal_wallis, lmm_fit, lmm_fit_at, ols_fit};
use resadapt::video::{compute_siti, LumaFrame, VideoSequence};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;
type Unconditional = (&'static str, fn() -> Check);
type Conditional = (&'static str, fn(&Dataset) -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_eta() -> Check {
    let cases = [
        (14.139, 4, 264, 0.04),
        (19.817, 3, 276, 0.06),
        (65.328, 12, 264, 0.20),
        (79.045, 12, 276, 0.25),
    ];
    let mut report = Vec::new();
    let mut misses = 0;
    for (h, k, n, want) in cases {
        let e = eta_squared(h, k, n).map_err(|e| e.to_string())?;
        let rounded = (e * 100.0).round() / 100.0;
        let ok = (rounded - want).abs() <= 0.005 + 1e-12;
        misses += usize::from(!ok);
        report.push(format!(
            "{e:.4}->{rounded:.2}{}",
            if ok {
                String::new()
            } else {
                format!(" (want {want:.2})")
            }
        ));
    }
    let line = report.join(", ");
    if misses == 0 {
        Ok(line)
    } else {
        Err(format!("{misses} of 4 off target: {line}"))
    }
}

fn c2_siti() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let frames: Vec<LumaFrame> = (0..5)
            .map(|_| LumaFrame::new(8, 8, (0..64).map(|_| rng.gen()).collect()).unwrap())
            .collect();
        let grids: Vec<Vec<Vec<f64>>> = frames
            .iter()
            .map(|f| {
                (0..8)
                    .map(|y| (0..8).map(|x| f64::from(f.at(x, y))).collect())
                    .collect()
            })
            .collect();
        let p =
            compute_siti(&VideoSequence::new(frames, 30.0).unwrap()).map_err(|e| e.to_string())?;
        let si = grids.iter().map(|g| naive_si(g));
        let ti = grids.windows(2).map(|w| naive_ti(&w[0], &w[1]));
        for (a, b) in p
            .si_series
            .iter()
            .copied()
            .zip(si)
            .chain(p.ti_series.iter().copied().zip(ti))
        {
            let rel = (a - b).abs() / b.abs().max(1e-300);
            worst = worst.max(rel);
            ensure(close(a, b, 1e-9), || format!("case {case}: {a} vs {b}"))?;
        }
    }
    let flat = LumaFrame::filled(8, 8, 100).unwrap();
    let c = compute_siti(&VideoSequence::new(vec![flat.clone(); 5], 30.0).unwrap()).unwrap();
    ensure(c.si_max == 0.0 && c.ti_max == Some(0.0), || {
        "constant video is not all-zero".into()
    })?;
    let one = compute_siti(&VideoSequence::new(vec![flat], 30.0).unwrap()).unwrap();
    ensure(one.ti_max.is_none() && one.ti_mean.is_none(), || {
        "single frame reports a TI".into()
    })?;
    Ok(format!(
        "1000 sequences, max rel err {worst:.1e}; degenerate cases ok"
    ))
}

fn c3_kw() -> Check {
    let h = kruskal_wallis(&[vec![1.0, 2.0], vec![3.0, 4.0]])
        .map_err(|e| e.to_string())?
        .h;
    ensure((h - 2.4).abs() < 1e-12, || format!("H = {h}, want 2.4"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let k = rng.gen_range(2..5);
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                (0..rng.gen_range(2..8))
                    .map(|_| f64::from(rng.gen_range(0..15u8)))
                    .collect()
            })
            .collect();
        let Ok(a) = kruskal_wallis(&groups) else {
            continue;
        };
        let mapped: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| g.iter().map(|v| (v / 3.0).exp() * 7.0 - 2.0).collect())
            .collect();
        let b = kruskal_wallis(&mapped).map_err(|e| e.to_string())?;
        ensure(close(a.h, b.h, 1e-12), || {
            format!("case {case}: {} vs {}", a.h, b.h)
        })?;
    }
    let mut worst: f64 = 0.0;
    for (x, df, sf) in CHI2_ORACLE {
        let got = chi2_sf(x, df).map_err(|e| e.to_string())?;
        worst = worst.max((got - sf).abs() / sf);
        ensure(close(got, sf, 1e-10), || {
            format!("chi2_sf({x}, {df}) = {got}, want {sf}")
        })?;
    }
    Ok(format!(
        "H=2.4; 200 monotone transforms; chi2 max rel err {worst:.1e}"
    ))
}

fn c4_ols_lmm() -> Check {
    let x0: Vec<f64> = (0..30).map(|i| f64::from(i) / 3.0).collect();
    let x1: Vec<f64> = (0..30).map(|i| f64::from((i * 7) % 11)).collect();
    let y: Vec<f64> = x0
        .iter()
        .zip(&x1)
        .map(|(a, b)| 5.0 - 1.5 * a + 0.25 * b)
        .collect();
    let fit = ols_fit(&raw_design(&[x0, x1], y)).map_err(|e| e.to_string())?;
    let max_res = fit.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    ensure(max_res < 1e-8, || format!("OLS residual {max_res}"))?;
    for (c, want) in fit.coefficients.iter().zip([5.0, -1.5, 0.25]) {
        ensure((c.estimate - want).abs() < 1e-8, || {
            format!("{} = {}", c.name, c.estimate)
        })?;
    }

    let (d, g) = planted_lmm(2024, 50, 40, 4.0, 1.0);
    let l = lmm_fit(&d, &g).map_err(|e| e.to_string())?;
    let (eg, ee) = (
        (l.var_group - 4.0).abs() / 4.0,
        (l.var_residual - 1.0).abs(),
    );
    ensure(eg < 0.2 && ee < 0.2, || {
        format!("components {} / {}", l.var_group, l.var_residual)
    })?;

    let (d0, g0) = planted_lmm(5, 50, 40, 0.0, 1.0);
    let icc = lmm_fit(&d0, &g0).map_err(|e| e.to_string())?.icc;
    ensure(icc < 0.02, || format!("ICC {icc} with no group variance"))?;

    let at0 = lmm_fit_at(&d, &g, 0.0).map_err(|e| e.to_string())?;
    let ols = ols_fit(&d).map_err(|e| e.to_string())?;
    for (a, b) in at0.coefficients.iter().zip(&ols.coefficients) {
        ensure(close(a.estimate, b.estimate, 1e-12), || {
            format!("lambda=0 {}: {} vs {}", a.name, a.estimate, b.estimate)
        })?;
    }
    Ok(format!(
        "OLS residual {max_res:.1e}; var_group {:.3}, var_resid {:.3}; ICC(0) {icc:.4}",
        l.var_group, l.var_residual
    ))
}

fn c5_predictor() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<Sample> = (0..120)
        .map(|i| {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
            let y = 400.0 + 300.0 * x[0] + rng.gen_range(-50.0..50.0);
            Sample {
                viewer_id: format!("v{:02}", i % 12),
                video_id: format!("c{}", i / 12),
                x,
                y,
            }
        })
        .collect();
    let params = ForestParams {
        n_trees: 30,
        ..Default::default()
    };
    let a = train_forest(&samples, &params, 11).map_err(|e| e.to_string())?;
    let b = train_forest(&samples, &params, 11).map_err(|e| e.to_string())?;
    ensure(
        serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap(),
        || "same seed, different forests".into(),
    )?;

    let stump = ForestParams {
        n_trees: 10,
        max_depth: Some(0),
        bootstrap: false,
        ..Default::default()
    };
    let f0 = train_forest(&samples, &stump, 1).map_err(|e| e.to_string())?;
    let mean = MeanRegressor::fit(&samples).map_err(|e| e.to_string())?;
    ensure(
        samples
            .iter()
            .all(|s| f0.predict(&s.x) == mean.predict(&s.x)),
        || "depth-0 forest differs from the mean".into(),
    )?;

    let e = loocv(&samples, &ForestBuilder { params, seed: 3 }).map_err(|e| e.to_string())?;
    ensure(e.folds.len() == 12, || "fold count".into())?;

    let t: Vec<f64> = samples.iter().map(|s| s.y).collect();
    let perfect = metrics(&t, &t).map_err(|e| e.to_string())?;
    ensure(perfect.accuracy == 100.0 && perfect.mae == 0.0, || {
        "perfect predictions score below 100".into()
    })?;
    for fold in &e.folds {
        ensure(fold.rmse >= fold.mae, || {
            format!("fold {}: RMSE < MAE", fold.viewer_id)
        })?;
    }
    Ok(format!(
        "deterministic; depth-0 == mean; 12 leak-free folds, accuracy {:.1}%",
        e.accuracy_mean
    ))
}

fn c6_energy_sim() -> Check {
    let cal = EnergyCalibration::new("ref", 4.2, BTreeMap::from([(720, 300.0)]))
        .map_err(|e| e.to_string())?;
    let e = estimate_energy(&PlaybackTrace::constant(720, 60.0).unwrap(), &cal)
        .map_err(|e| e.to_string())?;
    ensure((e - 21.0).abs() < 1e-12, || format!("{e} mWh, want 21.0"))?;

    let flat = EnergyCalibration::new(
        "flat",
        3.8,
        [360, 480, 720, 1080].map(|r| (r, 250.0)).into(),
    )
    .unwrap();
    let mixed = PlaybackTrace::new(vec![
        Segment {
            resolution: 360,
            duration_s: 20.0,
        },
        Segment {
            resolution: 1080,
            duration_s: 40.0,
        },
    ])
    .unwrap();
    let traces = BTreeMap::from([
        ("mixed".to_string(), mixed),
        (
            "base".to_string(),
            PlaybackTrace::constant(1080, 60.0).unwrap(),
        ),
    ]);
    let r = compare_policies(&traces, "base", &flat).map_err(|e| e.to_string())?;
    ensure(r.policies["mixed"].savings_percent.abs() < 1e-12, || {
        "uniform calibration saves energy".into()
    })?;
    ensure(r.policies["base"].savings_percent == 0.0, || {
        "self-baseline saves energy".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut decisions = 0;
    for _ in 0..200 {
        let mut t = 0.0;
        let mut timeline = Vec::new();
        while t < 60.0 {
            timeline.push(ContextEvent {
                t_s: t,
                activity: Activity::ALL[rng.gen_range(0..4)],
            });
            t += rng.gen_range(0.5..15.0);
        }
        let script = SessionScript {
            video: ScriptVideo {
                si: 60.0,
                ti: 15.0,
                duration_s: 60.0,
            },
            timeline,
            viewer: ScriptViewer {
                gender: resadapt::dataset::Gender::Male,
                age: 30,
                glasses: false,
                personality: None,
            },
            ladder: vec![360, 480, 720, 1080],
        };
        let preds: [f64; 4] = std::array::from_fn(|_| rng.gen_range(200.0..1200.0));
        let model = |f: &resadapt::predictor::Features| {
            preds[Activity::ALL.iter().position(|&a| a == f.activity).unwrap()]
        };
        let run =
            run_session(&script, &model, rng.gen_range(0.0..20.0)).map_err(|e| e.to_string())?;
        ensure(run.segments.first().map(|s| s.start_s) == Some(0.0), || {
            "first segment not at 0".into()
        })?;
        ensure(run.segments.last().map(|s| s.end_s) == Some(60.0), || {
            "last segment not at end".into()
        })?;
        ensure(
            run.segments.windows(2).all(|w| w[0].end_s == w[1].start_s),
            || "segment gap".into(),
        )?;
        for d in &run.decisions {
            let lower = script.ladder.iter().filter(|&&r| r < d.chosen).max();
            let ok = (f64::from(d.chosen) >= d.raw_prediction || d.chosen == 1080)
                && lower.is_none_or(|&l| f64::from(l) < d.raw_prediction);
            ensure(ok, || {
                format!("{} lines chosen for raw {}", d.chosen, d.raw_prediction)
            })?;
            decisions += 1;
        }
    }
    Ok(format!(
        "21.0 mWh; 0% under uniform and self baseline; 200 sessions, {decisions} decisions"
    ))
}

fn load_dataset() -> Option<Result<Dataset, String>> {
    let dir = PathBuf::from(std::env::var_os("RESADAPT_DATA")?);
    let aliases = match std::env::var_os("RESADAPT_ALIASES") {
        Some(p) => match std::fs::read_to_string(&p)
            .map_err(|e| e.to_string())
            .and_then(|t| HeaderAliases::parse(&t).map_err(|e| e.to_string()))
        {
            Ok(a) => a,
            Err(e) => return Some(Err(e)),
        },
        None => HeaderAliases::new(),
    };
    Some(ingest_dir(&dir, &aliases).map_err(|e| e.to_string()))
}

fn within(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{what} = {got:.4}, want {want} +/- {tol}")
    })
}

fn c7_kw_data(ds: &Dataset) -> Check {
    let h1 = presets::kw_by_activity(ds, Study::One)
        .map_err(|e| e.to_string())?
        .test
        .h;
    let h2 = presets::kw_by_activity(ds, Study::Two)
        .map_err(|e| e.to_string())?
        .test
        .h;
    let hp = presets::kw_by_personality(ds, Study::Two)
        .map_err(|e| e.to_string())?
        .test
        .h;
    within(h1, 14.139, 0.5, "study-1 activity H")?;
    within(h2, 19.817, 0.5, "study-2 activity H")?;
    within(hp, 15.874, 0.5, "study-2 personality H")?;
    Ok(format!("H = {h1:.3}, {h2:.3}, {hp:.3}"))
}

fn c8_pearson(ds: &Dataset) -> Check {
    let rows = presets::pearson_by_activity(ds, Study::One).map_err(|e| e.to_string())?;
    let r = rows
        .iter()
        .find(|r| r.activity == Activity::Running)
        .and_then(|r| r.resolution_vs_si)
        .ok_or("no running correlation")?;
    within(r, 0.86, 0.02, "running r")?;
    Ok(format!("r = {r:.3}"))
}

fn c9_table4(ds: &Dataset) -> Check {
    let fit = presets::table4(ds, Study::One).map_err(|e| e.to_string())?;
    let coef = |n: &str| {
        fit.coefficients
            .iter()
            .find(|c| c.name == n)
            .ok_or(format!("no {n} coefficient"))
    };
    for n in ["walking", "running"] {
        let c = coef(n)?;
        ensure(c.estimate < 0.0 && c.p_value < 0.05, || {
            format!("{n}: {:.3} (p={:.3})", c.estimate, c.p_value)
        })?;
    }
    for n in ["running:si", "walking:ti"] {
        let c = coef(n)?;
        ensure(c.estimate > 0.0 && c.p_value <= 0.1, || {
            format!("{n}: {:.3} (p={:.3})", c.estimate, c.p_value)
        })?;
    }
    ensure((0.08..=0.14).contains(&fit.r_squared), || {
        format!("R2 = {:.3}", fit.r_squared)
    })?;
    Ok(format!(
        "signs and p-values hold; R2 = {:.3}",
        fit.r_squared
    ))
}

fn c10_lmm(ds: &Dataset) -> Check {
    let icc = presets::lmm_icc(ds).map_err(|e| e.to_string())?.icc;
    let full = presets::table6(ds).map_err(|e| e.to_string())?;
    within(icc, 0.03, 0.01, "ICC")?;
    within(full.r2_marginal, 0.21, 0.03, "R2m")?;
    within(full.r2_conditional, 0.27, 0.03, "R2c")?;
    Ok(format!(
        "ICC {icc:.3}; R2m {:.3}; R2c {:.3}",
        full.r2_marginal, full.r2_conditional
    ))
}

fn c11_loocv(ds: &Dataset) -> Check {
    let start = Instant::now();
    let set = FeatureSet::for_study(Study::Two);
    let mean = loocv_by_viewer(ds, Study::Two, set, &MeanBuilder).map_err(|e| e.to_string())?;
    within(mean.accuracy_mean, 67.6, 1.0, "mean-regressor accuracy")?;
    let seeds = [1u64, 2, 3];
    let mut accs = Vec::new();
    for seed in seeds {
        let b = ForestBuilder {
            params: ForestParams::default(),
            seed,
        };
        accs.push(
            loocv_by_viewer(ds, Study::Two, set, &b)
                .map_err(|e| e.to_string())?
                .accuracy_mean,
        );
    }
    let forest = accs.iter().sum::<f64>() / accs.len() as f64;
    within(forest, 73.7, 5.0, "forest accuracy")?;
    ensure(forest > mean.accuracy_mean, || {
        format!(
            "forest {forest:.1}% does not beat mean {:.1}%",
            mean.accuracy_mean
        )
    })?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 300.0, || format!("took {secs:.0} s"))?;
    Ok(format!(
        "mean {:.1}%, forest {forest:.1}% over {} seeds, {secs:.1} s",
        mean.accuracy_mean,
        seeds.len()
    ))
}

fn main() -> ExitCode {
    let unconditional: [Unconditional; 6] = [
        ("eta-squared checkpoints", c1_eta),
        ("SI/TI oracle equivalence", c2_siti),
        ("Kruskal-Wallis brute checks", c3_kw),
        ("OLS/LMM numerics", c4_ols_lmm),
        ("predictor determinism and sanity", c5_predictor),
        ("energy/simulator properties", c6_energy_sim),
    ];
    let conditional: [Conditional; 5] = [
        ("Kruskal-Wallis on study data", c7_kw_data),
        ("Pearson running vs SI", c8_pearson),
        ("activity/SI/TI regression", c9_table4),
        ("mixed-model ICC and pseudo-R2", c10_lmm),
        ("LOOCV mean vs forest", c11_loocv),
    ];

    let mut outcomes: Vec<(&str, Outcome)> = unconditional
        .iter()
        .map(|(name, f)| (*name, f().map_or_else(Outcome::Fail, Outcome::Pass)))
        .collect();
    match load_dataset() {
        None => {
            let note = "dataset unavailable; set RESADAPT_DATA to the study directory".to_string();
            outcomes.extend(
                conditional
                    .iter()
                    .map(|(n, _)| (*n, Outcome::Skip(note.clone()))),
            );
        }
        Some(Err(e)) => {
            outcomes.extend(
                conditional
                    .iter()
                    .map(|(n, _)| (*n, Outcome::Fail(format!("cannot ingest dataset: {e}")))),
            );
        }
        Some(Ok(ds)) => {
            outcomes.extend(
                conditional
                    .iter()
                    .map(|(n, f)| (*n, f(&ds).map_or_else(Outcome::Fail, Outcome::Pass))),
            );
        }
    }

    let mut failed = 0;
    for (i, (name, o)) in outcomes.iter().enumerate() {
        let (tag, detail) = match o {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("[{tag}] {:>2}. {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
    }
    let strict = std::env::var_os("RESADAPT_ACCEPTANCE_STRICT").is_some_and(|v| v == "1");
    if failed > 0 && strict {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
