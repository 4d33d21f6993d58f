use std::collections::BTreeMap;
use std::path::Path;

use proptest::prelude::*;
use resadapt::dataset::{ingest_dir, Activity, HeaderAliases, Study};
use resadapt::energy::{
    compare_policies, estimate_energy, load_calibration, EnergyCalibration, PlaybackTrace, Segment,
};
use resadapt::predictor::Features;
use resadapt::simulator::{
    replay_study, run_session, script_traces, ContextEvent, ReplayPolicy, SessionScript,
};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn cal() -> EnergyCalibration {
    load_calibration(&fixture("calibration_synthetic.csv")).unwrap()
}

fn script() -> SessionScript {
    SessionScript::from_json(&std::fs::read_to_string(fixture("session_script.json")).unwrap())
        .unwrap()
}

const LADDER: [u32; 6] = [144, 240, 360, 480, 720, 1080];

fn trace_strategy() -> impl Strategy<Value = PlaybackTrace> {
    prop::collection::vec(
        (prop::sample::select(LADDER.to_vec()), 0.01f64..100.0),
        1..10,
    )
    .prop_map(|v| {
        PlaybackTrace::new(
            v.into_iter()
                .map(|(resolution, duration_s)| Segment {
                    resolution,
                    duration_s,
                })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn energy_is_a_duration_weighted_sum(trace in trace_strategy(), k in 0.1f64..10.0, idle in 0.0f64..200.0) {
        let c = cal().with_baseline(idle).unwrap();
        let e = estimate_energy(&trace, &c).unwrap();
        let direct: f64 = trace
            .segments
            .iter()
            .map(|s| s.duration_s * (c.entries[&s.resolution] + idle) * 4.2 / 3600.0)
            .sum();
        prop_assert!((e - direct).abs() <= 1e-9 * direct);

        let scaled = PlaybackTrace::new(trace.segments.iter().map(|s| Segment { duration_s: s.duration_s * k, ..*s }).collect()).unwrap();
        prop_assert!((estimate_energy(&scaled, &c).unwrap() - k * e).abs() <= 1e-9 * k * e);

        let mut hv = c.clone();
        hv.voltage *= k;
        prop_assert!((estimate_energy(&trace, &hv).unwrap() - k * e).abs() <= 1e-9 * k * e);
    }

    #[test]
    fn energy_is_additive_over_concatenation(a in trace_strategy(), b in trace_strategy()) {
        let c = cal();
        let joined = PlaybackTrace::new(a.segments.iter().chain(&b.segments).copied().collect()).unwrap();
        let sum = estimate_energy(&a, &c).unwrap() + estimate_energy(&b, &c).unwrap();
        prop_assert!((estimate_energy(&joined, &c).unwrap() - sum).abs() <= 1e-9 * sum);
    }

    #[test]
    fn lower_resolution_never_costs_more(trace in trace_strategy()) {
        // monotone calibration: stepping every segment down one rung cannot raise energy
        let c = cal();
        let down = PlaybackTrace::new(trace.segments.iter().map(|s| {
            let i = LADDER.iter().position(|&r| r == s.resolution).unwrap();
            Segment { resolution: LADDER[i.saturating_sub(1)], ..*s }
        }).collect()).unwrap();
        prop_assert!(estimate_energy(&down, &c).unwrap() <= estimate_energy(&trace, &c).unwrap());
    }

    #[test]
    fn savings_recompute_from_energies(a in trace_strategy(), base_res in prop::sample::select(LADDER.to_vec())) {
        let c = cal();
        let base = PlaybackTrace::constant(base_res, a.duration_s()).unwrap();
        let traces = BTreeMap::from([("a".to_string(), a.clone()), ("base".to_string(), base.clone())]);
        let r = compare_policies(&traces, "base", &c).unwrap();
        let (ea, eb) = (estimate_energy(&a, &c).unwrap(), estimate_energy(&base, &c).unwrap());
        prop_assert!((r.policies["a"].savings_percent - 100.0 * (eb - ea) / eb).abs() < 1e-9);
        prop_assert_eq!(r.policies["base"].savings_percent, 0.0);

        let flat = EnergyCalibration::new("flat", 3.7, LADDER.iter().map(|&r| (r, 250.0)).collect()).unwrap();
        prop_assert!(compare_policies(&traces, "base", &flat).unwrap().policies["a"].savings_percent.abs() < 1e-9);
    }

    #[test]
    fn session_segments_partition_the_video(
        times in prop::collection::btree_set(1u32..599, 0..12),
        preds in prop::collection::vec(100.0f64..1200.0, 4),
        dwell in 0.0f64..30.0,
    ) {
        let mut s = script();
        s.timeline = std::iter::once(0)
            .chain(times)
            .enumerate()
            .map(|(i, t)| ContextEvent { t_s: f64::from(t) / 10.0, activity: Activity::ALL[i % 4] })
            .collect();
        let model = |f: &Features| preds[Activity::ALL.iter().position(|&a| a == f.activity).unwrap()];
        let run = run_session(&s, &model, dwell).unwrap();
        prop_assert_eq!(run.segments[0].start_s, 0.0);
        prop_assert_eq!(run.segments.last().unwrap().end_s, 60.0);
        for w in run.segments.windows(2) {
            prop_assert_eq!(w[0].end_s, w[1].start_s);
            prop_assert!(w[0].resolution != w[1].resolution);
            prop_assert!(w[1].start_s - w[0].start_s >= dwell);
        }
        prop_assert!((run.trace().duration_s() - 60.0).abs() < 1e-9);
        for d in &run.decisions {
            prop_assert!(s.ladder.contains(&d.chosen));
            prop_assert!(f64::from(d.chosen) >= d.raw_prediction || d.chosen == 1080);
            let below = s.ladder.iter().filter(|&&r| r < d.chosen).max();
            prop_assert!(below.is_none_or(|&b| f64::from(b) < d.raw_prediction));
        }
        prop_assert_eq!(run.decisions.iter().filter(|d| d.applied).count(), run.segments.len());
    }
}

fn activity_model(f: &Features) -> f64 {
    match f.activity {
        Activity::Still => 700.0,
        Activity::Walking => 450.0,
        Activity::Running => 300.0,
        Activity::InVehicle => 1000.0,
    }
}

#[test]
fn hand_traced_session() {
    let run = run_session(&script(), &activity_model, 10.0).unwrap();
    // t=4 walking is within the dwell window and is dropped
    let segs: Vec<(f64, f64, u32)> = run
        .segments
        .iter()
        .map(|s| (s.start_s, s.end_s, s.resolution))
        .collect();
    assert_eq!(
        segs,
        [(0.0, 25.0, 720), (25.0, 48.0, 360), (48.0, 60.0, 720)]
    );
    assert_eq!(
        run.decisions.iter().map(|d| d.applied).collect::<Vec<_>>(),
        [true, false, true, true]
    );
    assert_eq!(run.decisions[1].chosen, 480);

    let traces = script_traces(&script(), &activity_model, 10.0, &[1080]).unwrap();
    let r = compare_policies(&traces, "fixed_1080", &cal()).unwrap();
    let e = (25.0 * 380.0 + 23.0 * 300.0 + 12.0 * 380.0) * 4.2 / 3600.0;
    let base = 60.0 * 450.0 * 4.2 / 3600.0;
    assert!((r.policies["model"].energy_mwh - e).abs() < 1e-12);
    assert!((r.policies["model"].savings_percent - 100.0 * (base - e) / base).abs() < 1e-9);
}

#[test]
fn unbounded_dwell_keeps_the_first_choice() {
    let run = run_session(&script(), &activity_model, f64::INFINITY).unwrap();
    assert_eq!(run.segments.len(), 1);
    assert_eq!(
        (
            run.segments[0].start_s,
            run.segments[0].end_s,
            run.segments[0].resolution
        ),
        (0.0, 60.0, 720)
    );
}

#[test]
fn zero_dwell_follows_every_change() {
    let run = run_session(&script(), &activity_model, 0.0).unwrap();
    assert_eq!(
        run.segments
            .iter()
            .map(|s| s.resolution)
            .collect::<Vec<_>>(),
        [720, 480, 360, 720]
    );
}

#[test]
fn invalid_scripts_are_rejected() {
    let mut s = script();
    s.timeline[0].t_s = 1.0;
    assert!(run_session(&s, &activity_model, 10.0).is_err());
    let mut s = script();
    s.timeline[2].t_s = 3.0;
    assert!(run_session(&s, &activity_model, 10.0).is_err());
    let mut s = script();
    s.timeline.push(ContextEvent {
        t_s: 60.0,
        activity: Activity::Still,
    });
    assert!(run_session(&s, &activity_model, 10.0).is_err());
    assert!(run_session(&script(), &|_: &Features| f64::NAN, 10.0).is_err());
    assert!(run_session(&script(), &activity_model, -1.0).is_err());
}

#[test]
fn fixture_replay_savings() {
    let ds = ingest_dir(&fixture("sample"), &HeaderAliases::new()).unwrap();
    let c = cal();
    let obs = replay_study(&ds, Study::Two, ReplayPolicy::Observed, &c, 1080, 60.0).unwrap();
    // finals 720, 360, 480, 1080, 480 against 5 x 1080
    let p = (380.0 + 300.0 + 320.0 + 450.0 + 320.0) * 60.0 * 4.2 / 3600.0;
    let b = 5.0 * 450.0 * 60.0 * 4.2 / 3600.0;
    assert!((obs.total_policy_mwh - p).abs() < 1e-9 && (obs.total_baseline_mwh - b).abs() < 1e-9);
    assert!((obs.aggregate_savings_percent - 100.0 * (b - p) / b).abs() < 1e-9);
    assert!((obs.aggregate_savings_percent - 21.0 - 1.0 / 3.0).abs() < 1e-9);

    let ev = replay_study(
        &ds,
        Study::Two,
        ReplayPolicy::ObservedEvents,
        &c,
        1080,
        60.0,
    )
    .unwrap();
    let seconds_at =
        |segs: &[(f64, f64)]| segs.iter().map(|(d, i)| d * i).sum::<f64>() * 4.2 / 3600.0;
    let want = [
        seconds_at(&[(12.0, 300.0), (18.0, 320.0), (30.0, 380.0)]),
        seconds_at(&[(60.0, 300.0)]),
        seconds_at(&[(8.0, 300.0), (52.0, 320.0)]),
        seconds_at(&[(5.0, 300.0), (15.0, 380.0), (40.0, 450.0)]),
        seconds_at(&[(40.0, 300.0), (20.0, 320.0)]),
    ];
    for (s, w) in ev.sessions.iter().zip(want) {
        assert!(
            (s.policy_mwh - w).abs() < 1e-9,
            "{}/{}",
            s.participant_id,
            s.video_id
        );
    }
    let total: f64 = want.iter().sum();
    assert!((ev.aggregate_savings_percent - 100.0 * (b - total) / b).abs() < 1e-9);
    assert!((ev.aggregate_savings_percent - 24.0 - 8.0 / 9.0).abs() < 1e-9);

    let fixed = replay_study(&ds, Study::Two, ReplayPolicy::Fixed(1080), &c, 1080, 60.0).unwrap();
    assert_eq!(fixed.aggregate_savings_percent, 0.0);
    assert!(fixed.sessions.iter().all(|s| s.savings_percent == 0.0));

    let keys: Vec<_> = obs
        .sessions
        .iter()
        .map(|s| (s.participant_id.clone(), s.video_id.clone()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn missing_calibration_entry_is_an_error() {
    let ds = ingest_dir(&fixture("sample"), &HeaderAliases::new()).unwrap();
    let mut c = cal();
    c.entries.remove(&720);
    assert!(replay_study(&ds, Study::Two, ReplayPolicy::Observed, &c, 1080, 60.0).is_err());
    assert!(replay_study(&ds, Study::Two, ReplayPolicy::Observed, &cal(), 1080, 0.0).is_err());
}

#[test]
fn calibration_round_trip_and_monotonicity() {
    let c = cal();
    assert!(c.is_monotone());
    assert_eq!((c.voltage, c.codec_tag.as_str()), (4.2, "synthetic-hw"));
    let mut buf = Vec::new();
    c.to_writer(&mut buf).unwrap();
    assert_eq!(EnergyCalibration::from_reader(buf.as_slice()).unwrap(), c);
    let mut bent = c.clone();
    bent.entries.insert(480, 299.0);
    assert_eq!(bent.monotonicity_violations(), [(360, 480)]);
    assert!(EnergyCalibration::new("x", 0.0, c.entries.clone()).is_err());
    assert!(EnergyCalibration::new("x", 3.7, BTreeMap::new()).is_err());
}

#[test]
fn trace_files_compare() {
    let read =
        |n: &str| PlaybackTrace::from_csv_reader(std::fs::File::open(fixture(n)).unwrap()).unwrap();
    let traces = BTreeMap::from([
        ("fixed".to_string(), read("trace_fixed1080.csv")),
        ("adaptive".to_string(), read("trace_adaptive.csv")),
    ]);
    let r = compare_policies(&traces, "fixed", &cal()).unwrap();
    let e = (20.0 * 380.0 + 25.0 * 320.0 + 15.0 * 300.0) * 4.2 / 3600.0;
    assert!((r.policies["adaptive"].energy_mwh - e).abs() < 1e-12);
    let mut short = traces.clone();
    short.insert("short".into(), PlaybackTrace::constant(480, 30.0).unwrap());
    assert!(compare_policies(&short, "fixed", &cal()).is_err());
}
