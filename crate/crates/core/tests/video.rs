mod common;

use common::{close, naive_si, naive_ti};
use proptest::prelude::*;
use resadapt::synth::moving_bar;
use resadapt::video::{
    compute_siti, parse_raw_planar, parse_y4m, write_y4m, Aggregation, ChromaFormat, LumaFrame,
    SiTiThresholds, VideoSequence,
};
use resadapt::Error;

fn as_grid(f: &LumaFrame) -> Vec<Vec<f64>> {
    (0..f.height())
        .map(|y| (0..f.width()).map(|x| f64::from(f.at(x, y))).collect())
        .collect()
}

fn sequence(frames: &[Vec<u8>], w: usize, h: usize) -> VideoSequence {
    let frames = frames
        .iter()
        .map(|s| LumaFrame::new(w, h, s.clone()).unwrap())
        .collect();
    VideoSequence::new(frames, 25.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn siti_matches_naive_reference(frames in prop::collection::vec(prop::collection::vec(any::<u8>(), 64), 5)) {
        let seq = sequence(&frames, 8, 8);
        let p = compute_siti(&seq).unwrap();
        let grids: Vec<_> = seq.frames().iter().map(as_grid).collect();
        let si: Vec<f64> = grids.iter().map(|g| naive_si(g)).collect();
        let ti: Vec<f64> = grids.windows(2).map(|w| naive_ti(&w[0], &w[1])).collect();
        for (a, b) in p.si_series.iter().zip(&si) {
            prop_assert!(close(*a, *b, 1e-9), "si {a} vs {b}");
        }
        for (a, b) in p.ti_series.iter().zip(&ti) {
            prop_assert!(close(*a, *b, 1e-9), "ti {a} vs {b}");
        }
        let si_max = si.iter().copied().fold(f64::MIN, f64::max);
        let ti_max = ti.iter().copied().fold(f64::MIN, f64::max);
        prop_assert!(close(p.si_max, si_max, 1e-9));
        prop_assert!(close(p.ti_max.unwrap(), ti_max, 1e-9));
        prop_assert!(close(p.si_mean, si.iter().sum::<f64>() / 5.0, 1e-9));
        prop_assert!(close(p.ti_mean.unwrap(), ti.iter().sum::<f64>() / 4.0, 1e-9));
        prop_assert!(p.si_mean <= p.si_max && p.ti_mean.unwrap() <= p.ti_max.unwrap());
    }

    #[test]
    fn y4m_round_trip(w in 1usize..12, h in 1usize..10, n in 1usize..4, seed in any::<u8>()) {
        let frames: Vec<LumaFrame> = (0..n)
            .map(|k| LumaFrame::from_fn(w, h, |x, y| (x * 31 + y * 17 + k * 7) as u8 ^ seed).unwrap())
            .collect();
        let seq = VideoSequence::new(frames, 24.0).unwrap();
        let mut bytes = Vec::new();
        write_y4m(&seq, &mut bytes).unwrap();
        let back = parse_y4m(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.frames(), seq.frames());
        prop_assert_eq!(back.frame_rate(), 24.0);
    }
}

#[test]
fn constant_video_is_all_zero() {
    let f = LumaFrame::filled(16, 9, 77).unwrap();
    let p =
        compute_siti(&VideoSequence::new(vec![f.clone(), f.clone(), f], 30.0).unwrap()).unwrap();
    assert!(p.si_series.iter().chain(&p.ti_series).all(|&v| v == 0.0));
    assert_eq!((p.si_max, p.ti_max, p.ti_mean), (0.0, Some(0.0), Some(0.0)));
    let s = p
        .summary(&SiTiThresholds::default(), Aggregation::Mean)
        .unwrap();
    assert_eq!(s.category.unwrap().to_string(), "LowSiLowTi");
}

#[test]
fn single_frame_has_undefined_ti() {
    let f = LumaFrame::from_fn(8, 8, |x, y| ((x * x * 7 + y * 3) % 256) as u8).unwrap();
    let p = compute_siti(&VideoSequence::new(vec![f], 30.0).unwrap()).unwrap();
    assert!(p.si_max > 0.0);
    assert_eq!(p.ti_max, None);
    assert!(p
        .summary(&SiTiThresholds::default(), Aggregation::Max)
        .unwrap()
        .category
        .is_none());
}

#[test]
fn moving_bar_has_motion() {
    let seq = moving_bar(32, 16, 6, 4, 2).unwrap();
    let p = compute_siti(&seq).unwrap();
    assert!(p.ti_series.iter().all(|&t| t > 0.0));
    assert!(
        p.si_series[1..]
            .windows(2)
            .all(|w| close(w[0], w[1], 1e-12)),
        "interior bar shape is translation invariant"
    );
}

#[test]
fn raw_planar_matches_y4m_payload() {
    let seq = moving_bar(10, 6, 3, 2, 1).unwrap();
    let mut y4m = Vec::new();
    write_y4m(&seq, &mut y4m).unwrap();
    let mut raw = Vec::new();
    for f in seq.frames() {
        raw.extend_from_slice(f.samples());
        raw.extend(std::iter::repeat_n(
            128,
            ChromaFormat::Yuv420.chroma_bytes(10, 6),
        ));
    }
    let back = parse_raw_planar(raw.as_slice(), 10, 6, ChromaFormat::Yuv420, 30.0).unwrap();
    assert_eq!(back.frames(), parse_y4m(y4m.as_slice()).unwrap().frames());
}

#[test]
fn truncated_stream_reports_offset() {
    let seq = moving_bar(8, 4, 2, 2, 1).unwrap();
    let mut bytes = Vec::new();
    write_y4m(&seq, &mut bytes).unwrap();
    bytes.truncate(bytes.len() - 5);
    match parse_y4m(bytes.as_slice()) {
        Err(Error::VideoParse { offset, .. }) => assert!(offset > 0),
        other => panic!("expected a parse error, got {other:?}"),
    }
}
