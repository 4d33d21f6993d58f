//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::excessive_precision)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use resadapt::dataset::{Activity, AnalysisRow, Gender, Study};
use resadapt::stats::linalg::Matrix;
use resadapt::stats::{DesignMatrix, DesignSpec, Formula, INTERCEPT};

/// Population standard deviation by the two-pass formula.
pub fn std_two_pass(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt()
}

/// Naive per-frame SI: 3x3 Sobel on interior pixels, std of magnitudes.
pub fn naive_si(frame: &[Vec<f64>]) -> f64 {
    let h = frame.len();
    let w = frame[0].len();
    let mut mags = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let p = |dx: i64, dy: i64| frame[(y as i64 + dy) as usize][(x as i64 + dx) as usize];
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            mags.push((gx * gx + gy * gy).sqrt());
        }
    }
    std_two_pass(&mags)
}

/// Naive TI between two frames: std of pixel differences.
pub fn naive_ti(prev: &[Vec<f64>], cur: &[Vec<f64>]) -> f64 {
    let d: Vec<f64> = prev
        .iter()
        .flatten()
        .zip(cur.iter().flatten())
        .map(|(a, b)| b - a)
        .collect();
    std_two_pass(&d)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-12
}

pub fn row(id: &str, video: &str, activity: Activity, si: f64, ti: f64, res: u32) -> AnalysisRow {
    AnalysisRow {
        participant_id: id.into(),
        video_id: video.into(),
        study: Study::One,
        final_resolution: res,
        activity,
        si,
        ti,
        gender: Gender::Female,
        age: 25,
        glasses: false,
        traits: None,
    }
}

/// Design matrix from raw columns (intercept added).
pub fn raw_design(x_cols: &[Vec<f64>], y: Vec<f64>) -> DesignMatrix {
    let n = y.len();
    let mut names = vec![INTERCEPT.to_string()];
    names.extend((0..x_cols.len()).map(|j| format!("x{j}")));
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            std::iter::once(1.0)
                .chain(x_cols.iter().map(|c| c[i]))
                .collect()
        })
        .collect();
    DesignMatrix {
        names,
        x: Matrix::from_rows(&rows).unwrap(),
        y,
        spec: DesignSpec {
            formula: Formula { terms: vec![] },
            levels: Default::default(),
            references: Default::default(),
        },
    }
}

/// Rescales `v` to mean 0 and sample variance exactly `var`.
pub fn standardize(v: &mut [f64], var: f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s2 = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    let k = (var / s2).sqrt();
    for x in v.iter_mut() {
        *x = (*x - m) * k;
    }
}

/// Random-intercept data: y = 10 + 2 x + a[g] + e with `groups` x `per_group`
/// rows. Group effects and residuals are rescaled so their sample variances
/// equal `var_group` and `var_resid` exactly.
pub fn planted_lmm(
    seed: u64,
    groups: usize,
    per_group: usize,
    var_group: f64,
    var_resid: f64,
) -> (DesignMatrix, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a: Vec<f64> = (0..groups)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    if var_group > 0.0 {
        standardize(&mut a, var_group);
    } else {
        a.iter_mut().for_each(|v| *v = 0.0);
    }
    let n = groups * per_group;
    let mut e: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    standardize(&mut e, var_resid);
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let labels: Vec<String> = (0..n).map(|i| format!("g{:03}", i / per_group)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 10.0 + 2.0 * x[i] + a[i / per_group] + e[i])
        .collect();
    (raw_design(&[x], y), labels)
}

/// Frozen high-precision chi-square survival values (x, df, sf), computed
/// with 50-digit arithmetic.
pub const CHI2_ORACLE: [(f64, f64, f64); 20] = [
    (0.5, 1.0, 0.47950012218695346232),
    (1.0, 1.0, 0.31731050786291410283),
    (3.84, 1.0, 0.050043521248705103189),
    (0.1, 2.0, 0.95122942450071400645),
    (2.0, 2.0, 0.3678794411714423216),
    (5.99, 2.0, 0.050036627086586282516),
    (14.139, 3.0, 0.0027219273953907090666),
    (7.81, 3.0, 0.050106056350005941339),
    (0.5, 3.0, 0.91889141165467585936),
    (19.817, 2.0, 0.000049750004694393915534),
    (15.874, 4.0, 0.0031929818882338166165),
    (65.328, 11.0, 9.3488320731697570281e-10),
    (79.045, 11.0, 2.2570399516577193969e-12),
    (1.0, 5.0, 0.96256577324729636896),
    (10.0, 5.0, 0.075235246146512178722),
    (25.0, 10.0, 0.0053455054871340642993),
    (3.0, 10.0, 0.9814240637778593257),
    (100.0, 50.0, 0.000034549313829848639421),
    (60.0, 70.0, 0.79730832548311726793),
    (0.01, 0.5, 0.70691910527898041424),
];

/// Frozen Student-t upper-tail values (t, df, sf).
pub const T_ORACLE: [(f64, f64, f64); 10] = [
    (0.0, 5.0, 0.5),
    (1.0, 1.0, 0.25),
    (2.5, 3.0, 0.043853323504032773625),
    (-1.5, 10.0, 0.91774633677727990958),
    (3.0, 30.0, 0.0026949820328259733064),
    (1.96, 1000.0, 0.025136592477874359217),
    (0.3, 2.0, 0.39624283042008880532),
    (5.0, 4.0, 0.0037452169406372622807),
    (-2.2, 253.0, 0.98564430844832700779),
    (12.0, 7.0, 3.1791551890925501353e-6),
];
