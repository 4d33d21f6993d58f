//! Random-intercept linear mixed model `y = X b + a[group] + e` fitted by REML.
//!
//! With `lambda = var_group / var_residual` the marginal covariance is
//! `var_residual * H`, `H = I + lambda Z Z^T`. Within a group of size `m`,
//! `H^{-1/2} = I - c J/m` with `c = 1 - 1/sqrt(1 + lambda m)`, so the GLS
//! problem becomes OLS on group-wise shrunk data. `b` and `var_residual` are
//! profiled out analytically; only `lambda` is searched, on a log scale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::design::{check_rank, DesignMatrix};
use super::linalg::{Matrix, Qr};
use super::ols::Coefficient;
use crate::error::{Error, Result};
use crate::numeric::sample_variance;

const LOG_LAMBDA_MIN: f64 = -20.0;
const LOG_LAMBDA_MAX: f64 = 15.0;
const GRID_STEP: f64 = 0.5;
/// Convergence tolerance on ln(lambda).
pub const LOG_LAMBDA_TOL: f64 = 1e-8;
const MAX_GOLDEN_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmmFit {
    pub coefficients: Vec<Coefficient>,
    pub var_group: f64,
    pub var_residual: f64,
    /// var_group / var_residual at the optimum.
    pub lambda: f64,
    pub reml_loglik: f64,
    /// Gaussian log-likelihood evaluated at the REML estimates.
    pub ml_loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub icc: f64,
    pub r2_marginal: f64,
    pub r2_conditional: f64,
    pub n: usize,
    pub n_groups: usize,
    /// Residual degrees of freedom used for fixed-effect p-values: n - p - groups.
    pub df_fixed: usize,
    /// True when the optimum sits on var_group = 0.
    pub boundary: bool,
    /// Predicted (BLUP) intercept deviation per group.
    pub group_effects: BTreeMap<String, f64>,
}

impl LmmFit {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }
}

struct Grouping {
    labels: Vec<String>,
    index: Vec<usize>,
    sizes: Vec<usize>,
}

impl Grouping {
    fn new(groups: &[String], n: usize) -> Result<Self> {
        if groups.len() != n {
            return Err(Error::invalid(format!(
                "{} group labels for {n} observations",
                groups.len()
            )));
        }
        let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
        for g in groups {
            let next = ids.len();
            ids.entry(g.as_str()).or_insert(next);
        }
        // relabel in sorted order for deterministic output
        let labels: Vec<String> = ids.keys().map(|s| s.to_string()).collect();
        let pos: BTreeMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let index: Vec<usize> = groups.iter().map(|g| pos[g.as_str()]).collect();
        let mut sizes = vec![0; labels.len()];
        for &g in &index {
            sizes[g] += 1;
        }
        if labels.len() < 2 {
            return Err(Error::invalid(format!(
                "a mixed model needs at least 2 groups, got {}",
                labels.len()
            )));
        }
        Ok(Self {
            labels,
            index,
            sizes,
        })
    }

    fn group_means(&self, v: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.sizes.len()];
        for (x, &g) in v.iter().zip(&self.index) {
            sums[g] += x;
        }
        sums.iter()
            .zip(&self.sizes)
            .map(|(s, &m)| s / m as f64)
            .collect()
    }
}

/// Profiled quantities at one lambda.
struct Profile {
    qr: Qr,
    beta: Vec<f64>,
    /// r^T H^{-1} r
    quad: f64,
    ln_det_h: f64,
    reml: f64,
}

fn profile(x: &Matrix, y: &[f64], grouping: &Grouping, lambda: f64) -> Result<Profile> {
    let (n, p) = (x.rows(), x.cols());
    let shrink: Vec<f64> = grouping
        .sizes
        .iter()
        .map(|&m| 1.0 - 1.0 / (1.0 + lambda * m as f64).sqrt())
        .collect();
    let mut xt = x.clone();
    for c in 0..p {
        let col = x.column(c);
        let means = grouping.group_means(&col);
        for (r, &g) in grouping.index.iter().enumerate() {
            xt.set(r, c, col[r] - shrink[g] * means[g]);
        }
    }
    let ymeans = grouping.group_means(y);
    let yt: Vec<f64> = y
        .iter()
        .zip(&grouping.index)
        .map(|(v, &g)| v - shrink[g] * ymeans[g])
        .collect();
    let qr = Qr::factor(&xt)?;
    let beta = qr.solve(&yt);
    let fitted = xt.mul_vec(&beta);
    let quad: f64 = yt.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let ln_det_h: f64 = grouping
        .sizes
        .iter()
        .map(|&m| (lambda * m as f64).ln_1p())
        .sum();
    let dof = (n - p) as f64;
    let reml = -0.5
        * (dof * (1.0 + (2.0 * std::f64::consts::PI * quad / dof).ln())
            + ln_det_h
            + 2.0 * qr.ln_abs_det_r());
    Ok(Profile {
        qr,
        beta,
        quad,
        ln_det_h,
        reml,
    })
}

fn validate(design: &DesignMatrix, groups: &[String]) -> Result<Grouping> {
    check_rank(design)?;
    let grouping = Grouping::new(groups, design.n())?;
    if design.n() <= design.p() {
        return Err(Error::invalid(format!(
            "need more observations than fixed effects, got n={}, p={}",
            design.n(),
            design.p()
        )));
    }
    Ok(grouping)
}

/// Restricted log-likelihood at a given variance ratio, with fixed effects
/// and residual variance profiled out.
pub fn reml_loglik(design: &DesignMatrix, groups: &[String], lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "variance ratio must be finite and >= 0, got {lambda}"
        )));
    }
    let grouping = validate(design, groups)?;
    Ok(profile(&design.x, &design.y, &grouping, lambda)?.reml)
}

/// Fits the model by REML: a log-spaced grid over ln(lambda) brackets the
/// maximum, golden-section search refines it to [`LOG_LAMBDA_TOL`].
pub fn lmm_fit(design: &DesignMatrix, groups: &[String]) -> Result<LmmFit> {
    let grouping = validate(design, groups)?;
    let eval = |theta: f64| profile(&design.x, &design.y, &grouping, theta.exp()).map(|p| p.reml);

    let steps = ((LOG_LAMBDA_MAX - LOG_LAMBDA_MIN) / GRID_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| LOG_LAMBDA_MIN + i as f64 * GRID_STEP)
        .collect();
    let values = grid.iter().map(|&t| eval(t)).collect::<Result<Vec<_>>>()?;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > values[b] { i } else { b });

    if best == 0 {
        let at_zero = profile(&design.x, &design.y, &grouping, 0.0)?.reml;
        if at_zero >= values[0] || values[1] <= values[0] {
            return finish(design, &grouping, 0.0, true);
        }
    }
    if best == grid.len() - 1 {
        return Err(Error::NonConvergence(format!(
            "REML still increasing at ln(lambda) = {LOG_LAMBDA_MAX} (value {:.6}); group variance dominates residual",
            values[best]
        )));
    }

    let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid[best + 1]);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    let mut iter = 0;
    while hi - lo > LOG_LAMBDA_TOL {
        iter += 1;
        if iter > MAX_GOLDEN_ITER {
            return Err(Error::NonConvergence(format!(
                "golden-section search stalled in bracket [{lo}, {hi}] of ln(lambda) after {MAX_GOLDEN_ITER} steps"
            )));
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = eval(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = eval(d)?;
        }
    }
    let theta = 0.5 * (lo + hi);
    finish(design, &grouping, theta.exp(), false)
}

/// Evaluates the model at a fixed variance ratio (no search). With
/// `lambda = 0` the fixed effects coincide with OLS.
pub fn lmm_fit_at(design: &DesignMatrix, groups: &[String], lambda: f64) -> Result<LmmFit> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "variance ratio must be finite and >= 0, got {lambda}"
        )));
    }
    let grouping = validate(design, groups)?;
    finish(design, &grouping, lambda, lambda == 0.0)
}

fn finish(
    design: &DesignMatrix,
    grouping: &Grouping,
    lambda: f64,
    boundary: bool,
) -> Result<LmmFit> {
    let (n, p) = (design.n(), design.p());
    let prof = profile(&design.x, &design.y, grouping, lambda)?;
    let var_residual = prof.quad / (n - p) as f64;
    let var_group = lambda * var_residual;
    let ml_loglik = -0.5
        * (n as f64 * (2.0 * std::f64::consts::PI * var_residual).ln()
            + prof.ln_det_h
            + prof.quad / var_residual);
    let k = (p + 2) as f64;
    let df_fixed = n.saturating_sub(p + grouping.sizes.len()).max(1);
    let inv = prof.qr.xtx_inverse();
    let coefficients = prof
        .beta
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            Coefficient::new(
                design.names[i].clone(),
                b,
                (var_residual * inv[i * p + i]).sqrt(),
                df_fixed as f64,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let fixed_pred = design.x.mul_vec(&prof.beta);
    let resid: Vec<f64> = design
        .y
        .iter()
        .zip(&fixed_pred)
        .map(|(a, b)| a - b)
        .collect();
    let resid_means = grouping.group_means(&resid);
    let group_effects = grouping
        .labels
        .iter()
        .zip(&grouping.sizes)
        .zip(&resid_means)
        .map(|((l, &m), &rm)| {
            let w = lambda * m as f64;
            (l.clone(), w / (1.0 + w) * rm)
        })
        .collect();

    let var_fixed = sample_variance(&fixed_pred);
    let var_fixed = if var_fixed.is_finite() {
        var_fixed
    } else {
        0.0
    };
    let total = var_fixed + var_group + var_residual;
    let (r2_marginal, r2_conditional) = if total > 0.0 {
        (var_fixed / total, (var_fixed + var_group) / total)
    } else {
        (0.0, 0.0)
    };
    let icc = if var_group + var_residual > 0.0 {
        var_group / (var_group + var_residual)
    } else {
        0.0
    };
    Ok(LmmFit {
        coefficients,
        var_group,
        var_residual,
        lambda,
        reml_loglik: prof.reml,
        ml_loglik,
        aic: 2.0 * k - 2.0 * ml_loglik,
        bic: k * (n as f64).ln() - 2.0 * ml_loglik,
        icc,
        r2_marginal,
        r2_conditional,
        n,
        n_groups: grouping.sizes.len(),
        df_fixed,
        boundary,
        group_effects,
    })
}

/// Marginal and conditional pseudo-R^2 for a fitted model:
/// `var_f / total` and `(var_f + var_group) / total`, where `var_f` is the
/// sample variance of the fixed-effect predictor over `design`'s rows.
pub fn pseudo_r2(fit: &LmmFit, design: &DesignMatrix) -> Result<(f64, f64)> {
    if fit.coefficients.len() != design.p() {
        return Err(Error::invalid(
            "fit and design have different fixed effects",
        ));
    }
    let pred = design.x.mul_vec(&fit.estimates());
    let var_f = if pred.len() > 1 {
        sample_variance(&pred)
    } else {
        0.0
    };
    let total = var_f + fit.var_group + fit.var_residual;
    if total <= 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok((var_f / total, (var_f + fit.var_group) / total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::design::INTERCEPT;

    fn intercept_design(y: Vec<f64>) -> DesignMatrix {
        let n = y.len();
        DesignMatrix {
            names: vec![INTERCEPT.into()],
            x: Matrix::from_rows(&vec![vec![1.0]; n]).unwrap(),
            y,
            spec: crate::stats::design::DesignSpec {
                formula: crate::stats::Formula { terms: vec![] },
                levels: Default::default(),
                references: Default::default(),
            },
        }
    }

    #[test]
    fn balanced_one_way_matches_anova_estimator() {
        // 3 groups x 4 obs; REML equals the ANOVA estimator when positive.
        let data = [
            [1.0, 2.0, 3.0, 2.0],
            [5.0, 6.0, 4.0, 5.0],
            [9.0, 8.0, 10.0, 9.0],
        ];
        let y: Vec<f64> = data.iter().flatten().copied().collect();
        let groups: Vec<String> = (0..3)
            .flat_map(|g| std::iter::repeat_n(format!("g{g}"), 4))
            .collect();
        let fit = lmm_fit(&intercept_design(y), &groups).unwrap();
        // MSW = (2 + 2 + 2)/9, MSB = 4 * ((2-5.33)^2 + (5-5.33)^2 + (9-5.33)^2)/2
        let gm = [2.0, 5.0, 9.0];
        let grand = 16.0 / 3.0;
        let msw = 6.0 / 9.0;
        let msb = 4.0 * gm.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / 2.0;
        assert!(
            (fit.var_residual - msw).abs() < 1e-6,
            "{}",
            fit.var_residual
        );
        assert!(
            (fit.var_group - (msb - msw) / 4.0).abs() < 1e-5,
            "{}",
            fit.var_group
        );
        assert!(!fit.boundary);
        assert!((fit.coefficients[0].estimate - grand).abs() < 1e-9);
    }

    #[test]
    fn no_between_group_signal_hits_boundary() {
        // identical group means -> var_group = 0
        let y = vec![1.0, 3.0, 2.0, 2.0, 1.0, 3.0, 3.0, 1.0, 2.0];
        let groups: Vec<String> = (0..3)
            .flat_map(|g| std::iter::repeat_n(format!("g{g}"), 3))
            .collect();
        let fit = lmm_fit(&intercept_design(y), &groups).unwrap();
        assert!(fit.boundary);
        assert_eq!(fit.var_group, 0.0);
        assert_eq!(fit.r2_marginal, fit.r2_conditional);
    }

    #[test]
    fn requires_two_groups() {
        let y = vec![1.0, 2.0, 3.0];
        assert!(lmm_fit(
            &intercept_design(y),
            &["a".to_string(), "a".into(), "a".into()]
        )
        .is_err());
    }
}
