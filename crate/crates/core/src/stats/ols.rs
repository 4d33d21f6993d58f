use serde::{Deserialize, Serialize};

use super::design::{check_rank, DesignMatrix};
use super::linalg::{Matrix, Qr};
use super::special::t_two_sided;
use crate::error::{Error, Result};
use crate::numeric::mean;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

impl Coefficient {
    pub(crate) fn new(name: String, estimate: f64, std_error: f64, df: f64) -> Result<Self> {
        let (t_value, p_value) = if std_error > 0.0 {
            let t = estimate / std_error;
            (t, t_two_sided(t, df)?)
        } else if estimate == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(estimate), 0.0)
        };
        Ok(Self {
            name,
            estimate,
            std_error,
            t_value,
            p_value,
        })
    }

    /// Significance marks: `***` p<0.01, `**` p<0.05, `*` p<0.1.
    pub fn stars(&self) -> &'static str {
        match self.p_value {
            p if p < 0.01 => "***",
            p if p < 0.05 => "**",
            p if p < 0.1 => "*",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub residual_se: f64,
    pub n: usize,
    pub df_residual: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl OlsFit {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }
}

/// Ordinary least squares on a built design (uses `design.y`).
pub fn ols_fit(design: &DesignMatrix) -> Result<OlsFit> {
    check_rank(design)?;
    ols(&design.x, &design.y, &design.names)
}

/// Ordinary least squares via Householder QR; t-based p-values.
pub fn ols(x: &Matrix, y: &[f64], names: &[String]) -> Result<OlsFit> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n || names.len() != p {
        return Err(Error::invalid(format!(
            "shape mismatch: X {n}x{p}, y {}, names {}",
            y.len(),
            names.len()
        )));
    }
    if n <= p {
        return Err(Error::invalid(format!(
            "OLS needs more rows than columns, got n={n}, p={p}"
        )));
    }
    let qr = Qr::factor(x)?;
    let dependent = qr.dependent_columns();
    if !dependent.is_empty() {
        return Err(Error::RankDeficient {
            columns: dependent.iter().map(|&i| names[i].clone()).collect(),
        });
    }
    let beta = qr.solve(y);
    let fitted = x.mul_vec(&beta);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let ybar = mean(y);
    let tss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let df_residual = n - p;
    let sigma2 = rss / df_residual as f64;
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).max(0.0)
    } else {
        0.0
    };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df_residual as f64;
    let inv = qr.xtx_inverse();
    let coefficients = beta
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            Coefficient::new(
                names[i].clone(),
                b,
                (sigma2 * inv[i * p + i]).sqrt(),
                df_residual as f64,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OlsFit {
        coefficients,
        r_squared,
        adj_r_squared,
        residual_se: sigma2.sqrt(),
        n,
        df_residual,
        residuals,
    })
}
