//! Kruskal-Wallis rank test and the eta-squared effect size derived from H.

use serde::{Deserialize, Serialize};

use super::special::chi2_sf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KwResult {
    /// Tie-corrected H statistic.
    pub h: f64,
    pub df: usize,
    pub p: f64,
    pub eta_squared: f64,
    pub k: usize,
    pub n: usize,
}

/// Mid-ranks (1-based) of `values`, ties sharing the average rank, plus the
/// tie correction term `sum(t^3 - t)` over tied blocks.
pub fn mid_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Kruskal-Wallis H test with the standard tie correction; p from the
/// chi-square survival function with `k - 1` degrees of freedom.
pub fn kruskal_wallis<G: AsRef<[f64]>>(groups: &[G]) -> Result<KwResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::invalid(format!(
            "Kruskal-Wallis needs at least 2 groups, got {k}"
        )));
    }
    if let Some(i) = groups.iter().position(|g| g.as_ref().is_empty()) {
        return Err(Error::invalid(format!("group {i} is empty")));
    }
    let pooled: Vec<f64> = groups
        .iter()
        .flat_map(|g| g.as_ref().iter().copied())
        .collect();
    if pooled.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("Kruskal-Wallis input contains NaN"));
    }
    let n = pooled.len();
    let (ranks, ties) = mid_ranks(&pooled);
    let nf = n as f64;
    let correction = 1.0 - ties / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Err(Error::invalid(
            "all observations are identical; H is undefined",
        ));
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let len = g.as_ref().len();
        let r: f64 = ranks[offset..offset + len].iter().sum();
        sum += r * r / len as f64;
        offset += len;
    }
    let h_raw = 12.0 / (nf * (nf + 1.0)) * sum - 3.0 * (nf + 1.0);
    let h = (h_raw / correction).max(0.0);
    let df = k - 1;
    Ok(KwResult {
        h,
        df,
        p: chi2_sf(h, df as f64)?,
        eta_squared: if n > k {
            eta_squared(h, k, n)?
        } else {
            f64::NAN
        },
        k,
        n,
    })
}

/// Eta-squared from a Kruskal-Wallis H: `(H - k + 1) / (n - k)`.
pub fn eta_squared(h: f64, k: usize, n: usize) -> Result<f64> {
    if k < 2 || n <= k {
        return Err(Error::invalid(format!(
            "eta-squared needs n > k >= 2, got n={n}, k={k}"
        )));
    }
    Ok((h - k as f64 + 1.0) / (n - k) as f64)
}
