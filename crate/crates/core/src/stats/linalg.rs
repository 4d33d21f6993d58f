//! Dense row-major matrix and a Householder QR used by the least-squares fits.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Householder QR of an `n x p` matrix with `n >= p`.
#[derive(Debug, Clone)]
pub struct Qr {
    n: usize,
    p: usize,
    /// Column-major; below the diagonal hold the unit Householder vectors,
    /// on and above it hold R (diagonal kept separately in `rdiag`).
    qr: Vec<f64>,
    rdiag: Vec<f64>,
    col_norms: Vec<f64>,
}

impl Qr {
    pub fn factor(x: &Matrix) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if n < p {
            return Err(Error::invalid(format!(
                "QR needs rows >= columns, got {n}x{p}"
            )));
        }
        let mut qr = vec![0.0; n * p];
        for c in 0..p {
            for r in 0..n {
                qr[c * n + r] = x.get(r, c);
            }
        }
        let col_norms: Vec<f64> = (0..p)
            .map(|c| {
                qr[c * n..(c + 1) * n]
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let mut rdiag = vec![0.0; p];
        for k in 0..p {
            let col = &mut qr[k * n..(k + 1) * n];
            let norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                rdiag[k] = 0.0;
                continue;
            }
            let alpha = if col[k] > 0.0 { -norm } else { norm };
            col[k] -= alpha;
            let vnorm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut col[k..] {
                *v /= vnorm;
            }
            rdiag[k] = alpha;
            let (head, tail) = qr.split_at_mut((k + 1) * n);
            let v = &head[k * n + k..(k + 1) * n];
            for j in 0..p - k - 1 {
                let a = &mut tail[j * n + k..(j + 1) * n];
                let dot: f64 = v.iter().zip(a.iter()).map(|(x, y)| x * y).sum();
                for (ai, vi) in a.iter_mut().zip(v) {
                    *ai -= 2.0 * dot * vi;
                }
            }
        }
        Ok(Self {
            n,
            p,
            qr,
            rdiag,
            col_norms,
        })
    }

    #[inline]
    fn r(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.rdiag[i]
        } else {
            self.qr[j * self.n + i]
        }
    }

    /// Columns whose R diagonal is negligible relative to the column's own
    /// norm, i.e. columns (nearly) spanned by the ones before them.
    pub fn dependent_columns(&self) -> Vec<usize> {
        const TOL: f64 = 1e-9;
        (0..self.p)
            .filter(|&j| self.col_norms[j] == 0.0 || self.rdiag[j].abs() <= TOL * self.col_norms[j])
            .collect()
    }

    /// `Q^T y`.
    pub fn qt_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        for k in 0..self.p {
            if self.rdiag[k] == 0.0 {
                continue;
            }
            let v = &self.qr[k * self.n + k..(k + 1) * self.n];
            let dot: f64 = v.iter().zip(&out[k..]).map(|(a, b)| a * b).sum();
            for (o, vi) in out[k..].iter_mut().zip(v) {
                *o -= 2.0 * dot * vi;
            }
        }
        out
    }

    /// Least-squares coefficients for `y`; requires full column rank.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let qty = self.qt_mul(y);
        let mut beta = vec![0.0; self.p];
        for i in (0..self.p).rev() {
            let s: f64 = (i + 1..self.p).map(|j| self.r(i, j) * beta[j]).sum();
            beta[i] = (qty[i] - s) / self.rdiag[i];
        }
        beta
    }

    /// `(X^T X)^{-1} = R^{-1} R^{-T}`, row-major `p x p`.
    pub fn xtx_inverse(&self) -> Vec<f64> {
        let p = self.p;
        let mut rinv = vec![0.0; p * p];
        for j in 0..p {
            rinv[j * p + j] = 1.0 / self.rdiag[j];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in i + 1..=j {
                    s += self.r(i, k) * rinv[k * p + j];
                }
                rinv[i * p + j] = -s / self.rdiag[i];
            }
        }
        let mut out = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                out[i * p + j] = (i.max(j)..p)
                    .map(|k| rinv[i * p + k] * rinv[j * p + k])
                    .sum();
            }
        }
        out
    }

    /// `ln |det R| = 0.5 ln det(X^T X)`.
    pub fn ln_abs_det_r(&self) -> f64 {
        self.rdiag.iter().map(|d| d.abs().ln()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        let x = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let qr = Qr::factor(&x).unwrap();
        let b = qr.solve(&[5.0, 10.0]);
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 3.0).abs() < 1e-12);
        // det = 5 -> (X^T X)^{-1} = X^{-1} X^{-T}
        assert!((qr.ln_abs_det_r() - 5f64.ln()).abs() < 1e-12);
        let inv = qr.xtx_inverse();
        // X^T X = [[5,5],[5,10]], inverse = [[0.4,-0.2],[-0.2,0.2]]
        let expect = [0.4, -0.2, -0.2, 0.2];
        for (a, b) in inv.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn flags_dependent_column() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![1.0, i as f64, 2.0 * i as f64 + 1.0])
            .collect();
        let qr = Qr::factor(&Matrix::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(qr.dependent_columns(), vec![2]);
    }
}
