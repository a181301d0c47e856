//! Dense least squares via Householder QR.

use alloc::vec;
use alloc::vec::Vec;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (c, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "ragged columns");
            for (r, &v) in col.iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Thin QR factorization `X = Q R` kept in compact Householder form.
#[derive(Debug, Clone)]
pub struct Qr {
    /// Householder vectors below the diagonal, R on and above it.
    packed: Matrix,
    /// Householder scaling factors.
    tau: Vec<f64>,
}

/// Column `k` is numerically dependent on columns `0..k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankDeficient {
    pub column: usize,
}

impl Qr {
    /// Factorizes `x` (rows >= cols). A column whose residual norm after
    /// projecting out the previous columns falls below `rel_tol` times its
    /// original norm is reported as dependent.
    pub fn new(x: &Matrix, rel_tol: f64) -> Result<Self, RankDeficient> {
        let (m, n) = (x.rows, x.cols);
        assert!(m >= n, "least squares needs at least as many rows as columns");
        let mut a = x.clone();
        let norms: Vec<f64> = (0..n)
            .map(|c| libm::sqrt((0..m).map(|r| a[(r, c)] * a[(r, c)]).sum::<f64>()))
            .collect();
        let mut tau = vec![0.0; n];
        for k in 0..n {
            let alpha = libm::sqrt((k..m).map(|r| a[(r, k)] * a[(r, k)]).sum::<f64>());
            if !(alpha > rel_tol * norms[k]) || norms[k] == 0.0 {
                return Err(RankDeficient { column: k });
            }
            let akk = a[(k, k)];
            let beta = if akk > 0.0 { -alpha } else { alpha };
            // v = x - beta e1, normalized so v[0] = 1.
            let v0 = akk - beta;
            for r in k + 1..m {
                a[(r, k)] /= v0;
            }
            tau[k] = (beta - akk) / beta;
            a[(k, k)] = beta;
            for c in k + 1..n {
                let mut dot = a[(k, c)];
                for r in k + 1..m {
                    dot += a[(r, k)] * a[(r, c)];
                }
                dot *= tau[k];
                a[(k, c)] -= dot;
                for r in k + 1..m {
                    let vr = a[(r, k)];
                    a[(r, c)] -= dot * vr;
                }
            }
        }
        Ok(Self { packed: a, tau })
    }

    fn apply_qt(&self, y: &mut [f64]) {
        let (m, n) = (self.packed.rows, self.packed.cols);
        for k in 0..n {
            let mut dot = y[k];
            for r in k + 1..m {
                dot += self.packed[(r, k)] * y[r];
            }
            dot *= self.tau[k];
            y[k] -= dot;
            for r in k + 1..m {
                y[r] -= dot * self.packed[(r, k)];
            }
        }
    }

    /// Least-squares coefficients minimizing `|X b - y|`.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let n = self.packed.cols;
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let mut b = qty[..n].to_vec();
        for k in (0..n).rev() {
            for c in k + 1..n {
                b[k] -= self.packed[(k, c)] * b[c];
            }
            b[k] /= self.packed[(k, k)];
        }
        b
    }

    /// `(X'X)^{-1} = R^{-1} R^{-T}`.
    pub fn gram_inverse(&self) -> Matrix {
        let n = self.packed.cols;
        // Rinv is upper triangular.
        let mut rinv = Matrix::zeros(n, n);
        for j in 0..n {
            rinv[(j, j)] = 1.0 / self.packed[(j, j)];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in i + 1..=j {
                    s += self.packed[(i, k)] * rinv[(k, j)];
                }
                rinv[(i, j)] = -s / self.packed[(i, i)];
            }
        }
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (j..n).map(|k| rinv[(i, k)] * rinv[(j, k)]).sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky
/// factorization. Returns `None` when a pivot is not positive.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = libm::sqrt(d);
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= l[(i, k)] * x[k];
        }
        x[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= l[(k, i)] * x[k];
        }
        x[i] /= l[(i, i)];
    }
    Some(x)
}
