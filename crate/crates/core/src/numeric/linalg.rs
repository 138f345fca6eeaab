//! Dense row-major matrices and the small set of solvers the rest of the
//! crate needs: Cholesky on symmetric positive (semi-)definite systems and
//! ordinary / ridge least squares on top of it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of finite `f64` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Schema(format!(
                "matrix storage has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Schema("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Overwrites one entry. Callers inside the crate only ever write finite
    /// values; the debug assertion guards the invariant.
    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(value.is_finite());
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &DenseMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Schema(format!(
                "cannot stack {} rows beside {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "vector length must match columns");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `AᵀA`, returned as a row-major `cols x cols` buffer.
    pub fn gram(&self) -> Vec<f64> {
        let p = self.cols;
        let mut g = vec![0.0; p * p];
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..p {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                let row = &mut g[a * p..a * p + p];
                for b in a..p {
                    row[b] += ra * r[b];
                }
            }
        }
        mirror_upper(&mut g, p);
        g
    }

    /// `Aᵀv`.
    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "vector length must match rows");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += x * vi;
            }
        }
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn mirror_upper(g: &mut [f64], p: usize) {
    for a in 0..p {
        for b in 0..a {
            g[a * p + b] = g[b * p + a];
        }
    }
}

/// In-place lower Cholesky factor of a `p x p` row-major matrix. Fails when a
/// pivot is not safely positive relative to the largest diagonal entry.
fn cholesky_in_place(a: &mut [f64], p: usize) -> bool {
    let max_diag = (0..p).map(|i| a[i * p + i].abs()).fold(0.0, f64::max);
    let floor = 1e-13 * max_diag.max(f64::MIN_POSITIVE);
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if !(d > floor) {
            return false;
        }
        let d = d.sqrt();
        a[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    true
}

fn cholesky_back_substitute(l: &[f64], p: usize, rhs: &[f64]) -> Vec<f64> {
    let mut y = rhs.to_vec();
    for i in 0..p {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * p + k] * y[k];
        }
        y[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in i + 1..p {
            s -= l[k * p + i] * y[k];
        }
        y[i] = s / l[i * p + i];
    }
    y
}

/// Solves `(G + ridge·I) w = rhs` for a symmetric `p x p` matrix `G` given in
/// row-major order.
///
/// On a failed factorisation the diagonal is jittered by `1e-10·trace/p`,
/// escalating by a factor 100 at most three times.
pub fn solve_symmetric(gram: &[f64], rhs: &[f64], ridge: f64) -> Result<Vec<f64>> {
    let p = rhs.len();
    if gram.len() != p * p {
        return Err(Error::Schema(format!(
            "gram has {} entries, expected {p}x{p}",
            gram.len()
        )));
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(Error::Precondition(format!(
            "ridge must be >= 0, got {ridge}"
        )));
    }
    if gram.iter().chain(rhs).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("normal equations"));
    }
    if p == 0 {
        return Ok(Vec::new());
    }
    let trace: f64 = (0..p).map(|i| gram[i * p + i]).sum();
    let base_jitter = 1e-10 * (trace.abs() / p as f64).max(f64::MIN_POSITIVE);

    let mut jitter = 0.0;
    for attempt in 0..=3 {
        let mut a = gram.to_vec();
        for i in 0..p {
            a[i * p + i] += ridge + jitter;
        }
        if cholesky_in_place(&mut a, p) {
            return Ok(cholesky_back_substitute(&a, p, rhs));
        }
        jitter = base_jitter * 100f64.powi(attempt);
    }
    Err(Error::Solve(format!(
        "{p}x{p} system is singular after diagonal jitter"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    /// `sqrt(RSS / max(n - p, 1))`.
    pub residual_std: f64,
}

/// Least squares `min ‖Xw − y‖² + ridge‖w‖²` through the normal equations.
pub fn ols_solve(design: &DenseMatrix, target: &[f64], ridge: f64) -> Result<OlsFit> {
    if target.len() != design.rows() {
        return Err(Error::Schema(format!(
            "target has {} values for {} design rows",
            target.len(),
            design.rows()
        )));
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression target"));
    }
    if design.rows() < design.cols() && ridge == 0.0 {
        return Err(Error::Precondition(format!(
            "{} rows cannot determine {} coefficients without a ridge",
            design.rows(),
            design.cols()
        )));
    }
    let gram = design.gram();
    let xty = design.transpose_mul_vec(target);
    let coefficients = solve_symmetric(&gram, &xty, ridge)?;
    let rss: f64 = (0..design.rows())
        .map(|i| {
            let r = target[i] - dot(design.row(i), &coefficients);
            r * r
        })
        .sum();
    let dof = design.rows().saturating_sub(design.cols()).max(1);
    Ok(OlsFit {
        coefficients,
        residual_std: (rss / dof as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gauss-Jordan inverse with partial pivoting; independent of the
    /// Cholesky path.
    fn invert(a: &[f64], p: usize) -> Vec<f64> {
        let mut m = a.to_vec();
        let mut inv = DenseMatrix::identity(p).as_slice().to_vec();
        for c in 0..p {
            let piv = (c..p)
                .max_by(|&i, &j| m[i * p + c].abs().total_cmp(&m[j * p + c].abs()))
                .unwrap();
            for k in 0..p {
                m.swap(c * p + k, piv * p + k);
                inv.swap(c * p + k, piv * p + k);
            }
            let d = m[c * p + c];
            for k in 0..p {
                m[c * p + k] /= d;
                inv[c * p + k] /= d;
            }
            for r in 0..p {
                if r != c {
                    let f = m[r * p + c];
                    for k in 0..p {
                        m[r * p + k] -= f * m[c * p + k];
                        inv[r * p + k] -= f * inv[c * p + k];
                    }
                }
            }
        }
        inv
    }

    fn lcg(state: &mut u64) -> f64 {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn identity_design_returns_target() {
        let x = DenseMatrix::identity(4);
        let y = [1.0, -2.0, 3.5, 0.25];
        let fit = ols_solve(&x, &y, 0.0).unwrap();
        for (w, t) in fit.coefficients.iter().zip(y) {
            assert!((w - t).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_linear_target_has_zero_residual() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![1.0, i as f64, (i * i) as f64 / 10.0])
            .collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 - 0.5 * r[1] + 3.0 * r[2]).collect();
        let fit = ols_solve(&x, &y, 0.0).unwrap();
        assert!(fit.residual_std < 1e-10, "{}", fit.residual_std);
    }

    #[test]
    fn random_system_matches_explicit_inverse() {
        let mut s = 17u64;
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| lcg(&mut s) * 4.0).collect())
            .collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..50).map(|_| lcg(&mut s) * 10.0).collect();

        let g = x.gram();
        let inv = invert(&g, 3);
        let xty = x.transpose_mul_vec(&y);
        let oracle: Vec<f64> = (0..3).map(|i| dot(&inv[i * 3..i * 3 + 3], &xty)).collect();

        let fit = ols_solve(&x, &y, 0.0).unwrap();
        for (a, b) in fit.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn cholesky_residual_is_small_on_well_conditioned_systems() {
        let mut s = 3u64;
        for p in [1usize, 2, 5, 9] {
            let rows: Vec<Vec<f64>> = (0..4 * p + 3)
                .map(|_| (0..p).map(|_| lcg(&mut s)).collect())
                .collect();
            let x = DenseMatrix::from_rows(&rows).unwrap();
            let mut g = x.gram();
            for i in 0..p {
                g[i * p + i] += 1.0;
            }
            let b: Vec<f64> = (0..p).map(|_| lcg(&mut s)).collect();
            let w = solve_symmetric(&g, &b, 0.0).unwrap();
            let resid: f64 = (0..p)
                .map(|i| (dot(&g[i * p..i * p + p], &w) - b[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(resid / norm_b <= 1e-8);
        }
    }

    #[test]
    fn collinear_design_recovers_with_jitter() {
        // Two identical columns: singular without jitter.
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64, i as f64]).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..10).map(|i| 1.0 + 2.0 * i as f64).collect();
        let fit = ols_solve(&x, &y, 0.0).unwrap();
        let pred = x.mul_vec(&fit.coefficients);
        for (p, t) in pred.iter().zip(&y) {
            assert!((p - t).abs() < 1e-4);
        }
    }

    #[test]
    fn rejects_non_finite_input() {
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        let x = DenseMatrix::identity(2);
        assert!(matches!(
            ols_solve(&x, &[1.0, f64::INFINITY], 0.0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn underdetermined_without_ridge_is_rejected() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(ols_solve(&x, &[1.0], 0.0).is_err());
        assert!(ols_solve(&x, &[1.0], 0.5).is_ok());
    }
}
