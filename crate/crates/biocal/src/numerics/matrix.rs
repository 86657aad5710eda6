use super::NumericsError;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the entry count does
    /// not equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "matrix data length {} does not match {rows}x{cols}",
            data.len()
        );
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mat_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Lower-triangular Cholesky factor `L` with `L Lᵀ = self`.
    ///
    /// Requires symmetry within `1e-10` relative tolerance and strictly
    /// positive pivots relative to the largest diagonal entry.
    pub fn cholesky(&self) -> Result<Matrix, NumericsError> {
        if self.rows != self.cols {
            return Err(NumericsError::DimensionMismatch(format!(
                "cholesky needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let scale = self.max_abs();
        if !scale.is_finite() {
            return Err(NumericsError::NotSymmetric);
        }
        let sym_tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                if (self[(i, j)] - self[(j, i)]).abs() > sym_tol {
                    return Err(NumericsError::NotSymmetric);
                }
            }
        }
        let max_diag = (0..n).fold(0.0f64, |m, i| m.max(self[(i, i)].abs()));
        let pivot_tol = 1e-12 * max_diag.max(f64::MIN_POSITIVE);

        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > pivot_tol) {
                return Err(NumericsError::NotPositiveDefinite { index: j, pivot: d });
            }
            let dj = d.sqrt();
            l[(j, j)] = dj;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / dj;
            }
        }
        Ok(l)
    }

    /// Solves `L x = b` for lower-triangular `L` (in place on a copy of `b`).
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rows;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self[(i, k)] * x[k];
            }
            x[i] /= self[(i, i)];
        }
        x
    }

    /// Solves `Lᵀ x = b` for lower-triangular `L`.
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rows;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self[(k, i)] * x[k];
            }
            x[i] /= self[(i, i)];
        }
        x
    }

    /// Inverse of a symmetric positive-definite matrix via its Cholesky
    /// factor.
    pub fn spd_inverse(&self) -> Result<Matrix, NumericsError> {
        let l = self.cholesky()?;
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            let y = l.solve_lower(&e);
            let x = l.solve_lower_transpose(&y);
            for i in 0..n {
                inv[(i, j)] = x[i];
            }
        }
        // Symmetrize against round-off.
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = avg;
                inv[(j, i)] = avg;
            }
        }
        Ok(inv)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cholesky_identity() {
        let l = Matrix::identity(3).cholesky().unwrap();
        assert_eq!(l, Matrix::identity(3));
    }

    #[test]
    fn cholesky_hand_checked_2x2() {
        let s = Matrix::from_vec(2, 2, vec![4.0, 2.0, 2.0, 3.0]);
        let l = s.cholesky().unwrap();
        assert_abs_diff_eq!(l[(0, 0)], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l[(0, 1)], 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(l[(1, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l[(1, 1)], 2.0f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn cholesky_recovers_covariate_covariance() {
        // The 3×3 covariance used by the folate generating scenario.
        let s = Matrix::from_vec(
            3,
            3,
            vec![
                0.2948574, -0.6786461, -0.2807268, -0.6786461, 194.0924000, 8.3544090,
                -0.2807268, 8.3544090, 36.8888900,
            ],
        );
        let l = s.cholesky().unwrap();
        let back = l.matmul(&l.transpose());
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (back[(i, j)] - s[(i, j)]).abs() <= 1e-8 * s.max_abs(),
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let s = Matrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        match s.cholesky() {
            Err(NumericsError::NotPositiveDefinite { .. }) => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_rejects_asymmetric() {
        let s = Matrix::from_vec(2, 2, vec![1.0, 0.5, 0.2, 1.0]);
        assert_eq!(s.cholesky().unwrap_err(), NumericsError::NotSymmetric);
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let s = Matrix::from_vec(3, 3, vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let inv = s.spd_inverse().unwrap();
        let prod = s.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[(i, j)], expect, epsilon = 1e-12);
            }
        }
    }
}
