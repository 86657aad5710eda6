use super::{Matrix, NumericsError};

/// Least-squares solution of `min ‖y − Xβ‖²`.
#[derive(Debug, Clone)]
pub struct Lstsq {
    pub coef: Vec<f64>,
    pub rss: f64,
    /// Unscaled coefficient covariance `(XᵀX)⁻¹`.
    pub xtx_inv: Matrix,
}

/// Householder-QR least squares with a rank tolerance of `1e-10·‖X‖`.
///
/// The paper-scale designs are small (tens of columns at most), so the
/// orthogonal factorization is preferred over normal equations for
/// stability rather than speed.
pub fn solve_least_squares(x: &Matrix, y: &[f64]) -> Result<Lstsq, NumericsError> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(NumericsError::DimensionMismatch(format!(
            "design has {n} rows but response has {}",
            y.len()
        )));
    }
    if n <= p || p == 0 {
        return Err(NumericsError::RankDeficient(0));
    }
    let rank_tol = 1e-10 * x.frobenius_norm().max(f64::MIN_POSITIVE);

    let mut r = x.clone();
    let mut qty = y.to_vec();
    let mut v = vec![0.0; n];

    for j in 0..p {
        let mut norm2 = 0.0;
        for i in j..n {
            norm2 += r[(i, j)] * r[(i, j)];
        }
        let norm = norm2.sqrt();
        if norm <= rank_tol {
            return Err(NumericsError::RankDeficient(j));
        }
        let alpha = if r[(j, j)] >= 0.0 { -norm } else { norm };
        v[j] = r[(j, j)] - alpha;
        for i in (j + 1)..n {
            v[i] = r[(i, j)];
        }
        let vtv = v[j..n].iter().map(|a| a * a).sum::<f64>();
        r[(j, j)] = alpha;
        for i in (j + 1)..n {
            r[(i, j)] = 0.0;
        }
        if vtv > 0.0 {
            for col in (j + 1)..p {
                let dot: f64 = (j..n).map(|i| v[i] * r[(i, col)]).sum();
                let f = 2.0 * dot / vtv;
                for i in j..n {
                    r[(i, col)] -= f * v[i];
                }
            }
            let dot: f64 = (j..n).map(|i| v[i] * qty[i]).sum();
            let f = 2.0 * dot / vtv;
            for i in j..n {
                qty[i] -= f * v[i];
            }
        }
    }

    for j in 0..p {
        if r[(j, j)].abs() <= rank_tol {
            return Err(NumericsError::RankDeficient(j));
        }
    }

    // Back-substitute R β = (Qᵀy)[..p].
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = qty[i];
        for k in (i + 1)..p {
            s -= r[(i, k)] * coef[k];
        }
        coef[i] = s / r[(i, i)];
    }

    // Residuals against the original design, not the factorization.
    let fitted = x.mat_vec(&coef);
    let rss: f64 = y
        .iter()
        .zip(&fitted)
        .map(|(yi, fi)| (yi - fi) * (yi - fi))
        .sum();

    // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ from the upper p×p block of R.
    let mut rinv = Matrix::zeros(p, p);
    for j in 0..p {
        rinv[(j, j)] = 1.0 / r[(j, j)];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for k in (i + 1)..=j {
                s += r[(i, k)] * rinv[(k, j)];
            }
            rinv[(i, j)] = -s / r[(i, i)];
        }
    }
    let mut xtx_inv = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            let mut s = 0.0;
            for k in j.max(i)..p {
                s += rinv[(i, k)] * rinv[(j, k)];
            }
            xtx_inv[(i, j)] = s;
        }
    }

    Ok(Lstsq { coef, rss, xtx_inv })
}
