//! Cohort-description operations: covariate-adjusted geometric means and
//! reliability statistics (ICC, within-person CV) for blind duplicate
//! measurements.

use crate::linmod::{Dataset, LinmodError};
use crate::numerics::{solve_least_squares, Matrix};
use thiserror::Error;

const Z975: f64 = 1.959963984540054;

#[derive(Debug, Error)]
pub enum DescriptiveError {
    #[error("need at least {needed} pairs, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("degenerate variance in duplicate measurements")]
    DegenerateVariance,
    #[error("duplicate values must be positive for CV")]
    NonPositiveValues,
    #[error("group `{group}` has too few rows ({got}) for {adjusters} adjusters")]
    TooFewRows { group: String, got: usize, adjusters: usize },
    #[error(transparent)]
    Linmod(#[from] LinmodError),
}

/// Paired first/second measurements of one analyte.
#[derive(Debug, Clone)]
pub struct DuplicatePairs {
    pub analyte: String,
    pub pairs: Vec<(f64, f64)>,
}

/// Pearson correlation between first and second measurements.
pub fn duplicate_icc(dups: &DuplicatePairs) -> Result<f64, DescriptiveError> {
    let m = dups.pairs.len();
    if m < 3 {
        return Err(DescriptiveError::TooFewPairs { needed: 3, got: m });
    }
    let mx = dups.pairs.iter().map(|p| p.0).sum::<f64>() / m as f64;
    let my = dups.pairs.iter().map(|p| p.1).sum::<f64>() / m as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in &dups.pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(DescriptiveError::DegenerateVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Within-person coefficient of variation, in percent.
///
/// The residual variance of the balanced random-intercepts model reduces to
/// the moment estimator `σ̂_e² = Σ dᵢ² / (2m)` for complete duplicate pairs
/// (identical to the one-way ANOVA within-group mean square), so no
/// iterative mixed-model machinery is involved.
pub fn duplicate_cv(dups: &DuplicatePairs) -> Result<f64, DescriptiveError> {
    let m = dups.pairs.len();
    if m < 2 {
        return Err(DescriptiveError::TooFewPairs { needed: 2, got: m });
    }
    if dups.pairs.iter().any(|(a, b)| *a <= 0.0 || *b <= 0.0) {
        return Err(DescriptiveError::NonPositiveValues);
    }
    let sigma_e2 =
        dups.pairs.iter().map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * m as f64);
    let mean_of_averages =
        dups.pairs.iter().map(|(a, b)| 0.5 * (a + b)).sum::<f64>() / m as f64;
    Ok(100.0 * sigma_e2.sqrt() / mean_of_averages)
}

/// Adjusted geometric mean for one group.
#[derive(Debug, Clone)]
pub struct GroupGeomean {
    pub label: String,
    pub n: usize,
    pub geometric_mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Covariate-adjusted geometric means by group.
///
/// Fits `log value ~ group indicators + centered adjusters` (shared adjuster
/// slopes), predicts each group's mean log value at the supplied reference
/// point, and exponentiates. `value_col` must already be on the log scale;
/// adjusters are pairs of column name and reference value. With no group
/// column every row forms the single group `all`.
pub fn adjusted_geomean(
    data: &Dataset,
    value_col: &str,
    adjusters: &[(String, f64)],
    group_col: Option<&str>,
) -> Result<Vec<GroupGeomean>, DescriptiveError> {
    let values = data.column(value_col)?;
    let adj_cols: Vec<&[Option<f64>]> = adjusters
        .iter()
        .map(|(name, _)| data.column(name))
        .collect::<Result<_, _>>()?;
    let group_vals: Option<&[Option<f64>]> = match group_col {
        Some(g) => Some(data.column(g)?),
        None => None,
    };

    // Complete cases across value, adjusters, and the group label.
    let mut rows = Vec::new();
    for i in 0..data.n_rows() {
        let group_ok = group_vals.map_or(true, |g| g[i].is_some());
        if values[i].is_some() && group_ok && adj_cols.iter().all(|c| c[i].is_some()) {
            rows.push(i);
        }
    }

    // Distinct group labels in ascending numeric order.
    let mut labels: Vec<f64> = Vec::new();
    if let Some(g) = group_vals {
        for &i in &rows {
            let v = g[i].unwrap();
            if !labels.iter().any(|l| *l == v) {
                labels.push(v);
            }
        }
        labels.sort_by(f64::total_cmp);
    }
    let n_groups = if group_vals.is_some() { labels.len() } else { 1 };
    if n_groups == 0 {
        return Err(DescriptiveError::TooFewPairs { needed: 1, got: 0 });
    }

    let group_of = |i: usize| -> usize {
        match group_vals {
            Some(g) => labels.iter().position(|l| *l == g[i].unwrap()).unwrap(),
            None => 0,
        }
    };
    let mut group_sizes = vec![0usize; n_groups];
    for &i in &rows {
        group_sizes[group_of(i)] += 1;
    }
    for (gi, &size) in group_sizes.iter().enumerate() {
        if size < adjusters.len() + 2 {
            let label = if group_vals.is_some() {
                format!("{}", labels[gi])
            } else {
                "all".to_string()
            };
            return Err(DescriptiveError::TooFewRows {
                group: label,
                got: size,
                adjusters: adjusters.len(),
            });
        }
    }

    // Cell-means design: one indicator per group plus centered adjusters, so
    // each group coefficient is the predicted mean at the reference point.
    let n = rows.len();
    let p = n_groups + adjusters.len();
    let mut xd = vec![0.0; n * p];
    let mut y = Vec::with_capacity(n);
    for (r, &i) in rows.iter().enumerate() {
        xd[r * p + group_of(i)] = 1.0;
        for (k, ((_, reference), col)) in adjusters.iter().zip(&adj_cols).enumerate() {
            xd[r * p + n_groups + k] = col[i].unwrap() - reference;
        }
        y.push(values[i].unwrap());
    }
    let x = Matrix::from_vec(n, p, xd);
    let fit = solve_least_squares(&x, &y).map_err(LinmodError::Numerics)?;
    let dof = n.saturating_sub(p).max(1);
    let sigma2 = fit.rss / dof as f64;

    let mut out = Vec::with_capacity(n_groups);
    for g in 0..n_groups {
        let pred = fit.coef[g];
        let se = (sigma2 * fit.xtx_inv[(g, g)]).sqrt();
        let label = if group_vals.is_some() {
            format!("{}", labels[g])
        } else {
            "all".to_string()
        };
        out.push(GroupGeomean {
            label,
            n: group_sizes[g],
            geometric_mean: pred.exp(),
            ci_low: (pred - Z975 * se).exp(),
            ci_high: (pred + Z975 * se).exp(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identical_pairs_have_unit_icc_and_zero_cv() {
        let dups = DuplicatePairs {
            analyte: "x".into(),
            pairs: vec![(1.0, 1.0), (2.0, 2.0), (3.5, 3.5)],
        };
        assert_abs_diff_eq!(duplicate_icc(&dups).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(duplicate_cv(&dups).unwrap(), 0.0);
    }

    #[test]
    fn icc_matches_hand_formula() {
        let dups = DuplicatePairs {
            analyte: "x".into(),
            pairs: vec![(1.0, 2.0), (2.0, 1.0), (3.0, 3.0)],
        };
        // By direct covariance arithmetic: means 2,2; sxy = 0·0 + 0·(−1)…
        let (mx, my) = (2.0, 0.0 + 2.0);
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for (x, y) in &dups.pairs {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        let oracle = sxy / (sxx * syy).sqrt();
        assert_abs_diff_eq!(duplicate_icc(&dups).unwrap(), oracle, epsilon = 1e-14);
    }

    #[test]
    fn independent_pairs_have_near_zero_icc() {
        let mut rng = RngStream::new(505, 0).rng();
        let pairs: Vec<(f64, f64)> = (0..10_000)
            .map(|_| {
                (
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            })
            .collect();
        let icc = duplicate_icc(&DuplicatePairs { analyte: "x".into(), pairs }).unwrap();
        assert!(icc.abs() < 0.05, "icc {icc}");
    }

    #[test]
    fn cv_worked_example_and_anova_identity() {
        let dups = DuplicatePairs {
            analyte: "x".into(),
            pairs: vec![(9.0, 11.0), (19.0, 21.0)],
        };
        let cv = duplicate_cv(&dups).unwrap();
        // sigma_e² = (4+4)/4 = 2, mean of pair averages = 15.
        assert_abs_diff_eq!(cv, 100.0 * 2.0f64.sqrt() / 15.0, epsilon = 1e-10);

        // One-way ANOVA within-group mean square on the same pairs.
        let msw: f64 = dups
            .pairs
            .iter()
            .map(|(a, b)| {
                let m = 0.5 * (a + b);
                (a - m) * (a - m) + (b - m) * (b - m)
            })
            .sum::<f64>()
            / dups.pairs.len() as f64; // k−1 = 1 df per pair
        let sigma_e2 = dups
            .pairs
            .iter()
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / (2.0 * dups.pairs.len() as f64);
        assert_abs_diff_eq!(sigma_e2, msw, epsilon = 1e-10);
    }

    #[test]
    fn cv_is_scale_invariant() {
        let base = vec![(9.0, 11.0), (19.0, 21.0), (5.0, 6.0)];
        let scaled: Vec<(f64, f64)> = base.iter().map(|(a, b)| (a * 10.0, b * 10.0)).collect();
        let cv1 = duplicate_cv(&DuplicatePairs { analyte: "x".into(), pairs: base }).unwrap();
        let cv2 = duplicate_cv(&DuplicatePairs { analyte: "x".into(), pairs: scaled }).unwrap();
        assert_abs_diff_eq!(cv1, cv2, epsilon = 1e-10);
    }

    #[test]
    fn icc_affine_invariance() {
        let base = vec![(1.0, 2.0), (2.0, 1.5), (3.0, 3.2), (0.5, 0.9)];
        let moved: Vec<(f64, f64)> = base
            .iter()
            .map(|(a, b)| (3.0 * a + 7.0, 3.0 * b + 7.0))
            .collect();
        let i1 = duplicate_icc(&DuplicatePairs { analyte: "x".into(), pairs: base }).unwrap();
        let i2 = duplicate_icc(&DuplicatePairs { analyte: "x".into(), pairs: moved }).unwrap();
        assert_abs_diff_eq!(i1, i2, epsilon = 1e-12);
    }

    #[test]
    fn nonpositive_values_rejected_for_cv() {
        let dups = DuplicatePairs {
            analyte: "x".into(),
            pairs: vec![(1.0, 2.0), (0.0, 3.0)],
        };
        assert!(matches!(
            duplicate_cv(&dups),
            Err(DescriptiveError::NonPositiveValues)
        ));
    }

    #[test]
    fn constant_single_group_geomean() {
        let c = 1.4;
        let ds = Dataset::new(
            vec!["logv".into()],
            vec![vec![Some(c); 10]],
        );
        let out = adjusted_geomean(&ds, "logv", &[], None).unwrap();
        assert_eq!(out.len(), 1);
        assert_abs_diff_eq!(out[0].geometric_mean, c.exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(out[0].ci_low, out[0].ci_high, epsilon = 1e-10);
    }

    #[test]
    fn unadjusted_matches_direct_product_oracle() {
        let mut rng = RngStream::new(303, 0).rng();
        let raw: Vec<f64> = (0..20).map(|_| rng.random_range(0.5..4.0)).collect();
        let logs: Vec<Option<f64>> = raw.iter().map(|v| Some(v.ln())).collect();
        let ds = Dataset::new(vec!["logv".into()], vec![logs]);
        let out = adjusted_geomean(&ds, "logv", &[], None).unwrap();
        let oracle = raw
            .iter()
            .map(|v| v.powf(1.0 / raw.len() as f64))
            .product::<f64>();
        assert_abs_diff_eq!(out[0].geometric_mean, oracle, epsilon = 1e-10);
    }

    #[test]
    fn known_log_shift_between_balanced_groups() {
        // Two groups with identical age distributions and a known additive
        // log shift delta.
        let delta = 0.35;
        let mut rng = RngStream::new(304, 0).rng();
        let n = 400;
        let mut logv = Vec::new();
        let mut age = Vec::new();
        let mut group = Vec::new();
        for i in 0..n {
            let a: f64 = rng.random_range(30.0..60.0);
            let noise: f64 = StandardNormal.sample(&mut rng);
            let g = f64::from(u8::from(i % 2 == 1));
            logv.push(Some(1.0 + 0.02 * a + delta * g + 0.1 * noise));
            age.push(Some(a));
            group.push(Some(g));
        }
        let ds = Dataset::new(
            vec!["logv".into(), "age".into(), "group".into()],
            vec![logv, age, group],
        );
        let out =
            adjusted_geomean(&ds, "logv", &[("age".into(), 45.0)], Some("group")).unwrap();
        assert_eq!(out.len(), 2);
        let ratio = out[1].geometric_mean / out[0].geometric_mean;
        // The ratio estimator's log has sd ≈ 0.1·sqrt(4/n) = 0.01.
        assert!((ratio.ln() - delta).abs() < 0.04, "ratio {ratio}");
    }

    #[test]
    fn centered_adjusters_reduce_to_group_geomeans() {
        // Balanced adjuster (same values in both groups): adjusting at the
        // common mean must reproduce each group's own geometric mean.
        let ages = [35.0, 45.0, 55.0, 40.0, 50.0];
        let mut logv = Vec::new();
        let mut age = Vec::new();
        let mut group = Vec::new();
        let mut rng = RngStream::new(305, 0).rng();
        for g in 0..2 {
            for a in ages {
                let noise: f64 = StandardNormal.sample(&mut rng);
                logv.push(Some(0.5 + 0.3 * f64::from(g) + 0.01 * a + 0.05 * noise));
                age.push(Some(a));
                group.push(Some(f64::from(g)));
            }
        }
        let ds = Dataset::new(
            vec!["logv".into(), "age".into(), "group".into()],
            vec![logv.clone(), age, group.clone()],
        );
        let age_mean = ages.iter().sum::<f64>() / ages.len() as f64;
        let adjusted =
            adjusted_geomean(&ds, "logv", &[("age".into(), age_mean)], Some("group")).unwrap();
        for g in 0..2 {
            let mean_log = logv
                .iter()
                .zip(&group)
                .filter(|(_, gg)| gg.unwrap() == f64::from(g as u8))
                .map(|(v, _)| v.unwrap())
                .sum::<f64>()
                / ages.len() as f64;
            assert_abs_diff_eq!(
                adjusted[g].geometric_mean,
                mean_log.exp(),
                epsilon = 1e-8
            );
        }
    }
}
