//! Linear calibration models on sub-study data: the prediction-model fit,
//! the R² family (apparent, ICC-rescaled, per-term partial, and the
//! j-replicate projection), stepwise AIC reduction, and bootstrap optimism
//! correction.

use crate::datagen::Cohort;
use crate::numerics::{solve_least_squares, Matrix, NumericsError, RngStream};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinmodError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("too few complete rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("stepwise selection needs at least 2 candidate terms")]
    TooFewCandidates,
    #[error("response missing fraction {0:.3} exceeds the 0.40 threshold")]
    MissingnessExceeded(f64),
    #[error("icc {0} outside (0, 1]")]
    InvalidIcc(f64),
    #[error("models are not nested")]
    NotNested,
    #[error("every bootstrap resample was rank deficient")]
    DegenerateResample,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Column-oriented numeric data with missing values as `None`.
#[derive(Debug, Clone)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<Option<f64>>>) -> Self {
        assert_eq!(names.len(), columns.len(), "name/column count mismatch");
        if let Some(first) = columns.first() {
            assert!(
                columns.iter().all(|c| c.len() == first.len()),
                "ragged columns"
            );
        }
        Dataset { names, columns }
    }

    pub fn from_cohort(cohort: &Cohort) -> Self {
        let n = cohort.n();
        let mut id = Vec::with_capacity(n);
        let mut x_star = Vec::with_capacity(n);
        let mut age = Vec::with_capacity(n);
        let mut bmi = Vec::with_capacity(n);
        let mut x_true = Vec::with_capacity(n);
        let mut x_bio = Vec::with_capacity(n);
        let mut x_rep = Vec::with_capacity(n);
        let mut event_time = Vec::with_capacity(n);
        let mut event = Vec::with_capacity(n);
        let mut in_sub = Vec::with_capacity(n);
        let mut in_rel = Vec::with_capacity(n);
        for r in &cohort.rows {
            id.push(Some(r.id as f64));
            x_star.push(Some(r.x_star));
            age.push(Some(r.age));
            bmi.push(Some(r.bmi));
            x_true.push(r.x_true);
            x_bio.push(r.x_biomarker);
            x_rep.push(r.x_biomarker_repeat);
            event_time.push(Some(r.event_time));
            event.push(Some(f64::from(u8::from(r.event))));
            in_sub.push(Some(f64::from(u8::from(r.in_substudy))));
            in_rel.push(Some(f64::from(u8::from(r.in_reliability))));
        }
        Dataset::new(
            vec![
                "id".into(),
                "x_star".into(),
                "age".into(),
                "bmi".into(),
                "x_true".into(),
                "x_biomarker".into(),
                "x_biomarker_repeat".into(),
                "event_time".into(),
                "event".into(),
                "in_substudy".into(),
                "in_reliability".into(),
            ],
            vec![
                id, x_star, age, bmi, x_true, x_bio, x_rep, event_time, event, in_sub, in_rel,
            ],
        )
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&[Option<f64>], LinmodError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| LinmodError::UnknownColumn(name.to_string()))
    }

    /// Rows where `column == 1`, as a new dataset.
    pub fn filter_flag(&self, flag_column: &str) -> Result<Dataset, LinmodError> {
        let flags = self.column(flag_column)?.to_vec();
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&i| flags[i] == Some(1.0))
            .collect();
        Ok(Dataset {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| keep.iter().map(|&i| c[i]).collect())
                .collect(),
        })
    }
}

/// One model term: a column name and the constant subtracted before fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSpec {
    pub name: String,
    pub center: f64,
}

impl TermSpec {
    pub fn raw(name: &str) -> Self {
        TermSpec { name: name.to_string(), center: 0.0 }
    }

    pub fn centered(name: &str, center: f64) -> Self {
        TermSpec { name: name.to_string(), center }
    }
}

/// Fitted linear prediction model. The intercept is always the first entry
/// of `terms`/`coef`/`se`.
#[derive(Debug, Clone)]
pub struct CalibrationFit {
    pub terms: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub residual_variance: f64,
    pub n_used: usize,
    pub r2: f64,
    pub rss: f64,
    pub tss: f64,
    pub design: Vec<TermSpec>,
}

impl CalibrationFit {
    pub fn coef_for(&self, term: &str) -> Option<f64> {
        self.terms.iter().position(|t| t == term).map(|i| self.coef[i])
    }
}

/// Complete-case least squares of `response` on an intercept plus centered
/// terms, with conventional standard errors.
pub fn fit_calibration(
    data: &Dataset,
    response: &str,
    terms: &[TermSpec],
) -> Result<CalibrationFit, LinmodError> {
    let y_col = data.column(response)?;
    let n_total = data.n_rows();
    if n_total == 0 {
        return Err(LinmodError::TooFewRows { needed: terms.len() + 2, got: 0 });
    }
    let missing = y_col.iter().filter(|v| v.is_none()).count();
    let missing_frac = missing as f64 / n_total as f64;
    if missing_frac > 0.40 {
        return Err(LinmodError::MissingnessExceeded(missing_frac));
    }
    let term_cols: Vec<&[Option<f64>]> = terms
        .iter()
        .map(|t| data.column(&t.name))
        .collect::<Result<_, _>>()?;

    let mut rows_kept = Vec::new();
    for i in 0..n_total {
        if y_col[i].is_some() && term_cols.iter().all(|c| c[i].is_some()) {
            rows_kept.push(i);
        }
    }
    let n = rows_kept.len();
    let p = terms.len() + 1;
    if n < terms.len() + 2 {
        return Err(LinmodError::TooFewRows { needed: terms.len() + 2, got: n });
    }

    let mut xd = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for &i in &rows_kept {
        xd.push(1.0);
        for (t, col) in terms.iter().zip(&term_cols) {
            xd.push(col[i].unwrap() - t.center);
        }
        y.push(y_col[i].unwrap());
    }
    let x = Matrix::from_vec(n, p, xd);
    let ls = solve_least_squares(&x, &y)?;

    let sigma2 = ls.rss / (n - p) as f64;
    let se: Vec<f64> = (0..p).map(|j| (sigma2 * ls.xtx_inv[(j, j)]).sqrt()).collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let r2 = if tss > 0.0 {
        (1.0 - ls.rss / tss).clamp(0.0, 1.0)
    } else if ls.rss <= f64::EPSILON {
        1.0
    } else {
        0.0
    };

    let mut names = Vec::with_capacity(p);
    names.push("intercept".to_string());
    names.extend(terms.iter().map(|t| t.name.clone()));
    Ok(CalibrationFit {
        terms: names,
        coef: ls.coef,
        se,
        residual_variance: sigma2,
        n_used: n,
        r2,
        rss: ls.rss,
        tss,
        design: terms.to_vec(),
    })
}

/// The R² family derived from an apparent R² and a reliability ICC.
#[derive(Debug, Clone)]
pub struct R2Family {
    pub r2: f64,
    /// `r2 / icc`: the R² against the error-free exposure.
    pub prentice_r2: f64,
    pub icc_used: f64,
    /// `(j, r2_new(j))` pairs: the R² attainable if every sub-study subject
    /// had j averaged replicate assays.
    pub r2_new: Vec<(f64, f64)>,
    /// Per-term partial R², filled by `with_partials`.
    pub partial_r2: Vec<(String, f64)>,
}

impl R2Family {
    pub fn from_r2(r2: f64, icc: f64, j_list: &[f64]) -> Result<Self, LinmodError> {
        if !(icc > 0.0 && icc <= 1.0) {
            return Err(LinmodError::InvalidIcc(icc));
        }
        let r2_new = j_list
            .iter()
            .map(|&j| (j, r2 / (icc + (1.0 - icc) / j)))
            .collect();
        Ok(R2Family {
            r2,
            prentice_r2: r2 / icc,
            icc_used: icc,
            r2_new,
            partial_r2: Vec::new(),
        })
    }

    pub fn with_partials(mut self, partials: Vec<(String, f64)>) -> Self {
        self.partial_r2 = partials;
        self
    }

    pub fn r2_new_at(&self, j: f64) -> Option<f64> {
        self.r2_new.iter().find(|(jj, _)| *jj == j).map(|(_, v)| *v)
    }
}

pub fn r2_family(fit: &CalibrationFit, icc: f64, j_list: &[f64]) -> Result<R2Family, LinmodError> {
    R2Family::from_r2(fit.r2, icc, j_list)
}

/// Unique contribution of the terms dropped between two nested fits:
/// `(RSS_reduced − RSS_full) / RSS_reduced`.
pub fn partial_r2(full: &CalibrationFit, reduced: &CalibrationFit) -> Result<f64, LinmodError> {
    if full.n_used != reduced.n_used {
        return Err(LinmodError::NotNested);
    }
    if !reduced.terms.iter().all(|t| full.terms.contains(t)) {
        return Err(LinmodError::NotNested);
    }
    let tol = 1e-8 * reduced.rss.max(1.0);
    if reduced.rss < full.rss - tol {
        return Err(LinmodError::NotNested);
    }
    if reduced.rss <= 0.0 {
        return Ok(0.0);
    }
    Ok(((reduced.rss - full.rss) / reduced.rss).clamp(0.0, 1.0))
}

/// Gaussian-profile AIC with the residual variance counted as a parameter:
/// `n·ln(RSS/n) + 2(p+1)` where p includes the intercept.
pub fn aic(fit: &CalibrationFit) -> f64 {
    let n = fit.n_used as f64;
    n * (fit.rss / n).ln() + 2.0 * (fit.coef.len() as f64 + 1.0)
}

/// Bidirectional stepwise selection minimizing AIC, starting from the full
/// candidate set. Ties break on the lexicographically smallest term name so
/// the selection is deterministic.
pub fn stepwise_aic(
    data: &Dataset,
    response: &str,
    candidates: &[TermSpec],
) -> Result<CalibrationFit, LinmodError> {
    if candidates.len() < 2 {
        return Err(LinmodError::TooFewCandidates);
    }
    // Fix the comparison row set: complete cases over response + all
    // candidates, so AICs are comparable across sub-models.
    let y_col = data.column(response)?;
    let cand_cols: Vec<&[Option<f64>]> = candidates
        .iter()
        .map(|t| data.column(&t.name))
        .collect::<Result<_, _>>()?;
    let keep: Vec<usize> = (0..data.n_rows())
        .filter(|&i| y_col[i].is_some() && cand_cols.iter().all(|c| c[i].is_some()))
        .collect();
    let complete = Dataset {
        names: data.names.clone(),
        columns: data
            .columns
            .iter()
            .map(|c| keep.iter().map(|&i| c[i]).collect())
            .collect(),
    };

    let mut current: Vec<TermSpec> = candidates.to_vec();
    let mut current_fit = fit_calibration(&complete, response, &current)?;
    let mut current_aic = aic(&current_fit);

    loop {
        let mut best: Option<(f64, String, Vec<TermSpec>)> = None;
        let mut consider = |a: f64, name: &str, model: Vec<TermSpec>| {
            let better = match &best {
                None => true,
                Some((ba, bn, _)) => a < ba - 1e-12 || ((a - ba).abs() <= 1e-12 && name < bn.as_str()),
            };
            if better {
                best = Some((a, name.to_string(), model));
            }
        };
        // Drops.
        for drop in 0..current.len() {
            let mut model = current.clone();
            let name = model.remove(drop).name;
            if let Ok(fit) = fit_calibration(&complete, response, &model) {
                consider(aic(&fit), &name, model);
            }
        }
        // Adds.
        for cand in candidates {
            if current.iter().any(|t| t.name == cand.name) {
                continue;
            }
            let mut model = current.clone();
            model.push(cand.clone());
            if let Ok(fit) = fit_calibration(&complete, response, &model) {
                consider(aic(&fit), &cand.name, model);
            }
        }
        match best {
            Some((a, _, model)) if a < current_aic - 1e-10 => {
                current = model;
                current_fit = fit_calibration(&complete, response, &current)?;
                current_aic = a;
            }
            _ => break,
        }
    }
    Ok(current_fit)
}

/// Result of the bootstrap optimism correction.
#[derive(Debug, Clone)]
pub struct OptimismResult {
    pub apparent_r2: f64,
    pub mean_optimism: f64,
    pub corrected_r2: f64,
    pub b_used: usize,
    pub b_failed: usize,
}

/// Harrell-style optimism: refit on a with-replacement resample, score the
/// resample fit on both the resample and the original rows, and average the
/// gap over `b` replicates. Rank-deficient resamples are skipped and counted.
pub fn optimism_corrected_r2(
    data: &Dataset,
    response: &str,
    terms: &[TermSpec],
    b: usize,
    stream: RngStream,
) -> Result<OptimismResult, LinmodError> {
    assert!(b >= 1, "need at least one bootstrap replicate");
    let apparent = fit_calibration(data, response, terms)?;

    // Materialize the complete-case design once; replicates resample its rows.
    let y_col = data.column(response)?;
    let term_cols: Vec<&[Option<f64>]> = terms
        .iter()
        .map(|t| data.column(&t.name))
        .collect::<Result<_, _>>()?;
    let keep: Vec<usize> = (0..data.n_rows())
        .filter(|&i| y_col[i].is_some() && term_cols.iter().all(|c| c[i].is_some()))
        .collect();
    let n = keep.len();
    let p = terms.len() + 1;
    let mut xd = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for &i in &keep {
        xd.push(1.0);
        for (t, col) in terms.iter().zip(&term_cols) {
            xd.push(col[i].unwrap() - t.center);
        }
        y.push(y_col[i].unwrap());
    }
    let x = Matrix::from_vec(n, p, xd);

    let mut optimisms = Vec::with_capacity(b);
    let mut failed = 0usize;
    let mut idx = vec![0usize; n];
    for rep in 0..b {
        let mut rng = stream.child(rep as u64).rng();
        for slot in idx.iter_mut() {
            *slot = rng.random_range(0..n);
        }
        match optimism_for_indices(&x, &y, &idx) {
            Some(o) => optimisms.push(o),
            None => failed += 1,
        }
    }
    if optimisms.is_empty() {
        return Err(LinmodError::DegenerateResample);
    }
    let mean_optimism = optimisms.iter().sum::<f64>() / optimisms.len() as f64;
    Ok(OptimismResult {
        apparent_r2: apparent.r2,
        mean_optimism,
        corrected_r2: apparent.r2 - mean_optimism,
        b_used: optimisms.len(),
        b_failed: failed,
    })
}

/// One optimism replicate for an explicit resample index set; `None` when the
/// resampled design is rank deficient.
pub(crate) fn optimism_for_indices(x: &Matrix, y: &[f64], idx: &[usize]) -> Option<f64> {
    let n = idx.len();
    let p = x.cols();
    let mut xd = Vec::with_capacity(n * p);
    let mut yb = Vec::with_capacity(n);
    for &i in idx {
        xd.extend_from_slice(x.row(i));
        yb.push(y[i]);
    }
    let xb = Matrix::from_vec(n, p, xd);
    let fit = solve_least_squares(&xb, &yb).ok()?;

    let r2_of = |xx: &Matrix, yy: &[f64], coef: &[f64]| -> f64 {
        let fitted = xx.mat_vec(coef);
        let rss: f64 = yy
            .iter()
            .zip(&fitted)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let m = yy.iter().sum::<f64>() / yy.len() as f64;
        let tss: f64 = yy.iter().map(|v| (v - m) * (v - m)).sum();
        if tss > 0.0 {
            1.0 - rss / tss
        } else {
            0.0
        }
    };
    Some(r2_of(&xb, &yb, &fit.coef) - r2_of(x, y, &fit.coef))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{build_scenario, generate_cohort};
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn noise_dataset(seed: u64, n: usize, names: &[&str]) -> Dataset {
        let mut rng = RngStream::new(seed, 0).rng();
        let columns = names
            .iter()
            .map(|_| {
                (0..n)
                    .map(|_| Some(StandardNormal.sample(&mut rng)))
                    .collect()
            })
            .collect();
        Dataset::new(names.iter().map(|s| s.to_string()).collect(), columns)
    }

    #[test]
    fn response_equal_to_term_gives_unit_fit() {
        let ds = noise_dataset(1, 60, &["a", "b"]);
        let a = ds.column("a").unwrap().to_vec();
        let mut with_y = ds.clone();
        with_y.names.push("y".into());
        with_y.columns.push(a);
        let fit = fit_calibration(
            &with_y,
            "y",
            &[TermSpec::raw("a"), TermSpec::raw("b")],
        )
        .unwrap();
        assert_abs_diff_eq!(fit.coef_for("a").unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.coef_for("b").unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.coef_for("intercept").unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn substudy_fit_recovers_generator_coefficient() {
        let s = build_scenario("beta_cryptoxanthin").unwrap();
        let cohort = generate_cohort(&s, RngStream::new(2025, 0)).unwrap();
        let ds = Dataset::from_cohort(&cohort).filter_flag("in_substudy").unwrap();
        let fit = fit_calibration(
            &ds,
            "x_biomarker",
            &[
                TermSpec::raw("x_star"),
                TermSpec::centered("age", s.age_center),
                TermSpec::centered("bmi", s.bmi_center),
            ],
        )
        .unwrap();
        assert_eq!(fit.n_used, 476);
        let i = fit.terms.iter().position(|t| t == "x_star").unwrap();
        assert!(
            (fit.coef[i] - 0.112).abs() <= 3.0 * fit.se[i],
            "alpha1 {} (se {})",
            fit.coef[i],
            fit.se[i]
        );
    }

    #[test]
    fn null_r2_mean_matches_theory() {
        // With k pure-noise regressors, E[R²] = k/(n−1).
        let n = 50;
        let k = 3;
        let reps = 2000;
        let mut total = 0.0;
        for rep in 0..reps {
            let ds = noise_dataset(1000 + rep, n, &["y", "a", "b", "c"]);
            let fit = fit_calibration(
                &ds,
                "y",
                &[TermSpec::raw("a"), TermSpec::raw("b"), TermSpec::raw("c")],
            )
            .unwrap();
            total += fit.r2;
        }
        let mean = total / reps as f64;
        let expect = k as f64 / (n - 1) as f64;
        assert!((mean - expect).abs() < 0.004, "mean R² {mean} vs {expect}");
    }

    #[test]
    fn missing_response_over_threshold_rejected() {
        let mut ds = noise_dataset(3, 100, &["y", "a"]);
        for v in ds.columns[0].iter_mut().take(45) {
            *v = None;
        }
        match fit_calibration(&ds, "y", &[TermSpec::raw("a")]) {
            Err(LinmodError::MissingnessExceeded(f)) => assert!(f > 0.40),
            other => panic!("expected MissingnessExceeded, got {other:?}"),
        }
    }

    #[test]
    fn r2_family_reference_points() {
        let fam = R2Family::from_r2(0.5035, 0.8905, &[2.0, 4.0]).unwrap();
        assert!((fam.r2_new_at(2.0).unwrap() - 0.5329).abs() < 5e-4);
        let fam = R2Family::from_r2(0.4692, 0.81, &[2.0]).unwrap();
        assert!((fam.prentice_r2 - 0.5792).abs() < 1e-3);
    }

    #[test]
    fn r2_family_degenerate_icc_one() {
        let fam = R2Family::from_r2(0.3, 1.0, &[1.0, 2.0, 10.0]).unwrap();
        assert_eq!(fam.prentice_r2, 0.3);
        for (_, v) in &fam.r2_new {
            assert_abs_diff_eq!(*v, 0.3, epsilon = 1e-15);
        }
    }

    #[test]
    fn r2_new_limits_and_monotonicity() {
        let fam = R2Family::from_r2(0.42, 0.8, &[1.0, 2.0, 4.0, 1e6]).unwrap();
        assert_abs_diff_eq!(fam.r2_new_at(1.0).unwrap(), 0.42, epsilon = 1e-12);
        let vals: Vec<f64> = fam.r2_new.iter().map(|(_, v)| *v).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        assert!((fam.r2_new_at(1e6).unwrap() - fam.prentice_r2).abs() < 1e-6);
    }

    #[test]
    fn invalid_icc_rejected() {
        assert!(matches!(
            R2Family::from_r2(0.5, 0.0, &[2.0]),
            Err(LinmodError::InvalidIcc(_))
        ));
        assert!(matches!(
            R2Family::from_r2(0.5, 1.2, &[2.0]),
            Err(LinmodError::InvalidIcc(_))
        ));
    }

    #[test]
    fn partial_r2_identity_and_zero_cases() {
        let ds = noise_dataset(5, 80, &["y", "a", "b"]);
        let full = fit_calibration(&ds, "y", &[TermSpec::raw("a"), TermSpec::raw("b")]).unwrap();
        assert_abs_diff_eq!(partial_r2(&full, &full).unwrap(), 0.0, epsilon = 0.0);

        // A term constructed to have an exactly-zero fitted coefficient
        // contributes nothing.
        let reduced = fit_calibration(&ds, "y", &[TermSpec::raw("a")]).unwrap();
        let oracle = (reduced.rss - full.rss) / reduced.rss;
        assert_abs_diff_eq!(partial_r2(&full, &reduced).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn partial_r2_matches_brute_force_normal_equations() {
        // Known unique-contribution construction: y = 2a + c·b + noise.
        let mut ds = noise_dataset(6, 200, &["a", "b"]);
        let a = ds.column("a").unwrap().to_vec();
        let b = ds.column("b").unwrap().to_vec();
        let mut rng = RngStream::new(606, 0).rng();
        let y: Vec<Option<f64>> = a
            .iter()
            .zip(&b)
            .map(|(aa, bb)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                Some(2.0 * aa.unwrap() + 0.7 * bb.unwrap() + z)
            })
            .collect();
        ds.names.push("y".into());
        ds.columns.push(y);
        let full = fit_calibration(&ds, "y", &[TermSpec::raw("a"), TermSpec::raw("b")]).unwrap();
        let reduced = fit_calibration(&ds, "y", &[TermSpec::raw("a")]).unwrap();
        let got = partial_r2(&full, &reduced).unwrap();
        let oracle = (reduced.rss - full.rss) / reduced.rss;
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-12);
        assert!(got > 0.1, "constructed contribution should be material");
    }

    #[test]
    fn non_nested_fits_rejected() {
        let ds = noise_dataset(7, 80, &["y", "a", "b"]);
        let fa = fit_calibration(&ds, "y", &[TermSpec::raw("a")]).unwrap();
        let fb = fit_calibration(&ds, "y", &[TermSpec::raw("b")]).unwrap();
        assert!(matches!(partial_r2(&fa, &fb), Err(LinmodError::NotNested)));
    }

    #[test]
    fn adding_a_column_never_increases_rss() {
        for seed in 0..20 {
            let ds = noise_dataset(100 + seed, 40, &["y", "a", "b", "c"]);
            let base = fit_calibration(&ds, "y", &[TermSpec::raw("a")]).unwrap();
            let bigger =
                fit_calibration(&ds, "y", &[TermSpec::raw("a"), TermSpec::raw("b")]).unwrap();
            assert!(bigger.rss <= base.rss + 1e-10);
        }
    }

    #[test]
    fn aic_hand_computed() {
        let ds = noise_dataset(8, 10, &["y", "a", "b"]);
        let fit = fit_calibration(&ds, "y", &[TermSpec::raw("a"), TermSpec::raw("b")]).unwrap();
        let n = 10.0;
        let p = 3.0;
        let expect = n * (fit.rss / n).ln() + 2.0 * (p + 1.0);
        assert_abs_diff_eq!(aic(&fit), expect, epsilon = 1e-12);
    }

    #[test]
    fn stepwise_keeps_strong_predictor() {
        let n = 500;
        let mut rng = RngStream::new(909, 0).rng();
        let mut cols: Vec<Vec<Option<f64>>> = Vec::new();
        let names = ["signal", "n1", "n2", "n3", "n4", "n5"];
        for _ in names {
            cols.push(
                (0..n)
                    .map(|_| Some(StandardNormal.sample(&mut rng)))
                    .collect(),
            );
        }
        let y: Vec<Option<f64>> = (0..n)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                Some(10.0 * cols[0][i].unwrap() + z)
            })
            .collect();
        let mut all_names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        all_names.push("y".into());
        cols.push(y);
        let ds = Dataset::new(all_names, cols);
        let candidates: Vec<TermSpec> = names.iter().map(|n| TermSpec::raw(n)).collect();
        let fit = stepwise_aic(&ds, "y", &candidates).unwrap();
        assert!(fit.terms.iter().any(|t| t == "signal"));
        let full = fit_calibration(&ds, "y", &candidates).unwrap();
        assert!(aic(&fit) <= aic(&full) + 1e-10);
    }

    #[test]
    fn stepwise_mostly_drops_all_noise() {
        // With two pure-noise candidates, the intercept-only model wins with
        // probability around (1 − P(χ²₁ > 2))² ≈ 0.71 per seed.
        let mut intercept_only = 0;
        for seed in 0..50 {
            let ds = noise_dataset(2000 + seed, 2000, &["y", "a", "b"]);
            let fit =
                stepwise_aic(&ds, "y", &[TermSpec::raw("a"), TermSpec::raw("b")]).unwrap();
            if fit.terms.len() == 1 {
                intercept_only += 1;
            }
        }
        assert!(intercept_only > 25, "intercept-only in {intercept_only}/50 runs");
    }

    #[test]
    fn optimism_identity_resample_is_zero() {
        let ds = noise_dataset(10, 50, &["y", "a"]);
        let y_raw: Vec<f64> = ds.column("y").unwrap().iter().map(|v| v.unwrap()).collect();
        let a_raw: Vec<f64> = ds.column("a").unwrap().iter().map(|v| v.unwrap()).collect();
        let mut xd = Vec::new();
        for v in &a_raw {
            xd.push(1.0);
            xd.push(*v);
        }
        let x = Matrix::from_vec(50, 2, xd);
        let identity: Vec<usize> = (0..50).collect();
        let o = optimism_for_indices(&x, &y_raw, &identity).unwrap();
        assert_abs_diff_eq!(o, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn optimism_small_for_large_well_specified_fit() {
        let n = 10_000;
        let mut rng = RngStream::new(77, 0).rng();
        let a: Vec<Option<f64>> = (0..n)
            .map(|_| Some(StandardNormal.sample(&mut rng)))
            .collect();
        let b: Vec<Option<f64>> = (0..n)
            .map(|_| Some(StandardNormal.sample(&mut rng)))
            .collect();
        let y: Vec<Option<f64>> = (0..n)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                Some(1.5 * a[i].unwrap() - 0.5 * b[i].unwrap() + z)
            })
            .collect();
        let ds = Dataset::new(
            vec!["a".into(), "b".into(), "y".into()],
            vec![a, b, y],
        );
        let res = optimism_corrected_r2(
            &ds,
            "y",
            &[TermSpec::raw("a"), TermSpec::raw("b")],
            50,
            RngStream::new(78, 0),
        )
        .unwrap();
        assert!(res.mean_optimism.abs() < 0.01, "optimism {}", res.mean_optimism);
    }

    #[test]
    fn optimism_large_for_overfit_noise_design() {
        let names: Vec<String> = (0..20).map(|i| format!("v{i:02}")).collect();
        let mut rng = RngStream::new(79, 0).rng();
        let mut cols: Vec<Vec<Option<f64>>> = names
            .iter()
            .map(|_| {
                (0..30)
                    .map(|_| Some(StandardNormal.sample(&mut rng)))
                    .collect()
            })
            .collect();
        let y: Vec<Option<f64>> = (0..30)
            .map(|_| Some(StandardNormal.sample(&mut rng)))
            .collect();
        let mut all = names.clone();
        all.push("y".into());
        cols.push(y);
        let ds = Dataset::new(all, cols);
        let terms: Vec<TermSpec> = names.iter().map(|n| TermSpec::raw(n)).collect();
        let res =
            optimism_corrected_r2(&ds, "y", &terms, 100, RngStream::new(80, 0)).unwrap();
        assert!(
            res.apparent_r2 - res.corrected_r2 > 0.2,
            "apparent {} corrected {}",
            res.apparent_r2,
            res.corrected_r2
        );
    }
}
