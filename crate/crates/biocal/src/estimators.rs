//! The six analysis strategies for one generated cohort, the stratified
//! two-stage bootstrap behind the calibrated strategies, and the
//! inverse-variance optimal combination.

use crate::datagen::Cohort;
use crate::numerics::{empirical_quantile, solve_least_squares, Matrix, NumericsError, RngStream};
use crate::survival::{fit_cox, CoxError, CoxFit, SurvData};
use rand::Rng;
use thiserror::Error;

const Z975: f64 = 1.959963984540054;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("strategy requires a fitted calibration artifact: {0}")]
    MissingFit(&'static str),
    #[error("analysis set is empty")]
    EmptyAnalysisSet,
    #[error("exposure missing on analysis row {0}")]
    MissingExposure(u64),
    #[error("the optimal combination is built by optimal_combine, not estimate")]
    NotDirectlyEstimable,
    #[error("calibrated strategies need bootstrap settings")]
    BootstrapRequired,
    #[error("no reliability pairs available to estimate the assay variance")]
    NoReliabilityPairs,
    #[error("{failed} of {total} bootstrap replicates failed (> 5%)")]
    TooManyFailedReplicates { failed: usize, total: usize },
    #[error("bootstrap covariance is singular")]
    SingularCovariance,
    #[error(transparent)]
    Cox(#[from] CoxError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Analysis strategy for the exposure-outcome model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Truth,
    NaiveBiomarker,
    CalibratedBiomarker,
    NaiveSelfReport,
    CalibratedSelfReport,
    Optimal,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Truth,
        Strategy::NaiveBiomarker,
        Strategy::CalibratedBiomarker,
        Strategy::NaiveSelfReport,
        Strategy::CalibratedSelfReport,
        Strategy::Optimal,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Truth => "truth",
            Strategy::NaiveBiomarker => "naive_biomarker",
            Strategy::CalibratedBiomarker => "calibrated_biomarker",
            Strategy::NaiveSelfReport => "naive_self_report",
            Strategy::CalibratedSelfReport => "calibrated_self_report",
            Strategy::Optimal => "optimal",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        Strategy::ALL.iter().copied().find(|k| k.label() == s)
    }

    /// Calibrated strategies carry bootstrap percentile intervals.
    pub fn uses_bootstrap(&self) -> bool {
        matches!(
            self,
            Strategy::CalibratedBiomarker | Strategy::CalibratedSelfReport | Strategy::Optimal
        )
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiKind {
    Wald,
    Percentile,
}

impl CiKind {
    pub fn label(&self) -> &'static str {
        match self {
            CiKind::Wald => "wald",
            CiKind::Percentile => "percentile",
        }
    }
}

/// Per-replication estimate for one strategy.
#[derive(Debug, Clone)]
pub struct EstimateRecord {
    pub strategy: Strategy,
    pub beta1_hat: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_kind: CiKind,
    pub n_analysis: usize,
    pub converged: bool,
}

/// Centering constants for age and BMI in every fitted model.
#[derive(Debug, Clone, Copy)]
pub struct Centers {
    pub age: f64,
    pub bmi: f64,
}

/// Linear calibration of the biomarker on self-report, age, and BMI,
/// fitted on the sub-study and applied to the whole cohort.
#[derive(Debug, Clone)]
pub struct SelfReportCalibration {
    pub intercept: f64,
    pub self_report: f64,
    pub age: f64,
    pub bmi: f64,
    pub centers: Centers,
}

impl SelfReportCalibration {
    pub fn predict(&self, x_star: f64, age: f64, bmi: f64) -> f64 {
        self.intercept
            + self.self_report * x_star
            + self.age * (age - self.centers.age)
            + self.bmi * (bmi - self.centers.bmi)
    }
}

/// Conditional-expectation correction for the biomarker's assay noise:
/// shrink the observed measurement toward its regression on age and BMI by
/// the estimated reliability of the assay.
#[derive(Debug, Clone)]
pub struct BiomarkerShrinkage {
    pub mean_intercept: f64,
    pub mean_age: f64,
    pub mean_bmi: f64,
    /// `(s²_resid − σ̂_ε²)/s²_resid`, clamped to [0, 1].
    pub shrinkage: f64,
    pub sigma_eps2_hat: f64,
    pub centers: Centers,
}

impl BiomarkerShrinkage {
    pub fn conditional_mean(&self, age: f64, bmi: f64) -> f64 {
        self.mean_intercept
            + self.mean_age * (age - self.centers.age)
            + self.mean_bmi * (bmi - self.centers.bmi)
    }

    pub fn exposure(&self, x_biomarker: f64, age: f64, bmi: f64) -> f64 {
        if self.shrinkage == 1.0 {
            // No assay noise: the measurement passes through untouched.
            return x_biomarker;
        }
        let m = self.conditional_mean(age, bmi);
        m + self.shrinkage * (x_biomarker - m)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CalibrationArtifacts {
    pub self_report: Option<SelfReportCalibration>,
    pub biomarker: Option<BiomarkerShrinkage>,
}

/// Fits the self-report calibration model on the given (possibly resampled)
/// sub-study rows: biomarker on intercept, self-report, centered age/BMI.
pub fn fit_self_report_calibration(
    cohort: &Cohort,
    substudy_idx: &[usize],
    centers: Centers,
) -> Result<SelfReportCalibration, EstimatorError> {
    let mut xd = Vec::new();
    let mut y = Vec::new();
    for &i in substudy_idx {
        let r = &cohort.rows[i];
        if let Some(xb) = r.x_biomarker {
            xd.extend_from_slice(&[
                1.0,
                r.x_star,
                r.age - centers.age,
                r.bmi - centers.bmi,
            ]);
            y.push(xb);
        }
    }
    if y.len() < 6 {
        return Err(EstimatorError::EmptyAnalysisSet);
    }
    let x = Matrix::from_vec(y.len(), 4, xd);
    let ls = solve_least_squares(&x, &y)?;
    Ok(SelfReportCalibration {
        intercept: ls.coef[0],
        self_report: ls.coef[1],
        age: ls.coef[2],
        bmi: ls.coef[3],
        centers,
    })
}

/// Fits the biomarker shrinkage correction on the given sub-study rows:
/// the assay variance from reliability-pair differences (`Σdᵢ²/2m`), the
/// conditional mean from a regression on centered age/BMI, and the
/// shrinkage factor from the residual variance.
pub fn fit_biomarker_shrinkage(
    cohort: &Cohort,
    substudy_idx: &[usize],
    centers: Centers,
) -> Result<BiomarkerShrinkage, EstimatorError> {
    let mut xd = Vec::new();
    let mut y = Vec::new();
    let mut sum_d2 = 0.0;
    let mut m_pairs = 0usize;
    for &i in substudy_idx {
        let r = &cohort.rows[i];
        if let Some(xb) = r.x_biomarker {
            xd.extend_from_slice(&[1.0, r.age - centers.age, r.bmi - centers.bmi]);
            y.push(xb);
            if let Some(rep) = r.x_biomarker_repeat {
                let d = xb - rep;
                sum_d2 += d * d;
                m_pairs += 1;
            }
        }
    }
    if y.len() < 5 {
        return Err(EstimatorError::EmptyAnalysisSet);
    }
    if m_pairs == 0 {
        return Err(EstimatorError::NoReliabilityPairs);
    }
    let sigma_eps2_hat = sum_d2 / (2.0 * m_pairs as f64);
    let n = y.len();
    let x = Matrix::from_vec(n, 3, xd);
    let ls = solve_least_squares(&x, &y)?;
    let s2_resid = ls.rss / (n - 3) as f64;
    let shrinkage = if s2_resid > 0.0 {
        ((s2_resid - sigma_eps2_hat) / s2_resid).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(BiomarkerShrinkage {
        mean_intercept: ls.coef[0],
        mean_age: ls.coef[1],
        mean_bmi: ls.coef[2],
        shrinkage,
        sigma_eps2_hat,
        centers,
    })
}

/// Fits whichever artifacts the strategy set needs, on the full sub-study.
pub fn fit_artifacts(
    cohort: &Cohort,
    centers: Centers,
    need_self_report: bool,
    need_biomarker: bool,
) -> Result<CalibrationArtifacts, EstimatorError> {
    let sub = cohort.substudy_indices();
    Ok(CalibrationArtifacts {
        self_report: if need_self_report {
            Some(fit_self_report_calibration(cohort, &sub, centers)?)
        } else {
            None
        },
        biomarker: if need_biomarker {
            Some(fit_biomarker_shrinkage(cohort, &sub, centers)?)
        } else {
            None
        },
    })
}

/// Exposure vector and analysis row subset for a strategy.
///
/// Truth and the self-report strategies analyze the whole cohort; the
/// biomarker strategies analyze only sub-study rows. The calibrated
/// self-report exposure is a prediction from `(x_star, age, bmi)` alone —
/// sub-study rows do not contribute their observed biomarker.
pub fn exposure_series(
    strategy: Strategy,
    cohort: &Cohort,
    artifacts: &CalibrationArtifacts,
) -> Result<(Vec<f64>, Vec<usize>), EstimatorError> {
    let mut exposure = Vec::new();
    let mut idx = Vec::new();
    match strategy {
        Strategy::Truth => {
            for (i, r) in cohort.rows.iter().enumerate() {
                let x = r.x_true.ok_or(EstimatorError::MissingExposure(r.id))?;
                exposure.push(x);
                idx.push(i);
            }
        }
        Strategy::NaiveSelfReport => {
            for (i, r) in cohort.rows.iter().enumerate() {
                exposure.push(r.x_star);
                idx.push(i);
            }
        }
        Strategy::NaiveBiomarker => {
            for (i, r) in cohort.rows.iter().enumerate() {
                if r.in_substudy {
                    if let Some(xb) = r.x_biomarker {
                        exposure.push(xb);
                        idx.push(i);
                    }
                }
            }
        }
        Strategy::CalibratedBiomarker => {
            let shrink = artifacts
                .biomarker
                .as_ref()
                .ok_or(EstimatorError::MissingFit("biomarker shrinkage"))?;
            for (i, r) in cohort.rows.iter().enumerate() {
                if r.in_substudy {
                    if let Some(xb) = r.x_biomarker {
                        exposure.push(shrink.exposure(xb, r.age, r.bmi));
                        idx.push(i);
                    }
                }
            }
        }
        Strategy::CalibratedSelfReport => {
            let cal = artifacts
                .self_report
                .as_ref()
                .ok_or(EstimatorError::MissingFit("self-report calibration"))?;
            for (i, r) in cohort.rows.iter().enumerate() {
                exposure.push(cal.predict(r.x_star, r.age, r.bmi));
                idx.push(i);
            }
        }
        Strategy::Optimal => return Err(EstimatorError::NotDirectlyEstimable),
    }
    if idx.is_empty() {
        return Err(EstimatorError::EmptyAnalysisSet);
    }
    Ok((exposure, idx))
}

/// Cox fit (exposure + covariates) and analysis size for one strategy,
/// using already-fitted artifacts.
pub fn point_fit(
    strategy: Strategy,
    cohort: &Cohort,
    centers: Centers,
    artifacts: &CalibrationArtifacts,
) -> Result<(CoxFit, usize), EstimatorError> {
    let (exposure, idx) = exposure_series(strategy, cohort, artifacts)?;
    let fit = cox_on_rows(cohort, &idx, &exposure, centers, None)?;
    Ok((fit, idx.len()))
}

/// Cox fit of `(exposure, age, bmi)` on the given row subset.
fn cox_on_rows(
    cohort: &Cohort,
    idx: &[usize],
    exposure: &[f64],
    centers: Centers,
    init: Option<&[f64]>,
) -> Result<CoxFit, CoxError> {
    let n = idx.len();
    let mut time = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    let mut zd = Vec::with_capacity(n * 3);
    for (k, &i) in idx.iter().enumerate() {
        let r = &cohort.rows[i];
        time.push(r.event_time);
        event.push(r.event);
        zd.extend_from_slice(&[exposure[k], r.age - centers.age, r.bmi - centers.bmi]);
    }
    let data = SurvData::new(time, event, Matrix::from_vec(n, 3, zd))?;
    fit_cox(&data, init, 25, 1e-8)
}

/// Point estimate for one strategy (excluding the optimal combination).
///
/// Truth and naive strategies carry model standard errors and Wald
/// intervals; calibrated strategies take their standard error and
/// percentile interval from the stratified bootstrap.
pub fn estimate(
    strategy: Strategy,
    cohort: &Cohort,
    centers: Centers,
    boot: Option<(usize, RngStream)>,
) -> Result<EstimateRecord, EstimatorError> {
    if strategy == Strategy::Optimal {
        return Err(EstimatorError::NotDirectlyEstimable);
    }
    let artifacts = fit_artifacts(
        cohort,
        centers,
        strategy == Strategy::CalibratedSelfReport,
        strategy == Strategy::CalibratedBiomarker,
    )?;
    let (exposure, idx) = exposure_series(strategy, cohort, &artifacts)?;
    let fit = cox_on_rows(cohort, &idx, &exposure, centers, None)?;
    let beta1 = fit.beta[0];

    if strategy.uses_bootstrap() {
        let (b, stream) = boot.ok_or(EstimatorError::BootstrapRequired)?;
        let mut warm = WarmStarts::default();
        match strategy {
            Strategy::CalibratedBiomarker => warm.biomarker = Some(fit.beta.clone()),
            Strategy::CalibratedSelfReport => warm.self_report = Some(fit.beta.clone()),
            _ => {}
        }
        let inference = bootstrap_inference(&[strategy], cohort, centers, b, stream, &warm)?;
        let summary = &inference.per_strategy[0].1;
        Ok(EstimateRecord {
            strategy,
            beta1_hat: beta1,
            se: summary.se,
            ci_low: summary.ci_low,
            ci_high: summary.ci_high,
            ci_kind: CiKind::Percentile,
            n_analysis: idx.len(),
            converged: fit.converged,
        })
    } else {
        let se = fit.se[0];
        Ok(EstimateRecord {
            strategy,
            beta1_hat: beta1,
            se,
            ci_low: beta1 - Z975 * se,
            ci_high: beta1 + Z975 * se,
            ci_kind: CiKind::Wald,
            n_analysis: idx.len(),
            converged: fit.converged,
        })
    }
}

/// Per-strategy bootstrap summary.
#[derive(Debug, Clone)]
pub struct StrategyBoot {
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub b_used: usize,
}

#[derive(Debug, Clone)]
pub struct BootstrapInference {
    pub per_strategy: Vec<(Strategy, StrategyBoot)>,
    /// Joint covariance of (calibrated biomarker, calibrated self-report)
    /// replicate estimates when both were requested.
    pub covariance: Option<[[f64; 2]; 2]>,
    pub n_failed: usize,
}

/// Optional warm starts for the replicate Cox fits (the full-data
/// estimates); Newton converges to the same maximum from any start, this
/// only trims iterations.
#[derive(Debug, Clone, Default)]
pub struct WarmStarts {
    pub biomarker: Option<Vec<f64>>,
    pub self_report: Option<Vec<f64>>,
}

/// Draws `count` positions into `pool` and returns the drawn row indices in
/// the pool's own order (pools are kept time-descending, so resamples arrive
/// pre-sorted and the per-replicate Cox sort degenerates to a linear scan).
fn draw_sorted_positions<R: Rng>(rng: &mut R, pool: &[usize], out: &mut Vec<u32>) {
    out.clear();
    for _ in 0..pool.len() {
        out.push(rng.random_range(0..pool.len() as u32));
    }
    out.sort_unstable();
}

/// Stratified two-stage bootstrap for the calibrated strategies.
///
/// Each replicate resamples sub-study members among themselves and
/// non-members among themselves (both stage sizes stay fixed), refits every
/// calibration artifact on the resampled sub-study, and refits the Cox model
/// on the resampled analysis set. When both calibrated strategies are
/// requested they share each replicate's resample, which is what makes the
/// joint covariance estimable.
pub fn bootstrap_inference(
    strategies: &[Strategy],
    cohort: &Cohort,
    centers: Centers,
    b: usize,
    stream: RngStream,
    warm: &WarmStarts,
) -> Result<BootstrapInference, EstimatorError> {
    assert!(b >= 50, "bootstrap needs at least 50 replicates");
    let want_cb = strategies.contains(&Strategy::CalibratedBiomarker);
    let want_csr = strategies.contains(&Strategy::CalibratedSelfReport);
    assert!(
        want_cb || want_csr,
        "bootstrap_inference serves the calibrated strategies"
    );

    let mut sub_pool = cohort.substudy_indices();
    let mut non_pool: Vec<usize> = (0..cohort.n())
        .filter(|&i| !cohort.rows[i].in_substudy)
        .collect();
    if sub_pool.is_empty() {
        return Err(EstimatorError::EmptyAnalysisSet);
    }
    // Time-descending pools: resamples come out pre-sorted for the Cox sweep.
    let by_time_desc = |&a: &usize, &b: &usize| {
        cohort.rows[b].event_time.total_cmp(&cohort.rows[a].event_time)
    };
    sub_pool.sort_unstable_by(by_time_desc);
    non_pool.sort_unstable_by(by_time_desc);

    let mut cb_reps: Vec<f64> = Vec::with_capacity(b);
    let mut csr_reps: Vec<f64> = Vec::with_capacity(b);
    let mut n_failed = 0usize;
    let mut pos_sub: Vec<u32> = Vec::with_capacity(sub_pool.len());
    let mut pos_non: Vec<u32> = Vec::with_capacity(non_pool.len());
    let mut boot_sub: Vec<usize> = Vec::with_capacity(sub_pool.len());
    let mut boot_all: Vec<usize> = Vec::with_capacity(cohort.n());

    for rep in 0..b {
        let mut rng = stream.child(rep as u64).rng();
        draw_sorted_positions(&mut rng, &sub_pool, &mut pos_sub);
        boot_sub.clear();
        boot_sub.extend(pos_sub.iter().map(|&p| sub_pool[p as usize]));
        if non_pool.is_empty() {
            boot_all.clear();
            boot_all.extend_from_slice(&boot_sub);
        } else {
            draw_sorted_positions(&mut rng, &non_pool, &mut pos_non);
            // Merge the two time-descending streams.
            boot_all.clear();
            let (mut i, mut j) = (0, 0);
            while i < boot_sub.len() && j < pos_non.len() {
                let a = boot_sub[i];
                let b2 = non_pool[pos_non[j] as usize];
                if cohort.rows[a].event_time >= cohort.rows[b2].event_time {
                    boot_all.push(a);
                    i += 1;
                } else {
                    boot_all.push(b2);
                    j += 1;
                }
            }
            boot_all.extend_from_slice(&boot_sub[i..]);
            boot_all.extend(pos_non[j..].iter().map(|&p| non_pool[p as usize]));
        }

        let outcome =
            bootstrap_replicate(cohort, &boot_sub, &boot_all, centers, want_cb, want_csr, warm);
        match outcome {
            Some((cb, csr)) => {
                if want_cb {
                    cb_reps.push(cb.unwrap());
                }
                if want_csr {
                    csr_reps.push(csr.unwrap());
                }
            }
            None => n_failed += 1,
        }
    }

    if n_failed * 20 > b {
        return Err(EstimatorError::TooManyFailedReplicates { failed: n_failed, total: b });
    }

    let summarize = |reps: &[f64]| -> Result<StrategyBoot, EstimatorError> {
        let n = reps.len();
        let mean = reps.iter().sum::<f64>() / n as f64;
        let var = reps.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        Ok(StrategyBoot {
            se: var.sqrt(),
            ci_low: empirical_quantile(reps, 0.025)?,
            ci_high: empirical_quantile(reps, 0.975)?,
            b_used: n,
        })
    };

    let mut per_strategy = Vec::new();
    for &s in strategies {
        match s {
            Strategy::CalibratedBiomarker => {
                per_strategy.push((s, summarize(&cb_reps)?));
            }
            Strategy::CalibratedSelfReport => {
                per_strategy.push((s, summarize(&csr_reps)?));
            }
            _ => {}
        }
    }
    let covariance = if want_cb && want_csr {
        Some(sample_cov2(&cb_reps, &csr_reps))
    } else {
        None
    };
    Ok(BootstrapInference { per_strategy, covariance, n_failed })
}

/// One bootstrap replicate; `None` marks a failed fit anywhere inside.
fn bootstrap_replicate(
    cohort: &Cohort,
    boot_sub: &[usize],
    boot_all: &[usize],
    centers: Centers,
    want_cb: bool,
    want_csr: bool,
    warm: &WarmStarts,
) -> Option<(Option<f64>, Option<f64>)> {
    let mut cb = None;
    let mut csr = None;
    if want_cb {
        let shrink = fit_biomarker_shrinkage(cohort, boot_sub, centers).ok()?;
        let mut exposure = Vec::with_capacity(boot_sub.len());
        let mut rows = Vec::with_capacity(boot_sub.len());
        for &i in boot_sub {
            let r = &cohort.rows[i];
            if let Some(xb) = r.x_biomarker {
                exposure.push(shrink.exposure(xb, r.age, r.bmi));
                rows.push(i);
            }
        }
        let fit =
            cox_on_rows(cohort, &rows, &exposure, centers, warm.biomarker.as_deref()).ok()?;
        if !fit.converged {
            return None;
        }
        cb = Some(fit.beta[0]);
    }
    if want_csr {
        let cal = fit_self_report_calibration(cohort, boot_sub, centers).ok()?;
        let mut exposure = Vec::with_capacity(boot_all.len());
        for &i in boot_all {
            let r = &cohort.rows[i];
            exposure.push(cal.predict(r.x_star, r.age, r.bmi));
        }
        let fit =
            cox_on_rows(cohort, boot_all, &exposure, centers, warm.self_report.as_deref()).ok()?;
        if !fit.converged {
            return None;
        }
        csr = Some(fit.beta[0]);
    }
    Some((cb, csr))
}

fn sample_cov2(a: &[f64], b: &[f64]) -> [[f64; 2]; 2] {
    let n = a.len();
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let mut vaa = 0.0;
    let mut vbb = 0.0;
    let mut vab = 0.0;
    for (x, y) in a.iter().zip(b) {
        vaa += (x - ma) * (x - ma);
        vbb += (y - mb) * (y - mb);
        vab += (x - ma) * (y - mb);
    }
    let d = (n - 1) as f64;
    [[vaa / d, vab / d], [vab / d, vbb / d]]
}

/// Generalized inverse-variance weighted average of the two calibrated
/// estimates, with a Wald interval from the combined bootstrap variance.
pub fn optimal_combine(
    record_cb: &EstimateRecord,
    record_csr: &EstimateRecord,
    cov: &[[f64; 2]; 2],
) -> Result<EstimateRecord, EstimatorError> {
    let (s11, s12, s22) = (cov[0][0], cov[0][1], cov[1][1]);
    let det = s11 * s22 - s12 * s12;
    if !(s11 > 0.0 && det > 0.0) {
        return Err(EstimatorError::SingularCovariance);
    }
    let denom = s11 + s22 - 2.0 * s12;
    if denom <= 0.0 {
        return Err(EstimatorError::SingularCovariance);
    }
    let w_cb = (s22 - s12) / denom;
    let w_csr = (s11 - s12) / denom;
    let beta = w_cb * record_cb.beta1_hat + w_csr * record_csr.beta1_hat;
    let var = det / denom;
    let se = var.sqrt();
    Ok(EstimateRecord {
        strategy: Strategy::Optimal,
        beta1_hat: beta,
        se,
        ci_low: beta - Z975 * se,
        ci_high: beta + Z975 * se,
        ci_kind: CiKind::Wald,
        n_analysis: record_cb.n_analysis.max(record_csr.n_analysis),
        converged: record_cb.converged && record_csr.converged,
    })
}
