//! Scenario configuration and synthetic cohort generation.
//!
//! A scenario describes one nutrient's data-generating process: the joint
//! distribution of log self-report, age, and BMI; the linear model linking
//! the true long-term concentration to those covariates; the classical
//! measurement-error variance of the biomarker; and the exponential outcome
//! model with administrative censoring.

use crate::numerics::{sample_mvn, Matrix, RngStream};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("implied within-person variance is non-positive (sigma_u^2 = {0:e})")]
    NegativeErrorVariance(f64),
    #[error("hazard rate is non-positive or non-finite")]
    NonPositiveRate,
    #[error("censoring target {target} unreachable over the searched rate range")]
    NoBracket { target: f64 },
    #[error("cohort CSV is missing required column `{0}`")]
    MissingColumn(String),
    #[error("cohort CSV parse error: {0}")]
    Csv(String),
}

/// Coefficients of the true-exposure model
/// `X = intercept + self_report·X* + age·AGE + bmi·BMI + u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibCoefs {
    pub intercept: f64,
    pub self_report: f64,
    pub age: f64,
    pub bmi: f64,
}

/// Log hazard-ratio coefficients of the outcome model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogHazardCoefs {
    pub exposure: f64,
    pub age: f64,
    pub bmi: f64,
}

/// Complete data-generating configuration for one nutrient.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub n_cohort: usize,
    pub n_substudy: usize,
    pub n_reliability: usize,
    /// Means of (log self-report, age, BMI).
    pub mvn_mean: [f64; 3],
    /// 3×3 covariance of (log self-report, age, BMI).
    pub mvn_cov: Matrix,
    pub calib: CalibCoefs,
    /// Target R² of the biomarker prediction model.
    pub r2_target: f64,
    /// Classical measurement-error variance of one biomarker assay.
    pub sigma_eps2: f64,
    pub log_hr: LogHazardCoefs,
    /// Baseline exponential rate; replaced by `calibrate_lambda0` in
    /// auto-calibration mode.
    pub lambda0: f64,
    /// Administrative censoring time (months).
    pub censor_time: f64,
    pub age_center: f64,
    pub bmi_center: f64,
}

/// Variances implied by the scenario's R² target.
#[derive(Debug, Clone, Copy)]
pub struct ErrorVariances {
    /// Variance of the linear predictor of the true-exposure model.
    pub quad_form: f64,
    /// Total residual variance `sigma_T² = quad_form·(1−R²)/R²`.
    pub sigma_t2: f64,
    /// Person-level residual variance `sigma_u² = sigma_T² − sigma_eps²`.
    pub sigma_u2: f64,
}

const AGE_MEAN: f64 = 45.81989;
const BMI_MEAN: f64 = 29.77589;
const VAR_AGE: f64 = 194.0924000;
const VAR_BMI: f64 = 36.8888900;
const COV_AGE_BMI: f64 = 8.3544090;
const AGE_CENTER: f64 = 46.1;
const BMI_CENTER: f64 = 29.6;

/// Which of the two published effect-size sets a built-in scenario carries.
/// `Standard` reproduces the reference simulation metrics; `Alternate` is the
/// companion set kept for sensitivity runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectSizes {
    Standard,
    Alternate,
}

struct Builtin {
    name: &'static str,
    x_star_mean: f64,
    cov_row: [f64; 3], // Var(X*), Cov(X*, AGE), Cov(X*, BMI)
    calib: CalibCoefs,
    r2_target: f64,
    sigma_eps2: f64,
    hr_exposure_standard: f64,
    hr_exposure_alternate: f64,
    lambda0: f64,
}

const BUILTINS: [Builtin; 3] = [
    Builtin {
        name: "beta_cryptoxanthin",
        x_star_mean: 3.261392,
        cov_row: [2.7095730, 0.5280317, -0.4143209],
        calib: CalibCoefs {
            intercept: 1.287,
            self_report: 0.112,
            age: 0.000,
            bmi: -0.013,
        },
        r2_target: 0.5034792,
        sigma_eps2: 0.01070956,
        hr_exposure_standard: 0.775,
        hr_exposure_alternate: 0.862,
        lambda0: 650.0,
    },
    Builtin {
        name: "lycopene",
        x_star_mean: 5.605585,
        cov_row: [9.0749150, -2.9817190, -0.6255943],
        calib: CalibCoefs {
            intercept: 2.472,
            self_report: 0.011,
            age: -0.003,
            bmi: -0.004,
        },
        r2_target: 0.2196337,
        sigma_eps2: 0.004405707,
        hr_exposure_standard: 0.529,
        hr_exposure_alternate: 0.451,
        lambda0: 2000.0,
    },
    Builtin {
        name: "folate",
        x_star_mean: 5.736064,
        cov_row: [0.2948574, -0.6786461, -0.2807268],
        calib: CalibCoefs {
            intercept: 3.049,
            self_report: 0.090,
            age: 0.004,
            bmi: -0.010,
        },
        r2_target: 0.1716752,
        sigma_eps2: 0.02127483,
        hr_exposure_standard: 0.651,
        hr_exposure_alternate: 0.665,
        lambda0: 1600.0,
    },
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|b| b.name).collect()
}

/// Builds a built-in scenario by name (case-insensitive).
pub fn build_scenario(name: &str) -> Result<Scenario, DatagenError> {
    build_scenario_with(name, EffectSizes::Standard)
}

pub fn build_scenario_with(name: &str, effects: EffectSizes) -> Result<Scenario, DatagenError> {
    let key = name.to_ascii_lowercase();
    let b = BUILTINS
        .iter()
        .find(|b| b.name == key)
        .ok_or_else(|| DatagenError::UnknownScenario(name.to_string()))?;
    let hr = match effects {
        EffectSizes::Standard => b.hr_exposure_standard,
        EffectSizes::Alternate => b.hr_exposure_alternate,
    };
    let scenario = Scenario {
        name: b.name.to_string(),
        n_cohort: 16_415,
        n_substudy: 476,
        n_reliability: 95,
        mvn_mean: [b.x_star_mean, AGE_MEAN, BMI_MEAN],
        mvn_cov: Matrix::from_vec(
            3,
            3,
            vec![
                b.cov_row[0],
                b.cov_row[1],
                b.cov_row[2],
                b.cov_row[1],
                VAR_AGE,
                COV_AGE_BMI,
                b.cov_row[2],
                COV_AGE_BMI,
                VAR_BMI,
            ],
        ),
        calib: b.calib,
        r2_target: b.r2_target,
        sigma_eps2: b.sigma_eps2,
        log_hr: LogHazardCoefs {
            exposure: hr.ln(),
            age: 0.9f64.ln(),
            bmi: 0.75f64.ln(),
        },
        lambda0: b.lambda0,
        censor_time: 60.0,
        age_center: AGE_CENTER,
        bmi_center: BMI_CENTER,
    };
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    /// Checks every scenario invariant; explicit configs go through this too.
    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.n_cohort == 0 {
            return Err(DatagenError::InvalidConfig("n_cohort must be positive".into()));
        }
        if self.n_substudy > self.n_cohort {
            return Err(DatagenError::InvalidConfig(
                "n_substudy cannot exceed n_cohort".into(),
            ));
        }
        if self.n_reliability > self.n_substudy {
            return Err(DatagenError::InvalidConfig(
                "n_reliability cannot exceed n_substudy".into(),
            ));
        }
        if !(self.r2_target > 0.0 && self.r2_target < 1.0) {
            return Err(DatagenError::InvalidConfig(format!(
                "r2_target {} outside (0, 1)",
                self.r2_target
            )));
        }
        if !(self.sigma_eps2 >= 0.0 && self.sigma_eps2.is_finite()) {
            return Err(DatagenError::InvalidConfig("sigma_eps2 must be >= 0".into()));
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(DatagenError::InvalidConfig("lambda0 must be > 0".into()));
        }
        if !(self.censor_time > 0.0 && self.censor_time.is_finite()) {
            return Err(DatagenError::InvalidConfig("censor_time must be > 0".into()));
        }
        self.mvn_cov
            .cholesky()
            .map_err(|e| DatagenError::InvalidConfig(format!("covariance not SPD: {e}")))?;
        // sigma_u^2 > 0 is part of the invariant set.
        implied_error_variances(self)?;
        Ok(())
    }

    /// Population mean of the true exposure under the generating model.
    pub fn mean_x_true(&self) -> f64 {
        self.calib.intercept
            + self.calib.self_report * self.mvn_mean[0]
            + self.calib.age * self.mvn_mean[1]
            + self.calib.bmi * self.mvn_mean[2]
    }
}

/// Solves the variance algebra of the generating model:
/// `quad_form = Var(linear predictor)`, `sigma_T² = quad_form·(1−R²)/R²`,
/// `sigma_u² = sigma_T² − sigma_eps²`.
pub fn implied_error_variances(scenario: &Scenario) -> Result<ErrorVariances, DatagenError> {
    let c = &scenario.calib;
    let s = &scenario.mvn_cov;
    let quad_form = c.self_report * c.self_report * s[(0, 0)]
        + c.age * c.age * s[(1, 1)]
        + c.bmi * c.bmi * s[(2, 2)]
        + 2.0 * c.self_report * c.age * s[(0, 1)]
        + 2.0 * c.self_report * c.bmi * s[(0, 2)]
        + 2.0 * c.age * c.bmi * s[(1, 2)];
    let r2 = scenario.r2_target;
    let sigma_t2 = quad_form * (1.0 - r2) / r2;
    let sigma_u2 = sigma_t2 - scenario.sigma_eps2;
    if sigma_u2 <= 0.0 {
        return Err(DatagenError::NegativeErrorVariance(sigma_u2));
    }
    Ok(ErrorVariances { quad_form, sigma_t2, sigma_u2 })
}

/// One generated participant.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortRow {
    pub id: u64,
    /// Log self-report (error-prone measure).
    pub x_star: f64,
    pub age: f64,
    pub bmi: f64,
    /// True long-term log concentration; absent for ingested data without it.
    pub x_true: Option<f64>,
    /// Observed biomarker, present iff in the sub-study.
    pub x_biomarker: Option<f64>,
    /// Independent repeat assay, present iff in the reliability subset.
    pub x_biomarker_repeat: Option<f64>,
    pub event_time: f64,
    pub event: bool,
    pub in_substudy: bool,
    pub in_reliability: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub rows: Vec<CohortRow>,
}

impl Cohort {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn substudy_indices(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| self.rows[i].in_substudy).collect()
    }

    pub fn censoring_fraction(&self) -> f64 {
        let censored = self.rows.iter().filter(|r| !r.event).count();
        censored as f64 / self.rows.len() as f64
    }
}

// Fixed sub-stream tags so each generation phase has its own stream.
const TAG_MVN: u64 = 0;
const TAG_PERSON_RESIDUAL: u64 = 1;
const TAG_ASSAY_ERROR: u64 = 2;
const TAG_ASSAY_REPEAT: u64 = 3;
const TAG_SURVIVAL: u64 = 4;

/// Generates a full synthetic cohort: covariates, true exposure, biomarker
/// measurements on the sub-study, and event times.
pub fn generate_cohort(scenario: &Scenario, stream: RngStream) -> Result<Cohort, DatagenError> {
    scenario.validate()?;
    let variances = implied_error_variances(scenario)?;
    let n = scenario.n_cohort;
    let chol = scenario
        .mvn_cov
        .cholesky()
        .map_err(|e| DatagenError::InvalidConfig(format!("covariance not SPD: {e}")))?;
    let covs = sample_mvn(&scenario.mvn_mean, &chol, n, stream.child(TAG_MVN))
        .map_err(|e| DatagenError::InvalidConfig(e.to_string()))?;

    let sd_u = variances.sigma_u2.sqrt();
    let sd_eps = scenario.sigma_eps2.sqrt();
    let mut rng_u = stream.child(TAG_PERSON_RESIDUAL).rng();
    let mut rng_eps = stream.child(TAG_ASSAY_ERROR).rng();
    let mut rng_rep = stream.child(TAG_ASSAY_REPEAT).rng();
    let mut rng_surv = stream.child(TAG_SURVIVAL).rng();
    let x_center = scenario.mean_x_true();

    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let cov = covs.row(i);
        let (x_star, age, bmi) = (cov[0], cov[1], cov[2]);
        let u: f64 = {
            let z: f64 = StandardNormal.sample(&mut rng_u);
            sd_u * z
        };
        let x_true = scenario.calib.intercept
            + scenario.calib.self_report * x_star
            + scenario.calib.age * age
            + scenario.calib.bmi * bmi
            + u;
        let in_substudy = i < scenario.n_substudy;
        let in_reliability = i < scenario.n_reliability;
        let x_biomarker = if in_substudy {
            let z: f64 = StandardNormal.sample(&mut rng_eps);
            Some(x_true + sd_eps * z)
        } else {
            None
        };
        let x_biomarker_repeat = if in_reliability {
            let z: f64 = StandardNormal.sample(&mut rng_rep);
            Some(x_true + sd_eps * z)
        } else {
            None
        };
        let (event_time, event) = survival_draw(x_true, age, bmi, scenario, x_center, &mut rng_surv)?;
        rows.push(CohortRow {
            id: (i + 1) as u64,
            x_star,
            age,
            bmi,
            x_true: Some(x_true),
            x_biomarker,
            x_biomarker_repeat,
            event_time,
            event,
            in_substudy,
            in_reliability,
        });
    }
    Ok(Cohort { rows })
}

/// Draws one exponential event time under the centered hazard
/// `λ = λ₀·exp(β₁(x−x̄) + β₂(age−age_center) + β₃(bmi−bmi_center))`
/// and applies administrative censoring.
pub fn simulate_survival(
    x_true: f64,
    age: f64,
    bmi: f64,
    scenario: &Scenario,
    stream: RngStream,
) -> Result<(f64, bool), DatagenError> {
    let mut rng = stream.rng();
    survival_draw(x_true, age, bmi, scenario, scenario.mean_x_true(), &mut rng)
}

fn survival_draw<R: Rng>(
    x_true: f64,
    age: f64,
    bmi: f64,
    scenario: &Scenario,
    x_center: f64,
    rng: &mut R,
) -> Result<(f64, bool), DatagenError> {
    let eta = scenario.log_hr.exposure * (x_true - x_center)
        + scenario.log_hr.age * (age - scenario.age_center)
        + scenario.log_hr.bmi * (bmi - scenario.bmi_center);
    let rate = scenario.lambda0 * eta.exp();
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(DatagenError::NonPositiveRate);
    }
    let e: f64 = Exp1.sample(rng);
    let t = e / rate;
    // event == 0 exactly when event_time == censor_time.
    if t < scenario.censor_time {
        Ok((t, true))
    } else {
        Ok((scenario.censor_time, false))
    }
}

/// Bisects `lambda0` until expected censoring over a large generated sample
/// of covariates is within 5e-4 of `target`.
///
/// The expectation uses the analytic per-subject censoring probability
/// `exp(−λ_i·C)` rather than noisy event draws, so the search is smooth and
/// deterministic for a fixed stream.
pub fn calibrate_lambda0(
    scenario: &Scenario,
    target_censoring: f64,
    stream: RngStream,
) -> Result<f64, DatagenError> {
    if !(target_censoring > 0.0 && target_censoring < 1.0) {
        return Err(DatagenError::InvalidConfig(format!(
            "target censoring {target_censoring} outside (0, 1)"
        )));
    }
    // Targets inside the search tolerance of 0 or 1 are indistinguishable
    // from the boundary: no finite rate is meaningfully calibrated.
    if target_censoring >= 1.0 - 5e-4 || target_censoring <= 5e-4 {
        return Err(DatagenError::NoBracket { target: target_censoring });
    }
    scenario.validate()?;
    let variances = implied_error_variances(scenario)?;
    let n_cal = 200_000;
    let chol = scenario
        .mvn_cov
        .cholesky()
        .map_err(|e| DatagenError::InvalidConfig(format!("covariance not SPD: {e}")))?;
    let covs = sample_mvn(&scenario.mvn_mean, &chol, n_cal, stream.child(TAG_MVN))
        .map_err(|e| DatagenError::InvalidConfig(e.to_string()))?;
    let mut rng_u = stream.child(TAG_PERSON_RESIDUAL).rng();
    let sd_u = variances.sigma_u2.sqrt();
    let x_center = scenario.mean_x_true();

    // Relative hazard multiplier per subject, times the censoring horizon.
    let mut scaled: Vec<f64> = Vec::with_capacity(n_cal);
    for i in 0..n_cal {
        let cov = covs.row(i);
        let z: f64 = StandardNormal.sample(&mut rng_u);
        let x_true = scenario.calib.intercept
            + scenario.calib.self_report * cov[0]
            + scenario.calib.age * cov[1]
            + scenario.calib.bmi * cov[2]
            + sd_u * z;
        let eta = scenario.log_hr.exposure * (x_true - x_center)
            + scenario.log_hr.age * (cov[1] - scenario.age_center)
            + scenario.log_hr.bmi * (cov[2] - scenario.bmi_center);
        scaled.push(scenario.censor_time * eta.exp());
    }
    let censoring_at = |lambda0: f64| -> f64 {
        scaled.iter().map(|s| (-lambda0 * s).exp()).sum::<f64>() / n_cal as f64
    };

    let (mut lo, mut hi) = (1e-12f64, 1e12f64);
    if censoring_at(lo) < target_censoring || censoring_at(hi) > target_censoring {
        return Err(DatagenError::NoBracket { target: target_censoring });
    }
    let mut mid = (lo.ln() + hi.ln()).exp(); // placeholder, replaced below
    for _ in 0..200 {
        mid = ((lo.ln() + hi.ln()) / 2.0).exp();
        let c = censoring_at(mid);
        if (c - target_censoring).abs() <= 5e-4 {
            break;
        }
        if c > target_censoring {
            lo = mid; // too little hazard, too much censoring
        } else {
            hi = mid;
        }
    }
    if (censoring_at(mid) - target_censoring).abs() > 5e-3 {
        return Err(DatagenError::NoBracket { target: target_censoring });
    }
    // Rates this extreme mean the target is not meaningfully attainable.
    if !(1e-10..=1e10).contains(&mid) {
        return Err(DatagenError::NoBracket { target: target_censoring });
    }
    Ok(mid)
}

const CSV_COLUMNS: [&str; 11] = [
    "id",
    "x_star",
    "age",
    "bmi",
    "x_true",
    "x_biomarker",
    "x_biomarker_repeat",
    "event_time",
    "event",
    "in_substudy",
    "in_reliability",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl Cohort {
    /// Writes the cohort in the canonical CSV schema. Floats use the shortest
    /// round-trip representation; missing values are empty fields.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.id,
                r.x_star,
                r.age,
                r.bmi,
                fmt_opt(r.x_true),
                fmt_opt(r.x_biomarker),
                fmt_opt(r.x_biomarker_repeat),
                r.event_time,
                u8::from(r.event),
                u8::from(r.in_substudy),
                u8::from(r.in_reliability),
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Cohort, DatagenError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader
            .headers()
            .map_err(|e| DatagenError::Csv(e.to_string()))?
            .clone();
        let mut col_idx = Vec::with_capacity(CSV_COLUMNS.len());
        for want in CSV_COLUMNS {
            match headers.iter().position(|h| h == want) {
                Some(i) => col_idx.push(i),
                None => return Err(DatagenError::MissingColumn(want.to_string())),
            }
        }
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| DatagenError::Csv(e.to_string()))?;
            let field = |k: usize| record.get(col_idx[k]).unwrap_or("");
            let req = |k: usize| -> Result<f64, DatagenError> {
                field(k).parse::<f64>().map_err(|_| {
                    DatagenError::Csv(format!(
                        "row {}: bad value `{}` in column `{}`",
                        line + 2,
                        field(k),
                        CSV_COLUMNS[k]
                    ))
                })
            };
            let opt = |k: usize| -> Result<Option<f64>, DatagenError> {
                let raw = field(k);
                if raw.is_empty() {
                    Ok(None)
                } else {
                    raw.parse::<f64>().map(Some).map_err(|_| {
                        DatagenError::Csv(format!(
                            "row {}: bad value `{}` in column `{}`",
                            line + 2,
                            raw,
                            CSV_COLUMNS[k]
                        ))
                    })
                }
            };
            let flag = |k: usize| -> Result<bool, DatagenError> {
                match field(k) {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(DatagenError::Csv(format!(
                        "row {}: flag column `{}` must be 0 or 1, got `{other}`",
                        line + 2,
                        CSV_COLUMNS[k]
                    ))),
                }
            };
            rows.push(CohortRow {
                id: field(0).parse::<u64>().map_err(|_| {
                    DatagenError::Csv(format!("row {}: bad id `{}`", line + 2, field(0)))
                })?,
                x_star: req(1)?,
                age: req(2)?,
                bmi: req(3)?,
                x_true: opt(4)?,
                x_biomarker: opt(5)?,
                x_biomarker_repeat: opt(6)?,
                event_time: req(7)?,
                event: flag(8)?,
                in_substudy: flag(9)?,
                in_reliability: flag(10)?,
            });
        }
        Ok(Cohort { rows })
    }
}
