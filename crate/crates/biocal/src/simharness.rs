//! Replication orchestration: run the strategy set over many generated
//! cohorts, collect per-replication estimates, and aggregate bias, coverage,
//! and power.

use crate::datagen::{generate_cohort, Scenario};
use crate::estimators::{
    bootstrap_inference, fit_artifacts, optimal_combine, point_fit, Centers, CiKind,
    EstimateRecord, Strategy, WarmStarts,
};
use crate::numerics::{empirical_quantile, RngStream};
use rayon::prelude::*;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no successful replications for strategy `{0}`")]
    NoSuccessfulRecords(&'static str),
}

/// Per-replication run settings.
#[derive(Debug, Clone)]
pub struct RepSettings {
    pub n_boot: usize,
    pub strategies: Vec<Strategy>,
}

/// Outcome of one strategy in one replication; failures carry the reason.
#[derive(Debug, Clone)]
pub struct RepOutcome {
    pub rep_index: u64,
    pub strategy: Strategy,
    pub result: Result<EstimateRecord, String>,
}

const TAG_COHORT: u64 = 0;
const TAG_BOOT: u64 = 1;

/// Runs every requested strategy on the cohort generated from
/// `(master_seed, rep_index)`. The calibrated strategies and the optimal
/// combination share one joint bootstrap per replication.
pub fn run_replication(
    scenario: &Scenario,
    master_seed: u64,
    rep_index: u64,
    settings: &RepSettings,
) -> Vec<RepOutcome> {
    let stream = RngStream::new(master_seed, rep_index);
    let requested = &settings.strategies;
    let mut out: Vec<RepOutcome> = Vec::with_capacity(requested.len());
    let fail_all = |msg: String| -> Vec<RepOutcome> {
        requested
            .iter()
            .map(|&s| RepOutcome { rep_index, strategy: s, result: Err(msg.clone()) })
            .collect()
    };

    let cohort = match generate_cohort(scenario, stream.child(TAG_COHORT)) {
        Ok(c) => c,
        Err(e) => return fail_all(e.to_string()),
    };
    let centers = Centers { age: scenario.age_center, bmi: scenario.bmi_center };

    let want = |s: Strategy| requested.contains(&s);
    let need_csr = want(Strategy::CalibratedSelfReport) || want(Strategy::Optimal);
    let need_cb = want(Strategy::CalibratedBiomarker) || want(Strategy::Optimal);

    // Direct strategies: model SEs and Wald intervals.
    for &strategy in requested {
        if strategy.uses_bootstrap() {
            continue;
        }
        let result = crate::estimators::estimate(strategy, &cohort, centers, None)
            .map_err(|e| e.to_string());
        out.push(RepOutcome { rep_index, strategy, result });
    }

    if need_csr || need_cb {
        let calibrated = run_calibrated(
            scenario, &cohort, centers, need_cb, need_csr, settings.n_boot,
            stream.child(TAG_BOOT),
        );
        match calibrated {
            Ok((cb_rec, csr_rec, opt_rec)) => {
                if want(Strategy::CalibratedBiomarker) {
                    out.push(RepOutcome {
                        rep_index,
                        strategy: Strategy::CalibratedBiomarker,
                        result: Ok(cb_rec.clone().expect("requested cb computed")),
                    });
                }
                if want(Strategy::CalibratedSelfReport) {
                    out.push(RepOutcome {
                        rep_index,
                        strategy: Strategy::CalibratedSelfReport,
                        result: Ok(csr_rec.clone().expect("requested csr computed")),
                    });
                }
                if want(Strategy::Optimal) {
                    out.push(RepOutcome {
                        rep_index,
                        strategy: Strategy::Optimal,
                        result: opt_rec.ok_or_else(|| "optimal combination unavailable".to_string()),
                    });
                }
            }
            Err(msg) => {
                for &s in requested.iter().filter(|s| s.uses_bootstrap()) {
                    out.push(RepOutcome { rep_index, strategy: s, result: Err(msg.clone()) });
                }
            }
        }
    }

    // Stable report order.
    out.sort_by_key(|o| Strategy::ALL.iter().position(|s| *s == o.strategy));
    out
}

type CalibratedRecords =
    (Option<EstimateRecord>, Option<EstimateRecord>, Option<EstimateRecord>);

fn run_calibrated(
    _scenario: &Scenario,
    cohort: &crate::datagen::Cohort,
    centers: Centers,
    need_cb: bool,
    need_csr: bool,
    n_boot: usize,
    boot_stream: RngStream,
) -> Result<CalibratedRecords, String> {
    let artifacts =
        fit_artifacts(cohort, centers, need_csr, need_cb).map_err(|e| e.to_string())?;

    let mut strategies = Vec::new();
    let mut warm = WarmStarts::default();
    let mut cb_point = None;
    let mut csr_point = None;
    if need_cb {
        let (fit, n) = point_fit(Strategy::CalibratedBiomarker, cohort, centers, &artifacts)
            .map_err(|e| e.to_string())?;
        strategies.push(Strategy::CalibratedBiomarker);
        warm.biomarker = Some(fit.beta.clone());
        cb_point = Some((fit, n));
    }
    if need_csr {
        let (fit, n) = point_fit(Strategy::CalibratedSelfReport, cohort, centers, &artifacts)
            .map_err(|e| e.to_string())?;
        strategies.push(Strategy::CalibratedSelfReport);
        warm.self_report = Some(fit.beta.clone());
        csr_point = Some((fit, n));
    }

    let inference = bootstrap_inference(&strategies, cohort, centers, n_boot, boot_stream, &warm)
        .map_err(|e| e.to_string())?;
    let summary_for = |s: Strategy| {
        inference
            .per_strategy
            .iter()
            .find(|(k, _)| *k == s)
            .map(|(_, v)| v.clone())
            .expect("requested strategy summarized")
    };

    let make_record = |s: Strategy, point: &(crate::survival::CoxFit, usize)| {
        let boot = summary_for(s);
        EstimateRecord {
            strategy: s,
            beta1_hat: point.0.beta[0],
            se: boot.se,
            ci_low: boot.ci_low,
            ci_high: boot.ci_high,
            ci_kind: CiKind::Percentile,
            n_analysis: point.1,
            converged: point.0.converged,
        }
    };
    let cb_rec = cb_point.as_ref().map(|p| make_record(Strategy::CalibratedBiomarker, p));
    let csr_rec = csr_point.as_ref().map(|p| make_record(Strategy::CalibratedSelfReport, p));

    let opt_rec = match (&cb_rec, &csr_rec, inference.covariance) {
        (Some(cb), Some(csr), Some(cov)) => optimal_combine(cb, csr, &cov).ok(),
        _ => None,
    };
    Ok((cb_rec, csr_rec, opt_rec))
}

/// Runs `n_sims` replications in parallel and returns outcomes ordered by
/// `(rep_index, strategy)` regardless of worker count.
pub fn run_simulation(
    scenario: &Scenario,
    master_seed: u64,
    n_sims: u64,
    settings: &RepSettings,
) -> Vec<RepOutcome> {
    let mut nested: Vec<Vec<RepOutcome>> = (0..n_sims)
        .into_par_iter()
        .map(|rep| run_replication(scenario, master_seed, rep, settings))
        .collect();
    let mut out = Vec::with_capacity(nested.len() * settings.strategies.len());
    for batch in nested.drain(..) {
        out.extend(batch);
    }
    out
}

/// Aggregated metrics for one strategy across replications.
#[derive(Debug, Clone)]
pub struct MethodMetrics {
    pub strategy: Strategy,
    pub mean_pct_bias: f64,
    pub median_pct_bias: f64,
    /// Mean of the per-replication standard errors.
    pub ase: f64,
    /// Empirical standard deviation of the point estimates.
    pub ese: f64,
    /// Fraction of intervals covering the true coefficient.
    pub cp: f64,
    /// Fraction of intervals excluding zero.
    pub power: f64,
    pub n_effective: usize,
    pub n_requested: usize,
}

/// Collapses per-replication records into the per-strategy metric table.
/// Percent bias is signed: `100·(β̂ − β)/β` with the true (negative) β in
/// the denominator. Failed or non-converged replications are excluded and
/// reported through `n_effective`.
pub fn aggregate(
    outcomes: &[RepOutcome],
    true_beta1: f64,
) -> Result<Vec<MethodMetrics>, HarnessError> {
    let mut metrics = Vec::new();
    for &strategy in Strategy::ALL.iter() {
        let all: Vec<&RepOutcome> =
            outcomes.iter().filter(|o| o.strategy == strategy).collect();
        if all.is_empty() {
            continue;
        }
        let records: Vec<&EstimateRecord> = all
            .iter()
            .filter_map(|o| o.result.as_ref().ok())
            .filter(|r| r.converged && r.beta1_hat.is_finite())
            .collect();
        if records.is_empty() {
            return Err(HarnessError::NoSuccessfulRecords(strategy.label()));
        }
        let n = records.len();
        let betas: Vec<f64> = records.iter().map(|r| r.beta1_hat).collect();
        let pct: Vec<f64> = betas
            .iter()
            .map(|b| 100.0 * (b - true_beta1) / true_beta1)
            .collect();
        let mean_pct = pct.iter().sum::<f64>() / n as f64;
        let median_pct = empirical_quantile(&pct, 0.5).expect("non-empty");
        let ase = records.iter().map(|r| r.se).sum::<f64>() / n as f64;
        let mean_beta = betas.iter().sum::<f64>() / n as f64;
        let ese = if n > 1 {
            (betas.iter().map(|b| (b - mean_beta) * (b - mean_beta)).sum::<f64>()
                / (n - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        let cp = records
            .iter()
            .filter(|r| r.ci_low <= true_beta1 && true_beta1 <= r.ci_high)
            .count() as f64
            / n as f64;
        let power = records
            .iter()
            .filter(|r| r.ci_low > 0.0 || r.ci_high < 0.0)
            .count() as f64
            / n as f64;
        metrics.push(MethodMetrics {
            strategy,
            mean_pct_bias: mean_pct,
            median_pct_bias: median_pct,
            ase,
            ese,
            cp,
            power,
            n_effective: n,
            n_requested: all.len(),
        });
    }
    Ok(metrics)
}

pub fn write_metrics_csv<W: Write>(metrics: &[MethodMetrics], out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "strategy,mean_pct_bias,median_pct_bias,ase,ese,cp,power,n_effective"
    )?;
    for m in metrics {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.strategy.label(),
            m.mean_pct_bias,
            m.median_pct_bias,
            m.ase,
            m.ese,
            m.cp,
            m.power,
            m.n_effective
        )?;
    }
    Ok(())
}

/// Human-readable aligned table with the same rows as the CSV.
pub fn format_metrics_table(metrics: &[MethodMetrics]) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{:<24} {:>12} {:>14} {:>8} {:>8} {:>7} {:>7} {:>6}\n",
        "strategy", "mean%bias", "median%bias", "ASE", "ESE", "CP", "power", "n"
    ));
    for m in metrics {
        s.push_str(&format!(
            "{:<24} {:>12.3} {:>14.3} {:>8.3} {:>8.3} {:>7.3} {:>7.3} {:>6}\n",
            m.strategy.label(),
            m.mean_pct_bias,
            m.median_pct_bias,
            m.ase,
            m.ese,
            m.cp,
            m.power,
            m.n_effective
        ));
    }
    s
}

pub fn write_records_csv<W: Write>(outcomes: &[RepOutcome], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "replication,strategy,beta1_hat,se,ci_low,ci_high,converged")?;
    for o in outcomes {
        match &o.result {
            Ok(r) => writeln!(
                out,
                "{},{},{},{},{},{},{}",
                o.rep_index,
                o.strategy.label(),
                r.beta1_hat,
                r.se,
                r.ci_low,
                r.ci_high,
                u8::from(r.converged)
            )?,
            Err(_) => writeln!(out, "{},{},,,,,0", o.rep_index, o.strategy.label())?,
        }
    }
    Ok(())
}
