//! Command implementations behind the `biocal` binary: simulation runs,
//! dataset generation, descriptive analysis of a cohort CSV, and
//! reliability statistics for duplicate assays.

use crate::datagen::{
    build_scenario_with, calibrate_lambda0, generate_cohort, CalibCoefs, Cohort, EffectSizes,
    LogHazardCoefs, Scenario,
};
use crate::descriptive::{adjusted_geomean, duplicate_cv, duplicate_icc, DuplicatePairs};
use crate::estimators::Strategy;
use crate::linmod::{
    aic, fit_calibration, optimism_corrected_r2, partial_r2, r2_family, stepwise_aic,
    CalibrationFit, Dataset, TermSpec,
};
use crate::numerics::{Matrix, RngStream};
use crate::simharness::{
    aggregate, format_metrics_table, run_simulation, write_metrics_csv, write_records_csv,
    RepSettings,
};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Usage or configuration problems: exit code 2.
    #[error("{0}")]
    Config(String),
    /// Quality-gate failures (too many failed replications): exit code 3.
    #[error("{0}")]
    QualityGate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::QualityGate(_) => 3,
        }
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lambda0Mode {
    /// Re-derive the baseline rate to hit the censoring target.
    Auto,
    /// Use the rate stored in the scenario as-is.
    Fixed,
}

impl Lambda0Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Lambda0Mode::Auto => "auto",
            Lambda0Mode::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone)]
pub enum ScenarioSource {
    Builtin(String),
    File(PathBuf),
}

/// Full configuration of one simulation run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    pub n_sims: u64,
    pub n_boot: usize,
    pub master_seed: u64,
    /// 0 means the rayon default.
    pub workers: usize,
    pub strategies: Vec<Strategy>,
    pub out_dir: PathBuf,
    pub lambda0_mode: Lambda0Mode,
    pub censoring_target: f64,
    pub effect_sizes: EffectSizes,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_sims == 0 {
            return Err(CliError::Config("--sims must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(CliError::Config("at least one strategy required".into()));
        }
        let any_calibrated = self.strategies.iter().any(Strategy::uses_bootstrap);
        if any_calibrated && self.n_boot < 50 {
            return Err(CliError::Config(
                "--boot must be at least 50 when a calibrated strategy is requested".into(),
            ));
        }
        if !(self.censoring_target > 0.0 && self.censoring_target < 1.0) {
            return Err(CliError::Config("censoring target must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Stream id reserved for baseline-rate calibration, far away from the
/// replication ids 0..n_sims.
const LAMBDA0_STREAM: u64 = u64::MAX ^ 0x5eed;

pub fn load_scenario(source: &ScenarioSource, effects: EffectSizes) -> Result<Scenario, CliError> {
    match source {
        ScenarioSource::Builtin(name) => build_scenario_with(name, effects).map_err(config_err),
        ScenarioSource::File(path) => parse_scenario_file(path),
    }
}

/// Resolves the rate for this run, calibrating when the mode asks for it.
pub fn resolve_lambda0(
    scenario: &mut Scenario,
    mode: Lambda0Mode,
    censoring_target: f64,
    master_seed: u64,
) -> Result<f64, CliError> {
    if mode == Lambda0Mode::Auto {
        let stream = RngStream::new(master_seed, LAMBDA0_STREAM);
        scenario.lambda0 =
            calibrate_lambda0(scenario, censoring_target, stream).map_err(config_err)?;
    }
    Ok(scenario.lambda0)
}

/// `simulate`: run the Monte-Carlo study and emit metrics.csv, metrics.txt,
/// records.csv, and manifest.txt under the output directory.
pub fn cmd_simulate(config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    let started = Instant::now();
    let mut scenario = load_scenario(&config.scenario, config.effect_sizes)?;
    let lambda0_used = resolve_lambda0(
        &mut scenario,
        config.lambda0_mode,
        config.censoring_target,
        config.master_seed,
    )?;

    fs::create_dir_all(&config.out_dir)
        .map_err(|e| CliError::Config(format!("output directory: {e}")))?;

    let settings = RepSettings {
        n_boot: config.n_boot,
        strategies: config.strategies.clone(),
    };
    let outcomes = if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
        pool.install(|| run_simulation(&scenario, config.master_seed, config.n_sims, &settings))
    } else {
        run_simulation(&scenario, config.master_seed, config.n_sims, &settings)
    };

    let n_failed = outcomes
        .iter()
        .filter(|o| o.result.as_ref().map(|r| !r.converged).unwrap_or(true))
        .count();
    write_file(&config.out_dir.join("records.csv"), |w| {
        write_records_csv(&outcomes, w)
    })?;
    let metrics = aggregate(&outcomes, scenario.log_hr.exposure);
    if let Ok(metrics) = &metrics {
        write_file(&config.out_dir.join("metrics.csv"), |w| {
            write_metrics_csv(metrics, w)
        })?;
        write_file(&config.out_dir.join("metrics.txt"), |w| {
            w.write_all(format_metrics_table(metrics).as_bytes())
        })?;
    }

    let elapsed = started.elapsed().as_secs_f64();
    let strategies: Vec<&str> = config.strategies.iter().map(Strategy::label).collect();
    let manifest = format!(
        "tool = biocal {}\nscenario = {}\nmaster_seed = {}\nn_sims = {}\nn_boot = {}\n\
         strategies = {}\nlambda0_mode = {}\ncensoring_target = {}\nlambda0_used = {}\n\
         effect_sizes = {}\nn_cohort = {}\nn_substudy = {}\nn_reliability = {}\n\
         workers = {}\nelapsed_seconds = {:.3}\n",
        env!("CARGO_PKG_VERSION"),
        scenario.name,
        config.master_seed,
        config.n_sims,
        config.n_boot,
        strategies.join(","),
        config.lambda0_mode.label(),
        config.censoring_target,
        lambda0_used,
        match config.effect_sizes {
            EffectSizes::Standard => "standard",
            EffectSizes::Alternate => "alternate",
        },
        scenario.n_cohort,
        scenario.n_substudy,
        scenario.n_reliability,
        config.workers,
        elapsed,
    );
    write_file(&config.out_dir.join("manifest.txt"), |w| {
        w.write_all(manifest.as_bytes())
    })?;

    let metrics = metrics.map_err(|e| CliError::QualityGate(e.to_string()))?;
    println!("{}", format_metrics_table(&metrics));
    let total = outcomes.len();
    if n_failed * 20 > total {
        return Err(CliError::QualityGate(format!(
            "{n_failed} of {total} strategy replications failed (> 5%)"
        )));
    }
    Ok(())
}

/// `generate`: write one synthetic cohort CSV.
#[allow(clippy::too_many_arguments)]
pub fn cmd_generate(
    source: &ScenarioSource,
    effects: EffectSizes,
    n_cohort: Option<usize>,
    n_substudy: Option<usize>,
    n_reliability: Option<usize>,
    seed: u64,
    lambda0_mode: Lambda0Mode,
    censoring_target: f64,
    out_path: &Path,
) -> Result<(), CliError> {
    let mut scenario = load_scenario(source, effects)?;
    if let Some(n) = n_cohort {
        scenario.n_cohort = n;
        scenario.n_substudy = scenario.n_substudy.min(n);
        scenario.n_reliability = scenario.n_reliability.min(scenario.n_substudy);
    }
    if let Some(n) = n_substudy {
        scenario.n_substudy = n;
        scenario.n_reliability = scenario.n_reliability.min(n);
    }
    if let Some(n) = n_reliability {
        scenario.n_reliability = n;
    }
    scenario.validate().map_err(config_err)?;
    resolve_lambda0(&mut scenario, lambda0_mode, censoring_target, seed)?;
    let cohort = generate_cohort(&scenario, RngStream::new(seed, 0)).map_err(config_err)?;
    write_file(out_path, |w| cohort.write_csv(w))?;
    Ok(())
}

/// Parsed analysis spec (flat key/value file).
#[derive(Debug, Clone)]
pub struct AnalysisSpec {
    pub response: String,
    pub terms: Vec<TermSpec>,
    pub stepwise_candidates: Vec<TermSpec>,
    pub icc: Option<f64>,
    pub j_list: Vec<f64>,
    pub optimism_boot: usize,
    pub seed: u64,
    pub geomean_value: Option<String>,
    pub geomean_group: Option<String>,
    pub geomean_adjusters: Vec<(String, f64)>,
    pub duplicates_csv: Option<PathBuf>,
}

pub fn parse_analysis_spec(path: &Path) -> Result<AnalysisSpec, CliError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("analysis spec {}: {e}", path.display())))?;
    let kv = parse_key_values(&raw)?;
    let get = |k: &str| kv.get(k).map(String::as_str);

    let age_center: f64 = parse_or(get("age_center"), 46.1)?;
    let bmi_center: f64 = parse_or(get("bmi_center"), 29.6)?;
    let term_with_center = |name: &str| -> TermSpec {
        match name {
            "age" => TermSpec::centered("age", age_center),
            "bmi" => TermSpec::centered("bmi", bmi_center),
            other => TermSpec::raw(other),
        }
    };
    let parse_terms = |raw: &str| -> Vec<TermSpec> {
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(term_with_center)
            .collect()
    };

    let response = get("response").unwrap_or("x_biomarker").to_string();
    let terms = parse_terms(get("terms").unwrap_or("x_star, age, bmi"));
    let stepwise_candidates = match get("stepwise") {
        Some(raw) => parse_terms(raw),
        None => terms.clone(),
    };
    let icc = match get("icc") {
        Some(raw) => Some(raw.parse::<f64>().map_err(|_| {
            CliError::Config(format!("analysis spec: bad icc value `{raw}`"))
        })?),
        None => None,
    };
    let j_list: Vec<f64> = match get("j_list") {
        Some(raw) => raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| CliError::Config(format!("analysis spec: bad j value `{s}`")))
            })
            .collect::<Result<_, _>>()?,
        None => vec![2.0, 4.0],
    };
    let geomean_adjusters = match get("geomean_adjusters") {
        Some(raw) => raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|pair| {
                let (name, val) = pair.split_once(':').ok_or_else(|| {
                    CliError::Config(format!(
                        "analysis spec: adjuster `{pair}` must be name:reference"
                    ))
                })?;
                let v = val.trim().parse::<f64>().map_err(|_| {
                    CliError::Config(format!("analysis spec: bad adjuster reference `{val}`"))
                })?;
                Ok((name.trim().to_string(), v))
            })
            .collect::<Result<Vec<_>, CliError>>()?,
        None => Vec::new(),
    };
    Ok(AnalysisSpec {
        response,
        terms,
        stepwise_candidates,
        icc,
        j_list,
        optimism_boot: parse_or(get("optimism_boot"), 0.0)? as usize,
        seed: parse_or(get("seed"), 0.0)? as u64,
        geomean_value: get("geomean_value").map(str::to_string),
        geomean_group: get("geomean_group").map(str::to_string),
        geomean_adjusters,
        duplicates_csv: get("duplicates_csv").map(PathBuf::from),
    })
}

/// `analyze`: calibration fit, R² family, stepwise report, geometric means,
/// and duplicate reliability statistics, written as CSVs under `out_dir`.
pub fn cmd_analyze(cohort_path: &Path, spec_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let file = fs::File::open(cohort_path)
        .map_err(|e| CliError::Config(format!("cohort {}: {e}", cohort_path.display())))?;
    let cohort = Cohort::read_csv(file).map_err(config_err)?;
    let spec = parse_analysis_spec(spec_path)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Config(format!("output directory: {e}")))?;

    let full = Dataset::from_cohort(&cohort);
    let substudy = full.filter_flag("in_substudy").map_err(config_err)?;

    // Calibration model on the sub-study (complete cases).
    let fit = fit_calibration(&substudy, &spec.response, &spec.terms).map_err(config_err)?;
    write_file(&out_dir.join("calibration_fit.csv"), |w| {
        write_fit_csv(&fit, w)
    })?;

    // ICC: explicit, or the Pearson correlation of the repeat assays.
    let icc = match spec.icc {
        Some(v) => v,
        None => {
            let pairs: Vec<(f64, f64)> = cohort
                .rows
                .iter()
                .filter_map(|r| Some((r.x_biomarker?, r.x_biomarker_repeat?)))
                .collect();
            let dups = DuplicatePairs { analyte: spec.response.clone(), pairs };
            duplicate_icc(&dups).map_err(|e| {
                CliError::Config(format!("icc unavailable ({e}); set `icc` in the spec"))
            })?
        }
    };
    let mut family = r2_family(&fit, icc, &spec.j_list).map_err(config_err)?;
    let mut partials = Vec::new();
    for term in &spec.terms {
        let reduced_terms: Vec<TermSpec> = spec
            .terms
            .iter()
            .filter(|t| t.name != term.name)
            .cloned()
            .collect();
        let reduced =
            fit_calibration(&substudy, &spec.response, &reduced_terms).map_err(config_err)?;
        let pr2 = partial_r2(&fit, &reduced).map_err(config_err)?;
        partials.push((term.name.clone(), pr2));
    }
    family = family.with_partials(partials);
    write_file(&out_dir.join("r2_family.csv"), |w| {
        let mut header = vec!["r2".to_string(), "prentice_r2".into(), "icc_used".into()];
        let mut values = vec![
            format!("{}", family.r2),
            format!("{}", family.prentice_r2),
            format!("{}", family.icc_used),
        ];
        for (j, v) in &family.r2_new {
            header.push(format!("r2_new_{j}"));
            values.push(format!("{v}"));
        }
        for (t, v) in &family.partial_r2 {
            header.push(format!("partial_{t}"));
            values.push(format!("{v}"));
        }
        writeln!(w, "{}", header.join(","))?;
        writeln!(w, "{}", values.join(","))
    })?;

    // Stepwise reduction over the candidate set.
    let reduced = stepwise_aic(&substudy, &spec.response, &spec.stepwise_candidates)
        .map_err(config_err)?;
    let full_fit = fit_calibration(&substudy, &spec.response, &spec.stepwise_candidates)
        .map_err(config_err)?;
    write_file(&out_dir.join("stepwise.csv"), |w| {
        writeln!(w, "term,selected,estimate,se")?;
        for cand in &spec.stepwise_candidates {
            match reduced.terms.iter().position(|t| *t == cand.name) {
                Some(i) => writeln!(
                    w,
                    "{},1,{},{}",
                    cand.name, reduced.coef[i], reduced.se[i]
                )?,
                None => writeln!(w, "{},0,,", cand.name)?,
            }
        }
        writeln!(w, "_r2_full,,{},", full_fit.r2)?;
        writeln!(w, "_r2_stepwise,,{},", reduced.r2)?;
        writeln!(w, "_aic_full,,{},", aic(&full_fit))?;
        writeln!(w, "_aic_stepwise,,{},", aic(&reduced))
    })?;

    // Optional optimism correction.
    if spec.optimism_boot > 0 {
        let res = optimism_corrected_r2(
            &substudy,
            &spec.response,
            &spec.terms,
            spec.optimism_boot,
            RngStream::new(spec.seed, 0),
        )
        .map_err(config_err)?;
        write_file(&out_dir.join("optimism.csv"), |w| {
            writeln!(w, "apparent_r2,mean_optimism,corrected_r2,b_used,b_failed")?;
            writeln!(
                w,
                "{},{},{},{},{}",
                res.apparent_r2, res.mean_optimism, res.corrected_r2, res.b_used, res.b_failed
            )
        })?;
    }

    // Optional adjusted geometric means.
    if let Some(value_col) = &spec.geomean_value {
        let groups = adjusted_geomean(
            &full,
            value_col,
            &spec.geomean_adjusters,
            spec.geomean_group.as_deref(),
        )
        .map_err(config_err)?;
        write_file(&out_dir.join("geomeans.csv"), |w| {
            writeln!(w, "group,n,geometric_mean,ci_low,ci_high")?;
            for g in groups {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    g.label, g.n, g.geometric_mean, g.ci_low, g.ci_high
                )?;
            }
            Ok(())
        })?;
    }

    // Optional duplicate reliability table.
    if let Some(dups_path) = &spec.duplicates_csv {
        let table = reliability_table(dups_path)?;
        write_file(&out_dir.join("duplicates.csv"), |w| {
            w.write_all(table.as_bytes())
        })?;
    }
    Ok(())
}

/// `reliability`: ICC and CV per analyte from a long-format duplicates CSV
/// with columns analyte,id,replicate_index,value.
pub fn cmd_reliability(duplicates_path: &Path, out_path: &Path) -> Result<(), CliError> {
    let table = reliability_table(duplicates_path)?;
    write_file(out_path, |w| w.write_all(table.as_bytes()))?;
    Ok(())
}

fn reliability_table(path: &Path) -> Result<String, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Config(format!("duplicates {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(config_err)?.clone();
    let mut col = [0usize; 4];
    for (k, want) in ["analyte", "id", "replicate_index", "value"].iter().enumerate() {
        col[k] = headers
            .iter()
            .position(|h| h == *want)
            .ok_or_else(|| CliError::Config(format!("duplicates CSV missing column `{want}`")))?;
    }
    // (analyte, id) -> (first, second)
    let mut measures: BTreeMap<(String, String), (Option<f64>, Option<f64>)> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(config_err)?;
        let analyte = record.get(col[0]).unwrap_or("").to_string();
        let id = record.get(col[1]).unwrap_or("").to_string();
        let rep: u32 = record
            .get(col[2])
            .unwrap_or("")
            .parse()
            .map_err(|_| CliError::Config("bad replicate_index in duplicates CSV".into()))?;
        let value: f64 = record
            .get(col[3])
            .unwrap_or("")
            .parse()
            .map_err(|_| CliError::Config("bad value in duplicates CSV".into()))?;
        let entry = measures.entry((analyte, id)).or_insert((None, None));
        match rep {
            1 => entry.0 = Some(value),
            2 => entry.1 = Some(value),
            other => {
                return Err(CliError::Config(format!(
                    "replicate_index must be 1 or 2, got {other}"
                )))
            }
        }
    }
    let mut by_analyte: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for ((analyte, _), (a, b)) in measures {
        if let (Some(a), Some(b)) = (a, b) {
            by_analyte.entry(analyte).or_default().push((a, b));
        }
    }
    let mut out = String::from("analyte,n_pairs,icc,cv_pct\n");
    for (analyte, pairs) in by_analyte {
        let dups = DuplicatePairs { analyte: analyte.clone(), pairs };
        let icc = duplicate_icc(&dups).map(|v| format!("{v}")).unwrap_or_default();
        let cv = duplicate_cv(&dups).map(|v| format!("{v}")).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", analyte, dups.pairs.len(), icc, cv));
    }
    Ok(out)
}

fn write_fit_csv<W: Write>(fit: &CalibrationFit, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "term,estimate,se")?;
    for i in 0..fit.terms.len() {
        writeln!(w, "{},{},{}", fit.terms[i], fit.coef[i], fit.se[i])?;
    }
    Ok(())
}

fn write_file<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut std::io::BufWriter<fs::File>) -> std::io::Result<()>,
{
    let file = fs::File::create(path)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    let mut writer = std::io::BufWriter::new(file);
    body(&mut writer).map_err(|e| CliError::Config(format!("write {}: {e}", path.display())))?;
    writer
        .into_inner()
        .map_err(|e| CliError::Config(format!("flush {}: {e}", path.display())))?
        .sync_all()
        .ok();
    Ok(())
}

fn parse_or(raw: Option<&str>, default: f64) -> Result<f64, CliError> {
    match raw {
        None => Ok(default),
        Some(s) => s
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad numeric value `{s}`"))),
    }
}

fn parse_key_values(raw: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// Parses the flat key/value + matrix-literal scenario file format.
///
/// Required keys: mvn_mean (3 numbers), mvn_cov (3×3 matrix literal in
/// `[a b c; d e f; g h i]` form), calib (4 numbers: intercept, self-report,
/// age, bmi), r2_target, sigma_eps2, log_hr (3 numbers: exposure, age, bmi),
/// lambda0. Optional: name, n_cohort, n_substudy, n_reliability,
/// censor_time, age_center, bmi_center.
pub fn parse_scenario_file(path: &Path) -> Result<Scenario, CliError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("scenario {}: {e}", path.display())))?;
    let kv = parse_key_values(&raw)?;
    let get = |k: &str| kv.get(k).map(String::as_str);
    let require = |k: &str| -> Result<&str, CliError> {
        get(k).ok_or_else(|| CliError::Config(format!("scenario file missing key `{k}`")))
    };
    let numbers = |raw: &str, want: usize, key: &str| -> Result<Vec<f64>, CliError> {
        let vals: Result<Vec<f64>, _> = raw.split_whitespace().map(str::parse::<f64>).collect();
        let vals =
            vals.map_err(|_| CliError::Config(format!("scenario key `{key}`: bad number")))?;
        if vals.len() != want {
            return Err(CliError::Config(format!(
                "scenario key `{key}`: expected {want} numbers, got {}",
                vals.len()
            )));
        }
        Ok(vals)
    };

    let mean = numbers(require("mvn_mean")?, 3, "mvn_mean")?;
    let cov_raw = require("mvn_cov")?;
    let inner = cov_raw
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| CliError::Config("mvn_cov must use the [..; ..; ..] form".into()))?;
    let rows: Vec<&str> = inner.split(';').collect();
    if rows.len() != 3 {
        return Err(CliError::Config("mvn_cov must have 3 rows".into()));
    }
    let mut cov_data = Vec::with_capacity(9);
    for row in rows {
        cov_data.extend(numbers(row, 3, "mvn_cov")?);
    }
    let calib = numbers(require("calib")?, 4, "calib")?;
    let log_hr = numbers(require("log_hr")?, 3, "log_hr")?;

    let scenario = Scenario {
        name: get("name")
            .map(str::to_string)
            .or_else(|| {
                path.file_stem().map(|s| s.to_string_lossy().into_owned())
            })
            .unwrap_or_else(|| "custom".into()),
        n_cohort: parse_or(get("n_cohort"), 16_415.0)? as usize,
        n_substudy: parse_or(get("n_substudy"), 476.0)? as usize,
        n_reliability: parse_or(get("n_reliability"), 95.0)? as usize,
        mvn_mean: [mean[0], mean[1], mean[2]],
        mvn_cov: Matrix::from_vec(3, 3, cov_data),
        calib: CalibCoefs {
            intercept: calib[0],
            self_report: calib[1],
            age: calib[2],
            bmi: calib[3],
        },
        r2_target: parse_or(get("r2_target"), f64::NAN)?,
        sigma_eps2: parse_or(get("sigma_eps2"), f64::NAN)?,
        log_hr: LogHazardCoefs { exposure: log_hr[0], age: log_hr[1], bmi: log_hr[2] },
        lambda0: parse_or(get("lambda0"), f64::NAN)?,
        censor_time: parse_or(get("censor_time"), 60.0)?,
        age_center: parse_or(get("age_center"), 46.1)?,
        bmi_center: parse_or(get("bmi_center"), 29.6)?,
    };
    if !scenario.r2_target.is_finite() {
        return Err(CliError::Config("scenario file missing key `r2_target`".into()));
    }
    if !scenario.sigma_eps2.is_finite() {
        return Err(CliError::Config("scenario file missing key `sigma_eps2`".into()));
    }
    if !scenario.lambda0.is_finite() {
        return Err(CliError::Config("scenario file missing key `lambda0`".into()));
    }
    scenario.validate().map_err(config_err)?;
    Ok(scenario)
}
