//! End-to-end tests of the `biocal` binary: exit codes, file shapes, and
//! byte-level determinism of the emitted CSVs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn biocal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biocal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn simulate_writes_reports_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let run = |out: &Path| {
        let out_s = out.to_str().unwrap();
        let o = biocal(&[
            "simulate",
            "--scenario",
            "folate",
            "--sims",
            "4",
            "--boot",
            "50",
            "--seed",
            "7",
            "--workers",
            "2",
            "--strategies",
            "truth,naive_self_report",
            "--out",
            out_s,
        ]);
        assert!(
            o.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    };
    run(&out_a);
    run(&out_b);
    for name in ["metrics.csv", "metrics.txt", "records.csv", "manifest.txt"] {
        assert!(out_a.join(name).exists(), "{name} missing");
    }
    assert_eq!(read(&out_a.join("metrics.csv")), read(&out_b.join("metrics.csv")));
    assert_eq!(read(&out_a.join("records.csv")), read(&out_b.join("records.csv")));

    let metrics = read(&out_a.join("metrics.csv"));
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines.len(), 3, "header + two strategy rows: {metrics}");
    assert!(lines[1].starts_with("truth,"));
    assert!(lines[2].starts_with("naive_self_report,"));

    let records = read(&out_a.join("records.csv"));
    assert_eq!(records.lines().count(), 1 + 4 * 2);
}

#[test]
fn simulate_unknown_scenario_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let o = biocal(&[
        "simulate",
        "--scenario",
        "nosuch",
        "--sims",
        "1",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nosuch"));
}

#[test]
fn simulate_quality_gate_exits_3() {
    // A sub-study far too small for any calibration fit: every calibrated
    // replication fails, tripping the > 5% gate.
    let dir = tempfile::tempdir().unwrap();
    let scenario_path = dir.path().join("tiny.scenario");
    fs::write(
        &scenario_path,
        "n_cohort = 200\n\
         n_substudy = 3\n\
         n_reliability = 1\n\
         mvn_mean = 3.261392 45.81989 29.77589\n\
         mvn_cov = [2.7095730 0.5280317 -0.4143209; 0.5280317 194.0924 8.354409; -0.4143209 8.354409 36.88889]\n\
         calib = 1.287 0.112 0.000 -0.013\n\
         r2_target = 0.5034792\n\
         sigma_eps2 = 0.01070956\n\
         log_hr = -0.2548922 -0.1053605 -0.2876821\n\
         lambda0 = 0.003\n",
    )
    .unwrap();
    let o = biocal(&[
        "simulate",
        "--scenario",
        scenario_path.to_str().unwrap(),
        "--lambda0-mode",
        "fixed",
        "--sims",
        "2",
        "--boot",
        "50",
        "--strategies",
        "truth,calibrated_self_report",
        "--out",
        dir.path().join("gate").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    // Records are still written for post-mortem.
    assert!(dir.path().join("gate").join("records.csv").exists());
}

#[test]
fn generate_default_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = biocal(&[
            "generate",
            "--scenario",
            "beta_cryptoxanthin",
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(read(&a), read(&b));

    let content = read(&a);
    let mut lines = content.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "id,x_star,age,bmi,x_true,x_biomarker,x_biomarker_repeat,event_time,event,in_substudy,in_reliability"
    );
    let mut rows = 0;
    let mut with_biomarker = 0;
    let mut with_repeat = 0;
    for line in lines {
        rows += 1;
        let fields: Vec<&str> = line.split(',').collect();
        if !fields[5].is_empty() {
            with_biomarker += 1;
        }
        if !fields[6].is_empty() {
            with_repeat += 1;
        }
    }
    assert_eq!(rows, 16_415);
    assert_eq!(with_biomarker, 476);
    assert_eq!(with_repeat, 95);
}

#[test]
fn generate_respects_size_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("small.csv");
    let o = biocal(&[
        "generate",
        "--scenario",
        "folate",
        "--n-cohort",
        "100",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(read(&out).lines().count(), 101);
}

#[test]
fn analyze_recovers_scenario_r2_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cohort_path = dir.path().join("cohort.csv");
    let o = biocal(&[
        "generate",
        "--scenario",
        "beta_cryptoxanthin",
        "--n-cohort",
        "4000",
        "--n-substudy",
        "2000",
        "--n-reliability",
        "300",
        "--seed",
        "11",
        "--out",
        cohort_path.to_str().unwrap(),
    ]);
    assert!(o.status.success());

    let spec_path = dir.path().join("analysis.spec");
    fs::write(
        &spec_path,
        "response = x_biomarker\n\
         terms = x_star, age, bmi\n\
         j_list = 2, 4\n\
         optimism_boot = 60\n\
         seed = 4\n\
         geomean_value = x_star\n\
         geomean_group = in_substudy\n\
         geomean_adjusters = age:45.81989\n",
    )
    .unwrap();
    let out_dir = dir.path().join("analysis");
    let o = biocal(&[
        "analyze",
        "--cohort",
        cohort_path.to_str().unwrap(),
        "--spec",
        spec_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));

    for name in ["calibration_fit.csv", "r2_family.csv", "stepwise.csv", "optimism.csv", "geomeans.csv"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    // The fitted R² should sit near the scenario's target.
    let fam = read(&out_dir.join("r2_family.csv"));
    let mut lines = fam.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let values: Vec<&str> = lines.next().unwrap().split(',').collect();
    let r2_pos = header.iter().position(|h| *h == "r2").unwrap();
    let r2: f64 = values[r2_pos].parse().unwrap();
    assert!((r2 - 0.5034792).abs() < 0.06, "r2 = {r2}");

    let fit = read(&out_dir.join("calibration_fit.csv"));
    assert!(fit.starts_with("term,estimate,se\nintercept,"));
    assert_eq!(fit.lines().count(), 5);
}

#[test]
fn analyze_missing_column_names_it_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cohort_path = dir.path().join("bad.csv");
    fs::write(&cohort_path, "id,x_star,bmi\n1,0.4,31\n").unwrap();
    let spec_path = dir.path().join("analysis.spec");
    fs::write(&spec_path, "response = x_biomarker\n").unwrap();
    let o = biocal(&[
        "analyze",
        "--cohort",
        cohort_path.to_str().unwrap(),
        "--spec",
        spec_path.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("age"));
}

#[test]
fn reliability_exact_duplicates_have_zero_cv() {
    let dir = tempfile::tempdir().unwrap();
    let dups_path = dir.path().join("dups.csv");
    fs::write(
        &dups_path,
        "analyte,id,replicate_index,value\n\
         a,1,1,5.0\na,1,2,5.0\n\
         a,2,1,7.5\na,2,2,7.5\n\
         a,3,1,2.0\na,3,2,2.0\n\
         b,1,1,4.0\nb,1,2,4.0\n\
         b,2,1,9.0\nb,2,2,9.0\n\
         b,3,1,6.0\nb,3,2,6.0\n",
    )
    .unwrap();
    let out_path = dir.path().join("reliability.csv");
    let o = biocal(&[
        "reliability",
        "--duplicates",
        dups_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let table = read(&out_path);
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "analyte,n_pairs,icc,cv_pct");
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], "3");
        assert_eq!(fields[2], "1");
        assert_eq!(fields[3], "0");
    }
}
