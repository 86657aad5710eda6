use biocal::datagen::{build_scenario, calibrate_lambda0, generate_cohort};
use biocal::estimators::{fit_artifacts, point_fit, Centers, Strategy};
use biocal::numerics::RngStream;
use rayon::prelude::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("lycopene");
    let n_reps: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let mut s = build_scenario(name).unwrap();
    s.lambda0 = calibrate_lambda0(&s, 0.85, RngStream::new(999, u64::MAX ^ 0x5eed)).unwrap();
    let centers = Centers { age: s.age_center, bmi: s.bmi_center };
    let beta1 = s.log_hr.exposure;

    let results: Vec<[f64; 5]> = (0..n_reps)
        .into_par_iter()
        .filter_map(|rep| {
            let stream = RngStream::new(31337, rep);
            let cohort = generate_cohort(&s, stream.child(0)).ok()?;
            let artifacts = fit_artifacts(&cohort, centers, true, true).ok()?;
            let (t, _) = point_fit(Strategy::Truth, &cohort, centers, &artifacts).ok()?;
            let (nb, _) = point_fit(Strategy::NaiveBiomarker, &cohort, centers, &artifacts).ok()?;
            let (cb, _) = point_fit(Strategy::CalibratedBiomarker, &cohort, centers, &artifacts).ok()?;
            let (csr, _) = point_fit(Strategy::CalibratedSelfReport, &cohort, centers, &artifacts).ok()?;
            let truth_power = f64::from((t.beta[0].abs() / t.se[0]) > 1.959963984540054);
            Some([t.beta[0], nb.beta[0], cb.beta[0], csr.beta[0], truth_power])
        })
        .collect();

    let n = results.len() as f64;
    let mean = |k: usize| results.iter().map(|r| r[k]).sum::<f64>() / n;
    let sd = |k: usize| {
        let m = mean(k);
        (results.iter().map(|r| (r[k] - m) * (r[k] - m)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    println!("=== {name} ({} reps ok, lambda0 {:.6e}, beta1 {beta1:.5})", results.len(), s.lambda0);
    for (k, label) in ["truth", "naive_bio", "calib_bio", "calib_sr"].iter().enumerate() {
        let bias = 100.0 * (mean(k) - beta1) / beta1;
        let mcse = 100.0 * sd(k) / (n.sqrt() * beta1.abs());
        println!("{label:<10} mean%bias {bias:>7.2} (±{mcse:.2}) ese {:.3}", sd(k));
    }
    println!("truth power (wald, model se): {:.3}", mean(4));
}
