use biocal::datagen::{build_scenario, calibrate_lambda0, generate_cohort};
use biocal::estimators::{point_fit, fit_artifacts, Centers, Strategy};
use biocal::numerics::RngStream;
use biocal::survival::{fit_cox, SurvData};
use biocal::numerics::Matrix;
use std::time::Instant;

fn main() {
    let mut s = build_scenario("beta_cryptoxanthin").unwrap();
    s.lambda0 = calibrate_lambda0(&s, 0.85, RngStream::new(1, 0)).unwrap();
    let cohort = generate_cohort(&s, RngStream::new(2, 0)).unwrap();
    let centers = Centers { age: 46.1, bmi: 29.6 };
    let artifacts = fit_artifacts(&cohort, centers, true, false).unwrap();
    let (fit, _) = point_fit(Strategy::CalibratedSelfReport, &cohort, centers, &artifacts).unwrap();
    println!("iters cold: {}", fit.iterations);

    // Rebuild the SurvData once; time warm fits.
    let n = cohort.n();
    let mut time = Vec::new(); let mut event = Vec::new(); let mut zd = Vec::new();
    for r in &cohort.rows {
        time.push(r.event_time);
        event.push(r.event);
        let cal = artifacts.self_report.as_ref().unwrap();
        zd.extend_from_slice(&[cal.predict(r.x_star, r.age, r.bmi), r.age - 46.1, r.bmi - 29.6]);
    }
    let data = SurvData::new(time, event, Matrix::from_vec(n, 3, zd)).unwrap();
    let warm = fit.beta.clone();
    let t0 = Instant::now();
    let mut total_iters = 0;
    for _ in 0..100 {
        let f = fit_cox(&data, Some(&warm), 25, 1e-8).unwrap();
        total_iters += f.iterations;
    }
    let dt = t0.elapsed().as_secs_f64();
    println!("100 warm fits: {:.3}s ({:.2} ms/fit, {} iters total)", dt, dt * 10.0, total_iters);
}
