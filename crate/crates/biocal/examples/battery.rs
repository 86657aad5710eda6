use biocal::datagen::{build_scenario, calibrate_lambda0};
use biocal::estimators::Strategy;
use biocal::numerics::RngStream;
use biocal::simharness::{aggregate, run_simulation, RepSettings};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario_name = args.get(1).map(String::as_str).unwrap_or("beta_cryptoxanthin");
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let n_sims: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(300);

    let mut s = build_scenario(scenario_name).unwrap();
    s.lambda0 = calibrate_lambda0(&s, 0.85, RngStream::new(seed, u64::MAX ^ 0x5eed)).unwrap();
    let settings = RepSettings { n_boot: 200, strategies: Strategy::ALL.to_vec() };
    let t0 = Instant::now();
    let outcomes = run_simulation(&s, seed, n_sims, &settings);
    let elapsed = t0.elapsed().as_secs_f64();
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    println!("=== {scenario_name} seed={seed} n={n_sims} elapsed={elapsed:.1}s lambda0={} failed={failed}", s.lambda0);
    for m in aggregate(&outcomes, s.log_hr.exposure).unwrap() {
        println!(
            "{:<24} bias {:>8.2}% med {:>8.2}% ase {:.3} ese {:.3} cp {:.3} power {:.3} n {}",
            m.strategy.label(), m.mean_pct_bias, m.median_pct_bias, m.ase, m.ese, m.cp, m.power, m.n_effective
        );
    }
}
