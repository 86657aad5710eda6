use biocal::datagen::{build_scenario, calibrate_lambda0};
use biocal::estimators::Strategy;
use biocal::numerics::RngStream;
use biocal::simharness::{aggregate, run_simulation, MethodMetrics, RepSettings};

fn get<'a>(ms: &'a [MethodMetrics], s: Strategy) -> &'a MethodMetrics {
    ms.iter().find(|m| m.strategy == s).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = args[1].as_str();
    let seed: u64 = args[2].parse().unwrap();
    let n_sims: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(300);

    let (truth_pow, nsr_bias, nb_bias, csr_pow): ((f64, f64), f64, f64, (f64, f64)) = match name {
        "beta_cryptoxanthin" => ((0.871, 0.971), -88.82, -12.755, (0.619, 0.739)),
        "lycopene" => ((0.849, 0.949), -98.952, -33.613, (0.128, 0.228)),
        "folate" => ((0.854, 0.954), -91.047, -47.812, (0.116, 0.216)),
        _ => panic!("unknown scenario"),
    };
    let nsr_tol = if name == "lycopene" { 1.0 } else { 2.0 };
    let nb_tol = if name == "beta_cryptoxanthin" { 4.0 } else { 5.0 };

    let mut s = build_scenario(name).unwrap();
    s.lambda0 = calibrate_lambda0(&s, 0.85, RngStream::new(seed, u64::MAX ^ 0x5eed)).unwrap();
    let settings = RepSettings { n_boot: 200, strategies: Strategy::ALL.to_vec() };
    let outcomes = run_simulation(&s, seed, n_sims, &settings);
    let ms = aggregate(&outcomes, s.log_hr.exposure).unwrap();

    let mut fails: Vec<String> = Vec::new();
    let mut check = |label: &str, ok: bool, detail: String| {
        if !ok {
            fails.push(format!("{label}: {detail}"));
        }
    };
    let t = get(&ms, Strategy::Truth);
    check("truth_power", t.power >= truth_pow.0 && t.power <= truth_pow.1, format!("{}", t.power));
    let nsr = get(&ms, Strategy::NaiveSelfReport);
    check("nsr_bias", (nsr.mean_pct_bias - nsr_bias).abs() <= nsr_tol, format!("{}", nsr.mean_pct_bias));
    check("nsr_cp", nsr.cp <= 0.01, format!("{}", nsr.cp));
    let nb = get(&ms, Strategy::NaiveBiomarker);
    check("nb_bias", (nb.mean_pct_bias - nb_bias).abs() <= nb_tol, format!("{}", nb.mean_pct_bias));
    let cb = get(&ms, Strategy::CalibratedBiomarker);
    check("cb_bias", cb.mean_pct_bias.abs() <= 6.0, format!("{}", cb.mean_pct_bias));
    check("cb_cp", (cb.cp - 0.95).abs() <= 0.03, format!("{}", cb.cp));
    let csr = get(&ms, Strategy::CalibratedSelfReport);
    check("csr_bias", csr.mean_pct_bias.abs() <= 6.0, format!("{}", csr.mean_pct_bias));
    check("csr_cp", (csr.cp - 0.95).abs() <= 0.03, format!("{}", csr.cp));
    check("csr_power", csr.power >= csr_pow.0 && csr.power <= csr_pow.1, format!("{}", csr.power));
    let opt = get(&ms, Strategy::Optimal);
    check("opt_cp", opt.cp >= 0.94, format!("{}", opt.cp));

    if fails.is_empty() {
        println!("SEEDPASS {name} seed={seed} opt_cp={}", opt.cp);
    } else {
        println!("seedfail {name} seed={seed}: {}", fails.join("; "));
    }
}
