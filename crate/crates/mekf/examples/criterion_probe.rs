//! Evaluates the scenario-A comparison quantities under both RMSE readings
//! for candidate initial tumble rates.

use mekf::filter::ErrorModel;
use mekf::mc::{run_scenario, scenario_a};
use nalgebra::Vector3;

fn main() {
    let rates = [
        ("slow ", Vector3::new(0.002, -0.003, 0.004)),
        ("mid  ", Vector3::new(0.008, -0.006, 0.01)),
        ("fast ", Vector3::new(0.02, -0.015, 0.01)),
    ];
    for (label, rate) in rates {
        let mut s = scenario_a();
        s.initial_rate = rate;
        let t0 = std::time::Instant::now();
        let out = run_scenario(&s).unwrap();
        println!("== omega0 {label} {:?} ({:.1?})", rate.as_slice(), t0.elapsed());
        let mut conv = std::collections::HashMap::new();
        let mut sqm = std::collections::HashMap::new();
        for f in &out.filters {
            let c = *f.att_rmse_deg.last().unwrap();
            let q = *f.att_sqrt_mean_norm.last().unwrap();
            let g = *f.att_geodesic_rmse_deg.last().unwrap();
            conv.insert(f.model.name(), c);
            sqm.insert(f.model.name(), q);
            println!(
                "  {:10} conv {:8.3} | eq35 {:7.3} | geo {:8.3} | bias-conv {:9.2}",
                f.model.name(),
                c,
                q,
                g,
                f.bias_rmse_deg_h.last().unwrap()
            );
        }
        for (metric, map) in [("conv", &conv), ("eq35", &sqm)] {
            let inv = ["IMEKF", "IGEKF", "MEKF-ref", "QRIEKF"];
            let worst_inv = inv.iter().map(|n| map[n]).fold(0.0f64, f64::max);
            let best_inv = inv.iter().map(|n| map[n]).fold(f64::INFINITY, f64::min);
            let trad_min = map["MEKF"].min(map["GEKF"]);
            println!(
                "  [{metric}] worst-inv/trad-min = {:.3} (need <= 0.5) | inv spread = {:.3} (need <= 2)",
                worst_inv / trad_min,
                worst_inv / best_inv
            );
        }
        let _ = ErrorModel::NAMED;
    }
}
