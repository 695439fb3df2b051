//! Compares benchmark outcomes for gyro sampling at 10 Hz vs 0.1 Hz.

use mekf::mc::{run_scenario, scenario_a, scenario_b};

fn main() {
    for (name, base) in [("A", scenario_a()), ("B", scenario_b())] {
        for rate in [10.0, 0.1] {
            let mut s = base.clone();
            s.sensors.gyro_rate_hz = rate;
            let t0 = std::time::Instant::now();
            let out = run_scenario(&s).unwrap();
            println!("== scenario {name}, gyro {rate} Hz ({:.1?})", t0.elapsed());
            for f in &out.filters {
                println!(
                    "  {:10} conv {:8.3} | eq35 {:7.3} | geo {:8.3} | bias-conv {:9.2}",
                    f.model.name(),
                    f.att_rmse_deg.last().unwrap(),
                    f.att_sqrt_mean_norm.last().unwrap(),
                    f.att_geodesic_rmse_deg.last().unwrap(),
                    f.bias_rmse_deg_h.last().unwrap()
                );
            }
        }
    }
}
