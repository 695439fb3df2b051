//! Quick look at benchmark behavior: reduced run counts, final RMSE table.

use mekf::mc::{preset, run_scenario};

fn main() {
    let start = std::time::Instant::now();
    for name in ["paper-a", "paper-b"] {
        let mut s = preset(name).unwrap();
        let runs: usize =
            std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(10);
        s.runs = runs;
        if let Some(d) = std::env::args().nth(2).and_then(|v| v.parse().ok()) {
            s.duration_s = d;
        }
        let t0 = std::time::Instant::now();
        let out = run_scenario(&s).unwrap();
        println!(
            "== {name}: {} runs x {} s in {:.1?}",
            s.runs,
            s.duration_s,
            t0.elapsed()
        );
        for f in &out.filters {
            println!(
                "  {:14} final att {:10.4} deg | bias {:9.4} deg/h | geo {:10.4} deg | diverged {}",
                f.model.name(),
                f.att_rmse_deg.last().unwrap(),
                f.bias_rmse_deg_h.last().unwrap(),
                f.att_geodesic_rmse_deg.last().unwrap(),
                f.diverged.last().unwrap()
            );
        }
    }
    println!("total {:.1?}", start.elapsed());
}
