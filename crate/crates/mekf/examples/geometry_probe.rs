//! Probe observability geometry: sun/field angular separation along the
//! orbit for candidate dipole orientations, and stall sensitivity.

use mekf::mc::{run_scenario, scenario_a};
use mekf::sim::{orbit_position, ReferenceProvider};
use nalgebra::Vector3;

fn main() {
    let s = scenario_a();
    let sun = ReferenceProvider::Sun { epoch_j2000_days: 5630.5 };
    for lon_deg in [0.0, 60.0, 120.0, 180.0, 240.0, 300.0] {
        let dipole = ReferenceProvider::TiltedDipole {
            tilt: 11.5f64.to_radians(),
            initial_longitude: (lon_deg as f64).to_radians(),
            rotating: true,
        };
        let mut min  = f64::INFINITY;
        let mut sum = 0.0;
        let mut n = 0;
        for k in 0..=360 {
            let t = k as f64 * 10.0;
            let pos = orbit_position(&s.spacecraft, t);
            let a = sun.direction(t, &pos).unwrap();
            let b = dipole.direction(t, &pos).unwrap();
            let ang = a.dot(&b).clamp(-1.0, 1.0).acos().to_degrees();
            min = min.min(ang);
            sum += ang;
            n += 1;
        }
        println!("dipole lon {lon_deg:5}: min {min:6.1} deg, mean {:6.1} deg", sum / n as f64);
    }

    // Stall sensitivity: tumble rate and dipole longitude.
    for (label, rate, lon) in [
        ("base", Vector3::new(0.002, -0.003, 0.004), 0.0),
        ("fast tumble", Vector3::new(0.008, -0.006, 0.01), 0.0),
        ("lon 180", Vector3::new(0.002, -0.003, 0.004), 180.0),
        ("fast+lon180", Vector3::new(0.008, -0.006, 0.01), 180.0),
    ] {
        let mut s = scenario_a();
        s.runs = 40;
        s.initial_rate = rate;
        if let ReferenceProvider::TiltedDipole { initial_longitude, .. } =
            &mut s.sensors.vector_sensors[1].provider
        {
            *initial_longitude = (lon as f64).to_radians();
        }
        let t0 = std::time::Instant::now();
        let out = run_scenario(&s).unwrap();
        print!("{label:14} ({:4.1?}): ", t0.elapsed());
        for f in &out.filters {
            print!(
                "{} {:7.2}/{:8.2}  ",
                f.model.name(),
                f.att_geodesic_rmse_deg.last().unwrap(),
                f.bias_rmse_deg_h.last().unwrap()
            );
        }
        println!();
    }
}
