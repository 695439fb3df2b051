//! Ground-truth generator: a tumbling rigid spacecraft in a circular orbit
//! under gravity-gradient torque, plus gyro and vector-observation synthesis.
//!
//! Everything internal is SI (rad, s) except orbital positions, which are
//! carried in kilometres alongside `MU_EARTH_KM3_S2`; the gravity-gradient
//! torque converts to metres where it matters dimensionally.

use nalgebra::{Matrix3, Vector3, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::attitude::UnitQuaternion;
use crate::error_state::NoiseConfig;
use crate::filter::VectorObservation;

/// Earth gravitational parameter, km^3/s^2.
pub const MU_EARTH_KM3_S2: f64 = 398_600.4418;
/// Mean equatorial Earth radius, km.
pub const EARTH_RADIUS_KM: f64 = 6378.137;
/// Earth rotation rate, rad/s.
pub const EARTH_RATE_RAD_S: f64 = 7.292_115e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("reference provider returned a (near-)zero vector")]
    ZeroReferenceVector,
    #[error("inertia matrix must be symmetric positive definite")]
    BadInertia,
}

/// Orbit, mass properties and epoch of the simulated spacecraft.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacecraftConfig {
    /// Inertia matrix, kg m^2 (symmetric positive definite).
    pub inertia: Matrix3<f64>,
    /// Circular orbit altitude above [`EARTH_RADIUS_KM`], km.
    pub altitude_km: f64,
    /// Inclination, rad.
    pub inclination: f64,
    /// Right ascension of the ascending node, rad.
    pub raan: f64,
    /// Argument of perigee, rad.
    pub arg_perigee: f64,
    /// True anomaly at t = 0, rad.
    pub true_anomaly0: f64,
    /// Epoch as days since J2000, for the solar ephemeris.
    pub epoch_j2000_days: f64,
    /// Gravity-gradient torque switch; off gives torque-free dynamics.
    pub gravity_gradient: bool,
}

impl SpacecraftConfig {
    /// Semi-major axis, km.
    #[inline]
    pub fn semi_major_axis_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    /// Mean motion of the circular orbit, rad/s.
    pub fn mean_motion(&self) -> f64 {
        let a = self.semi_major_axis_km();
        (MU_EARTH_KM3_S2 / (a * a * a)).sqrt()
    }

    /// Orbital period, s.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.mean_motion()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let j = &self.inertia;
        let symmetric = (j - j.transpose()).norm() < 1e-9 * j.norm();
        let spd = j.clone_owned().cholesky().is_some();
        if symmetric && spd {
            Ok(())
        } else {
            Err(SimError::BadInertia)
        }
    }
}

/// Inertial position of the spacecraft on its circular orbit, km.
pub fn orbit_position(cfg: &SpacecraftConfig, t: f64) -> Vector3<f64> {
    let a = cfg.semi_major_axis_km();
    let u = cfg.arg_perigee + cfg.true_anomaly0 + cfg.mean_motion() * t;
    let in_plane = Vector3::new(a * u.cos(), a * u.sin(), 0.0);
    rot_z(cfg.raan) * (rot_x(cfg.inclination) * in_plane)
}

// Active elementary rotations used to orient the orbit plane.
fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// True spacecraft state: attitude (reference to body), body rate and the
/// current gyro bias, time-tagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthState {
    pub t: f64,
    pub attitude: UnitQuaternion,
    /// Body angular velocity, rad/s.
    pub omega: Vector3<f64>,
    /// Gyro bias, rad/s. Constant through dynamics; walked by [`gen_gyro`].
    pub gyro_bias: Vector3<f64>,
}

/// Gravity-gradient torque in the body frame, N m.
pub fn gravity_gradient_torque(
    cfg: &SpacecraftConfig,
    attitude: &UnitQuaternion,
    t: f64,
) -> Vector3<f64> {
    // 3 mu (r x J r) / |r|^5 with r in body frame, metres.
    let r_inertial_m = orbit_position(cfg, t) * 1e3;
    let r_body = attitude.to_rotation_matrix().apply(&r_inertial_m);
    let mu_si = MU_EARTH_KM3_S2 * 1e9;
    let norm = r_body.norm();
    3.0 * mu_si * r_body.cross(&(cfg.inertia * r_body)) / norm.powi(5)
}

fn omega_dot(cfg: &SpacecraftConfig, q: &Vector4<f64>, omega: &Vector3<f64>, t: f64) -> Vector3<f64> {
    let torque = if cfg.gravity_gradient {
        let attitude = UnitQuaternion::from_components(q.x, q.y, q.z, q.w);
        gravity_gradient_torque(cfg, &attitude, t)
    } else {
        Vector3::zeros()
    };
    let j = &cfg.inertia;
    j.try_inverse().expect("validated inertia") * (torque - omega.cross(&(j * omega)))
}

// q_dot = 1/2 Xi(q) w, with q as a raw 4-vector (x, y, z, w).
fn quat_dot(q: &Vector4<f64>, omega: &Vector3<f64>) -> Vector4<f64> {
    let v = Vector3::new(q.x, q.y, q.z);
    let top = (q.w * omega + v.cross(&omega)) * 0.5;
    Vector4::new(top.x, top.y, top.z, -0.5 * v.dot(&omega))
}

/// Advances the coupled attitude/rate dynamics by one RK4 step of `dt <= 1 s`.
/// The gyro bias is untouched; its random walk lives on the measurement path.
pub fn step_truth(state: &TruthState, cfg: &SpacecraftConfig, dt: f64) -> TruthState {
    debug_assert!(dt > 0.0 && dt <= 1.0 + 1e-9, "truth step must be in (0, 1] s");
    let q0 = {
        let a = state.attitude.as_array();
        Vector4::new(a[0], a[1], a[2], a[3])
    };
    let w0 = state.omega;
    let t0 = state.t;

    let f = |q: &Vector4<f64>, w: &Vector3<f64>, t: f64| (quat_dot(q, w), omega_dot(cfg, q, w, t));

    let (k1q, k1w) = f(&q0, &w0, t0);
    let (k2q, k2w) = f(&(q0 + k1q * (dt / 2.0)), &(w0 + k1w * (dt / 2.0)), t0 + dt / 2.0);
    let (k3q, k3w) = f(&(q0 + k2q * (dt / 2.0)), &(w0 + k2w * (dt / 2.0)), t0 + dt / 2.0);
    let (k4q, k4w) = f(&(q0 + k3q * dt), &(w0 + k3w * dt), t0 + dt);

    let q = q0 + (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (dt / 6.0);
    let omega = w0 + (k1w + k2w * 2.0 + k3w * 2.0 + k4w) * (dt / 6.0);

    TruthState {
        t: t0 + dt,
        attitude: UnitQuaternion::from_components(q.x, q.y, q.z, q.w),
        omega,
        gyro_bias: state.gyro_bias,
    }
}

/// Synthesizes one gyro sample over a `dt` interval and applies the bias
/// random walk to the truth state:
/// `w_meas = w + beta + n_v`, `n_v ~ N(0, sigma_v^2/dt I)`;
/// `beta += n_u`, `n_u ~ N(0, sigma_u^2 dt I)`.
pub fn gen_gyro(
    state: &mut TruthState,
    noise: &NoiseConfig,
    dt: f64,
    rng: &mut impl Rng,
) -> Vector3<f64> {
    debug_assert!(dt > 0.0);
    let white_std = noise.sigma_v / dt.sqrt();
    let walk_std = noise.sigma_u * dt.sqrt();
    let draw = |rng: &mut dyn rand::RngCore, std: f64| {
        Vector3::new(
            rng.sample::<f64, _>(StandardNormal) * std,
            rng.sample::<f64, _>(StandardNormal) * std,
            rng.sample::<f64, _>(StandardNormal) * std,
        )
    };
    let measurement = state.omega + state.gyro_bias + draw(rng, white_std);
    state.gyro_bias += draw(rng, walk_std);
    measurement
}

/// Reference-direction source for a vector sensor, evaluated in the inertial
/// frame.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceProvider {
    /// A constant inertial unit direction.
    Fixed { direction: Vector3<f64> },
    /// Low-precision solar ephemeris from the configured epoch.
    Sun { epoch_j2000_days: f64 },
    /// Tilted-dipole geomagnetic direction; evaluated at the spacecraft
    /// position, optionally co-rotating with Earth.
    TiltedDipole { tilt: f64, initial_longitude: f64, rotating: bool },
}

impl ReferenceProvider {
    /// Unit reference direction at time `t` (s past scenario start) for a
    /// spacecraft at `position_km` (inertial).
    pub fn direction(&self, t: f64, position_km: &Vector3<f64>) -> Result<Vector3<f64>, SimError> {
        let v = match self {
            ReferenceProvider::Fixed { direction } => *direction,
            ReferenceProvider::Sun { epoch_j2000_days } => {
                sun_direction(epoch_j2000_days + t / 86_400.0)
            }
            ReferenceProvider::TiltedDipole { tilt, initial_longitude, rotating } => {
                let lon =
                    initial_longitude + if *rotating { EARTH_RATE_RAD_S * t } else { 0.0 };
                dipole_direction(*tilt, lon, position_km)
            }
        };
        let n = v.norm();
        if n < 1e-12 {
            return Err(SimError::ZeroReferenceVector);
        }
        Ok(v / n)
    }
}

/// Unit vector from Earth to Sun in inertial axes, from the standard
/// low-precision ephemeris (good to ~0.01 deg, far beyond what the noise
/// floor of any scenario here resolves).
pub fn sun_direction(days_since_j2000: f64) -> Vector3<f64> {
    let d = days_since_j2000;
    let mean_longitude = (280.460 + 0.985_647_4 * d).to_radians();
    let mean_anomaly = (357.528 + 0.985_600_3 * d).to_radians();
    let ecliptic_longitude =
        mean_longitude + (1.915f64.to_radians()) * mean_anomaly.sin()
            + (0.020f64.to_radians()) * (2.0 * mean_anomaly).sin();
    let obliquity = 23.439f64.to_radians();
    Vector3::new(
        ecliptic_longitude.cos(),
        obliquity.cos() * ecliptic_longitude.sin(),
        obliquity.sin() * ecliptic_longitude.sin(),
    )
}

/// Direction of a tilted-dipole field at `position_km`:
/// `3 (m . r_hat) r_hat - m`, unnormalized (callers normalize).
pub fn dipole_direction(tilt: f64, longitude: f64, position_km: &Vector3<f64>) -> Vector3<f64> {
    let moment = -Vector3::new(
        tilt.sin() * longitude.cos(),
        tilt.sin() * longitude.sin(),
        tilt.cos(),
    );
    let r_hat = position_km / position_km.norm();
    3.0 * moment.dot(&r_hat) * r_hat - moment
}

/// Synthesizes one vector observation: `b = A(q) r + v`, `v ~ N(0, cov)`.
/// The returned observation carries `cov` for the filter to use as R.
pub fn gen_vector_obs(
    state: &TruthState,
    provider: &ReferenceProvider,
    position_km: &Vector3<f64>,
    cov: &Matrix3<f64>,
    rng: &mut impl Rng,
) -> Result<VectorObservation, SimError> {
    let reference = provider.direction(state.t, position_km)?;
    let noise = sample_gaussian(cov, rng);
    Ok(VectorObservation {
        measured: state.attitude.to_rotation_matrix().apply(&reference) + noise,
        reference,
        cov: *cov,
    })
}

/// Draws from N(0, cov). Cholesky when possible; a zero matrix draws zero,
/// and semidefinite covariances fall back to an eigenvalue square root.
pub fn sample_gaussian(cov: &Matrix3<f64>, rng: &mut impl Rng) -> Vector3<f64> {
    if cov.norm() == 0.0 {
        return Vector3::zeros();
    }
    let z = Vector3::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    );
    if let Some(chol) = cov.clone_owned().cholesky() {
        chol.l() * z
    } else {
        let eig = cov.clone_owned().symmetric_eigen();
        let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        eig.eigenvectors * Matrix3::from_diagonal(&sqrt_vals) * z
    }
}

/// One vector sensor: sampling rate, isotropic-or-not noise covariance and
/// the reference it observes.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSensor {
    pub rate_hz: f64,
    pub cov: Matrix3<f64>,
    pub provider: ReferenceProvider,
}

/// Gyro plus the vector sensors flown in a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSuite {
    pub gyro_rate_hz: f64,
    pub gyro_noise: NoiseConfig,
    pub vector_sensors: Vec<VectorSensor>,
}
