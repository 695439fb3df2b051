//! Monte Carlo benchmark harness: runs a scenario many times, feeds one
//! shared measurement stream per run to every configured filter, and
//! aggregates attitude/bias error series.
//!
//! # Determinism
//!
//! Each run draws from its own counter-seeded ChaCha stream
//! (`seed_from_u64(seed)` + `set_stream(run + 1)`), measurement events are
//! generated once per run on an integer microsecond grid, and aggregation
//! reduces the per-run results in run order. Identical scenarios therefore
//! produce bit-identical outputs regardless of thread count.
//!
//! # Error metrics
//!
//! Attitude errors are per-axis 3-2-1 Euler differences wrapped to
//! (-180, 180] deg, taken as a 3-vector norm; the geodesic angle is logged
//! alongside because Euler differences degrade near the pitch singularity.
//! Two aggregations over runs are computed for every epoch, because the
//! customary formula is printed two ways in the literature:
//!
//! * [`RmseMode::RootMeanSquare`]: `sqrt(mean(|e|^2))` — conventional RMSE,
//!   in degrees. This is what the headline CSV carries.
//! * [`RmseMode::SqrtMeanNorm`]: `sqrt(mean(|e|))` — the formula with
//!   unsquared norms, emitted alongside so either reading can be compared.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::attitude::{EulerAngles, RotationMatrix, UnitQuaternion};
use crate::error_state::NoiseConfig;
use crate::filter::{
    propagate, update, ErrorModel, FilterState, ObservationBatch, UpdateStatus,
};
use crate::sim::{
    gen_gyro, gen_vector_obs, orbit_position, step_truth, ReferenceProvider, SensorSuite,
    SimError, SpacecraftConfig, TruthState, VectorSensor,
};

const RAD_TO_DEG: f64 = 180.0 / std::f64::consts::PI;
/// rad/s to deg/h.
const RAD_S_TO_DEG_H: f64 = RAD_TO_DEG * 3600.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("scenario must request at least one run")]
    NoRuns,
    #[error("scenario must configure at least one filter")]
    NoFilters,
    #[error("initial covariance diagonal must be positive")]
    BadCovariance,
    #[error("empty error sample")]
    EmptySample,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Initial truth attitude: drawn per run or pinned.
#[derive(Debug, Clone, PartialEq)]
pub enum AttitudeInit {
    /// Independent N(0, std^2) draw per 3-2-1 Euler axis, rad.
    GaussianEuler { std: f64 },
    Fixed(UnitQuaternion),
}

/// Initial truth gyro bias: drawn per run or pinned.
#[derive(Debug, Clone, PartialEq)]
pub enum BiasInit {
    /// Independent N(0, std^2) draw per axis, rad/s.
    Gaussian { std: f64 },
    Fixed(Vector3<f64>),
}

/// Complete description of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub spacecraft: SpacecraftConfig,
    pub sensors: SensorSuite,
    pub initial_attitude: AttitudeInit,
    pub initial_bias: BiasInit,
    /// True body rate at t = 0, rad/s.
    pub initial_rate: Vector3<f64>,
    pub estimate_attitude: UnitQuaternion,
    pub estimate_bias: Vector3<f64>,
    /// Initial attitude error variance per axis, rad^2.
    pub p0_attitude_var: f64,
    /// Initial bias error variance per axis, (rad/s)^2.
    pub p0_bias_var: f64,
    pub filters: Vec<ErrorModel>,
    pub runs: usize,
    pub seed: u64,
    pub duration_s: f64,
    /// Scales the realized sensor noise draws (filter tuning stays nominal);
    /// 0 gives noiseless truth data.
    pub noise_scale: f64,
    /// Execution detail only: run Monte Carlo runs on the thread pool.
    /// Results are identical either way.
    pub parallel: bool,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), McError> {
        if self.runs == 0 {
            return Err(McError::NoRuns);
        }
        if self.filters.is_empty() {
            return Err(McError::NoFilters);
        }
        if self.p0_attitude_var <= 0.0 || self.p0_bias_var <= 0.0 {
            return Err(McError::BadCovariance);
        }
        self.spacecraft.validate()?;
        Ok(())
    }
}

/// Aggregation rule over per-run error norms at one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmseMode {
    /// `sqrt(mean(norm^2))` — conventional RMSE.
    RootMeanSquare,
    /// `sqrt(mean(norm))` — the aggregation with unsquared norms.
    SqrtMeanNorm,
}

/// Aggregates error norms from one epoch across runs.
pub fn rmse(norms: &[f64], mode: RmseMode) -> Result<f64, McError> {
    if norms.is_empty() {
        return Err(McError::EmptySample);
    }
    let n = norms.len() as f64;
    Ok(match mode {
        RmseMode::RootMeanSquare => (norms.iter().map(|x| x * x).sum::<f64>() / n).sqrt(),
        RmseMode::SqrtMeanNorm => (norms.iter().sum::<f64>() / n).sqrt(),
    })
}

/// Per-filter aggregated error series, one entry per observation epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSeries {
    pub model: ErrorModel,
    /// Conventional attitude RMSE, deg.
    pub att_rmse_deg: Vec<f64>,
    /// Conventional bias RMSE, deg/h.
    pub bias_rmse_deg_h: Vec<f64>,
    /// Attitude aggregation with unsquared norms (units sqrt(deg)).
    pub att_sqrt_mean_norm: Vec<f64>,
    /// Bias aggregation with unsquared norms (units sqrt(deg/h)).
    pub bias_sqrt_mean_norm: Vec<f64>,
    /// Conventional RMSE of the geodesic attitude error, deg.
    pub att_geodesic_rmse_deg: Vec<f64>,
    /// Number of diverged (excluded) runs at each epoch.
    pub diverged: Vec<u32>,
}

/// Result of a Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseSeries {
    /// Observation epochs, s.
    pub epochs: Vec<f64>,
    pub filters: Vec<FilterSeries>,
    /// Order-independent digest of every measurement consumed, equal across
    /// repeats of the same scenario.
    pub stream_hash: u64,
    pub runs: usize,
}

// ---------------------------------------------------------------------------
// measurement stream generation
// ---------------------------------------------------------------------------

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(hash: &mut u64, bytes: &[u8]) {
    for b in bytes {
        *hash ^= u64::from(*b);
        *hash = hash.wrapping_mul(FNV_PRIME);
    }
}

fn hash_f64s(hash: &mut u64, values: impl IntoIterator<Item = f64>) {
    for v in values {
        fnv1a(hash, &v.to_bits().to_le_bytes());
    }
}

#[derive(Debug, Clone)]
enum StreamEvent {
    Gyro(Vector3<f64>),
    Obs(usize),
}

/// One run's worth of measurements; every filter replays exactly this.
#[derive(Debug, Clone)]
struct MeasurementStream {
    /// (time in integer microseconds, event), time-ordered, gyro before
    /// observations at equal times.
    events: Vec<(u64, StreamEvent)>,
    batches: Vec<ObservationBatch>,
    /// Truth (attitude, bias) at each batch epoch.
    truth_at_batch: Vec<(UnitQuaternion, Vector3<f64>)>,
    hash: u64,
}

fn ticks(index: u64, rate_hz: f64) -> u64 {
    ((index as f64) * 1e6 / rate_hz).round() as u64
}

fn draw_initial_truth(scenario: &Scenario, rng: &mut impl Rng) -> TruthState {
    let attitude = match &scenario.initial_attitude {
        AttitudeInit::Fixed(q) => *q,
        AttitudeInit::GaussianEuler { std } => {
            let mut angle = || rng.sample::<f64, _>(StandardNormal) * std;
            let e = EulerAngles::new(angle(), angle(), angle());
            RotationMatrix::from_euler(&e).to_quaternion()
        }
    };
    let gyro_bias = match &scenario.initial_bias {
        BiasInit::Fixed(v) => *v,
        BiasInit::Gaussian { std } => Vector3::new(
            rng.sample::<f64, _>(StandardNormal) * std,
            rng.sample::<f64, _>(StandardNormal) * std,
            rng.sample::<f64, _>(StandardNormal) * std,
        ),
    };
    TruthState { t: 0.0, attitude, omega: scenario.initial_rate, gyro_bias }
}

/// Simulates truth plus sensors once; the stream is then shared by every
/// filter so the comparison is exactly fair.
fn simulate_run(scenario: &Scenario, run: usize) -> Result<MeasurementStream, McError> {
    let mut rng = ChaCha12Rng::seed_from_u64(scenario.seed);
    rng.set_stream(run as u64 + 1);

    let mut truth = draw_initial_truth(scenario, &mut rng);
    let scale = scenario.noise_scale;
    let gyro_noise_scaled = scenario.sensors.gyro_noise.scaled(scale);
    let gyro_rate = scenario.sensors.gyro_rate_hz;
    let gyro_dt = 1.0 / gyro_rate;
    let duration_ticks = (scenario.duration_s * 1e6).round() as u64;

    // Time-ordered schedule: gyro samples cover [0, duration); each sensor
    // observes from its first full period up to the duration inclusive.
    #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
    enum Kind {
        Gyro,
        Obs,
    }
    let mut schedule: Vec<(u64, Kind, usize)> = Vec::new();
    let n_gyro = (scenario.duration_s * gyro_rate).round() as u64;
    for k in 0..n_gyro {
        schedule.push((ticks(k, gyro_rate), Kind::Gyro, 0));
    }
    let mut obs_ticks: Vec<u64> = Vec::new();
    for sensor in &scenario.sensors.vector_sensors {
        let mut k = 1u64;
        loop {
            let t = ticks(k, sensor.rate_hz);
            if t > duration_ticks {
                break;
            }
            obs_ticks.push(t);
            k += 1;
        }
    }
    obs_ticks.sort_unstable();
    obs_ticks.dedup();
    for (i, t) in obs_ticks.iter().enumerate() {
        schedule.push((*t, Kind::Obs, i));
    }
    schedule.sort_unstable();

    let mut events = Vec::with_capacity(schedule.len());
    let mut batches: Vec<ObservationBatch> = Vec::new();
    let mut truth_at_batch = Vec::new();
    let mut hash = FNV_OFFSET;

    let mut now_ticks = 0u64;
    for (event_ticks, kind, _) in schedule {
        // Advance the truth to the event time in steps of at most 1 s.
        while now_ticks < event_ticks {
            let step_ticks = (event_ticks - now_ticks).min(1_000_000);
            truth = step_truth(&truth, &scenario.spacecraft, step_ticks as f64 * 1e-6);
            now_ticks += step_ticks;
        }
        match kind {
            Kind::Gyro => {
                let meas = gen_gyro(&mut truth, &gyro_noise_scaled, gyro_dt, &mut rng);
                hash_f64s(&mut hash, meas.iter().copied());
                events.push((event_ticks, StreamEvent::Gyro(meas)));
            }
            Kind::Obs => {
                let t = event_ticks as f64 * 1e-6;
                let position = orbit_position(&scenario.spacecraft, t);
                let mut observations = Vec::new();
                for sensor in &scenario.sensors.vector_sensors {
                    if !sensor_due(sensor, event_ticks, duration_ticks) {
                        continue;
                    }
                    let mut obs = gen_vector_obs(
                        &truth,
                        &sensor.provider,
                        &position,
                        &(sensor.cov * (scale * scale)),
                        &mut rng,
                    )?;
                    obs.cov = sensor.cov; // filters keep the nominal tuning
                    hash_f64s(&mut hash, obs.measured.iter().chain(obs.reference.iter()).copied());
                    observations.push(obs);
                }
                if observations.is_empty() {
                    continue;
                }
                events.push((event_ticks, StreamEvent::Obs(batches.len())));
                batches.push(ObservationBatch { epoch: t, observations });
                truth_at_batch.push((truth.attitude, truth.gyro_bias));
            }
        }
    }

    Ok(MeasurementStream { events, batches, truth_at_batch, hash })
}

fn sensor_due(sensor: &VectorSensor, event_ticks: u64, duration_ticks: u64) -> bool {
    let mut k = 1u64;
    loop {
        let t = ticks(k, sensor.rate_hz);
        if t > duration_ticks || t > event_ticks {
            return false;
        }
        if t == event_ticks {
            return true;
        }
        k += 1;
    }
}

// ---------------------------------------------------------------------------
// filter replay and error extraction
// ---------------------------------------------------------------------------

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let y = (x + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if y == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        y
    }
}

/// Per-axis wrapped Euler difference (deg, as a norm) and geodesic angle
/// (deg) between an estimate and the truth.
pub fn attitude_error_deg(estimate: &UnitQuaternion, truth: &UnitQuaternion) -> (f64, f64) {
    let e_est = estimate.to_rotation_matrix().euler_angles_lenient();
    let e_true = truth.to_rotation_matrix().euler_angles_lenient();
    let diff = Vector3::new(
        wrap_angle(e_est.yaw - e_true.yaw),
        wrap_angle(e_est.pitch - e_true.pitch),
        wrap_angle(e_est.roll - e_true.roll),
    );
    (diff.norm() * RAD_TO_DEG, estimate.angle_to(truth) * RAD_TO_DEG)
}

#[derive(Debug, Clone, Copy)]
struct ErrorSample {
    att_deg: f64,
    bias_deg_h: f64,
    geodesic_deg: f64,
}

/// Replays the stream through one filter; `None` entries mark epochs at and
/// after divergence (non-finite state).
fn replay_filter(
    scenario: &Scenario,
    model: ErrorModel,
    stream: &MeasurementStream,
) -> Vec<Option<ErrorSample>> {
    let mut state = FilterState::with_diagonal_covariance(
        scenario.estimate_attitude,
        scenario.estimate_bias,
        scenario.p0_attitude_var,
        scenario.p0_bias_var,
    );
    let noise = scenario.sensors.gyro_noise;
    let mut samples = Vec::with_capacity(stream.batches.len());
    let mut diverged = false;
    let mut now_ticks = 0u64;
    let mut rate: Option<Vector3<f64>> = None;

    for (event_ticks, event) in &stream.events {
        if !diverged {
            if *event_ticks > now_ticks {
                if let Some(gyro) = rate {
                    let dt = (*event_ticks - now_ticks) as f64 * 1e-6;
                    match propagate(&state, &gyro, dt, model, &noise) {
                        Ok(next) => state = next,
                        Err(_) => diverged = true,
                    }
                }
            }
            if !state.is_finite() {
                diverged = true;
            }
        }
        now_ticks = (*event_ticks).max(now_ticks);
        match event {
            StreamEvent::Gyro(gyro) => rate = Some(*gyro),
            StreamEvent::Obs(batch_idx) => {
                if !diverged {
                    match update(&state, &stream.batches[*batch_idx], model) {
                        Ok(outcome) => {
                            // Rejected batches keep the propagated state.
                            debug_assert!(matches!(
                                outcome.status,
                                UpdateStatus::Applied | UpdateStatus::RejectedIllConditioned
                            ));
                            state = outcome.state;
                        }
                        Err(_) => diverged = true,
                    }
                    if !state.is_finite() {
                        diverged = true;
                    }
                }
                if diverged {
                    samples.push(None);
                } else {
                    let (truth_q, truth_b) = stream.truth_at_batch[*batch_idx];
                    let (att_deg, geodesic_deg) = attitude_error_deg(&state.attitude, &truth_q);
                    let bias_deg_h = (state.gyro_bias - truth_b).norm() * RAD_S_TO_DEG_H;
                    samples.push(Some(ErrorSample { att_deg, bias_deg_h, geodesic_deg }));
                }
            }
        }
    }
    samples
}

// ---------------------------------------------------------------------------
// the harness
// ---------------------------------------------------------------------------

type RunOutput = (u64, Vec<Vec<Option<ErrorSample>>>); // (stream hash, [filter][epoch])

fn execute_run(scenario: &Scenario, run: usize) -> Result<RunOutput, McError> {
    let stream = simulate_run(scenario, run)?;
    let per_filter = scenario
        .filters
        .iter()
        .map(|model| replay_filter(scenario, *model, &stream))
        .collect();
    Ok((stream.hash, per_filter))
}

/// Runs the full Monte Carlo experiment.
///
/// Every filter in every run consumes the identical measurement stream; runs
/// are independent and may execute in parallel; aggregation happens in run
/// order so results do not depend on scheduling.
pub fn run_scenario(scenario: &Scenario) -> Result<RmseSeries, McError> {
    scenario.validate()?;

    let outputs: Vec<Result<RunOutput, McError>> = if scenario.parallel {
        (0..scenario.runs).into_par_iter().map(|run| execute_run(scenario, run)).collect()
    } else {
        (0..scenario.runs).map(|run| execute_run(scenario, run)).collect()
    };
    let outputs = outputs.into_iter().collect::<Result<Vec<_>, _>>()?;

    // Epoch grid comes from the schedule, which is identical across runs.
    let epochs: Vec<f64> = {
        let probe = simulate_run(scenario, 0)?;
        probe.batches.iter().map(|b| b.epoch).collect()
    };

    let mut combined_hash = FNV_OFFSET;
    for (h, _) in &outputs {
        fnv1a(&mut combined_hash, &h.to_le_bytes());
    }

    let mut filters = Vec::with_capacity(scenario.filters.len());
    for (f_idx, model) in scenario.filters.iter().enumerate() {
        let mut series = FilterSeries {
            model: *model,
            att_rmse_deg: Vec::with_capacity(epochs.len()),
            bias_rmse_deg_h: Vec::with_capacity(epochs.len()),
            att_sqrt_mean_norm: Vec::with_capacity(epochs.len()),
            bias_sqrt_mean_norm: Vec::with_capacity(epochs.len()),
            att_geodesic_rmse_deg: Vec::with_capacity(epochs.len()),
            diverged: Vec::with_capacity(epochs.len()),
        };
        for e_idx in 0..epochs.len() {
            let mut att = Vec::with_capacity(scenario.runs);
            let mut bias = Vec::with_capacity(scenario.runs);
            let mut geo = Vec::with_capacity(scenario.runs);
            let mut diverged = 0u32;
            for (_, per_filter) in &outputs {
                match per_filter[f_idx].get(e_idx).copied().flatten() {
                    Some(sample) => {
                        att.push(sample.att_deg);
                        bias.push(sample.bias_deg_h);
                        geo.push(sample.geodesic_deg);
                    }
                    None => diverged += 1,
                }
            }
            // Survivor-only aggregation; an epoch with zero survivors reports
            // NaN rather than silently dropping the row.
            let agg = |v: &[f64], mode| rmse(v, mode).unwrap_or(f64::NAN);
            series.att_rmse_deg.push(agg(&att, RmseMode::RootMeanSquare));
            series.bias_rmse_deg_h.push(agg(&bias, RmseMode::RootMeanSquare));
            series.att_sqrt_mean_norm.push(agg(&att, RmseMode::SqrtMeanNorm));
            series.bias_sqrt_mean_norm.push(agg(&bias, RmseMode::SqrtMeanNorm));
            series.att_geodesic_rmse_deg.push(agg(&geo, RmseMode::RootMeanSquare));
            series.diverged.push(diverged);
        }
        filters.push(series);
    }

    Ok(RmseSeries { epochs, filters, stream_hash: combined_hash, runs: scenario.runs })
}

impl RmseSeries {
    /// Writes the headline CSV (`att_rmse_deg` = conventional RMSE). Each
    /// provenance line is emitted as a leading `# ` comment.
    pub fn write_csv(&self, provenance: &[String], out: &mut impl std::io::Write) -> std::io::Result<()> {
        self.write_csv_with(provenance, out, RmseMode::RootMeanSquare)
    }

    /// Writes the sibling CSV carrying the unsquared-norm aggregation.
    pub fn write_alt_csv(
        &self,
        provenance: &[String],
        out: &mut impl std::io::Write,
    ) -> std::io::Result<()> {
        self.write_csv_with(provenance, out, RmseMode::SqrtMeanNorm)
    }

    fn write_csv_with(
        &self,
        provenance: &[String],
        out: &mut impl std::io::Write,
        mode: RmseMode,
    ) -> std::io::Result<()> {
        for line in provenance {
            writeln!(out, "# {line}")?;
        }
        match mode {
            RmseMode::RootMeanSquare => {
                writeln!(out, "t_s,filter,att_rmse_deg,bias_rmse_deg_h,diverged_count")?
            }
            RmseMode::SqrtMeanNorm => writeln!(
                out,
                "t_s,filter,att_sqrt_mean_norm,bias_sqrt_mean_norm,diverged_count"
            )?,
        }
        for (e_idx, t) in self.epochs.iter().enumerate() {
            for series in &self.filters {
                let (att, bias) = match mode {
                    RmseMode::RootMeanSquare => {
                        (series.att_rmse_deg[e_idx], series.bias_rmse_deg_h[e_idx])
                    }
                    RmseMode::SqrtMeanNorm => {
                        (series.att_sqrt_mean_norm[e_idx], series.bias_sqrt_mean_norm[e_idx])
                    }
                };
                writeln!(
                    out,
                    "{t},{},{att},{bias},{}",
                    series.model.name(),
                    series.diverged[e_idx]
                )?;
            }
        }
        Ok(())
    }

    /// Final-epoch digest of every filter, as a JSON value.
    pub fn summary_json(&self, scenario: &Scenario) -> serde_json::Value {
        let last = self.epochs.len().saturating_sub(1);
        let filters: Vec<serde_json::Value> = self
            .filters
            .iter()
            .map(|s| {
                serde_json::json!({
                    "name": s.model.name(),
                    "final_att_rmse_deg": s.att_rmse_deg.get(last),
                    "final_bias_rmse_deg_h": s.bias_rmse_deg_h.get(last),
                    "final_att_sqrt_mean_norm": s.att_sqrt_mean_norm.get(last),
                    "final_bias_sqrt_mean_norm": s.bias_sqrt_mean_norm.get(last),
                    "final_att_geodesic_rmse_deg": s.att_geodesic_rmse_deg.get(last),
                    "diverged_runs": s.diverged.get(last),
                })
            })
            .collect();
        serde_json::json!({
            "scenario": scenario.name,
            "seed": scenario.seed,
            "runs": self.runs,
            "duration_s": scenario.duration_s,
            "epochs": self.epochs.len(),
            "final_epoch_s": self.epochs.last(),
            "stream_hash": format!("{:016x}", self.stream_hash),
            "filters": filters,
        })
    }

    pub fn filter(&self, model: ErrorModel) -> Option<&FilterSeries> {
        self.filters.iter().find(|s| s.model == model)
    }
}

// ---------------------------------------------------------------------------
// benchmark presets
// ---------------------------------------------------------------------------

fn deg_per_hour(v: f64) -> f64 {
    v.to_radians() / 3600.0
}

fn benchmark_spacecraft() -> SpacecraftConfig {
    SpacecraftConfig {
        inertia: Matrix3::from_diagonal(&Vector3::new(60.0, 53.0, 70.0)),
        altitude_km: 500.0,
        inclination: 60f64.to_radians(),
        raan: 120f64.to_radians(),
        arg_perigee: 0.0,
        true_anomaly0: 0.0,
        // 2015-06-01 12:00 UTC.
        epoch_j2000_days: 5630.5,
        gravity_gradient: true,
    }
}

fn benchmark_sensors(noise: NoiseConfig) -> SensorSuite {
    SensorSuite {
        gyro_rate_hz: 10.0,
        gyro_noise: noise,
        vector_sensors: vec![
            VectorSensor {
                rate_hz: 1.0,
                cov: Matrix3::identity() * 0.0175f64.powi(2),
                provider: ReferenceProvider::Sun { epoch_j2000_days: 5630.5 },
            },
            VectorSensor {
                rate_hz: 1.0,
                cov: Matrix3::identity() * 0.0873f64.powi(2),
                provider: ReferenceProvider::TiltedDipole {
                    tilt: 11.5f64.to_radians(),
                    initial_longitude: 0.0,
                    rotating: true,
                },
            },
        ],
    }
}

/// Benchmark scenario A: large random initialization errors.
/// 150 deg/axis attitude std, 20 deg/h bias std, matched initial covariance,
/// 100 runs of 60 minutes.
pub fn scenario_a() -> Scenario {
    Scenario {
        name: "scenario-a".into(),
        spacecraft: benchmark_spacecraft(),
        sensors: benchmark_sensors(NoiseConfig::new(10f64.sqrt() * 1e-7, 10f64.sqrt() * 1e-10)),
        initial_attitude: AttitudeInit::GaussianEuler { std: 150f64.to_radians() },
        initial_bias: BiasInit::Gaussian { std: deg_per_hour(20.0) },
        initial_rate: Vector3::new(0.002, -0.003, 0.004),
        estimate_attitude: UnitQuaternion::identity(),
        estimate_bias: Vector3::zeros(),
        p0_attitude_var: 150f64.to_radians().powi(2),
        p0_bias_var: deg_per_hour(20.0).powi(2),
        filters: ErrorModel::NAMED.to_vec(),
        runs: 100,
        seed: 20150601,
        duration_s: 3600.0,
        noise_scale: 1.0,
        parallel: true,
    }
}

/// Benchmark scenario B: severe fixed initial condition. True attitude 180
/// deg away from the estimate, bias (100, 10, 10) deg/h, but a small initial
/// covariance of (10 deg)^2 / (5 deg/h)^2; 100 runs of 80 minutes.
pub fn scenario_b() -> Scenario {
    Scenario {
        name: "scenario-b".into(),
        spacecraft: benchmark_spacecraft(),
        sensors: benchmark_sensors(NoiseConfig::new(10f64.sqrt() * 1e-5, 10f64.sqrt() * 1e-8)),
        initial_attitude: AttitudeInit::Fixed(UnitQuaternion::from_components(1.0, 0.0, 0.0, 0.0)),
        initial_bias: BiasInit::Fixed(Vector3::new(
            deg_per_hour(100.0),
            deg_per_hour(10.0),
            deg_per_hour(10.0),
        )),
        initial_rate: Vector3::new(0.002, -0.003, 0.004),
        estimate_attitude: UnitQuaternion::identity(),
        estimate_bias: Vector3::zeros(),
        p0_attitude_var: 10f64.to_radians().powi(2),
        p0_bias_var: deg_per_hour(5.0).powi(2),
        filters: ErrorModel::NAMED.to_vec(),
        runs: 100,
        seed: 20150601,
        duration_s: 4800.0,
        noise_scale: 1.0,
        parallel: true,
    }
}

/// Looks up a compiled-in benchmark scenario by CLI preset name.
pub fn preset(name: &str) -> Option<Scenario> {
    match name.trim().to_ascii_lowercase().as_str() {
        "paper-a" | "scenario-a" | "a" => Some(scenario_a()),
        "paper-b" | "scenario-b" | "b" => Some(scenario_b()),
        _ => None,
    }
}

/// Preset names accepted by [`preset`], for error messages.
pub const PRESET_NAMES: [&str; 2] = ["paper-a", "paper-b"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[4.0], RmseMode::SqrtMeanNorm).unwrap(), 2.0);
        let two = rmse(&[1.0, 3.0], RmseMode::SqrtMeanNorm).unwrap();
        assert!((two - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(rmse(&[0.0, 0.0, 0.0], RmseMode::SqrtMeanNorm).unwrap(), 0.0);
        assert!(matches!(rmse(&[], RmseMode::SqrtMeanNorm), Err(McError::EmptySample)));

        // Conventional RMSE of {3, 4} is sqrt(12.5).
        let conv = rmse(&[3.0, 4.0], RmseMode::RootMeanSquare).unwrap();
        assert!((conv - 12.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wrap_angle_covers_boundary() {
        assert_eq!(wrap_angle(std::f64::consts::PI), std::f64::consts::PI);
        assert_eq!(wrap_angle(-std::f64::consts::PI), std::f64::consts::PI);
        assert!((wrap_angle(3.0 * std::f64::consts::PI / 2.0) + std::f64::consts::PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn preset_a_fields() {
        let s = scenario_a();
        assert_eq!(s.duration_s, 3600.0);
        assert_eq!(s.runs, 100);
        assert_eq!(s.filters.len(), 6);
        assert!((s.sensors.gyro_noise.sigma_v - 10f64.sqrt() * 1e-7).abs() < 1e-20);
        assert!((s.sensors.gyro_noise.sigma_u - 10f64.sqrt() * 1e-10).abs() < 1e-23);
        assert_eq!(s.sensors.vector_sensors[0].cov, Matrix3::identity() * 0.0175f64.powi(2));
        assert_eq!(s.sensors.vector_sensors[1].cov, Matrix3::identity() * 0.0873f64.powi(2));
        assert!((s.p0_attitude_var - 150f64.to_radians().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn preset_b_fields() {
        let s = scenario_b();
        assert_eq!(s.duration_s, 4800.0);
        assert!((s.p0_attitude_var - 10f64.to_radians().powi(2)).abs() < 1e-18);
        assert!((s.p0_bias_var - deg_per_hour(5.0).powi(2)).abs() < 1e-24);
        // The fixed true attitude is a half-turn away from the identity
        // estimate.
        match &s.initial_attitude {
            AttitudeInit::Fixed(q) => {
                let angle = q.angle_to(&UnitQuaternion::identity());
                assert!((angle - std::f64::consts::PI).abs() < 1e-12);
            }
            _ => panic!("expected fixed attitude"),
        }
        match &s.initial_bias {
            BiasInit::Fixed(b) => {
                assert!((b.x - deg_per_hour(100.0)).abs() < 1e-18);
            }
            _ => panic!("expected fixed bias"),
        }
    }

    #[test]
    fn preset_lookup() {
        assert!(preset("paper-a").is_some());
        assert!(preset("PAPER-B").is_some());
        assert!(preset("paper-c").is_none());
    }

    fn tiny_scenario() -> Scenario {
        let mut s = scenario_a();
        s.runs = 2;
        s.duration_s = 20.0;
        s.initial_attitude = AttitudeInit::GaussianEuler { std: 5f64.to_radians() };
        s
    }

    #[test]
    fn scenario_validation() {
        let mut s = tiny_scenario();
        s.runs = 0;
        assert!(matches!(run_scenario(&s), Err(McError::NoRuns)));
        let mut s = tiny_scenario();
        s.filters.clear();
        assert!(matches!(run_scenario(&s), Err(McError::NoFilters)));
        let mut s = tiny_scenario();
        s.p0_attitude_var = 0.0;
        assert!(matches!(run_scenario(&s), Err(McError::BadCovariance)));
    }

    #[test]
    fn zero_noise_perfect_init_gives_zero_rmse() {
        let mut s = tiny_scenario();
        s.runs = 1;
        s.duration_s = 30.0;
        s.noise_scale = 0.0;
        // Spherical inertia keeps the true rate constant, so the zero-order
        // hold on gyro samples is exact and only round-off remains.
        s.spacecraft.inertia = Matrix3::identity() * 55.0;
        let truth_q = UnitQuaternion::from_rotation_vector(&Vector3::new(0.2, -0.1, 0.4));
        let truth_b = Vector3::new(1e-5, -2e-5, 3e-5);
        s.initial_attitude = AttitudeInit::Fixed(truth_q);
        s.initial_bias = BiasInit::Fixed(truth_b);
        s.estimate_attitude = truth_q;
        s.estimate_bias = truth_b;
        let out = run_scenario(&s).unwrap();
        for f in &out.filters {
            let final_att = *f.att_rmse_deg.last().unwrap();
            assert!(final_att < 1e-6, "{}: {final_att}", f.model);
            assert_eq!(*f.diverged.last().unwrap(), 0);
        }
    }

    #[test]
    fn identical_seeds_are_bit_identical_across_parallelism() {
        let mut s = tiny_scenario();
        let out1 = run_scenario(&s).unwrap();
        s.parallel = false;
        let out2 = run_scenario(&s).unwrap();
        assert_eq!(out1, out2);
        assert_eq!(out1.stream_hash, out2.stream_hash);

        let mut csv1 = Vec::new();
        let mut csv2 = Vec::new();
        out1.write_csv(&["determinism check".into()], &mut csv1).unwrap();
        out2.write_csv(&["determinism check".into()], &mut csv2).unwrap();
        assert_eq!(csv1, csv2);
    }

    #[test]
    fn different_seeds_change_the_stream() {
        let s1 = tiny_scenario();
        let mut s2 = tiny_scenario();
        s2.seed += 1;
        let h1 = run_scenario(&s1).unwrap().stream_hash;
        let h2 = run_scenario(&s2).unwrap().stream_hash;
        assert_ne!(h1, h2);
    }

    #[test]
    #[ignore]
    fn debug_stuck_run_anatomy() {
        use crate::filter::{propagate, update};
        let s = scenario_a();
        let stream = simulate_run(&s, 14).unwrap();
        let model = ErrorModel::IMEKF;
        let mut state = FilterState::with_diagonal_covariance(
            s.estimate_attitude,
            s.estimate_bias,
            s.p0_attitude_var,
            s.p0_bias_var,
        );
        let noise = s.sensors.gyro_noise;
        let mut rate: Option<Vector3<f64>> = None;
        let mut now = 0u64;
        let mut epoch = 0usize;
        for (t, ev) in &stream.events {
            if *t > now {
                if let Some(g) = rate {
                    state = propagate(&state, &g, (*t - now) as f64 * 1e-6, model, &noise).unwrap();
                }
                now = *t;
            }
            match ev {
                StreamEvent::Gyro(g) => rate = Some(*g),
                StreamEvent::Obs(i) => {
                    let out = update(&state, &stream.batches[*i], model).unwrap();
                    state = out.state;
                    let (tq, tb) = stream.truth_at_batch[*i];
                    if epoch < 20 || epoch % 300 == 0 {
                        let p = state.covariance;
                        println!(
                            "t {:6.0}: geo {:8.3} deg | corr {:9.5} | patt {:9.2e} | pbias {:9.2e} | bias err {:8.1} deg/h",
                            *t as f64 * 1e-6,
                            state.attitude.angle_to(&tq).to_degrees(),
                            out.correction.norm(),
                            (p[(0, 0)] + p[(1, 1)] + p[(2, 2)]) / 3.0,
                            (p[(3, 3)] + p[(4, 4)] + p[(5, 5)]) / 3.0,
                            (state.gyro_bias - tb).norm() * RAD_S_TO_DEG_H,
                        );
                    }
                    epoch += 1;
                }
            }
        }
    }

    #[test]
    #[ignore]
    fn debug_stall_sweep() {
        for (name, base) in [("A", scenario_a()), ("B", scenario_b())] {
            for gyro_hz in [10.0, 0.1] {
                for (rate_name, rate) in [
                    ("slow", Vector3::new(0.002, -0.003, 0.004)),
                    ("mid", Vector3::new(0.008, -0.006, 0.01)),
                    ("fast", Vector3::new(0.02, -0.015, 0.01)),
                ] {
                    let mut s = base.clone();
                    s.sensors.gyro_rate_hz = gyro_hz;
                    s.initial_rate = rate;
                    let mut stalls = vec![0u32; s.filters.len()];
                    let results: Vec<Vec<Vec<Option<ErrorSample>>>> = (0..s.runs)
                        .into_par_iter()
                        .map(|run| {
                            let stream = simulate_run(&s, run).unwrap();
                            s.filters
                                .iter()
                                .map(|m| replay_filter(&s, *m, &stream))
                                .collect()
                        })
                        .collect();
                    for per_filter in &results {
                        for (i, samples) in per_filter.iter().enumerate() {
                            let bad = samples
                                .last()
                                .unwrap()
                                .map(|e| e.geodesic_deg > 10.0)
                                .unwrap_or(true);
                            if bad {
                                stalls[i] += 1;
                            }
                        }
                    }
                    let names: Vec<String> = s
                        .filters
                        .iter()
                        .zip(&stalls)
                        .map(|(m, c)| format!("{}:{}", m.name(), c))
                        .collect();
                    println!("{name} gyro {gyro_hz:4} {rate_name:4} stalls(>10deg): {}", names.join(" "));
                }
            }
        }
    }

    #[test]
    #[ignore]
    fn debug_outlier_runs() {
        for (name, s) in [("B", scenario_b()), ("A", scenario_a())] {
            println!("== scenario {name} ==");
            for run in 0..30 {
                let stream = simulate_run(&s, run).unwrap();
                for model in [ErrorModel::IMEKF, ErrorModel::IGEKF] {
                    let samples = replay_filter(&s, model, &stream);
                    let probe = |frac: f64| -> String {
                        let idx = ((samples.len() - 1) as f64 * frac) as usize;
                        match samples[idx] {
                            Some(e) => format!("{:8.2}/{:9.2}", e.geodesic_deg, e.bias_deg_h),
                            None => "   DIVERGED".into(),
                        }
                    };
                    let last = samples.last().unwrap();
                    if last.map(|e| e.geodesic_deg > 5.0 || e.bias_deg_h > 50.0).unwrap_or(true) {
                        println!(
                            "run {run:3} {:8}: 25% {} | 50% {} | 75% {} | 100% {}",
                            model.name(),
                            probe(0.25),
                            probe(0.5),
                            probe(0.75),
                            probe(1.0)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn csv_layout() {
        let mut s = tiny_scenario();
        s.runs = 1;
        s.filters = vec![ErrorModel::IMEKF];
        let out = run_scenario(&s).unwrap();
        let mut buf = Vec::new();
        out.write_csv(&["line one".into()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# line one");
        assert_eq!(lines.next().unwrap(), "t_s,filter,att_rmse_deg,bias_rmse_deg_h,diverged_count");
        let first = lines.next().unwrap();
        assert!(first.starts_with("1,IMEKF,"), "row: {first}");
        // 20 s at 1 Hz from both sensors on a shared grid: 20 epochs.
        assert_eq!(out.epochs.len(), 20);
        let json = out.summary_json(&s);
        assert_eq!(json["runs"], 1);
        assert!(json["filters"][0]["final_att_rmse_deg"].as_f64().is_some());
    }
}
