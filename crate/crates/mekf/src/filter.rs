//! The multiplicative EKF loop: closed-form quaternion propagation,
//! covariance propagation, stacked vector-observation updates and the
//! error-definition-specific retraction onto the quaternion manifold.
//!
//! The loop itself is identical for every configuration; an [`ErrorModel`]
//! selects which process model, measurement matrix and retraction are used.
//! Propagation runs at the gyro rate, updates fire at observation epochs;
//! when both coincide the caller propagates first, then updates.

use nalgebra::{DMatrix, DVector, Matrix6, Vector3, Vector6};
use thiserror::Error;

use crate::attitude::{skew, UnitQuaternion};
use crate::error_state::{
    body_h_invariant, body_h_trajectory, body_process, left_se3_process, ref_h_invariant,
    ref_h_trajectory, reference_process, right_se3_process, NoiseConfig, StateSpaceMatrices,
};

/// Largest admissible condition number of the innovation covariance; beyond
/// this the observation batch is rejected instead of inverted.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("gyro measurement contains non-finite components")]
    NonFiniteGyro,
    #[error("observation batch is empty")]
    EmptyBatch,
    #[error("observation {index} has a zero reference vector")]
    ZeroReferenceVector { index: usize },
    #[error("propagation step must be positive (got {dt})")]
    NonPositiveStep { dt: f64 },
}

/// Frame of the 3-vector attitude error and the accompanying bias error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorDefinition {
    /// Body-frame attitude error `A(q) A(q_hat)^-1`, additive bias error.
    Body,
    /// Reference-frame attitude error `A(q_hat)^-1 A(q)`, additive bias error.
    Reference,
    /// Right group error of the joint SE(3) state, `chi chi_hat^-1`.
    RightSe3,
    /// Left group error of the joint SE(3) state, `chi_hat^-1 chi`.
    LeftSe3,
}

/// Whether the measurement matrix is evaluated at the attitude prediction or
/// built in its trajectory-independent form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementMode {
    TrajectoryDependent,
    Invariant,
}

/// A filter configuration: error definition plus measurement mode.
///
/// The six named configurations from the attitude-estimation literature map
/// onto this grid as constants below; the remaining two combinations are
/// constructible for equivalence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ErrorModel {
    pub definition: ErrorDefinition,
    pub measurement: MeasurementMode,
}

impl ErrorModel {
    /// Traditional MEKF: body-frame error, prediction-dependent measurement.
    pub const MEKF: Self = Self::new(ErrorDefinition::Body, MeasurementMode::TrajectoryDependent);
    /// MEKF with the measurement matrix built from the measured vector.
    pub const IMEKF: Self = Self::new(ErrorDefinition::Body, MeasurementMode::Invariant);
    /// Geometric EKF: right SE(3) error, prediction-dependent measurement.
    pub const GEKF: Self =
        Self::new(ErrorDefinition::RightSe3, MeasurementMode::TrajectoryDependent);
    /// GEKF with the trajectory-independent measurement matrix.
    pub const IGEKF: Self = Self::new(ErrorDefinition::RightSe3, MeasurementMode::Invariant);
    /// Reference-frame error with the transformed (invariant) innovation.
    pub const MEKF_REF: Self = Self::new(ErrorDefinition::Reference, MeasurementMode::Invariant);
    /// Quaternion right-invariant EKF: left SE(3) error, transformed innovation.
    pub const QRIEKF: Self = Self::new(ErrorDefinition::LeftSe3, MeasurementMode::Invariant);

    /// The named configurations, in customary benchmark order.
    pub const NAMED: [Self; 6] =
        [Self::MEKF, Self::IMEKF, Self::GEKF, Self::IGEKF, Self::MEKF_REF, Self::QRIEKF];

    pub const fn new(definition: ErrorDefinition, measurement: MeasurementMode) -> Self {
        Self { definition, measurement }
    }

    pub fn name(&self) -> &'static str {
        use ErrorDefinition::*;
        use MeasurementMode::*;
        match (self.definition, self.measurement) {
            (Body, TrajectoryDependent) => "MEKF",
            (Body, Invariant) => "IMEKF",
            (RightSe3, TrajectoryDependent) => "GEKF",
            (RightSe3, Invariant) => "IGEKF",
            (Reference, Invariant) => "MEKF-ref",
            (LeftSe3, Invariant) => "QRIEKF",
            (Reference, TrajectoryDependent) => "MEKF-ref-traj",
            (LeftSe3, TrajectoryDependent) => "QRIEKF-traj",
        }
    }

    /// Parses any of the eight configuration names, case-insensitively.
    pub fn parse(name: &str) -> Option<Self> {
        use ErrorDefinition::*;
        use MeasurementMode::*;
        let n = name.trim().to_ascii_uppercase().replace('_', "-");
        Some(match n.as_str() {
            "MEKF" => Self::MEKF,
            "IMEKF" => Self::IMEKF,
            "GEKF" => Self::GEKF,
            "IGEKF" => Self::IGEKF,
            "MEKF-REF" => Self::MEKF_REF,
            "QRIEKF" => Self::QRIEKF,
            "MEKF-REF-TRAJ" => Self::new(Reference, TrajectoryDependent),
            "QRIEKF-TRAJ" => Self::new(LeftSe3, TrajectoryDependent),
            _ => return None,
        })
    }
}

impl std::fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ErrorModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s).ok_or_else(|| format!("unknown filter configuration `{s}`"))
    }
}

/// One vector observation: a direction measured in the body frame together
/// with its reference-frame counterpart and noise covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorObservation {
    /// Measured body-frame vector (noise included).
    pub measured: Vector3<f64>,
    /// Known reference-frame direction.
    pub reference: Vector3<f64>,
    /// Measurement noise covariance (symmetric PSD).
    pub cov: nalgebra::Matrix3<f64>,
}

/// All vector observations sharing one epoch; processed as one stacked update.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBatch {
    pub epoch: f64,
    pub observations: Vec<VectorObservation>,
}

/// Filter state: global attitude quaternion, gyro-bias estimate and the 6x6
/// error covariance (attitude block rad^2, bias block rad^2/s^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub attitude: UnitQuaternion,
    pub gyro_bias: Vector3<f64>,
    pub covariance: Matrix6<f64>,
}

impl FilterState {
    pub fn new(attitude: UnitQuaternion, gyro_bias: Vector3<f64>, covariance: Matrix6<f64>) -> Self {
        Self { attitude, gyro_bias, covariance: symmetrized(&covariance) }
    }

    /// Diagonal initial covariance: one attitude variance (rad^2) and one
    /// bias variance (rad^2/s^2) repeated per axis.
    pub fn with_diagonal_covariance(
        attitude: UnitQuaternion,
        gyro_bias: Vector3<f64>,
        attitude_var: f64,
        bias_var: f64,
    ) -> Self {
        let mut p = Matrix6::zeros();
        for i in 0..3 {
            p[(i, i)] = attitude_var;
            p[(i + 3, i + 3)] = bias_var;
        }
        Self::new(attitude, gyro_bias, p)
    }

    /// True while every component is finite; divergence detector.
    pub fn is_finite(&self) -> bool {
        self.attitude.as_array().iter().all(|x| x.is_finite())
            && self.gyro_bias.iter().all(|x| x.is_finite())
            && self.covariance.iter().all(|x| x.is_finite())
    }
}

/// Outcome of an observation update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOutcome {
    pub state: FilterState,
    /// The local error-state correction that was retracted (zero if rejected).
    pub correction: Vector6<f64>,
    pub status: UpdateStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateStatus {
    Applied,
    /// Innovation covariance singular or condition number beyond
    /// [`MAX_INNOVATION_CONDITION`]; the batch was skipped.
    RejectedIllConditioned,
}

fn symmetrized(p: &Matrix6<f64>) -> Matrix6<f64> {
    (p + p.transpose()) * 0.5
}

/// Process model of the configured error definition, evaluated at the current
/// estimate with `omega_hat = gyro - bias`.
fn process_matrices(
    model: ErrorModel,
    state: &FilterState,
    omega_hat: &Vector3<f64>,
) -> StateSpaceMatrices {
    match model.definition {
        ErrorDefinition::Body => body_process(omega_hat),
        ErrorDefinition::Reference => reference_process(&state.attitude.to_rotation_matrix()),
        ErrorDefinition::RightSe3 => right_se3_process(omega_hat, &state.gyro_bias),
        ErrorDefinition::LeftSe3 => {
            left_se3_process(&state.attitude.to_rotation_matrix(), omega_hat)
        }
    }
}

/// Propagates the state over `dt` seconds with one gyro measurement.
///
/// The quaternion advances by the closed-form axis-angle step (exact for a
/// constant rate); the covariance uses the transition matrix truncated at
/// second order, `Phi = I + F dt + F^2 dt^2 / 2`, and the first-order
/// discrete noise `Q_d = G Q G^T dt`, both evaluated at the pre-step
/// estimate.
pub fn propagate(
    state: &FilterState,
    gyro: &Vector3<f64>,
    dt: f64,
    model: ErrorModel,
    noise: &NoiseConfig,
) -> Result<FilterState, FilterError> {
    if !gyro.iter().all(|x| x.is_finite()) {
        return Err(FilterError::NonFiniteGyro);
    }
    if dt <= 0.0 {
        return Err(FilterError::NonPositiveStep { dt });
    }
    let omega_hat = gyro - state.gyro_bias;
    let StateSpaceMatrices { f, g } = process_matrices(model, state, &omega_hat);

    let attitude = UnitQuaternion::from_rotation_vector(&(omega_hat * dt)) * state.attitude;

    let phi = Matrix6::identity() + f * dt + f * f * (dt * dt / 2.0);
    let q_d = g * noise.psd() * g.transpose() * dt;
    let covariance = symmetrized(&(phi * state.covariance * phi.transpose() + q_d));

    Ok(FilterState { attitude, gyro_bias: state.gyro_bias, covariance })
}

/// Applies one stacked vector-observation update.
///
/// Builds the measurement matrix, innovation and noise covariance per
/// observation according to the model (transforming the innovation for the
/// invariant reference-frame modes), stacks them, computes the gain
/// `K = P H^T (H P H^T + R)^-1`, the posterior `P = (I - K H) P` and retracts
/// the correction. An ill-conditioned innovation covariance rejects the batch
/// and returns the prior state with a diagnostic status.
pub fn update(
    state: &FilterState,
    batch: &ObservationBatch,
    model: ErrorModel,
) -> Result<UpdateOutcome, FilterError> {
    let k = batch.observations.len();
    if k == 0 {
        return Err(FilterError::EmptyBatch);
    }
    for (index, obs) in batch.observations.iter().enumerate() {
        if obs.reference.norm() == 0.0 {
            return Err(FilterError::ZeroReferenceVector { index });
        }
    }

    let a_pred = state.attitude.to_rotation_matrix();
    let mut h = DMatrix::<f64>::zeros(3 * k, 6);
    let mut innovation = DVector::<f64>::zeros(3 * k);
    let mut r_stack = DMatrix::<f64>::zeros(3 * k, 3 * k);

    for (i, obs) in batch.observations.iter().enumerate() {
        let row = 3 * i;
        let (h_i, n_i, r_i) = match model.definition {
            ErrorDefinition::Body | ErrorDefinition::RightSe3 => {
                let h_i = match model.measurement {
                    MeasurementMode::TrajectoryDependent => {
                        body_h_trajectory(&a_pred, &obs.reference)
                    }
                    MeasurementMode::Invariant => body_h_invariant(&obs.measured),
                };
                (h_i, obs.measured - a_pred.apply(&obs.reference), obs.cov)
            }
            ErrorDefinition::Reference | ErrorDefinition::LeftSe3 => match model.measurement {
                MeasurementMode::TrajectoryDependent => (
                    ref_h_trajectory(&a_pred, &obs.reference),
                    obs.measured - a_pred.apply(&obs.reference),
                    obs.cov,
                ),
                MeasurementMode::Invariant => {
                    let t = ref_h_invariant(&a_pred, &obs.measured, &obs.reference, &obs.cov);
                    (t.h, t.innovation, t.cov)
                }
            },
        };
        h.view_mut((row, 0), (3, 6)).copy_from(&h_i);
        innovation.view_mut((row, 0), (3, 1)).copy_from(&n_i);
        r_stack.view_mut((row, row), (3, 3)).copy_from(&r_i);
    }

    let p = DMatrix::from_iterator(6, 6, state.covariance.iter().copied());
    let s = &h * &p * h.transpose() + &r_stack;

    // Reject rather than invert a (near-)singular innovation covariance.
    let eigs = s.clone().symmetric_eigenvalues();
    let max_eig = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max_eig.is_finite() && min_eig > 0.0 && max_eig / min_eig < MAX_INNOVATION_CONDITION) {
        return Ok(UpdateOutcome {
            state: *state,
            correction: Vector6::zeros(),
            status: UpdateStatus::RejectedIllConditioned,
        });
    }
    let s_inv = s.cholesky().expect("eigenvalue screen guarantees SPD").inverse();

    let gain = &p * h.transpose() * s_inv;
    let correction_dyn = &gain * &innovation;
    let correction = Vector6::from_iterator(correction_dyn.iter().copied());

    let p_plus_dyn = (DMatrix::identity(6, 6) - &gain * &h) * &p;
    let p_plus = symmetrized(&Matrix6::from_iterator(p_plus_dyn.iter().copied()));

    let mut updated = retract(state, &correction, model);
    updated.covariance = p_plus;

    Ok(UpdateOutcome { state: updated, correction, status: UpdateStatus::Applied })
}

/// Folds a local error-state estimate back onto the global state.
///
/// * `Body`:     `q+ = exp(da) * q`,  `b+ = b + db`
/// * `Reference`:`q+ = q * exp(da)`,  `b+ = b + db`
/// * `RightSe3`: `q+ = exp(da) * q`,  `b+ = b + db + skew(b) da`
/// * `LeftSe3`:  `q+ = q * exp(da)`,  `b+ = b + A(q) db`
///
/// The covariance passes through unchanged; no retraction-consistency
/// correction of the covariance is applied.
pub fn retract(state: &FilterState, delta: &Vector6<f64>, model: ErrorModel) -> FilterState {
    let d_alpha = delta.fixed_view::<3, 1>(0, 0).clone_owned();
    let d_beta = delta.fixed_view::<3, 1>(3, 0).clone_owned();
    let exp = UnitQuaternion::from_rotation_vector(&d_alpha);
    let (attitude, gyro_bias) = match model.definition {
        ErrorDefinition::Body => (exp * state.attitude, state.gyro_bias + d_beta),
        ErrorDefinition::Reference => (state.attitude * exp, state.gyro_bias + d_beta),
        ErrorDefinition::RightSe3 => (
            exp * state.attitude,
            state.gyro_bias + d_beta + skew(&state.gyro_bias) * d_alpha,
        ),
        ErrorDefinition::LeftSe3 => (
            state.attitude * exp,
            state.gyro_bias + state.attitude.to_rotation_matrix().apply(&d_beta),
        ),
    };
    FilterState { attitude, gyro_bias, covariance: state.covariance }
}
