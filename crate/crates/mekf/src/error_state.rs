//! Continuous-time error-state models for attitude estimation from vector
//! observations.
//!
//! The 6-dimensional error state stacks a 3-vector attitude error on top of a
//! 3-vector gyro-bias error. Four definitions of that error are supported,
//! differing in the frame of the attitude error and in whether attitude and
//! bias are treated jointly as an SE(3) element:
//!
//! | definition  | attitude error            | bias error                  |
//! |-------------|---------------------------|-----------------------------|
//! | `Body`      | `A(q) A(q_hat)^-1` (body) | `beta - beta_hat`           |
//! | `Reference` | `A(q_hat)^-1 A(q)` (ref)  | `beta - beta_hat`           |
//! | `RightSe3`  | `A(q) A(q_hat)^-1`        | slot of `chi chi_hat^-1`    |
//! | `LeftSe3`   | `A(q_hat)^-1 A(q)`        | slot of `chi_hat^-1 chi`    |
//!
//! Each definition has a process model `(F, G)` built here, and one of two
//! measurement matrices: the classical one evaluated at the attitude
//! prediction, or a trajectory-independent one that replaces the predicted
//! vector with the measurement itself (body-frame errors) or transforms the
//! innovation (reference-frame errors). The trajectory-independent forms are
//! what makes the linear filter tolerate arbitrarily large initial errors.
//!
//! Process noise is the two-parameter gyro model: angle random walk
//! `sigma_v` (rad/s^1/2) driving the rate measurement and rate random walk
//! `sigma_u` (rad/s^3/2) driving the bias, stacked as `w = (eta_v, eta_u)`
//! with PSD `Q = diag(sigma_v^2 I, sigma_u^2 I)`.

use nalgebra::{DMatrix, Matrix3, Matrix6, Vector3};
use thiserror::Error;

use crate::attitude::{skew, RotationMatrix};

/// 3x6 measurement matrix block: one vector observation against the
/// 6-dimensional error state.
pub type ObservationMatrix = nalgebra::SMatrix<f64, 3, 6>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("group elements have mismatched dimensions: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("group elements must be square matrices")]
    NotSquare,
}

/// Gyro noise intensities as continuous-time PSD square roots, SI units.
///
/// The source scenarios quote the bare numbers `sqrt(10)e-7` and
/// `sqrt(10)e-10` without units; they are interpreted here as rad/s^1/2 and
/// rad/s^3/2 respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Angle random walk (white rate noise), rad/s^1/2.
    pub sigma_v: f64,
    /// Rate random walk (bias drift), rad/s^3/2.
    pub sigma_u: f64,
}

impl NoiseConfig {
    pub fn new(sigma_v: f64, sigma_u: f64) -> Self {
        assert!(sigma_v >= 0.0 && sigma_u >= 0.0, "noise intensities must be non-negative");
        Self { sigma_v, sigma_u }
    }

    /// Process-noise PSD `Q = diag(sigma_v^2 I3, sigma_u^2 I3)` for the
    /// stacked noise `w = (eta_v, eta_u)`.
    pub fn psd(&self) -> Matrix6<f64> {
        let mut q = Matrix6::zeros();
        q.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(Matrix3::identity() * self.sigma_v * self.sigma_v));
        q.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&(Matrix3::identity() * self.sigma_u * self.sigma_u));
        q
    }

    /// Scales both intensities; used to run nominal filter tuning against
    /// sensors whose realized noise is scaled (e.g. a zero-noise truth run).
    pub fn scaled(&self, factor: f64) -> Self {
        Self { sigma_v: self.sigma_v * factor, sigma_u: self.sigma_u * factor }
    }
}

/// Continuous-time error dynamics `dx_dot = F dx + G w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpaceMatrices {
    pub f: Matrix6<f64>,
    pub g: Matrix6<f64>,
}

/// A measurement triple ready for the Kalman gain: matrix, innovation and
/// innovation covariance expressed in a common frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedMeasurement {
    pub h: ObservationMatrix,
    pub innovation: Vector3<f64>,
    pub cov: Matrix3<f64>,
}

fn assemble(
    m11: Matrix3<f64>,
    m12: Matrix3<f64>,
    m21: Matrix3<f64>,
    m22: Matrix3<f64>,
) -> Matrix6<f64> {
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&m11);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&m12);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&m21);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&m22);
    out
}

fn h_block(attitude_part: Matrix3<f64>) -> ObservationMatrix {
    let mut h = ObservationMatrix::zeros();
    h.fixed_view_mut::<3, 3>(0, 0).copy_from(&attitude_part);
    h
}

/// Departure of a dynamics from the group-affine identity
/// `f(x1 x2) = f(x1) x2 + x1 f(x2) - x1 f(I) x2`,
/// returned as the Frobenius norm of the defect.
///
/// Group elements are given as square matrices (3x3 for rotations, 4x4 for
/// the homogeneous attitude+bias state); `dynamics(x, input)` returns the
/// matrix-valued time derivative at `x`.
pub fn group_affine_residual<I, F>(
    dynamics: F,
    x1: &DMatrix<f64>,
    x2: &DMatrix<f64>,
    input: &I,
) -> Result<f64, ModelError>
where
    F: Fn(&DMatrix<f64>, &I) -> DMatrix<f64>,
{
    if !x1.is_square() || !x2.is_square() {
        return Err(ModelError::NotSquare);
    }
    if x1.nrows() != x2.nrows() {
        return Err(ModelError::DimensionMismatch { left: x1.nrows(), right: x2.nrows() });
    }
    let eye = DMatrix::identity(x1.nrows(), x1.ncols());
    let defect = dynamics(&(x1 * x2), input)
        - dynamics(x1, input) * x2
        - x1 * dynamics(x2, input)
        + x1 * dynamics(&eye, input) * x2;
    Ok(defect.norm())
}

/// Process model for the body-frame error definition:
/// `F = [[-skew(w_hat), -I], [0, 0]]`, `G = [[-I, 0], [0, I]]`.
pub fn body_process(omega_hat: &Vector3<f64>) -> StateSpaceMatrices {
    StateSpaceMatrices {
        f: assemble(-skew(omega_hat), -Matrix3::identity(), Matrix3::zeros(), Matrix3::zeros()),
        g: assemble(-Matrix3::identity(), Matrix3::zeros(), Matrix3::zeros(), Matrix3::identity()),
    }
}

/// Process model for the reference-frame error definition:
/// `F = [[0, -A_hat^T], [0, 0]]`, `G = [[-A_hat^T, 0], [0, I]]`.
///
/// The attitude-error block row is zero: with this error definition the
/// attitude part of the process model is trajectory-independent.
pub fn reference_process(a_hat: &RotationMatrix) -> StateSpaceMatrices {
    let at = *a_hat.transpose().matrix();
    StateSpaceMatrices {
        f: assemble(Matrix3::zeros(), -at, Matrix3::zeros(), Matrix3::zeros()),
        g: assemble(-at, Matrix3::zeros(), Matrix3::zeros(), Matrix3::identity()),
    }
}

/// Process model for the right SE(3) error (attitude and bias as one group
/// state, error `chi chi_hat^-1`):
/// `F = [[-skew(w_hat), -I], [skew(b_hat) skew(w_hat), skew(b_hat)]]`,
/// `G = [[-I, 0], [skew(b_hat), I]]`.
pub fn right_se3_process(omega_hat: &Vector3<f64>, beta_hat: &Vector3<f64>) -> StateSpaceMatrices {
    let w = skew(omega_hat);
    let b = skew(beta_hat);
    StateSpaceMatrices {
        f: assemble(-w, -Matrix3::identity(), b * w, b),
        g: assemble(-Matrix3::identity(), Matrix3::zeros(), b, Matrix3::identity()),
    }
}

/// Process model for the left SE(3) error (`chi_hat^-1 chi`):
/// `F = [[0, -I], [0, skew(A_hat^T w_hat)]]`,
/// `G = [[-A_hat^T, 0], [0, A_hat^T]]`.
pub fn left_se3_process(a_hat: &RotationMatrix, omega_hat: &Vector3<f64>) -> StateSpaceMatrices {
    let at = *a_hat.transpose().matrix();
    StateSpaceMatrices {
        f: assemble(Matrix3::zeros(), -Matrix3::identity(), Matrix3::zeros(), skew(&(at * omega_hat))),
        g: assemble(-at, Matrix3::zeros(), Matrix3::zeros(), at),
    }
}

/// Classical body-frame measurement matrix `[skew(A_pred r), 0]`, evaluated
/// at the attitude prediction.
pub fn body_h_trajectory(a_pred: &RotationMatrix, r: &Vector3<f64>) -> ObservationMatrix {
    h_block(skew(&a_pred.apply(r)))
}

/// Trajectory-independent body-frame measurement matrix `[skew(b_meas), 0]`:
/// the predicted vector is replaced by the measured one, so no state estimate
/// enters.
pub fn body_h_invariant(b_measured: &Vector3<f64>) -> ObservationMatrix {
    h_block(skew(b_measured))
}

/// Classical reference-frame measurement matrix `[A_pred skew(r), 0]`.
///
/// Algebraically equal to `[skew(A_pred r) A_pred, 0]` through the identity
/// `skew(A v) = A skew(v) A^T`.
pub fn ref_h_trajectory(a_pred: &RotationMatrix, r: &Vector3<f64>) -> ObservationMatrix {
    h_block(a_pred.matrix() * skew(r))
}

/// Trajectory-independent reference-frame measurement: applying `A_pred^-1`
/// to matrix, innovation and noise covariance alike leaves the filter result
/// unchanged but strips the state estimate out of the measurement matrix:
/// `H = [skew(r), 0]`, innovation `A_pred^T b_meas - r`, covariance
/// `A_pred^T R A_pred`.
pub fn ref_h_invariant(
    a_pred: &RotationMatrix,
    b_measured: &Vector3<f64>,
    r: &Vector3<f64>,
    cov: &Matrix3<f64>,
) -> TransformedMeasurement {
    let at = a_pred.transpose();
    TransformedMeasurement {
        h: h_block(skew(r)),
        // Evaluated as A^T (b - A r): algebraically A^T b - r, but an exactly
        // zero raw innovation stays exactly zero after the transformation.
        innovation: at.apply(&(b_measured - a_pred.apply(r))),
        cov: at.matrix() * cov * a_pred.matrix(),
    }
}
