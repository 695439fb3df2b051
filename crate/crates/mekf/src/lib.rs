//! Multiplicative extended Kalman filtering for attitude estimation from
//! vector observations.
//!
//! The crate provides one filter loop parameterized by an error-state model.
//! Four error definitions (body frame, reference frame, and the right/left
//! errors of a joint attitude+bias SE(3) state) combine with two measurement
//! models (the classical prediction-dependent matrix and its
//! trajectory-independent replacement) to reproduce the common filters of
//! the field — MEKF, IMEKF, GEKF, IGEKF, MEKF-ref and QRIEKF — as
//! configurations of the same engine.
//!
//! The trajectory-independent measurement models are the interesting part:
//! attitude kinematics on SO(3) is group affine, so the attitude error
//! dynamics never depends on the estimate, and once the measurement matrix
//! is freed of the attitude prediction the linear Kalman recursion remains
//! trustworthy under arbitrarily large initialization errors.
//!
//! Module map:
//!
//! * [`attitude`] — quaternions, rotation matrices, exponential maps, SE(3).
//! * [`error_state`] — F/G/H builders for all four error definitions, the
//!   innovation transformation, and a group-affine property checker.
//! * [`filter`] — propagation, stacked updates and retractions.
//! * [`sim`] — orbiting rigid-body truth generator and sensor synthesis.
//! * [`mc`] — Monte Carlo benchmark harness with RMSE aggregation.
//! * [`align`] — integrated vector observations for INS initial alignment
//!   plus a synthetic swaying-vehicle scenario.

pub mod attitude;
pub mod error_state;
pub mod mc;
pub mod sim;
pub mod filter;

pub use attitude::{skew, EulerAngles, RotationMatrix, SE3Element, UnitQuaternion};
pub use error_state::NoiseConfig;
pub use filter::{ErrorModel, FilterState, ObservationBatch, VectorObservation};
