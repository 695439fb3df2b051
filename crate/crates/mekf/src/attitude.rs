//! Rotation and rigid-transform mathematics: quaternions, rotation matrices,
//! the skew operator, exponential maps and SE(3) composition.
//!
//! # Conventions
//!
//! These conventions are load-bearing for every formula in the crate; several
//! published treatments differ from them, so they are spelled out once here:
//!
//! * Quaternions are stored **vector first, scalar last**: the identity is
//!   `(0, 0, 0, 1)`.
//! * The attitude matrix `A(q)` maps **reference-frame vectors into the body
//!   frame**, `b = A(q) r`. Many texts use the transpose (body-to-reference).
//! * The quaternion product `a * b` composes in matrix order,
//!   `A(a * b) = A(a) A(b)`.
//! * The exponential map [`UnitQuaternion::from_rotation_vector`] is tied to
//!   the first-order attitude error convention
//!   `A(exp(delta)) = I - skew(delta) + O(|delta|^2)`.
//! * Attitude kinematics under a body rate `w` is `dA/dt = -skew(w) A`.
//!
//! Quaternion-returning operations renormalize their result and canonicalize
//! the sign so that the scalar part is non-negative. The two antipodal
//! quaternions encode the same rotation, so this is unobservable through
//! `A(q)`, but it makes results reproducible bit-for-bit.

use nalgebra::{Matrix3, Matrix4, Vector3};
use thiserror::Error;

/// Below this rotation angle (rad) the exponential map switches to its
/// series limit; sin(x/2)/x loses accuracy in double precision around here.
pub const SMALL_ANGLE: f64 = 1e-8;

/// Errors from attitude constructors and conversions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttitudeError {
    /// The supplied matrix is not proper orthogonal within tolerance.
    #[error("matrix is not a rotation: |A^T A - I| = {orthogonality:.3e}, det = {det:.6}")]
    NotARotation { orthogonality: f64, det: f64 },
    /// Euler extraction hit the pitch = +/-90 deg singularity.
    #[error("gimbal lock: pitch within 1e-6 rad of +/-90 deg (pitch = {pitch_rad} rad)")]
    GimbalLock { pitch_rad: f64 },
    /// Input contained NaN or infinity.
    #[error("non-finite input")]
    NonFinite,
}

/// Cross-product matrix: `skew(v) * w == v.cross(&w)` for all `w`.
#[inline]
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Unit quaternion in vector-first/scalar-last layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    vector: Vector3<f64>,
    scalar: f64,
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl UnitQuaternion {
    /// Identity rotation `(0, 0, 0, 1)`.
    #[inline]
    pub fn identity() -> Self {
        Self { vector: Vector3::zeros(), scalar: 1.0 }
    }

    /// Builds from raw components, normalizing and canonicalizing the sign.
    pub fn from_components(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { vector: Vector3::new(x, y, z), scalar: w }.renormalized()
    }

    /// Vector (imaginary) part.
    #[inline]
    pub fn vector(&self) -> Vector3<f64> {
        self.vector
    }

    /// Scalar (real) part. Non-negative by canonicalization.
    #[inline]
    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    /// Components as `[x, y, z, w]`.
    #[inline]
    pub fn as_array(&self) -> [f64; 4] {
        [self.vector.x, self.vector.y, self.vector.z, self.scalar]
    }

    /// Euclidean norm of the 4-vector (1 up to round-off).
    #[inline]
    pub fn norm(&self) -> f64 {
        (self.vector.norm_squared() + self.scalar * self.scalar).sqrt()
    }

    /// Inverse rotation.
    #[inline]
    pub fn conjugate(&self) -> Self {
        // Negating the vector part keeps the scalar sign canonical.
        Self { vector: -self.vector, scalar: self.scalar }
    }

    fn renormalized(self) -> Self {
        let n2 = self.vector.norm_squared() + self.scalar * self.scalar;
        assert!(n2.is_finite() && n2 > 0.0, "quaternion norm must be positive and finite");
        let sign = if self.scalar < 0.0 { -1.0 } else { 1.0 };
        // Rescaling an already-unit quaternion would only inject 1-ulp noise;
        // leave it untouched so exact identities stay exact.
        let s = if (n2 - 1.0).abs() <= 4.0 * f64::EPSILON { sign } else { sign / n2.sqrt() };
        Self { vector: self.vector * s, scalar: self.scalar * s }
    }

    /// Exponential map from a rotation vector (axis times angle, rad).
    ///
    /// `exp(v) = (v/|v| * sin(|v|/2), cos(|v|/2))`, with the series limit
    /// `(v/2, 1)` below [`SMALL_ANGLE`]. The sign convention satisfies
    /// `A(exp(v)) = I - skew(v) + O(|v|^2)`.
    pub fn from_rotation_vector(v: &Vector3<f64>) -> Self {
        let angle = v.norm();
        assert!(angle.is_finite(), "rotation vector must be finite");
        if angle < SMALL_ANGLE {
            return Self { vector: v * 0.5, scalar: 1.0 }.renormalized();
        }
        let half = 0.5 * angle;
        Self { vector: v * (half.sin() / angle), scalar: half.cos() }.renormalized()
    }

    /// Logarithm: the rotation vector `v` with `exp(v) == self` and
    /// `|v| <= pi` (the canonical scalar sign guarantees the short arc).
    pub fn rotation_vector(&self) -> Vector3<f64> {
        let sin_half = self.vector.norm();
        if sin_half < SMALL_ANGLE {
            return self.vector * 2.0;
        }
        let angle = 2.0 * sin_half.atan2(self.scalar);
        self.vector * (angle / sin_half)
    }

    /// Geodesic distance to another rotation, in radians (0..=pi).
    pub fn angle_to(&self, other: &Self) -> f64 {
        (*self * other.conjugate()).rotation_vector().norm()
    }

    /// Attitude matrix mapping reference-frame vectors into the body frame.
    pub fn to_rotation_matrix(&self) -> RotationMatrix {
        let r = self.vector;
        let w = self.scalar;
        let m = Matrix3::identity() * (w * w - r.norm_squared()) + 2.0 * r * r.transpose()
            - 2.0 * w * skew(&r);
        RotationMatrix(m)
    }
}

/// Quaternion product in matrix order: `A(a * b) = A(a) A(b)`.
impl std::ops::Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, rhs: UnitQuaternion) -> UnitQuaternion {
        UnitQuaternion {
            vector: self.scalar * rhs.vector + rhs.scalar * self.vector
                - self.vector.cross(&rhs.vector),
            scalar: self.scalar * rhs.scalar - self.vector.dot(&rhs.vector),
        }
        .renormalized()
    }
}

/// Proper orthogonal 3x3 matrix mapping reference-frame vectors into the
/// body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl Default for RotationMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl RotationMatrix {
    pub const ORTHOGONALITY_TOL: f64 = 1e-10;

    #[inline]
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates orthogonality (`|A^T A - I| < 1e-10`) and `det = +1`.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, AttitudeError> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(AttitudeError::NonFinite);
        }
        let ortho = (m.transpose() * m - Matrix3::identity()).norm();
        let det = m.determinant();
        if ortho > Self::ORTHOGONALITY_TOL || (det - 1.0).abs() > Self::ORTHOGONALITY_TOL {
            return Err(AttitudeError::NotARotation { orthogonality: ortho, det });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix already known to be a rotation (e.g. a product of
    /// rotations). Debug builds still assert the invariant.
    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        debug_assert!((m.transpose() * m - Matrix3::identity()).norm() < 1e-8);
        Self(m)
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Applies the rotation: reference-frame vector in, body-frame vector out.
    #[inline]
    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Builds the 3-2-1 (yaw about z, then pitch about y, then roll about x)
    /// reference-to-body matrix.
    pub fn from_euler(e: &EulerAngles) -> Self {
        let (sy, cy) = e.yaw.sin_cos();
        let (sp, cp) = e.pitch.sin_cos();
        let (sr, cr) = e.roll.sin_cos();
        // Rx(roll) * Ry(pitch) * Rz(yaw), each elementary matrix passive.
        Self(Matrix3::new(
            cp * cy,
            cp * sy,
            -sp,
            sr * sp * cy - cr * sy,
            sr * sp * sy + cr * cy,
            sr * cp,
            cr * sp * cy + sr * sy,
            cr * sp * sy - sr * cy,
            cr * cp,
        ))
    }

    /// Extracts 3-2-1 Euler angles, failing within 1e-6 rad of the
    /// pitch = +/-90 deg singularity.
    pub fn euler_angles(&self) -> Result<EulerAngles, AttitudeError> {
        let pitch = (-self.0[(0, 2)]).clamp(-1.0, 1.0).asin();
        if (std::f64::consts::FRAC_PI_2 - pitch.abs()) < 1e-6 {
            return Err(AttitudeError::GimbalLock { pitch_rad: pitch });
        }
        Ok(self.euler_angles_lenient())
    }

    /// Euler extraction without the gimbal-lock guard: at the singularity the
    /// roll angle is folded into yaw. Intended for error metrics where an
    /// occasional ill-conditioned sample is preferable to an abort.
    pub fn euler_angles_lenient(&self) -> EulerAngles {
        let m = &self.0;
        let pitch = (-m[(0, 2)]).clamp(-1.0, 1.0).asin();
        if (std::f64::consts::FRAC_PI_2 - pitch.abs()) < 1e-6 {
            EulerAngles { yaw: (-m[(1, 0)]).atan2(m[(1, 1)]), pitch, roll: 0.0 }
        } else {
            EulerAngles {
                yaw: m[(0, 1)].atan2(m[(0, 0)]),
                pitch,
                roll: m[(1, 2)].atan2(m[(2, 2)]),
            }
        }
    }

    /// Quaternion with `q.to_rotation_matrix() == self` (Shepperd's method).
    pub fn to_quaternion(&self) -> UnitQuaternion {
        let m = &self.0;
        let tr = m.trace();
        // Pick the largest of (w, x, y, z) as pivot for numerical safety.
        let (xx, yy, zz) = (m[(0, 0)], m[(1, 1)], m[(2, 2)]);
        let candidates = [tr, xx, yy, zz];
        let pivot = candidates
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        // For A = (w^2 - |r|^2) I + 2 r r^T - 2 w [r x]:
        //   A[(i,j)] + A[(j,i)] = 4 r_i r_j            (i != j)
        //   A[(1,2)] - A[(2,1)] = 4 w r_x              (and cyclic)
        let q = match pivot {
            0 => {
                let w = 0.5 * (1.0 + tr).sqrt();
                let s = 0.25 / w;
                [
                    (m[(1, 2)] - m[(2, 1)]) * s,
                    (m[(2, 0)] - m[(0, 2)]) * s,
                    (m[(0, 1)] - m[(1, 0)]) * s,
                    w,
                ]
            }
            1 => {
                let x = 0.5 * (1.0 + xx - yy - zz).sqrt();
                let s = 0.25 / x;
                [
                    x,
                    (m[(0, 1)] + m[(1, 0)]) * s,
                    (m[(0, 2)] + m[(2, 0)]) * s,
                    (m[(1, 2)] - m[(2, 1)]) * s,
                ]
            }
            2 => {
                let y = 0.5 * (1.0 - xx + yy - zz).sqrt();
                let s = 0.25 / y;
                [
                    (m[(0, 1)] + m[(1, 0)]) * s,
                    y,
                    (m[(1, 2)] + m[(2, 1)]) * s,
                    (m[(2, 0)] - m[(0, 2)]) * s,
                ]
            }
            _ => {
                let z = 0.5 * (1.0 - xx - yy + zz).sqrt();
                let s = 0.25 / z;
                [
                    (m[(0, 2)] + m[(2, 0)]) * s,
                    (m[(1, 2)] + m[(2, 1)]) * s,
                    z,
                    (m[(0, 1)] - m[(1, 0)]) * s,
                ]
            }
        };
        UnitQuaternion::from_components(q[0], q[1], q[2], q[3])
    }
}

impl std::ops::Mul for RotationMatrix {
    type Output = RotationMatrix;

    #[inline]
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vector3<f64>> for RotationMatrix {
    type Output = Vector3<f64>;

    #[inline]
    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

/// 3-2-1 Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerAngles {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll }
    }

    #[inline]
    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.yaw, self.pitch, self.roll)
    }
}

/// Element of SE(3) used as the compact (attitude, gyro-bias) group state:
/// rotation block plus a 3-vector in the translation slot, with the
/// homogeneous bottom row `(0, 0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SE3Element {
    pub rotation: RotationMatrix,
    pub bias: Vector3<f64>,
}

impl Default for SE3Element {
    fn default() -> Self {
        Self::identity()
    }
}

impl SE3Element {
    #[inline]
    pub fn identity() -> Self {
        Self { rotation: RotationMatrix::identity(), bias: Vector3::zeros() }
    }

    pub fn new(rotation: RotationMatrix, bias: Vector3<f64>) -> Self {
        Self { rotation, bias }
    }

    /// The 4x4 homogeneous matrix form.
    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.bias);
        m
    }

    /// Group inverse: `(R, v)^-1 = (R^T, -R^T v)`.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, bias: -(rt * self.bias) }
    }
}

/// Group composition with 4x4 homogeneous-matrix semantics:
/// rotation `a.R * b.R`, vector slot `a.R * b.v + a.v`.
impl std::ops::Mul for SE3Element {
    type Output = SE3Element;

    fn mul(self, rhs: SE3Element) -> SE3Element {
        SE3Element {
            rotation: self.rotation * rhs.rotation,
            bias: self.rotation * rhs.bias + self.bias,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_quaternion(rng: &mut impl Rng) -> UnitQuaternion {
        UnitQuaternion::from_components(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
    }

    fn random_vector(rng: &mut impl Rng, scale: f64) -> Vector3<f64> {
        Vector3::new(
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        )
    }

    /// Rodrigues formula for exp(-[v x]), independent of the quaternion path.
    fn rodrigues(v: &Vector3<f64>) -> Matrix3<f64> {
        let angle = v.norm();
        if angle < 1e-15 {
            return Matrix3::identity();
        }
        let n = skew(&(v / angle));
        Matrix3::identity() - angle.sin() * n + (1.0 - angle.cos()) * (n * n)
    }

    #[test]
    fn skew_of_zero_is_zero() {
        assert_eq!(skew(&Vector3::zeros()), Matrix3::zeros());
    }

    #[test]
    fn skew_matches_cross_product() {
        let e1 = Vector3::new(1.0, 0.0, 0.0);
        let e2 = Vector3::new(0.0, 1.0, 0.0);
        assert_eq!(skew(&e1) * e2, Vector3::new(0.0, 0.0, 1.0));
        let v = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(skew(&v) * v, Vector3::zeros());
        let m = skew(&v);
        assert_eq!(m.transpose(), -m);
    }

    #[test]
    fn identity_times_q_is_q() {
        let mut rng = StdRng::seed_from_u64(1);
        let q = random_quaternion(&mut rng);
        let p = UnitQuaternion::identity() * q;
        assert_relative_eq!(
            (p.to_rotation_matrix().matrix() - q.to_rotation_matrix().matrix()).norm(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn q_times_conjugate_is_identity() {
        let mut rng = StdRng::seed_from_u64(2);
        let q = random_quaternion(&mut rng);
        let p = q * q.conjugate();
        assert!(p.vector().norm() < 1e-15);
        assert_relative_eq!(p.scalar(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn product_matches_matrix_product() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..1000 {
            let a = random_quaternion(&mut rng);
            let b = random_quaternion(&mut rng);
            let lhs = (a * b).to_rotation_matrix();
            let rhs = a.to_rotation_matrix() * b.to_rotation_matrix();
            assert!((lhs.matrix() - rhs.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let q = UnitQuaternion::from_rotation_vector(&Vector3::zeros());
        assert_eq!(q.as_array(), [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn exp_of_pi_about_x() {
        let q = UnitQuaternion::from_rotation_vector(&Vector3::new(std::f64::consts::PI, 0.0, 0.0));
        assert_relative_eq!(q.vector().x, 1.0, epsilon = 1e-15);
        assert!(q.vector().y.abs() < 1e-15 && q.vector().z.abs() < 1e-15);
        assert!(q.scalar().abs() < 1e-15);
        // 180 deg about x as a matrix.
        let a = q.to_rotation_matrix();
        assert!(
            (a.matrix() - Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))).norm() < 1e-15
        );
    }

    #[test]
    fn exp_matches_rodrigues() {
        let v = Vector3::new(0.1, 0.2, 0.3);
        let a = UnitQuaternion::from_rotation_vector(&v).to_rotation_matrix();
        assert!((a.matrix() - rodrigues(&v)).norm() < 1e-12);
    }

    #[test]
    fn log_inverts_exp() {
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..100 {
            let v = random_vector(&mut rng, 1.5);
            let back = UnitQuaternion::from_rotation_vector(&v).rotation_vector();
            assert!((back - v).norm() < 1e-12, "v = {v:?}, back = {back:?}");
        }
        // Tiny-angle branch.
        let v = Vector3::new(1e-10, -2e-10, 3e-11);
        let back = UnitQuaternion::from_rotation_vector(&v).rotation_vector();
        assert!((back - v).norm() < 1e-20);
    }

    #[test]
    fn identity_quaternion_to_matrix() {
        let a = UnitQuaternion::identity().to_rotation_matrix();
        assert_eq!(*a.matrix(), Matrix3::identity());
    }

    #[test]
    fn matrix_round_trips_through_quaternion() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..200 {
            let q = random_quaternion(&mut rng);
            let back = q.to_rotation_matrix().to_quaternion();
            assert!(q.angle_to(&back) < 1e-12);
            let a = q.to_rotation_matrix();
            // SO(3) membership.
            assert!((a.matrix().transpose() * a.matrix() - Matrix3::identity()).norm() < 1e-12);
            assert_relative_eq!(a.matrix().determinant(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_matrix_validation() {
        assert!(RotationMatrix::from_matrix(Matrix3::identity()).is_ok());
        // Reflection: orthogonal but det = -1.
        let refl = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            RotationMatrix::from_matrix(refl),
            Err(AttitudeError::NotARotation { .. })
        ));
        assert!(matches!(
            RotationMatrix::from_matrix(Matrix3::identity() * 2.0),
            Err(AttitudeError::NotARotation { .. })
        ));
        assert!(matches!(
            RotationMatrix::from_matrix(Matrix3::from_element(f64::NAN)),
            Err(AttitudeError::NonFinite)
        ));
    }

    #[test]
    fn euler_identity() {
        let e = RotationMatrix::identity().euler_angles().unwrap();
        assert_eq!(e.as_vector(), Vector3::zeros());
    }

    #[test]
    fn euler_round_trip() {
        let e = EulerAngles::new(30f64.to_radians(), 0.0, 0.0);
        let back = RotationMatrix::from_euler(&e).euler_angles().unwrap();
        assert_relative_eq!(back.yaw, e.yaw, epsilon = 1e-12);
        assert_relative_eq!(back.pitch, 0.0, epsilon = 1e-12);
        assert_relative_eq!(back.roll, 0.0, epsilon = 1e-12);

        let e = EulerAngles::new(-2.1, 0.7, 2.9);
        let back = RotationMatrix::from_euler(&e).euler_angles().unwrap();
        assert!((back.as_vector() - e.as_vector()).norm() < 1e-12);
    }

    #[test]
    fn euler_gimbal_lock_flagged() {
        let e = EulerAngles::new(0.3, std::f64::consts::FRAC_PI_2, 0.0);
        let m = RotationMatrix::from_euler(&e);
        assert!(matches!(m.euler_angles(), Err(AttitudeError::GimbalLock { .. })));
        // The lenient variant still returns something finite.
        let lenient = m.euler_angles_lenient();
        assert!(lenient.as_vector().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn euler_matches_quaternion_composition() {
        // Rx(roll) Ry(pitch) Rz(yaw) built from single-axis quaternions.
        let e = EulerAngles::new(0.4, -0.2, 1.1);
        let qz = UnitQuaternion::from_rotation_vector(&Vector3::new(0.0, 0.0, e.yaw));
        let qy = UnitQuaternion::from_rotation_vector(&Vector3::new(0.0, e.pitch, 0.0));
        let qx = UnitQuaternion::from_rotation_vector(&Vector3::new(e.roll, 0.0, 0.0));
        let q = qx * qy * qz;
        assert!(
            (q.to_rotation_matrix().matrix() - RotationMatrix::from_euler(&e).matrix()).norm()
                < 1e-13
        );
    }

    #[test]
    fn se3_compose_against_homogeneous_product() {
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..100 {
            let a = SE3Element::new(
                random_quaternion(&mut rng).to_rotation_matrix(),
                random_vector(&mut rng, 2.0),
            );
            let b = SE3Element::new(
                random_quaternion(&mut rng).to_rotation_matrix(),
                random_vector(&mut rng, 2.0),
            );
            let direct = (a * b).to_homogeneous();
            let oracle = a.to_homogeneous() * b.to_homogeneous();
            assert!((direct - oracle).norm() < 1e-13);

            let inv = a.inverse().to_homogeneous();
            let oracle_inv = a.to_homogeneous().try_inverse().unwrap();
            assert!((inv - oracle_inv).norm() < 1e-12);
        }
    }

    #[test]
    fn se3_compose_with_inverse_is_identity() {
        let mut rng = StdRng::seed_from_u64(7);
        let a = SE3Element::new(
            random_quaternion(&mut rng).to_rotation_matrix(),
            random_vector(&mut rng, 2.0),
        );
        let e = a * a.inverse();
        assert!((e.rotation.matrix() - Matrix3::identity()).norm() < 1e-14);
        assert!(e.bias.norm() < 1e-14);
    }

    #[test]
    fn se3_right_error_bias_slot() {
        // chi * chi_hat^-1 must carry beta - A A_hat^T beta_hat in the
        // vector slot; checked against the 4x4 product.
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..50 {
            let a = random_quaternion(&mut rng).to_rotation_matrix();
            let a_hat = random_quaternion(&mut rng).to_rotation_matrix();
            let beta = random_vector(&mut rng, 1.0);
            let beta_hat = random_vector(&mut rng, 1.0);
            let chi = SE3Element::new(a, beta);
            let chi_hat = SE3Element::new(a_hat, beta_hat);
            let right = chi * chi_hat.inverse();
            let expected = beta - (a * a_hat.transpose()) * beta_hat;
            assert!((right.bias - expected).norm() < 1e-13);

            let left = chi_hat.inverse() * chi;
            let expected_left = a_hat.transpose() * (beta - beta_hat);
            assert!((left.bias - expected_left).norm() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn prop_unit_norm_preserved(
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0, aw in 0.1f64..1.0,
            bx in -1.0f64..1.0, by in -1.0f64..1.0, bz in -1.0f64..1.0, bw in 0.1f64..1.0,
        ) {
            let a = UnitQuaternion::from_components(ax, ay, az, aw);
            let b = UnitQuaternion::from_components(bx, by, bz, bw);
            prop_assert!(((a * b).norm() - 1.0).abs() < 1e-12);
            prop_assert!((a.conjugate().norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn prop_homomorphism(
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0, aw in 0.05f64..1.0,
            bx in -1.0f64..1.0, by in -1.0f64..1.0, bz in -1.0f64..1.0, bw in 0.05f64..1.0,
        ) {
            let a = UnitQuaternion::from_components(ax, ay, az, aw);
            let b = UnitQuaternion::from_components(bx, by, bz, bw);
            let lhs = (a * b).to_rotation_matrix();
            let rhs = a.to_rotation_matrix() * b.to_rotation_matrix();
            prop_assert!((lhs.matrix() - rhs.matrix()).norm() < 1e-12);
        }

        #[test]
        fn prop_first_order_error_convention(
            dx in -1e-3f64..1e-3, dy in -1e-3f64..1e-3, dz in -1e-3f64..1e-3,
        ) {
            let delta = Vector3::new(dx, dy, dz);
            let a = UnitQuaternion::from_rotation_vector(&delta).to_rotation_matrix();
            let linear = Matrix3::identity() - skew(&delta);
            prop_assert!((a.matrix() - linear).norm() <= delta.norm_squared() + 1e-15);
        }

        #[test]
        fn prop_se3_associativity(seed in 0u64..10_000) {
            let mut rng = StdRng::seed_from_u64(seed);
            let g = |rng: &mut StdRng| SE3Element::new(
                random_quaternion(rng).to_rotation_matrix(),
                random_vector(rng, 3.0),
            );
            let (a, b, c) = (g(&mut rng), g(&mut rng), g(&mut rng));
            let lhs = (a * b) * c;
            let rhs = a * (b * c);
            prop_assert!((lhs.to_homogeneous() - rhs.to_homogeneous()).norm() < 1e-12);
        }
    }
}
