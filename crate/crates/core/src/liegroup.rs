//! SE(3) and SO(3) primitives.
//!
//! Poses are stored as 4x4 homogeneous matrices because every downstream
//! kernel (finite differences, cubic blending, the weighted norm) works
//! entrywise on that representation.

use alloc::format;
use core::f64::consts::PI;
use core::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{Error, Result};
use crate::instrument;

/// Tolerance for `RᵀR = I` and `det R = 1` when validating poses.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Smallest admissible distance between a rotation angle and pi for the
/// principal logarithm.
pub const BRANCH_MARGIN: f64 = 1e-6;

/// Below this rotation angle the closed forms switch to Taylor series.
const SMALL_ANGLE: f64 = 1e-4;

/// Matrices whose determinant magnitude falls below this cannot be
/// projected onto SO(3).
pub const SINGULAR_DET: f64 = 1e-12;

/// A rigid-body transform `[[R, r], [0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose(Matrix4<f64>);

impl Pose {
    pub fn identity() -> Self {
        Pose(Matrix4::identity())
    }

    /// Validates `m` as a member of SE(3).
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPose("non-finite entry".into()));
        }
        if m[(3, 0)] != 0.0 || m[(3, 1)] != 0.0 || m[(3, 2)] != 0.0 || m[(3, 3)] != 1.0 {
            return Err(Error::InvalidPose(format!(
                "bottom row is [{}, {}, {}, {}], expected [0, 0, 0, 1]",
                m[(3, 0)],
                m[(3, 1)],
                m[(3, 2)],
                m[(3, 3)]
            )));
        }
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        check_rotation(&r)?;
        Ok(Pose(m))
    }

    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if translation.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPose("non-finite translation".into()));
        }
        check_rotation(&rotation)?;
        Ok(Self::from_parts_unchecked(rotation, translation))
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::from_parts_unchecked(Matrix3::identity(), translation)
    }

    /// Builds a pose from a rotation already known to lie in SO(3).
    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Pose(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation().transpose();
        let t = -(rt * self.translation());
        Pose::from_parts_unchecked(rt, t)
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose(self.0 * other.0)
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl Mul for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    let ortho = (r.transpose() * r - Matrix3::identity()).norm();
    if !(ortho <= ROTATION_TOLERANCE) {
        return Err(Error::InvalidPose(format!(
            "rotation block is not orthonormal (|RᵀR - I| = {ortho:e})"
        )));
    }
    let det = r.determinant();
    if !((det - 1.0).abs() <= ROTATION_TOLERANCE) {
        return Err(Error::InvalidPose(format!(
            "rotation block has det = {det}"
        )));
    }
    Ok(())
}

/// An element of se(3): `[[ω̂, v], [0, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist(Matrix4<f64>);

impl Twist {
    pub fn zero() -> Self {
        Twist(Matrix4::zeros())
    }

    pub fn new(angular: Vector3<f64>, linear: Vector3<f64>) -> Self {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&hat(&angular));
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&linear);
        Twist(m)
    }

    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        if m.row(3).iter().any(|&x| x != 0.0) {
            return Err(Error::InvalidTwist("bottom row must be zero".into()));
        }
        let a = m.fixed_view::<3, 3>(0, 0);
        let asym = (a + a.transpose()).norm();
        if !(asym <= 1e-12) {
            return Err(Error::InvalidTwist(format!(
                "rotational block is not skew-symmetric (|A + Aᵀ| = {asym:e})"
            )));
        }
        Ok(Twist(m))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// Angular part ω in radians.
    pub fn angular(&self) -> Vector3<f64> {
        let m = &self.0;
        Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
    }

    /// Linear part v in meters.
    pub fn linear(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }
}

pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of [`hat`] applied to the skew part of `m`.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// The symmetric positive-definite `W = diag(J, m)` behind the weighted
/// Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightMatrix(Matrix4<f64>);

impl WeightMatrix {
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "weight matrix has non-finite entries".into(),
            ));
        }
        if (m - m.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidParameter(
                "weight matrix is not symmetric".into(),
            ));
        }
        if m.cholesky().is_none() {
            return Err(Error::InvalidParameter(
                "weight matrix is not positive definite".into(),
            ));
        }
        Ok(WeightMatrix(m))
    }

    /// Unit-mass solid sphere of unit radius: `W = diag(1/5, 1/5, 1/5, 1)`.
    pub fn unit_sphere() -> Self {
        build_weight_matrix(1.0, [0.4; 3]).expect("unit sphere parameters are valid")
    }

    pub fn identity() -> Self {
        WeightMatrix(Matrix4::identity())
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// The 3x3 rotational block `J`.
    pub fn rotational(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn mass(&self) -> f64 {
        self.0[(3, 3)]
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        WeightMatrix::new(self.0 * k)
    }
}

impl Default for WeightMatrix {
    fn default() -> Self {
        WeightMatrix::unit_sphere()
    }
}

/// `W = diag(J, mass)` with `J = ½ tr(I) 𝕀 − I` for the diagonal inertia
/// tensor `I = diag(inertia_diag)`.
pub fn build_weight_matrix(mass: f64, inertia_diag: [f64; 3]) -> Result<WeightMatrix> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mass must be positive, got {mass}"
        )));
    }
    if inertia_diag.iter().any(|&i| !(i > 0.0 && i.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "inertia diagonal must be positive, got {inertia_diag:?}"
        )));
    }
    let half_trace = 0.5 * inertia_diag.iter().sum::<f64>();
    let j = inertia_diag.map(|i| half_trace - i);
    if j.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inertia {inertia_diag:?} violates the triangle inequality; J = {j:?} is not positive"
        )));
    }
    Ok(WeightMatrix(Matrix4::from_diagonal(
        &nalgebra::Vector4::new(j[0], j[1], j[2], mass),
    )))
}

/// `sqrt(tr(A W Aᵀ))`. For `A = [[ω̂, v], [0, 0]]` this is
/// `sqrt(tr(ω̂ J ω̂ᵀ) + m |v|²)`, the kinetic-energy norm of a body velocity.
pub fn weighted_frobenius_norm(a: &Matrix4<f64>, w: &WeightMatrix) -> f64 {
    instrument::bump_norm();
    let aw = a * w.0;
    let sq = aw.component_mul(a).sum();
    libm::sqrt(sq.max(0.0))
}

/// Principal rotation vector of `r`, with its angle.
pub fn so3_log(r: &Matrix3<f64>) -> Result<(Vector3<f64>, f64)> {
    let c = (0.5 * (r.trace() - 1.0)).clamp(-1.0, 1.0);
    let s_axis = vee(r);
    let s = s_axis.norm();
    let theta = libm::atan2(s, c);
    if theta > PI - BRANCH_MARGIN {
        return Err(Error::BranchAmbiguity {
            angle: theta,
            margin: BRANCH_MARGIN,
        });
    }
    let k = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0
    } else {
        theta / s
    };
    Ok((s_axis * k, theta))
}

/// Rodrigues' formula.
pub fn so3_exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let (a, b) = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
        )
    } else {
        let half = libm::sin(0.5 * theta);
        (
            libm::sin(theta) / theta,
            2.0 * half * half / (theta * theta),
        )
    };
    let k = hat(w);
    Matrix3::identity() + k * a + k * k * b
}

pub fn log_se3(g: &Pose) -> Result<Twist> {
    let (w, theta) = so3_log(&g.rotation())?;
    let k = hat(&w);
    let coef = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let half = libm::sin(0.5 * theta);
        (1.0 - theta * libm::sin(theta) / (4.0 * half * half)) / (theta * theta)
    };
    let v_inv = Matrix3::identity() - k * 0.5 + k * k * coef;
    Ok(Twist::new(w, v_inv * g.translation()))
}

pub fn exp_se3(xi: &Twist) -> Pose {
    let w = xi.angular();
    let theta = w.norm();
    let (b, c) = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        (
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0,
        )
    } else {
        let half = libm::sin(0.5 * theta);
        let t2 = theta * theta;
        (
            2.0 * half * half / t2,
            (theta - libm::sin(theta)) / (t2 * theta),
        )
    };
    let k = hat(&w);
    let v = Matrix3::identity() + k * b + k * k * c;
    Pose::from_parts_unchecked(so3_exp(&w), v * xi.linear())
}

/// Nearest proper rotation to `m` in the Frobenius sense:
/// `U diag(1, 1, sign det(U Vᵀ)) Vᵀ` from the SVD `m = U Σ Vᵀ`.
pub fn project_to_so3(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let det = m.determinant();
    if !(det.abs() > SINGULAR_DET) {
        return Err(Error::DegenerateFrame { det });
    }
    instrument::bump_svd();
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateFrame { det }),
    };
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut d = Matrix3::identity();
        d[(2, 2)] = -1.0;
        r = u * d * v_t;
    }
    Ok(r)
}

/// `‖log(g⁻¹ h)‖_W`, the per-joint summand of the skeleton metric.
pub fn pose_distance(g: &Pose, h: &Pose, w: &WeightMatrix) -> Result<f64> {
    let rel = g.inverse().compose(h);
    let xi = log_se3(&rel)?;
    Ok(weighted_frobenius_norm(xi.matrix(), w))
}
