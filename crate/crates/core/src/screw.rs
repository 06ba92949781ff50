//! Quaternion, dual-quaternion and screw algebra.
//!
//! Poses are unit dual quaternions `D = r + ε·½·t·r` where `r` is the rotation
//! quaternion and `t = (0, p)` the translation. Composition `a * b` applies `b`
//! first, then `a`, so `world_from_a * a_from_b = world_from_b`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Tolerance accepted on the two unit conditions when wrapping a raw dual quaternion.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Below this `|sin(θ/2)|` the rotation is treated as absent and the screw is a pure translation.
pub const SCREW_DEGENERACY: f64 = 1e-8;

/// Translations shorter than this (with no rotation) are the identity.
const IDENTITY_TRANSLATION: f64 = 1e-12;

/// Hamilton quaternion `w + xi + yj + zk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    /// Pure quaternion `(0, v)`.
    pub fn pure(v: &Vector3<f64>) -> Self {
        Self::new(0.0, v.x, v.y, v.z)
    }

    pub fn from_scalar_vector(w: f64, v: &Vector3<f64>) -> Self {
        Self::new(w, v.x, v.y, v.z)
    }

    /// Rotation by `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let u = axis.normalize();
        let (s, c) = (angle / 2.0).sin_cos();
        Self::from_scalar_vector(c, &(u * s))
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Four-component Euclidean inner product.
    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.w * k, self.x * k, self.y * k, self.z * k)
    }

    pub fn normalize(&self) -> Self {
        self.scale(1.0 / self.norm())
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm_squared() - 1.0).abs() <= tol
    }

    /// Rotates `v` by this (unit) quaternion.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        (*self * Self::pure(v) * self.conjugate()).vector()
    }

    /// Rotation angle in `[0, π]`, insensitive to the sign of the quaternion.
    pub fn angle(&self) -> f64 {
        2.0 * self.vector().norm().atan2(self.w.abs())
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, b: Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl Add for Quaternion {
    type Output = Quaternion;

    fn add(self, b: Quaternion) -> Quaternion {
        Quaternion::new(self.w + b.w, self.x + b.x, self.y + b.y, self.z + b.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;

    fn sub(self, b: Quaternion) -> Quaternion {
        Quaternion::new(self.w - b.w, self.x - b.x, self.y - b.y, self.z - b.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

/// Dual quaternion `real + ε·dual` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualQuaternion {
    pub real: Quaternion,
    pub dual: Quaternion,
}

impl DualQuaternion {
    pub const fn new(real: Quaternion, dual: Quaternion) -> Self {
        Self { real, dual }
    }

    pub const fn identity() -> Self {
        Self::new(Quaternion::identity(), Quaternion::zero())
    }

    /// Quaternion conjugate applied to both parts; the inverse of a unit dual quaternion.
    pub fn conjugate(&self) -> Self {
        Self::new(self.real.conjugate(), self.dual.conjugate())
    }

    /// Residuals of the two unit conditions: `|r|² - 1` and `r·d`.
    pub fn unit_residuals(&self) -> (f64, f64) {
        (self.real.norm_squared() - 1.0, self.real.dot(&self.dual))
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        let (a, b) = self.unit_residuals();
        a.abs() <= tol && b.abs() <= tol
    }

    pub fn to_array(&self) -> [f64; 8] {
        let r = self.real;
        let d = self.dual;
        [r.w, r.x, r.y, r.z, d.w, d.x, d.y, d.z]
    }
}

impl Mul for DualQuaternion {
    type Output = DualQuaternion;

    fn mul(self, b: DualQuaternion) -> DualQuaternion {
        DualQuaternion::new(self.real * b.real, self.real * b.dual + self.dual * b.real)
    }
}

impl Add for DualQuaternion {
    type Output = DualQuaternion;

    fn add(self, b: DualQuaternion) -> DualQuaternion {
        DualQuaternion::new(self.real + b.real, self.dual + b.dual)
    }
}

impl Neg for DualQuaternion {
    type Output = DualQuaternion;

    fn neg(self) -> DualQuaternion {
        DualQuaternion::new(-self.real, -self.dual)
    }
}

/// A dual quaternion satisfying both unit conditions; represents an element of SE(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitDualQuaternion(DualQuaternion);

impl UnitDualQuaternion {
    /// Wraps `dq` if it satisfies the unit conditions within [`UNIT_TOLERANCE`].
    pub fn try_new(dq: DualQuaternion) -> Result<Self> {
        let (a, b) = dq.unit_residuals();
        if !(a.abs() <= UNIT_TOLERANCE && b.abs() <= UNIT_TOLERANCE) {
            return Err(Error::invalid(format!(
                "dual quaternion violates unit conditions (|r|²-1 = {a:.3e}, r·d = {b:.3e})"
            )));
        }
        Ok(Self(dq))
    }

    /// Projects an arbitrary dual quaternion with non-zero real part onto the unit set.
    pub fn normalize(dq: DualQuaternion) -> Self {
        let n = dq.real.norm();
        let real = dq.real.scale(1.0 / n);
        let dual = dq.dual.scale(1.0 / n);
        let dual = dual - real.scale(real.dot(&dual));
        Self(DualQuaternion::new(real, dual))
    }

    pub const fn identity() -> Self {
        Self(DualQuaternion::identity())
    }

    pub fn from_rotation(q: Quaternion) -> Self {
        Self(DualQuaternion::new(q, Quaternion::zero()))
    }

    pub fn from_translation(p: &Vector3<f64>) -> Self {
        Self(DualQuaternion::new(
            Quaternion::identity(),
            Quaternion::pure(&(p * 0.5)),
        ))
    }

    /// Rotation `q` followed by translation `p`.
    fn from_parts(q: Quaternion, p: &Vector3<f64>) -> Self {
        Self(DualQuaternion::new(q, (Quaternion::pure(p) * q).scale(0.5)))
    }

    pub fn from_pose(pose: &Pose) -> Self {
        Self::from_parts(pose.rotation, &pose.position)
    }

    /// Same as [`from_pose`](Self::from_pose) but checks the rotation is unit first.
    pub fn try_from_pose(position: Vector3<f64>, rotation: Quaternion) -> Result<Self> {
        Ok(Self::from_pose(&Pose::new(position, rotation)?))
    }

    pub fn to_pose(&self) -> Pose {
        // Canonical sign so that d and -d yield bit-identical poses.
        let dq = if self.is_canonical_sign() { self.0 } else { -self.0 };
        let t = (dq.dual * dq.real.conjugate()).scale(2.0);
        Pose {
            position: t.vector(),
            rotation: dq.real,
        }
    }

    fn is_canonical_sign(&self) -> bool {
        let r = self.0.real.to_array();
        let lead = r.iter().copied().find(|c| *c != 0.0).unwrap_or(1.0);
        lead > 0.0
    }

    pub fn real(&self) -> Quaternion {
        self.0.real
    }

    pub fn dual(&self) -> Quaternion {
        self.0.dual
    }

    pub fn as_dual_quaternion(&self) -> DualQuaternion {
        self.0
    }

    pub fn rotation(&self) -> Quaternion {
        self.0.real
    }

    pub fn translation(&self) -> Vector3<f64> {
        (self.0.dual * self.0.real.conjugate()).scale(2.0).vector()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.conjugate())
    }

    /// Maps a point given in the local frame into the reference frame.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.0.real.rotate(p) + self.translation()
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.real.rotate(v)
    }

    pub fn negate(&self) -> Self {
        Self(-self.0)
    }

    /// Re-projects onto the unit set, removing accumulated rounding drift.
    pub fn renormalized(&self) -> Self {
        Self::normalize(self.0)
    }

    /// True when `self` and `other` agree up to the global sign within `tol` (max abs component).
    pub fn approx_eq_up_to_sign(&self, other: &Self, tol: f64) -> bool {
        let a = self.0.to_array();
        let b = other.0.to_array();
        let plus = a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol);
        let minus = a.iter().zip(&b).all(|(x, y)| (x + y).abs() <= tol);
        plus || minus
    }
}

impl Mul for UnitDualQuaternion {
    type Output = UnitDualQuaternion;

    fn mul(self, b: UnitDualQuaternion) -> UnitDualQuaternion {
        UnitDualQuaternion(self.0 * b.0)
    }
}

/// Rigid pose: rotation applied first, then translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub rotation: Quaternion,
}

impl Pose {
    pub fn new(position: Vector3<f64>, rotation: Quaternion) -> Result<Self> {
        if !rotation.is_unit(1e-10) {
            return Err(Error::invalid(format!(
                "rotation quaternion is not unit (|q| = {})",
                rotation.norm()
            )));
        }
        Ok(Self { position, rotation })
    }

    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            rotation: Quaternion::identity(),
        }
    }
}

/// Screw displacement in Plücker form: rotation `theta` about the line `(u, m)` and
/// translation `d` along it, where `m = r × u` for any point `r` on the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewParameters {
    pub theta: f64,
    pub d: f64,
    pub u: Vector3<f64>,
    pub m: Vector3<f64>,
}

impl ScrewParameters {
    pub fn new(theta: f64, d: f64, u: Vector3<f64>, m: Vector3<f64>) -> Result<Self> {
        if (u.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "screw direction is not unit (|u| = {})",
                u.norm()
            )));
        }
        if u.dot(&m).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "screw moment not perpendicular to axis (u·m = {:e})",
                u.dot(&m)
            )));
        }
        Ok(Self { theta, d, u, m })
    }

    /// Pure rotation by `angle` about the line through `point` with direction `axis`.
    pub fn rotation_about(axis: &Vector3<f64>, point: &Vector3<f64>, angle: f64) -> Self {
        let u = axis.normalize();
        Self {
            theta: angle,
            d: 0.0,
            u,
            m: point.cross(&u),
        }
    }

    /// Pure translation by `distance` along `direction`; the moment is zero by convention.
    pub fn translation_along(direction: &Vector3<f64>, distance: f64) -> Self {
        Self {
            theta: 0.0,
            d: distance,
            u: direction.normalize(),
            m: Vector3::zeros(),
        }
    }

    /// The point of the axis closest to the origin, `u × m`.
    pub fn axis_point(&self) -> Vector3<f64> {
        self.u.cross(&self.m)
    }

    /// Same axis, with rotation and translation both scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            theta: self.theta * s,
            d: self.d * s,
            ..*self
        }
    }

    pub fn to_dual_quaternion(&self) -> UnitDualQuaternion {
        screw_to_dual_quat(self)
    }
}

pub fn quat_mul(a: &Quaternion, b: &Quaternion) -> Quaternion {
    *a * *b
}

pub fn dual_quat_mul(a: &DualQuaternion, b: &DualQuaternion) -> DualQuaternion {
    *a * *b
}

pub fn from_pose(pose: &Pose) -> Result<UnitDualQuaternion> {
    UnitDualQuaternion::try_from_pose(pose.position, pose.rotation)
}

pub fn to_pose(d: &DualQuaternion) -> Result<Pose> {
    Ok(UnitDualQuaternion::try_new(*d)?.to_pose())
}

pub fn screw_to_dual_quat(s: &ScrewParameters) -> UnitDualQuaternion {
    let (sin, cos) = (s.theta / 2.0).sin_cos();
    let half_d = s.d / 2.0;
    let real = Quaternion::from_scalar_vector(cos, &(s.u * sin));
    let dual = Quaternion::from_scalar_vector(-half_d * sin, &(s.m * sin + s.u * (half_d * cos)));
    UnitDualQuaternion(DualQuaternion::new(real, dual))
}

/// Recovers `(θ, d, u, m)` with `θ ∈ [0, π]`.
///
/// Rotation-free transforms yield `θ = 0`, `u` along the translation and `m = 0`;
/// the identity has no axis and returns [`Error::NoScrew`].
pub fn extract_screw(d: &UnitDualQuaternion) -> Result<ScrewParameters> {
    let mut dq = d.as_dual_quaternion();
    if dq.real.w < 0.0 {
        dq = -dq;
    }
    let v = dq.real.vector();
    let sin_half = v.norm();
    if sin_half < SCREW_DEGENERACY {
        let t = (dq.dual * dq.real.conjugate()).scale(2.0).vector();
        let dist = t.norm();
        if dist < IDENTITY_TRANSLATION {
            return Err(Error::NoScrew);
        }
        return Ok(ScrewParameters::translation_along(&t, dist));
    }
    let cos_half = dq.real.w;
    let theta = 2.0 * sin_half.atan2(cos_half);
    let u = v / sin_half;
    let d_slide = -2.0 * dq.dual.w / sin_half;
    let m = (dq.dual.vector() - u * (d_slide / 2.0 * cos_half)) / sin_half;
    // Strip rounding so that u·m = 0 holds tightly.
    let m = m - u * u.dot(&m);
    Ok(ScrewParameters {
        theta,
        d: d_slide,
        u,
        m,
    })
}

/// `D^s` along the screw of `d12`; the identity maps to the identity for every `s`.
pub fn screw_power(d12: &UnitDualQuaternion, s: f64) -> UnitDualQuaternion {
    match extract_screw(d12) {
        Ok(screw) => screw_to_dual_quat(&screw.scaled(s)),
        Err(_) => UnitDualQuaternion::identity(),
    }
}

/// Relative transform `d1⁻¹·d2`, with `d2` sign-aligned to `d1` first.
pub fn relative(d1: &UnitDualQuaternion, d2: &UnitDualQuaternion) -> UnitDualQuaternion {
    let d2 = if d1.real().dot(&d2.real()) < 0.0 {
        d2.negate()
    } else {
        *d2
    };
    d1.inverse() * d2
}

/// Screw linear interpolation `D(s) = d1·(d1⁻¹d2)^s`.
pub fn sclerp(d1: &UnitDualQuaternion, d2: &UnitDualQuaternion, s: f64) -> UnitDualQuaternion {
    *d1 * screw_power(&relative(d1, d2), s)
}

/// Interpolator with the relative screw extracted once.
#[derive(Debug, Clone, Copy)]
pub struct Sclerp {
    start: UnitDualQuaternion,
    screw: Option<ScrewParameters>,
}

impl Sclerp {
    pub fn new(d1: &UnitDualQuaternion, d2: &UnitDualQuaternion) -> Self {
        Self {
            start: *d1,
            screw: extract_screw(&relative(d1, d2)).ok(),
        }
    }

    /// Relative screw; `None` when both poses coincide.
    pub fn screw(&self) -> Option<&ScrewParameters> {
        self.screw.as_ref()
    }

    pub fn at(&self, s: f64) -> UnitDualQuaternion {
        match &self.screw {
            Some(screw) => self.start * screw_to_dual_quat(&screw.scaled(s)),
            None => self.start,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn quaternion_identity_and_basis() {
        let q = Quaternion::new(0.3, -0.2, 0.9, 0.1);
        assert_eq!(Quaternion::identity() * q, q);
        let i = Quaternion::new(0.0, 1.0, 0.0, 0.0);
        let j = Quaternion::new(0.0, 0.0, 1.0, 0.0);
        assert_eq!(i * j, Quaternion::new(0.0, 0.0, 0.0, 1.0));
        assert_eq!(j * i, Quaternion::new(0.0, 0.0, 0.0, -1.0));
    }

    #[test]
    fn dual_identity_and_translations() {
        let s = DualQuaternion::new(
            Quaternion::new(0.5, 0.5, 0.5, 0.5),
            Quaternion::new(0.1, 0.2, -0.3, 0.4),
        );
        assert_eq!(DualQuaternion::identity() * s, s);

        let p1 = Vector3::new(0.1, -2.0, 0.5);
        let p2 = Vector3::new(1.5, 0.25, -0.75);
        let t = UnitDualQuaternion::from_translation(&p1) * UnitDualQuaternion::from_translation(&p2);
        let expected = UnitDualQuaternion::from_translation(&(p1 + p2));
        assert!(
            max_abs_diff(
                &t.as_dual_quaternion().to_array(),
                &expected.as_dual_quaternion().to_array()
            ) < 1e-15
        );
    }

    #[test]
    fn pose_special_cases() {
        let id = from_pose(&Pose::identity()).unwrap();
        assert_eq!(
            id.as_dual_quaternion().to_array(),
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );

        // pure translation: 1 + ε·½·Q_p
        let p = Vector3::new(0.2, -0.4, 1.0);
        let d = from_pose(&Pose::new(p, Quaternion::identity()).unwrap()).unwrap();
        assert_eq!(d.real(), Quaternion::identity());
        assert_eq!(d.dual(), Quaternion::pure(&(p * 0.5)));

        // pure rotation: Q_R + 0ε
        let q = Quaternion::from_axis_angle(&Vector3::new(1.0, 2.0, -1.0), 0.7);
        let d = from_pose(&Pose::new(Vector3::zeros(), q).unwrap()).unwrap();
        assert_eq!(d.real(), q);
        assert_eq!(d.dual().norm(), 0.0);
    }

    #[test]
    fn non_unit_inputs_rejected() {
        assert!(Pose::new(Vector3::zeros(), Quaternion::new(1.0, 0.1, 0.0, 0.0)).is_err());
        let bad = DualQuaternion::new(Quaternion::identity(), Quaternion::new(0.5, 0.0, 0.0, 0.0));
        assert!(matches!(to_pose(&bad), Err(Error::InvalidInput(_))));
        assert!(to_pose(&DualQuaternion::identity()).is_ok());
    }

    #[test]
    fn double_cover_gives_same_pose() {
        let q = Quaternion::from_axis_angle(&Vector3::new(0.0, 1.0, 1.0), 2.5);
        let d = UnitDualQuaternion::from_pose(&Pose::new(Vector3::new(1.0, 2.0, 3.0), q).unwrap());
        assert_eq!(d.to_pose(), d.negate().to_pose());
    }

    #[test]
    fn extract_pure_rotation_about_z() {
        let theta = 1.2;
        let d = UnitDualQuaternion::from_rotation(Quaternion::from_axis_angle(&Vector3::z(), theta));
        let s = extract_screw(&d).unwrap();
        assert!((s.theta - theta).abs() < 1e-15);
        assert!(s.d.abs() < 1e-15);
        assert!((s.u - Vector3::z()).norm() < 1e-15);
        assert!(s.m.norm() < 1e-15);
    }

    #[test]
    fn extract_pure_translation() {
        let d = UnitDualQuaternion::from_translation(&Vector3::new(0.3, 0.0, 0.0));
        let s = extract_screw(&d).unwrap();
        assert_eq!(s.theta, 0.0);
        assert!((s.d - 0.3).abs() < 1e-15);
        assert_eq!(s.u, Vector3::x());
        assert_eq!(s.m, Vector3::zeros());
    }

    #[test]
    fn extract_identity_has_no_screw() {
        assert_eq!(extract_screw(&UnitDualQuaternion::identity()), Err(Error::NoScrew));
    }

    #[test]
    fn extract_recovers_moment_of_offset_axis() {
        let r = Vector3::new(0.4, -1.1, 0.3);
        let u = Vector3::new(1.0, 1.0, 2.0).normalize();
        let known = ScrewParameters {
            theta: 0.9,
            d: 0.25,
            u,
            m: r.cross(&u),
        };
        let s = extract_screw(&known.to_dual_quaternion()).unwrap();
        assert!((s.theta - 0.9).abs() < 1e-12);
        assert!((s.d - 0.25).abs() < 1e-12);
        assert!((s.u - u).norm() < 1e-12);
        assert!((s.m - r.cross(&u)).norm() < 1e-9);
    }

    #[test]
    fn extract_folds_angle_into_zero_pi() {
        // 1.5π about +z is 0.5π about -z
        let d = UnitDualQuaternion::from_rotation(Quaternion::from_axis_angle(&Vector3::z(), 1.5 * PI));
        let s = extract_screw(&d).unwrap();
        assert!((s.theta - FRAC_PI_2).abs() < 1e-12);
        assert!((s.u + Vector3::z()).norm() < 1e-12);
    }

    #[test]
    fn screw_to_dual_quat_cases() {
        let id = ScrewParameters::rotation_about(&Vector3::x(), &Vector3::zeros(), 0.0).to_dual_quaternion();
        assert_eq!(
            id.as_dual_quaternion().to_array(),
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );

        let half = ScrewParameters::rotation_about(&Vector3::z(), &Vector3::zeros(), PI).to_dual_quaternion();
        let expected = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert!(max_abs_diff(&half.as_dual_quaternion().to_array(), &expected) < 1e-15);
    }

    #[test]
    fn rotation_about_offset_axis_fixes_axis_points() {
        let point = Vector3::new(1.0, 2.0, 0.0);
        let d = ScrewParameters::rotation_about(&Vector3::z(), &point, 0.8).to_dual_quaternion();
        assert!((d.transform_point(&point) - point).norm() < 1e-15);
        let above = point + Vector3::new(0.0, 0.0, 3.0);
        assert!((d.transform_point(&above) - above).norm() < 1e-15);
        // quarter turn about z through (1,2): (2,2) -> (1,3)
        let d = ScrewParameters::rotation_about(&Vector3::z(), &point, FRAC_PI_2).to_dual_quaternion();
        let moved = d.transform_point(&Vector3::new(2.0, 2.0, 0.0));
        assert!((moved - Vector3::new(1.0, 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn screw_power_endpoints_and_halves() {
        let u = Vector3::new(0.0, 1.0, 1.0).normalize();
        let d12 = ScrewParameters {
            theta: 2.0,
            d: 0.3,
            u,
            m: Vector3::new(1.0, 0.0, 0.0).cross(&u),
        }
        .to_dual_quaternion();
        assert_eq!(
            screw_power(&d12, 0.0).as_dual_quaternion().to_array(),
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert!(screw_power(&d12, 1.0).approx_eq_up_to_sign(&d12, 1e-10));
        let half = screw_power(&d12, 0.5);
        assert!((half * half).approx_eq_up_to_sign(&d12, 1e-9));
        assert_eq!(
            screw_power(&UnitDualQuaternion::identity(), 0.3),
            UnitDualQuaternion::identity()
        );
    }

    #[test]
    fn sclerp_endpoints_and_constant_path() {
        let a = UnitDualQuaternion::from_pose(
            &Pose::new(
                Vector3::new(1.0, 0.0, 0.0),
                Quaternion::from_axis_angle(&Vector3::y(), 0.3),
            )
            .unwrap(),
        );
        let b = UnitDualQuaternion::from_pose(
            &Pose::new(
                Vector3::new(0.0, 2.0, 1.0),
                Quaternion::from_axis_angle(&Vector3::x(), -1.3),
            )
            .unwrap(),
        );
        assert!(sclerp(&a, &b, 0.0).approx_eq_up_to_sign(&a, 1e-12));
        assert!(sclerp(&a, &b, 1.0).approx_eq_up_to_sign(&b, 1e-10));
        // sign of d2 does not matter
        assert!(sclerp(&a, &b.negate(), 0.4).approx_eq_up_to_sign(&sclerp(&a, &b, 0.4), 1e-12));
        for i in 0..=10 {
            assert_eq!(sclerp(&a, &a, i as f64 / 10.0), a);
        }
    }

    #[test]
    fn sclerp_keeps_shared_point_fixed() {
        let r = Vector3::new(0.3, -0.2, 0.0);
        let a = UnitDualQuaternion::from_pose(
            &Pose::new(
                Vector3::new(0.5, 0.1, 0.2),
                Quaternion::from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 0.4),
            )
            .unwrap(),
        );
        // b = rotation about an axis through r, applied after a: both fix the body point mapped to r
        let body = a.inverse().transform_point(&r);
        let b = ScrewParameters::rotation_about(&Vector3::new(0.2, -1.0, 0.7), &r, 1.9).to_dual_quaternion() * a;
        for i in 0..=10 {
            let p = sclerp(&a, &b, i as f64 / 10.0).transform_point(&body);
            assert!((p - r).norm() < 1e-9);
        }
    }
}
