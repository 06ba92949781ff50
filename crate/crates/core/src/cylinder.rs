//! Cylinder geometry and pose construction on the support plane `z = 0`.
//!
//! Body frame: origin at the centre of the base face, symmetry axis along body `+z`,
//! top face at body `z = H`. The base edge is the circle of radius `R` in body `z = 0`.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::screw::{Quaternion, UnitDualQuaternion};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderGeometry {
    radius: f64,
    height: f64,
}

impl CylinderGeometry {
    pub fn new(radius: f64, height: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("radius must be positive, got {radius}")));
        }
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::invalid(format!("height must be positive, got {height}")));
        }
        Ok(Self { radius, height })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Lowest height reached by either edge circle of the cylinder at `pose`.
    pub fn min_edge_height(&self, pose: &UnitDualQuaternion) -> f64 {
        let axis = pose.transform_vector(&Vector3::z());
        // A circle of radius R with unit normal a dips R·sqrt(1 - a_z²) below its centre.
        let dip = self.radius * (1.0 - axis.z * axis.z).max(0.0).sqrt();
        let base = pose.translation().z;
        let top = base + self.height * axis.z;
        base.min(top) - dip
    }

    /// Lowest point of the base edge, or `None` when the base is horizontal.
    pub fn lowest_base_point(&self, pose: &UnitDualQuaternion) -> Option<Vector3<f64>> {
        let axis = pose.transform_vector(&Vector3::z());
        let down = -Vector3::z() + axis * axis.z;
        let n = down.norm();
        if n < 1e-12 {
            return None;
        }
        Some(pose.translation() + down * (self.radius / n))
    }

    /// Body-frame base-edge point that `pose` places at `world`, if any within `tol`.
    pub fn base_edge_point_at(
        &self,
        pose: &UnitDualQuaternion,
        world: &Vector3<f64>,
        tol: f64,
    ) -> Result<Vector3<f64>> {
        let body = pose.inverse().transform_point(world);
        let radial = (body.x * body.x + body.y * body.y).sqrt();
        if body.z.abs() > tol || (radial - self.radius).abs() > tol {
            return Err(Error::invalid(format!(
                "point ({:.6}, {:.6}, {:.6}) is not on the base edge footprint (axial offset {:.3e}, radial offset {:.3e})",
                world.x,
                world.y,
                world.z,
                body.z,
                radial - self.radius
            )));
        }
        Ok(Vector3::new(body.x, body.y, 0.0) * (self.radius / radial))
    }

    /// Pose resting on the base-edge point `body_point` at `contact`, with the base face
    /// inclined by `beta` to the plane and the edge tangent at the contact along `heading`.
    ///
    /// The base centre lies on the left of `heading` (seen from `+z`), so the cylinder
    /// leans back over the contact point. `beta = 0` gives the upright pose.
    pub fn pose_on_edge(
        &self,
        body_point: &Vector3<f64>,
        contact: &Vector3<f64>,
        heading: &Vector3<f64>,
        beta: f64,
    ) -> UnitDualQuaternion {
        let h = Vector3::new(heading.x, heading.y, 0.0).normalize();
        let left = Vector3::z().cross(&h);
        let (sb, cb) = beta.sin_cos();
        // unit vector from the contact towards the base centre, and the symmetry axis
        let inward = left * cb + Vector3::z() * sb;
        let axis = -left * sb + Vector3::z() * cb;

        let b = body_point.normalize();
        let body = Matrix3::from_columns(&[b, Vector3::z(), Vector3::z().cross(&b)]);
        let world = Matrix3::from_columns(&[-inward, axis, axis.cross(&-inward)]);
        let rotation = quaternion_from_matrix(&(world * body.transpose()));
        let position = contact - rotation.rotate(body_point);
        UnitDualQuaternion::from_pose(&crate::screw::Pose { position, rotation })
    }

    /// [`pose_on_edge`](Self::pose_on_edge) using the body point `(-R, 0, 0)`.
    pub fn tilted_pose(&self, contact: &Vector3<f64>, heading: &Vector3<f64>, beta: f64) -> UnitDualQuaternion {
        self.pose_on_edge(&Vector3::new(-self.radius, 0.0, 0.0), contact, heading, beta)
    }

    /// Upright pose whose base edge passes through `contact` with tangent `heading`.
    pub fn upright_pose(&self, contact: &Vector3<f64>, heading: &Vector3<f64>) -> UnitDualQuaternion {
        self.tilted_pose(contact, heading, 0.0)
    }

    /// Tilt placing the centre of mass vertically above the contact point.
    pub fn stability_tilt(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 - (self.height / (2.0 * self.radius)).atan()
    }

    /// Angle between the base face and the support plane.
    pub fn tilt_of(&self, pose: &UnitDualQuaternion) -> f64 {
        let axis = pose.transform_vector(&Vector3::z());
        axis.z.clamp(-1.0, 1.0).acos()
    }
}

pub(crate) fn quaternion_from_matrix(m: &Matrix3<f64>) -> Quaternion {
    let rot = Rotation3::from_matrix_unchecked(*m);
    let q = UnitQuaternion::from_rotation_matrix(&rot);
    Quaternion::new(q.w, q.i, q.j, q.k).normalize()
}
