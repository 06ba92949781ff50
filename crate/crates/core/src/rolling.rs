//! Straight-line edge rolling approximated by pairs of constant screw rotations.
//!
//! Each element of length `dx` moves the contact from `e1` to `e2 = e1 + dx·heading` by
//! rotating `dθ = asin(dx / 2R)` about the axis through `e1`, then `dθ` about the parallel
//! axis through `e2`. The penetrating configuration between the two rotations is never
//! emitted.

use nalgebra::Vector3;

use crate::cylinder::CylinderGeometry;
use crate::error::{Error, Result};
use crate::screw::{ScrewParameters, UnitDualQuaternion};

/// Object pose together with the edge point touching the plane and the rolling direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactState {
    pub contact_point: Vector3<f64>,
    pub heading: Vector3<f64>,
    pub pose: UnitDualQuaternion,
}

impl ContactState {
    /// Checks the contact lies on the plane, is the lowest edge point of a tilted pose,
    /// and that `heading` is tangent to the edge there.
    pub fn new(
        pose: UnitDualQuaternion,
        contact_point: Vector3<f64>,
        heading: Vector3<f64>,
        geom: &CylinderGeometry,
    ) -> Result<Self> {
        if contact_point.z.abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "contact point is off the plane (z = {:e})",
                contact_point.z
            )));
        }
        let heading = horizontal_unit(&heading)?;
        let lowest = geom
            .lowest_base_point(&pose)
            .ok_or_else(|| Error::invalid("base face is flat on the plane; no single edge contact"))?;
        if (lowest - contact_point).norm() > 1e-9 {
            return Err(Error::invalid(format!(
                "contact point differs from the lowest edge point by {:e} m",
                (lowest - contact_point).norm()
            )));
        }
        if geom.min_edge_height(&pose) < -1e-9 {
            return Err(Error::invalid("pose penetrates the support plane"));
        }
        let inward = pose.translation() - contact_point;
        if heading.dot(&inward).abs() > 1e-9 {
            return Err(Error::invalid(
                "heading is not tangent to the edge at the contact point",
            ));
        }
        Ok(Self {
            contact_point,
            heading,
            pose,
        })
    }

    /// Tilted start state built from the contact point, heading and tilt angle.
    pub fn tilted(
        geom: &CylinderGeometry,
        contact_point: Vector3<f64>,
        heading: Vector3<f64>,
        beta: f64,
    ) -> Result<Self> {
        if !(beta > 0.0 && beta <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid(format!("tilt angle must lie in (0, π/2], got {beta}")));
        }
        let heading = horizontal_unit(&heading)?;
        let pose = geom.tilted_pose(&contact_point, &heading, beta);
        Self::new(pose, contact_point, heading, geom)
    }

    /// Axis about which rolling along `heading` rotates the object.
    pub fn rolling_axis(&self) -> Vector3<f64> {
        let inward = self.pose.translation() - self.contact_point;
        inward.cross(&self.heading).normalize()
    }
}

pub(crate) fn horizontal_unit(v: &Vector3<f64>) -> Result<Vector3<f64>> {
    let h = Vector3::new(v.x, v.y, 0.0);
    let n = h.norm();
    if !(n > 1e-12) || v.z.abs() > 1e-9 * n.max(1.0) {
        return Err(Error::invalid("heading must be a non-zero horizontal vector"));
    }
    Ok(h / n)
}

/// One rolling element: the two screws and the resulting state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollSegmentPlan {
    pub screw1: ScrewParameters,
    pub screw2: ScrewParameters,
    pub dtheta: f64,
    pub end_state: ContactState,
}

impl RollSegmentPlan {
    /// Net displacement of the element, `S2·S1`.
    pub fn displacement(&self) -> UnitDualQuaternion {
        self.screw2.to_dual_quaternion() * self.screw1.to_dual_quaternion()
    }
}

/// Half-angle of a rolling element whose chord is `dx`: `asin(dx / 2R)`.
pub fn element_angle(dx: f64, radius: f64) -> Result<f64> {
    if !(dx >= 0.0) {
        return Err(Error::invalid(format!("element length must be non-negative, got {dx}")));
    }
    let ratio = dx / (2.0 * radius);
    // allow round-off when the chord is exactly the diameter
    if ratio > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "element length {dx} exceeds the edge diameter {}",
            2.0 * radius
        )));
    }
    Ok(ratio.min(1.0).asin())
}

pub fn plan_roll_element(state: &ContactState, dx: f64, geom: &CylinderGeometry) -> Result<RollSegmentPlan> {
    if !(dx > 0.0) {
        return Err(Error::invalid(format!("element length must be positive, got {dx}")));
    }
    roll_to(state, state.contact_point + state.heading * dx, geom)
}

/// Rolls from the current contact to `e2`, which must lie ahead on the heading.
pub(crate) fn roll_to(state: &ContactState, e2: Vector3<f64>, geom: &CylinderGeometry) -> Result<RollSegmentPlan> {
    let e1 = state.contact_point;
    let dtheta = element_angle((e2 - e1).dot(&state.heading), geom.radius())?;
    let axis = state.rolling_axis();
    let screw1 = ScrewParameters::rotation_about(&axis, &e1, dtheta);
    let screw2 = ScrewParameters::rotation_about(&axis, &e2, dtheta);
    let pose = (screw2.to_dual_quaternion() * screw1.to_dual_quaternion() * state.pose).renormalized();
    Ok(RollSegmentPlan {
        screw1,
        screw2,
        dtheta,
        end_state: ContactState {
            contact_point: e2,
            heading: state.heading,
            pose,
        },
    })
}

/// Rolls `length` along the start heading in `n` equal elements.
///
/// Returns `n` element plans; the states along the line are `start` followed by each
/// plan's `end_state`.
pub fn plan_straight_elements(
    start: &ContactState,
    length: f64,
    n: usize,
    geom: &CylinderGeometry,
) -> Result<Vec<RollSegmentPlan>> {
    if !(length > 0.0) {
        return Err(Error::invalid(format!("line length must be positive, got {length}")));
    }
    if n == 0 {
        return Err(Error::invalid("segment count must be at least 1"));
    }
    element_angle(length / n as f64, geom.radius())?;
    let mut plans = Vec::with_capacity(n);
    let mut state = *start;
    for i in 1..=n {
        // contacts measured from the line start so that dx round-off does not accumulate
        let e2 = start.contact_point + start.heading * (length * i as f64 / n as f64);
        let plan = roll_to(&state, e2, geom)?;
        state = plan.end_state;
        plans.push(plan);
    }
    Ok(plans)
}

/// `n + 1` contact states from `start` to the end of the line.
pub fn plan_straight_line(
    start: &ContactState,
    length: f64,
    n: usize,
    geom: &CylinderGeometry,
) -> Result<Vec<ContactState>> {
    let plans = plan_straight_elements(start, length, n, geom)?;
    let mut states = Vec::with_capacity(n + 1);
    states.push(*start);
    states.extend(plans.iter().map(|p| p.end_state));
    Ok(states)
}
