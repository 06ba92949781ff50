//! Rolling and sliding along discretized planar curves.
//!
//! A plan is a flat list of [`PrimitiveStep`]s: an initial tilt-and-align pivot about the
//! first contact point, then for each segment one roll (or slide) followed by a pivot
//! about the vertical axis through the contact point by the turn angle to the next
//! segment, and finally a pivot to the requested final configuration.

use nalgebra::Vector3;

use crate::cylinder::CylinderGeometry;
use crate::error::{Error, Result};
use crate::rolling::{self, ContactState};
use crate::screw::{self, Quaternion, Sclerp, ScrewParameters, UnitDualQuaternion};

/// Pivot interpolation step: one sample per this many radians of rotation.
pub const PIVOT_SAMPLE_SPACING: f64 = 0.01;

/// Lowest edge height accepted as resting on the plane.
pub const PENETRATION_TOLERANCE: f64 = 1e-9;

/// Turns smaller than this are treated as straight continuation.
const TURN_EPSILON: f64 = 1e-12;

/// Number of poses sampled along a pivot of `angle` radians (endpoints included).
pub fn pivot_samples(angle: f64) -> usize {
    ((angle.abs() / PIVOT_SAMPLE_SPACING).ceil() as usize).max(2)
}

/// Planar curve to be followed by the contact point.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveDescriptor {
    Line {
        start: [f64; 2],
        end: [f64; 2],
    },
    /// Counter-clockwise when `end_angle > start_angle`.
    Arc {
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
    /// `y = Σ coefficients[k]·x^k` for `x` from `x_start` to `x_end`.
    Polynomial {
        coefficients: Vec<f64>,
        x_start: f64,
        x_end: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedPath {
    points: Vec<Vector3<f64>>,
    segment_lengths: Vec<f64>,
    turn_angles: Vec<f64>,
}

impl DiscretizedPath {
    /// Builds a path through `points` on the plane `z = 0`.
    pub fn from_points(points: Vec<Vector3<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("a path needs at least two points"));
        }
        if points
            .iter()
            .any(|p| p.z.abs() > 1e-9 || !p.iter().all(|c| c.is_finite()))
        {
            return Err(Error::invalid("path points must be finite and lie on the plane z = 0"));
        }
        let segment_lengths: Vec<f64> = points.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
        if let Some(i) = segment_lengths.iter().position(|l| !(*l > 1e-15)) {
            return Err(Error::invalid(format!("segment {i} has zero length")));
        }
        let directions: Vec<Vector3<f64>> = points.windows(2).map(|w| (w[1] - w[0]).normalize()).collect();
        let turn_angles = directions.windows(2).map(|d| signed_angle(&d[0], &d[1])).collect();
        Ok(Self {
            points,
            segment_lengths,
            turn_angles,
        })
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn segment_lengths(&self) -> &[f64] {
        &self.segment_lengths
    }

    /// Signed turn from segment `i` to `i + 1`, counter-clockwise positive.
    pub fn turn_angles(&self) -> &[f64] {
        &self.turn_angles
    }

    pub fn segment_count(&self) -> usize {
        self.segment_lengths.len()
    }

    pub fn total_length(&self) -> f64 {
        self.segment_lengths.iter().sum()
    }

    pub fn direction(&self, segment: usize) -> Vector3<f64> {
        (self.points[segment + 1] - self.points[segment]).normalize()
    }

    pub fn start(&self) -> Vector3<f64> {
        self.points[0]
    }

    pub fn end(&self) -> Vector3<f64> {
        *self.points.last().expect("path has points")
    }
}

/// Counter-clockwise angle from `a` to `b` about `+z`.
fn signed_angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let cross = a.x * b.y - a.y * b.x;
    let dot = a.x * b.x + a.y * b.y;
    cross.atan2(dot)
}

pub fn discretize_curve(curve: &CurveDescriptor, n: usize) -> Result<DiscretizedPath> {
    if n == 0 {
        return Err(Error::invalid("segment count must be at least 1"));
    }
    let frac = |i: usize| i as f64 / n as f64;
    let points: Vec<Vector3<f64>> = match curve {
        CurveDescriptor::Line { start, end } => {
            let a = Vector3::new(start[0], start[1], 0.0);
            let b = Vector3::new(end[0], end[1], 0.0);
            if (b - a).norm() == 0.0 {
                return Err(Error::invalid("line has zero length"));
            }
            (0..=n).map(|i| a + (b - a) * frac(i)).collect()
        }
        CurveDescriptor::Arc {
            center,
            radius,
            start_angle,
            end_angle,
        } => {
            if !(*radius > 0.0) || start_angle == end_angle {
                return Err(Error::invalid("arc has zero length"));
            }
            (0..=n)
                .map(|i| {
                    let t = start_angle + (end_angle - start_angle) * frac(i);
                    Vector3::new(center[0] + radius * t.cos(), center[1] + radius * t.sin(), 0.0)
                })
                .collect()
        }
        CurveDescriptor::Polynomial {
            coefficients,
            x_start,
            x_end,
        } => {
            if coefficients.is_empty() {
                return Err(Error::invalid("polynomial needs at least one coefficient"));
            }
            if x_start == x_end {
                return Err(Error::invalid("polynomial domain is empty"));
            }
            let eval = |x: f64| coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c);
            (0..=n)
                .map(|i| {
                    let x = x_start + (x_end - x_start) * frac(i);
                    Vector3::new(x, eval(x), 0.0)
                })
                .collect()
        }
    };
    DiscretizedPath::from_points(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimitiveKind {
    Roll,
    Pivot,
    Slide,
}

impl PrimitiveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PrimitiveKind::Roll => "roll",
            PrimitiveKind::Pivot => "pivot",
            PrimitiveKind::Slide => "slide",
        }
    }
}

impl std::str::FromStr for PrimitiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roll" => Ok(PrimitiveKind::Roll),
            "pivot" => Ok(PrimitiveKind::Pivot),
            "slide" => Ok(PrimitiveKind::Slide),
            other => Err(Error::invalid(format!("unknown primitive `{other}`"))),
        }
    }
}

/// One motion primitive with its world-frame screws and sampled, non-penetrating poses.
///
/// Poses are reproducible from the screws: a roll maps `poses[0]` to `poses[1]` by
/// `S2·S1`; a pivot or slide sample at parameter `s` is `S^s · poses[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveStep {
    pub kind: PrimitiveKind,
    pub screws: Vec<ScrewParameters>,
    pub poses: Vec<UnitDualQuaternion>,
    pub contact_start: Vector3<f64>,
    pub contact_end: Vector3<f64>,
    /// Pivots between rolling phases (initial, intersection, final) rather than the
    /// small alignment pivots that follow a curve.
    pub transition: bool,
}

impl PrimitiveStep {
    pub fn start_pose(&self) -> UnitDualQuaternion {
        self.poses[0]
    }

    pub fn end_pose(&self) -> UnitDualQuaternion {
        *self.poses.last().expect("primitive has poses")
    }

    /// Net world-frame displacement from the first to the last pose.
    pub fn displacement(&self) -> UnitDualQuaternion {
        match self.kind {
            PrimitiveKind::Roll => self.screws[1].to_dual_quaternion() * self.screws[0].to_dual_quaternion(),
            _ => self.screws[0].to_dual_quaternion(),
        }
    }

    /// Pose at fraction `s ∈ [0, 1]` of the primitive along a single constant screw.
    ///
    /// A roll is interpolated along the one screw taking its start to its end pose, so the
    /// penetrating intermediate configuration between its two rotations is never produced.
    pub fn pose_at(&self, s: f64) -> UnitDualQuaternion {
        let start = self.start_pose();
        match self.kind {
            PrimitiveKind::Roll => (screw::screw_power(&self.displacement(), s) * start).renormalized(),
            _ => (self.screws[0].scaled(s).to_dual_quaternion() * start).renormalized(),
        }
    }

    /// Contact point at fraction `s`; fixed for pivots.
    pub fn contact_at(&self, s: f64) -> Vector3<f64> {
        self.contact_start + (self.contact_end - self.contact_start) * s
    }

    /// Rotation angle of the primitive (sum over both screws for a roll).
    pub fn rotation_angle(&self) -> f64 {
        self.screws.iter().map(|s| s.theta.abs()).sum()
    }

    /// Arc-equivalent length used to apportion time: contact travel for rolls and slides,
    /// `|angle|·R` for pivots.
    pub fn parameter_length(&self, radius: f64) -> f64 {
        match self.kind {
            PrimitiveKind::Roll => radius * self.rotation_angle(),
            PrimitiveKind::Slide => self.screws[0].d.abs(),
            PrimitiveKind::Pivot => radius * self.screws[0].theta.abs(),
        }
    }
}

/// World-frame screw taking `from` to `to`, or a zero rotation about `fallback_axis`
/// through `point` when they coincide.
fn world_screw(from: &UnitDualQuaternion, to: &UnitDualQuaternion, point: &Vector3<f64>) -> ScrewParameters {
    let from = if from.real().dot(&to.real()) < 0.0 {
        from.negate()
    } else {
        *from
    };
    match screw::extract_screw(&(*to * from.inverse())) {
        Ok(s) => s,
        Err(_) => ScrewParameters::rotation_about(&Vector3::z(), point, 0.0),
    }
}

fn sampled_pivot(
    from: &UnitDualQuaternion,
    to: &UnitDualQuaternion,
    point: &Vector3<f64>,
    samples: usize,
    transition: bool,
) -> PrimitiveStep {
    let samples = samples.max(2);
    let screw = world_screw(from, to, point);
    let interp = Sclerp::new(from, to);
    let mut poses: Vec<UnitDualQuaternion> = (0..samples)
        .map(|i| interp.at(i as f64 / (samples - 1) as f64).renormalized())
        .collect();
    poses[samples - 1] = *to;
    PrimitiveStep {
        kind: PrimitiveKind::Pivot,
        screws: vec![screw],
        poses,
        contact_start: *point,
        contact_end: *point,
        transition,
    }
}

/// Pivot from `from` to `to` about the fixed contact `point`.
///
/// A single ScLERP keeps the contact fixed but, when it mixes a tilt change with a turn
/// about the vertical, can dip the edge slightly below the plane. In that case the motion
/// goes through `via` (same contact, differing from each end by a pure turn or a pure
/// tilt) as two constant-screw pivots.
fn contact_pivot(
    geom: &CylinderGeometry,
    from: &UnitDualQuaternion,
    via: &UnitDualQuaternion,
    to: &UnitDualQuaternion,
    point: &Vector3<f64>,
    samples: Option<usize>,
) -> Vec<PrimitiveStep> {
    let pivot = |a: &UnitDualQuaternion, b: &UnitDualQuaternion| {
        let n = samples.unwrap_or_else(|| pivot_samples(world_screw(a, b, point).theta));
        sampled_pivot(a, b, point, n, true)
    };
    let direct = pivot(from, to);
    if min_edge_height(geom, std::slice::from_ref(&direct)) >= -PENETRATION_TOLERANCE {
        return vec![direct];
    }
    vec![pivot(from, via), pivot(via, to)]
}

/// Pivots about the first contact point `e1` from `start_pose` into the pose tilted by
/// `beta` whose edge tangent at `e1` is along `heading`.
pub fn initial_tilt_pivot(
    geom: &CylinderGeometry,
    start_pose: &UnitDualQuaternion,
    e1: &Vector3<f64>,
    heading: &Vector3<f64>,
    beta: f64,
    samples: Option<usize>,
) -> Result<(Vec<PrimitiveStep>, ContactState)> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&beta) {
        return Err(Error::invalid(format!("tilt angle must lie in [0, π/2], got {beta}")));
    }
    if e1.z.abs() > 1e-6 {
        return Err(Error::invalid("first contact point is off the support plane"));
    }
    let heading = rolling::horizontal_unit(heading)?;
    let body_point = geom.base_edge_point_at(start_pose, e1, 1e-6)?;
    let e1 = Vector3::new(e1.x, e1.y, 0.0);
    let target = geom.pose_on_edge(&body_point, &e1, &heading, beta);
    // turn first at the starting tilt, then tilt
    let via = geom.pose_on_edge(&body_point, &e1, &heading, geom.tilt_of(start_pose));
    let steps = contact_pivot(geom, start_pose, &via, &target, &e1, samples);
    let state = ContactState {
        contact_point: e1,
        heading,
        pose: target,
    };
    Ok((steps, state))
}

/// Pivots about the vertical axis through the current contact point by `gamma`.
pub fn alignment_pivot(
    state: &ContactState,
    gamma: f64,
    samples: Option<usize>,
) -> Result<(PrimitiveStep, ContactState)> {
    if !(gamma.abs() < std::f64::consts::PI) {
        return Err(Error::invalid(format!("pivot angle must satisfy |γ| < π, got {gamma}")));
    }
    Ok(vertical_pivot(
        state,
        gamma,
        samples.unwrap_or_else(|| pivot_samples(gamma)),
        false,
    ))
}

fn vertical_pivot(state: &ContactState, gamma: f64, samples: usize, transition: bool) -> (PrimitiveStep, ContactState) {
    let screw = ScrewParameters::rotation_about(&Vector3::z(), &state.contact_point, gamma);
    let samples = samples.max(2);
    let poses = (0..samples)
        .map(|i| {
            let s = i as f64 / (samples - 1) as f64;
            (screw.scaled(s).to_dual_quaternion() * state.pose).renormalized()
        })
        .collect::<Vec<_>>();
    let heading = Quaternion::from_axis_angle(&Vector3::z(), gamma).rotate(&state.heading);
    let end = ContactState {
        contact_point: state.contact_point,
        heading: Vector3::new(heading.x, heading.y, 0.0).normalize(),
        pose: *poses.last().expect("at least two samples"),
    };
    let step = PrimitiveStep {
        kind: PrimitiveKind::Pivot,
        screws: vec![screw],
        poses,
        contact_start: state.contact_point,
        contact_end: state.contact_point,
        transition,
    };
    (step, end)
}

/// Intersection pivot between two back-and-forth lines: rotates by `gamma` about the
/// vertical through the contact and flags the step as a phase transition.
pub(crate) fn transition_pivot(state: &ContactState, gamma: f64) -> (PrimitiveStep, ContactState) {
    vertical_pivot(state, gamma, pivot_samples(gamma), true)
}

/// Upright pose reached by un-tilting about the edge tangent at the current contact,
/// then turning by `yaw` about the vertical through the contact.
pub fn upright_at_contact(geom: &CylinderGeometry, state: &ContactState, yaw: f64) -> Result<UnitDualQuaternion> {
    let body_point = geom.base_edge_point_at(&state.pose, &state.contact_point, 1e-6)?;
    let upright = geom.pose_on_edge(&body_point, &state.contact_point, &state.heading, 0.0);
    Ok(ScrewParameters::rotation_about(&Vector3::z(), &state.contact_point, yaw).to_dual_quaternion() * upright)
}

/// Final pivot into `final_pose`, which must hold the current contact's body point at the
/// same place; `None` settles upright in place.
pub fn final_pivot(
    geom: &CylinderGeometry,
    state: &ContactState,
    final_pose: Option<&UnitDualQuaternion>,
) -> Result<Vec<PrimitiveStep>> {
    let target = match final_pose {
        Some(pose) => {
            let body_point = state.pose.inverse().transform_point(&state.contact_point);
            let reached = pose.transform_point(&body_point);
            let miss = (reached - state.contact_point).norm();
            if miss > 1e-6 {
                return Err(Error::ContactMismatch(format!(
                    "final configuration places the contact edge point {miss:.3e} m away from the path end"
                )));
            }
            *pose
        }
        None => upright_at_contact(geom, state, 0.0)?,
    };
    // tilt first along the current tangent, then turn
    let body_point = geom.base_edge_point_at(&state.pose, &state.contact_point, 1e-6)?;
    let via = geom.pose_on_edge(&body_point, &state.contact_point, &state.heading, geom.tilt_of(&target));
    Ok(contact_pivot(
        geom,
        &state.pose,
        &via,
        &target,
        &state.contact_point,
        None,
    ))
}

/// Rolls from the current contact to `end` in `n` elements, one [`PrimitiveStep`] each.
pub fn roll_line(
    geom: &CylinderGeometry,
    state: &ContactState,
    end: &Vector3<f64>,
    n: usize,
) -> Result<(Vec<PrimitiveStep>, ContactState)> {
    let length = (end - state.contact_point).norm();
    let mut start = *state;
    start.heading = (end - state.contact_point) / length;
    let plans = rolling::plan_straight_elements(&start, length, n, geom)?;
    let mut steps = Vec::with_capacity(n);
    let mut pose = start.pose;
    let mut contact = start.contact_point;
    for plan in &plans {
        steps.push(roll_step(pose, contact, plan));
        pose = plan.end_state.pose;
        contact = plan.end_state.contact_point;
    }
    let end_state = plans.last().map(|p| p.end_state).unwrap_or(start);
    Ok((steps, end_state))
}

fn roll_step(start: UnitDualQuaternion, contact: Vector3<f64>, plan: &rolling::RollSegmentPlan) -> PrimitiveStep {
    PrimitiveStep {
        kind: PrimitiveKind::Roll,
        screws: vec![plan.screw1, plan.screw2],
        poses: vec![start, plan.end_state.pose],
        contact_start: contact,
        contact_end: plan.end_state.contact_point,
        transition: false,
    }
}

fn slide_step(state: &ContactState, end: &Vector3<f64>) -> (PrimitiveStep, ContactState) {
    let delta = end - state.contact_point;
    let screw = ScrewParameters::translation_along(&delta, delta.norm());
    let pose = (screw.to_dual_quaternion() * state.pose).renormalized();
    let step = PrimitiveStep {
        kind: PrimitiveKind::Slide,
        screws: vec![screw],
        poses: vec![state.pose, pose],
        contact_start: state.contact_point,
        contact_end: *end,
        transition: false,
    };
    let next = ContactState {
        contact_point: *end,
        heading: delta.normalize(),
        pose,
    };
    (step, next)
}

/// Inputs shared by the curve planners.
#[derive(Debug, Clone)]
pub struct PlanProblem {
    pub start_pose: UnitDualQuaternion,
    /// `None` settles the object upright at the path end.
    pub final_pose: Option<UnitDualQuaternion>,
    pub path: DiscretizedPath,
    pub geom: CylinderGeometry,
    pub beta: f64,
}

#[derive(Clone, Copy)]
enum Travel {
    Roll,
    Slide,
}

fn plan_along(problem: &PlanProblem, travel: Travel) -> Result<Vec<PrimitiveStep>> {
    let path = &problem.path;
    let geom = &problem.geom;
    if matches!(travel, Travel::Roll) && !(problem.beta > 0.0) {
        return Err(Error::invalid("edge rolling needs a positive tilt angle"));
    }
    let (mut steps, mut state) = initial_tilt_pivot(
        geom,
        &problem.start_pose,
        &path.start(),
        &path.direction(0),
        problem.beta,
        None,
    )?;
    steps.reserve(3 * path.segment_count());
    for i in 0..path.segment_count() {
        state.heading = path.direction(i);
        let end = path.points()[i + 1];
        match travel {
            Travel::Roll => {
                let plan = rolling::roll_to(&state, end, geom)?;
                steps.push(roll_step(state.pose, state.contact_point, &plan));
                state = plan.end_state;
            }
            Travel::Slide => {
                let (step, next) = slide_step(&state, &end);
                steps.push(step);
                state = next;
            }
        }
        if let Some(&gamma) = path.turn_angles().get(i) {
            if gamma.abs() > TURN_EPSILON {
                let (step, next) = alignment_pivot(&state, gamma, None)?;
                steps.push(step);
                state = next;
            }
        }
    }
    steps.extend(final_pivot(geom, &state, problem.final_pose.as_ref())?);
    Ok(steps)
}

/// Edge-rolls along the discretized path.
pub fn plan_curved_roll(problem: &PlanProblem) -> Result<Vec<PrimitiveStep>> {
    plan_along(problem, Travel::Roll)
}

/// Slides along the discretized path with pure translations between the pivots.
pub fn plan_curved_slide(problem: &PlanProblem) -> Result<Vec<PrimitiveStep>> {
    plan_along(problem, Travel::Slide)
}

/// Lowest edge height over every pose of a plan.
pub fn min_edge_height(geom: &CylinderGeometry, steps: &[PrimitiveStep]) -> f64 {
    steps
        .iter()
        .flat_map(|s| s.poses.iter())
        .map(|p| geom.min_edge_height(p))
        .fold(f64::INFINITY, f64::min)
}
