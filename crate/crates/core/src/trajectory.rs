//! Time scaling of primitive sequences into controller-rate pose streams, and their
//! CSV / JSONL serialization.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::curve::{PrimitiveKind, PrimitiveStep};
use crate::error::{Error, Result};
use crate::screw::{Pose, Quaternion, UnitDualQuaternion};

/// Cubic time scaling `s = 3τ² − 2τ³` over `round(duration·rate)` samples, with the last
/// sample at `s = 1`.
pub fn cubic_time_scale(duration: f64, rate: f64) -> Result<Vec<f64>> {
    if !(duration > 0.0 && duration.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid("duration and rate must be positive"));
    }
    Ok(cubic_samples(((duration * rate).round() as usize).max(2)))
}

fn cubic_samples(n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|i| {
            let tau = i as f64 / (n - 1) as f64;
            tau * tau * (3.0 - 2.0 * tau)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    /// Time spent rolling, sliding and aligning along the path.
    pub duration_s: f64,
    pub rate_hz: f64,
    /// Time for each pivot between rolling phases.
    pub pivot_duration_s: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            duration_s: 20.0,
            rate_hz: 1000.0,
            pivot_duration_s: 3.0,
        }
    }
}

impl Timing {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::invalid(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(Error::invalid(format!("rate must be positive, got {}", self.rate_hz)));
        }
        if !(self.pivot_duration_s > 0.0 && self.pivot_duration_s.is_finite()) {
            return Err(Error::invalid(format!(
                "pivot duration must be positive, got {}",
                self.pivot_duration_s
            )));
        }
        Ok(())
    }

    pub fn path_samples(&self) -> usize {
        ((self.duration_s * self.rate_hz).round() as usize).max(2)
    }

    pub fn pivot_samples(&self) -> usize {
        ((self.pivot_duration_s * self.rate_hz).round() as usize).max(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub object_pose: Pose,
    pub ee_pose: Option<Pose>,
    pub primitive: PrimitiveKind,
    pub contact: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlannedTrajectory {
    pub samples: Vec<TrajectorySample>,
}

impl PlannedTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Consecutive steps sharing one cubic time profile.
struct Phase<'a> {
    steps: &'a [PrimitiveStep],
    /// Cumulative parameter length at the end of each step.
    ends: Vec<f64>,
    transition: bool,
}

impl Phase<'_> {
    fn length(&self) -> f64 {
        *self.ends.last().unwrap_or(&0.0)
    }

    /// Step index and local fraction at phase fraction `s`.
    fn locate(&self, s: f64) -> (usize, f64) {
        let total = self.length();
        if total <= 0.0 {
            return (self.steps.len() - 1, s);
        }
        let target = s * total;
        let i = self.ends.partition_point(|e| *e < target).min(self.steps.len() - 1);
        let begin = if i == 0 { 0.0 } else { self.ends[i - 1] };
        let span = self.ends[i] - begin;
        let frac = if span > 0.0 {
            ((target - begin) / span).clamp(0.0, 1.0)
        } else {
            1.0
        };
        (i, frac)
    }
}

fn phases(plan: &[PrimitiveStep], radius: f64) -> Vec<Phase<'_>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < plan.len() {
        let transition = plan[i].transition;
        let mut j = i + 1;
        if !transition {
            while j < plan.len() && !plan[j].transition {
                j += 1;
            }
        }
        let steps = &plan[i..j];
        let mut acc = 0.0;
        let ends = steps
            .iter()
            .map(|s| {
                acc += s.parameter_length(radius);
                acc
            })
            .collect();
        out.push(Phase {
            steps,
            ends,
            transition,
        });
        i = j;
    }
    out
}

/// Splits `total` samples across `weights` by largest remainder, at least two each.
fn allot(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Vec::new();
    }
    if !(sum > 0.0) {
        let mut even = vec![total / weights.len(); weights.len()];
        even[0] += total % weights.len();
        return even.into_iter().map(|n| n.max(2)).collect();
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = total.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    counts.into_iter().map(|n| n.max(2)).collect()
}

/// Samples the plan at the controller rate.
///
/// Pivots between rolling phases each take `pivot_duration_s`; the remaining phases share
/// `duration_s` in proportion to their parameter length. Every phase follows its own cubic
/// time scaling, and poses inside a primitive come from powers of its screw. With a grasp
/// transform `g`, the end-effector pose is `object ∘ g`.
pub fn emit_trajectory(
    plan: &[PrimitiveStep],
    radius: f64,
    timing: &Timing,
    grasp: Option<&UnitDualQuaternion>,
) -> Result<PlannedTrajectory> {
    timing.validate()?;
    if plan.is_empty() {
        return Err(Error::invalid("plan has no primitives"));
    }
    let phases = phases(plan, radius);
    let path_weights: Vec<f64> = phases.iter().filter(|p| !p.transition).map(|p| p.length()).collect();
    let mut path_counts = allot(timing.path_samples(), &path_weights).into_iter();

    let mut samples = Vec::new();
    for phase in &phases {
        let n = if phase.transition {
            timing.pivot_samples()
        } else {
            path_counts.next().expect("one count per path phase")
        };
        for s in cubic_samples(n) {
            let (i, frac) = phase.locate(s);
            let step = &phase.steps[i];
            let object_pose = step.pose_at(frac).to_pose();
            // composed from the reported object pose so the two streams agree exactly
            let ee_pose = grasp.map(|g| (UnitDualQuaternion::from_pose(&object_pose) * *g).to_pose());
            samples.push(TrajectorySample {
                t: samples.len() as f64 / timing.rate_hz,
                object_pose,
                ee_pose,
                primitive: step.kind,
                contact: step.contact_at(frac),
            });
        }
    }
    Ok(PlannedTrajectory { samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Jsonl,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "jsonl" => Ok(ExportFormat::Jsonl),
            other => Err(Error::invalid(format!(
                "unknown format `{other}` (expected csv or jsonl)"
            ))),
        }
    }
}

const BASE_COLUMNS: [&str; 12] = [
    "t",
    "px",
    "py",
    "pz",
    "qw",
    "qx",
    "qy",
    "qz",
    "primitive",
    "cx",
    "cy",
    "cz",
];
const EE_COLUMNS: [&str; 7] = ["ee_px", "ee_py", "ee_pz", "ee_qw", "ee_qx", "ee_qy", "ee_qz"];

/// Twelve significant digits.
fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

fn round12(v: f64) -> f64 {
    fmt12(v).parse().expect("formatted float parses")
}

fn pose_values(p: &Pose) -> [f64; 7] {
    let q = p.rotation;
    [p.position.x, p.position.y, p.position.z, q.w, q.x, q.y, q.z]
}

fn pose_from(v: &[f64]) -> Pose {
    Pose {
        position: Vector3::new(v[0], v[1], v[2]),
        rotation: Quaternion::new(v[3], v[4], v[5], v[6]),
    }
}

#[derive(Serialize, Deserialize)]
struct JsonSample {
    t: f64,
    px: f64,
    py: f64,
    pz: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
    primitive: String,
    cx: f64,
    cy: f64,
    cz: f64,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    ee: Option<JsonEe>,
}

#[derive(Serialize, Deserialize)]
struct JsonEe {
    ee_px: f64,
    ee_py: f64,
    ee_pz: f64,
    ee_qw: f64,
    ee_qx: f64,
    ee_qy: f64,
    ee_qz: f64,
}

/// Serializes the trajectory; identical trajectories give identical bytes.
pub fn export(traj: &PlannedTrajectory, format: ExportFormat) -> String {
    match format {
        ExportFormat::Csv => export_csv(traj),
        ExportFormat::Jsonl => export_jsonl(traj),
    }
}

fn export_csv(traj: &PlannedTrajectory) -> String {
    let with_ee = traj.samples.first().is_some_and(|s| s.ee_pose.is_some());
    let mut out = BASE_COLUMNS.join(",");
    if with_ee {
        out.push(',');
        out.push_str(&EE_COLUMNS.join(","));
    }
    out.push('\n');
    for s in &traj.samples {
        let mut fields: Vec<String> = vec![fmt12(s.t)];
        fields.extend(pose_values(&s.object_pose).iter().map(|v| fmt12(*v)));
        fields.push(s.primitive.as_str().to_string());
        fields.extend(s.contact.iter().map(|v| fmt12(*v)));
        if let (true, Some(ee)) = (with_ee, s.ee_pose.as_ref()) {
            fields.extend(pose_values(ee).iter().map(|v| fmt12(*v)));
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

fn export_jsonl(traj: &PlannedTrajectory) -> String {
    let mut out = String::new();
    for s in &traj.samples {
        let [px, py, pz, qw, qx, qy, qz] = pose_values(&s.object_pose).map(round12);
        let ee = s.ee_pose.as_ref().map(|p| {
            let [ee_px, ee_py, ee_pz, ee_qw, ee_qx, ee_qy, ee_qz] = pose_values(p).map(round12);
            JsonEe {
                ee_px,
                ee_py,
                ee_pz,
                ee_qw,
                ee_qx,
                ee_qy,
                ee_qz,
            }
        });
        let row = JsonSample {
            t: round12(s.t),
            px,
            py,
            pz,
            qw,
            qx,
            qy,
            qz,
            primitive: s.primitive.as_str().to_string(),
            cx: round12(s.contact.x),
            cy: round12(s.contact.y),
            cz: round12(s.contact.z),
            ee,
        };
        out.push_str(&serde_json::to_string(&row).expect("sample serializes"));
        out.push('\n');
    }
    out
}

pub fn parse(text: &str, format: ExportFormat) -> Result<PlannedTrajectory> {
    match format {
        ExportFormat::Csv => parse_csv(text),
        ExportFormat::Jsonl => parse_jsonl(text),
    }
}

fn parse_csv(text: &str) -> Result<PlannedTrajectory> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::invalid("missing CSV header"))?
        .split(',')
        .collect();
    let with_ee = header.len() == BASE_COLUMNS.len() + EE_COLUMNS.len();
    let expected: Vec<&str> = BASE_COLUMNS
        .iter()
        .chain(if with_ee { &EE_COLUMNS[..] } else { &[] })
        .copied()
        .collect();
    if header != expected {
        return Err(Error::invalid("unexpected CSV header"));
    }
    let mut samples = Vec::new();
    for (row, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected.len() {
            return Err(Error::invalid(format!(
                "row {}: expected {} fields",
                row + 1,
                expected.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| Error::invalid(format!("row {}: `{}` is not a number", row + 1, fields[i])))
        };
        let pose: Vec<f64> = (1..8).map(num).collect::<Result<_>>()?;
        let contact: Vec<f64> = (9..12).map(num).collect::<Result<_>>()?;
        let ee = if with_ee {
            Some(pose_from(&(12..19).map(num).collect::<Result<Vec<_>>>()?))
        } else {
            None
        };
        samples.push(TrajectorySample {
            t: num(0)?,
            object_pose: pose_from(&pose),
            ee_pose: ee,
            primitive: fields[8].parse()?,
            contact: Vector3::new(contact[0], contact[1], contact[2]),
        });
    }
    Ok(PlannedTrajectory { samples })
}

fn parse_jsonl(text: &str) -> Result<PlannedTrajectory> {
    let mut samples = Vec::new();
    for (row, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let s: JsonSample = serde_json::from_str(line).map_err(|e| Error::invalid(format!("line {}: {e}", row + 1)))?;
        samples.push(TrajectorySample {
            t: s.t,
            object_pose: pose_from(&[s.px, s.py, s.pz, s.qw, s.qx, s.qy, s.qz]),
            ee_pose: s
                .ee
                .map(|e| pose_from(&[e.ee_px, e.ee_py, e.ee_pz, e.ee_qw, e.ee_qx, e.ee_qy, e.ee_qz])),
            primitive: s.primitive.parse()?,
            contact: Vector3::new(s.cx, s.cy, s.cz),
        });
    }
    Ok(PlannedTrajectory { samples })
}

pub fn write_trajectory(traj: &PlannedTrajectory, path: &Path, format: ExportFormat) -> Result<()> {
    std::fs::write(path, export(traj, format)).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve;
    use crate::cylinder::CylinderGeometry;
    use crate::rolling::ContactState;
    use crate::screw::ScrewParameters;

    fn geom() -> CylinderGeometry {
        CylinderGeometry::new(0.037, 0.234).unwrap()
    }

    fn line_plan(n: usize) -> Vec<PrimitiveStep> {
        let g = geom();
        let s = ContactState::tilted(&g, Vector3::zeros(), Vector3::x(), g.stability_tilt()).unwrap();
        curve::roll_line(&g, &s, &Vector3::new(0.1368, 0.0, 0.0), n).unwrap().0
    }

    #[test]
    fn cubic_examples() {
        let s = cubic_time_scale(20.0, 1000.0).unwrap();
        assert_eq!(s.len(), 20_000);
        assert_eq!(s[0], 0.0);
        assert_eq!(*s.last().unwrap(), 1.0);
        let odd = cubic_samples(101);
        assert!((odd[50] - 0.5).abs() < 1e-15);
        let first = s[1] - s[0];
        let last = s[s.len() - 1] - s[s.len() - 2];
        assert!(first < 2.0 / 20_000.0 && last < 2.0 / 20_000.0);
        assert!(cubic_time_scale(0.0, 1000.0).is_err());
    }

    #[test]
    fn allotment_is_exact() {
        let counts = allot(20_000, &[0.1368, 0.1361, 0.1372, 0.1361, 0.1368]);
        assert_eq!(counts.iter().sum::<usize>(), 20_000);
        assert_eq!(counts[0], counts[4]);
        assert_eq!(allot(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
    }

    #[test]
    fn rolling_only_plan_uses_the_rolling_time() {
        let traj = emit_trajectory(&line_plan(100), 0.037, &Timing::default(), None).unwrap();
        assert_eq!(traj.len(), 20_000);
        assert_eq!(traj.samples[19_999].t, 19.999);
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn trajectory_starts_and_ends_on_the_plan() {
        let plan = line_plan(50);
        let traj = emit_trajectory(&plan, 0.037, &Timing::default(), None).unwrap();
        let first = UnitDualQuaternion::from_pose(&traj.samples[0].object_pose);
        let last = UnitDualQuaternion::from_pose(&traj.samples.last().unwrap().object_pose);
        assert!(first.approx_eq_up_to_sign(&plan[0].start_pose(), 1e-12));
        assert!(last.approx_eq_up_to_sign(&plan.last().unwrap().end_pose(), 1e-12));
        assert!((traj.samples.last().unwrap().contact - Vector3::new(0.1368, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pivots_get_their_own_time() {
        let g = geom();
        let start = g.upright_pose(&Vector3::zeros(), &Vector3::x());
        let path = curve::discretize_curve(
            &curve::CurveDescriptor::Line {
                start: [0.0, 0.0],
                end: [0.1, 0.0],
            },
            20,
        )
        .unwrap();
        let problem = curve::PlanProblem {
            start_pose: start,
            final_pose: None,
            path,
            geom: g,
            beta: 0.3,
        };
        let plan = curve::plan_curved_roll(&problem).unwrap();
        let timing = Timing {
            duration_s: 2.0,
            rate_hz: 100.0,
            pivot_duration_s: 0.5,
        };
        let traj = emit_trajectory(&plan, 0.037, &timing, None).unwrap();
        assert_eq!(traj.len(), 50 + 200 + 50);
        assert!(traj.samples[..50].iter().all(|s| s.primitive == PrimitiveKind::Pivot));
        assert!(traj.samples[50..250].iter().all(|s| s.primitive == PrimitiveKind::Roll));
    }

    #[test]
    fn identity_grasp_copies_object_stream() {
        let traj = emit_trajectory(
            &line_plan(20),
            0.037,
            &Timing::default(),
            Some(&UnitDualQuaternion::identity()),
        )
        .unwrap();
        for s in &traj.samples {
            let ee = s.ee_pose.unwrap();
            assert!((ee.position - s.object_pose.position).norm() < 1e-15);
            assert!((ee.rotation - s.object_pose.rotation).norm() < 1e-15);
        }
    }

    #[test]
    fn grasp_offset_is_constant() {
        let g = ScrewParameters::rotation_about(
            &Vector3::new(0.3, -0.2, 0.9).normalize(),
            &Vector3::new(0.01, 0.02, 0.1),
            0.8,
        )
        .to_dual_quaternion();
        let traj = emit_trajectory(&line_plan(20), 0.037, &Timing::default(), Some(&g)).unwrap();
        for s in &traj.samples {
            let o = UnitDualQuaternion::from_pose(&s.object_pose);
            let e = UnitDualQuaternion::from_pose(&s.ee_pose.unwrap());
            assert!((o.inverse() * e).approx_eq_up_to_sign(&g, 1e-12));
        }
    }

    #[test]
    fn export_round_trips_byte_for_byte() {
        let g = ScrewParameters::translation_along(&Vector3::z(), 0.1).to_dual_quaternion();
        let traj = emit_trajectory(
            &line_plan(20),
            0.037,
            &Timing {
                duration_s: 0.5,
                ..Timing::default()
            },
            Some(&g),
        )
        .unwrap();
        for format in [ExportFormat::Csv, ExportFormat::Jsonl] {
            let text = export(&traj, format);
            let again = export(&parse(&text, format).unwrap(), format);
            assert_eq!(text, again);
        }
        let csv = export(&traj, ExportFormat::Csv);
        assert_eq!(csv.lines().count(), traj.len() + 1);
        assert!(csv.starts_with("t,px,py,pz,qw,qx,qy,qz,primitive,cx,cy,cz,ee_px"));
    }

    #[test]
    fn empty_trajectory_is_header_only() {
        let csv = export(&PlannedTrajectory::default(), ExportFormat::Csv);
        assert_eq!(csv, "t,px,py,pz,qw,qx,qy,qz,primitive,cx,cy,cz\n");
        assert!(parse(&csv, ExportFormat::Csv).unwrap().is_empty());
        assert_eq!(export(&PlannedTrajectory::default(), ExportFormat::Jsonl), "");
    }

    #[test]
    fn malformed_input_rejected() {
        assert!(parse("a,b\n", ExportFormat::Csv).is_err());
        assert!(parse("{\"t\": 1}\n", ExportFormat::Jsonl).is_err());
        assert!("xml".parse::<ExportFormat>().is_err());
    }
}
