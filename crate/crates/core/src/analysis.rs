//! Slippage of the rolling approximation, tilt and joint-range helpers.

use std::fmt::Write as _;

use crate::cylinder::CylinderGeometry;
use crate::error::{Error, Result};
use crate::rolling::{self, ContactState};
use crate::screw::{Quaternion, UNIT_TOLERANCE};

/// Rotation angle in `[0, π]` between two unit quaternions, insensitive to their sign.
///
/// Evaluated as `2·atan2(|vec(q1*·q2)|, |scalar(q1*·q2)|)`, which equals
/// `2·acos(|q1·q2|)` but stays accurate for nearly equal rotations.
pub fn quaternion_angle(q1: &Quaternion, q2: &Quaternion) -> Result<f64> {
    for q in [q1, q2] {
        if !q.is_unit(UNIT_TOLERANCE) {
            return Err(Error::invalid(format!("quaternion norm {} is not 1", q.norm())));
        }
    }
    let rel = q1.conjugate() * *q2;
    Ok(2.0 * rel.vector().norm().atan2(rel.w.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlippageReport {
    pub n: usize,
    pub commanded_length: f64,
    /// `R` times the accumulated rotation of the object.
    pub rolled_arc: f64,
    pub slippage: f64,
    /// The rolled arc exceeds the commanded length.
    pub overshoot: bool,
}

impl SlippageReport {
    pub fn element_length(&self) -> f64 {
        self.commanded_length / self.n as f64
    }
}

/// Rolls `length` in `n` elements from `start` and compares the arc implied by the
/// object's rotation with the distance travelled by the contact point.
///
/// The rotation is accumulated element by element, since the net rotation of a long
/// roll can exceed π and would alias.
pub fn slippage_for_n(length: f64, n: usize, geom: &CylinderGeometry, start: &ContactState) -> Result<SlippageReport> {
    if n == 0 {
        return Err(Error::invalid("segment count must be at least 1"));
    }
    let states = rolling::plan_straight_line(start, length, n, geom)?;
    let mut angle = 0.0;
    for w in states.windows(2) {
        angle += quaternion_angle(&w[0].pose.rotation(), &w[1].pose.rotation())?;
    }
    let rolled_arc = geom.radius() * angle;
    Ok(SlippageReport {
        n,
        commanded_length: length,
        rolled_arc,
        slippage: (length - rolled_arc).abs(),
        overshoot: rolled_arc > length,
    })
}

/// Closed-form slippage `2NR·asin(L/(2RN)) − L` of `n` equal elements.
pub fn analytic_slippage(length: f64, n: usize, radius: f64) -> Result<f64> {
    let dtheta = rolling::element_angle(length / n as f64, radius)?;
    Ok(2.0 * n as f64 * radius * dtheta - length)
}

/// Tilt placing the centre of mass above the contact point.
pub fn stability_tilt(radius: f64, height: f64) -> Result<f64> {
    Ok(CylinderGeometry::new(radius, height)?.stability_tilt())
}

/// Longest straight roll permitted by a wrist joint range of `dtheta_max`.
pub fn lmax_from_joint_range(radius: f64, dtheta_max: f64) -> Result<f64> {
    if !(radius > 0.0) || !(dtheta_max >= 0.0) {
        return Err(Error::invalid(
            "radius must be positive and the joint range non-negative",
        ));
    }
    Ok(radius * dtheta_max)
}

/// Slippage reports as CSV with columns `N,dx_mm,slippage_m`.
pub fn slippage_csv(reports: &[SlippageReport]) -> String {
    let mut out = String::from("N,dx_mm,slippage_m\n");
    for r in reports {
        let _ = writeln!(out, "{},{:.12e},{:.12e}", r.n, r.element_length() * 1e3, r.slippage);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    const L: f64 = 0.1368;

    fn setup() -> (CylinderGeometry, ContactState) {
        let g = CylinderGeometry::new(0.037, 0.234).unwrap();
        let s = ContactState::tilted(&g, Vector3::new(0.25, -0.5, 0.0), Vector3::x(), g.stability_tilt()).unwrap();
        (g, s)
    }

    #[test]
    fn angle_examples() {
        let q = Quaternion::from_axis_angle(&Vector3::new(1.0, 2.0, 3.0).normalize(), 0.7);
        assert!(quaternion_angle(&q, &q).unwrap() < 1e-15);
        assert!(quaternion_angle(&q, &-q).unwrap() < 1e-15);
        let z90 = Quaternion::from_axis_angle(&Vector3::z(), FRAC_PI_2);
        assert!((quaternion_angle(&Quaternion::identity(), &z90).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!(quaternion_angle(&Quaternion::new(2.0, 0.0, 0.0, 0.0), &q).is_err());
    }

    #[test]
    fn slippage_at_fifty_elements() {
        let (g, s) = setup();
        let r = slippage_for_n(L, 50, &g, &s).unwrap();
        assert!(r.slippage <= 0.032e-3);
        assert!((r.slippage - 3.1186805e-5).abs() < 1e-12, "{}", r.slippage);
        assert!(r.overshoot);
        let analytic = analytic_slippage(L, 50, 0.037).unwrap();
        assert!((r.slippage - analytic).abs() <= 1e-12 + 0.01 * analytic);
    }

    #[test]
    fn slippage_at_four_thousand_elements() {
        let (g, s) = setup();
        let r = slippage_for_n(L, 4000, &g, &s).unwrap();
        let series = L.powi(3) / (24.0 * 0.037f64.powi(2) * 4000f64.powi(2));
        assert!((series - 4.9e-9).abs() < 1e-10);
        assert!(
            (r.slippage - series).abs() < 0.01 * series,
            "{} vs {series}",
            r.slippage
        );
    }

    #[test]
    fn slippage_decreases_with_n() {
        let (g, s) = setup();
        let mut last = f64::INFINITY;
        for n in [2, 5, 10, 50, 100, 1000, 4000] {
            let r = slippage_for_n(L, n, &g, &s).unwrap();
            assert!(r.slippage <= last);
            last = r.slippage;
        }
    }

    #[test]
    fn one_element_longer_than_the_diameter_is_rejected() {
        let (g, s) = setup();
        assert!(matches!(slippage_for_n(L, 1, &g, &s), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn tilt_examples() {
        assert!((stability_tilt(0.05, 0.1).unwrap() - FRAC_PI_4).abs() < 1e-15);
        let b = stability_tilt(0.037, 0.234).unwrap();
        assert!((b - 0.306287869).abs() < 1e-9);
        assert_eq!(b, FRAC_PI_2 - (0.234f64 / 0.074).atan());
        assert!((stability_tilt(0.037, 1e-9).unwrap() - FRAC_PI_2).abs() < 1e-7);
    }

    #[test]
    fn lmax_examples() {
        assert!((lmax_from_joint_range(0.037, 2.0 * 2.8973).unwrap() - 0.2144).abs() < 1e-4);
        assert_eq!(lmax_from_joint_range(0.037, 0.0).unwrap(), 0.0);
        assert!((lmax_from_joint_range(0.037, 4.0).unwrap() - 0.148).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let (g, s) = setup();
        let r = slippage_for_n(L, 50, &g, &s).unwrap();
        let csv = slippage_csv(&[r]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("N,dx_mm,slippage_m"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "50");
        assert!((row[1].parse::<f64>().unwrap() - 2.736).abs() < 1e-12);
    }

    fn unit_quaternion() -> impl Strategy<Value = Quaternion> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("non-degenerate", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-3)
            .prop_map(|(w, x, y, z)| Quaternion::new(w, x, y, z).normalize())
    }

    proptest! {
        #[test]
        fn angle_is_a_metric(a in unit_quaternion(), b in unit_quaternion(), c in unit_quaternion()) {
            let ab = quaternion_angle(&a, &b).unwrap();
            let ba = quaternion_angle(&b, &a).unwrap();
            let bc = quaternion_angle(&b, &c).unwrap();
            let ac = quaternion_angle(&a, &c).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((0.0..=std::f64::consts::PI + 1e-12).contains(&ab));
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert!(quaternion_angle(&a, &a).unwrap() < 1e-12);
        }
    }
}
