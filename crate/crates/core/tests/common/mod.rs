#![allow(dead_code)]

use edgeroll::{Quaternion, ScrewParameters, UnitDualQuaternion};
use nalgebra::Vector3;
use rand::Rng;

pub fn unit_vector<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn point<R: Rng>(rng: &mut R, extent: f64) -> Vector3<f64> {
    Vector3::new(
        rng.gen_range(-extent..extent),
        rng.gen_range(-extent..extent),
        rng.gen_range(-extent..extent),
    )
}

pub fn rotation<R: Rng>(rng: &mut R) -> Quaternion {
    Quaternion::from_axis_angle(
        &unit_vector(rng),
        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
}

pub fn pose<R: Rng>(rng: &mut R) -> UnitDualQuaternion {
    UnitDualQuaternion::try_from_pose(point(rng, 2.0), rotation(rng)).expect("unit rotation")
}

/// Screw with `θ ∈ (0.01, π − 0.01)` about a random line.
pub fn screw<R: Rng>(rng: &mut R) -> ScrewParameters {
    let u = unit_vector(rng);
    let through = point(rng, 1.0);
    let theta = rng.gen_range(0.01..std::f64::consts::PI - 0.01);
    let d = rng.gen_range(-1.0..1.0);
    ScrewParameters::new(theta, d, u, through.cross(&u)).expect("valid screw")
}
