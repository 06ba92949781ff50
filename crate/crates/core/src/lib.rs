//! Edge-rolling, pivoting and sliding motion planning for cylindrical objects.
//!
//! Every primitive is a constant screw displacement expressed with unit dual
//! quaternions: rolling is approximated by pairs of rotations about axes through
//! consecutive contact points, pivoting and alignment use screw linear interpolation,
//! and sliding is a pure translation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod backforth;
pub mod cli;
pub mod config;
pub mod curve;
pub mod cylinder;
pub mod error;
pub mod optim;
pub mod rolling;
pub mod screw;
pub mod trajectory;

pub use cylinder::CylinderGeometry;
pub use error::{Error, Result};
pub use rolling::ContactState;
pub use screw::{DualQuaternion, Pose, Quaternion, ScrewParameters, UnitDualQuaternion};
