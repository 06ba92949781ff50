//! TOML plan configuration.
//!
//! ```toml
//! [object]
//! radius = 0.037
//! height = 0.234
//!
//! [plan]
//! beta = "auto"        # or radians
//! segments = 10000     # elements per path (per line for back-and-forth)
//!
//! [curve]
//! type = "arc"
//! center = [0.5, -0.2]
//! radius = 0.1
//! start_angle = 3.141592653589793
//! end_angle = 0.0
//!
//! [timing]
//! duration_s = 20.0
//! rate_hz = 1000.0
//! ```

use std::path::Path;

use nalgebra::{Vector2, Vector3};
use serde::Deserialize;

use crate::analysis;
use crate::backforth::{self, BackForthProblem};
use crate::curve::CurveDescriptor;
use crate::cylinder::CylinderGeometry;
use crate::error::{Error, Result};
use crate::screw::{Quaternion, UnitDualQuaternion};
use crate::trajectory::{ExportFormat, Timing};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub object: Option<ObjectSection>,
    #[serde(default)]
    pub plan: PlanSection,
    pub line: Option<LineSection>,
    pub curve: Option<CurveSection>,
    pub backforth: Option<BackForthSection>,
    #[serde(default)]
    pub timing: TimingSection,
    pub grasp: Option<GraspSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub slippage: SlippageSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSection {
    pub radius: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum BetaSetting {
    Value(f64),
    Keyword(BetaKeyword),
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum BetaKeyword {
    Auto,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub beta: Option<BetaSetting>,
    pub segments: Option<usize>,
    /// Heading of the edge tangent at the first contact in the upright start pose (radians);
    /// defaults to the first path direction.
    pub start_heading: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSection {
    pub start: [f64; 2],
    pub end: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum CurveSection {
    Line {
        start: [f64; 2],
        end: [f64; 2],
    },
    Arc {
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
    Polynomial {
        coefficients: Vec<f64>,
        x_start: f64,
        x_end: f64,
    },
}

impl CurveSection {
    pub fn descriptor(&self) -> CurveDescriptor {
        match self.clone() {
            CurveSection::Line { start, end } => CurveDescriptor::Line { start, end },
            CurveSection::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => CurveDescriptor::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            },
            CurveSection::Polynomial {
                coefficients,
                x_start,
                x_end,
            } => CurveDescriptor::Polynomial {
                coefficients,
                x_start,
                x_end,
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackForthSection {
    pub p_o: [f64; 2],
    pub p_f: [f64; 2],
    pub alpha_max: Option<f64>,
    pub alpha_max_deg: Option<f64>,
    pub l_max: Option<f64>,
    /// Wrist joint range; gives `l_max = R·dtheta_max` when `l_max` is absent.
    pub dtheta_max: Option<f64>,
    pub w: Option<f64>,
    pub k: Option<usize>,
    pub starts: Option<usize>,
    pub max_k: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    pub duration_s: Option<f64>,
    pub rate_hz: Option<f64>,
    pub pivot_duration_s: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspSection {
    #[serde(default)]
    pub position: [f64; 3],
    /// `[w, x, y, z]`.
    pub rotation: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlippageSection {
    pub lengths: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
}

impl PlanConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn geometry(&self) -> Result<CylinderGeometry> {
        match &self.object {
            Some(o) => CylinderGeometry::new(o.radius, o.height),
            None => Err(Error::invalid(
                "config needs an [object] section with radius and height",
            )),
        }
    }

    /// Tilt for rolling; `"auto"` or an absent value gives the stability tilt.
    pub fn beta(&self, geom: &CylinderGeometry) -> Result<f64> {
        match self.plan.beta {
            None | Some(BetaSetting::Keyword(BetaKeyword::Auto)) => Ok(geom.stability_tilt()),
            Some(BetaSetting::Value(b)) if (0.0..=std::f64::consts::FRAC_PI_2).contains(&b) => Ok(b),
            Some(BetaSetting::Value(b)) => Err(Error::invalid(format!("beta must lie in [0, π/2], got {b}"))),
        }
    }

    pub fn timing(&self) -> Result<Timing> {
        let d = Timing::default();
        let t = Timing {
            duration_s: self.timing.duration_s.unwrap_or(d.duration_s),
            rate_hz: self.timing.rate_hz.unwrap_or(d.rate_hz),
            pivot_duration_s: self.timing.pivot_duration_s.unwrap_or(d.pivot_duration_s),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn grasp(&self) -> Result<Option<UnitDualQuaternion>> {
        let Some(g) = &self.grasp else { return Ok(None) };
        let [w, x, y, z] = g.rotation.unwrap_or([1.0, 0.0, 0.0, 0.0]);
        let q = Quaternion::new(w, x, y, z);
        if !(q.norm() > 0.0) || !q.norm().is_finite() {
            return Err(Error::invalid("grasp rotation must be a nonzero quaternion"));
        }
        let [px, py, pz] = g.position;
        UnitDualQuaternion::try_from_pose(Vector3::new(px, py, pz), q.normalize()).map(Some)
    }

    pub fn format(&self) -> Result<ExportFormat> {
        self.output.format.as_deref().unwrap_or("csv").parse()
    }

    pub fn back_forth_problem(&self, geom: &CylinderGeometry) -> Result<BackForthProblem> {
        let b = self
            .backforth
            .as_ref()
            .ok_or_else(|| Error::invalid("config needs a [backforth] section"))?;
        let alpha_max = match (b.alpha_max, b.alpha_max_deg) {
            (Some(a), None) => a,
            (None, Some(d)) => d.to_radians(),
            _ => return Err(Error::invalid("give exactly one of alpha_max or alpha_max_deg")),
        };
        let l_max = match (b.l_max, b.dtheta_max) {
            (Some(l), None) => l,
            (None, Some(dt)) => analysis::lmax_from_joint_range(geom.radius(), dt)?,
            _ => return Err(Error::invalid("give exactly one of l_max or dtheta_max")),
        };
        let problem = BackForthProblem {
            p_o: Vector2::from(b.p_o),
            p_f: Vector2::from(b.p_f),
            alpha_max,
            l_max,
            w: b.w.unwrap_or(backforth::DEFAULT_WEIGHT),
            k: b.k,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn solver_options(&self, seed: u64) -> backforth::SolverOptions {
        let d = backforth::SolverOptions::default();
        let b = self.backforth.as_ref();
        backforth::SolverOptions {
            starts: b.and_then(|b| b.starts).unwrap_or(d.starts),
            seed,
            max_k: b.and_then(|b| b.max_k).unwrap_or(d.max_k),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BACKFORTH: &str = r#"
[object]
radius = 0.037
height = 0.234

[plan]
beta = "auto"

[backforth]
p_o = [0.25, -0.5]
p_f = [0.6, -0.25]
alpha_max_deg = 75.0
l_max = 0.1512

[grasp]
position = [0.0, 0.0, 0.2]
"#;

    #[test]
    fn parses_back_and_forth_config() {
        let c = PlanConfig::from_toml(BACKFORTH).unwrap();
        let g = c.geometry().unwrap();
        assert_eq!(c.beta(&g).unwrap(), g.stability_tilt());
        let p = c.back_forth_problem(&g).unwrap();
        assert!((p.alpha_max - 75f64.to_radians()).abs() < 1e-15);
        assert_eq!(p.w, backforth::DEFAULT_WEIGHT);
        assert_eq!(c.timing().unwrap(), Timing::default());
        let grasp = c.grasp().unwrap().unwrap();
        assert!((grasp.translation() - Vector3::new(0.0, 0.0, 0.2)).norm() < 1e-15);
        assert_eq!(c.format().unwrap(), ExportFormat::Csv);
    }

    #[test]
    fn joint_range_gives_lmax() {
        let text = BACKFORTH.replace("l_max = 0.1512", "dtheta_max = 4.0");
        let c = PlanConfig::from_toml(&text).unwrap();
        let p = c.back_forth_problem(&c.geometry().unwrap()).unwrap();
        assert!((p.l_max - 0.148).abs() < 1e-15);
    }

    #[test]
    fn curve_sections() {
        let c = PlanConfig::from_toml(
            "[object]\nradius = 0.037\nheight = 0.234\n[plan]\nbeta = 0.2\n[curve]\ntype = \"polynomial\"\ncoefficients = [0.0, 1.0]\nx_start = 0.0\nx_end = 0.1\n",
        )
        .unwrap();
        assert!(matches!(
            c.curve.unwrap().descriptor(),
            CurveDescriptor::Polynomial { .. }
        ));
        assert_eq!(c.plan.beta, Some(BetaSetting::Value(0.2)));
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(PlanConfig::from_toml("[object]\nradius = 0.037\n").is_err());
        assert!(PlanConfig::from_toml("[objekt]\nradius = 1.0\nheight = 1.0\n").is_err());
        let c = PlanConfig::from_toml("[plan]\nbeta = 2.0\n[object]\nradius = 1.0\nheight = 1.0\n").unwrap();
        assert!(c.beta(&c.geometry().unwrap()).is_err());
        let c = PlanConfig::from_toml("[timing]\nrate_hz = 0.0\n").unwrap();
        assert!(c.timing().is_err());
        assert!(PlanConfig::default().geometry().is_err());
        assert!(PlanConfig::load(Path::new("/nonexistent/plan.toml")).is_err());
    }
}
