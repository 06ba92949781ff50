//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

use crate::analysis;
use crate::backforth;
use crate::config::PlanConfig;
use crate::curve::{self, CurveDescriptor, PlanProblem, PrimitiveStep};
use crate::cylinder::CylinderGeometry;
use crate::error::{Error, Result};
use crate::rolling::{self, ContactState};
use crate::screw::UnitDualQuaternion;
use crate::trajectory::{self, ExportFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Peak-to-mean speed ratio of cubic time scaling.
const CUBIC_PEAK_SPEED: f64 = 1.5;

/// Resolution used to estimate the total turning of a curve.
const TURNING_PROBE_SEGMENTS: usize = 1000;

const DEFAULT_SWEEP_N: [usize; 8] = [1, 2, 5, 10, 50, 100, 1000, 4000];
const DEFAULT_SWEEP_LENGTH: f64 = 0.1368;
const DEFAULT_RADIUS: f64 = 0.037;
const DEFAULT_HEIGHT: f64 = 0.234;

#[derive(Parser, Debug)]
#[command(
    name = "edgeroll",
    version,
    about = "Edge-rolling, pivoting and sliding motion planner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Roll along the straight line in `[line]`.
    PlanLine(PlanArgs),
    /// Roll along the curve in `[curve]`.
    PlanCurve(PlanArgs),
    /// Optimize and roll a back-and-forth path from `[backforth]`.
    PlanBackforth(PlanArgs),
    /// Slide along `[curve]` (or `[line]`) with pivots between segments.
    PlanSlide(PlanArgs),
    /// Slippage of straight rolls against the number of elements.
    SlippageSweep(SweepArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// TOML plan configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `csv` or `jsonl`.
    #[arg(long)]
    format: Option<String>,
    /// Seed for the optimizer's multi-start.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Suppress the summary.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Elements per path (per line for back-and-forth).
    #[arg(long)]
    segments: Option<usize>,
    /// Rolling time in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Controller rate in Hz.
    #[arg(long)]
    rate: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated roll lengths in meters.
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<f64>>,
    /// Comma-separated element counts.
    #[arg(long = "N", value_delimiter = ',')]
    n: Option<Vec<usize>>,
}

/// Runs the CLI and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Infeasible { .. } => EXIT_INFEASIBLE,
                _ => EXIT_INVALID,
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PlanLine(a) => plan(Mode::Line, a),
        Command::PlanCurve(a) => plan(Mode::Curve, a),
        Command::PlanBackforth(a) => plan(Mode::BackForth, a),
        Command::PlanSlide(a) => plan(Mode::Slide, a),
        Command::SlippageSweep(a) => sweep(a),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Line,
    Curve,
    BackForth,
    Slide,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Line => "line",
            Mode::Curve => "curve",
            Mode::BackForth => "backforth",
            Mode::Slide => "slide",
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<PlanConfig> {
    match &common.config {
        Some(path) => PlanConfig::load(path),
        None => Err(Error::invalid("--config is required")),
    }
}

fn output_format(common: &CommonArgs, config: &PlanConfig) -> Result<ExportFormat> {
    match &common.format {
        Some(f) => f.parse(),
        None => config.format(),
    }
}

/// Writes `body` to the output file (or stdout) and the summary alongside it.
fn emit(common: &CommonArgs, config: &PlanConfig, body: &str, summary: &str) -> Result<()> {
    let out = common
        .out
        .clone()
        .or_else(|| config.output.path.as_ref().map(PathBuf::from));
    match out {
        Some(path) => {
            std::fs::write(&path, body).map_err(|e| Error::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            if !common.quiet {
                print!("{summary}");
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(body.as_bytes());
            if !common.quiet {
                eprint!("{summary}");
            }
        }
    }
    Ok(())
}

/// Largest element count whose per-sample rotation stays within one element at peak
/// speed, but never fewer than the diameter allows. `turning` is the total pivot angle
/// sharing the phase, which adds an equivalent arc of `radius·turning`.
fn default_segments(length: f64, turning: f64, samples: f64, radius: f64) -> usize {
    let share = length / (length + radius * turning);
    let by_rate = (samples * share / CUBIC_PEAK_SPEED).floor() as usize;
    let by_diameter = (length / (2.0 * radius)).ceil() as usize;
    by_rate.max(by_diameter).max(1)
}

fn start_pose_for(
    config: &PlanConfig,
    geom: &CylinderGeometry,
    contact: Vector3<f64>,
    direction: Vector3<f64>,
) -> Result<UnitDualQuaternion> {
    let heading = match config.plan.start_heading {
        Some(h) => Vector3::new(h.cos(), h.sin(), 0.0),
        None => direction,
    };
    let heading = rolling::horizontal_unit(&heading)?;
    Ok(geom.upright_pose(&contact, &heading))
}

fn plan(mode: Mode, args: PlanArgs) -> Result<()> {
    let common = &args.common;
    let mut config = load_config(common)?;
    if let Some(d) = args.duration {
        config.timing.duration_s = Some(d);
    }
    if let Some(r) = args.rate {
        config.timing.rate_hz = Some(r);
    }
    let geom = config.geometry()?;
    let timing = config.timing()?;
    let format = output_format(common, &config)?;
    let grasp = config.grasp()?;
    let segments = args.segments.or(config.plan.segments);
    let path_samples = timing.path_samples() as f64;

    let mut summary = format!("mode: {}\n", mode.name());
    let steps: Vec<PrimitiveStep> = match mode {
        Mode::BackForth => {
            let problem = config.back_forth_problem(&geom)?;
            let beta = config.beta(&geom)?;
            let solution = backforth::solve(&problem, &config.solver_options(common.seed))?;
            let shortest = solution.lengths.iter().copied().fold(f64::INFINITY, f64::min);
            let longest = solution.lengths.iter().copied().fold(0.0, f64::max);
            let n = segments.unwrap_or_else(|| {
                default_segments(
                    shortest,
                    0.0,
                    path_samples * shortest / solution.total_length(),
                    geom.radius(),
                )
                .max((longest / (2.0 * geom.radius())).ceil() as usize)
            });
            let e1 = Vector3::new(problem.p_o.x, problem.p_o.y, 0.0);
            let d = solution.line_direction(0);
            let start = start_pose_for(&config, &geom, e1, Vector3::new(d.x, d.y, 0.0))?;
            summary.push_str(&format!(
                "k: {}\nalpha_deg: {}\nlengths_m: {}\ntotal_length_m: {:.6}\nobjective: {:.8}\nresidual_m: {:.3e}\nsegments_per_line: {n}\n",
                solution.k,
                list(solution.angles.iter().map(|a| a.to_degrees()), 4),
                list(solution.lengths.iter().copied(), 6),
                solution.total_length(),
                solution.objective,
                solution.residual,
            ));
            backforth::plan_back_forth(&solution, &problem.p_o, &start, None, &geom, beta, n)?
        }
        _ => {
            let descriptor = match (mode, &config.curve, &config.line) {
                (Mode::Line, _, Some(l)) => CurveDescriptor::Line {
                    start: l.start,
                    end: l.end,
                },
                (Mode::Line, _, None) => return Err(Error::invalid("config needs a [line] section")),
                (_, Some(c), _) => c.descriptor(),
                (Mode::Slide, None, Some(l)) => CurveDescriptor::Line {
                    start: l.start,
                    end: l.end,
                },
                _ => return Err(Error::invalid("config needs a [curve] section")),
            };
            let n = match segments {
                Some(n) => n,
                None => {
                    let probe = curve::discretize_curve(&descriptor, TURNING_PROBE_SEGMENTS)?;
                    let turning = probe.turn_angles().iter().map(|g| g.abs()).sum();
                    default_segments(probe.total_length(), turning, path_samples, geom.radius())
                }
            };
            let path = curve::discretize_curve(&descriptor, n)?;
            let beta = match (mode, config.plan.beta) {
                (Mode::Slide, None) => 0.0,
                _ => config.beta(&geom)?,
            };
            let start_pose = start_pose_for(&config, &geom, path.start(), path.direction(0))?;
            summary.push_str(&format!(
                "segments: {}\npath_length_m: {:.6}\nelement_length_mm: {:.6}\nbeta_rad: {:.6}\n",
                path.segment_count(),
                path.total_length(),
                path.total_length() / path.segment_count() as f64 * 1e3,
                beta
            ));
            let problem = PlanProblem {
                start_pose,
                final_pose: None,
                path,
                geom,
                beta,
            };
            if mode == Mode::Slide {
                curve::plan_curved_slide(&problem)?
            } else {
                curve::plan_curved_roll(&problem)?
            }
        }
    };
    let traj = trajectory::emit_trajectory(&steps, geom.radius(), &timing, grasp.as_ref())?;
    let end = traj.samples.last().map(|s| s.contact).unwrap_or_default();
    summary.push_str(&format!(
        "primitives: {}\nsamples: {}\nfinal_contact: [{:.6}, {:.6}, {:.6}]\n",
        steps.len(),
        traj.len(),
        end.x,
        end.y,
        end.z
    ));
    emit(common, &config, &trajectory::export(&traj, format), &summary)
}

fn list(values: impl Iterator<Item = f64>, digits: usize) -> String {
    let items: Vec<String> = values.map(|v| format!("{v:.digits$}")).collect();
    format!("[{}]", items.join(", "))
}

fn sweep(args: SweepArgs) -> Result<()> {
    let common = &args.common;
    let config = match &common.config {
        Some(path) => PlanConfig::load(path)?,
        None => PlanConfig::default(),
    };
    let geom = match &config.object {
        Some(_) => config.geometry()?,
        None => CylinderGeometry::new(DEFAULT_RADIUS, DEFAULT_HEIGHT)?,
    };
    let lengths = args
        .lengths
        .or(config.slippage.lengths.clone())
        .unwrap_or_else(|| vec![DEFAULT_SWEEP_LENGTH]);
    let counts = args
        .n
        .or(config.slippage.n.clone())
        .unwrap_or_else(|| DEFAULT_SWEEP_N.to_vec());
    if lengths.is_empty() || counts.is_empty() {
        return Err(Error::invalid("sweep needs at least one length and one element count"));
    }
    let beta = config.beta(&geom)?;
    let start = ContactState::tilted(&geom, Vector3::zeros(), Vector3::x(), beta)?;
    let mut reports = Vec::new();
    let mut summary = String::new();
    for &length in &lengths {
        for &n in &counts {
            match analysis::slippage_for_n(length, n, &geom, &start) {
                Ok(r) => reports.push(r),
                Err(Error::InvalidInput(msg))
                    if n > 0 && rolling::element_angle(length / n as f64, geom.radius()).is_err() =>
                {
                    summary.push_str(&format!("skipped N={n} for L={length}: {msg}\n"));
                }
                Err(e) => return Err(e),
            }
        }
    }
    emit(common, &config, &analysis::slippage_csv(&reports), &summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run_cli(std::iter::once("edgeroll").chain(args.iter().copied()))
    }

    #[test]
    fn missing_config_is_invalid() {
        assert_eq!(
            run_args(&["plan-curve", "--config", "/nonexistent/plan.toml", "--quiet"]),
            EXIT_INVALID
        );
        assert_eq!(run_args(&["plan-line", "--quiet"]), EXIT_INVALID);
    }

    #[test]
    fn unknown_flag_is_invalid() {
        assert_eq!(run_args(&["plan-line", "--bogus"]), EXIT_INVALID);
    }

    #[test]
    fn default_segment_rule() {
        assert_eq!(default_segments(0.3141, 0.0, 20_000.0, 0.037), 13_333);
        assert_eq!(default_segments(1.0, 0.0, 3.0, 0.037), 14);
        let half_circle = default_segments(0.1 * std::f64::consts::PI, std::f64::consts::PI, 20_000.0, 0.037);
        assert_eq!(half_circle, (20_000.0 * 0.1 / (0.1 + 0.037) / 1.5) as usize);
    }
}
