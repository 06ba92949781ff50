//! Back-and-forth motion: a sequence of straight rolls joined by pivots, with line lengths
//! and pivot angles chosen by constrained optimization.
//!
//! Line `j` (1-based) runs along `(-1)^(j+1)·e^{iφ_j}` with `φ_j = α_1 + … + α_j`, so the
//! rolling direction reverses at every intersection while the object turns by `α_{j+1}`.

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curve::{self, PrimitiveStep};
use crate::cylinder::CylinderGeometry;
use crate::error::{Error, Result};
use crate::optim::{self, AugmentedLagrangianOptions, BfgsOptions};
use crate::rolling::ContactState;
use crate::screw::UnitDualQuaternion;

pub const DEFAULT_WEIGHT: f64 = 1000.0;
pub const DEFAULT_STARTS: usize = 32;
pub const DEFAULT_MAX_K: usize = 25;
/// Endpoint residual below which a start counts as feasible.
pub const CLOSURE_TOLERANCE: f64 = 1e-6;

const NORM_SMOOTHING: f64 = 1e-24;
const TIE_TOLERANCE: f64 = 1e-9;
/// Largest fraction of a bound used when inverting the bounding transforms.
const BOUND_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct BackForthProblem {
    pub p_o: Vector2<f64>,
    pub p_f: Vector2<f64>,
    pub alpha_max: f64,
    pub l_max: f64,
    pub w: f64,
    /// Fixed line count; searched when `None`.
    pub k: Option<usize>,
}

impl BackForthProblem {
    pub fn new(p_o: Vector2<f64>, p_f: Vector2<f64>, alpha_max: f64, l_max: f64) -> Self {
        Self {
            p_o,
            p_f,
            alpha_max,
            l_max,
            w: DEFAULT_WEIGHT,
            k: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_max > 0.0 && self.alpha_max < std::f64::consts::PI) {
            return Err(Error::invalid(format!(
                "alpha_max must lie in (0, π), got {}",
                self.alpha_max
            )));
        }
        if !(self.l_max > 0.0 && self.l_max.is_finite()) {
            return Err(Error::invalid(format!("l_max must be positive, got {}", self.l_max)));
        }
        if !(self.w >= 0.0 && self.w.is_finite()) {
            return Err(Error::invalid(format!("weight must be non-negative, got {}", self.w)));
        }
        if !self.p_o.iter().chain(self.p_f.iter()).all(|v| v.is_finite()) {
            return Err(Error::invalid("endpoints must be finite"));
        }
        if self.k == Some(0) {
            return Err(Error::invalid("line count must be at least 1"));
        }
        if (self.p_f - self.p_o).norm() == 0.0 {
            return Err(Error::invalid("start and end points coincide"));
        }
        Ok(())
    }

    fn delta(&self) -> Vector2<f64> {
        self.p_f - self.p_o
    }

    /// Unit normal of the line through `p_o` and `p_f`.
    fn normal(&self) -> Vector2<f64> {
        let e = self.delta().normalize();
        Vector2::new(-e.y, e.x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackForthSolution {
    pub k: usize,
    pub lengths: Vec<f64>,
    pub angles: Vec<f64>,
    /// `p_1 … p_k`; the last one is the end point.
    pub intersections: Vec<Vector2<f64>>,
    pub objective: f64,
    /// Distance between the last intersection and `p_f`.
    pub residual: f64,
}

impl BackForthSolution {
    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Rolling direction of line `j` (0-based).
    pub fn line_direction(&self, j: usize) -> Vector2<f64> {
        line_direction(&self.angles, j)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_k: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            starts: DEFAULT_STARTS,
            seed: 0,
            max_k: DEFAULT_MAX_K,
        }
    }
}

fn line_direction(angles: &[f64], j: usize) -> Vector2<f64> {
    let phi: f64 = angles[..=j].iter().sum();
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    Vector2::new(phi.cos(), phi.sin()) * sign
}

pub fn intersection_points(lengths: &[f64], angles: &[f64], p_o: &Vector2<f64>) -> Result<Vec<Vector2<f64>>> {
    if lengths.len() != angles.len() {
        return Err(Error::invalid("lengths and angles differ in count"));
    }
    let mut p = *p_o;
    let mut phi = 0.0;
    let mut points = Vec::with_capacity(lengths.len());
    for (j, (l, a)) in lengths.iter().zip(angles).enumerate() {
        phi += a;
        let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        p += Vector2::new(phi.cos(), phi.sin()) * (sign * l);
        points.push(p);
    }
    Ok(points)
}

/// Population variance.
fn variance(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k
}

/// `‖d‖ + w·var(l)`, where `d` holds the distances of the intersection points to the
/// line through `p_o` and `p_f`.
pub fn objective(lengths: &[f64], angles: &[f64], problem: &BackForthProblem) -> Result<f64> {
    if (problem.p_f - problem.p_o).norm() == 0.0 {
        return Err(Error::invalid(
            "start and end points coincide, the reference line is undefined",
        ));
    }
    if lengths.is_empty() {
        return Err(Error::invalid("at least one line is required"));
    }
    let points = intersection_points(lengths, angles, &problem.p_o)?;
    let n = problem.normal();
    let d = points
        .iter()
        .map(|p| (p - problem.p_o).dot(&n).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(d + problem.w * variance(lengths))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Unconstrained parametrization `x = [b_1..b_k, a_1..a_k]` with
/// `l = l_max·sigmoid(b)` and `α = α_max·tanh(a)`.
struct Transformed<'a> {
    problem: &'a BackForthProblem,
    k: usize,
}

impl Transformed<'_> {
    fn decode(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.k;
        let l = x[..k].iter().map(|b| self.problem.l_max * sigmoid(*b)).collect();
        let a = x[k..].iter().map(|a| self.problem.alpha_max * a.tanh()).collect();
        (l, a)
    }

    fn encode(&self, lengths: &[f64], angles: &[f64]) -> Vec<f64> {
        let lf = |l: f64| logit((l / self.problem.l_max).clamp(1.0 - BOUND_FRACTION, BOUND_FRACTION));
        let af = |a: f64| {
            (a / self.problem.alpha_max)
                .clamp(-BOUND_FRACTION, BOUND_FRACTION)
                .atanh()
        };
        lengths
            .iter()
            .map(|l| lf(*l))
            .chain(angles.iter().map(|a| af(*a)))
            .collect()
    }

    /// Chain-rule factors `dl/db` and `dα/da`.
    fn decode_derivatives(&self, x: &[f64]) -> Vec<f64> {
        let k = self.k;
        x[..k]
            .iter()
            .map(|b| {
                let s = sigmoid(*b);
                self.problem.l_max * s * (1.0 - s)
            })
            .chain(x[k..].iter().map(|a| self.problem.alpha_max * (1.0 - a.tanh().powi(2))))
            .collect()
    }

    /// Offsets `p_m − p_o` and their partial derivatives: `dl[m][j]` and `da[m][i]`.
    #[allow(clippy::type_complexity)]
    fn points_with_jacobian(&self, l: &[f64], a: &[f64]) -> (Vec<Vector2<f64>>, Vec<Vector2<f64>>, Vec<Vector2<f64>>) {
        let k = self.k;
        let mut phi = 0.0;
        let mut terms = Vec::with_capacity(k);
        let mut units = Vec::with_capacity(k);
        for j in 0..k {
            phi += a[j];
            let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
            let u = Vector2::new(phi.cos(), phi.sin()) * sign;
            units.push(u);
            terms.push(u * l[j]);
        }
        let mut points = Vec::with_capacity(k);
        let mut acc = Vector2::zeros();
        for t in &terms {
            acc += t;
            points.push(acc);
        }
        // ∂p_m/∂l_j = u_j for j ≤ m; ∂p_m/∂α_i = J·(p_m − p_{i-1}) for i ≤ m, J the 90° turn.
        let perp = |v: Vector2<f64>| Vector2::new(-v.y, v.x);
        let mut before = Vec::with_capacity(k);
        let mut prev = Vector2::zeros();
        for p in &points {
            before.push(prev);
            prev = *p;
        }
        (points, units, before.into_iter().map(perp).collect())
    }

    fn objective(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.k;
        let (l, a) = self.decode(x);
        let (points, units, before_perp) = self.points_with_jacobian(&l, &a);
        let n = self.problem.normal();
        let d: Vec<f64> = points.iter().map(|p| p.dot(&n)).collect();
        let norm = (d.iter().map(|v| v * v).sum::<f64>() + NORM_SMOOTHING).sqrt();
        let mean = l.iter().sum::<f64>() / k as f64;
        let var = l.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k as f64;

        grad.iter_mut().for_each(|g| *g = 0.0);
        for m in 0..k {
            let weight = d[m] / norm;
            if weight == 0.0 {
                continue;
            }
            let pm_perp = Vector2::new(-points[m].y, points[m].x);
            for j in 0..=m {
                grad[j] += weight * units[j].dot(&n);
                grad[k + j] += weight * (pm_perp - before_perp[j]).dot(&n);
            }
        }
        for j in 0..k {
            grad[j] += self.problem.w * 2.0 * (l[j] - mean) / k as f64;
        }
        for (g, f) in grad.iter_mut().zip(self.decode_derivatives(x)) {
            *g *= f;
        }
        norm + self.problem.w * var
    }

    fn constraints(&self, x: &[f64], c: &mut [f64], jac: &mut [f64]) {
        let k = self.k;
        let n = 2 * k;
        let (l, a) = self.decode(x);
        let (points, units, before_perp) = self.points_with_jacobian(&l, &a);
        let end = points[k - 1];
        let target = self.problem.delta();
        c[0] = end.x - target.x;
        c[1] = end.y - target.y;
        let end_perp = Vector2::new(-end.y, end.x);
        let factors = self.decode_derivatives(x);
        for j in 0..k {
            let dl = units[j] * factors[j];
            let da = (end_perp - before_perp[j]) * factors[k + j];
            jac[j] = dl.x;
            jac[n + j] = dl.y;
            jac[k + j] = da.x;
            jac[n + k + j] = da.y;
        }
    }
}

struct StartResult {
    lengths: Vec<f64>,
    angles: Vec<f64>,
    objective: f64,
    residual: f64,
}

fn initial_guess(problem: &BackForthProblem, k: usize, start: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let delta = problem.delta();
    let heading = delta.y.atan2(delta.x);
    let limit = BOUND_FRACTION * problem.alpha_max;
    let base_l = (delta.norm() / k as f64).min(BOUND_FRACTION * problem.l_max);
    // the first two starts are the plain alternating patterns, the rest are perturbed
    let flip = if start.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut angles: Vec<f64> = (0..k)
        .map(|j| {
            if j == 0 {
                heading.clamp(-limit, limit)
            } else {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                0.8 * problem.alpha_max * sign * flip
            }
        })
        .collect();
    let mut lengths = vec![base_l; k];
    if start >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(start as u64));
        for a in angles.iter_mut() {
            *a = (*a + rng.gen_range(-0.5..0.5) * problem.alpha_max).clamp(-limit, limit);
        }
        for l in lengths.iter_mut() {
            *l = (*l * rng.gen_range(0.5..1.5)).clamp(0.05 * problem.l_max, BOUND_FRACTION * problem.l_max);
        }
    }
    (lengths, angles)
}

fn solve_start(problem: &BackForthProblem, k: usize, start: usize, seed: u64) -> StartResult {
    let t = Transformed { problem, k };
    let (l0, a0) = initial_guess(problem, k, start, seed);
    let x0 = t.encode(&l0, &a0);
    let options = AugmentedLagrangianOptions {
        inner: BfgsOptions::default(),
        ..AugmentedLagrangianOptions::default()
    };
    let result = optim::minimize_equality_constrained(
        |x, g| t.objective(x, g),
        |x, c, j| t.constraints(x, c, j),
        2,
        &x0,
        &options,
    );
    let (lengths, angles) = t.decode(&result.x);
    let objective = objective(&lengths, &angles, problem).unwrap_or(f64::INFINITY);
    let end = intersection_points(&lengths, &angles, &problem.p_o).expect("equal lengths")[k - 1];
    StartResult {
        residual: (end - problem.p_f).norm(),
        lengths,
        angles,
        objective,
    }
}

/// Best feasible solution for a fixed `k`, or the smallest residual reached.
fn solve_fixed_k(
    problem: &BackForthProblem,
    k: usize,
    options: &SolverOptions,
) -> std::result::Result<BackForthSolution, f64> {
    let results: Vec<StartResult> = (0..options.starts.max(1))
        .into_par_iter()
        .map(|s| solve_start(problem, k, s, options.seed))
        .collect();
    let mut best: Option<&StartResult> = None;
    for r in results
        .iter()
        .filter(|r| r.residual < CLOSURE_TOLERANCE && r.objective.is_finite())
    {
        if best.is_none_or(|b| r.objective < b.objective - TIE_TOLERANCE) {
            best = Some(r);
        }
    }
    match best {
        Some(r) => Ok(BackForthSolution {
            k,
            intersections: intersection_points(&r.lengths, &r.angles, &problem.p_o).expect("equal lengths"),
            lengths: r.lengths.clone(),
            angles: r.angles.clone(),
            objective: r.objective,
            residual: r.residual,
        }),
        None => Err(results.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min)),
    }
}

/// Solves for the line lengths and pivot angles. Without a fixed `k`, line counts are
/// tried from `floor(‖p_f − p_o‖ / l_max)` upward and the first feasible one is returned.
pub fn solve(problem: &BackForthProblem, options: &SolverOptions) -> Result<BackForthSolution> {
    problem.validate()?;
    let distance = problem.delta().norm();
    let ks: Vec<usize> = match problem.k {
        Some(k) => vec![k],
        None => {
            let first = ((distance / problem.l_max).floor() as usize).max(1);
            (first..=options.max_k.max(first)).collect()
        }
    };
    let mut diagnostics = Vec::new();
    for &k in &ks {
        if (k as f64) * problem.l_max < distance {
            diagnostics.push(format!(
                "k={k}: total length bound {:.4} m below distance",
                k as f64 * problem.l_max
            ));
            continue;
        }
        match solve_fixed_k(problem, k, options) {
            Ok(solution) => return Ok(solution),
            Err(residual) => diagnostics.push(format!("k={k}: best residual {residual:.3e} m")),
        }
    }
    Err(Error::Infeasible {
        max_k: *ks.last().expect("at least one k"),
        diagnostics: diagnostics.join("; "),
    })
}

/// Full primitive sequence: initial tilt pivot onto line 1, `n_per_line` roll elements per
/// line, a pivot by `α_{j+1}` at every intersection, and the final pivot.
pub fn plan_back_forth(
    solution: &BackForthSolution,
    p_o: &Vector2<f64>,
    start_pose: &UnitDualQuaternion,
    final_pose: Option<&UnitDualQuaternion>,
    geom: &CylinderGeometry,
    beta: f64,
    n_per_line: usize,
) -> Result<Vec<PrimitiveStep>> {
    if !(beta > 0.0) {
        return Err(Error::invalid("edge rolling needs a positive tilt angle"));
    }
    if n_per_line == 0 {
        return Err(Error::invalid("segment count must be at least 1"));
    }
    let to3 = |v: Vector2<f64>| Vector3::new(v.x, v.y, 0.0);
    let e1 = to3(*p_o);
    let (mut steps, mut state): (Vec<PrimitiveStep>, ContactState) =
        curve::initial_tilt_pivot(geom, start_pose, &e1, &to3(solution.line_direction(0)), beta, None)?;
    steps.reserve(solution.k * (n_per_line + 1) + 2);
    for j in 0..solution.k {
        if j > 0 {
            let (pivot, next) = curve::transition_pivot(&state, solution.angles[j]);
            steps.push(pivot);
            state = next;
        }
        let (rolls, next) = curve::roll_line(geom, &state, &to3(solution.intersections[j]), n_per_line)?;
        steps.extend(rolls);
        state = next;
    }
    steps.extend(curve::final_pivot(geom, &state, final_pose)?);
    Ok(steps)
}
