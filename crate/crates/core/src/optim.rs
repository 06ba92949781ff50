//! Unconstrained quasi-Newton minimization and an augmented-Lagrangian wrapper for
//! equality constraints.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gradient_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` (which writes its gradient into the second argument) from `x0` by BFGS
/// with a strong-Wolfe line search.
pub fn minimize_bfgs<F>(f: F, x0: &[f64], options: &BfgsOptions) -> Minimum
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &DVector<f64>, g: &mut DVector<f64>| f(x.as_slice(), g.as_mut_slice());

    let mut x = DVector::from_column_slice(x0);
    let mut g = DVector::zeros(n);
    let mut fx = eval(&x, &mut g);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first_step = true;

    let mut iterations = 0;
    while iterations < options.max_iterations {
        if !fx.is_finite() || g.norm() < options.gradient_tolerance {
            break;
        }
        iterations += 1;
        let mut p = -(&h * &g);
        if p.dot(&g) >= 0.0 {
            // lost descent direction; restart from steepest descent
            h = DMatrix::identity(n, n);
            p = -g.clone();
        }
        let initial = if first_step { (1.0 / g.norm()).min(1.0) } else { 1.0 };
        let Some((alpha, f_new, g_new)) = wolfe_search(&eval, &x, fx, &g, &p, initial) else {
            if first_step {
                break;
            }
            h = DMatrix::identity(n, n);
            first_step = true;
            continue;
        };
        let s = &p * alpha;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        x += &s;
        let improvement = fx - f_new;
        fx = f_new;
        g = g_new;
        if sy > 1e-300 {
            if first_step {
                // scale the initial inverse Hessian as in Nocedal & Wright (6.20)
                h = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        first_step = false;
        if improvement.abs() <= f64::EPSILON * fx.abs().max(1e-300) && s.norm() <= f64::EPSILON * x.norm().max(1.0) {
            break;
        }
    }
    let gradient_norm = g.norm();
    Minimum {
        x: x.as_slice().to_vec(),
        value: fx,
        gradient_norm,
        iterations,
        converged: gradient_norm < options.gradient_tolerance,
    }
}

type Eval<'a> = dyn Fn(&DVector<f64>, &mut DVector<f64>) -> f64 + 'a;

/// Value, slope and gradient at a trial step.
type Trial = (f64, f64, DVector<f64>);

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;

fn wolfe_search(
    eval: &Eval<'_>,
    x: &DVector<f64>,
    f0: f64,
    g0: &DVector<f64>,
    p: &DVector<f64>,
    initial: f64,
) -> Option<(f64, f64, DVector<f64>)> {
    let d0 = g0.dot(p);
    let phi = |a: f64| -> Trial {
        let mut g = DVector::zeros(x.len());
        let fa = eval(&(x + p * a), &mut g);
        (fa, g.dot(p), g)
    };

    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, f0, d0);
    let mut a = initial;
    for i in 0..40 {
        let (fa, da, g) = phi(a);
        if !fa.is_finite() {
            a = 0.5 * (a_prev + a);
            continue;
        }
        if fa > f0 + WOLFE_C1 * a * d0 || (i > 0 && fa >= f_prev) {
            return zoom(&phi, f0, d0, (a_prev, f_prev, d_prev), (a, fa, da));
        }
        if da.abs() <= -WOLFE_C2 * d0 {
            return Some((a, fa, g));
        }
        if da >= 0.0 {
            return zoom(&phi, f0, d0, (a, fa, da), (a_prev, f_prev, d_prev));
        }
        a_prev = a;
        f_prev = fa;
        d_prev = da;
        a *= 2.0;
    }
    None
}

fn zoom(
    phi: &dyn Fn(f64) -> Trial,
    f0: f64,
    d0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
) -> Option<(f64, f64, DVector<f64>)> {
    let mut best: Option<(f64, f64, DVector<f64>)> = None;
    for _ in 0..60 {
        let span = (hi.0 - lo.0).abs();
        let a = match cubic_min(lo, hi) {
            Some(a) if (a - lo.0).abs() >= 0.1 * span && (a - hi.0).abs() >= 0.1 * span => a,
            _ => 0.5 * (lo.0 + hi.0),
        };
        let (fa, da, ga) = phi(a);
        if fa < f0 && best.as_ref().is_none_or(|b| fa < b.1) {
            best = Some((a, fa, ga.clone()));
        }
        if fa > f0 + WOLFE_C1 * a * d0 || fa >= lo.1 {
            hi = (a, fa, da);
        } else {
            if da.abs() <= -WOLFE_C2 * d0 {
                return Some((a, fa, ga));
            }
            if da * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (a, fa, da);
        }
        if (hi.0 - lo.0).abs() <= 1e-16 * lo.0.abs().max(1e-300) {
            break;
        }
    }
    // accept any strict decrease once the bracket collapses
    best
}

/// Minimizer of the cubic interpolating value and slope at both ends.
fn cubic_min(a: (f64, f64, f64), b: (f64, f64, f64)) -> Option<f64> {
    let (x0, f0, d0) = a;
    let (x1, f1, d1) = b;
    let h = x1 - x0;
    if h == 0.0 {
        return None;
    }
    let t1 = d0 + d1 - 3.0 * (f0 - f1) / (x0 - x1);
    let disc = t1 * t1 - d0 * d1;
    if disc < 0.0 {
        return None;
    }
    let t2 = h.signum() * disc.sqrt();
    let denom = d1 - d0 + 2.0 * t2;
    if denom == 0.0 {
        return None;
    }
    let x = x1 - h * (d1 + t2 - t1) / denom;
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, Copy)]
pub struct AugmentedLagrangianOptions {
    pub residual_tolerance: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
    pub max_rounds: usize,
    pub inner: BfgsOptions,
}

impl Default for AugmentedLagrangianOptions {
    fn default() -> Self {
        Self {
            residual_tolerance: 1e-9,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            max_penalty: 1e12,
            max_rounds: 50,
            inner: BfgsOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstrainedMinimum {
    pub x: Vec<f64>,
    pub objective: f64,
    pub residual: f64,
    pub rounds: usize,
    pub penalty: f64,
}

/// Minimizes `objective` subject to `constraints(x) = 0`.
///
/// Both closures write their gradients: the objective into a slice of length `n`, the
/// constraints as a row-major `m × n` Jacobian.
pub fn minimize_equality_constrained<F, C>(
    objective: F,
    constraints: C,
    m: usize,
    x0: &[f64],
    options: &AugmentedLagrangianOptions,
) -> ConstrainedMinimum
where
    F: Fn(&[f64], &mut [f64]) -> f64,
    C: Fn(&[f64], &mut [f64], &mut [f64]),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut lambda = vec![0.0; m];
    let mut mu = options.initial_penalty;
    let mut c = vec![0.0; m];
    let mut jac = vec![0.0; m * n];
    constraints(&x, &mut c, &mut jac);
    let mut residual = norm(&c);
    let mut rounds = 0;

    while rounds < options.max_rounds && (rounds == 0 || residual > options.residual_tolerance) {
        rounds += 1;
        let lagrangian = |x: &[f64], grad: &mut [f64]| {
            let mut c = vec![0.0; m];
            let mut jac = vec![0.0; m * n];
            let value = objective(x, grad);
            constraints(x, &mut c, &mut jac);
            let mut total = value;
            for i in 0..m {
                let w = lambda[i] + mu * c[i];
                total += lambda[i] * c[i] + 0.5 * mu * c[i] * c[i];
                for j in 0..n {
                    grad[j] += w * jac[i * n + j];
                }
            }
            total
        };
        let inner = minimize_bfgs(lagrangian, &x, &options.inner);
        if inner.x.iter().all(|v| v.is_finite()) {
            x = inner.x;
        }
        constraints(&x, &mut c, &mut jac);
        let new_residual = norm(&c);
        for i in 0..m {
            lambda[i] += mu * c[i];
        }
        if new_residual > 0.25 * residual {
            if mu >= options.max_penalty {
                residual = new_residual;
                break;
            }
            mu = (mu * options.penalty_growth).min(options.max_penalty);
        }
        residual = new_residual;
    }
    let mut grad = vec![0.0; n];
    ConstrainedMinimum {
        objective: objective(&x, &mut grad),
        x,
        residual,
        rounds,
        penalty: mu,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn bfgs_solves_rosenbrock() {
        let m = minimize_bfgs(rosenbrock, &[-1.2, 1.0], &BfgsOptions::default());
        assert!(m.converged, "{m:?}");
        assert!((m.x[0] - 1.0).abs() < 1e-8 && (m.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bfgs_quadratic_in_few_steps() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 20.0 * (x[1] + 1.0);
            (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2)
        };
        let m = minimize_bfgs(f, &[0.0, 0.0], &BfgsOptions::default());
        assert!(m.converged);
        assert!(m.iterations < 20);
        assert!((m.x[0] - 3.0).abs() < 1e-10 && (m.x[1] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn augmented_lagrangian_projects_onto_line() {
        // min x² + y²  s.t.  x + y = 1   →   (½, ½)
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            g[1] = 2.0 * x[1];
            x[0] * x[0] + x[1] * x[1]
        };
        let c = |x: &[f64], c: &mut [f64], j: &mut [f64]| {
            c[0] = x[0] + x[1] - 1.0;
            j[0] = 1.0;
            j[1] = 1.0;
        };
        let r = minimize_equality_constrained(f, c, 1, &[3.0, -2.0], &AugmentedLagrangianOptions::default());
        assert!(r.residual < 1e-9);
        assert!((r.x[0] - 0.5).abs() < 1e-8 && (r.x[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn augmented_lagrangian_reports_infeasibility() {
        // x² = -1 has no solution: residual stays at 1
        let f = |_: &[f64], g: &mut [f64]| {
            g[0] = 0.0;
            0.0
        };
        let c = |x: &[f64], c: &mut [f64], j: &mut [f64]| {
            c[0] = x[0] * x[0] + 1.0;
            j[0] = 2.0 * x[0];
        };
        let r = minimize_equality_constrained(f, c, 1, &[0.5], &AugmentedLagrangianOptions::default());
        assert!(r.residual > 0.99);
    }
}
