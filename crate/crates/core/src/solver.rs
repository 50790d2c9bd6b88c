//! Damped Gauss–Newton (Levenberg–Marquardt) for small dense least squares.
//!
//! Minimizes `F(x) = ‖r(x)‖²`. The Jacobian is taken by central finite
//! differences. A trial step is accepted only if it strictly lowers `F`;
//! rejected steps raise the damping and retry from the same point, so the
//! sequence of accepted objectives is monotone nonincreasing.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Stop once `‖∇F‖∞` falls below this.
    pub gradient_tolerance: f64,
    /// Central-difference step for the Jacobian.
    pub fd_step: f64,
    /// Initial damping relative to `max diag(JᵀJ)`.
    pub initial_damping: f64,
    /// Give up on a point after the damping grows past this.
    pub max_damping: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gradient_tolerance: 1e-6,
            fd_step: 1e-6,
            initial_damping: 1e-3,
            max_damping: 1e20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    /// No damping level produced a decrease; the point is stationary to
    /// within floating-point resolution.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Objective at the start point and after every accepted step.
    pub objective_trace: Vec<f64>,
    pub gradient_norm: f64,
    pub stop: StopReason,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("objective is not finite at the start point")]
    NonFiniteObjective,
}

/// Residual function: writes `m` residuals for parameters `x`.
pub trait Residuals {
    fn len(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn minimize<R: Residuals>(problem: &R, x0: &[f64], settings: &SolverSettings) -> Result<SolveOutcome, SolverError> {
    let n = x0.len();
    let m = problem.len();
    let mut x = x0.to_vec();
    let mut r = vec![0.0; m];
    problem.eval(&x, &mut r);
    let mut f = dot(&r, &r);
    if !f.is_finite() {
        return Err(SolverError::NonFiniteObjective);
    }

    let mut trace = vec![f];
    let mut damping: Option<f64> = None;
    let mut growth = 2.0;
    let mut iterations = 0;
    let mut gradient_norm = f64::INFINITY;
    let mut stop = StopReason::MaxIterations;

    let mut jac = DMatrix::<f64>::zeros(m, n);
    let mut r_plus = vec![0.0; m];
    let mut r_minus = vec![0.0; m];
    let mut x_trial = vec![0.0; n];
    let mut r_trial = vec![0.0; m];

    'outer: while iterations < settings.max_iterations {
        if n == 0 {
            gradient_norm = 0.0;
            stop = StopReason::GradientTolerance;
            break;
        }
        for k in 0..n {
            x_trial.copy_from_slice(&x);
            x_trial[k] = x[k] + settings.fd_step;
            problem.eval(&x_trial, &mut r_plus);
            x_trial[k] = x[k] - settings.fd_step;
            problem.eval(&x_trial, &mut r_minus);
            for i in 0..m {
                jac[(i, k)] = (r_plus[i] - r_minus[i]) / (2.0 * settings.fd_step);
            }
        }
        let rv = DVector::from_column_slice(&r);
        let g = jac.tr_mul(&rv);
        gradient_norm = 2.0 * g.amax();
        if gradient_norm < settings.gradient_tolerance {
            stop = StopReason::GradientTolerance;
            break;
        }
        let a = jac.tr_mul(&jac);
        let mu = damping.get_or_insert_with(|| {
            let d = a.diagonal().max();
            settings.initial_damping * if d > 0.0 { d } else { 1.0 }
        });

        iterations += 1;
        loop {
            let mut damped = a.clone();
            for k in 0..n {
                damped[(k, k)] += *mu;
            }
            let step = damped.cholesky().map(|c| c.solve(&(-&g)));
            if let Some(step) = step {
                for k in 0..n {
                    x_trial[k] = x[k] + step[k];
                }
                problem.eval(&x_trial, &mut r_trial);
                let f_trial = dot(&r_trial, &r_trial);
                if f_trial.is_finite() && f_trial < f {
                    let predicted = -(2.0 * step.dot(&g) + step.dot(&(&a * &step)));
                    let rho = if predicted > 0.0 { (f - f_trial) / predicted } else { 0.0 };
                    *mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                    growth = 2.0;
                    std::mem::swap(&mut x, &mut x_trial);
                    std::mem::swap(&mut r, &mut r_trial);
                    f = f_trial;
                    trace.push(f);
                    break;
                }
                let tiny = step.norm() <= 1e-15 * (1.0 + DVector::from_column_slice(&x).norm());
                if tiny {
                    stop = StopReason::Stalled;
                    break 'outer;
                }
            }
            *mu *= growth;
            growth *= 2.0;
            if *mu > settings.max_damping {
                stop = StopReason::Stalled;
                break 'outer;
            }
        }
    }

    Ok(SolveOutcome { x, objective: f, iterations, objective_trace: trace, gradient_norm, stop })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
