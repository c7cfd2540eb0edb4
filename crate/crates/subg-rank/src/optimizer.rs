//! Nonlinear conjugate gradient maximizer used to fit the weight vector.
//!
//! Polak-Ribiere+ directions with periodic steepest-ascent restarts and an
//! Armijo backtracking line search. A bisection-refined line search is also
//! available for callers that want near-exact steps on smooth objectives.

use serde::Serialize;

use crate::error::{Error, Result};

/// Line search strategy along an ascent direction.
#[derive(Debug, Clone, Serialize)]
pub enum LineSearch {
    /// Accept the first step `initial * contraction^i` satisfying the
    /// sufficient-increase condition.
    Backtracking {
        initial_step: f64,
        contraction: f64,
        sufficient_increase: f64,
    },
    /// Bracket a sign change of the directional derivative, then bisect it.
    /// Near-exact on concave objectives; costs one gradient per probe.
    Bisection { max_bisections: usize },
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch::Backtracking {
            initial_step: 1.0,
            contraction: 0.5,
            sufficient_increase: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop when the gradient infinity-norm falls at or below this.
    pub gradient_tolerance: f64,
    pub line_search: LineSearch,
    /// Restart with the steepest-ascent direction every this many iterations.
    /// `None` restarts every `dimension` iterations.
    pub restart_period: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            line_search: LineSearch::default(),
            restart_period: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidConfig("gradient_tolerance must be positive".into()));
        }
        if let Some(0) = self.restart_period {
            return Err(Error::InvalidConfig("restart_period must be positive".into()));
        }
        match self.line_search {
            LineSearch::Backtracking { initial_step, contraction, sufficient_increase } => {
                if !(initial_step > 0.0) || !(sufficient_increase > 0.0) {
                    return Err(Error::InvalidConfig("line search steps must be positive".into()));
                }
                if !(contraction > 0.0 && contraction < 1.0) {
                    return Err(Error::InvalidConfig("contraction must lie in (0, 1)".into()));
                }
            }
            LineSearch::Bisection { max_bisections } => {
                if max_bisections == 0 {
                    return Err(Error::InvalidConfig("max_bisections must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// What happened during a [`cg_maximize`] run.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationTrace {
    pub iterations: usize,
    /// Objective at the start plus after every accepted step; non-decreasing.
    pub objective_history: Vec<f64>,
    pub final_gradient_norm: f64,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect()
}

const MAX_HALVINGS: usize = 60;

enum SearchOutcome {
    Accepted { step: f64, value: f64, gradient: Vec<f64> },
    Failed,
}

fn search<F>(
    eval: &mut F,
    ls: &LineSearch,
    x: &[f64],
    fx: f64,
    gx: &[f64],
    direction: &[f64],
    first_trial: f64,
) -> SearchOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let slope = dot(gx, direction);
    match *ls {
        LineSearch::Backtracking { initial_step: _, contraction, sufficient_increase } => {
            let mut step = first_trial;
            for _ in 0..=MAX_HALVINGS {
                let trial = axpy(x, step, direction);
                let (value, gradient) = eval(&trial);
                if value.is_finite() && value >= fx + sufficient_increase * step * slope {
                    // One quadratic-interpolation refinement through
                    // (0, fx), slope, and (step, value); exact on quadratics
                    // and it keeps the conjugate directions effective.
                    let curvature = (value - fx - slope * step) / (step * step);
                    if curvature < 0.0 {
                        let refined = -slope / (2.0 * curvature);
                        if refined > 0.0 && refined <= 100.0 * step {
                            let (r_value, r_gradient) = eval(&axpy(x, refined, direction));
                            if r_value.is_finite()
                                && r_value >= value
                                && r_value >= fx + sufficient_increase * refined * slope
                            {
                                return SearchOutcome::Accepted {
                                    step: refined,
                                    value: r_value,
                                    gradient: r_gradient,
                                };
                            }
                        }
                    }
                    return SearchOutcome::Accepted { step, value, gradient };
                }
                step *= contraction;
            }
            SearchOutcome::Failed
        }
        LineSearch::Bisection { max_bisections } => {
            // Expand until the directional derivative turns non-positive.
            let mut hi = 1.0_f64;
            let mut hi_eval = eval(&axpy(x, hi, direction));
            let mut expansions = 0;
            while dot(&hi_eval.1, direction) > 0.0 && expansions < 60 {
                hi *= 2.0;
                hi_eval = eval(&axpy(x, hi, direction));
                expansions += 1;
            }
            let mut lo = 0.0_f64;
            let mut best = hi_eval;
            let mut best_step = hi;
            for _ in 0..max_bisections {
                let mid = 0.5 * (lo + hi);
                let mid_eval = eval(&axpy(x, mid, direction));
                if mid_eval.0 > best.0 {
                    best = mid_eval.clone();
                    best_step = mid;
                }
                if dot(&mid_eval.1, direction) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if best.0.is_finite() && best.0 >= fx {
                SearchOutcome::Accepted { step: best_step, value: best.0, gradient: best.1 }
            } else {
                SearchOutcome::Failed
            }
        }
    }
}

/// Maximize a smooth objective from `initial`, given a callback that returns
/// the objective value and gradient at a point.
///
/// Returns the final iterate and a trace. `converged` is true when the
/// gradient infinity-norm reached `gradient_tolerance`; otherwise the best
/// iterate seen is returned after `max_iterations`, or earlier if the line
/// search stalls even along the steepest-ascent direction.
pub fn cg_maximize<F>(
    mut eval: F,
    initial: &[f64],
    config: &OptimizerConfig,
) -> Result<(Vec<f64>, OptimizationTrace)>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    config.validate()?;
    let dim = initial.len();
    let restart_period = config.restart_period.unwrap_or(dim.max(1));

    let (f0, g0) = eval(initial);
    if !f0.is_finite() || g0.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidParams(
            "objective or gradient is not finite at the initial point".into(),
        ));
    }

    let mut x = initial.to_vec();
    let mut fx = f0;
    let mut gx = g0;
    let mut direction = gx.clone();
    let mut since_restart = 0usize;
    let mut history = vec![fx];
    let mut iterations = 0usize;
    let mut converged = false;
    // First trial of each backtracking search: configured initially, then
    // twice the previously accepted step so trials track the local scale.
    let configured_step = match config.line_search {
        LineSearch::Backtracking { initial_step, .. } => initial_step,
        LineSearch::Bisection { .. } => 1.0,
    };
    let mut first_trial = configured_step;

    for _ in 0..config.max_iterations {
        if inf_norm(&gx) <= config.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        if since_restart >= restart_period || dot(&direction, &gx) <= 0.0 {
            direction = gx.clone();
            since_restart = 0;
        }

        let mut outcome =
            search(&mut eval, &config.line_search, &x, fx, &gx, &direction, first_trial);
        if matches!(outcome, SearchOutcome::Failed) && since_restart != 0 {
            // One retry along the raw gradient before giving up.
            direction = gx.clone();
            since_restart = 0;
            outcome =
                search(&mut eval, &config.line_search, &x, fx, &gx, &direction, configured_step);
        }
        let (step, value, gradient) = match outcome {
            SearchOutcome::Accepted { step, value, gradient } => (step, value, gradient),
            SearchOutcome::Failed => break,
        };
        first_trial = 2.0 * step;

        let x_next = axpy(&x, step, &direction);
        // Polak-Ribiere+, clamped at zero so the update cannot undo ascent.
        let beta = (dot(&gradient, &gradient) - dot(&gradient, &gx)) / dot(&gx, &gx);
        let beta = beta.max(0.0);
        direction = gradient.iter().zip(&direction).map(|(g, d)| g + beta * d).collect();
        since_restart += 1;

        x = x_next;
        fx = value;
        gx = gradient;
        history.push(fx);
    }
    if !converged && inf_norm(&gx) <= config.gradient_tolerance {
        converged = true;
    }

    let trace = OptimizationTrace {
        iterations,
        objective_history: history,
        final_gradient_norm: inf_norm(&gx),
        converged,
    };
    Ok((x, trace))
}

/// Central-difference gradient estimate, one objective pair per component.
/// This is the oracle the analytic gradient is checked against.
pub fn finite_difference_gradient<F>(mut objective: F, x: &[f64], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(step > 0.0, "step must be positive");
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        probe[j] = x[j] + step;
        let plus = objective(&probe);
        probe[j] = x[j] - step;
        let minus = objective(&probe);
        probe[j] = x[j];
        grad.push((plus - minus) / (2.0 * step));
    }
    grad
}
