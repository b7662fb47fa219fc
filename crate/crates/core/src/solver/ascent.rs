//! Projected gradient ascent over a scaled simplex with Armijo backtracking.
//!
//! Steps are taken in the metric given by the diagonal of the negative
//! Hessian, so for separable objectives each step is a projected Newton
//! step; with flat curvature this reduces to Euclidean projected gradient
//! ascent.

use crate::solver::kkt::KktCertificate;
use crate::solver::projection::project_simplex_weighted;
use crate::solver::{SolveError, SolverOptions};

/// Curvatures are clamped to `[CURVATURE_FLOOR·max_x c_x, CURVATURE_CEILING]`.
const CURVATURE_FLOOR: f64 = 1e-6;
const CURVATURE_CEILING: f64 = 1e200;

pub(crate) trait SimplexObjective {
    fn value(&self, x: &[f64]) -> Result<f64, SolveError>;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Diagonal of the negative Hessian (non-negative for concave objectives).
    fn curvature(&self, x: &[f64]) -> Vec<f64>;
    /// Whether the marginal at `x_k = 0` is unbounded, so the maximizer keeps
    /// `x_k > 0` and steps that empty it are overshoots.
    fn repels_boundary(&self, _k: usize) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Ascent {
    pub point: Vec<f64>,
    pub certificate: KktCertificate,
    pub converged: bool,
    pub iterations: usize,
}

fn step_weights(curvature: &[f64]) -> Vec<f64> {
    let largest = curvature
        .iter()
        .filter(|c| c.is_finite())
        .fold(0.0f64, |acc, &c| acc.max(c))
        .min(CURVATURE_CEILING);
    let floor = (CURVATURE_FLOOR * largest).max(f64::MIN_POSITIVE);
    curvature
        .iter()
        .map(|&c| {
            let c = if c.is_nan() { CURVATURE_CEILING } else { c };
            1.0 / c.clamp(floor, CURVATURE_CEILING)
        })
        .collect()
}

pub(crate) fn maximize<O: SimplexObjective>(
    objective: &O,
    start: Vec<f64>,
    radius: f64,
    opts: &SolverOptions,
) -> Result<Ascent, SolveError> {
    let mut x = start;
    let mut fx = objective.value(&x)?;
    let mut iterations = 0;
    loop {
        let g = objective.gradient(&x);
        if g.iter().any(|v| v.is_nan()) {
            return Err(SolveError::NonFinite(format!("gradient {g:?} at {x:?}")));
        }
        let certificate = KktCertificate::from_gradient(&x, &g, radius);
        if certificate.satisfies(opts.tolerance) || iterations >= opts.max_iterations {
            let converged = certificate.satisfies(opts.tolerance);
            return Ok(Ascent {
                point: x,
                certificate,
                converged,
                iterations,
            });
        }
        iterations += 1;

        let weights = step_weights(&objective.curvature(&x));
        // rounding noise in f; steps within it count as non-decreasing
        let noise = 16.0 * f64::EPSILON * (1.0 + fx.abs());
        let mut eta = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x
                .iter()
                .zip(&g)
                .zip(&weights)
                .map(|((xi, gi), di)| xi + eta * di * gi)
                .collect();
            let y = project_simplex_weighted(&trial, &weights, radius);
            if y.iter()
                .enumerate()
                .any(|(k, &v)| v <= 0.0 && objective.repels_boundary(k))
            {
                eta *= opts.backtrack;
                continue;
            }
            let fy = objective.value(&y)?;
            let predicted: f64 = g
                .iter()
                .zip(y.iter().zip(&x))
                .map(|(gi, (yi, xi))| gi * (yi - xi))
                .sum();
            if fy >= fx + opts.armijo * predicted - noise {
                accepted = Some((y, fy));
                break;
            }
            eta *= opts.backtrack;
        }
        match accepted {
            Some((y, fy)) if y != x => {
                x = y;
                fx = fy;
            }
            _ => {
                // no representable ascent step left
                return Ok(Ascent {
                    point: x,
                    converged: certificate.satisfies(opts.tolerance),
                    certificate,
                    iterations,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // f(x) = −Σ w_x (x_x − t_x)², maximized over the simplex of radius r.
    struct Quadratic {
        weight: Vec<f64>,
        target: Vec<f64>,
    }

    impl SimplexObjective for Quadratic {
        fn value(&self, x: &[f64]) -> Result<f64, SolveError> {
            Ok(-x
                .iter()
                .zip(&self.weight)
                .zip(&self.target)
                .map(|((x, w), t)| w * (x - t) * (x - t))
                .sum::<f64>())
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter()
                .zip(&self.weight)
                .zip(&self.target)
                .map(|((x, w), t)| -2.0 * w * (x - t))
                .collect()
        }
        fn curvature(&self, _: &[f64]) -> Vec<f64> {
            self.weight.iter().map(|w| 2.0 * w).collect()
        }
    }

    #[test]
    fn weighted_quadratic_with_active_bound() {
        // Stationarity: −2w_x(x_x − t_x) = ν on the support. With targets
        // (1, 1, −1), weights (1, 4, 1) and radius 1: x₃ = 0 and
        // x₁ + x₂ = 1 with 2(1 − x₁) = 8(1 − x₂) ⇒ x₁ = 0.2, x₂ = 0.8.
        let f = Quadratic {
            weight: vec![1.0, 4.0, 1.0],
            target: vec![1.0, 1.0, -1.0],
        };
        let out = maximize(&f, vec![1.0 / 3.0; 3], 1.0, &SolverOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.point[0] - 0.2).abs() < 1e-12);
        assert!((out.point[1] - 0.8).abs() < 1e-12);
        assert_eq!(out.point[2], 0.0);
        assert!(out.certificate.lambda[2] > 0.0);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let f = Quadratic {
            weight: vec![1.0, 1e-3],
            target: vec![0.0, 2.0],
        };
        let opts = SolverOptions {
            max_iterations: 0,
            ..SolverOptions::default()
        };
        let out = maximize(&f, vec![0.5, 0.5], 1.0, &opts).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 0);
    }
}
