//! Nash equilibrium computation.
//!
//! The primary path maximizes the potential `Φ` over `n·Δ^{m−1}` by
//! projected gradient ascent and works for every supported cost. For
//! separable costs an independent bisection on the common marginal payoff
//! gives a second route to the same point.

pub(crate) mod ascent;
mod best_response;
mod bisect;
mod kkt;
mod projection;

use serde::Serialize;
use thiserror::Error;

use crate::model::{AggregateStrategy, Game, ModelError, INFINITE_MARGINAL};
use crate::potential::{phi_at, phi_descent_curvature, potential_at};
use crate::quadrature::QuadratureError;

pub use best_response::{best_response, BestResponse};
pub use bisect::invert_phi;
pub use bisect::phi_separable;
pub use kkt::{kkt_residuals, KktCertificate, KktResiduals, INVESTED_FRACTION};
pub use projection::project_simplex;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("bisect requires separable cost")]
    NotSeparable,
    #[error("could not bracket the marginal payoff after {expansions} expansions")]
    BracketFailure { expansions: usize },
    #[error("no convergence after {iterations} iterations (max KKT residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for the KKT residuals (scaled by `1 + |ν|` for stationarity).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Armijo sufficient-increase constant.
    pub armijo: f64,
    /// Step shrink factor per backtrack.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Geometric growth of the `ν` bracket in the bisection solver.
    pub bracket_expansion: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-9,
            max_iterations: 100_000,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            bracket_expansion: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pga,
    Bisect,
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub s_star: AggregateStrategy,
    /// Common marginal payoff on invested markets.
    pub nu: f64,
    pub certificate: KktCertificate,
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
}

struct Potential<'a>(&'a Game);

impl ascent::SimplexObjective for Potential<'_> {
    fn value(&self, s: &[f64]) -> Result<f64, SolveError> {
        Ok(potential_at(self.0, s)?)
    }

    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        phi_at(self.0, s)
    }

    fn curvature(&self, s: &[f64]) -> Vec<f64> {
        phi_descent_curvature(self.0, s)
    }

    fn repels_boundary(&self, k: usize) -> bool {
        self.0.market(k).marginal(0.0) >= INFINITE_MARGINAL
    }
}

/// Maximizes the potential starting from the uniform aggregate. Running out
/// of iterations is not an error: the best iterate comes back with
/// `converged == false`.
pub fn solve_ne_potential(game: &Game, opts: &SolverOptions) -> Result<Equilibrium, SolveError> {
    solve_ne_potential_from(
        game,
        &AggregateStrategy::uniform(game.players(), game.markets()),
        opts,
    )
}

pub fn solve_ne_potential_from(
    game: &Game,
    start: &AggregateStrategy,
    opts: &SolverOptions,
) -> Result<Equilibrium, SolveError> {
    let radius = game.players() as f64;
    let out = ascent::maximize(&Potential(game), start.values().to_vec(), radius, opts)?;
    Ok(Equilibrium {
        s_star: AggregateStrategy::new(out.point, game.players())?,
        nu: out.certificate.nu,
        certificate: out.certificate,
        method: Method::Pga,
        converged: out.converged,
        iterations: out.iterations,
    })
}

/// Solves `Σ_x φ_x⁻¹(ν) = n` by bisection; separable costs only.
pub fn solve_ne_separable(game: &Game, opts: &SolverOptions) -> Result<Equilibrium, SolveError> {
    let b = bisect::solve(game, opts)?;
    let certificate = kkt_residuals(game, &b.s_star);
    Ok(Equilibrium {
        converged: certificate.satisfies(opts.tolerance),
        s_star: b.s_star,
        nu: b.nu,
        certificate,
        method: Method::Bisect,
        iterations: b.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostFunction, GameSpec, ProductionFunction, SeparableTerm};

    fn game(players: usize, markets: Vec<ProductionFunction>, cost: CostFunction) -> Game {
        GameSpec {
            players,
            markets,
            cost,
        }
        .validate()
        .unwrap()
    }

    fn power(a: f64, p: f64) -> ProductionFunction {
        ProductionFunction::Power { a, p }
    }

    fn mixed() -> Game {
        game(
            2,
            vec![
                power(1.0, 0.5),
                ProductionFunction::Linquad { a: 0.5, b: 0.0 },
            ],
            CostFunction::Zero,
        )
    }

    #[test]
    fn identical_markets_split_evenly() {
        let g = game(5, vec![power(1.0, 0.5); 3], CostFunction::Zero);
        let eq = solve_ne_potential(&g, &SolverOptions::default()).unwrap();
        assert!(eq.converged);
        for v in eq.s_star.values() {
            assert!((v - 5.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_power_markets_both_solvers() {
        let g = game(
            2,
            vec![power(1.0, 0.5), power(2.0, 0.5)],
            CostFunction::Zero,
        );
        let opts = SolverOptions::default();
        let pga = solve_ne_potential(&g, &opts).unwrap();
        let bis = solve_ne_separable(&g, &opts).unwrap();
        for eq in [&pga, &bis] {
            assert!(eq.converged, "{:?}", eq.method);
            assert!((eq.s_star.values()[0] - 0.4).abs() < 1e-9);
            assert!((eq.s_star.values()[1] - 1.6).abs() < 1e-9);
        }
        assert!((bis.nu - 0.75 / 0.4f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn corner_equilibrium_both_solvers() {
        let g = mixed();
        let opts = SolverOptions::default();
        let pga = solve_ne_potential(&g, &opts).unwrap();
        let bis = solve_ne_separable(&g, &opts).unwrap();
        let nu = 0.75 / 2f64.sqrt();
        for eq in [&pga, &bis] {
            assert!(eq.converged);
            assert_eq!(eq.s_star.values(), &[2.0, 0.0]);
            assert!((eq.nu - nu).abs() < 1e-9);
            assert!((eq.certificate.lambda[1] - (nu - 0.5)).abs() < 1e-9);
        }
    }

    #[test]
    fn corner_matches_grid_search_on_potential() {
        // Φ(s₁, 2 − s₁) on a 1e-4 grid.
        let g = mixed();
        let best = (0..=20_000)
            .map(|k| k as f64 * 1e-4)
            .map(|s1| (s1, potential_at(&g, &[s1, 2.0 - s1]).unwrap()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert_eq!(best.0, 2.0);
    }

    #[test]
    fn invert_phi_examples() {
        let sqrt = game(
            2,
            vec![power(1.0, 0.5), power(1.0, 0.5)],
            CostFunction::Zero,
        );
        assert!((invert_phi(&sqrt, 0, 0.75).unwrap() - 1.0).abs() < 1e-14);
        let g = mixed();
        assert_eq!(invert_phi(&g, 1, 0.51).unwrap(), 0.0);
        // flat at ν: midpoint of [0, n]
        assert_eq!(invert_phi(&g, 1, 0.5).unwrap(), 1.0);
        assert_eq!(invert_phi(&g, 1, 0.49).unwrap(), 2.0);
    }

    #[test]
    fn invert_phi_round_trip_and_monotone() {
        let g = game(
            3,
            vec![
                power(1.2, 0.3),
                ProductionFunction::Log { a: 2.0, b: 1.5 },
                ProductionFunction::Linquad { a: 1.5, b: 0.2 },
            ],
            CostFunction::Separable {
                terms: vec![
                    SeparableTerm { q: 0.3, l: 0.0 },
                    SeparableTerm { q: 0.0, l: 0.1 },
                    SeparableTerm { q: 1.0, l: 0.05 },
                ],
            },
        );
        for x in 0..3 {
            let hi = phi_separable(&g, x, 0.05);
            let lo = phi_separable(&g, x, 2.9);
            let mut previous = f64::INFINITY;
            for k in 0..=50 {
                let nu = lo + (hi - lo) * k as f64 / 50.0;
                let s = invert_phi(&g, x, nu).unwrap();
                assert!(s <= previous);
                previous = s;
                assert!(
                    (phi_separable(&g, x, s) - nu).abs() < 1e-9 * (1.0 + nu.abs()),
                    "x={x} nu={nu}"
                );
            }
        }
    }

    #[test]
    fn bisect_rejects_coupled_cost() {
        let g = game(
            2,
            vec![power(1.0, 0.5), power(1.0, 0.5)],
            CostFunction::Quadratic {
                matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
        );
        let err = solve_ne_separable(&g, &SolverOptions::default()).unwrap_err();
        assert_eq!(err.to_string(), "bisect requires separable cost");
        assert!(matches!(
            invert_phi(&g, 0, 1.0),
            Err(SolveError::NotSeparable)
        ));
    }

    #[test]
    fn kkt_detects_non_equilibrium_uniform_point() {
        let g = game(
            2,
            vec![power(1.0, 0.5), power(2.0, 0.5)],
            CostFunction::Zero,
        );
        let c = kkt_residuals(&g, &AggregateStrategy::uniform(2, 2));
        assert!(c.residuals.saddle > 0.01);
    }

    #[test]
    fn monopoly_multiplier_is_marginal_revenue() {
        let g = game(
            1,
            vec![power(1.0, 0.5), power(2.0, 0.5)],
            CostFunction::Zero,
        );
        let eq = solve_ne_potential(&g, &SolverOptions::default()).unwrap();
        let s = eq.s_star.values();
        for x in 0..2 {
            assert!((eq.certificate.nu - g.market(x).marginal(s[x])).abs() < 1e-9);
        }
    }
}
