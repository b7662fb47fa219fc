//! Player payoffs, marginal payoffs, the equilibrium marginal payoff `φ` and
//! the potential `Φ` whose maximizer over `n·Δ^{m−1}` is the equilibrium
//! aggregate.

use serde::Serialize;

use crate::model::{AggregateStrategy, Game, StrategyProfile};
use crate::quadrature::QuadratureError;

/// `φ(s)` together with `Φ(s)`; `φ = ∇Φ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialValue {
    pub phi_vector: Vec<f64>,
    pub potential: f64,
}

/// `u_i(S) = Σ_x p_x(s_x)·s_ix − c(s_i)`.
pub fn player_payoff(game: &Game, i: usize, profile: &StrategyProfile) -> f64 {
    let aggregate = profile.aggregate();
    payoff_against(game, profile.row(i), aggregate.values())
}

/// Gradient of [`player_payoff`] with respect to the player's own row:
/// `p_x(s_x) + p'_x(s_x)·s_ix − ∂_x c(s_i)`.
pub fn player_payoff_gradient(game: &Game, i: usize, profile: &StrategyProfile) -> Vec<f64> {
    let aggregate = profile.aggregate();
    payoff_gradient_against(game, profile.row(i), aggregate.values())
}

/// Payoff of a player playing `own` when per-market totals (own included)
/// are `totals`; neither needs to lie on a simplex.
pub fn payoff_against(game: &Game, own: &[f64], totals: &[f64]) -> f64 {
    let revenue: f64 = game
        .production()
        .iter()
        .zip(own.iter().zip(totals))
        .filter(|(_, (&sx_own, _))| sx_own > 0.0)
        .map(|(u, (&sx_own, &sx))| u.average(sx) * sx_own)
        .sum();
    revenue - game.cost().value(own)
}

/// Gradient of [`payoff_against`] in `own`.
pub fn payoff_gradient_against(game: &Game, own: &[f64], totals: &[f64]) -> Vec<f64> {
    game.production()
        .iter()
        .enumerate()
        .map(|(x, u)| {
            let own_x = own[x];
            let slope_term = if own_x > 0.0 {
                u.average_slope(totals[x]) * own_x
            } else {
                0.0
            };
            u.average(totals[x]) + slope_term - game.cost().partial(x, own)
        })
        .collect()
}

/// `φ_x(s) = (1 − 1/n)·u_x(s_x)/s_x + (1/n)·u'_x(s_x) − ∂_x c(s/n)`.
pub fn phi(game: &Game, s: &AggregateStrategy) -> Vec<f64> {
    phi_at(game, s.values())
}

/// [`phi`] at any non-negative point.
pub fn phi_at(game: &Game, s: &[f64]) -> Vec<f64> {
    let n = game.players() as f64;
    let per_player: Vec<f64> = s.iter().map(|v| v / n).collect();
    game.production()
        .iter()
        .enumerate()
        .map(|(x, u)| {
            (1.0 - 1.0 / n) * u.average(s[x]) + u.marginal(s[x]) / n
                - game.cost().partial(x, &per_player)
        })
        .collect()
}

/// `−∂φ_x/∂s_x`, the diagonal of `−∇²Φ`.
pub(crate) fn phi_descent_curvature(game: &Game, s: &[f64]) -> Vec<f64> {
    let n = game.players() as f64;
    game.production()
        .iter()
        .enumerate()
        .map(|(x, u)| {
            -((1.0 - 1.0 / n) * u.average_slope(s[x]) + u.curvature(s[x]) / n
                - game.cost().diagonal_curvature(x) / n)
        })
        .collect()
}

/// `Φ(s) = Σ_x [(1 − 1/n)·P_x(s_x) + (1/n)·u_x(s_x)] − n·c(s/n)` with
/// `P_x(s) = ∫₀ˢ u_x(t)/t dt`.
pub fn potential(game: &Game, s: &AggregateStrategy) -> Result<f64, QuadratureError> {
    potential_at(game, s.values())
}

/// [`potential`] at any non-negative point.
pub fn potential_at(game: &Game, s: &[f64]) -> Result<f64, QuadratureError> {
    let n = game.players() as f64;
    let mut total = 0.0;
    for (u, &sx) in game.production().iter().zip(s) {
        total += (1.0 - 1.0 / n) * u.average_integral(sx)? + u.value(sx) / n;
    }
    let per_player: Vec<f64> = s.iter().map(|v| v / n).collect();
    Ok(total - n * game.cost().value(&per_player))
}

pub fn potential_value(
    game: &Game,
    s: &AggregateStrategy,
) -> Result<PotentialValue, QuadratureError> {
    Ok(PotentialValue {
        phi_vector: phi(game, s),
        potential: potential(game, s)?,
    })
}

/// Total income `Σ_x u_x(s_x) − Σ_i c(s_i)`.
pub fn total_income(game: &Game, profile: &StrategyProfile) -> f64 {
    let aggregate = profile.aggregate();
    let revenue: f64 = game
        .production()
        .iter()
        .zip(aggregate.values())
        .map(|(u, &sx)| u.value(sx))
        .sum();
    revenue - profile.rows().map(|r| game.cost().value(r)).sum::<f64>()
}
