use crate::model::{Game, ModelError, INFINITE_MARGINAL, SIMPLEX_TOL};
use crate::potential::{payoff_against, payoff_gradient_against};
use crate::solver::ascent::{maximize, SimplexObjective};
use crate::solver::kkt::KktCertificate;
use crate::solver::{SolveError, SolverOptions};

/// A player's optimal allocation against a fixed opponent aggregate.
#[derive(Debug, Clone)]
pub struct BestResponse {
    pub strategy: Vec<f64>,
    pub certificate: KktCertificate,
    pub iterations: usize,
}

struct PlayerPayoff<'a> {
    game: &'a Game,
    opponents: &'a [f64],
}

impl PlayerPayoff<'_> {
    fn totals(&self, own: &[f64]) -> Vec<f64> {
        own.iter().zip(self.opponents).map(|(a, b)| a + b).collect()
    }
}

impl SimplexObjective for PlayerPayoff<'_> {
    fn value(&self, own: &[f64]) -> Result<f64, SolveError> {
        Ok(payoff_against(self.game, own, &self.totals(own)))
    }

    fn gradient(&self, own: &[f64]) -> Vec<f64> {
        payoff_gradient_against(self.game, own, &self.totals(own))
    }

    fn curvature(&self, own: &[f64]) -> Vec<f64> {
        let totals = self.totals(own);
        self.game
            .production()
            .iter()
            .enumerate()
            .map(|(x, u)| {
                let own_term = if own[x] > 0.0 {
                    u.average_curvature(totals[x]) * own[x]
                } else {
                    0.0
                };
                -(2.0 * u.average_slope(totals[x]) + own_term)
                    + self.game.cost().diagonal_curvature(x)
            })
            .collect()
    }

    fn repels_boundary(&self, k: usize) -> bool {
        self.opponents[k] <= 0.0 && self.game.market(k).average(0.0) >= INFINITE_MARGINAL
    }
}

/// Maximizes `u_i(s_i; s_{−i})` over the unit simplex for an opponent
/// aggregate `opponents ∈ (n−1)·Δ^{m−1}`. All players share one payoff
/// function, so the result does not depend on `player` beyond its range.
pub fn best_response(
    game: &Game,
    player: usize,
    opponents: &[f64],
    opts: &SolverOptions,
) -> Result<BestResponse, SolveError> {
    let n = game.players();
    let m = game.markets();
    if player >= n {
        return Err(
            ModelError::Shape(format!("player {player} out of range for {n} players")).into(),
        );
    }
    if opponents.len() != m {
        return Err(ModelError::Shape(format!(
            "opponent aggregate has {} entries, expected {m}",
            opponents.len()
        ))
        .into());
    }
    let expected = (n - 1) as f64;
    let sum: f64 = opponents.iter().sum();
    if opponents.iter().any(|v| !(v.is_finite() && *v >= 0.0))
        || (sum - expected).abs() > SIMPLEX_TOL
    {
        return Err(ModelError::NotOnSimplex {
            what: "opponent aggregate".into(),
            detail: format!("entries {opponents:?} must be non-negative and sum to {expected}"),
        }
        .into());
    }
    let objective = PlayerPayoff { game, opponents };
    let out = maximize(&objective, vec![1.0 / m as f64; m], 1.0, opts)?;
    if !out.converged {
        return Err(SolveError::NotConverged {
            iterations: out.iterations,
            residual: out.certificate.max_residual(),
        });
    }
    Ok(BestResponse {
        strategy: out.point,
        certificate: out.certificate,
        iterations: out.iterations,
    })
}
