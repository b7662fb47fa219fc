use serde::Serialize;

use crate::model::{AggregateStrategy, Game};
use crate::potential::phi_at;

/// Markets with `s_x > INVESTED_FRACTION · radius` count as invested when
/// extracting the multiplier.
pub const INVESTED_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktResiduals {
    /// `‖g + λ − ν·1‖∞`.
    pub saddle: f64,
    /// `max_x |s_x·λ_x|`.
    pub complementarity: f64,
    /// `|Σ_x s_x − radius|`.
    pub primal_sum: f64,
    /// `min_x s_x`; negative values are primal violations.
    pub primal_min: f64,
}

/// Multipliers and residuals of the optimality conditions for maximizing a
/// concave function with gradient `g` over a scaled simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktCertificate {
    pub nu: f64,
    pub lambda: Vec<f64>,
    pub residuals: KktResiduals,
}

impl KktCertificate {
    /// `ν` is the largest gradient component over invested markets; only
    /// uninvested markets carry a slack `λ_x = max(0, ν − g_x)`, so on
    /// invested markets the saddle residual measures the spread of `g`.
    pub fn from_gradient(point: &[f64], gradient: &[f64], radius: f64) -> Self {
        let threshold = INVESTED_FRACTION * radius;
        let invested = |x: usize| point[x] > threshold;
        let nu = (0..point.len())
            .filter(|&x| invested(x))
            .map(|x| gradient[x])
            .fold(f64::NEG_INFINITY, f64::max);
        let lambda: Vec<f64> = (0..point.len())
            .map(|x| {
                if invested(x) {
                    0.0
                } else {
                    (nu - gradient[x]).max(0.0)
                }
            })
            .collect();
        let saddle = (0..point.len())
            .map(|x| (gradient[x] + lambda[x] - nu).abs())
            .fold(0.0, f64::max);
        let complementarity = point
            .iter()
            .zip(&lambda)
            .map(|(s, l)| (s * l).abs())
            .fold(0.0, f64::max);
        let primal_sum = (point.iter().sum::<f64>() - radius).abs();
        let primal_min = point.iter().copied().fold(f64::INFINITY, f64::min);
        KktCertificate {
            nu,
            lambda,
            residuals: KktResiduals {
                saddle,
                complementarity,
                primal_sum,
                primal_min,
            },
        }
    }

    /// Largest residual, counting a negative `primal_min` as its magnitude.
    pub fn max_residual(&self) -> f64 {
        let r = &self.residuals;
        r.saddle
            .max(r.complementarity)
            .max(r.primal_sum)
            .max((-r.primal_min).max(0.0))
    }

    /// Stationarity and complementarity within `tolerance·(1 + |ν|)`, primal
    /// feasibility within `tolerance`.
    pub fn satisfies(&self, tolerance: f64) -> bool {
        let r = &self.residuals;
        let scaled = tolerance * (1.0 + self.nu.abs());
        r.saddle <= scaled
            && r.complementarity <= scaled
            && r.primal_sum <= tolerance
            && r.primal_min >= -tolerance
    }
}

/// Certificate for `s` as a maximizer of the potential, using `∇Φ = φ`.
pub fn kkt_residuals(game: &Game, s: &AggregateStrategy) -> KktCertificate {
    KktCertificate::from_gradient(s.values(), &phi_at(game, s.values()), game.players() as f64)
}
