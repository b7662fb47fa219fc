//! Social optimum and the efficiency of the equilibrium.
//!
//! Revenues depend only on aggregates and `Σ_i c(s_i) ≥ n·c(s/n)` for convex
//! `c`, so total income is maximized by a symmetric split and the search runs
//! over aggregates `s ∈ n·Δ^{m−1}` with `W(s) = Σ_x u_x(s_x) − n·c(s/n)`.

use serde::Serialize;

use crate::model::{AggregateStrategy, Game, INFINITE_MARGINAL};
use crate::solver::ascent::{maximize, SimplexObjective};
use crate::solver::{solve_ne_potential, SolveError, SolverOptions};

/// `W(s) = Σ_x u_x(s_x) − n·c(s/n)`, total income of the symmetric split of `s`.
pub fn social_welfare(game: &Game, s: &AggregateStrategy) -> f64 {
    welfare_at(game, s.values())
}

fn welfare_at(game: &Game, s: &[f64]) -> f64 {
    let n = game.players() as f64;
    let revenue: f64 = game
        .production()
        .iter()
        .zip(s)
        .map(|(u, &v)| u.value(v))
        .sum();
    let per_player: Vec<f64> = s.iter().map(|v| v / n).collect();
    revenue - n * game.cost().value(&per_player)
}

/// Marginal income `u'_x(s_x) − ∂_x c(s/n)`, the gradient of `W`.
pub fn marginal_income(game: &Game, s: &AggregateStrategy) -> Vec<f64> {
    marginal_income_at(game, s.values())
}

fn marginal_income_at(game: &Game, s: &[f64]) -> Vec<f64> {
    let n = game.players() as f64;
    let per_player: Vec<f64> = s.iter().map(|v| v / n).collect();
    game.production()
        .iter()
        .enumerate()
        .map(|(x, u)| u.marginal(s[x]) - game.cost().partial(x, &per_player))
        .collect()
}

struct Welfare<'a>(&'a Game);

impl SimplexObjective for Welfare<'_> {
    fn value(&self, s: &[f64]) -> Result<f64, SolveError> {
        Ok(welfare_at(self.0, s))
    }

    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        marginal_income_at(self.0, s)
    }

    fn curvature(&self, s: &[f64]) -> Vec<f64> {
        let n = self.0.players() as f64;
        self.0
            .production()
            .iter()
            .enumerate()
            .map(|(x, u)| -u.curvature(s[x]) + self.0.cost().diagonal_curvature(x) / n)
            .collect()
    }

    fn repels_boundary(&self, k: usize) -> bool {
        self.0.market(k).marginal(0.0) >= INFINITE_MARGINAL
    }
}

/// Maximizes `W` over `n·Δ^{m−1}`.
pub fn solve_social_optimum(
    game: &Game,
    opts: &SolverOptions,
) -> Result<AggregateStrategy, SolveError> {
    let start = AggregateStrategy::uniform(game.players(), game.markets());
    let out = maximize(
        &Welfare(game),
        start.into_values(),
        game.players() as f64,
        opts,
    )?;
    if !out.converged {
        return Err(SolveError::NotConverged {
            iterations: out.iterations,
            residual: out.certificate.max_residual(),
        });
    }
    Ok(AggregateStrategy::new(out.point, game.players())?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub s_ne: AggregateStrategy,
    pub s_so: AggregateStrategy,
    #[serde(rename = "W_ne")]
    pub w_ne: f64,
    #[serde(rename = "W_so")]
    pub w_so: f64,
    /// `W_ne / W_so`, absent when `W_so ≤ 0`.
    pub ratio: Option<f64>,
    pub gap: f64,
}

pub fn efficiency_report(
    game: &Game,
    opts: &SolverOptions,
) -> Result<EfficiencyReport, SolveError> {
    let ne = solve_ne_potential(game, opts)?;
    if !ne.converged {
        return Err(SolveError::NotConverged {
            iterations: ne.iterations,
            residual: ne.certificate.max_residual(),
        });
    }
    let s_so = solve_social_optimum(game, opts)?;
    let w_ne = social_welfare(game, &ne.s_star);
    let w_so = social_welfare(game, &s_so);
    Ok(EfficiencyReport {
        s_ne: ne.s_star,
        s_so,
        w_ne,
        w_so,
        ratio: (w_so > 0.0).then(|| w_ne / w_so),
        gap: w_so - w_ne,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawClosedForm {
    pub s_ne: Vec<f64>,
    pub s_so: Vec<f64>,
    pub nu: f64,
}

/// Equilibrium and social optimum of `u_x = a_x·s^p` markets with zero cost:
/// both equal `n·a_x^{1/(1−p)} / Σ_y a_y^{1/(1−p)}`, and the common marginal
/// payoff is `ν = a_x·s_x^{p−1}·(n − 1 + p)/n`.
pub fn power_law_closed_forms(a: &[f64], p: f64, n: usize) -> PowerLawClosedForm {
    let nf = n as f64;
    let weights: Vec<f64> = a.iter().map(|ax| ax.powf(1.0 / (1.0 - p))).collect();
    let total: f64 = weights.iter().sum();
    let s: Vec<f64> = weights.iter().map(|w| nf * w / total).collect();
    let nu = a[0] * s[0].powf(p - 1.0) * (nf - 1.0 + p) / nf;
    PowerLawClosedForm {
        s_ne: s.clone(),
        s_so: s,
        nu,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostFunction, GameSpec, ProductionFunction, StrategyProfile};
    use crate::potential::total_income;

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
    fn closed_form_examples() {
        let c = power_law_closed_forms(&[1.0, 2.0], 0.5, 2);
        assert!((c.s_ne[0] - 0.4).abs() < 1e-15 && (c.s_ne[1] - 1.6).abs() < 1e-15);
        assert!((c.nu - 1.1858541).abs() < 1e-7);
        let c = power_law_closed_forms(&[3.0; 4], 0.3, 6);
        assert!(c.s_ne.iter().all(|v| (v - 1.5).abs() < 1e-15));
    }

    #[test]
    fn social_optimum_examples() {
        let opts = SolverOptions::default();
        let g = game(
            2,
            vec![power(1.0, 0.5), power(2.0, 0.5)],
            CostFunction::Zero,
        );
        let s = solve_social_optimum(&g, &opts).unwrap();
        assert!((s.values()[0] - 0.4).abs() < 1e-9);
        let s = solve_social_optimum(&mixed(), &opts).unwrap();
        assert!((s.values()[0] - 1.0).abs() < 1e-9 && (s.values()[1] - 1.0).abs() < 1e-9);
        let g = game(
            3,
            vec![ProductionFunction::Log { a: 1.0, b: 2.0 }; 3],
            CostFunction::Zero,
        );
        let s = solve_social_optimum(&g, &opts).unwrap();
        assert!(s.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn mixed_game_grid_oracle() {
        let g = mixed();
        let (mut best_w, mut best_s) = (f64::NEG_INFINITY, 0.0);
        for k in 0..=20_000 {
            let s1 = k as f64 * 1e-4;
            let w = welfare_at(&g, &[s1, 2.0 - s1]);
            if w > best_w {
                (best_w, best_s) = (w, s1);
            }
        }
        assert!((best_s - 1.0).abs() <= 1e-4);
        let r = efficiency_report(&g, &SolverOptions::default()).unwrap();
        assert!((r.w_ne - 2f64.sqrt()).abs() < 1e-9);
        assert!((r.w_so - 1.5).abs() < 1e-9 && (r.w_so - best_w).abs() < 1e-8);
        assert!((r.ratio.unwrap() - 0.9428090).abs() < 1e-7);
        assert!((r.gap - (1.5 - 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn same_order_power_law_is_efficient() {
        let g = game(
            3,
            vec![power(1.0, 0.4), power(2.5, 0.4), power(0.7, 0.4)],
            CostFunction::Zero,
        );
        let r = efficiency_report(&g, &SolverOptions::default()).unwrap();
        for (a, b) in r.s_ne.values().iter().zip(r.s_so.values()) {
            assert!((a - b).abs() < 1e-7);
        }
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn monopoly_is_efficient() {
        let g = game(
            1,
            vec![power(1.0, 0.5), ProductionFunction::Log { a: 1.0, b: 3.0 }],
            CostFunction::Zero,
        );
        let r = efficiency_report(&g, &SolverOptions::default()).unwrap();
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ratio_is_omitted_for_non_positive_income() {
        let g = game(
            2,
            vec![
                ProductionFunction::Linquad { a: 0.1, b: 0.01 },
                ProductionFunction::Linquad { a: 0.1, b: 0.02 },
            ],
            CostFunction::Quadratic {
                matrix: vec![vec![5.0, 0.0], vec![0.0, 5.0]],
            },
        );
        let r = efficiency_report(&g, &SolverOptions::default()).unwrap();
        assert!(r.w_so <= 0.0);
        assert_eq!(r.ratio, None);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["ratio"].is_null());
        assert!(json["gap"].as_f64().unwrap() >= -1e-9);
    }

    #[test]
    fn symmetric_reduction_matches_full_profile_grid() {
        // n = 2, m = 2: each profile is (s₁₁, s₂₁); total income over the full
        // square never beats the aggregate optimum, which lies on the diagonal.
        let g = game(
            2,
            vec![power(1.0, 0.5), ProductionFunction::Log { a: 1.0, b: 1.0 }],
            CostFunction::Quadratic {
                matrix: vec![vec![0.6, 0.1], vec![0.1, 0.3]],
            },
        );
        let s_so = solve_social_optimum(&g, &SolverOptions::default()).unwrap();
        let w_so = social_welfare(&g, &s_so);
        let steps = 400;
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..=steps {
            for j in 0..=steps {
                let (a, b) = (i as f64 / steps as f64, j as f64 / steps as f64);
                let profile =
                    StrategyProfile::new(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]]).unwrap();
                let w = total_income(&g, &profile);
                if w > best.0 {
                    best = (w, a, b);
                }
            }
        }
        assert!(best.0 <= w_so + 1e-12);
        assert!(w_so - best.0 < 1e-4);
        assert!((best.1 - best.2).abs() <= 1.0 / steps as f64 + 1e-15);
        assert!((best.1 + best.2 - s_so.values()[0]).abs() < 2.0 / steps as f64);
    }

    #[test]
    fn marginal_income_is_uniform_at_optimum() {
        let g = game(
            3,
            vec![
                power(1.0, 0.3),
                ProductionFunction::Log { a: 2.0, b: 0.5 },
                ProductionFunction::Linquad { a: 1.0, b: 0.1 },
            ],
            CostFunction::Quadratic {
                matrix: vec![
                    vec![1.0, 0.2, 0.0],
                    vec![0.2, 0.5, 0.0],
                    vec![0.0, 0.0, 0.2],
                ],
            },
        );
        let s = solve_social_optimum(&g, &SolverOptions::default()).unwrap();
        let mi = marginal_income(&g, &s);
        let invested: Vec<f64> = (0..3)
            .filter(|&x| s.values()[x] > 1e-8)
            .map(|x| mi[x])
            .collect();
        let spread = invested.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - invested.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread <= 1e-7);
    }
}
