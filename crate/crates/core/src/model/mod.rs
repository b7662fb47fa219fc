//! Game specification, function families, simplex-valued strategy types and
//! the checks that a game satisfies the concavity and convexity assumptions
//! the equilibrium theory needs.

mod cost;
mod production;
mod strategy;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::{CostFunction, SeparableTerm};
pub use production::{ProductionFunction, Tabulated, INFINITE_MARGINAL};
pub use strategy::{random_profile, AggregateStrategy, StrategyProfile, SIMPLEX_TOL};

/// Number of Chebyshev-spaced sample points used by the concavity checks.
pub const VALIDATION_SAMPLES: usize = 256;

/// Relative slack allowed by the linquad monotonicity condition `2·b·n ≤ a`.
pub const LINQUAD_SLACK: f64 = 1e-9;

const SHAPE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{what} is not on the simplex: {detail}")]
    NotOnSimplex { what: String, detail: String },
    #[error("game violates the model assumptions:\n{0}")]
    Invalid(Violations),
}

/// One failed assumption, with the sample that witnesses it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    Structure {
        detail: String,
    },
    NonConcaveProduction {
        market: usize,
        s1: f64,
        s2: f64,
        gap: f64,
    },
    IncreasingAverageRevenue {
        market: usize,
        s1: f64,
        s2: f64,
        increase: f64,
    },
    LinquadDomain {
        market: usize,
        a: f64,
        b: f64,
        players: usize,
    },
    AsymmetricCost {
        row: usize,
        col: usize,
        difference: f64,
    },
    NonConvexCost {
        v1: Vec<f64>,
        v2: Vec<f64>,
        gap: f64,
    },
    NegativeCostCurvature {
        direction: Vec<f64>,
        form: f64,
    },
    StrictnessUnmet {
        strictly_concave_markets: usize,
        markets: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Structure { detail } => write!(f, "{detail}"),
            Violation::NonConcaveProduction { market, s1, s2, gap } => write!(
                f,
                "market {market}: production is not concave between s={s1} and s={s2} (midpoint gap {gap:e})"
            ),
            Violation::IncreasingAverageRevenue { market, s1, s2, increase } => write!(
                f,
                "market {market}: average revenue increases from s={s1} to s={s2} (by {increase:e})"
            ),
            Violation::LinquadDomain { market, a, b, players } => write!(
                f,
                "market {market}: linquad revenue decreases on [0, {players}] (2·b·n = {} > a = {a})",
                2.0 * b * *players as f64
            ),
            Violation::AsymmetricCost { row, col, difference } => write!(
                f,
                "cost matrix is not symmetric at ({row}, {col}) (difference {difference:e})"
            ),
            Violation::NonConvexCost { v1, v2, gap } => write!(
                f,
                "cost is not convex between {v1:?} and {v2:?} (midpoint gap {gap:e})"
            ),
            Violation::NegativeCostCurvature { direction, form } => write!(
                f,
                "cost matrix has negative curvature along {direction:?} (quadratic form {form:e})"
            ),
            Violation::StrictnessUnmet { strictly_concave_markets, markets } => write!(
                f,
                "only {strictly_concave_markets} of {markets} production functions are strictly concave and the cost is not strictly convex"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.0 {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Unvalidated game description: `n` players of unit capacity, one
/// production function per market and a cost shared by all players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub players: usize,
    pub markets: Vec<ProductionFunction>,
    pub cost: CostFunction,
}

/// A game that passed [`validate_game`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Game {
    spec: GameSpec,
}

impl Game {
    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn players(&self) -> usize {
        self.spec.players
    }

    pub fn markets(&self) -> usize {
        self.spec.markets.len()
    }

    pub fn market(&self, x: usize) -> &ProductionFunction {
        &self.spec.markets[x]
    }

    pub fn production(&self) -> &[ProductionFunction] {
        &self.spec.markets
    }

    pub fn cost(&self) -> &CostFunction {
        &self.spec.cost
    }

    pub fn is_separable(&self) -> bool {
        self.spec.cost.is_separable()
    }
}

impl GameSpec {
    pub fn validate(self) -> Result<Game, ModelError> {
        validate_game(self)
    }
}

/// Checks structure, concavity of every production function, monotone
/// average revenue, convexity of the cost and the strictness clause. All
/// violations are collected rather than stopping at the first.
pub fn validate_game(spec: GameSpec) -> Result<Game, ModelError> {
    let mut violations = Vec::new();
    let n = spec.players;
    let m = spec.markets.len();
    if n == 0 {
        violations.push(Violation::Structure {
            detail: "at least one player is required".into(),
        });
    }
    if m < 2 {
        violations.push(Violation::Structure {
            detail: format!("at least two markets are required, got {m}"),
        });
    }
    if let Some(dim) = spec.cost.dimension() {
        if dim != m {
            violations.push(Violation::Structure {
                detail: format!("cost has dimension {dim} but there are {m} markets"),
            });
        }
    }
    if let CostFunction::Quadratic { matrix } = &spec.cost {
        if matrix.iter().any(|row| row.len() != matrix.len()) {
            violations.push(Violation::Structure {
                detail: "cost matrix must be square".into(),
            });
        }
    }
    for (x, u) in spec.markets.iter().enumerate() {
        if let Err(detail) = u.check_parameters() {
            violations.push(Violation::Structure {
                detail: format!("market {x}: {detail}"),
            });
        }
    }
    let cost_values_finite = match &spec.cost {
        CostFunction::Zero => true,
        CostFunction::Quadratic { matrix } => matrix.iter().flatten().all(|a| a.is_finite()),
        CostFunction::Separable { terms } => terms
            .iter()
            .all(|t| t.q.is_finite() && t.l.is_finite() && t.q >= 0.0),
    };
    if !cost_values_finite {
        violations.push(Violation::Structure {
            detail: "cost coefficients must be finite, with q >= 0 for separable terms".into(),
        });
    }
    if !violations.is_empty() {
        return Err(ModelError::Invalid(Violations(violations)));
    }

    let capacity = n as f64;
    let grid = chebyshev_grid(capacity, VALIDATION_SAMPLES);
    for (x, u) in spec.markets.iter().enumerate() {
        if let ProductionFunction::Linquad { a, b } = u {
            if 2.0 * b * capacity > a * (1.0 + LINQUAD_SLACK) {
                violations.push(Violation::LinquadDomain {
                    market: x,
                    a: *a,
                    b: *b,
                    players: n,
                });
            }
        }
        if let Some(v) = concavity_witness(u, &grid) {
            violations.push(Violation::NonConcaveProduction {
                market: x,
                s1: v.0,
                s2: v.1,
                gap: v.2,
            });
        }
        if let Some(v) = average_revenue_witness(u, &grid) {
            violations.push(Violation::IncreasingAverageRevenue {
                market: x,
                s1: v.0,
                s2: v.1,
                increase: v.2,
            });
        }
    }
    violations.extend(cost_violations(&spec.cost, m));

    let strictly_concave = spec
        .markets
        .iter()
        .filter(|u| u.is_strictly_concave(capacity))
        .count();
    if strictly_concave + 1 < m && !cost_is_strictly_convex(&spec.cost) {
        violations.push(Violation::StrictnessUnmet {
            strictly_concave_markets: strictly_concave,
            markets: m,
        });
    }

    if violations.is_empty() {
        Ok(Game { spec })
    } else {
        Err(ModelError::Invalid(Violations(violations)))
    }
}

/// Chebyshev points on `[0, hi]`, ascending and including both ends.
fn chebyshev_grid(hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let theta = std::f64::consts::PI * k as f64 / (count - 1) as f64;
            0.5 * hi * (1.0 - theta.cos())
        })
        .collect()
}

fn sample_pairs(len: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..)
        .map(|k| 1usize << k)
        .take_while(move |&stride| stride < len)
        .flat_map(move |stride| (0..len - stride).map(move |i| (i, i + stride)))
}

fn concavity_witness(u: &ProductionFunction, grid: &[f64]) -> Option<(f64, f64, f64)> {
    sample_pairs(grid.len()).find_map(|(i, j)| {
        let (s1, s2) = (grid[i], grid[j]);
        let (u1, u2) = (u.value(s1), u.value(s2));
        let gap = 0.5 * (u1 + u2) - u.value(0.5 * (s1 + s2));
        let tol = 1e-12 * (1.0 + u1.abs().max(u2.abs()));
        (gap > tol).then_some((s1, s2, gap))
    })
}

fn average_revenue_witness(u: &ProductionFunction, grid: &[f64]) -> Option<(f64, f64, f64)> {
    grid.windows(2).skip(1).find_map(|w| {
        let (p1, p2) = (u.average(w[0]), u.average(w[1]));
        let increase = p2 - p1;
        (increase > 1e-12 * (1.0 + p1.abs())).then_some((w[0], w[1], increase))
    })
}

/// Deterministic sample of interior simplex points used by the cost checks.
fn simplex_samples(m: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut points: Vec<Vec<f64>> = (0..m)
        .map(|x| {
            let mut e = vec![0.0; m];
            e[x] = 1.0;
            e
        })
        .collect();
    points.push(vec![1.0 / m as f64; m]);
    for _ in 0..64 {
        let draws: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = draws.iter().sum();
        points.push(draws.into_iter().map(|d| d / total).collect());
    }
    points
}

fn cost_violations(cost: &CostFunction, m: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    if let CostFunction::Quadratic { matrix } = cost {
        for row in 0..m {
            for col in row + 1..m {
                let difference = (matrix[row][col] - matrix[col][row]).abs();
                if difference > SHAPE_TOL {
                    out.push(Violation::AsymmetricCost {
                        row,
                        col,
                        difference,
                    });
                }
            }
        }
        let mut directions = Vec::new();
        for x in 0..m {
            for y in x..m {
                let mut plus = vec![0.0; m];
                plus[x] += 1.0;
                plus[y] += 1.0;
                directions.push(plus);
                if y != x {
                    let mut minus = vec![0.0; m];
                    minus[x] = 1.0;
                    minus[y] = -1.0;
                    directions.push(minus);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xc057);
        for _ in 0..64 {
            directions.push((0..m).map(|_| StandardNormal.sample(&mut rng)).collect());
        }
        if let Some((direction, form)) = directions
            .into_iter()
            .map(|d| {
                let form = 2.0 * cost.value(&d);
                (d, form)
            })
            .find(|(_, form)| *form < -SHAPE_TOL)
        {
            out.push(Violation::NegativeCostCurvature { direction, form });
        }
    }
    let points = simplex_samples(m);
    'outer: for (i, v1) in points.iter().enumerate() {
        for v2 in &points[i + 1..] {
            let mid: Vec<f64> = v1.iter().zip(v2).map(|(a, b)| 0.5 * (a + b)).collect();
            let (c1, c2) = (cost.value(v1), cost.value(v2));
            let gap = cost.value(&mid) - 0.5 * (c1 + c2);
            if gap > SHAPE_TOL * (1.0 + c1.abs().max(c2.abs())) {
                out.push(Violation::NonConvexCost {
                    v1: v1.clone(),
                    v2: v2.clone(),
                    gap,
                });
                break 'outer;
            }
        }
    }
    out
}

fn cost_is_strictly_convex(cost: &CostFunction) -> bool {
    match cost {
        CostFunction::Zero => false,
        CostFunction::Quadratic { matrix } => {
            let m = matrix.len();
            let a = DMatrix::from_fn(m, m, |i, j| 0.5 * (matrix[i][j] + matrix[j][i]));
            a.cholesky().is_some_and(|c| {
                // reject numerically singular factors
                let l = c.l();
                let diag = DVector::from_iterator(m, (0..m).map(|i| l[(i, i)]));
                diag.min() > 1e-12
            })
        }
        CostFunction::Separable { terms } => terms.iter().all(|t| t.q > 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(a: f64, p: f64) -> ProductionFunction {
        ProductionFunction::Power { a, p }
    }

    fn linear(a: f64) -> ProductionFunction {
        ProductionFunction::Linquad { a, b: 0.0 }
    }

    fn violations(spec: GameSpec) -> Vec<Violation> {
        match validate_game(spec) {
            Err(ModelError::Invalid(v)) => v.0,
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn strictly_concave_markets_are_valid() {
        let spec = GameSpec {
            players: 2,
            markets: vec![power(1.0, 0.5), power(2.0, 0.5)],
            cost: CostFunction::Zero,
        };
        assert!(validate_game(spec).is_ok());
    }

    #[test]
    fn two_linear_markets_without_cost_fail_strictness() {
        let spec = GameSpec {
            players: 2,
            markets: vec![linear(1.0), linear(1.0)],
            cost: CostFunction::Zero,
        };
        assert_eq!(
            violations(spec),
            vec![Violation::StrictnessUnmet {
                strictly_concave_markets: 0,
                markets: 2
            }]
        );
    }

    #[test]
    fn strictly_convex_cost_rescues_linear_markets() {
        let spec = GameSpec {
            players: 2,
            markets: vec![linear(1.0), linear(1.0)],
            cost: CostFunction::Quadratic {
                matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
        };
        assert!(validate_game(spec).is_ok());
    }

    #[test]
    fn one_linear_market_is_allowed() {
        let spec = GameSpec {
            players: 2,
            markets: vec![power(1.0, 0.5), linear(0.5)],
            cost: CostFunction::Zero,
        };
        assert!(validate_game(spec).is_ok());
    }

    #[test]
    fn linquad_domain_is_enforced() {
        let spec = GameSpec {
            players: 3,
            markets: vec![
                power(1.0, 0.5),
                ProductionFunction::Linquad { a: 1.0, b: 0.2 },
            ],
            cost: CostFunction::Zero,
        };
        let v = violations(spec);
        assert!(
            matches!(v[0], Violation::LinquadDomain { market: 1, .. }),
            "{v:?}"
        );
    }

    #[test]
    fn convex_tabulated_revenue_is_rejected_with_witness() {
        let convex = Tabulated::new(vec![0.0, 1.0, 2.0], vec![0.5, 1.0, 2.0]).unwrap();
        let spec = GameSpec {
            players: 2,
            markets: vec![power(1.0, 0.5), ProductionFunction::Tabulated(convex)],
            cost: CostFunction::Zero,
        };
        let v = violations(spec);
        assert!(v
            .iter()
            .any(|v| matches!(v, Violation::NonConcaveProduction { market: 1, .. })));
        assert!(v
            .iter()
            .any(|v| matches!(v, Violation::IncreasingAverageRevenue { market: 1, .. })));
    }

    #[test]
    fn indefinite_and_asymmetric_costs_are_rejected() {
        let spec = GameSpec {
            players: 2,
            markets: vec![power(1.0, 0.5), power(1.0, 0.5)],
            cost: CostFunction::Quadratic {
                matrix: vec![vec![1.0, 3.0], vec![2.0, 1.0]],
            },
        };
        let v = violations(spec);
        assert!(v
            .iter()
            .any(|v| matches!(v, Violation::AsymmetricCost { .. })));
        assert!(v
            .iter()
            .any(|v| matches!(v, Violation::NegativeCostCurvature { .. })));
    }

    #[test]
    fn parameter_ranges_are_structural_errors() {
        let spec = GameSpec {
            players: 2,
            markets: vec![power(1.0, 1.5), ProductionFunction::Log { a: -1.0, b: 1.0 }],
            cost: CostFunction::Zero,
        };
        let v = violations(spec);
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|v| matches!(v, Violation::Structure { .. })));
    }

    #[test]
    fn cost_dimension_must_match() {
        let spec = GameSpec {
            players: 2,
            markets: vec![power(1.0, 0.5), power(1.0, 0.5)],
            cost: CostFunction::Separable {
                terms: vec![SeparableTerm { q: 1.0, l: 0.0 }],
            },
        };
        assert!(matches!(violations(spec)[0], Violation::Structure { .. }));
    }

    #[test]
    fn chebyshev_grid_spans_capacity() {
        let g = chebyshev_grid(3.0, VALIDATION_SAMPLES);
        assert_eq!(g.len(), VALIDATION_SAMPLES);
        assert_eq!(g[0], 0.0);
        assert!((g[VALIDATION_SAMPLES - 1] - 3.0).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
