use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::model::ModelError;

/// Absolute tolerance on simplex sums.
pub const SIMPLEX_TOL: f64 = 1e-10;

/// One allocation row per player; every row lies on the unit simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyProfile {
    players: usize,
    markets: usize,
    entries: Vec<f64>,
}

impl StrategyProfile {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let players = rows.len();
        let markets = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != markets) {
            return Err(ModelError::Shape("profile rows differ in length".into()));
        }
        Self::from_flat(players, markets, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(
        players: usize,
        markets: usize,
        entries: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if players == 0 || markets == 0 || entries.len() != players * markets {
            return Err(ModelError::Shape(format!(
                "expected {players}×{markets} entries, got {}",
                entries.len()
            )));
        }
        for (i, row) in entries.chunks(markets).enumerate() {
            check_simplex_point(row, 1.0).map_err(|detail| ModelError::NotOnSimplex {
                what: format!("profile row {i}"),
                detail,
            })?;
        }
        Ok(StrategyProfile {
            players,
            markets,
            entries,
        })
    }

    /// Every player plays `1/m` in each market.
    pub fn uniform(players: usize, markets: usize) -> Self {
        StrategyProfile {
            players,
            markets,
            entries: vec![1.0 / markets as f64; players * markets],
        }
    }

    /// The symmetric profile whose rows all equal `s/n`.
    pub fn symmetric(s: &AggregateStrategy) -> Self {
        let n = s.players() as f64;
        let row: Vec<f64> = s.values().iter().map(|v| v / n).collect();
        StrategyProfile {
            players: s.players(),
            markets: row.len(),
            entries: row.repeat(s.players()),
        }
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn markets(&self) -> usize {
        self.markets
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.markets..(i + 1) * self.markets]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.markets)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `s_x = Σ_i s_ix`.
    pub fn aggregate(&self) -> AggregateStrategy {
        AggregateStrategy {
            values: self.column_sums(),
            players: self.players,
        }
    }

    /// Replaces every row by the mean row `s/n`.
    pub fn symmetrize(&self) -> StrategyProfile {
        Self::symmetric(&self.aggregate())
    }

    /// `‖S − S̄‖²`, the squared Frobenius distance to the symmetrized profile.
    pub fn asymmetry(&self) -> f64 {
        let n = self.players as f64;
        let mean: Vec<f64> = self.column_sums().iter().map(|v| v / n).collect();
        self.rows()
            .flat_map(|r| r.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)))
            .sum()
    }

    fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.markets];
        for row in self.rows() {
            for (acc, v) in sums.iter_mut().zip(row) {
                *acc += v;
            }
        }
        sums
    }
}

/// Per-market totals `s`, a point of `n·Δ^{m−1}`. Serializes as the bare
/// vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateStrategy {
    values: Vec<f64>,
    players: usize,
}

impl Serialize for AggregateStrategy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.values.serialize(serializer)
    }
}

impl AggregateStrategy {
    pub fn new(values: Vec<f64>, players: usize) -> Result<Self, ModelError> {
        if players == 0 || values.is_empty() {
            return Err(ModelError::Shape(
                "aggregate needs at least one player and market".into(),
            ));
        }
        check_simplex_point(&values, players as f64).map_err(|detail| {
            ModelError::NotOnSimplex {
                what: "aggregate strategy".into(),
                detail,
            }
        })?;
        Ok(AggregateStrategy { values, players })
    }

    /// `n/m` in every market.
    pub fn uniform(players: usize, markets: usize) -> Self {
        AggregateStrategy {
            values: vec![players as f64 / markets as f64; markets],
            players,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn markets(&self) -> usize {
        self.values.len()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn check_simplex_point(v: &[f64], radius: f64) -> Result<(), String> {
    if let Some((x, bad)) = v
        .iter()
        .enumerate()
        .find(|(_, e)| !(e.is_finite() && **e >= 0.0))
    {
        return Err(format!(
            "entry {x} is {bad}, expected a finite non-negative value"
        ));
    }
    let sum: f64 = v.iter().sum();
    if (sum - radius).abs() > SIMPLEX_TOL {
        return Err(format!("entries sum to {sum}, expected {radius}"));
    }
    Ok(())
}

/// Draws every row uniformly from the unit simplex by normalizing i.i.d.
/// exponential variates. Deterministic for a given seed.
pub fn random_profile(markets: usize, players: usize, seed: u64) -> StrategyProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(players * markets);
    for _ in 0..players {
        let draws: Vec<f64> = (0..markets).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = draws.iter().sum();
        entries.extend(draws.iter().map(|d| d / total));
    }
    StrategyProfile {
        players,
        markets,
        entries,
    }
}
