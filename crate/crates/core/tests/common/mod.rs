#![allow(dead_code)]

use std::path::{Path, PathBuf};

use oligopoly::config::load_game;
use oligopoly::model::{
    CostFunction, Game, GameSpec, ProductionFunction, SeparableTerm, Tabulated,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn games_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("games")
}

/// Every shipped game file, sorted by name.
pub fn shipped_games() -> Vec<(String, Game)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(games_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let game = load_game(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (name, game)
        })
        .collect()
}

pub fn shipped(name: &str) -> Game {
    load_game(&games_dir().join(format!("{name}.json"))).unwrap()
}

pub fn game(players: usize, markets: Vec<ProductionFunction>, cost: CostFunction) -> Game {
    GameSpec {
        players,
        markets,
        cost,
    }
    .validate()
    .unwrap()
}

pub fn power(a: f64, p: f64) -> ProductionFunction {
    ProductionFunction::Power { a, p }
}

/// Same-order power-law markets with zero cost.
pub fn power_law_game(rng: &mut ChaCha8Rng) -> (Vec<f64>, f64, usize, Game) {
    let m = rng.random_range(2..=5);
    let n = rng.random_range(2..=6);
    let p = rng.random_range(0.2..=0.8);
    let a: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..=5.0)).collect();
    let g = game(
        n,
        a.iter().map(|&a| power(a, p)).collect(),
        CostFunction::Zero,
    );
    (a, p, n, g)
}

fn random_market(rng: &mut ChaCha8Rng, n: usize, allow_linear: bool) -> ProductionFunction {
    let nf = n as f64;
    match rng.random_range(0..if allow_linear { 5 } else { 4 }) {
        0 => power(rng.random_range(0.5..=5.0), rng.random_range(0.2..=0.8)),
        1 => ProductionFunction::Log {
            a: rng.random_range(0.3..=3.0),
            b: rng.random_range(0.2..=4.0),
        },
        2 => {
            let a = rng.random_range(0.3..=3.0);
            ProductionFunction::Linquad {
                a,
                b: rng.random_range(0.05..=1.0) * a / (2.0 * nf),
            }
        }
        3 => {
            let knots = rng.random_range(2..=5);
            let mut s: Vec<f64> = (0..knots)
                .map(|k| nf * k as f64 / (knots - 1) as f64)
                .collect();
            s[knots - 1] = nf;
            let mut marginal = vec![rng.random_range(0.5..=3.0)];
            for _ in 1..knots {
                let last = *marginal.last().unwrap();
                marginal.push(last * rng.random_range(0.3..=0.9));
            }
            ProductionFunction::Tabulated(Tabulated::new(s, marginal).unwrap())
        }
        _ => ProductionFunction::Linquad {
            a: rng.random_range(0.3..=3.0),
            b: 0.0,
        },
    }
}

fn random_separable_cost(rng: &mut ChaCha8Rng, m: usize) -> CostFunction {
    if rng.random_bool(0.4) {
        return CostFunction::Zero;
    }
    CostFunction::Separable {
        terms: (0..m)
            .map(|_| SeparableTerm {
                q: if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random_range(0.0..=1.0)
                },
                l: if rng.random_bool(0.5) {
                    0.0
                } else {
                    rng.random_range(0.0..=0.3)
                },
            })
            .collect(),
    }
}

/// One random separable-cost game, retried until it validates.
pub fn random_separable_game(rng: &mut ChaCha8Rng) -> Game {
    loop {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(2..=5);
        let linear_slot = rng.random_range(0..m);
        let markets = (0..m)
            .map(|x| random_market(rng, n, x == linear_slot))
            .collect();
        let spec = GameSpec {
            players: n,
            markets,
            cost: random_separable_cost(rng, m),
        };
        if let Ok(g) = spec.validate() {
            return g;
        }
    }
}

/// Separable-cost games: random mixtures of every production kind plus
/// constructed corner cases where some market stays empty.
pub fn separable_corpus() -> Vec<Game> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut games = Vec::new();
    while games.len() < 100 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(2..=5);
        let linear_slot = rng.random_range(0..m);
        let markets = (0..m)
            .map(|x| random_market(&mut rng, n, x == linear_slot))
            .collect();
        let spec = GameSpec {
            players: n,
            markets,
            cost: random_separable_cost(&mut rng, m),
        };
        if let Ok(g) = spec.validate() {
            games.push(g);
        }
    }
    games.extend(corner_games());
    games
}

/// Games whose equilibrium leaves at least one market empty.
pub fn corner_games() -> Vec<Game> {
    let mut games = vec![
        game(
            2,
            vec![
                power(1.0, 0.5),
                ProductionFunction::Linquad { a: 0.5, b: 0.0 },
            ],
            CostFunction::Zero,
        ),
        game(
            3,
            vec![
                power(2.0, 0.5),
                ProductionFunction::Log { a: 0.2, b: 1.0 },
                power(1.0, 0.3),
            ],
            CostFunction::Zero,
        ),
        game(
            4,
            vec![
                ProductionFunction::Log { a: 2.0, b: 2.0 },
                ProductionFunction::Linquad { a: 0.3, b: 0.01 },
                ProductionFunction::Log { a: 0.1, b: 0.5 },
            ],
            CostFunction::Zero,
        ),
        game(
            2,
            vec![
                power(1.5, 0.6),
                ProductionFunction::Linquad { a: 1.0, b: 0.1 },
            ],
            CostFunction::Separable {
                terms: vec![
                    SeparableTerm { q: 0.0, l: 0.0 },
                    SeparableTerm { q: 0.5, l: 0.9 },
                ],
            },
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..8 {
        let n = rng.random_range(2..=5);
        let strong = power(rng.random_range(1.0..=3.0), rng.random_range(0.3..=0.7));
        let weak = ProductionFunction::Log {
            a: rng.random_range(0.05..=0.2),
            b: rng.random_range(0.2..=1.0),
        };
        let other = ProductionFunction::Log {
            a: rng.random_range(1.0..=3.0),
            b: rng.random_range(0.5..=3.0),
        };
        games.push(game(n, vec![strong, weak, other], CostFunction::Zero));
    }
    games
}

/// Zero or coupled quadratic cost, the setting of the stability result.
pub fn quadratic_cost_games() -> Vec<(String, Game)> {
    shipped_games()
        .into_iter()
        .filter(|(_, g)| {
            matches!(
                g.cost(),
                CostFunction::Zero | CostFunction::Quadratic { .. }
            )
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
