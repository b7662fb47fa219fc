//! Equilibrium for separable costs by bisection on the common marginal
//! payoff `ν`: each market absorbs `φ_x⁻¹(ν)` and `ν` is chosen so the
//! allocations sum to the number of players.

use crate::model::{AggregateStrategy, Game};
use crate::solver::{SolveError, SolverOptions, INVESTED_FRACTION};

const MAX_EXPANSIONS: usize = 200;
const MAX_OUTER_ITERATIONS: usize = 2000;
const NU_WIDTH_TOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-10;

/// `φ_x(s)` for a separable cost, which depends on `s_x` alone.
pub fn phi_separable(game: &Game, x: usize, s: f64) -> f64 {
    let n = game.players() as f64;
    let u = game.market(x);
    (1.0 - 1.0 / n) * u.average(s) + u.marginal(s) / n - game.cost().separable_marginal(x, s / n)
}

/// Last point of `[0, cap]` where the non-increasing predicate holds
/// (0 if it never holds, `cap` if it always does).
fn transition(cap: f64, holds: impl Fn(f64) -> bool) -> f64 {
    if !holds(0.0) {
        return 0.0;
    }
    if holds(cap) {
        return cap;
    }
    let (mut lo, mut hi) = (0.0f64, cap);
    for _ in 0..MAX_OUTER_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `φ_x⁻¹(ν)` on `[0, n]`: 0 when `ν` exceeds `φ_x(0⁺)`, `n` when `φ_x(n) > ν`,
/// and otherwise the midpoint of the (possibly degenerate) root interval.
pub fn invert_phi(game: &Game, x: usize, nu: f64) -> Result<f64, SolveError> {
    if !game.is_separable() {
        return Err(SolveError::NotSeparable);
    }
    Ok(invert_unchecked(game, x, nu))
}

fn invert_unchecked(game: &Game, x: usize, nu: f64) -> f64 {
    let cap = game.players() as f64;
    let above = transition(cap, |s| phi_separable(game, x, s) > nu);
    let at_least = transition(cap, |s| phi_separable(game, x, s) >= nu);
    0.5 * (above + at_least)
}

fn allocation(game: &Game, nu: f64) -> Vec<f64> {
    (0..game.markets())
        .map(|x| invert_unchecked(game, x, nu))
        .collect()
}

#[derive(Debug, Clone)]
pub(crate) struct Bisection {
    pub s_star: AggregateStrategy,
    pub nu: f64,
    pub iterations: usize,
}

pub(crate) fn solve(game: &Game, opts: &SolverOptions) -> Result<Bisection, SolveError> {
    if !game.is_separable() {
        return Err(SolveError::NotSeparable);
    }
    let n = game.players() as f64;
    let m = game.markets();
    let excess = |nu: f64| allocation(game, nu).iter().sum::<f64>() - n;

    let nu0 = (0..m)
        .map(|x| phi_separable(game, x, n / m as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut step = 0.1 * nu0.abs().max(1.0);
    let e0 = excess(nu0);
    let (mut lo, mut hi) = (nu0, nu0);
    let mut expansions = 0;
    if e0 > 0.0 {
        loop {
            hi = nu0 + step;
            if excess(hi) <= 0.0 {
                break;
            }
            lo = hi;
            step *= opts.bracket_expansion;
            expansions += 1;
            if expansions > MAX_EXPANSIONS {
                return Err(SolveError::BracketFailure { expansions });
            }
        }
    } else if e0 < 0.0 {
        loop {
            lo = nu0 - step;
            if excess(lo) >= 0.0 {
                break;
            }
            hi = lo;
            step *= opts.bracket_expansion;
            expansions += 1;
            if expansions > MAX_EXPANSIONS {
                return Err(SolveError::BracketFailure { expansions });
            }
        }
    }

    // invariant: excess(lo) >= 0 >= excess(hi)
    let mut nu = 0.5 * (lo + hi);
    let mut iterations = 0;
    while hi - lo > NU_WIDTH_TOL * (1.0 + nu.abs()) && iterations < MAX_OUTER_ITERATIONS {
        iterations += 1;
        nu = 0.5 * (lo + hi);
        if nu <= lo || nu >= hi {
            break;
        }
        let e = excess(nu);
        if e >= 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        if e.abs() <= SUM_TOL {
            break;
        }
    }

    // Blend the bracketing allocations so the total is exactly n; this also
    // pins a market whose φ is flat at ν, which no single ν resolves.
    let upper = allocation(game, lo);
    let lower = allocation(game, hi);
    let (sum_upper, sum_lower): (f64, f64) = (upper.iter().sum(), lower.iter().sum());
    let theta = if sum_upper > sum_lower {
        ((n - sum_lower) / (sum_upper - sum_lower)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let mut s: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(l, u)| l + theta * (u - l))
        .collect();
    let total: f64 = s.iter().sum();
    let largest = (0..m).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap_or(0);
    s[largest] = (s[largest] + n - total).max(0.0);
    // At a corner the excess vanishes on a whole ν interval (capped markets);
    // report the multiplier that invested markets actually attain.
    let threshold = INVESTED_FRACTION * n;
    let nu = (0..m)
        .filter(|&x| s[x] > threshold)
        .map(|x| phi_separable(game, x, s[x]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Bisection {
        s_star: AggregateStrategy::new(s, game.players())?,
        nu,
        iterations,
    })
}
