//! Gradient adjustment dynamics: every player moves along the projection of
//! its own payoff gradient onto the tangent cone of its strategy simplex.
//! Progress is monitored with `V = Φ(s*) − Φ(s) + ‖S − S̄‖²`.

mod cone;
mod spectrum;
mod trajectory;

use serde::Serialize;
use thiserror::Error;

use crate::model::{AggregateStrategy, Game, ModelError, StrategyProfile};
use crate::potential::{payoff_gradient_against, phi_at, potential_at};
use crate::quadrature::QuadratureError;
use crate::solver::{
    kkt_residuals, project_simplex, solve_ne_potential, SolveError, SolverOptions,
};

pub use cone::{tangent_cone_project, BOUNDARY_TOL};
pub use spectrum::{jacobian_spectrum, jacobian_spectrum_at, JACOBIAN_STEP};
pub use trajectory::{write_csv, Diagnostics, Trajectory, TrajectorySummary};

/// Per-step allowance on increases of `V` and `R` for the explicit integrator.
pub fn lyapunov_slack(h: f64) -> f64 {
    5.0 * h * h
}

/// RK4 stages must keep every coordinate above this.
pub const INTERIOR_MARGIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(
        "rk4-interior left the interior (coordinate {value:e} at player {player}, market {market})"
    )]
    LeftInterior {
        player: usize,
        market: usize,
        value: f64,
    },
    #[error("equilibrium is on the boundary (s*_{market} = {value:e}); the projected field is not differentiable there")]
    BoundaryEquilibrium { market: usize, value: f64 },
    #[error("eigenvalue iteration did not converge: {0}")]
    Eigen(String),
    #[error("invalid simulation options: {0}")]
    Options(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    ProjectedEuler,
    Rk4Interior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub h: f64,
    pub horizon: f64,
    pub method: Integrator,
    /// Record every `stride`-th step (the first and last states are always kept).
    pub stride: usize,
    /// Stop once `V` drops below this.
    pub threshold: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            h: 1e-3,
            horizon: 1e3,
            method: Integrator::ProjectedEuler,
            stride: 1000,
            threshold: 1e-10,
        }
    }
}

impl SimOptions {
    fn check(&self) -> Result<(), DynamicsError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(DynamicsError::Options(format!(
                "step size must be positive, got {}",
                self.h
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(DynamicsError::Options(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.stride == 0 {
            return Err(DynamicsError::Options("stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lyapunov {
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "Phi0")]
    pub phi0: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

/// `V`, `Φ₀ = Φ(s*) − Φ(s)` and `R = ‖S − S̄‖²` at `profile`.
pub fn lyapunov(
    game: &Game,
    s_star: &AggregateStrategy,
    profile: &StrategyProfile,
) -> Result<Lyapunov, QuadratureError> {
    let phi_star = potential_at(game, s_star.values())?;
    Ok(lyapunov_with(game, phi_star, profile)?.0)
}

fn lyapunov_with(
    game: &Game,
    phi_star: f64,
    profile: &StrategyProfile,
) -> Result<(Lyapunov, f64), QuadratureError> {
    let phi = potential_at(game, profile.aggregate().values())?;
    let phi0 = phi_star - phi;
    let r = profile.asymmetry();
    Ok((
        Lyapunov {
            v: phi0 + r,
            phi0,
            r,
        },
        phi,
    ))
}

/// Predicted `dΦ₀/dt = −m·n·(mean(φ²) − mean(φ)²)` at an interior aggregate.
pub fn potential_decay_rate(game: &Game, s: &AggregateStrategy) -> f64 {
    let phi = phi_at(game, s.values());
    let m = phi.len() as f64;
    let mean = phi.iter().sum::<f64>() / m;
    let spread = phi.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    -m * game.players() as f64 * spread
}

fn column_sums(entries: &[f64], m: usize) -> Vec<f64> {
    let mut totals = vec![0.0; m];
    for row in entries.chunks(m) {
        for (t, v) in totals.iter_mut().zip(row) {
            *t += v;
        }
    }
    totals
}

/// Per-player payoff gradients for a flat profile, concatenated.
pub(crate) fn payoff_gradients(game: &Game, entries: &[f64]) -> Vec<f64> {
    let m = game.markets();
    let totals = column_sums(entries, m);
    entries
        .chunks(m)
        .flat_map(|row| payoff_gradient_against(game, row, &totals))
        .collect()
}

/// The projected vector field of the adjustment process.
pub fn projected_field(game: &Game, profile: &StrategyProfile) -> Vec<f64> {
    let m = game.markets();
    let grads = payoff_gradients(game, profile.entries());
    grads
        .chunks(m)
        .zip(profile.rows())
        .flat_map(|(g, row)| tangent_cone_project(g, row))
        .collect()
}

/// Interior field `M₁·∇_i u_i` with `M₁ = I − 11ᵀ/m`.
pub(crate) fn centered_field(game: &Game, entries: &[f64]) -> Vec<f64> {
    let m = game.markets();
    let mut grads = payoff_gradients(game, entries);
    for g in grads.chunks_mut(m) {
        let mean = g.iter().sum::<f64>() / m as f64;
        g.iter_mut().for_each(|v| *v -= mean);
    }
    grads
}

fn check_interior(entries: &[f64], m: usize) -> Result<(), DynamicsError> {
    match entries.iter().position(|&v| !(v > INTERIOR_MARGIN)) {
        Some(k) => Err(DynamicsError::LeftInterior {
            player: k / m,
            market: k % m,
            value: entries[k],
        }),
        None => Ok(()),
    }
}

fn euler_step(
    game: &Game,
    profile: &StrategyProfile,
    h: f64,
) -> Result<StrategyProfile, ModelError> {
    let m = game.markets();
    let grads = payoff_gradients(game, profile.entries());
    let entries: Vec<f64> = profile
        .rows()
        .zip(grads.chunks(m))
        .flat_map(|(row, g)| {
            let moved: Vec<f64> = row.iter().zip(g).map(|(s, g)| s + h * g).collect();
            project_simplex(&moved, 1.0)
        })
        .collect();
    StrategyProfile::from_flat(profile.players(), m, entries)
}

fn rk4_step(
    game: &Game,
    profile: &StrategyProfile,
    h: f64,
) -> Result<StrategyProfile, DynamicsError> {
    let m = game.markets();
    let y = profile.entries();
    check_interior(y, m)?;
    let shifted = |k: &[f64], scale: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + scale * b).collect()
    };
    let k1 = centered_field(game, y);
    let y2 = shifted(&k1, 0.5 * h);
    check_interior(&y2, m)?;
    let k2 = centered_field(game, &y2);
    let y3 = shifted(&k2, 0.5 * h);
    check_interior(&y3, m)?;
    let k3 = centered_field(game, &y3);
    let y4 = shifted(&k3, h);
    check_interior(&y4, m)?;
    let k4 = centered_field(game, &y4);
    let mut next: Vec<f64> = (0..y.len())
        .map(|k| y[k] + h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]))
        .collect();
    check_interior(&next, m)?;
    // the centered field is sum-free; remove accumulated round-off
    for row in next.chunks_mut(m) {
        let excess = (row.iter().sum::<f64>() - 1.0) / m as f64;
        row.iter_mut().for_each(|v| *v -= excess);
    }
    Ok(StrategyProfile::from_flat(profile.players(), m, next)?)
}

/// One integrator step of length `h`.
pub fn step(
    game: &Game,
    profile: &StrategyProfile,
    h: f64,
    method: Integrator,
) -> Result<StrategyProfile, DynamicsError> {
    check_shape(game, profile)?;
    match method {
        Integrator::ProjectedEuler => Ok(euler_step(game, profile, h)?),
        Integrator::Rk4Interior => rk4_step(game, profile, h),
    }
}

fn check_shape(game: &Game, profile: &StrategyProfile) -> Result<(), ModelError> {
    if profile.players() != game.players() || profile.markets() != game.markets() {
        return Err(ModelError::Shape(format!(
            "profile is {}×{}, game has {} players and {} markets",
            profile.players(),
            profile.markets(),
            game.players(),
            game.markets()
        )));
    }
    Ok(())
}

/// Solves the equilibrium first, then integrates from `start`.
pub fn simulate(
    game: &Game,
    start: &StrategyProfile,
    opts: &SimOptions,
) -> Result<Trajectory, DynamicsError> {
    let solver = SolverOptions {
        tolerance: 1e-12,
        ..SolverOptions::default()
    };
    let eq = solve_ne_potential(game, &solver)?;
    simulate_towards(game, &eq.s_star, start, opts)
}

/// Integrates from `start`, measuring `V` against the given equilibrium.
pub fn simulate_towards(
    game: &Game,
    s_star: &AggregateStrategy,
    start: &StrategyProfile,
    opts: &SimOptions,
) -> Result<Trajectory, DynamicsError> {
    opts.check()?;
    check_shape(game, start)?;
    let phi_star = potential_at(game, s_star.values())?;
    let slack = lyapunov_slack(opts.h);
    let total_steps = (opts.horizon / opts.h).ceil() as usize;

    let mut trajectory = Trajectory::new(s_star.clone());
    let mut profile = start.clone();
    let (mut lyap, mut phi) = lyapunov_with(game, phi_star, &profile)?;
    let mut summary = TrajectorySummary {
        converged: lyap.v < opts.threshold,
        steps: 0,
        final_time: 0.0,
        final_v: lyap.v,
        min_v: lyap.v,
        max_v_increase: f64::NEG_INFINITY,
        max_r_increase: f64::NEG_INFINITY,
        v_monotone: true,
        r_monotone: true,
        fell_back_to_euler: false,
        samples: 0,
    };
    trajectory.record(0.0, &profile, diagnostics(game, phi, lyap, &profile));

    let mut k = 0;
    while !summary.converged && k < total_steps {
        k += 1;
        let next = match opts.method {
            Integrator::ProjectedEuler => euler_step(game, &profile, opts.h)?,
            Integrator::Rk4Interior => match rk4_step(game, &profile, opts.h) {
                Ok(p) => p,
                Err(DynamicsError::LeftInterior { .. }) => {
                    summary.fell_back_to_euler = true;
                    euler_step(game, &profile, opts.h)?
                }
                Err(e) => return Err(e),
            },
        };
        let (next_lyap, next_phi) = lyapunov_with(game, phi_star, &next)?;
        let dv = next_lyap.v - lyap.v;
        let dr = next_lyap.r - lyap.r;
        summary.max_v_increase = summary.max_v_increase.max(dv);
        summary.max_r_increase = summary.max_r_increase.max(dr);
        summary.v_monotone &= dv <= slack;
        summary.r_monotone &= dr <= slack;
        summary.min_v = summary.min_v.min(next_lyap.v);
        profile = next;
        lyap = next_lyap;
        phi = next_phi;
        summary.converged = lyap.v < opts.threshold;
        if k % opts.stride == 0 || summary.converged || k == total_steps {
            trajectory.record(
                k as f64 * opts.h,
                &profile,
                diagnostics(game, phi, lyap, &profile),
            );
        }
    }
    summary.steps = k;
    summary.final_time = k as f64 * opts.h;
    summary.final_v = lyap.v;
    summary.samples = trajectory.len();
    trajectory.summary = summary;
    Ok(trajectory)
}

fn diagnostics(game: &Game, phi: f64, lyap: Lyapunov, profile: &StrategyProfile) -> Diagnostics {
    Diagnostics {
        phi,
        phi0: lyap.phi0,
        r: lyap.r,
        v: lyap.v,
        kkt_residual: kkt_residuals(game, &profile.aggregate()).max_residual(),
    }
}
