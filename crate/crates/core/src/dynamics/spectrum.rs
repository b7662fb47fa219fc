use nalgebra::{Complex, DMatrix, Schur, SymmetricEigen};

use crate::dynamics::{centered_field, DynamicsError, INTERIOR_MARGIN};
use crate::model::{AggregateStrategy, Game, ModelError, StrategyProfile};

/// Central-difference step for the Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-6;

const SCHUR_MAX_ITERATIONS: usize = 10_000;
// relative ‖J − Jᵀ‖ below which J counts as symmetric
const SYMMETRY_TOL: f64 = 1e-7;

/// Orthonormal basis of `{v : Σv = 0}` in `R^m` (Helmert contrasts), as columns.
fn tangent_basis(m: usize) -> Vec<Vec<f64>> {
    (1..m)
        .map(|k| {
            let norm = ((k * (k + 1)) as f64).sqrt();
            (0..m)
                .map(|x| match x.cmp(&k) {
                    std::cmp::Ordering::Less => 1.0 / norm,
                    std::cmp::Ordering::Equal => -(k as f64) / norm,
                    std::cmp::Ordering::Greater => 0.0,
                })
                .collect()
        })
        .collect()
}

/// Eigenvalues of the linearized adjustment field at the symmetric profile of
/// an interior equilibrium, expressed in the product of the players' tangent
/// spaces (`n·(m−1)` values).
pub fn jacobian_spectrum(
    game: &Game,
    s_star: &AggregateStrategy,
) -> Result<Vec<Complex<f64>>, DynamicsError> {
    if let Some((market, &value)) = s_star
        .values()
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > INTERIOR_MARGIN))
    {
        return Err(DynamicsError::BoundaryEquilibrium { market, value });
    }
    jacobian_spectrum_at(game, &StrategyProfile::symmetric(s_star))
}

/// Same linearization at an arbitrary interior profile.
pub fn jacobian_spectrum_at(
    game: &Game,
    profile: &StrategyProfile,
) -> Result<Vec<Complex<f64>>, DynamicsError> {
    let (n, m) = (game.players(), game.markets());
    if profile.players() != n || profile.markets() != m {
        return Err(ModelError::Shape(format!(
            "profile is {}×{}, expected {n}×{m}",
            profile.players(),
            profile.markets()
        ))
        .into());
    }
    if let Some(k) = profile
        .entries()
        .iter()
        .position(|&v| !(v > INTERIOR_MARGIN))
    {
        return Err(DynamicsError::LeftInterior {
            player: k / m,
            market: k % m,
            value: profile.entries()[k],
        });
    }
    let basis = tangent_basis(m);
    let dim = n * (m - 1);
    let base = profile.entries();
    let perturbed = |j: usize, direction: &[f64], scale: f64| -> Vec<f64> {
        let mut entries = base.to_vec();
        for (x, d) in direction.iter().enumerate() {
            entries[j * m + x] += scale * d;
        }
        centered_field(game, &entries)
    };
    let mut jacobian = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..n {
        for (b, direction) in basis.iter().enumerate() {
            let plus = perturbed(j, direction, JACOBIAN_STEP);
            let minus = perturbed(j, direction, -JACOBIAN_STEP);
            let column = j * (m - 1) + b;
            for i in 0..n {
                for (a, row_dir) in basis.iter().enumerate() {
                    let d: f64 = (0..m)
                        .map(|x| row_dir[x] * (plus[i * m + x] - minus[i * m + x]))
                        .sum::<f64>()
                        / (2.0 * JACOBIAN_STEP);
                    jacobian[(i * (m - 1) + a, column)] = d;
                }
            }
        }
    }
    if jacobian.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::Eigen(format!(
            "non-finite Jacobian entry at {base:?}"
        )));
    }
    let mut eigen = eigenvalues(jacobian)?;
    eigen.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(eigen)
}

/// At symmetric profiles the linearization is symmetric and its spectrum
/// highly degenerate, which the unshifted Schur iteration can cycle on. When
/// the matrix is symmetric up to difference noise the symmetric solver is used
/// on `(J + Jᵀ)/2`; every eigenvalue of `J` then lies within `‖J − Jᵀ‖/2` of
/// the returned ones.
fn eigenvalues(jacobian: DMatrix<f64>) -> Result<Vec<Complex<f64>>, DynamicsError> {
    let dim = jacobian.nrows();
    let skew = (&jacobian - jacobian.transpose()).norm();
    if skew <= SYMMETRY_TOL * (1.0 + jacobian.norm()) {
        let symmetric = (&jacobian + jacobian.transpose()) * 0.5;
        return Ok(SymmetricEigen::new(symmetric)
            .eigenvalues
            .iter()
            .map(|&re| Complex::new(re, 0.0))
            .collect());
    }
    let schur = Schur::try_new(jacobian, f64::EPSILON, SCHUR_MAX_ITERATIONS).ok_or_else(|| {
        DynamicsError::Eigen(format!("Schur iteration failed for a {dim}×{dim} Jacobian"))
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}
