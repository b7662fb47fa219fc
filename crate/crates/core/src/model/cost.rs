//! Per-player cost functions `c(v)` on the strategy simplex.

use serde::{Deserialize, Serialize};

/// Cost shared by every player. Linear terms are only accepted per market in
/// the separable kind; a coupled quadratic cost must be purely quadratic
/// (fold linear parts into the production functions instead).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", from = "CostRepr")]
pub enum CostFunction {
    Zero,
    /// `c(v) = vᵀAv/2` for a symmetric positive-semidefinite `A`.
    Quadratic {
        matrix: Vec<Vec<f64>>,
    },
    /// `c(v) = Σ_x (q_x·v_x²/2 + l_x·v_x)`.
    Separable {
        terms: Vec<SeparableTerm>,
    },
}

// Internally tagged unit variants accept stray fields; an empty struct
// variant rejects them.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum CostRepr {
    Zero {},
    Quadratic { matrix: Vec<Vec<f64>> },
    Separable { terms: Vec<SeparableTerm> },
}

impl From<CostRepr> for CostFunction {
    fn from(repr: CostRepr) -> Self {
        match repr {
            CostRepr::Zero {} => CostFunction::Zero,
            CostRepr::Quadratic { matrix } => CostFunction::Quadratic { matrix },
            CostRepr::Separable { terms } => CostFunction::Separable { terms },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableTerm {
    pub q: f64,
    #[serde(default)]
    pub l: f64,
}

impl CostFunction {
    pub fn value(&self, v: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Quadratic { matrix } => {
                0.5 * matrix
                    .iter()
                    .zip(v)
                    .map(|(row, vi)| vi * row.iter().zip(v).map(|(a, vj)| a * vj).sum::<f64>())
                    .sum::<f64>()
            }
            Self::Separable { terms } => terms
                .iter()
                .zip(v)
                .map(|(t, &vx)| 0.5 * t.q * vx * vx + t.l * vx)
                .sum(),
        }
    }

    /// `∂_x c(v)`.
    pub fn partial(&self, x: usize, v: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Quadratic { matrix } => matrix[x].iter().zip(v).map(|(a, vj)| a * vj).sum(),
            Self::Separable { terms } => terms[x].q * v[x] + terms[x].l,
        }
    }

    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        (0..v.len()).map(|x| self.partial(x, v)).collect()
    }

    /// `∂²_x c`, constant for every supported kind.
    pub fn diagonal_curvature(&self, x: usize) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Quadratic { matrix } => matrix[x][x],
            Self::Separable { terms } => terms[x].q,
        }
    }

    /// True for kinds whose market-`x` partial depends on `v_x` alone.
    pub fn is_separable(&self) -> bool {
        matches!(self, Self::Zero | Self::Separable { .. })
    }

    /// Derivative of the market-`x` term of a separable cost at `v_x`.
    pub(crate) fn separable_marginal(&self, x: usize, vx: f64) -> f64 {
        match self {
            Self::Separable { terms } => terms[x].q * vx + terms[x].l,
            _ => 0.0,
        }
    }

    pub(crate) fn dimension(&self) -> Option<usize> {
        match self {
            Self::Zero => None,
            Self::Quadratic { matrix } => Some(matrix.len()),
            Self::Separable { terms } => Some(terms.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_identity_cost() {
        let c = CostFunction::Quadratic {
            matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        assert!((c.value(&[0.5, 0.5]) - 0.25).abs() < 1e-15);
        assert_eq!(c.gradient(&[0.5, 0.25]), vec![0.5, 0.25]);
    }

    #[test]
    fn separable_cost_terms() {
        let c = CostFunction::Separable {
            terms: vec![
                SeparableTerm { q: 2.0, l: 0.1 },
                SeparableTerm { q: 0.0, l: 0.3 },
            ],
        };
        assert!((c.value(&[0.5, 0.5]) - (0.25 + 0.05 + 0.15)).abs() < 1e-15);
        assert!((c.partial(0, &[0.5, 0.5]) - 1.1).abs() < 1e-15);
        assert!((c.separable_marginal(1, 0.7) - 0.3).abs() < 1e-15);
        assert!(c.is_separable());
    }
}
