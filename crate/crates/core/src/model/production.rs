//! Market production (total revenue) functions.

use serde::{Deserialize, Serialize};

use crate::model::ModelError;
use crate::quadrature::{self, QuadratureError};

/// Stand-in for an infinite right derivative at zero (power kind).
pub const INFINITE_MARGINAL: f64 = 1e300;

/// Below this value of `b·s` the log kind switches to series expansions of
/// the average revenue and its derivatives.
const LOG_SERIES_CUTOFF: f64 = 1e-2;

const AVERAGE_INTEGRAL_TOL: f64 = 1e-10;

/// Total revenue `u(s)` of a market as a function of the resource invested in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProductionFunction {
    /// `a·s^p` with `a > 0`, `0 < p < 1`.
    Power { a: f64, p: f64 },
    /// `a·ln(1 + b·s)` with `a, b > 0`.
    Log { a: f64, b: f64 },
    /// `a·s − b·s²` with `a > 0`, `b ≥ 0`.
    Linquad { a: f64, b: f64 },
    /// Piecewise-linear marginal revenue through the given knots.
    #[serde(rename = "custom-tabulated")]
    Tabulated(Tabulated),
}

/// Marginal revenue tabulated at increasing knots starting at zero and
/// linearly interpolated between them; it stays at the last value beyond the
/// final knot. The revenue itself is the exact integral, so it is
/// continuously differentiable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedTable", into = "TabulatedTable")]
pub struct Tabulated {
    knots: Vec<f64>,
    marginal: Vec<f64>,
    // revenue at each knot
    cumulative: Vec<f64>,
    // ∫₀ᵏ u(t)/t dt at each knot
    average_integrals: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedTable {
    s: Vec<f64>,
    marginal: Vec<f64>,
}

impl TryFrom<TabulatedTable> for Tabulated {
    type Error = ModelError;

    fn try_from(table: TabulatedTable) -> Result<Self, ModelError> {
        Tabulated::new(table.s, table.marginal)
    }
}

impl From<Tabulated> for TabulatedTable {
    fn from(t: Tabulated) -> Self {
        TabulatedTable {
            s: t.knots,
            marginal: t.marginal,
        }
    }
}

impl Tabulated {
    pub fn new(knots: Vec<f64>, marginal: Vec<f64>) -> Result<Self, ModelError> {
        let bad =
            |reason: &str| ModelError::InvalidParameter(format!("tabulated market: {reason}"));
        if knots.len() != marginal.len() {
            return Err(bad("`s` and `marginal` must have the same length"));
        }
        if knots.len() < 2 {
            return Err(bad("at least two knots are required"));
        }
        if knots[0] != 0.0 {
            return Err(bad("the first knot must be 0"));
        }
        if knots.iter().chain(&marginal).any(|v| !v.is_finite()) {
            return Err(bad("knots and marginal values must be finite"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("knots must be strictly increasing"));
        }
        if marginal.iter().any(|&g| g < 0.0) {
            return Err(bad("marginal revenue must be non-negative"));
        }
        let mut cumulative = Vec::with_capacity(knots.len());
        cumulative.push(0.0);
        for j in 1..knots.len() {
            let width = knots[j] - knots[j - 1];
            cumulative.push(cumulative[j - 1] + 0.5 * width * (marginal[j - 1] + marginal[j]));
        }
        let mut t = Tabulated {
            knots,
            marginal,
            cumulative,
            average_integrals: Vec::new(),
        };
        let mut acc = vec![0.0];
        for j in 1..t.knots.len() {
            acc.push(acc[j - 1] + t.piece_average_integral(j - 1, t.knots[j - 1], t.knots[j]));
        }
        t.average_integrals = acc;
        Ok(t)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn marginal_values(&self) -> &[f64] {
        &self.marginal
    }

    // (knot, revenue at knot, marginal at knot, marginal slope) of the piece holding `s`
    fn piece(&self, s: f64) -> (f64, f64, f64, f64) {
        let last = self.knots.len() - 1;
        if s >= self.knots[last] {
            return (
                self.knots[last],
                self.cumulative[last],
                self.marginal[last],
                0.0,
            );
        }
        let j = self.knots.partition_point(|&k| k <= s).saturating_sub(1);
        let slope = (self.marginal[j + 1] - self.marginal[j]) / (self.knots[j + 1] - self.knots[j]);
        (self.knots[j], self.cumulative[j], self.marginal[j], slope)
    }

    // ∫ u(t)/t over [lo, hi] inside piece j, where u = α + βt + γt²
    fn piece_average_integral(&self, j: usize, lo: f64, hi: f64) -> f64 {
        let last = self.knots.len() - 1;
        let (k, u, g) = (self.knots[j], self.cumulative[j], self.marginal[j]);
        let slope = if j == last {
            0.0
        } else {
            (self.marginal[j + 1] - g) / (self.knots[j + 1] - k)
        };
        let gamma = 0.5 * slope;
        let beta = g - slope * k;
        let alpha = u - g * k + gamma * k * k;
        let log_part = if alpha == 0.0 || lo <= 0.0 {
            0.0
        } else {
            alpha * (hi / lo).ln()
        };
        log_part + beta * (hi - lo) + 0.5 * gamma * (hi * hi - lo * lo)
    }

    fn average_integral(&self, s: f64) -> f64 {
        let last = self.knots.len() - 1;
        let j = if s >= self.knots[last] {
            last
        } else {
            self.knots.partition_point(|&k| k <= s).saturating_sub(1)
        };
        self.average_integrals[j] + self.piece_average_integral(j, self.knots[j], s)
    }

    fn value(&self, s: f64) -> f64 {
        let (k, u, g, slope) = self.piece(s);
        let d = s - k;
        u + g * d + 0.5 * slope * d * d
    }

    fn marginal(&self, s: f64) -> f64 {
        let (k, _, g, slope) = self.piece(s);
        g + slope * (s - k)
    }

    fn curvature(&self, s: f64) -> f64 {
        self.piece(s).3
    }

    fn first_slope(&self) -> f64 {
        (self.marginal[1] - self.marginal[0]) / self.knots[1]
    }
}

impl ProductionFunction {
    /// `u(s)`.
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Self::Power { a, p } => a * s.powf(*p),
            Self::Log { a, b } => a * (b * s).ln_1p(),
            Self::Linquad { a, b } => a * s - b * s * s,
            Self::Tabulated(t) => t.value(s),
        }
    }

    /// `u'(s)`; at `s = 0` this is the right derivative, [`INFINITE_MARGINAL`]
    /// for the power kind.
    pub fn marginal(&self, s: f64) -> f64 {
        match self {
            Self::Power { a, p } => {
                if s <= 0.0 {
                    INFINITE_MARGINAL
                } else {
                    (a * p * s.powf(p - 1.0)).min(INFINITE_MARGINAL)
                }
            }
            Self::Log { a, b } => a * b / (1.0 + b * s),
            Self::Linquad { a, b } => a - 2.0 * b * s,
            Self::Tabulated(t) => t.marginal(s),
        }
    }

    /// `u''(s)`.
    pub fn curvature(&self, s: f64) -> f64 {
        match self {
            Self::Power { a, p } => {
                if s <= 0.0 {
                    -INFINITE_MARGINAL
                } else {
                    (a * p * (p - 1.0) * s.powf(p - 2.0)).max(-INFINITE_MARGINAL)
                }
            }
            Self::Log { a, b } => {
                let d = 1.0 + b * s;
                -a * b * b / (d * d)
            }
            Self::Linquad { b, .. } => -2.0 * b,
            Self::Tabulated(t) => t.curvature(s),
        }
    }

    /// Average revenue `p(s) = u(s)/s`, continued to `s = 0` by its right limit.
    pub fn average(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return self.marginal(0.0);
        }
        match self {
            Self::Power { a, p } => (a * s.powf(p - 1.0)).min(INFINITE_MARGINAL),
            Self::Log { a, b } => {
                let x = b * s;
                if x < LOG_SERIES_CUTOFF {
                    // ln(1+x)/x = Σ (−x)^k/(k+1)
                    a * b * series(x, |k| 1.0 / (k + 1.0))
                } else {
                    a * x.ln_1p() / s
                }
            }
            Self::Linquad { a, b } => a - b * s,
            Self::Tabulated(t) => {
                if s <= t.knots[1] {
                    t.marginal[0] + 0.5 * t.first_slope() * s
                } else {
                    t.value(s) / s
                }
            }
        }
    }

    /// `p'(s) = (u'(s)·s − u(s))/s²`, with right limits at zero.
    pub fn average_slope(&self, s: f64) -> f64 {
        match self {
            Self::Power { a, p } => {
                if s <= 0.0 {
                    -INFINITE_MARGINAL
                } else {
                    (a * (p - 1.0) * s.powf(p - 2.0)).max(-INFINITE_MARGINAL)
                }
            }
            Self::Log { a, b } => {
                let x = b * s;
                if x < LOG_SERIES_CUTOFF {
                    a * b * b * series(x, |k| -(k + 1.0) / (k + 2.0))
                } else {
                    (self.marginal(s) * s - self.value(s)) / (s * s)
                }
            }
            Self::Linquad { b, .. } => -b,
            Self::Tabulated(t) => {
                if s <= t.knots[1] {
                    0.5 * t.first_slope()
                } else {
                    (t.marginal(s) * s - t.value(s)) / (s * s)
                }
            }
        }
    }

    /// `p''(s)`.
    pub fn average_curvature(&self, s: f64) -> f64 {
        match self {
            Self::Power { a, p } => {
                if s <= 0.0 {
                    INFINITE_MARGINAL
                } else {
                    (a * (p - 1.0) * (p - 2.0) * s.powf(p - 3.0)).min(INFINITE_MARGINAL)
                }
            }
            Self::Log { a, b } => {
                let x = b * s;
                if x < LOG_SERIES_CUTOFF {
                    a * b * b * b * series(x, |k| (k + 2.0) * (k + 1.0) / (k + 3.0))
                } else {
                    (self.curvature(s) - 2.0 * self.average_slope(s)) / s
                }
            }
            Self::Linquad { .. } => 0.0,
            Self::Tabulated(t) => {
                if s <= t.knots[1] {
                    0.0
                } else {
                    (t.curvature(s) - 2.0 * self.average_slope(s)) / s
                }
            }
        }
    }

    /// `P(s) = ∫₀ˢ u(t)/t dt`. Closed form except for the log kind, which
    /// uses adaptive quadrature after substituting `t = s·τ²`,
    /// which turns the integrand into `2·u(s·τ²)/τ` on `[0, 1]`.
    pub fn average_integral(&self, s: f64) -> Result<f64, QuadratureError> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        match self {
            Self::Power { a, p } => Ok(a * s.powf(*p) / p),
            Self::Linquad { a, b } => Ok(a * s - 0.5 * b * s * s),
            Self::Tabulated(t) => Ok(t.average_integral(s)),
            Self::Log { .. } => quadrature::integrate(
                |tau| {
                    let t = s * tau * tau;
                    2.0 * tau * s * self.average(t)
                },
                0.0,
                1.0,
                AVERAGE_INTEGRAL_TOL,
                AVERAGE_INTEGRAL_TOL,
            ),
        }
    }

    /// Whether `u` is strictly concave on `[0, capacity]`.
    pub fn is_strictly_concave(&self, capacity: f64) -> bool {
        match self {
            Self::Power { .. } | Self::Log { .. } => true,
            Self::Linquad { b, .. } => *b > 0.0,
            Self::Tabulated(t) => {
                t.marginal.windows(2).all(|w| w[1] < w[0]) && t.knots[t.knots.len() - 1] >= capacity
            }
        }
    }

    pub(crate) fn check_parameters(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be finite and > 0, got {v}"))
            }
        };
        match self {
            Self::Power { a, p } => {
                positive("power a", *a)?;
                if !(p.is_finite() && *p > 0.0 && *p < 1.0) {
                    return Err(format!("power p must lie in (0, 1), got {p}"));
                }
                Ok(())
            }
            Self::Log { a, b } => {
                positive("log a", *a)?;
                positive("log b", *b)
            }
            Self::Linquad { a, b } => {
                positive("linquad a", *a)?;
                if !(b.is_finite() && *b >= 0.0) {
                    return Err(format!("linquad b must be finite and >= 0, got {b}"));
                }
                Ok(())
            }
            Self::Tabulated(_) => Ok(()),
        }
    }
}

// Σ_{k≥0} coef(k)·(−x)^k, truncated once terms fall below double precision.
fn series(x: f64, coef: impl Fn(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for k in 0..12 {
        sum += coef(k as f64) * power;
        power *= -x;
    }
    sum
}
