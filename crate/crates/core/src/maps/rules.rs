//! Single-valued and parametric catalog rules.

use serde::{Deserialize, Serialize};

use super::MapError;
use crate::spaces::Point;

/// `x ↦ 0` for `x ≤ 0`, `x ↦ x` for `x > 0`.
#[inline]
pub fn paper_f(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x
    }
}

/// `x ↦ x²` for `x ≤ 0`, `x ↦ −x²` for `x > 0`.
#[inline]
pub fn paper_g(x: f64) -> f64 {
    if x <= 0.0 {
        x * x
    } else {
        -(x * x)
    }
}

/// `paper_f + paper_g`: `x²` for `x ≤ 0`, `x − x²` for `x > 0`.
#[inline]
pub fn paper_h(x: f64) -> f64 {
    if x <= 0.0 {
        x * x
    } else {
        x - x * x
    }
}

/// Catalog of single-valued maps `ℝⁿ → ℝⁿ`.
///
/// Scalar rules act coordinatewise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Rule {
    Zero,
    Identity,
    Constant { value: Vec<f64> },
    Scaling { factor: f64 },
    Cubic,
    Square,
    /// `amplitude · sin(x)`
    Sin { amplitude: f64 },
    PaperF,
    PaperG,
    PaperH,
    /// Pointwise sum of the terms.
    Add { terms: Vec<Rule> },
}

impl Rule {
    pub fn check_dim(&self, dim: usize) -> Result<(), MapError> {
        match self {
            Rule::Constant { value } if value.len() != dim => Err(MapError::Invalid(format!(
                "constant of dimension {} in a {dim}-dimensional map",
                value.len()
            ))),
            Rule::Add { terms } => terms.iter().try_for_each(|t| t.check_dim(dim)),
            Rule::Scaling { factor } | Rule::Sin { amplitude: factor } if !factor.is_finite() => {
                Err(MapError::Invalid(format!("non-finite coefficient {factor}")))
            }
            _ => Ok(()),
        }
    }

    /// Coordinate values where the rule is not differentiable.
    pub fn kinks(&self, out: &mut Vec<f64>) {
        match self {
            Rule::PaperF | Rule::PaperG | Rule::PaperH => out.push(0.0),
            Rule::Add { terms } => terms.iter().for_each(|t| t.kinks(out)),
            _ => {}
        }
    }

    /// Dimension forced by the rule itself, if any.
    pub fn intrinsic_dim(&self) -> Option<usize> {
        match self {
            Rule::Constant { value } => Some(value.len()),
            Rule::Add { terms } => terms.iter().find_map(Rule::intrinsic_dim),
            _ => None,
        }
    }

    #[inline]
    fn scalar(&self, v: f64) -> f64 {
        match self {
            Rule::Zero => 0.0,
            Rule::Identity => v,
            Rule::Scaling { factor } => factor * v,
            Rule::Cubic => v * v * v,
            Rule::Square => v * v,
            Rule::Sin { amplitude } => amplitude * v.sin(),
            Rule::PaperF => paper_f(v),
            Rule::PaperG => paper_g(v),
            Rule::PaperH => paper_h(v),
            Rule::Constant { .. } | Rule::Add { .. } => unreachable!("not a scalar rule"),
        }
    }

    /// `g(x)` on the line without allocating; `None` for rules that need a
    /// vector evaluation.
    #[inline]
    pub(crate) fn scalar_at(&self, v: f64) -> Option<f64> {
        match self {
            Rule::Constant { value } => value.first().copied(),
            Rule::Add { terms } => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.scalar_at(v)?;
                }
                Some(acc)
            }
            scalar => Some(scalar.scalar(v)),
        }
    }

    /// Writes `g(x)` into `out`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Rule::Constant { value } => out.copy_from_slice(value),
            Rule::Add { terms } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut buf = vec![0.0; x.len()];
                for t in terms {
                    t.apply_into(x, &mut buf);
                    out.iter_mut().zip(&buf).for_each(|(o, b)| *o += b);
                }
            }
            scalar => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = scalar.scalar(*v);
                }
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Point {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    /// True when `g ≡ 0` syntactically.
    pub fn is_zero(&self) -> bool {
        match self {
            Rule::Zero => true,
            Rule::Constant { value } => value.iter().all(|v| *v == 0.0),
            Rule::Scaling { factor } | Rule::Sin { amplitude: factor } => *factor == 0.0,
            Rule::Add { terms } => terms.iter().all(Rule::is_zero),
            _ => false,
        }
    }
}

/// Catalog of parametric maps `(t, x) ↦ f(t, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParamRule {
    /// `f(t, x) = g(x)`
    Static { g: Rule },
    /// `f(t, x) = g(x) + t` (a one-dimensional `t` is broadcast).
    Shift { g: Rule },
    /// `f(t, x) = t₀ · g(x)`
    Modulated { g: Rule },
    Add { terms: Vec<ParamRule> },
    /// Parameter packed as `(τ, y)`: `f((τ, y), x) = inner(τ, x) − y`.
    Packed { inner: Box<ParamRule>, inner_dim: usize },
}

impl ParamRule {
    /// Coordinate values where `x ↦ f(t, x)` is not differentiable.
    pub fn kinks(&self, out: &mut Vec<f64>) {
        match self {
            ParamRule::Static { g } | ParamRule::Shift { g } | ParamRule::Modulated { g } => g.kinks(out),
            ParamRule::Add { terms } => terms.iter().for_each(|t| t.kinks(out)),
            ParamRule::Packed { inner, .. } => inner.kinks(out),
        }
    }

    pub fn check_dims(&self, param_dim: usize, dim: usize) -> Result<(), MapError> {
        match self {
            ParamRule::Static { g } => g.check_dim(dim),
            ParamRule::Shift { g } => {
                if param_dim != 1 && param_dim != dim {
                    return Err(MapError::Invalid(format!(
                        "shift needs a parameter of dimension 1 or {dim}, got {param_dim}"
                    )));
                }
                g.check_dim(dim)
            }
            ParamRule::Modulated { g } => g.check_dim(dim),
            ParamRule::Add { terms } => terms.iter().try_for_each(|t| t.check_dims(param_dim, dim)),
            ParamRule::Packed { inner, inner_dim } => {
                if *inner_dim + dim != param_dim {
                    return Err(MapError::Invalid(format!(
                        "packed parameter has dimension {param_dim}, expected {inner_dim} + {dim}"
                    )));
                }
                inner.check_dims(*inner_dim, dim)
            }
        }
    }

    /// Scalar-state evaluation; mirrors [`ParamRule::apply_into`] exactly.
    #[inline]
    pub(crate) fn scalar_at(&self, t: &[f64], x: f64) -> Option<f64> {
        match self {
            ParamRule::Static { g } => g.scalar_at(x),
            ParamRule::Shift { g } => Some(g.scalar_at(x)? + t[0]),
            ParamRule::Modulated { g } => Some(g.scalar_at(x)? * t[0]),
            ParamRule::Add { terms } => {
                let mut acc = 0.0;
                for term in terms {
                    acc += term.scalar_at(t, x)?;
                }
                Some(acc)
            }
            ParamRule::Packed { inner, inner_dim } => {
                let (tau, y) = t.split_at(*inner_dim);
                Some(inner.scalar_at(tau, x)? - y[0])
            }
        }
    }

    pub fn apply_into(&self, t: &[f64], x: &[f64], out: &mut [f64]) {
        match self {
            ParamRule::Static { g } => g.apply_into(x, out),
            ParamRule::Shift { g } => {
                g.apply_into(x, out);
                if t.len() == 1 {
                    out.iter_mut().for_each(|o| *o += t[0]);
                } else {
                    out.iter_mut().zip(t).for_each(|(o, s)| *o += s);
                }
            }
            ParamRule::Modulated { g } => {
                g.apply_into(x, out);
                out.iter_mut().for_each(|o| *o *= t[0]);
            }
            ParamRule::Add { terms } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut buf = vec![0.0; out.len()];
                for term in terms {
                    term.apply_into(t, x, &mut buf);
                    out.iter_mut().zip(&buf).for_each(|(o, b)| *o += b);
                }
            }
            ParamRule::Packed { inner, inner_dim } => {
                let (tau, y) = t.split_at(*inner_dim);
                inner.apply_into(tau, x, out);
                out.iter_mut().zip(y).for_each(|(o, v)| *o -= v);
            }
        }
    }

    /// `f(s, x) − f(t, x)`, simplified per rule so that algebraic
    /// cancellations (a static part, an additive parameter) are exact.
    pub fn increment_into(&self, s: &[f64], t: &[f64], x: &[f64], out: &mut [f64]) {
        match self {
            ParamRule::Static { .. } => out.iter_mut().for_each(|o| *o = 0.0),
            ParamRule::Shift { .. } => {
                if s.len() == 1 {
                    out.iter_mut().for_each(|o| *o = s[0] - t[0]);
                } else {
                    out.iter_mut().zip(s.iter().zip(t)).for_each(|(o, (a, b))| *o = a - b);
                }
            }
            ParamRule::Modulated { g } => {
                g.apply_into(x, out);
                out.iter_mut().for_each(|o| *o *= s[0] - t[0]);
            }
            ParamRule::Add { terms } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut buf = vec![0.0; out.len()];
                for term in terms {
                    term.increment_into(s, t, x, &mut buf);
                    out.iter_mut().zip(&buf).for_each(|(o, b)| *o += b);
                }
            }
            ParamRule::Packed { inner, inner_dim } => {
                let (ts, ys) = s.split_at(*inner_dim);
                let (tt, yt) = t.split_at(*inner_dim);
                inner.increment_into(ts, tt, x, out);
                out.iter_mut()
                    .zip(ys.iter().zip(yt))
                    .for_each(|(o, (a, b))| *o -= a - b);
            }
        }
    }

    pub fn apply(&self, t: &[f64], x: &[f64]) -> Point {
        let mut out = vec![0.0; x.len()];
        self.apply_into(t, x, &mut out);
        out
    }
}
