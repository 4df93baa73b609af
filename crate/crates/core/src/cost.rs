//! Production cost functions `c: [0, 1] -> R>=0`.
//!
//! Costs form a closed family so that every solver has analytic first and
//! second derivatives and an exact inverse; nothing in the production path
//! differentiates numerically. All families satisfy `c(0) = 0` and are
//! strictly increasing.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric;
use crate::tol;

/// A creator's cost function.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSpec {
    /// `c(q) = slope * q`
    Linear { slope: f64 },
    /// `c(q) = coefficient * q^exponent`. Exponents below 1 give a concave
    /// cost; they are accepted but rejected by convexity-requiring solvers.
    Power { coefficient: f64, exponent: f64 },
    /// `c(q) = quad * q^2 + linear * q`
    QuadraticPlusLinear { quad: f64, linear: f64 },
    /// `c(q) = index * q^2`
    ScaledQuadratic { index: f64 },
}

impl CostSpec {
    pub fn linear(slope: f64) -> Result<Self> {
        if slope <= 0.0 || !slope.is_finite() {
            return Err(Error::precondition(format!(
                "linear cost needs a positive slope, got {slope}"
            )));
        }
        Ok(CostSpec::Linear { slope })
    }

    pub fn power(coefficient: f64, exponent: f64) -> Result<Self> {
        if coefficient <= 0.0 || !coefficient.is_finite() {
            return Err(Error::precondition(format!(
                "power cost needs a positive coefficient, got {coefficient}"
            )));
        }
        if exponent <= 0.0 || !exponent.is_finite() {
            return Err(Error::precondition(format!(
                "power cost needs a positive exponent, got {exponent}"
            )));
        }
        Ok(CostSpec::Power {
            coefficient,
            exponent,
        })
    }

    pub fn quad_linear(quad: f64, linear: f64) -> Result<Self> {
        if quad < 0.0 || linear < 0.0 || !quad.is_finite() || !linear.is_finite() {
            return Err(Error::precondition(format!(
                "quad_linear cost needs nonnegative parameters, got ({quad}, {linear})"
            )));
        }
        if quad + linear <= 0.0 {
            return Err(Error::precondition(
                "quad_linear cost needs at least one positive parameter",
            ));
        }
        Ok(CostSpec::QuadraticPlusLinear { quad, linear })
    }

    pub fn scaled_quadratic(index: f64) -> Result<Self> {
        if index <= 0.0 || !index.is_finite() {
            return Err(Error::precondition(format!(
                "scaled_quadratic cost needs a positive index, got {index}"
            )));
        }
        Ok(CostSpec::ScaledQuadratic { index })
    }

    /// Cost of producing quality `q`.
    pub fn eval(&self, q: f64) -> Result<f64> {
        check_quality(q)?;
        Ok(self.value(q))
    }

    /// Marginal cost `c'(q)`.
    pub fn eval_deriv(&self, q: f64) -> Result<f64> {
        check_quality(q)?;
        Ok(self.deriv(q))
    }

    /// Second derivative `c''(q)`.
    ///
    /// For `Power` costs with exponent in `(1, 2)` the second derivative is
    /// unbounded at `q = 0`; `f64::INFINITY` is returned there.
    pub fn eval_second_deriv(&self, q: f64) -> Result<f64> {
        check_quality(q)?;
        Ok(self.second_deriv(q))
    }

    /// Quality level with cost `v`, i.e. `c^{-1}(v)`.
    ///
    /// Closed forms exist for every family; a bisection fallback guards the
    /// general case. `c^{-1}(0) = 0` exactly.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        if !(0.0..=self.value_at_one() + tol::BOUNDARY).contains(&v) {
            return Err(Error::range(format!(
                "cost value {v} outside [0, c(1) = {}]",
                self.value_at_one()
            )));
        }
        Ok(self.inverse_value(v))
    }

    /// Whether `c''(q) <= c'(q)^2` holds at every grid point (the condition
    /// under which the Top-1 mechanism maximizes expected top quality).
    pub fn satisfies_linf_condition(&self, grid: &[f64]) -> bool {
        grid.iter()
            .copied()
            .filter(|&q| q > 0.0 && q < 1.0)
            .all(|q| {
                let d = self.deriv(q);
                self.second_deriv(q) <= d * d + tol::BOUNDARY
            })
    }

    /// `c(1)`, the cost of a perfect item.
    pub fn value_at_one(&self) -> f64 {
        self.value(1.0)
    }

    /// Weak convexity of the family on `[0, 1]`.
    pub fn is_convex(&self) -> bool {
        match self {
            CostSpec::Linear { .. } => true,
            CostSpec::Power { exponent, .. } => *exponent >= 1.0,
            CostSpec::QuadraticPlusLinear { .. } => true,
            CostSpec::ScaledQuadratic { .. } => true,
        }
    }

    /// Family tag used by the JSON serialization.
    pub fn family_name(&self) -> &'static str {
        match self {
            CostSpec::Linear { .. } => "linear",
            CostSpec::Power { .. } => "power",
            CostSpec::QuadraticPlusLinear { .. } => "quad_linear",
            CostSpec::ScaledQuadratic { .. } => "scaled_quadratic",
        }
    }

    /// Parameters in serialization order.
    pub fn params(&self) -> Vec<f64> {
        match self {
            CostSpec::Linear { slope } => vec![*slope],
            CostSpec::Power {
                coefficient,
                exponent,
            } => vec![*coefficient, *exponent],
            CostSpec::QuadraticPlusLinear { quad, linear } => vec![*quad, *linear],
            CostSpec::ScaledQuadratic { index } => vec![*index],
        }
    }

    /// Rebuild a cost from its family tag and parameter list.
    pub fn from_family(family: &str, params: &[f64]) -> Result<Self> {
        let need = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::precondition(format!(
                    "cost family '{family}' takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        match family {
            "linear" => {
                need(1)?;
                CostSpec::linear(params[0])
            }
            "power" => {
                need(2)?;
                CostSpec::power(params[0], params[1])
            }
            "quad_linear" => {
                need(2)?;
                CostSpec::quad_linear(params[0], params[1])
            }
            "scaled_quadratic" => {
                need(1)?;
                CostSpec::scaled_quadratic(params[0])
            }
            other => Err(Error::precondition(format!(
                "unknown cost family '{other}'"
            ))),
        }
    }

    pub(crate) fn value(&self, q: f64) -> f64 {
        match self {
            CostSpec::Linear { slope } => slope * q,
            CostSpec::Power {
                coefficient,
                exponent,
            } => coefficient * q.powf(*exponent),
            CostSpec::QuadraticPlusLinear { quad, linear } => quad * q * q + linear * q,
            CostSpec::ScaledQuadratic { index } => index * q * q,
        }
    }

    pub(crate) fn deriv(&self, q: f64) -> f64 {
        match self {
            CostSpec::Linear { slope } => *slope,
            CostSpec::Power {
                coefficient,
                exponent,
            } => {
                if *exponent == 1.0 {
                    *coefficient
                } else {
                    coefficient * exponent * q.powf(exponent - 1.0)
                }
            }
            CostSpec::QuadraticPlusLinear { quad, linear } => 2.0 * quad * q + linear,
            CostSpec::ScaledQuadratic { index } => 2.0 * index * q,
        }
    }

    pub(crate) fn second_deriv(&self, q: f64) -> f64 {
        match self {
            CostSpec::Linear { .. } => 0.0,
            CostSpec::Power {
                coefficient,
                exponent,
            } => {
                if *exponent == 1.0 {
                    0.0
                } else if *exponent == 2.0 {
                    2.0 * coefficient
                } else {
                    coefficient * exponent * (exponent - 1.0) * q.powf(exponent - 2.0)
                }
            }
            CostSpec::QuadraticPlusLinear { quad, .. } => 2.0 * quad,
            CostSpec::ScaledQuadratic { index } => 2.0 * index,
        }
    }

    /// Inverse on the clamped range; internal, assumes `v` near `[0, c(1)]`.
    pub(crate) fn inverse_value(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, self.value_at_one());
        if v == 0.0 {
            return 0.0;
        }
        match self {
            CostSpec::Linear { slope } => v / slope,
            CostSpec::Power {
                coefficient,
                exponent,
            } => (v / coefficient).powf(1.0 / exponent),
            CostSpec::QuadraticPlusLinear { quad, linear } => {
                if *quad == 0.0 {
                    v / linear
                } else {
                    // Positive root of quad*q^2 + linear*q - v.
                    let disc = linear * linear + 4.0 * quad * v;
                    let q = (disc.sqrt() - linear) / (2.0 * quad);
                    q.clamp(0.0, 1.0)
                }
            }
            CostSpec::ScaledQuadratic { index } => (v / index).sqrt(),
        }
    }

    /// Bisection inverse used as a cross-check of the closed forms.
    #[cfg(test)]
    fn inverse_by_bisection(&self, v: f64) -> f64 {
        let f = |q: f64| self.value(q);
        let mut lo = 0.0;
        let mut hi = 1.0;
        for _ in 0..tol::COST_INVERSE_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            let c = f(mid);
            if (c - v).abs() <= tol::COST_INVERSE_ABS {
                return mid;
            }
            if c < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Marginal cost evaluated past `q = 1`; the proportional-mechanism
    /// solver scans aggregates where `beta * x` can transiently exceed the
    /// model domain, and the analytic formulas extend naturally.
    pub(crate) fn deriv_extended(&self, q: f64) -> f64 {
        debug_assert!(q >= 0.0);
        self.deriv(q)
    }

    /// Bisection fallback for the inverse, kept for families added without a
    /// closed form; tolerance is absolute on the cost value.
    #[allow(dead_code)]
    pub(crate) fn inverse_bisect(&self, v: f64) -> Result<f64> {
        let target = v.clamp(0.0, self.value_at_one());
        let q = numeric::invert_nondecreasing(|q| self.value(q), 0.0, 1.0, target, f64::EPSILON);
        if (self.value(q) - target).abs() > tol::COST_INVERSE_ABS {
            return Err(Error::NoConvergence(format!(
                "cost inversion residual above {} at v = {v}",
                tol::COST_INVERSE_ABS
            )));
        }
        Ok(q)
    }
}

fn check_quality(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("quality {q} outside [0, 1]")));
    }
    Ok(())
}

impl Serialize for CostSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            family: &'a str,
            params: Vec<f64>,
        }
        Repr {
            family: self.family_name(),
            params: self.params(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CostSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            family: String,
            params: Vec<f64>,
        }
        let repr = Repr::deserialize(d)?;
        CostSpec::from_family(&repr.family, &repr.params).map_err(D::Error::custom)
    }
}
