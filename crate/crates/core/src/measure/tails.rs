//! Tail functions and truncated moments.
//!
//! `A` and `U` are evaluated through Fubini identities in terms of windowed
//! moments, which are exact whenever the moments are:
//!
//! ```text
//! ∫_1^x N(y) dy = ∫_{1<z≤x} (z - 1) Π(dz) + (x - 1) N(x)                  x ≥ 1
//! ∫_1^x N(y) dy = -[∫_{x<z≤1} (z - x) Π(dz) + (1 - x) N(1)]               x < 1
//! U(x)          = σ² + ∫_{|z|≤x} z² Π(dz) + x² T(x)
//! ```
//!
//! The `*_quadrature` variants integrate `D` and `yT(y)` directly and serve
//! as the independent route in tests.

use serde::{Serialize, Serializer};

use super::{LevyTriplet, MeasureSpec, Side};
use crate::error::{LevyError, Result};
use crate::quadrature::{self, Tolerance};

const FUNCTIONAL_TOL: Tolerance = Tolerance::new(1e-12, 1e-10);

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(LevyError::param("x", format!("must be positive and finite, got {x}")))
    }
}

/// `N(x) = Π((x, ∞))`.
pub fn tail_plus(measure: &MeasureSpec, x: f64) -> Result<f64> {
    check_x(x)?;
    measure.tail(Side::Plus, x)
}

/// `M(x) = Π((-∞, -x))`.
pub fn tail_minus(measure: &MeasureSpec, x: f64) -> Result<f64> {
    check_x(x)?;
    measure.tail(Side::Minus, x)
}

/// `(T(x), D(x)) = (N + M, N - M)`.
pub fn tail_sum_diff(measure: &MeasureSpec, x: f64) -> Result<(f64, f64)> {
    let n = tail_plus(measure, x)?;
    let m = tail_minus(measure, x)?;
    Ok((n + m, n - m))
}

/// `∫_1^x (side tail)(y) dy`, signed for `x < 1`.
fn integrated_tail(measure: &MeasureSpec, side: Side, x: f64) -> Result<f64> {
    if x >= 1.0 {
        let m1 = measure.moment(side, 1, 1.0, x)?;
        let m0 = measure.moment(side, 0, 1.0, x)?;
        Ok(m1 - m0 + (x - 1.0) * measure.tail(side, x)?)
    } else {
        let m1 = measure.moment(side, 1, x, 1.0)?;
        let m0 = measure.moment(side, 0, x, 1.0)?;
        Ok(-(m1 - x * m0 + (1.0 - x) * measure.tail(side, 1.0)?))
    }
}

/// `A(x) = γ + D(1) + ∫_1^x D(y) dy`. For `x < 1` the integral runs
/// backwards (`∫_1^x = -∫_x^1`).
pub fn trunc_mean_a(triplet: &LevyTriplet, x: f64) -> Result<f64> {
    check_x(x)?;
    let m = &triplet.measure;
    let d1 = m.tail(Side::Plus, 1.0)? - m.tail(Side::Minus, 1.0)?;
    Ok(triplet.gamma + d1 + integrated_tail(m, Side::Plus, x)? - integrated_tail(m, Side::Minus, x)?)
}

/// `U(x) = σ² + 2 ∫_0^x y T(y) dy`.
pub fn trunc_second_u(triplet: &LevyTriplet, x: f64) -> Result<f64> {
    check_x(x)?;
    let m = &triplet.measure;
    let mut u = triplet.sigma2;
    for side in Side::BOTH {
        u += m.moment(side, 2, 0.0, x)? + x * x * m.tail(side, x)?;
    }
    Ok(u)
}

fn breakpoints(measure: &MeasureSpec) -> Vec<f64> {
    let mut b = measure.breakpoints(Side::Plus);
    b.extend(measure.breakpoints(Side::Minus));
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `A(x)` by direct adaptive quadrature of `D`.
pub fn trunc_mean_a_quadrature(triplet: &LevyTriplet, x: f64) -> Result<f64> {
    check_x(x)?;
    let m = &triplet.measure;
    let d = |y: f64| match (m.tail(Side::Plus, y), m.tail(Side::Minus, y)) {
        (Ok(n), Ok(mm)) => n - mm,
        _ => f64::NAN,
    };
    let breaks = breakpoints(m);
    let (lo, hi, sign) = if x >= 1.0 { (1.0, x, 1.0) } else { (x, 1.0, -1.0) };
    let integral = quadrature::gauss_kronrod_with_breaks(d, lo, hi, &breaks, FUNCTIONAL_TOL)?;
    Ok(triplet.gamma + d(1.0) + sign * integral)
}

/// `U(x)` by direct quadrature of `2 y T(y)`; the first panel, which may
/// carry an integrable singularity at zero, uses tanh–sinh.
pub fn trunc_second_u_quadrature(triplet: &LevyTriplet, x: f64) -> Result<f64> {
    check_x(x)?;
    let m = &triplet.measure;
    let f = |y: f64| match (m.tail(Side::Plus, y), m.tail(Side::Minus, y)) {
        (Ok(n), Ok(mm)) => 2.0 * y * (n + mm),
        _ => f64::NAN,
    };
    let breaks = breakpoints(m);
    let first = breaks.iter().copied().find(|&b| b > 0.0 && b < x).unwrap_or(x);
    let head = quadrature::tanh_sinh(f, 0.0, first, FUNCTIONAL_TOL)?;
    let rest = quadrature::gauss_kronrod_with_breaks(f, first, x, &breaks, FUNCTIONAL_TOL)?;
    Ok(triplet.sigma2 + head + rest)
}

/// Mean of `X_1`, which exists iff `∫_{|x|>1} |x| Π(dx) < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanValue {
    Finite(f64),
    /// At least one side of `∫_{|x|>1} x Π(dx)` diverges.
    Divergent { plus_infinite: bool, minus_infinite: bool },
}

impl MeanValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            MeanValue::Finite(v) => Some(*v),
            MeanValue::Divergent { .. } => None,
        }
    }

    /// `Some(+1)` / `Some(-1)` when the mean is `+∞` / `-∞` (only one side
    /// divergent), `None` otherwise.
    pub fn infinite_sign(&self) -> Option<f64> {
        match self {
            MeanValue::Divergent {
                plus_infinite: true,
                minus_infinite: false,
            } => Some(1.0),
            MeanValue::Divergent {
                plus_infinite: false,
                minus_infinite: true,
            } => Some(-1.0),
            _ => None,
        }
    }

    pub(crate) fn from_sides(offset: f64, plus: f64, minus: f64) -> Self {
        if plus.is_finite() && minus.is_finite() {
            MeanValue::Finite(offset + plus - minus)
        } else {
            MeanValue::Divergent {
                plus_infinite: !plus.is_finite(),
                minus_infinite: !minus.is_finite(),
            }
        }
    }
}

/// `E X_1 = γ + ∫_{|x|>1} x Π(dx)` when it exists.
pub fn mean_ex1(triplet: &LevyTriplet) -> Result<MeanValue> {
    let m = &triplet.measure;
    let plus = m.moment(Side::Plus, 1, 1.0, f64::INFINITY)?;
    let minus = m.moment(Side::Minus, 1, 1.0, f64::INFINITY)?;
    Ok(MeanValue::from_sides(triplet.gamma, plus, minus))
}

/// Value of `A(x) / √(U(x) M(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriterionValue {
    Finite(f64),
    /// `M(x) = 0` with `A(x) > 0`.
    PlusInfinity,
    /// `M(x) = 0` with `A(x) < 0`.
    MinusInfinity,
    /// `0 / 0`.
    Indeterminate,
}

impl CriterionValue {
    pub fn from_parts(a: f64, u: f64, m: f64) -> Self {
        let denom = (u * m).sqrt();
        if denom > 0.0 {
            CriterionValue::Finite(a / denom)
        } else if a > 0.0 {
            CriterionValue::PlusInfinity
        } else if a < 0.0 {
            CriterionValue::MinusInfinity
        } else {
            CriterionValue::Indeterminate
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            CriterionValue::Finite(v) => *v,
            CriterionValue::PlusInfinity => f64::INFINITY,
            CriterionValue::MinusInfinity => f64::NEG_INFINITY,
            CriterionValue::Indeterminate => f64::NAN,
        }
    }
}

/// One row of the tail/moment table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailReport {
    pub x: f64,
    #[serde(rename = "N")]
    pub n_plus: f64,
    #[serde(rename = "M")]
    pub m_minus: f64,
    #[serde(rename = "T")]
    pub t_sum: f64,
    #[serde(rename = "D")]
    pub d_diff: f64,
    #[serde(rename = "A")]
    pub a_trunc: f64,
    #[serde(rename = "U")]
    pub u_trunc: f64,
    #[serde(serialize_with = "serialize_extended_real")]
    pub criterion: f64,
}

impl TailReport {
    pub const CSV_HEADER: &'static str = "x,N,M,T,D,A,U,criterion";

    pub fn csv_row(&self) -> String {
        [
            self.x,
            self.n_plus,
            self.m_minus,
            self.t_sum,
            self.d_diff,
            self.a_trunc,
            self.u_trunc,
            self.criterion,
        ]
        .iter()
        .map(|v| format_real(*v))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// Shortest round-trip formatting with `inf`, `-inf`, `nan` for the
/// non-finite values.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{}", v + 0.0)
    }
}

pub(crate) fn serialize_extended_real<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&format_real(*v))
    }
}

/// All tail functionals at `x`.
pub fn tail_report(triplet: &LevyTriplet, x: f64) -> Result<TailReport> {
    let n_plus = tail_plus(&triplet.measure, x)?;
    let m_minus = tail_minus(&triplet.measure, x)?;
    let a_trunc = trunc_mean_a(triplet, x)?;
    let u_trunc = trunc_second_u(triplet, x)?;
    Ok(TailReport {
        x,
        n_plus,
        m_minus,
        t_sum: n_plus + m_minus,
        d_diff: n_plus - m_minus,
        a_trunc,
        u_trunc,
        criterion: CriterionValue::from_parts(a_trunc, u_trunc, m_minus).as_f64(),
    })
}
