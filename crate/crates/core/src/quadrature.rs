//! One-dimensional quadrature.
//!
//! Two schemes are provided. Adaptive Gauss–Kronrod (7/15 point) panels
//! handle smooth integrands on finite intervals; callers pass the known
//! kink locations (atom positions, support floors, table abscissae) as
//! breakpoints so that every panel sees a smooth integrand. Double
//! exponential (tanh–sinh) quadrature handles integrable endpoint
//! singularities such as `y^(1-α)` at zero, and semi-infinite ranges after
//! the map `y = a + t / (1 - t)`.

use crate::error::LevyError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 1e-8)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_PANELS: usize = 4000;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Panel { a, b, value, error }
}

/// Adaptive Gauss–Kronrod on a finite interval `[a, b]`, `a < b`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64, LevyError> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(LevyError::Quadrature { lo: a, hi: b });
    }
    let mut panels = vec![kronrod_panel(&f, a, b)];
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !total.is_finite() {
            let worst = panels[0];
            return Err(LevyError::Quadrature { lo: worst.a, hi: worst.b });
        }
        if error <= tol.target(total) {
            return Ok(total);
        }
        let (idx, worst) = panels
            .iter()
            .copied()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        // A panel that can no longer be split in floating point is done.
        if mid <= worst.a || mid >= worst.b || panels.len() >= MAX_PANELS {
            if error <= 1e3 * tol.target(total) && panels.len() < MAX_PANELS {
                return Ok(total);
            }
            return Err(LevyError::Quadrature { lo: worst.a, hi: worst.b });
        }
        panels[idx] = kronrod_panel(&f, worst.a, mid);
        panels.push(kronrod_panel(&f, mid, worst.b));
    }
}

/// Gauss–Kronrod over `[a, b]` split at every breakpoint strictly inside.
pub fn gauss_kronrod_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<f64, LevyError> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut lo = a;
    let mut total = 0.0;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        total += gauss_kronrod(&f, lo, hi, tol)?;
        lo = hi;
    }
    Ok(total)
}

/// Tanh–sinh quadrature on a finite interval. Never evaluates `f` at the
/// endpoints, so integrable endpoint singularities are fine.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64, LevyError> {
    tanh_sinh_core(|x, _, _| f(x), a, b, tol)
}

/// Tanh–sinh where the integrand also receives the distances to both
/// endpoints, computed without cancellation.
fn tanh_sinh_core<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64, LevyError> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(LevyError::Quadrature { lo: a, hi: b });
    }
    let half = 0.5 * (b - a);
    let half_pi = std::f64::consts::FRAC_PI_2;
    // Abscissae reach within ~1e-300 of the endpoints at this range, which
    // strong singularities like x^(-0.9) need.
    let t_max = 6.5;

    let eval = |t: f64| -> f64 {
        let u = half_pi * t.sinh();
        let cosh_u = u.cosh();
        let weight = half_pi * t.cosh() / (cosh_u * cosh_u);
        if weight == 0.0 || !weight.is_finite() {
            return 0.0;
        }
        let to_a = half * 2.0 / (1.0 + (-2.0 * u).exp());
        let to_b = half * 2.0 / (1.0 + (2.0 * u).exp());
        if to_a <= 0.0 || to_b <= 0.0 {
            return 0.0;
        }
        let x = if to_a <= to_b { a + to_a } else { b - to_b };
        let v = f(x, to_a, to_b);
        // Overflow this deep in an endpoint comes from an integrable power
        // singularity whose remaining mass is below rounding.
        if !v.is_finite() && to_a.min(to_b) < 1e-100 * half {
            return 0.0;
        }
        weight * v
    };

    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = half * h * sum;
    let mut previous_gap = f64::INFINITY;
    for _level in 0..12 {
        h *= 0.5;
        // Only the odd multiples of the new step are new points.
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = half * h * sum;
        if !next.is_finite() {
            return Err(LevyError::Quadrature { lo: a, hi: b });
        }
        let gap = (next - estimate).abs();
        estimate = next;
        // convergence is quadratic, so a small gap after a small gap is safe
        if gap <= tol.target(next) && previous_gap <= 1e3 * tol.target(next).max(gap) {
            return Ok(estimate);
        }
        previous_gap = gap;
    }
    Err(LevyError::Quadrature { lo: a, hi: b })
}

/// Integral over `[a, ∞)` by tanh–sinh after mapping `y = a + t / (1 - t)`.
pub fn semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<f64, LevyError> {
    let mapped = |t: f64, _: f64, one_minus: f64| {
        let y = a + t / one_minus;
        if !y.is_finite() {
            return 0.0;
        }
        let v = f(y) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    tanh_sinh_core(mapped, 0.0, 1.0, tol).map_err(|_| LevyError::Quadrature {
        lo: a,
        hi: f64::INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TIGHT: Tolerance = Tolerance::new(1e-14, 1e-12);

    #[test]
    fn polynomial_exact() {
        let v = gauss_kronrod(|x| x * x * x - 2.0 * x, 0.0, 3.0, TIGHT).unwrap();
        assert_relative_eq!(v, 81.0 / 4.0 - 9.0, max_relative = 1e-13);
    }

    #[test]
    fn breaks_handle_step_functions() {
        let step = |x: f64| if x < 1.3 { 2.0 } else { -1.0 };
        let v = gauss_kronrod_with_breaks(step, 0.0, 2.0, &[1.3, 5.0], TIGHT).unwrap();
        assert_relative_eq!(v, 2.0 * 1.3 - 0.7, max_relative = 1e-13);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // ∫_0^1 x^(-0.9) dx = 10
        let v = tanh_sinh(|x| x.powf(-0.9), 0.0, 1.0, TIGHT).unwrap();
        assert_relative_eq!(v, 10.0, max_relative = 1e-9);
    }

    #[test]
    fn overflow_at_endpoint_is_dropped() {
        // ∫_0^1 x^(-1.9) x dx = 10 with the factors split so x^(-1.9) overflows
        let v = tanh_sinh(|x| x * x.powf(-1.9), 0.0, 1.0, TIGHT).unwrap();
        assert_relative_eq!(v, 10.0, max_relative = 1e-9);
        assert!(tanh_sinh(|_| f64::INFINITY, 0.0, 1.0, TIGHT).is_err());
    }

    #[test]
    fn semi_infinite_power_tail() {
        // ∫_2^∞ y^(-3/2) dy = 2 / √2
        let v = semi_infinite(|y| y.powf(-1.5), 2.0, TIGHT).unwrap();
        assert_relative_eq!(v, 2.0 / 2f64.sqrt(), max_relative = 1e-9);
        let e = semi_infinite(|y| (-y).exp(), 0.5, TIGHT).unwrap();
        assert_relative_eq!(e, (-0.5f64).exp(), max_relative = 1e-11);
    }

    #[test]
    fn degenerate_interval_is_zero() {
        assert_eq!(gauss_kronrod(|x| x, 1.0, 1.0, TIGHT).unwrap(), 0.0);
        assert_eq!(tanh_sinh(|x| x, 1.0, 1.0, TIGHT).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_integrand_reports_interval() {
        let err = gauss_kronrod(|_| f64::NAN, 0.0, 1.0, TIGHT).unwrap_err();
        assert!(matches!(err, LevyError::Quadrature { lo, hi } if lo == 0.0 && hi == 1.0));
    }
}
