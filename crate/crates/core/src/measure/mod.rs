//! Lévy measures and triplets.
//!
//! A measure is described declaratively so that tails, windowed moments and
//! samplers can all be derived from one serializable value. Every quantity
//! is expressed through the windowed moment
//!
//! ```text
//! moment(side, k, lo, hi) = ∫_{lo < |x| ≤ hi, x on side} |x|^k Π(dx)
//! ```
//!
//! which is closed form for atoms, untempered power laws and density tables
//! and computed by quadrature for tempered power laws.

mod sampler;
mod tails;

use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};
use crate::quadrature::{self, Tolerance};

pub use sampler::RegionSampler;
pub use tails::{
    mean_ex1, tail_minus, tail_plus, tail_report, tail_sum_diff, trunc_mean_a, trunc_mean_a_quadrature,
    trunc_second_u, trunc_second_u_quadrature, CriterionValue, MeanValue, TailReport,
};

pub(crate) const MOMENT_TOL: Tolerance = Tolerance::new(1e-300, 1e-12);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Plus, Side::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// A point mass of `rate` jumps per unit time at `position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Atom {
    pub position: f64,
    pub rate: f64,
}

impl Atom {
    pub fn new(position: f64, rate: f64) -> Self {
        Self { position, rate }
    }

    fn side(&self) -> Side {
        if self.position > 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

impl From<(f64, f64)> for Atom {
    fn from((position, rate): (f64, f64)) -> Self {
        Atom { position, rate }
    }
}

impl From<Atom> for (f64, f64) {
    fn from(a: Atom) -> Self {
        (a.position, a.rate)
    }
}

/// One side of a (possibly tempered, possibly floored) power-law density
/// `c |x|^(-1-α) e^(-λ|x|)` on `|x| > x_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSide {
    pub c: f64,
    pub alpha: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub x_min: f64,
}

impl PowerSide {
    pub fn new(c: f64, alpha: f64) -> Self {
        Self {
            c,
            alpha,
            lambda: 0.0,
            x_min: 0.0,
        }
    }

    pub fn tempered(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn floored(mut self, x_min: f64) -> Self {
        self.x_min = x_min;
        self
    }

    fn validate(&self, key: &str) -> Result<()> {
        let finite = [self.c, self.alpha, self.lambda, self.x_min].iter().all(|v| v.is_finite());
        if !finite {
            return Err(LevyError::param(key, "power-law parameters must be finite"));
        }
        if self.c < 0.0 || self.lambda < 0.0 || self.x_min < 0.0 {
            return Err(LevyError::param(key, "c, lambda and x_min must be nonnegative"));
        }
        if self.alpha <= 0.0 {
            return Err(LevyError::param(key, "alpha must be positive"));
        }
        // ∫_{|x|≤1} x² Π(dx) < ∞ needs α < 2 when the density reaches zero.
        if self.x_min == 0.0 && self.c > 0.0 && self.alpha >= 2.0 {
            return Err(LevyError::param(
                key,
                "alpha must be below 2 when x_min = 0 (second moment near zero diverges)",
            ));
        }
        Ok(())
    }

    pub fn density(&self, y: f64) -> f64 {
        if y <= self.x_min || y <= 0.0 {
            return 0.0;
        }
        self.c * y.powf(-1.0 - self.alpha) * (-self.lambda * y).exp()
    }

    fn moment(&self, k: u32, lo: f64, hi: f64) -> Result<f64> {
        if self.lambda == 0.0 {
            Ok(self.moment_closed(k, lo, hi))
        } else {
            self.moment_numeric(k, lo, hi)
        }
    }

    fn moment_closed(&self, k: u32, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(self.x_min);
        if hi <= lo || self.c == 0.0 {
            return 0.0;
        }
        let e = k as f64 - self.alpha;
        if e.abs() < 1e-12 {
            if lo == 0.0 || hi.is_infinite() {
                return f64::INFINITY;
            }
            self.c * (hi.ln() - lo.ln())
        } else if e > 0.0 {
            if hi.is_infinite() {
                return f64::INFINITY;
            }
            self.c * (hi.powf(e) - lo.powf(e)) / e
        } else {
            if lo == 0.0 {
                return f64::INFINITY;
            }
            let hi_term = if hi.is_infinite() { 0.0 } else { hi.powf(e) };
            self.c * (lo.powf(e) - hi_term) / -e
        }
    }

    fn moment_numeric(&self, k: u32, lo: f64, hi: f64) -> Result<f64> {
        let lo = lo.max(self.x_min);
        if hi <= lo || self.c == 0.0 {
            return Ok(0.0);
        }
        let p = k as f64 - 1.0 - self.alpha;
        let (c, lambda) = (self.c, self.lambda);
        let g = move |y: f64| c * y.powf(p) * (-lambda * y).exp();
        let tail = |from: f64| -> Result<f64> {
            if hi <= from {
                Ok(0.0)
            } else if hi.is_infinite() {
                if lambda == 0.0 && p >= -1.0 {
                    Ok(f64::INFINITY)
                } else {
                    quadrature::semi_infinite(g, from, MOMENT_TOL)
                }
            } else {
                quadrature::gauss_kronrod(g, from, hi, MOMENT_TOL)
            }
        };
        if lo == 0.0 {
            if p <= -1.0 {
                return Ok(f64::INFINITY);
            }
            let split = hi.min(1.0);
            Ok(quadrature::tanh_sinh(g, 0.0, split, MOMENT_TOL)? + tail(split)?)
        } else {
            tail(lo)
        }
    }
}

/// One side of a piecewise-constant density: `density[i]` on
/// `[abscissae[i], abscissae[i + 1])`, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySide {
    pub abscissae: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensitySide {
    fn validate(&self, key: &str) -> Result<()> {
        if self.abscissae.len() < 2 || self.density.len() + 1 != self.abscissae.len() {
            return Err(LevyError::param(
                key,
                "need at least two abscissae and exactly one density value per bin",
            ));
        }
        if self.abscissae.iter().chain(&self.density).any(|v| !v.is_finite()) {
            return Err(LevyError::param(key, "table entries must be finite"));
        }
        if self.abscissae[0] < 0.0 || self.abscissae.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LevyError::param(key, "abscissae must be nonnegative and strictly increasing"));
        }
        if self.density.iter().any(|&d| d < 0.0) {
            return Err(LevyError::param(key, "density values must be nonnegative"));
        }
        Ok(())
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.abscissae
            .windows(2)
            .zip(&self.density)
            .map(|(w, &d)| (w[0], w[1], d))
    }

    pub fn density_at(&self, y: f64) -> f64 {
        self.bins()
            .find(|&(a, b, _)| y >= a && y < b)
            .map_or(0.0, |(_, _, d)| d)
    }

    fn moment(&self, k: u32, lo: f64, hi: f64) -> f64 {
        let kp = k as f64 + 1.0;
        self.bins()
            .map(|(a, b, d)| {
                let a = a.max(lo);
                let b = b.min(hi);
                if b <= a || d == 0.0 {
                    0.0
                } else {
                    d * (b.powf(kp) - a.powf(kp)) / kp
                }
            })
            .sum()
    }

    fn moment_numeric(&self, k: u32, lo: f64, hi: f64) -> Result<f64> {
        let first = self.abscissae[0];
        let last = *self.abscissae.last().expect("validated table");
        let a = lo.max(first);
        let b = hi.min(last);
        if b <= a {
            return Ok(0.0);
        }
        quadrature::gauss_kronrod_with_breaks(
            |y| y.powi(k as i32) * self.density_at(y),
            a,
            b,
            &self.abscissae,
            MOMENT_TOL,
        )
    }

    fn support_bound(&self) -> f64 {
        self.bins()
            .filter(|&(_, _, d)| d > 0.0)
            .map(|(_, b, _)| b)
            .fold(0.0, f64::max)
    }
}

/// Declarative Lévy measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeasureSpec {
    Atoms {
        atoms: Vec<Atom>,
    },
    Power {
        #[serde(default)]
        plus: Option<PowerSide>,
        #[serde(default)]
        minus: Option<PowerSide>,
    },
    Table {
        #[serde(default)]
        plus: Option<DensitySide>,
        #[serde(default)]
        minus: Option<DensitySide>,
    },
    /// Superposition of independent components.
    Sum {
        parts: Vec<MeasureSpec>,
    },
}

/// Half-open window `lo < |x| ≤ hi` on the magnitude of a jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn above(lo: f64) -> Self {
        Self { lo, hi: f64::INFINITY }
    }

    pub fn contains(&self, magnitude: f64) -> bool {
        magnitude > self.lo && magnitude <= self.hi
    }
}

/// A window per side of the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub plus: Window,
    pub minus: Window,
}

impl Region {
    pub fn window(&self, side: Side) -> Window {
        match side {
            Side::Plus => self.plus,
            Side::Minus => self.minus,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        if x > 0.0 {
            self.plus.contains(x)
        } else if x < 0.0 {
            self.minus.contains(-x)
        } else {
            false
        }
    }
}

impl MeasureSpec {
    pub fn atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        MeasureSpec::Atoms {
            atoms: atoms.into_iter().map(Atom::from).collect(),
        }
    }

    pub fn power(plus: Option<PowerSide>, minus: Option<PowerSide>) -> Self {
        MeasureSpec::Power { plus, minus }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_at("measure")?;
        if !self.has_mass() {
            return Err(LevyError::InvalidMeasure("total mass Π(ℝ) must be positive".into()));
        }
        Ok(())
    }

    fn validate_at(&self, key: &str) -> Result<()> {
        match self {
            MeasureSpec::Atoms { atoms } => {
                for (i, a) in atoms.iter().enumerate() {
                    let k = format!("{key}.atoms[{i}]");
                    if !(a.position.is_finite() && a.rate.is_finite()) {
                        return Err(LevyError::param(k, "atom entries must be finite"));
                    }
                    if a.position == 0.0 {
                        return Err(LevyError::param(k, "atom position must be nonzero"));
                    }
                    if a.rate <= 0.0 {
                        return Err(LevyError::param(k, "atom rate must be positive"));
                    }
                }
                Ok(())
            }
            MeasureSpec::Power { plus, minus } => {
                if let Some(p) = plus {
                    p.validate(&format!("{key}.plus"))?;
                }
                if let Some(m) = minus {
                    m.validate(&format!("{key}.minus"))?;
                }
                Ok(())
            }
            MeasureSpec::Table { plus, minus } => {
                if let Some(p) = plus {
                    p.validate(&format!("{key}.plus"))?;
                }
                if let Some(m) = minus {
                    m.validate(&format!("{key}.minus"))?;
                }
                Ok(())
            }
            MeasureSpec::Sum { parts } => {
                for (i, p) in parts.iter().enumerate() {
                    p.validate_at(&format!("{key}.parts[{i}]"))?;
                }
                Ok(())
            }
        }
    }

    fn has_mass(&self) -> bool {
        match self {
            MeasureSpec::Atoms { atoms } => atoms.iter().any(|a| a.rate > 0.0),
            MeasureSpec::Power { plus, minus } => plus.iter().chain(minus).any(|s| s.c > 0.0),
            MeasureSpec::Table { plus, minus } => plus
                .iter()
                .chain(minus)
                .any(|t| t.bins().any(|(a, b, d)| d > 0.0 && b > a)),
            MeasureSpec::Sum { parts } => parts.iter().any(MeasureSpec::has_mass),
        }
    }

    /// `∫_{lo < |x| ≤ hi, x on side} |x|^k Π(dx)`; `+∞` when divergent.
    pub fn moment(&self, side: Side, k: u32, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        match self {
            MeasureSpec::Atoms { atoms } => Ok(atoms
                .iter()
                .filter(|a| a.side() == side && Window::new(lo, hi).contains(a.position.abs()))
                .map(|a| a.rate * a.position.abs().powi(k as i32))
                .sum()),
            MeasureSpec::Power { plus, minus } => match pick(side, plus, minus) {
                Some(s) => s.moment(k, lo, hi),
                None => Ok(0.0),
            },
            MeasureSpec::Table { plus, minus } => Ok(pick(side, plus, minus).map_or(0.0, |t| t.moment(k, lo, hi))),
            MeasureSpec::Sum { parts } => parts.iter().map(|p| p.moment(side, k, lo, hi)).sum(),
        }
    }

    /// Same quantity as [`MeasureSpec::moment`] but always integrating the
    /// density numerically (atoms are summed). Used as an independent route.
    pub fn moment_numeric(&self, side: Side, k: u32, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        match self {
            MeasureSpec::Atoms { .. } => self.moment(side, k, lo, hi),
            MeasureSpec::Power { plus, minus } => match pick(side, plus, minus) {
                Some(s) => s.moment_numeric(k, lo, hi),
                None => Ok(0.0),
            },
            MeasureSpec::Table { plus, minus } => match pick(side, plus, minus) {
                Some(t) => t.moment_numeric(k, lo, hi),
                None => Ok(0.0),
            },
            MeasureSpec::Sum { parts } => parts.iter().map(|p| p.moment_numeric(side, k, lo, hi)).sum(),
        }
    }

    /// `Π{x on side : |x| > y}`.
    pub fn tail(&self, side: Side, y: f64) -> Result<f64> {
        self.moment(side, 0, y, f64::INFINITY)
    }

    /// Mass of atoms sitting exactly at magnitude `y` on `side`.
    pub fn atom_mass_at(&self, side: Side, y: f64) -> f64 {
        match self {
            MeasureSpec::Atoms { atoms } => atoms
                .iter()
                .filter(|a| a.side() == side && a.position.abs() == y)
                .map(|a| a.rate)
                .sum(),
            MeasureSpec::Sum { parts } => parts.iter().map(|p| p.atom_mass_at(side, y)).sum(),
            _ => 0.0,
        }
    }

    /// Largest jump magnitude on `side`, or `None` when the support is
    /// unbounded. `Some(0.0)` means the side carries no mass.
    pub fn support_bound(&self, side: Side) -> Option<f64> {
        match self {
            MeasureSpec::Atoms { atoms } => Some(
                atoms
                    .iter()
                    .filter(|a| a.side() == side)
                    .map(|a| a.position.abs())
                    .fold(0.0, f64::max),
            ),
            MeasureSpec::Power { plus, minus } => match pick(side, plus, minus) {
                Some(s) if s.c > 0.0 => None,
                _ => Some(0.0),
            },
            MeasureSpec::Table { plus, minus } => Some(pick(side, plus, minus).map_or(0.0, DensitySide::support_bound)),
            MeasureSpec::Sum { parts } => parts
                .iter()
                .map(|p| p.support_bound(side))
                .try_fold(0.0, |acc, b| b.map(|b| f64::max(acc, b))),
        }
    }

    /// Magnitudes where the tail on `side` has a kink or a jump.
    pub fn breakpoints(&self, side: Side) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(side, &mut out);
        out.retain(|&b| b > 0.0 && b.is_finite());
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_breakpoints(&self, side: Side, out: &mut Vec<f64>) {
        match self {
            MeasureSpec::Atoms { atoms } => out.extend(atoms.iter().filter(|a| a.side() == side).map(|a| a.position.abs())),
            MeasureSpec::Power { plus, minus } => out.extend(pick(side, plus, minus).map(|s| s.x_min)),
            MeasureSpec::Table { plus, minus } => {
                if let Some(t) = pick(side, plus, minus) {
                    out.extend_from_slice(&t.abscissae);
                }
            }
            MeasureSpec::Sum { parts } => parts.iter().for_each(|p| p.collect_breakpoints(side, out)),
        }
    }

    /// Image of the measure under `x ↦ -x`.
    pub fn negated(&self) -> MeasureSpec {
        match self {
            MeasureSpec::Atoms { atoms } => MeasureSpec::Atoms {
                atoms: atoms.iter().map(|a| Atom::new(-a.position, a.rate)).collect(),
            },
            MeasureSpec::Power { plus, minus } => MeasureSpec::Power {
                plus: *minus,
                minus: *plus,
            },
            MeasureSpec::Table { plus, minus } => MeasureSpec::Table {
                plus: minus.clone(),
                minus: plus.clone(),
            },
            MeasureSpec::Sum { parts } => MeasureSpec::Sum {
                parts: parts.iter().map(MeasureSpec::negated).collect(),
            },
        }
    }

    /// Image of the measure under `x ↦ k x`, `k > 0`.
    pub fn scaled(&self, k: f64) -> MeasureSpec {
        match self {
            MeasureSpec::Atoms { atoms } => MeasureSpec::Atoms {
                atoms: atoms.iter().map(|a| Atom::new(k * a.position, a.rate)).collect(),
            },
            MeasureSpec::Power { plus, minus } => {
                let map = |s: &PowerSide| PowerSide {
                    c: s.c * k.powf(s.alpha),
                    alpha: s.alpha,
                    lambda: s.lambda / k,
                    x_min: s.x_min * k,
                };
                MeasureSpec::Power {
                    plus: plus.as_ref().map(map),
                    minus: minus.as_ref().map(map),
                }
            }
            MeasureSpec::Table { plus, minus } => {
                let map = |t: &DensitySide| DensitySide {
                    abscissae: t.abscissae.iter().map(|a| a * k).collect(),
                    density: t.density.iter().map(|d| d / k).collect(),
                };
                MeasureSpec::Table {
                    plus: plus.as_ref().map(map),
                    minus: minus.as_ref().map(map),
                }
            }
            MeasureSpec::Sum { parts } => MeasureSpec::Sum {
                parts: parts.iter().map(|p| p.scaled(k)).collect(),
            },
        }
    }

    /// Total mass of the region.
    pub fn region_mass(&self, region: &Region) -> Result<f64> {
        Side::BOTH
            .iter()
            .map(|&s| {
                let w = region.window(s);
                self.moment(s, 0, w.lo, w.hi)
            })
            .sum()
    }

    /// Per-side first absolute moments `(plus, minus)` of the region.
    pub fn region_first_moments(&self, region: &Region) -> Result<(f64, f64)> {
        let p = self.moment(Side::Plus, 1, region.plus.lo, region.plus.hi)?;
        let m = self.moment(Side::Minus, 1, region.minus.lo, region.minus.hi)?;
        Ok((p, m))
    }

    /// `∫_{(a, b]} x^k Π(dx)` over the real interval `(a, b]`, restricted
    /// to `region`. Boundary atoms follow the magnitude windows' convention,
    /// which only matters for functionals that are discontinuous there.
    pub fn real_moment(&self, region: &Region, k: u32, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let mut total = 0.0;
        // positive reals: magnitudes in (max(a, 0), b]
        if b > 0.0 {
            let w = region.plus;
            let lo = w.lo.max(a.max(0.0));
            let hi = w.hi.min(b);
            total += self.moment(Side::Plus, k, lo, hi)?;
        }
        // negative reals: x ∈ (a, b], x < 0  ⇔  |x| ∈ [max(-b, 0), -a)
        if a < 0.0 {
            let w = region.minus;
            let lo = w.lo.max((-b).max(0.0));
            let hi = w.hi.min(-a);
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            total += sign * self.moment(Side::Minus, k, lo, hi)?;
        }
        Ok(total)
    }

    /// `Π{x ∈ region : x ≤ at}`.
    pub fn region_mass_below(&self, region: &Region, at: f64) -> Result<f64> {
        if at >= 0.0 {
            let minus = self.moment(Side::Minus, 0, region.minus.lo, region.minus.hi)?;
            let plus = self.moment(Side::Plus, 0, region.plus.lo, region.plus.hi.min(at))?;
            Ok(minus + plus)
        } else {
            let y = -at;
            let w = region.minus;
            let mut mass = self.moment(Side::Minus, 0, w.lo.max(y), w.hi)?;
            if w.contains(y) {
                mass += self.atom_mass_at(Side::Minus, y);
            }
            Ok(mass)
        }
    }
}

fn pick<'a, T>(side: Side, plus: &'a Option<T>, minus: &'a Option<T>) -> Option<&'a T> {
    match side {
        Side::Plus => plus.as_ref(),
        Side::Minus => minus.as_ref(),
    }
}

/// Characteristics `(γ, σ², Π)` of a Lévy process in the form
/// `X_t = γt + σB_t + (compensated jumps |x| ≤ 1) + (jumps |x| > 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyTriplet {
    pub gamma: f64,
    #[serde(default)]
    pub sigma2: f64,
    pub measure: MeasureSpec,
}

impl LevyTriplet {
    pub fn new(gamma: f64, sigma2: f64, measure: MeasureSpec) -> Result<Self> {
        let t = Self { gamma, sigma2, measure };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() {
            return Err(LevyError::param("gamma", "must be finite"));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(LevyError::param("sigma2", "must be finite and nonnegative"));
        }
        self.measure.validate()
    }

    /// Triplet of `-X`.
    pub fn negated(&self) -> LevyTriplet {
        LevyTriplet {
            gamma: -self.gamma,
            sigma2: self.sigma2,
            measure: self.measure.negated(),
        }
    }
}
