//! Cutoff decomposition `X = (big jumps at Poisson times) + X̃`.
//!
//! Jumps outside `I = [-η₁, η₂]` arrive at rate `Δ = Π(Iᶜ)` with law
//! `Δ⁻¹ 1_{Iᶜ} Π(dx)`; the remainder `X̃` keeps `σ²` and the restriction of
//! `Π` to `I`. Its mean follows from the compensation convention of the
//! triplet (jumps with `|x| ≤ 1` are compensated, larger ones are not):
//!
//! ```text
//! E X̃₁ = γ − ∫_{x ∈ Iᶜ, |x| ≤ 1} x Π(dx) + ∫_{x ∈ I, |x| > 1} x Π(dx)
//! ```
//!
//! which reduces to `γ` for `η₁ = η₂ = 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};
use crate::measure::{LevyTriplet, MeanValue, Region, RegionSampler, Side, Window};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cutoff {
    /// η₁: the interval reaches down to `-eta_minus`.
    pub eta_minus: f64,
    /// η₂: the interval reaches up to `eta_plus`.
    pub eta_plus: f64,
}

impl Cutoff {
    pub fn new(eta_minus: f64, eta_plus: f64) -> Result<Self> {
        let c = Self { eta_minus, eta_plus };
        c.validate()?;
        Ok(c)
    }

    pub fn symmetric(eta: f64) -> Self {
        Self {
            eta_minus: eta,
            eta_plus: eta,
        }
    }

    pub fn unit() -> Self {
        Self::symmetric(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("cutoff.eta_minus", self.eta_minus), ("cutoff.eta_plus", self.eta_plus)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LevyError::param(key, "must be positive and finite"));
            }
        }
        Ok(())
    }

    pub fn is_unit(&self) -> bool {
        self.eta_minus == 1.0 && self.eta_plus == 1.0
    }

    pub fn eta(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.eta_plus,
            Side::Minus => self.eta_minus,
        }
    }

    /// `Iᶜ` as magnitude windows.
    pub fn outside(&self) -> Region {
        Region {
            plus: Window::above(self.eta_plus),
            minus: Window::above(self.eta_minus),
        }
    }

    /// `{x ∈ I : |x| > inner}`.
    pub fn inside(&self, inner: f64) -> Region {
        Region {
            plus: Window::new(inner, self.eta_plus),
            minus: Window::new(inner, self.eta_minus),
        }
    }

    /// True when `x` lies outside `I`.
    pub fn is_big(&self, x: f64) -> bool {
        x > self.eta_plus || x < -self.eta_minus
    }

    /// Cutoff for `-X`.
    pub fn mirrored(&self) -> Cutoff {
        Cutoff {
            eta_minus: self.eta_plus,
            eta_plus: self.eta_minus,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    triplet: LevyTriplet,
    cutoff: Cutoff,
    delta: f64,
    big_jumps: RegionSampler,
    small_drift: f64,
    small_mass: f64,
}

impl Decomposition {
    pub fn new(triplet: &LevyTriplet, cutoff: Cutoff) -> Result<Self> {
        triplet.validate()?;
        cutoff.validate()?;
        let outside = cutoff.outside();
        let big_jumps = RegionSampler::new(&triplet.measure, &outside)?;
        let delta = big_jumps.rate();
        if delta <= 0.0 {
            return Err(LevyError::ZeroBigJumpRate);
        }
        let small_drift = drift_of_small(triplet, cutoff)?;
        let small_mass = triplet.measure.region_mass(&cutoff.inside(0.0))?;
        Ok(Self {
            triplet: triplet.clone(),
            cutoff,
            delta,
            big_jumps,
            small_drift,
            small_mass,
        })
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    /// Rate `Δ = Π(Iᶜ)` of the big-jump Poisson process.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn small_sigma2(&self) -> f64 {
        self.triplet.sigma2
    }

    /// `E X̃₁`.
    pub fn small_drift(&self) -> f64 {
        self.small_drift
    }

    /// `μ̃ = E X̃(τ₁) = E X̃₁ / Δ`.
    pub fn mu_tilde(&self) -> f64 {
        self.small_drift / self.delta
    }

    /// Mass of `Π` restricted to `I` (may be infinite).
    pub fn small_mass(&self) -> f64 {
        self.small_mass
    }

    pub fn has_small_jumps(&self) -> bool {
        self.small_mass > 0.0
    }

    pub fn sample_big_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.big_jumps.sample(rng)
    }

    /// `P(J ≤ x)` for the big-jump law.
    pub fn big_jump_cdf(&self, x: f64) -> Result<f64> {
        Ok(self.triplet.measure.region_mass_below(&self.cutoff.outside(), x)? / self.delta)
    }

    /// `(Δ P(J > x), Δ P(J < -x))` for `x ≥ 0`.
    pub fn big_jump_tails(&self, x: f64) -> Result<(f64, f64)> {
        let m = &self.triplet.measure;
        let plus = m.tail(Side::Plus, x.max(self.cutoff.eta_plus))?;
        let minus = m.tail(Side::Minus, x.max(self.cutoff.eta_minus))?;
        Ok((plus, minus))
    }

    /// `E Ŷ₁ = E J₁ + E X̃₁ / Δ`.
    pub fn step_mean(&self) -> Result<MeanValue> {
        let (plus, minus) = self.triplet.measure.region_first_moments(&self.cutoff.outside())?;
        Ok(MeanValue::from_sides(self.mu_tilde(), plus / self.delta, minus / self.delta))
    }

    /// Decomposition of `-X` with the mirrored cutoff.
    pub fn negated(&self) -> Result<Decomposition> {
        Decomposition::new(&self.triplet.negated(), self.cutoff.mirrored())
    }
}

pub fn decompose(triplet: &LevyTriplet, cutoff: Cutoff) -> Result<Decomposition> {
    Decomposition::new(triplet, cutoff)
}

/// `E X̃₁` for a general cutoff.
pub fn drift_of_small(triplet: &LevyTriplet, cutoff: Cutoff) -> Result<f64> {
    let m = &triplet.measure;
    let mut drift = triplet.gamma;
    for side in Side::BOTH {
        let eta = cutoff.eta(side);
        if eta < 1.0 {
            // big jumps that were compensated in the triplet
            drift -= side.sign() * m.moment(side, 1, eta, 1.0)?;
        } else if eta > 1.0 {
            // small jumps that were not
            drift += side.sign() * m.moment(side, 1, 1.0, eta)?;
        }
    }
    Ok(drift)
}

pub fn step_mean(decomposition: &Decomposition) -> Result<MeanValue> {
    decomposition.step_mean()
}

/// A cutoff with `Π(Iᶜ) > 0`: the unit interval when it works, otherwise
/// the first of `1/2, 1/4, …` that leaves some jumps outside.
pub fn auto_cutoff(triplet: &LevyTriplet) -> Result<Cutoff> {
    triplet.validate()?;
    let mut eta = 1.0;
    for _ in 0..60 {
        let c = Cutoff::symmetric(eta);
        if triplet.measure.region_mass(&c.outside())? > 0.0 {
            return Ok(c);
        }
        eta *= 0.5;
    }
    Err(LevyError::ZeroBigJumpRate)
}
