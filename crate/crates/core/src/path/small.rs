use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::Serialize;

use super::{SimConfig, SmallMode};
use crate::decomposition::Decomposition;
use crate::error::{LevyError, Result};
use crate::measure::{RegionSampler, Side};

/// Increment and extremes of `X̃` over one interval `[0, e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalExtremes {
    pub increment: f64,
    pub sup: f64,
    pub inf: f64,
}

/// How interval extremes are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallKind {
    /// `X̃` is a straight line.
    Deterministic,
    /// Brownian motion with drift; extremes drawn from the Brownian bridge
    /// given the endpoint.
    Bridge,
    /// Time grid plus inner compound Poisson jumps.
    Grid,
}

/// Simulator for the small-jump process `X̃` of a decomposition.
///
/// `X̃` is realized as `b t + s W_t + (jumps with ε < |x| ≤ η)` where the
/// inner jumps form a compound Poisson process, `s² = σ² + v_ε` includes
/// the Gaussian stand-in for the jumps below `ε` when that is used, and
/// the drift `b` is chosen so that `E X̃₁` matches the decomposition.
#[derive(Debug, Clone)]
pub struct SmallProcess {
    drift: f64,
    sigma2: f64,
    surrogate_variance: f64,
    dropped_variance: f64,
    inner: Option<RegionSampler>,
    grid_step: f64,
    kind: SmallKind,
}

impl SmallProcess {
    pub fn new(decomposition: &Decomposition, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let cutoff = decomposition.cutoff();
        let eps = config.inner_cutoff;
        if eps >= cutoff.eta_minus.min(cutoff.eta_plus) {
            return Err(LevyError::param(
                "sim.inner_cutoff",
                format!("must be below the cutoff interval ({} >= min(eta))", eps),
            ));
        }
        let measure = &decomposition.triplet().measure;
        let region = cutoff.inside(eps);
        let sampler = RegionSampler::new(measure, &region)?;
        let inner_mean = measure.real_moment(&region, 1, f64::NEG_INFINITY, f64::INFINITY)?;
        let below: f64 = Side::BOTH
            .iter()
            .map(|&s| measure.moment(s, 2, 0.0, eps))
            .sum::<Result<f64>>()?;
        let (surrogate_variance, dropped_variance) = if eps > 0.0 && below > 10.0 * eps * eps {
            (below, 0.0)
        } else {
            if below > 0.0 {
                log::info!(
                    "dropping jumps below {eps}: variance {below:.3e} per unit time is under 10 eps^2, \
                     so the path error over time t is about {:.3e} * sqrt(t)",
                    below.sqrt()
                );
            }
            (0.0, below)
        };
        let sigma2 = decomposition.small_sigma2() + surrogate_variance;
        let inner = (!sampler.is_empty()).then_some(sampler);
        let kind = match (config.small_mode, inner.is_some(), sigma2 > 0.0) {
            (SmallMode::Grid, _, _) => SmallKind::Grid,
            (_, true, _) if config.small_mode == SmallMode::Exact => {
                return Err(LevyError::Unsupported(
                    "exact interval extremes need a small part without jumps".into(),
                ))
            }
            (_, true, _) => SmallKind::Grid,
            (_, false, true) => SmallKind::Bridge,
            (_, false, false) => SmallKind::Deterministic,
        };
        Ok(Self {
            drift: decomposition.small_drift() - inner_mean,
            sigma2,
            surrogate_variance,
            dropped_variance,
            inner,
            grid_step: config.grid_step,
            kind,
        })
    }

    pub fn kind(&self) -> SmallKind {
        self.kind
    }

    /// Drift of the continuous part per unit time.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Variance of the continuous part per unit time.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn surrogate_variance(&self) -> f64 {
        self.surrogate_variance
    }

    pub fn dropped_variance(&self) -> f64 {
        self.dropped_variance
    }

    pub fn inner_rate(&self) -> f64 {
        self.inner.as_ref().map_or(0.0, RegionSampler::rate)
    }

    pub fn has_inner_jumps(&self) -> bool {
        self.inner.is_some()
    }

    /// Exact draw of `X̃_e`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, rng: &mut R, e: f64) -> f64 {
        let mut x = self.drift * e;
        if self.sigma2 > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            x += (self.sigma2 * e).sqrt() * z;
        }
        if let Some(inner) = &self.inner {
            for _ in 0..poisson(rng, inner.rate() * e) {
                x += inner.sample(rng);
            }
        }
        x
    }

    /// Increment and extremes over `[0, e)`. When `trace` is given, every
    /// visited `(s, X̃_s)` is appended, including both sides of each inner
    /// jump and the left limit at `e`.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        e: f64,
        trace: Option<&mut Vec<(f64, f64)>>,
    ) -> IntervalExtremes {
        match (self.kind, trace) {
            (SmallKind::Deterministic, None) => {
                let inc = self.drift * e;
                IntervalExtremes {
                    increment: inc,
                    sup: inc.max(0.0),
                    inf: inc.min(0.0),
                }
            }
            (SmallKind::Bridge, None) => self.bridge(rng, e),
            (_, trace) => {
                let mut sup: f64 = 0.0;
                let mut inf: f64 = 0.0;
                let mut trace = trace;
                let end = self.walk(rng, e, |s, x| {
                    sup = sup.max(x);
                    inf = inf.min(x);
                    if let Some(t) = trace.as_deref_mut() {
                        t.push((s, x));
                    }
                    false
                });
                IntervalExtremes {
                    increment: end.expect("walk without stopping reaches the end"),
                    sup,
                    inf,
                }
            }
        }
    }

    fn bridge<R: Rng + ?Sized>(&self, rng: &mut R, e: f64) -> IntervalExtremes {
        let w = self.sample_increment(rng, e);
        let scale = 2.0 * self.sigma2 * e;
        let e1: f64 = rng.sample(Exp1);
        let e2: f64 = rng.sample(Exp1);
        // P(max > m | W_e = w) = exp(-2 m (m - w) / (σ² e)), solved for m
        let sup = 0.5 * (w + (w * w + scale * e1).sqrt());
        let inf = 0.5 * (w - (w * w + scale * e2).sqrt());
        IntervalExtremes {
            increment: w,
            sup: sup.max(w).max(0.0),
            inf: inf.min(w).min(0.0),
        }
    }

    /// Grid walk over `[0, e)`. Calls `visit(s, x)` at `s = 0`, every grid
    /// point, both sides of every inner jump and at `e` (left limit).
    /// Returns the increment, or `None` if `visit` asked to stop.
    pub fn walk<R, F>(&self, rng: &mut R, e: f64, mut visit: F) -> Option<f64>
    where
        R: Rng + ?Sized,
        F: FnMut(f64, f64) -> bool,
    {
        let sd = self.sigma2.sqrt();
        let mut next_jump = match &self.inner {
            Some(inner) => exp_gap(rng, inner.rate()),
            None => f64::INFINITY,
        };
        let mut s = 0.0;
        let mut x = 0.0;
        let mut k: u64 = 0;
        if visit(s, x) {
            return None;
        }
        loop {
            let next_grid = ((k + 1) as f64 * self.grid_step).min(e);
            let target = next_grid.min(next_jump);
            let dt = target - s;
            x += self.drift * dt;
            if sd > 0.0 && dt > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                x += sd * dt.sqrt() * z;
            }
            s = target;
            if next_jump < next_grid {
                if visit(s, x) {
                    return None;
                }
                let inner = self.inner.as_ref().expect("jump time implies inner jumps");
                x += inner.sample(rng);
                next_jump += exp_gap(rng, inner.rate());
            } else {
                k += 1;
            }
            if visit(s, x) {
                return None;
            }
            if s >= e {
                return Some(x);
            }
        }
    }

    /// Wiener–Hopf draw `(X̃_e, sup_{s<e} X̃_s)` at an independent `e ~ Exp(Δ)`.
    pub fn wiener_hopf_sample<R: Rng + ?Sized>(&self, rng: &mut R, delta: f64) -> Result<(f64, f64)> {
        if self.inner.is_some() || self.surrogate_variance > 0.0 {
            return Err(LevyError::Unsupported(
                "the exponential-time sampler needs a Brownian small part".into(),
            ));
        }
        exact_brownian_sup_sampler(rng, self.drift, self.sigma2, delta)
    }
}

/// `(θ₊, θ₋)`: the rates of the exponential laws of `sup` and `-inf` of a
/// Brownian motion with drift `mu` and variance `sigma2` at an independent
/// `Exp(delta)` time.
pub fn wiener_hopf_rates(mu: f64, sigma2: f64, delta: f64) -> (f64, f64) {
    let root = (mu * mu + 2.0 * sigma2 * delta).sqrt();
    ((root - mu) / sigma2, (root + mu) / sigma2)
}

/// `(increment, sup)` of a Brownian motion with drift at an independent
/// exponential time: `sup ~ Exp(θ₊)` and `increment - sup ~ -Exp(θ₋)`,
/// drawn independently.
pub fn exact_brownian_sup_sampler<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma2: f64, delta: f64) -> Result<(f64, f64)> {
    if !(sigma2 > 0.0) {
        return Err(LevyError::param("sigma2", "must be positive"));
    }
    if !(delta > 0.0) {
        return Err(LevyError::param("delta", "must be positive"));
    }
    let (up, down) = wiener_hopf_rates(mu, sigma2, delta);
    let sup = rng.sample::<f64, _>(Exp1) / up;
    let below = rng.sample::<f64, _>(Exp1) / down;
    Ok((sup - below, sup))
}

pub(crate) fn exp_gap<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    rng.sample::<f64, _>(Exp1) / rate
}

pub(crate) fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(p) => {
            let k: f64 = p.sample(rng);
            k as u64
        }
        Err(_) => panic!("Poisson mean {mean} out of range"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{decompose, Cutoff};
    use crate::measure::{LevyTriplet, MeasureSpec};
    use crate::streams::stream;
    use approx::assert_relative_eq;

    fn process(gamma: f64, sigma2: f64, m: MeasureSpec, config: &SimConfig) -> SmallProcess {
        let t = LevyTriplet::new(gamma, sigma2, m).unwrap();
        let d = decompose(&t, Cutoff::unit()).unwrap();
        SmallProcess::new(&d, config).unwrap()
    }

    #[test]
    fn pure_drift_interval() {
        let config = SimConfig {
            grid_step: 1e-3,
            ..SimConfig::default()
        };
        let p = process(1.0, 0.0, MeasureSpec::atoms([(5.0, 1.0)]), &config);
        assert_eq!(p.kind(), SmallKind::Deterministic);
        let mut rng = stream(0, 0);
        let mut trace = Vec::new();
        let r = p.simulate(&mut rng, 1.0, Some(&mut trace));
        assert_relative_eq!(r.increment, 1.0, epsilon = 1e-9);
        assert_relative_eq!(r.sup, 1.0, epsilon = 1e-9);
        assert_eq!(r.inf, 0.0);
        assert_eq!(trace.first(), Some(&(0.0, 0.0)));
        assert_eq!(trace.last().unwrap().0, 1.0);
    }

    #[test]
    fn zero_process() {
        let p = process(0.0, 0.0, MeasureSpec::atoms([(5.0, 1.0)]), &SimConfig::default());
        let r = p.simulate(&mut stream(0, 0), 2.5, None);
        assert_eq!((r.increment, r.sup, r.inf), (0.0, 0.0, 0.0));
    }

    #[test]
    fn inner_cutoff_must_sit_inside_interval() {
        let t = LevyTriplet::new(0.0, 0.0, MeasureSpec::atoms([(5.0, 1.0)])).unwrap();
        let d = decompose(&t, Cutoff::unit()).unwrap();
        let config = SimConfig {
            inner_cutoff: 1.0,
            ..SimConfig::default()
        };
        let err = SmallProcess::new(&d, &config).unwrap_err();
        assert!(matches!(err, LevyError::InvalidParameter { ref key, .. } if key == "sim.inner_cutoff"));
    }

    #[test]
    fn inner_jumps_are_compensated() {
        // atom at 0.5 rate 2 inside I: compound Poisson mean 1 per unit time,
        // so the continuous drift must be γ - 1
        let p = process(0.3, 0.0, MeasureSpec::atoms([(0.5, 2.0), (3.0, 1.0)]), &SimConfig::default());
        assert_eq!(p.kind(), SmallKind::Grid);
        assert_relative_eq!(p.drift(), 0.3 - 1.0);
        let mut rng = stream(4, 1);
        let n = 20_000;
        let mean = (0..n).map(|_| p.sample_increment(&mut rng, 1.0)).sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() < 4.0 * (0.5f64).sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn surrogate_threshold() {
        use crate::measure::PowerSide;
        let s = PowerSide::new(1.0, 1.2);
        let m = MeasureSpec::power(Some(s), Some(s));
        let config = SimConfig {
            inner_cutoff: 0.05,
            ..SimConfig::default()
        };
        let p = process(0.1, 0.0, m.clone(), &config);
        // 2 ε^0.8 / 0.8 ≈ 0.227 > 10 ε² = 0.025
        assert_relative_eq!(p.surrogate_variance(), 2.0 * 0.05f64.powf(0.8) / 0.8, max_relative = 1e-12);
        assert_relative_eq!(p.sigma2(), p.surrogate_variance());
        // at ε = 0.9 the stand-in is not justified and the mass is dropped
        let config = SimConfig {
            inner_cutoff: 0.9,
            ..SimConfig::default()
        };
        let p = process(0.1, 0.0, m, &config);
        assert_eq!(p.surrogate_variance(), 0.0);
        assert!(p.dropped_variance() > 0.0);
    }

    #[test]
    fn exact_mode_rejects_small_jumps() {
        let t = LevyTriplet::new(0.0, 1.0, MeasureSpec::atoms([(0.5, 1.0), (2.0, 1.0)])).unwrap();
        let d = decompose(&t, Cutoff::unit()).unwrap();
        let config = SimConfig {
            small_mode: SmallMode::Exact,
            ..SimConfig::default()
        };
        assert!(matches!(SmallProcess::new(&d, &config), Err(LevyError::Unsupported(_))));
    }

    #[test]
    fn wiener_hopf_rates_and_mean() {
        let (up, down) = wiener_hopf_rates(0.0, 1.0, 2.0);
        assert_relative_eq!(up, 2.0);
        assert_relative_eq!(down, 2.0);
        let (u1, d1) = wiener_hopf_rates(1.0, 1.0, 2.0);
        let (u2, d2) = wiener_hopf_rates(3.0, 1.0, 2.0);
        assert!(u2 < u1 && d2 > d1);
        let mut rng = stream(9, 9);
        let n = 20_000;
        let sups: Vec<f64> = (0..n)
            .map(|_| exact_brownian_sup_sampler(&mut rng, 0.0, 1.0, 2.0).unwrap().1)
            .collect();
        let mean = sups.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * 0.5 / (n as f64).sqrt());
        let a = exact_brownian_sup_sampler(&mut stream(1, 1), 0.2, 1.0, 2.0).unwrap();
        let b = exact_brownian_sup_sampler(&mut stream(1, 1), 0.2, 1.0, 2.0).unwrap();
        assert_eq!(a, b);
        assert!(exact_brownian_sup_sampler(&mut rng, 0.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn walk_visits_both_sides_of_inner_jumps() {
        let config = SimConfig {
            grid_step: 0.25,
            ..SimConfig::default()
        };
        let p = process(0.0, 0.0, MeasureSpec::atoms([(0.5, 4.0), (3.0, 1.0)]), &config);
        let mut rng = stream(2, 3);
        let mut trace = Vec::new();
        let r = p.simulate(&mut rng, 3.0, Some(&mut trace));
        let max = trace.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let min = trace.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        assert_eq!(r.sup, max.max(0.0));
        assert_eq!(r.inf, min.min(0.0));
        assert_eq!(trace.last().unwrap(), &(3.0, r.increment));
        // pairs at the same time differ by exactly one jump of 0.5
        let jumps = trace.windows(2).filter(|w| w[0].0 == w[1].0).count();
        assert!(jumps > 0);
        assert!(trace.windows(2).all(|w| w[0].0 <= w[1].0));
    }
}
