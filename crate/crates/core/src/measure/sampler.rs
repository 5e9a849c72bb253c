use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;

use super::{DensitySide, MeasureSpec, PowerSide, Region, Side};
use crate::error::{LevyError, Result};

/// Exact sampler for the normalized restriction of a measure to a region.
///
/// Built once per region; sampling needs only an RNG. Atoms are drawn
/// categorically, density tables through an alias table over the clipped
/// bins followed by a uniform draw inside the bin, and power-law sides by
/// inverse CDF of the (truncated) Pareto kernel with acceptance–rejection
/// for the exponential tempering.
#[derive(Debug, Clone)]
pub struct RegionSampler {
    rate: f64,
    branches: Vec<Branch>,
    choice: Option<WeightedIndex<f64>>,
}

#[derive(Debug, Clone)]
enum Branch {
    Atoms {
        values: Vec<f64>,
        pick: WeightedIndex<f64>,
    },
    Power {
        sign: f64,
        side: PowerSide,
        lo: f64,
        hi: f64,
    },
    Table {
        sign: f64,
        bins: Vec<(f64, f64)>,
        pick: WeightedAliasIndex<f64>,
    },
}

impl RegionSampler {
    pub fn new(measure: &MeasureSpec, region: &Region) -> Result<Self> {
        let mut branches = Vec::new();
        let mut weights = Vec::new();
        collect(measure, region, &mut branches, &mut weights)?;
        let rate: f64 = weights.iter().sum();
        let choice = if rate > 0.0 {
            Some(WeightedIndex::new(&weights).map_err(|e| LevyError::InvalidMeasure(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { rate, branches, choice })
    }

    /// Total mass of the region (the jump rate of the restricted measure).
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn is_empty(&self) -> bool {
        self.choice.is_none()
    }

    /// One signed draw. Panics on an empty region.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let choice = self.choice.as_ref().expect("sampling from an empty region");
        match &self.branches[choice.sample(rng)] {
            Branch::Atoms { values, pick } => values[pick.sample(rng)],
            Branch::Power { sign, side, lo, hi } => sign * sample_power(side, *lo, *hi, rng),
            Branch::Table { sign, bins, pick } => {
                let (a, b) = bins[pick.sample(rng)];
                let u = rng.sample::<f64, _>(Open01);
                sign * (a + u * (b - a))
            }
        }
    }
}

fn collect(measure: &MeasureSpec, region: &Region, branches: &mut Vec<Branch>, weights: &mut Vec<f64>) -> Result<()> {
    match measure {
        MeasureSpec::Atoms { atoms } => {
            let (values, rates): (Vec<f64>, Vec<f64>) = atoms
                .iter()
                .filter(|a| region.contains(a.position))
                .map(|a| (a.position, a.rate))
                .unzip();
            let total: f64 = rates.iter().sum();
            if total > 0.0 {
                let pick = WeightedIndex::new(&rates).map_err(|e| LevyError::InvalidMeasure(e.to_string()))?;
                branches.push(Branch::Atoms { values, pick });
                weights.push(total);
            }
        }
        MeasureSpec::Power { plus, minus } => {
            for (side, s) in [(Side::Plus, plus), (Side::Minus, minus)] {
                let Some(s) = s else { continue };
                let w = region.window(side);
                let mass = s.moment(0, w.lo, w.hi)?;
                if mass.is_infinite() {
                    return Err(LevyError::Unsupported(format!(
                        "infinite jump rate on the {side:?} side above magnitude {}; raise the inner cutoff",
                        w.lo
                    )));
                }
                if mass > 0.0 {
                    branches.push(Branch::Power {
                        sign: side.sign(),
                        side: *s,
                        lo: w.lo.max(s.x_min),
                        hi: w.hi,
                    });
                    weights.push(mass);
                }
            }
        }
        MeasureSpec::Table { plus, minus } => {
            for (side, t) in [(Side::Plus, plus), (Side::Minus, minus)] {
                let Some(t) = t else { continue };
                let (bins, masses) = clipped_bins(t, region.window(side).lo, region.window(side).hi);
                let total: f64 = masses.iter().sum();
                if total > 0.0 {
                    let pick = WeightedAliasIndex::new(masses).map_err(|e| LevyError::InvalidMeasure(e.to_string()))?;
                    branches.push(Branch::Table {
                        sign: side.sign(),
                        bins,
                        pick,
                    });
                    weights.push(total);
                }
            }
        }
        MeasureSpec::Sum { parts } => {
            for p in parts {
                collect(p, region, branches, weights)?;
            }
        }
    }
    Ok(())
}

fn clipped_bins(t: &DensitySide, lo: f64, hi: f64) -> (Vec<(f64, f64)>, Vec<f64>) {
    t.bins()
        .filter_map(|(a, b, d)| {
            let a = a.max(lo);
            let b = b.min(hi);
            (b > a && d > 0.0).then_some(((a, b), d * (b - a)))
        })
        .unzip()
}

/// Magnitude draw from `c y^(-1-α) e^(-λy)` on `(lo, hi]`, `lo > 0`.
fn sample_power<R: Rng + ?Sized>(s: &PowerSide, lo: f64, hi: f64, rng: &mut R) -> f64 {
    debug_assert!(lo > 0.0 && hi > lo);
    if s.lambda == 0.0 {
        return truncated_pareto(s.alpha, lo, hi, rng);
    }
    // Pareto proposal accepts with e^(-λ(y - lo)); shifted-exponential
    // proposal accepts with (lo / y)^(1 + α). Pick the one that accepts
    // more often.
    if s.lambda * lo <= 1.0 {
        loop {
            let y = truncated_pareto(s.alpha, lo, hi, rng);
            let u: f64 = rng.random();
            if u < (-s.lambda * (y - lo)).exp() {
                return y;
            }
        }
    } else {
        let width = hi - lo;
        let q = -(-s.lambda * width).exp_m1();
        loop {
            let v = rng.sample::<f64, _>(Open01);
            let y = (lo - (-v * q).ln_1p() / s.lambda).min(hi);
            let u: f64 = rng.random();
            if u < (lo / y).powf(1.0 + s.alpha) {
                return y;
            }
        }
    }
}

fn truncated_pareto<R: Rng + ?Sized>(alpha: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let la = lo.powf(-alpha);
    let ha = if hi.is_infinite() { 0.0 } else { hi.powf(-alpha) };
    let v = rng.sample::<f64, _>(Open01);
    (la - v * (la - ha)).powf(-1.0 / alpha).min(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Window;
    use crate::streams::stream;

    fn outside_one() -> Region {
        Region {
            plus: Window::above(1.0),
            minus: Window::above(1.0),
        }
    }

    #[test]
    fn atoms_categorical_frequencies() {
        let m = MeasureSpec::atoms([(2.0, 1.5), (-3.0, 0.5), (0.5, 9.0)]);
        let s = RegionSampler::new(&m, &outside_one()).unwrap();
        assert_eq!(s.rate(), 2.0);
        let mut rng = stream(7, 0);
        let n = 40_000;
        let hits = (0..n).filter(|_| s.sample(&mut rng) == 2.0).count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / n as f64).sqrt(), "p = {p}");
    }

    #[test]
    fn infinite_rate_region_is_rejected() {
        let m = MeasureSpec::power(Some(PowerSide::new(1.0, 1.2)), None);
        let inner = Region {
            plus: Window::new(0.0, 1.0),
            minus: Window::new(0.0, 1.0),
        };
        assert!(matches!(RegionSampler::new(&m, &inner), Err(LevyError::Unsupported(_))));
    }

    #[test]
    fn empty_region() {
        let m = MeasureSpec::atoms([(0.5, 1.0)]);
        let s = RegionSampler::new(&m, &outside_one()).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.rate(), 0.0);
    }

    #[test]
    fn draws_stay_inside_window() {
        let m = MeasureSpec::power(
            Some(PowerSide::new(1.0, 0.7).tempered(3.0)),
            Some(PowerSide::new(2.0, 1.5)),
        );
        let region = Region {
            plus: Window::new(0.2, 1.0),
            minus: Window::new(0.1, 0.5),
        };
        let s = RegionSampler::new(&m, &region).unwrap();
        let mut rng = stream(1, 2);
        for _ in 0..10_000 {
            let x = s.sample(&mut rng);
            assert!(region.contains(x), "{x} escaped");
        }
    }
}
