use rand::Rng;
use serde::Serialize;

use super::{PathEngine, SmallKind};
use crate::error::{LevyError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitOutcome {
    /// First fine-path epoch with `|X| > r`.
    pub time: f64,
    /// `X` at that epoch is positive.
    pub top: bool,
    /// `|X| - r` at that epoch.
    pub overshoot: f64,
}

/// First exit of `X` from `[-r, r]`.
///
/// Jump epochs are exact; between jumps a Brownian part is only checked at
/// grid points, which delays detection by `O(√h)` in space. A straight-line
/// small part is crossed exactly.
pub fn exit_time<R: Rng + ?Sized>(rng: &mut R, engine: &PathEngine, r: f64) -> Result<ExitOutcome> {
    if !(r > 0.0) {
        return Err(LevyError::param("r", "must be positive"));
    }
    let small = engine.small();
    let cap = engine.config().time_cap;
    let mut x = 0.0;
    let mut t = 0.0;
    loop {
        let e = engine.holding(rng);
        let crossing = if small.kind() == SmallKind::Deterministic {
            linear_crossing(x, small.drift(), r).filter(|&s| s < e).map(|s| (s, x + small.drift() * s))
        } else {
            let mut hit = None;
            let end = small.walk(rng, e, |s, v| {
                if (x + v).abs() > r {
                    hit = Some((s, x + v));
                    true
                } else {
                    false
                }
            });
            match end {
                Some(inc) => {
                    x += inc;
                    None
                }
                None => hit,
            }
        };
        if let Some((s, value)) = crossing {
            if t + s > cap {
                return Err(LevyError::HorizonExceeded { cap });
            }
            return Ok(ExitOutcome {
                time: t + s,
                top: value > 0.0,
                overshoot: (value.abs() - r).max(0.0),
            });
        }
        if small.kind() == SmallKind::Deterministic {
            x += small.drift() * e;
        }
        t += e;
        if t > cap {
            return Err(LevyError::HorizonExceeded { cap });
        }
        x += engine.decomposition().sample_big_jump(rng);
        if x.abs() > r {
            return Ok(ExitOutcome {
                time: t,
                top: x > 0.0,
                overshoot: x.abs() - r,
            });
        }
    }
}

/// Time at which `x + b s` reaches `±r`, starting inside.
fn linear_crossing(x: f64, b: f64, r: f64) -> Option<f64> {
    if b > 0.0 {
        Some((r - x) / b)
    } else if b < 0.0 {
        Some((-r - x) / b)
    } else {
        None
    }
}

impl PathEngine {
    pub fn exit_time<R: Rng + ?Sized>(&self, rng: &mut R, r: f64) -> Result<ExitOutcome> {
        exit_time(rng, self, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{auto_cutoff, decompose, Cutoff};
    use crate::measure::{LevyTriplet, MeasureSpec};
    use crate::path::SimConfig;
    use crate::streams::stream;
    use approx::assert_relative_eq;

    fn engine(t: &LevyTriplet, cutoff: Cutoff, config: SimConfig) -> PathEngine {
        PathEngine::new(decompose(t, cutoff).unwrap(), config).unwrap()
    }

    #[test]
    fn pure_drift_exits_at_r() {
        // the far atom has a tiny rate and almost never fires before t = 5
        let t = LevyTriplet::new(1.0, 0.0, MeasureSpec::atoms([(100.0, 1e-12)])).unwrap();
        let e = engine(&t, Cutoff::unit(), SimConfig::default());
        let out = exit_time(&mut stream(0, 0), &e, 5.0).unwrap();
        assert_relative_eq!(out.time, 5.0, epsilon = 1e-12);
        assert!(out.top);
        assert_eq!(out.overshoot, 0.0);
    }

    #[test]
    fn symmetric_exit_is_fair() {
        let t = LevyTriplet::new(0.0, 0.0, MeasureSpec::atoms([(1.0, 1.0), (-1.0, 1.0)])).unwrap();
        let e = engine(&t, auto_cutoff(&t).unwrap(), SimConfig::default());
        let mut rng = stream(1, 0);
        let n = 4_000;
        let top = (0..n).filter(|_| exit_time(&mut rng, &e, 10.0).unwrap().top).count();
        let p = top as f64 / n as f64;
        assert!((p - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt(), "p = {p}");
    }

    #[test]
    fn cap_is_reported() {
        let t = LevyTriplet::new(0.0, 0.0, MeasureSpec::atoms([(1.0, 1.0), (-1.0, 1.0)])).unwrap();
        let config = SimConfig {
            time_cap: 1.0,
            ..SimConfig::default()
        };
        let e = engine(&t, auto_cutoff(&t).unwrap(), config);
        let err = exit_time(&mut stream(1, 0), &e, 1e6).unwrap_err();
        assert_eq!(err, LevyError::HorizonExceeded { cap: 1.0 });
    }

    #[test]
    fn brownian_exit_overshoot_is_small() {
        let t = LevyTriplet::new(0.0, 1.0, MeasureSpec::atoms([(50.0, 1e-9)])).unwrap();
        let config = SimConfig {
            grid_step: 1e-4,
            ..SimConfig::default()
        };
        let e = engine(&t, Cutoff::unit(), config);
        let mut rng = stream(2, 0);
        for _ in 0..20 {
            let out = exit_time(&mut rng, &e, 1.0).unwrap();
            assert!(out.overshoot < 0.05);
        }
    }
}
