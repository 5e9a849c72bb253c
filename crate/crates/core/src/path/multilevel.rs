use rand::Rng;
use serde::Serialize;

use super::{Horizon, PathEngine, SimConfig, SkeletonPath};
use crate::decomposition::{decompose, Cutoff};
use crate::error::{LevyError, Result};
use crate::measure::LevyTriplet;

/// Bounds of one level: the intervals between jumps outside that level's
/// cutoff, with the sup and inf of the shared fine path over each.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelEnvelope {
    pub cutoff: Cutoff,
    /// Level interval containing each finest interval.
    pub group_of: Vec<usize>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

/// One fine path with the envelopes of every level, coarsest first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultilevelRun {
    pub path: SkeletonPath,
    pub levels: Vec<LevelEnvelope>,
}

impl MultilevelRun {
    /// `(U(t), L(t))` of `level` on finest interval `interval`.
    pub fn envelope(&self, level: usize, interval: usize) -> (f64, f64) {
        let l = &self.levels[level];
        let g = l.group_of[interval];
        (l.upper[g], l.lower[g])
    }

    fn fine(&self) -> &[super::FinePoint] {
        self.path.fine.as_deref().unwrap_or_default()
    }

    /// Finer envelopes sit inside coarser ones at every fine point.
    pub fn nested(&self) -> bool {
        self.fine().iter().all(|p| {
            (1..self.levels.len()).all(|k| {
                let (u0, l0) = self.envelope(k - 1, p.interval);
                let (u1, l1) = self.envelope(k, p.interval);
                u1 <= u0 && l1 >= l0
            })
        })
    }

    /// Every fine value lies inside every envelope.
    pub fn contains_path(&self) -> bool {
        self.fine().iter().all(|p| {
            (0..self.levels.len()).all(|k| {
                let (u, l) = self.envelope(k, p.interval);
                l <= p.x && p.x <= u
            })
        })
    }

    /// `max_t (U⁽ᵏ⁾(t) - L⁽ᵏ⁾(t))` per level.
    pub fn max_gaps(&self) -> Vec<f64> {
        (0..self.levels.len())
            .map(|k| {
                self.fine()
                    .iter()
                    .map(|p| {
                        let (u, l) = self.envelope(k, p.interval);
                        u - l
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn gaps_nonincreasing(&self) -> bool {
        self.max_gaps().windows(2).all(|w| w[1] <= w[0])
    }

    /// Rows `t,level,upper,lower` at every fine point; levels count from 1.
    pub fn envelopes_csv(&self) -> String {
        let mut out = String::from("t,level,upper,lower\n");
        for k in 0..self.levels.len() {
            for p in self.fine() {
                let (u, l) = self.envelope(k, p.interval);
                out.push_str(&format!("{},{},{},{}\n", p.t, k + 1, u, l));
            }
        }
        out
    }
}

/// Simulate one path at the finest cutoff and aggregate its interval
/// extremes over the coarser partitions.
///
/// `cutoffs` must shrink strictly in both directions. The coarse intervals
/// are unions of fine ones, so the envelopes nest by construction.
pub fn multilevel_bounds<R: Rng + ?Sized>(
    rng: &mut R,
    triplet: &LevyTriplet,
    cutoffs: &[Cutoff],
    horizon: Horizon,
    config: &SimConfig,
) -> Result<MultilevelRun> {
    let finest = *cutoffs.last().ok_or_else(|| LevyError::param("params.levels", "need at least one level"))?;
    for (i, w) in cutoffs.windows(2).enumerate() {
        if !(w[1].eta_minus < w[0].eta_minus && w[1].eta_plus < w[0].eta_plus) {
            return Err(LevyError::param(
                format!("params.levels[{}]", i + 1),
                "cutoffs must decrease strictly",
            ));
        }
    }
    for c in cutoffs {
        c.validate()?;
    }
    let engine = PathEngine::new(decompose(triplet, finest)?, config.clone())?;
    let path = engine.skeleton_for(rng, horizon, true);
    let levels = cutoffs.iter().map(|&c| aggregate(&path, c)).collect();
    Ok(MultilevelRun { path, levels })
}

fn aggregate(path: &SkeletonPath, cutoff: Cutoff) -> LevelEnvelope {
    let mut group_of = Vec::with_capacity(path.upper.len());
    let mut upper: Vec<f64> = Vec::new();
    let mut lower: Vec<f64> = Vec::new();
    for k in 0..path.upper.len() {
        if k == 0 || cutoff.is_big(path.jumps[k - 1]) {
            upper.push(path.upper[k]);
            lower.push(path.lower[k]);
        } else {
            let g = upper.len() - 1;
            upper[g] = upper[g].max(path.upper[k]);
            lower[g] = lower[g].min(path.lower[k]);
        }
        group_of.push(upper.len() - 1);
    }
    LevelEnvelope {
        cutoff,
        group_of,
        upper,
        lower,
    }
}
