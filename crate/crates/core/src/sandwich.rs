//! Bounding random walks for the interval extremes.
//!
//! From a skeleton, `S⁺_n = M_n - m̃₀` is built as a sum of steps
//!
//! ```text
//! Y⁺_r = (X̃-increment of interval r-1 - m̃_{r-1}) + J_r + m̃_r
//! ```
//!
//! and `S⁻` likewise from the infima. Each step only involves interval
//! `r-1`'s post-supremum piece, `J_r`, and interval `r`'s supremum, which
//! is what makes `S⁺` a random walk independent of `m̃₀`.

use serde::Serialize;

use crate::error::Result;
use crate::path::{PathEngine, SkeletonPath, SmallKind};
use crate::stats::{correlation_bound, ks_two_sample, ks_two_sample_2d, TestReport};
use crate::streams::{replicate, Purpose};

/// Below this many replications verification reports are vacuous.
pub const MIN_REPLICATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichWalks {
    pub s_plus: Vec<f64>,
    pub s_minus: Vec<f64>,
    pub steps_plus: Vec<f64>,
    pub steps_minus: Vec<f64>,
    /// `m̃₀`.
    pub m0: f64,
    /// `ĩ₀`.
    pub i0: f64,
}

impl SandwichWalks {
    /// `max_n max(|M_n - S⁺_n - m̃₀|, |I_n - S⁻_n - ĩ₀|)`.
    pub fn reconstruction_error(&self, path: &SkeletonPath) -> f64 {
        (0..self.s_plus.len())
            .map(|n| {
                let up = (path.upper[n] - self.s_plus[n] - self.m0).abs();
                let down = (path.lower[n] - self.s_minus[n] - self.i0).abs();
                up.max(down)
            })
            .fold(0.0, f64::max)
    }

    /// Rows `n,s_plus,s_minus,upper,lower` against the source path.
    pub fn csv(&self, path: &SkeletonPath) -> String {
        let mut out = String::from("n,s_plus,s_minus,m0,i0,upper,lower\n");
        for n in 0..self.s_plus.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                n, self.s_plus[n], self.s_minus[n], self.m0, self.i0, path.upper[n], path.lower[n]
            ));
        }
        out
    }
}

pub fn build_sandwich(path: &SkeletonPath) -> SandwichWalks {
    let n = path.steps();
    let walk = |extreme: &[f64]| {
        let steps: Vec<f64> = (1..=n)
            .map(|r| (path.small_increments[r - 1] - extreme[r - 1]) + path.jumps[r - 1] + extreme[r])
            .collect();
        let mut s = Vec::with_capacity(n + 1);
        s.push(0.0);
        for y in &steps {
            s.push(s.last().copied().unwrap_or(0.0) + y);
        }
        (steps, s)
    };
    let (steps_plus, s_plus) = walk(&path.m_tilde);
    let (steps_minus, s_minus) = walk(&path.i_tilde);
    SandwichWalks {
        s_plus,
        s_minus,
        steps_plus,
        steps_minus,
        m0: path.m_tilde[0],
        i0: path.i_tilde[0],
    }
}

fn underpowered(name: &str, n_reps: usize) -> Option<TestReport> {
    (n_reps < MIN_REPLICATIONS).then(|| {
        log::warn!("{name}: {n_reps} replications is underpowered (need {MIN_REPLICATIONS})");
        TestReport::vacuous(name, n_reps, format!("underpowered: {n_reps} < {MIN_REPLICATIONS} replications"))
    })
}

/// Extra KS allowance `2√h` when interval extremes come from a grid.
fn grid_allowance(engine: &PathEngine) -> f64 {
    if engine.small().kind() == SmallKind::Grid {
        2.0 * engine.config().grid_step.sqrt()
    } else {
        0.0
    }
}

fn widen(mut report: TestReport, allowance: f64) -> TestReport {
    if allowance > 0.0 {
        report.threshold += allowance;
        report.passed = report.statistic <= report.threshold;
        report.notes.push(format!("grid allowance {allowance:.4} added"));
    }
    report
}

fn sandwich_samples(engine: &PathEngine, n: usize, n_reps: usize) -> Vec<(SandwichWalks, SkeletonPath)> {
    let seed = engine.config().seed;
    replicate(seed, Purpose::Skeleton, n_reps, engine.config().workers, |_, rng| {
        let path = engine.skeleton(rng, n, false);
        (build_sandwich(&path), path)
    })
}

fn reference_paths(engine: &PathEngine, n: usize, n_reps: usize) -> Vec<SkeletonPath> {
    let seed = engine.config().seed;
    replicate(seed, Purpose::Reference, n_reps, engine.config().workers, |_, rng| {
        engine.skeleton(rng, n, false)
    })
}

/// KS of `S⁺_n` and `S⁻_n` against `Ŝ_n` from independent paths.
pub fn verify_walk_law(engine: &PathEngine, n: usize, n_reps: usize, level: f64) -> Result<Vec<TestReport>> {
    let names = [format!("walk_law_plus_n{n}"), format!("walk_law_minus_n{n}")];
    if let Some(r) = underpowered(&names[0], n_reps) {
        return Ok(vec![r.clone(), r.named(names[1].clone())]);
    }
    let allowance = grid_allowance(engine);
    let samples = sandwich_samples(engine, n, n_reps);
    let reference: Vec<f64> = reference_paths(engine, n, n_reps).iter().map(|p| p.s_hat[n]).collect();
    let plus: Vec<f64> = samples.iter().map(|(w, _)| w.s_plus[n]).collect();
    let minus: Vec<f64> = samples.iter().map(|(w, _)| w.s_minus[n]).collect();
    Ok(vec![
        widen(ks_two_sample(&plus, &reference, level)?.named(names[0].clone()), allowance),
        widen(ks_two_sample(&minus, &reference, level)?.named(names[1].clone()), allowance),
    ])
}

/// KS of the first sandwich step against `J₁ + X̃(e₁)` drawn independently.
pub fn verify_step_law(engine: &PathEngine, n_reps: usize, level: f64) -> Result<TestReport> {
    let name = "step_law";
    if let Some(r) = underpowered(name, n_reps) {
        return Ok(r);
    }
    let steps: Vec<f64> = sandwich_samples(engine, 1, n_reps)
        .iter()
        .map(|(w, _)| w.steps_plus[0])
        .collect();
    let seed = engine.config().seed;
    let direct = replicate(seed, Purpose::Auxiliary, n_reps, engine.config().workers, |_, rng| {
        engine.walk_endpoint(rng, 1)
    });
    Ok(widen(ks_two_sample(&steps, &direct, level)?.named(name), grid_allowance(engine)))
}

/// Independence of `m̃₀` from `S⁺_n` and from `X̃(e₁) - m̃₀`, plus the law
/// of `X̃(e₁) - m̃₀` against independent draws of `ĩ₀`.
pub fn verify_independence(engine: &PathEngine, n: usize, n_reps: usize, level: f64) -> Result<Vec<TestReport>> {
    let names = [
        format!("independence_m0_s_plus_n{n}"),
        "independence_m0_post_sup".to_string(),
        "post_sup_law_vs_inf".to_string(),
    ];
    if let Some(r) = underpowered(&names[0], n_reps) {
        return Ok(names.iter().map(|nm| r.clone().named(nm.clone())).collect());
    }
    let samples = sandwich_samples(engine, n, n_reps);
    let walk_pairs: Vec<(f64, f64)> = samples.iter().map(|(w, _)| (w.m0, w.s_plus[n])).collect();
    let post: Vec<f64> = samples.iter().map(|(w, p)| p.small_increments[0] - w.m0).collect();
    let post_pairs: Vec<(f64, f64)> = samples.iter().zip(&post).map(|((w, _), &d)| (w.m0, d)).collect();
    let infs: Vec<f64> = reference_paths(engine, 0, n_reps).iter().map(|p| p.i_tilde[0]).collect();
    Ok(vec![
        correlation_bound(&walk_pairs, 3.0).named(names[0].clone()),
        correlation_bound(&post_pairs, 3.0).named(names[1].clone()),
        widen(ks_two_sample(&post, &infs, level)?.named(names[2].clone()), grid_allowance(engine)),
    ])
}

/// 2-D KS of `(Ŝ_n, m̃_n)` against `(S⁺_n, m̃₀)` from independent paths.
pub fn verify_joint_law(engine: &PathEngine, n: usize, n_reps: usize, level: f64) -> Result<TestReport> {
    let name = format!("joint_law_n{n}");
    if let Some(r) = underpowered(&name, n_reps) {
        return Ok(r);
    }
    let sandwich: Vec<(f64, f64)> = sandwich_samples(engine, n, n_reps)
        .iter()
        .map(|(w, _)| (w.s_plus[n], w.m0))
        .collect();
    let reference: Vec<(f64, f64)> = reference_paths(engine, n, n_reps)
        .iter()
        .map(|p| (p.s_hat[n], p.m_tilde[n]))
        .collect();
    Ok(widen(ks_two_sample_2d(&reference, &sandwich, level)?.named(name), grid_allowance(engine)))
}

/// Largest reconstruction error over `n_reps` paths.
pub fn max_reconstruction_error(engine: &PathEngine, n: usize, n_reps: usize) -> f64 {
    sandwich_samples(engine, n, n_reps)
        .iter()
        .map(|(w, p)| w.reconstruction_error(p))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{decompose, Cutoff};
    use crate::measure::{LevyTriplet, MeasureSpec};
    use crate::path::{IntervalExtremes, SimConfig};
    use crate::streams::stream;

    #[test]
    fn empty_walk() {
        let ext = IntervalExtremes {
            increment: 0.3,
            sup: 0.7,
            inf: -0.2,
        };
        let p = SkeletonPath::assemble(&[1.0], vec![], &[ext], None);
        let w = build_sandwich(&p);
        assert_eq!(w.s_plus, vec![0.0]);
        assert_eq!(p.upper[0], w.m0);
    }

    #[test]
    fn hand_telescope() {
        // interval 0: slope 1 for time 1; J_1 = 5; interval 1 sup 0.25
        let ext = [
            IntervalExtremes {
                increment: 1.0,
                sup: 1.0,
                inf: 0.0,
            },
            IntervalExtremes {
                increment: -0.5,
                sup: 0.25,
                inf: -0.5,
            },
        ];
        let p = SkeletonPath::assemble(&[1.0, 2.0], vec![5.0], &ext, None);
        let w = build_sandwich(&p);
        assert_eq!(w.steps_plus[0], (1.0 - 1.0) + 5.0 + 0.25);
        assert_eq!(w.reconstruction_error(&p), 0.0);
    }

    #[test]
    fn random_paths_reconstruct_and_mirror() {
        let t = LevyTriplet::new(0.5, 1.0, MeasureSpec::atoms([(1.5, 1.0), (-2.5, 1.0), (0.4, 1.0)])).unwrap();
        let engine = PathEngine::new(decompose(&t, Cutoff::unit()).unwrap(), SimConfig::default()).unwrap();
        let mut rng = stream(3, 0);
        for _ in 0..50 {
            let p = engine.skeleton(&mut rng, 6, false);
            let w = build_sandwich(&p);
            assert!(w.reconstruction_error(&p) < 1e-12);
            let steady: Vec<f64> = (0..=6).map(|n| p.upper[n] - w.s_plus[n]).collect();
            assert!(steady.iter().all(|v| (v - steady[0]).abs() < 1e-12));
            let m = build_sandwich(&p.negated());
            assert_eq!(m.m0, -w.i0);
            for n in 0..=6 {
                assert!((m.s_plus[n] + w.s_minus[n]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn few_replications_are_vacuous() {
        let t = LevyTriplet::new(0.5, 1.0, MeasureSpec::atoms([(1.5, 1.0), (-2.5, 1.0)])).unwrap();
        let engine = PathEngine::new(decompose(&t, Cutoff::unit()).unwrap(), SimConfig::default()).unwrap();
        let r = verify_walk_law(&engine, 5, 10, 0.01).unwrap();
        assert!(r.iter().all(|r| r.vacuous));
    }

    #[test]
    fn deterministic_jumps_match_exactly() {
        let t = LevyTriplet::new(0.0, 0.0, MeasureSpec::atoms([(2.0, 1.0)])).unwrap();
        let engine = PathEngine::new(decompose(&t, Cutoff::unit()).unwrap(), SimConfig::default()).unwrap();
        let r = verify_walk_law(&engine, 3, 1000, 0.01).unwrap();
        assert!(r.iter().all(|r| r.statistic == 0.0 && r.passed));
        let ind = verify_independence(&engine, 3, 1000, 0.01).unwrap();
        assert!(ind[0].vacuous && ind[1].vacuous);
    }
}
