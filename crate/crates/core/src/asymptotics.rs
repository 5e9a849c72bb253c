//! Drift to `+∞`: the tail criterion, Monte Carlo evidence and checks of
//! the embedded-walk algebra.

use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{LevyError, Result};
use crate::measure::{mean_ex1, tail_report, CriterionValue, LevyTriplet, MeanValue, Side, TailReport};
use crate::path::PathEngine;
use crate::stats::{ks_two_sample, mean_and_se, proportion_ci, TestReport};
use crate::streams::{replicate, Purpose};

/// `A(x) / √(U(x) M(x))`.
pub fn criterion_value(triplet: &LevyTriplet, x: f64) -> Result<CriterionValue> {
    let row = tail_report(triplet, x)?;
    Ok(CriterionValue::from_parts(row.a_trunc, row.u_trunc, row.m_minus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    DriftsToPlusInfinity,
    DoesNotDriftToPlusInfinity,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Criterion,
    FiniteMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// The criterion must exceed this at the top of the grid.
    pub drift: f64,
    /// Values at or below this on the top half count as bounded.
    pub bounded: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            drift: 10.0,
            bounded: 1.0,
        }
    }
}

/// A Monte Carlo proportion at one time or radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McPoint {
    pub at: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub runs: usize,
    /// Runs that hit the time cap and were left out.
    pub excluded: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct McEvidence {
    pub positivity: Vec<McPoint>,
    pub exit: Vec<McPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub verdict: Verdict,
    pub branch: Branch,
    pub grid: Vec<TailReport>,
    pub mc_evidence: Option<McEvidence>,
    pub notes: Vec<String>,
}

/// `points` values from `from` to `to`, evenly spaced in `log x`.
pub fn geometric_grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && from > 0.0 && to > from);
    let ratio = (to / from).ln() / (points - 1) as f64;
    (0..points)
        .map(|i| if i + 1 == points { to } else { from * (ratio * i as f64).exp() })
        .collect()
}

/// Evidence-based classification of weak drift to `+∞`.
///
/// When the negative tail provably vanishes beyond the grid (bounded
/// support), the verdict is the sign of `E X₁`. Otherwise the criterion is
/// evaluated on the grid: it must increase over the top half and exceed
/// `thresholds.drift` at the end for a drift verdict, and stay at or below
/// `thresholds.bounded` over the top half for the opposite verdict.
pub fn classify(triplet: &LevyTriplet, x_grid: &[f64], thresholds: Thresholds) -> Result<CriterionReport> {
    triplet.validate()?;
    if x_grid.len() < 8 {
        return Err(LevyError::param("params.x_grid", "need at least 8 points"));
    }
    if x_grid[0] <= 0.0 || x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LevyError::param("params.x_grid", "must be positive and strictly increasing"));
    }
    let grid: Vec<TailReport> = x_grid.iter().map(|&x| tail_report(triplet, x)).collect::<Result<_>>()?;
    let top = *x_grid.last().expect("nonempty grid");
    let mut notes = Vec::new();

    let vanishes = grid.last().is_some_and(|r| r.m_minus == 0.0)
        && triplet.measure.support_bound(Side::Minus).is_some_and(|b| b <= top);
    if vanishes {
        let mean = mean_ex1(triplet)?;
        let verdict = match mean {
            MeanValue::Finite(m) if m > 0.0 => Verdict::DriftsToPlusInfinity,
            MeanValue::Finite(_) => Verdict::DoesNotDriftToPlusInfinity,
            // the negative side is bounded, so only E X₁⁺ can diverge
            MeanValue::Divergent { .. } => Verdict::DriftsToPlusInfinity,
        };
        notes.push(format!("negative tail vanishes beyond {top}; E X1 = {:?}", mean));
        return Ok(CriterionReport {
            verdict,
            branch: Branch::FiniteMean,
            grid,
            mc_evidence: None,
            notes,
        });
    }

    let values: Vec<f64> = grid.iter().map(|r| r.criterion).collect();
    let half = &values[values.len() / 2..];
    let verdict = if half.iter().any(|v| v.is_nan()) {
        notes.push("criterion is 0/0 somewhere on the top half".into());
        Verdict::Inconclusive
    } else if half.windows(2).all(|w| w[1] >= w[0]) && *half.last().expect("nonempty") > thresholds.drift {
        Verdict::DriftsToPlusInfinity
    } else if half.iter().all(|&v| v <= thresholds.bounded) {
        Verdict::DoesNotDriftToPlusInfinity
    } else {
        Verdict::Inconclusive
    };
    let xs: Vec<f64> = x_grid[x_grid.len() / 2..].to_vec();
    if half.iter().all(|&v| v > 0.0 && v.is_finite()) {
        notes.push(format!("log-log slope over the top half: {:.4}", log_slope(&xs, half)));
    }
    Ok(CriterionReport {
        verdict,
        branch: Branch::Criterion,
        grid,
        mc_evidence: None,
        notes,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `P̂(X_t > 0)` over `n_reps` independent draws of `X_t`.
pub fn mc_positivity(engine: &PathEngine, t: f64, n_reps: usize) -> Result<McPoint> {
    if !(t > 0.0) {
        return Err(LevyError::param("t", "must be positive"));
    }
    let seed = engine.config().seed;
    let hits = replicate(seed, Purpose::Positivity, n_reps, engine.config().workers, |_, rng| {
        engine.value_at(rng, t) > 0.0
    })
    .into_iter()
    .filter(|&b| b)
    .count();
    let (estimate, stderr) = proportion_ci(hits, n_reps, 1.0);
    Ok(McPoint {
        at: t,
        estimate,
        stderr,
        runs: n_reps,
        excluded: 0,
    })
}

/// `P̂(X_{T_r} > 0)`; runs that reach the time cap are excluded.
pub fn mc_exit_positivity(engine: &PathEngine, r: f64, n_reps: usize) -> Result<McPoint> {
    let seed = engine.config().seed;
    let outcomes = replicate(seed, Purpose::Exit, n_reps, engine.config().workers, |_, rng| {
        engine.exit_time(rng, r)
    });
    let mut top = 0;
    let mut excluded = 0;
    for o in outcomes {
        match o {
            Ok(out) => top += usize::from(out.top),
            Err(LevyError::HorizonExceeded { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    let runs = n_reps - excluded;
    if runs == 0 {
        return Err(LevyError::HorizonExceeded {
            cap: engine.config().time_cap,
        });
    }
    if excluded > 0 {
        log::warn!("{excluded} of {n_reps} exit runs hit the time cap and were excluded");
    }
    let (estimate, stderr) = proportion_ci(top, runs, 1.0);
    Ok(McPoint {
        at: r,
        estimate,
        stderr,
        runs,
        excluded,
    })
}

/// Monte Carlo check that a sequence of proportions is nondecreasing within
/// `z` combined standard errors and ends above `floor` by `z` errors.
pub fn trend_report(name: &str, points: &[McPoint], floor: f64, z: f64) -> TestReport {
    let mut worst_drop: f64 = 0.0;
    for w in points.windows(2) {
        let margin = z * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        worst_drop = worst_drop.max(w[0].estimate - w[1].estimate - margin);
    }
    let last = points.last().copied();
    let lower = last.map_or(f64::NAN, |p| p.estimate - z * p.stderr);
    let mut r = TestReport::new(name, worst_drop, 0.0, points.iter().map(|p| p.runs).sum());
    r.passed = worst_drop <= 0.0 && lower > floor;
    r.notes.push(format!("final estimate minus {z} SE = {lower:.4} (needs > {floor})"));
    for p in points {
        r.notes.push(format!("at {}: {:.4} ± {:.4}", p.at, p.estimate, p.stderr));
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub alpha: f64,
    pub delta: f64,
    pub n: usize,
    pub t: f64,
    /// Mean of `Ŝ_n / n^α`.
    pub c_hat: f64,
    pub c_stderr: f64,
    /// Mean of `X_t / t^α`.
    pub l_hat: f64,
    pub l_stderr: f64,
    pub ratio: f64,
    /// `Δ^α`, the renewal-theory constant.
    pub renewal_constant: f64,
    /// `1/Δ^α`, the constant as printed in the source statement.
    pub stated_constant: f64,
    pub test: TestReport,
}

/// Compare the limits of `Ŝ_n / n^α` and `X_t / t^α`. Their ratio should be
/// `Δ^α` because `N_t / t → Δ`; the report also lists `1/Δ^α`.
pub fn scaling_diagnostic(engine: &PathEngine, alpha: f64, n: usize, t: f64, n_reps: usize) -> Result<ScalingReport> {
    if !(alpha > 0.0) {
        return Err(LevyError::param("params.alpha", "must be positive"));
    }
    if n_reps < 2 {
        return Err(LevyError::param("sim.replications", "need at least 2"));
    }
    let cfg = engine.config();
    let walk: Vec<f64> = replicate(cfg.seed, Purpose::Scaling, n_reps, cfg.workers, |_, rng| {
        engine.walk_endpoint(rng, n) / (n as f64).powf(alpha)
    });
    let proc: Vec<f64> = replicate(cfg.seed, Purpose::Auxiliary, n_reps, cfg.workers, |_, rng| {
        engine.value_at(rng, t) / t.powf(alpha)
    });
    let (c_hat, c_stderr) = mean_and_se(&walk);
    let (l_hat, l_stderr) = mean_and_se(&proc);
    let delta = engine.decomposition().delta();
    let renewal_constant = delta.powf(alpha);
    let ratio = l_hat / c_hat;
    let name = "scaling_ratio";
    let test = if c_hat.abs() <= 3.0 * c_stderr || c_hat == 0.0 {
        TestReport::vacuous(name, 2 * n_reps, "walk limit indistinguishable from 0; ratio undefined")
    } else {
        TestReport::new(name, (ratio / renewal_constant - 1.0).abs(), 0.05, 2 * n_reps)
            .with_note(format!("ratio {ratio:.5}, Δ^α = {renewal_constant:.5}, 1/Δ^α = {:.5}", 1.0 / renewal_constant))
    };
    Ok(ScalingReport {
        alpha,
        delta,
        n,
        t,
        c_hat,
        c_stderr,
        l_hat,
        l_stderr,
        ratio,
        renewal_constant,
        stated_constant: 1.0 / renewal_constant,
        test,
    })
}

/// Truncated moments of the shifted jump law `J* = J + γ/Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkFunctionals {
    pub x: f64,
    /// `E[(J* ∧ x) ∨ (-x)] = ∫₀ˣ P(J* > y) - P(J* < -y) dy`.
    pub a_star: f64,
    /// `E[min(|J*|, x)²] = 2∫₀ˣ y P(|J*| > y) dy`.
    pub u_star: f64,
    /// `Δ P(J* > x)` and `Δ P(J* ≤ -x)`.
    pub shifted_tails: (f64, f64),
    /// `Δ P(J > x)` and `Δ P(J < -x)` for the unshifted big jump.
    pub jump_tails: (f64, f64),
}

pub fn walk_functionals(decomposition: &Decomposition, x: f64) -> Result<WalkFunctionals> {
    if !decomposition.cutoff().is_unit() {
        return Err(LevyError::param("cutoff", "walk functionals need eta_minus = eta_plus = 1"));
    }
    if !(x > 0.0) {
        return Err(LevyError::param("x", "must be positive"));
    }
    let delta = decomposition.delta();
    let g = decomposition.triplet().gamma / delta;
    let m = &decomposition.triplet().measure;
    let region = decomposition.cutoff().outside();
    let inf = f64::INFINITY;
    // J* > x  ⇔  J > x - g ;  J* ≤ -x  ⇔  J ≤ -x - g
    let above = m.real_moment(&region, 0, x - g, inf)?;
    let below = m.real_moment(&region, 0, -inf, -x - g)?;
    let mid0 = m.real_moment(&region, 0, -x - g, x - g)?;
    let mid1 = m.real_moment(&region, 1, -x - g, x - g)?;
    let mid2 = m.real_moment(&region, 2, -x - g, x - g)?;
    let a_star = (x * above - x * below + mid1 + g * mid0) / delta;
    let u_star = (x * x * (above + below) + mid2 + 2.0 * g * mid1 + g * g * mid0) / delta;
    Ok(WalkFunctionals {
        x,
        a_star,
        u_star,
        shifted_tails: (above, below),
        jump_tails: decomposition.big_jump_tails(x)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub t: f64,
    /// `max |X_t - (S*_{N_t} + X̃_t - γ N_t / Δ)|` on coupled components.
    pub coupled: TestReport,
    /// Runs with `N_t = 0`, and the largest `|X_t - X̃_t|` among them.
    pub zero_jump_runs: usize,
    pub zero_jump_discrepancy: f64,
    /// `X_t - (S*_{N_t} + X̃_t - γt) = γ(t - N_t/Δ)`: mean and max of its
    /// absolute value.
    pub literal_residual_mean: f64,
    pub literal_residual_max: f64,
    /// KS between `X_t` and the right-hand side built from independent runs.
    pub distributional: TestReport,
}

/// Pathwise check of `X_t = S*_{N_t} + X̃_t - γ N_t / Δ` with
/// `S*_k = Σ_{i ≤ k} (J_i + γ/Δ)`.
pub fn decomposition_identity_check(engine: &PathEngine, t: f64, n_reps: usize, level: f64) -> Result<IdentityReport> {
    let d = engine.decomposition();
    if !d.cutoff().is_unit() {
        return Err(LevyError::param("cutoff", "the identity check needs eta_minus = eta_plus = 1"));
    }
    let gamma = d.triplet().gamma;
    let g = gamma / d.delta();
    let cfg = engine.config();
    let runs = replicate(cfg.seed, Purpose::Identity, n_reps, cfg.workers, |_, rng| {
        engine.components_at(rng, t)
    });
    let rhs = |c: &crate::path::PathComponents| {
        let s_star = c.jump_sum + c.jump_count as f64 * g;
        s_star + c.small - gamma * c.jump_count as f64 / d.delta()
    };
    let mut worst: f64 = 0.0;
    let mut zero_runs = 0;
    let mut zero_worst: f64 = 0.0;
    let mut literal_sum = 0.0;
    let mut literal_max: f64 = 0.0;
    for c in &runs {
        worst = worst.max((c.x - rhs(c)).abs());
        if c.jump_count == 0 {
            zero_runs += 1;
            zero_worst = zero_worst.max((c.x - c.small).abs());
        }
        let literal = (c.x - (c.jump_sum + c.jump_count as f64 * g + c.small - gamma * t)).abs();
        literal_sum += literal;
        literal_max = literal_max.max(literal);
    }
    let independent = replicate(cfg.seed, Purpose::Auxiliary, n_reps, cfg.workers, |_, rng| {
        engine.components_at(rng, t)
    });
    let lhs: Vec<f64> = runs.iter().map(|c| c.x).collect();
    let rhs_values: Vec<f64> = independent.iter().map(rhs).collect();
    Ok(IdentityReport {
        t,
        coupled: TestReport::new("identity_coupled", worst, 1e-10, n_reps),
        zero_jump_runs: zero_runs,
        zero_jump_discrepancy: zero_worst,
        literal_residual_mean: literal_sum / n_reps.max(1) as f64,
        literal_residual_max: literal_max,
        distributional: ks_two_sample(&lhs, &rhs_values, level)?.named("identity_in_law"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{decompose, Cutoff};
    use crate::measure::{trunc_mean_a, MeasureSpec, PowerSide};
    use approx::assert_relative_eq;

    fn drift_fixture() -> LevyTriplet {
        LevyTriplet::new(
            0.0,
            0.0,
            MeasureSpec::power(
                Some(PowerSide::new(0.5, 0.5).floored(1.0)),
                Some(PowerSide::new(2.0, 2.0).floored(1.0)),
            ),
        )
        .unwrap()
    }

    #[test]
    fn symmetric_is_zero() {
        let t = LevyTriplet::new(0.0, 0.0, MeasureSpec::atoms([(2.0, 1.0), (-2.0, 1.0), (0.5, 3.0), (-0.5, 3.0)])).unwrap();
        for x in [0.3, 1.0, 1.7, 10.0] {
            // beyond the support M = 0 and A = 0
            let v = criterion_value(&t, x).unwrap();
            assert!(matches!(v, CriterionValue::Finite(c) if c == 0.0) || v == CriterionValue::Indeterminate);
        }
    }

    #[test]
    fn drift_fixture_closed_form() {
        let t = drift_fixture();
        let x: f64 = 1e4;
        let a = 2.0 * x.sqrt() - 3.0 + 1.0 / x;
        let u = 4.0 / 3.0 * x.powf(1.5) + 2.0 / 3.0 + 2.0 * x.ln();
        let oracle = a / (u / (x * x)).sqrt();
        let CriterionValue::Finite(v) = criterion_value(&t, x).unwrap() else {
            panic!("finite expected")
        };
        assert_relative_eq!(v, oracle, max_relative = 1e-9);
        assert!((v / (3f64.sqrt() * 1e3) - 1.0).abs() < 0.05);
        let report = classify(&t, &geometric_grid(1.0, 1e6, 13), Thresholds::default()).unwrap();
        assert_eq!(report.verdict, Verdict::DriftsToPlusInfinity);
        assert_eq!(report.branch, Branch::Criterion);
    }

    #[test]
    fn finite_mean_branch() {
        let t = LevyTriplet::new(1.0, 0.0, MeasureSpec::atoms([(-2.0, 1.0)])).unwrap();
        let report = classify(&t, &geometric_grid(1.0, 100.0, 8), Thresholds::default()).unwrap();
        assert_eq!(report.branch, Branch::FiniteMean);
        assert_eq!(report.verdict, Verdict::DoesNotDriftToPlusInfinity);
    }

    #[test]
    fn grid_preconditions() {
        let t = drift_fixture();
        assert!(classify(&t, &[1.0, 2.0], Thresholds::default()).is_err());
        let mut g = geometric_grid(1.0, 10.0, 8);
        g.swap(2, 3);
        assert!(classify(&t, &g, Thresholds::default()).is_err());
    }

    #[test]
    fn walk_functionals_match_hand_values() {
        // Δ = 1.5, γ/Δ = 2/3, J* ∈ {8/3 w.p. 2/3, -7/3 w.p. 1/3}
        let t = LevyTriplet::new(1.0, 0.0, MeasureSpec::atoms([(2.0, 1.0), (-3.0, 0.5)])).unwrap();
        let d = decompose(&t, Cutoff::unit()).unwrap();
        let w = walk_functionals(&d, 2.0).unwrap();
        assert_relative_eq!(w.a_star, 2.0 / 3.0 * 2.0 + 1.0 / 3.0 * -2.0, epsilon = 1e-14);
        assert_relative_eq!(w.u_star, 4.0, epsilon = 1e-14);
        let w = walk_functionals(&d, 50.0).unwrap();
        assert_relative_eq!(w.a_star, 1.0, epsilon = 1e-14);
        assert_relative_eq!(w.u_star, 177.0 / 27.0, epsilon = 1e-13);
        // for x > 1 the unshifted tails are N and M
        for x in [1.5, 2.5, 4.0] {
            let w = walk_functionals(&d, x).unwrap();
            assert_eq!(w.jump_tails.0, t.measure.tail(Side::Plus, x).unwrap());
            assert_eq!(w.jump_tails.1, t.measure.tail(Side::Minus, x).unwrap());
        }
        // A*(x + γ/Δ) Δ = A(x) once M(x) = 0
        let x = 5.0;
        let w = walk_functionals(&d, x + 2.0 / 3.0).unwrap();
        assert_relative_eq!(1.5 * w.a_star, trunc_mean_a(&t, x).unwrap(), epsilon = 1e-12);
        assert!(walk_functionals(&decompose(&t, Cutoff::symmetric(0.5)).unwrap(), 2.0).is_err());
    }

    #[test]
    fn symmetric_a_star_vanishes() {
        let t = LevyTriplet::new(0.0, 0.0, MeasureSpec::atoms([(2.0, 1.0), (-2.0, 1.0)])).unwrap();
        let d = decompose(&t, Cutoff::unit()).unwrap();
        for x in [0.5, 2.0, 7.0] {
            assert_eq!(walk_functionals(&d, x).unwrap().a_star, 0.0);
        }
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_grid(1.0, 1e4, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[4], 1e4);
        assert_relative_eq!(g[2], 100.0, max_relative = 1e-12);
    }
}
