//! Monte Carlo realization of the big-jump skeleton.
//!
//! A path is built interval by interval: an `Exp(Δ)` holding time, the
//! small process `X̃` over it (increment and extremes, optionally a fine
//! trace), then a big jump. Interval `n` is `[τₙ, τₙ₊₁)`; it starts at the
//! post-jump value `Ŝₙ` and its extremes include the left limit at `τₙ₊₁`.

mod exit;
mod multilevel;
mod small;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{LevyError, Result};

pub use exit::{exit_time, ExitOutcome};
pub use multilevel::{multilevel_bounds, LevelEnvelope, MultilevelRun};
pub use small::{exact_brownian_sup_sampler, wiener_hopf_rates, IntervalExtremes, SmallKind, SmallProcess};

use small::{exp_gap, poisson};

/// How `X̃` is simulated over an interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallMode {
    /// Closed forms when available, grid otherwise.
    #[default]
    Auto,
    /// Always walk the time grid.
    Grid,
    /// Require closed forms; fails for small parts with jumps.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    /// `n` big jumps.
    Steps(usize),
    /// Every big jump up to time `T`.
    Time(f64),
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon::Steps(10)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub seed: u64,
    /// Time step `h` of the fine grid.
    pub grid_step: f64,
    /// Jumps with `|x| ≤ ε` are not simulated individually.
    pub inner_cutoff: f64,
    pub horizon: Horizon,
    pub workers: usize,
    /// Exit-time simulations give up past this time.
    pub time_cap: f64,
    pub small_mode: SmallMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            grid_step: 1e-2,
            inner_cutoff: 0.0,
            horizon: Horizon::default(),
            workers: 1,
            time_cap: 1e6,
            small_mode: SmallMode::Auto,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(LevyError::param("sim.grid_step", "must be positive and finite"));
        }
        if !(self.inner_cutoff >= 0.0 && self.inner_cutoff.is_finite()) {
            return Err(LevyError::param("sim.inner_cutoff", "must be nonnegative and finite"));
        }
        match self.horizon {
            Horizon::Steps(0) => return Err(LevyError::param("sim.steps", "must be positive")),
            Horizon::Time(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(LevyError::param("sim.time", "must be positive and finite"))
            }
            _ => {}
        }
        if self.workers == 0 {
            return Err(LevyError::param("sim.workers", "must be at least 1"));
        }
        if !(self.time_cap > 0.0) {
            return Err(LevyError::param("sim.time_cap", "must be positive"));
        }
        Ok(())
    }
}

/// `n` i.i.d. `Exp(Δ)` gaps.
pub fn sample_exponential_gaps<R: Rng + ?Sized>(rng: &mut R, delta: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| exp_gap(rng, delta)).collect()
}

/// A point of the fine path, tagged with the skeleton interval it lies in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinePoint {
    pub t: f64,
    pub x: f64,
    pub interval: usize,
}

/// One simulated skeleton with `n` big jumps and `n + 1` intervals.
///
/// Indexing: `taus[0..=n+1]`, `jumps[r - 1] = J_r` for `r = 1..=n`, and all
/// per-interval vectors (`small_increments`, `m_tilde`, `i_tilde`, `s_hat`,
/// `upper`, `lower`) have length `n + 1` with entry `k` describing
/// `[τ_k, τ_{k+1})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkeletonPath {
    pub taus: Vec<f64>,
    pub jumps: Vec<f64>,
    pub small_increments: Vec<f64>,
    pub m_tilde: Vec<f64>,
    pub i_tilde: Vec<f64>,
    pub s_hat: Vec<f64>,
    /// `M_k`, the supremum of `X` over interval `k`.
    pub upper: Vec<f64>,
    /// `I_k`, the infimum of `X` over interval `k`.
    pub lower: Vec<f64>,
    pub fine: Option<Vec<FinePoint>>,
}

impl SkeletonPath {
    /// Build from holding times `e_0..=e_n`, jumps `J_1..=J_n` and the
    /// interval results. `traces[k]` holds `(s, X̃)` relative to `τ_k`.
    pub fn assemble(
        holding: &[f64],
        jumps: Vec<f64>,
        intervals: &[IntervalExtremes],
        traces: Option<Vec<Vec<(f64, f64)>>>,
    ) -> Self {
        let n = jumps.len();
        assert_eq!(holding.len(), n + 1, "need one holding time per interval");
        assert_eq!(intervals.len(), n + 1, "need one interval result per interval");
        let mut taus = Vec::with_capacity(n + 2);
        taus.push(0.0);
        for e in holding {
            taus.push(taus.last().copied().unwrap_or(0.0) + e);
        }
        let small_increments: Vec<f64> = intervals.iter().map(|i| i.increment).collect();
        let m_tilde: Vec<f64> = intervals.iter().map(|i| i.sup).collect();
        let i_tilde: Vec<f64> = intervals.iter().map(|i| i.inf).collect();
        let mut s_hat = Vec::with_capacity(n + 1);
        s_hat.push(0.0);
        for r in 1..=n {
            s_hat.push(s_hat[r - 1] + small_increments[r - 1] + jumps[r - 1]);
        }
        let upper = s_hat.iter().zip(&m_tilde).map(|(s, m)| s + m).collect();
        let lower = s_hat.iter().zip(&i_tilde).map(|(s, i)| s + i).collect();
        let fine = traces.map(|traces| {
            traces
                .into_iter()
                .enumerate()
                .flat_map(|(k, trace)| {
                    let (t0, s0) = (taus[k], s_hat[k]);
                    trace.into_iter().map(move |(s, x)| FinePoint {
                        t: t0 + s,
                        x: s0 + x,
                        interval: k,
                    })
                })
                .collect()
        });
        Self {
            taus,
            jumps,
            small_increments,
            m_tilde,
            i_tilde,
            s_hat,
            upper,
            lower,
            fine,
        }
    }

    /// Number of big jumps `n`.
    pub fn steps(&self) -> usize {
        self.jumps.len()
    }

    /// Number of fine points outside `[I_k, M_k]` of their interval by more
    /// than `tol`; `None` without a fine path.
    pub fn containment_violations(&self, tol: f64) -> Option<usize> {
        let fine = self.fine.as_ref()?;
        Some(
            fine.iter()
                .filter(|p| p.x > self.upper[p.interval] + tol || p.x < self.lower[p.interval] - tol)
                .count(),
        )
    }

    /// Path of `-X`: jumps, increments and values negate, extremes swap.
    pub fn negated(&self) -> SkeletonPath {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        SkeletonPath {
            taus: self.taus.clone(),
            jumps: neg(&self.jumps),
            small_increments: neg(&self.small_increments),
            m_tilde: neg(&self.i_tilde),
            i_tilde: neg(&self.m_tilde),
            s_hat: neg(&self.s_hat),
            upper: neg(&self.lower),
            lower: neg(&self.upper),
            fine: self.fine.as_ref().map(|f| {
                f.iter()
                    .map(|p| FinePoint { x: -p.x, ..*p })
                    .collect()
            }),
        }
    }

    /// Rows `t,x` of the fine path.
    pub fn path_csv(&self) -> String {
        let mut out = String::from("t,x\n");
        for p in self.fine.iter().flatten() {
            out.push_str(&format!("{},{}\n", p.t, p.x));
        }
        out
    }

    /// One row per interval.
    pub fn skeleton_csv(&self) -> String {
        let mut out = String::from("n,tau,jump,s_hat,small_increment,m_tilde,i_tilde,upper,lower\n");
        for k in 0..self.s_hat.len() {
            let jump = if k == 0 { 0.0 } else { self.jumps[k - 1] };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                k,
                self.taus[k],
                jump,
                self.s_hat[k],
                self.small_increments[k],
                self.m_tilde[k],
                self.i_tilde[k],
                self.upper[k],
                self.lower[k]
            ));
        }
        out
    }
}

/// Decomposition plus small-process simulator, ready to sample paths.
#[derive(Debug, Clone)]
pub struct PathEngine {
    decomposition: Decomposition,
    small: SmallProcess,
    config: SimConfig,
}

impl PathEngine {
    pub fn new(decomposition: Decomposition, config: SimConfig) -> Result<Self> {
        let small = SmallProcess::new(&decomposition, &config)?;
        Ok(Self {
            decomposition,
            small,
            config,
        })
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn small(&self) -> &SmallProcess {
        &self.small
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn holding<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        exp_gap(rng, self.decomposition.delta())
    }

    /// Skeleton with `n` big jumps.
    pub fn skeleton<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, fine: bool) -> SkeletonPath {
        self.build(rng, fine, |k, _| k < n)
    }

    /// Skeleton containing every big jump up to time `t`.
    pub fn skeleton_until<R: Rng + ?Sized>(&self, rng: &mut R, t: f64, fine: bool) -> SkeletonPath {
        self.build(rng, fine, |_, tau| tau <= t)
    }

    pub fn skeleton_for<R: Rng + ?Sized>(&self, rng: &mut R, horizon: Horizon, fine: bool) -> SkeletonPath {
        match horizon {
            Horizon::Steps(n) => self.skeleton(rng, n, fine),
            Horizon::Time(t) => self.skeleton_until(rng, t, fine),
        }
    }

    /// `more(k, τ_{k+1})` decides whether the jump ending interval `k` is
    /// part of the skeleton.
    fn build<R, F>(&self, rng: &mut R, fine: bool, more: F) -> SkeletonPath
    where
        R: Rng + ?Sized,
        F: Fn(usize, f64) -> bool,
    {
        let mut holding = Vec::new();
        let mut jumps = Vec::new();
        let mut intervals = Vec::new();
        let mut traces = fine.then(Vec::new);
        let mut tau = 0.0;
        loop {
            let e = self.holding(rng);
            let mut trace = fine.then(Vec::new);
            intervals.push(self.small.simulate(rng, e, trace.as_mut()));
            if let (Some(all), Some(t)) = (traces.as_mut(), trace) {
                all.push(t);
            }
            holding.push(e);
            tau += e;
            let k = holding.len() - 1;
            if !more(k, tau) {
                break;
            }
            jumps.push(self.decomposition.sample_big_jump(rng));
        }
        SkeletonPath::assemble(&holding, jumps, &intervals, traces)
    }

    /// `Ŝ_n` alone, without extremes.
    pub fn walk_endpoint<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> f64 {
        let mut s = 0.0;
        for _ in 0..n {
            let e = self.holding(rng);
            s += self.small.sample_increment(rng, e);
            s += self.decomposition.sample_big_jump(rng);
        }
        s
    }

    /// Exact draw of `X_t` (up to the small-jump stand-in): a Poisson number
    /// of big jumps plus an independent small-process increment.
    pub fn value_at<R: Rng + ?Sized>(&self, rng: &mut R, t: f64) -> f64 {
        let count = poisson(rng, self.decomposition.delta() * t);
        let mut x = 0.0;
        for _ in 0..count {
            x += self.decomposition.sample_big_jump(rng);
        }
        x + self.small.sample_increment(rng, t)
    }

    /// `(X_t, N_t, Σ_{i ≤ N_t} J_i, X̃_t)` from one path, for checks of the
    /// decomposition algebra.
    pub fn components_at<R: Rng + ?Sized>(&self, rng: &mut R, t: f64) -> PathComponents {
        let mut tau = 0.0;
        let mut x = 0.0;
        let mut small = 0.0;
        let mut big = 0.0;
        let mut count = 0;
        loop {
            let e = self.holding(rng);
            if tau + e > t {
                let inc = self.small.sample_increment(rng, t - tau);
                small += inc;
                x += inc;
                break;
            }
            let inc = self.small.sample_increment(rng, e);
            let j = self.decomposition.sample_big_jump(rng);
            small += inc;
            big += j;
            x += inc + j;
            tau += e;
            count += 1;
        }
        PathComponents {
            x,
            jump_count: count,
            jump_sum: big,
            small,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponents {
    /// `X_t`, accumulated step by step.
    pub x: f64,
    pub jump_count: usize,
    pub jump_sum: f64,
    /// `X̃_t`.
    pub small: f64,
}

/// One skeleton with `n` jumps, without a fine path.
pub fn sample_skeleton<R: Rng + ?Sized>(
    rng: &mut R,
    decomposition: &Decomposition,
    n: usize,
    config: &SimConfig,
) -> Result<SkeletonPath> {
    let engine = PathEngine::new(decomposition.clone(), config.clone())?;
    Ok(engine.skeleton(rng, n, false))
}
