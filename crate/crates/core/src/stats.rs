//! Statistical verification primitives.
//!
//! All critical values are asymptotic. A [`TestReport`] records the
//! statistic, the threshold it was held to, and whether the test was
//! vacuous (degenerate input or too few samples), in which case `passed`
//! carries no information.

use serde::Serialize;

use crate::error::{LevyError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub n_samples: usize,
    pub passed: bool,
    pub vacuous: bool,
    pub notes: Vec<String>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, threshold: f64, n_samples: usize) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            n_samples,
            passed: statistic <= threshold,
            vacuous: false,
            notes: Vec::new(),
        }
    }

    pub fn vacuous(name: impl Into<String>, n_samples: usize, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            statistic: f64::NAN,
            threshold: f64::NAN,
            n_samples,
            passed: false,
            vacuous: true,
            notes: vec![note.into()],
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Failed and not vacuous.
    pub fn is_failure(&self) -> bool {
        !self.vacuous && !self.passed
    }

    pub fn status(&self) -> &'static str {
        match (self.vacuous, self.passed) {
            (true, _) => "VACUOUS",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        }
    }
}

/// Asymptotic Kolmogorov critical value `c(α) = √(-ln(α/2) / 2)`;
/// `c(0.01) ≈ 1.628`.
pub fn ks_critical(level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt()
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^(k-1) e^(-2k²λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Sup distance between the two empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let a = sorted(a);
    let b = sorted(b);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(LevyError::EmptySample("ks_two_sample needs two nonempty samples".into()));
    }
    let (n, m) = (a.len() as f64, b.len() as f64);
    let threshold = ks_critical(level) * ((n + m) / (n * m)).sqrt();
    Ok(TestReport::new("ks_two_sample", ks_statistic(a, b), threshold, a.len() + b.len()))
}

/// One-sample KS against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(a: &[f64], cdf: F, level: f64) -> Result<TestReport> {
    if a.is_empty() {
        return Err(LevyError::EmptySample("ks_one_sample needs a nonempty sample".into()));
    }
    let s = sorted(a);
    let n = s.len() as f64;
    let d = s.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        acc.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    });
    Ok(TestReport::new("ks_one_sample", d, ks_critical(level) / n.sqrt(), a.len()))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// Pearson correlation; `None` if either margin is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let (mx, my) = (mean(&x[..n]), mean(&y[..n]));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Ranks starting at 1, ties averaged.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut out = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            out[i] = avg;
        }
        start = end;
    }
    out
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// Independence screen: both `|ρ_Pearson|` and `|ρ_Spearman|` must stay
/// below `multiplier / √n`.
pub fn correlation_bound(pairs: &[(f64, f64)], multiplier: f64) -> TestReport {
    let n = pairs.len();
    let name = "correlation_bound";
    if n < 100 {
        return TestReport::vacuous(name, n, format!("needs at least 100 pairs, got {n}"));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    match (pearson(&x, &y), spearman(&x, &y)) {
        (Some(p), Some(s)) => TestReport::new(name, p.abs().max(s.abs()), multiplier / (n as f64).sqrt(), n)
            .with_note(format!("pearson = {p}"))
            .with_note(format!("spearman = {s}")),
        _ => TestReport::vacuous(name, n, "constant margin, correlation undefined"),
    }
}

/// `(p̂, z √(p̂(1-p̂)/n))`.
pub fn proportion_ci(successes: usize, n: usize, z: f64) -> (f64, f64) {
    assert!(n >= 1, "proportion_ci needs n >= 1");
    let p = successes as f64 / n as f64;
    if successes == 0 || successes == n {
        log::warn!("proportion {successes}/{n} sits on the boundary; the Wald half-width is zero");
    }
    (p, z * (p * (1.0 - p) / n as f64).sqrt())
}

struct Fenwick(Vec<usize>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick(vec![0; n + 1])
    }

    fn add(&mut self, mut i: usize) {
        i += 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of the first `k` slots.
    fn prefix(&self, mut k: usize) -> usize {
        let mut s = 0;
        while k > 0 {
            s += self.0[k];
            k -= k & k.wrapping_neg();
        }
        s
    }
}

fn upper_bound(sorted: &[f64], v: f64) -> usize {
    sorted.partition_point(|&x| x <= v)
}

/// Quadrant fractions `[≤≤, ≤>, >≤, >>]` of `sample` around each query.
fn quadrant_fractions(sample: &[(f64, f64)], queries: &[(f64, f64)]) -> Vec<[f64; 4]> {
    let n = sample.len();
    let mut by_x: Vec<(f64, f64)> = sample.to_vec();
    by_x.sort_by(|a, b| a.0.total_cmp(&b.0));
    let xs: Vec<f64> = by_x.iter().map(|p| p.0).collect();
    let ys = sorted(&sample.iter().map(|p| p.1).collect::<Vec<_>>());

    let mut order: Vec<usize> = (0..queries.len()).collect();
    order.sort_by(|&i, &j| queries[i].0.total_cmp(&queries[j].0));
    let mut tree = Fenwick::new(n);
    let mut added = 0;
    let mut out = vec![[0.0; 4]; queries.len()];
    for q in order {
        let (px, py) = queries[q];
        while added < n && by_x[added].0 <= px {
            // rank among sorted y values; ties share the last slot which is
            // fine because only prefix counts up to `upper_bound` are read
            let r = upper_bound(&ys, by_x[added].1) - 1;
            tree.add(r);
            added += 1;
        }
        let ll = tree.prefix(upper_bound(&ys, py));
        let lx = upper_bound(&xs, px);
        let ly = upper_bound(&ys, py);
        let nf = n as f64;
        out[q] = [
            ll as f64 / nf,
            (lx - ll) as f64 / nf,
            (ly - ll) as f64 / nf,
            (n + ll - lx - ly) as f64 / nf,
        ];
    }
    out
}

/// Two-dimensional two-sample KS (Fasano–Franceschini statistic with the
/// Press–Teukolsky significance approximation).
pub fn ks_two_sample_2d(a: &[(f64, f64)], b: &[(f64, f64)], level: f64) -> Result<TestReport> {
    if a.len() < 2 || b.len() < 2 {
        return Err(LevyError::EmptySample("ks_two_sample_2d needs at least two points per sample".into()));
    }
    let mut queries = a.to_vec();
    queries.extend_from_slice(b);
    let fa = quadrant_fractions(a, &queries);
    let fb = quadrant_fractions(b, &queries);
    let d = fa
        .iter()
        .zip(&fb)
        .flat_map(|(p, q)| (0..4).map(move |k| (p[k] - q[k]).abs()))
        .fold(0.0, f64::max);

    let corr = |s: &[(f64, f64)]| {
        let (x, y): (Vec<f64>, Vec<f64>) = s.iter().copied().unzip();
        pearson(&x, &y).unwrap_or(0.0)
    };
    let r = 0.5 * (corr(a) + corr(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let ne = n * m / (n + m);
    let scale = 1.0 + (1.0 - r * r).sqrt() * (0.25 - 0.75 / ne.sqrt());
    let threshold = ks_critical(level) * scale / ne.sqrt();
    let p_value = kolmogorov_q(ne.sqrt() * d / scale);
    Ok(TestReport::new("ks_two_sample_2d", d, threshold, a.len() + b.len()).with_note(format!("p-value ≈ {p_value:.4}")))
}
