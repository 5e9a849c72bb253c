use approx::assert_relative_eq;
use levy_bounds::asymptotics::{classify, geometric_grid, mc_positivity, Branch, Thresholds, Verdict};
use levy_bounds::measure::{
    mean_ex1, tail_minus, tail_plus, trunc_mean_a, trunc_mean_a_quadrature, trunc_second_u, trunc_second_u_quadrature,
    MeanValue, PowerSide, Side,
};
use levy_bounds::path::exact_brownian_sup_sampler;
use levy_bounds::stats::{ks_one_sample, mean_and_se};
use levy_bounds::streams::{replicate, stream, Purpose};
use levy_bounds::{decompose, Cutoff, LevyTriplet, MeasureSpec, PathEngine, SimConfig};

fn drift() -> LevyTriplet {
    let plus = PowerSide::new(0.5, 0.5).floored(1.0);
    let minus = PowerSide::new(2.0, 2.0).floored(1.0);
    LevyTriplet::new(0.0, 0.0, MeasureSpec::power(Some(plus), Some(minus))).unwrap()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn drift_fixture_closed_forms() {
    let t = drift();
    for x in geometric_grid(1.0, 1e8, 17) {
        let a = 2.0 * x.sqrt() - 3.0 + 1.0 / x;
        let u = 4.0 / 3.0 * x.powf(1.5) + 2.0 / 3.0 + 2.0 * x.ln();
        assert_relative_eq!(trunc_mean_a(&t, x).unwrap(), a, max_relative = 1e-10, epsilon = 1e-12);
        assert_relative_eq!(trunc_mean_a_quadrature(&t, x).unwrap(), a, max_relative = 1e-8, epsilon = 1e-10);
        assert_relative_eq!(trunc_second_u(&t, x).unwrap(), u, max_relative = 1e-10);
        assert_relative_eq!(trunc_second_u_quadrature(&t, x).unwrap(), u, max_relative = 1e-8);
        assert_relative_eq!(tail_plus(&t.measure, x).unwrap(), x.powf(-0.5), max_relative = 1e-12);
        assert_relative_eq!(tail_minus(&t.measure, x).unwrap(), x.powi(-2), max_relative = 1e-12);
    }
}

#[test]
fn tempered_moments_against_simpson() {
    let side = PowerSide::new(1.5, 0.7).tempered(2.0);
    let m = MeasureSpec::power(Some(side), None);
    let density = |x: f64| 1.5 * x.powf(-1.7) * (-2.0 * x).exp();
    for k in 0..3 {
        let want = simpson(|x| x.powi(k as i32) * density(x), 0.5, 40.0, 400_000);
        assert_relative_eq!(m.moment(Side::Plus, k, 0.5, f64::INFINITY).unwrap(), want, max_relative = 1e-8);
    }
    // second moment near zero: ∫_0^1 1.5 x^0.3 e^-2x dx, substitute x = s^(1/1.3)
    let want = simpson(
        |s: f64| {
            let x = s.powf(1.0 / 1.3);
            1.5 * (-2.0 * x).exp() / 1.3
        },
        0.0,
        1.0,
        200_000,
    );
    assert_relative_eq!(m.moment(Side::Plus, 2, 0.0, 1.0).unwrap(), want, max_relative = 1e-8);
}

#[test]
fn finite_mean_branch_with_negative_mean() {
    let t = LevyTriplet::new(1.0, 0.0, MeasureSpec::atoms([(-2.0, 1.0)])).unwrap();
    assert_eq!(mean_ex1(&t).unwrap(), MeanValue::Finite(-1.0));
    let r = classify(&t, &geometric_grid(1.0, 1e4, 12), Thresholds::default()).unwrap();
    assert_eq!(r.branch, Branch::FiniteMean);
    assert_eq!(r.verdict, Verdict::DoesNotDriftToPlusInfinity);
}

#[test]
fn drift_and_symmetric_verdicts() {
    let grid = geometric_grid(1.0, 1e8, 25);
    let r = classify(&drift(), &grid, Thresholds::default()).unwrap();
    assert_eq!(r.branch, Branch::Criterion);
    assert_eq!(r.verdict, Verdict::DriftsToPlusInfinity);
    let s = PowerSide::new(1.0, 1.2);
    let sym = LevyTriplet::new(0.0, 0.0, MeasureSpec::power(Some(s), Some(s))).unwrap();
    let r = classify(&sym, &grid, Thresholds::default()).unwrap();
    assert_eq!(r.verdict, Verdict::DoesNotDriftToPlusInfinity);
    assert!(r.grid.iter().all(|row| row.criterion == 0.0));
}

#[test]
fn exact_brownian_supremum_is_exponential() {
    // sup of B_t + μt at an Exp(Δ) time is Exp(θ₊), θ₊ = (√(μ² + 2σ²Δ) - μ)/σ²
    let (mu, s2, delta): (f64, f64, f64) = (0.3, 2.0, 1.5);
    let theta = ((mu * mu + 2.0 * s2 * delta).sqrt() - mu) / s2;
    let sups = replicate(11, Purpose::Reference, 20_000, 2, |_, rng| {
        exact_brownian_sup_sampler(rng, mu, s2, delta).unwrap().1
    });
    let (m, se) = mean_and_se(&sups);
    assert!((m - 1.0 / theta).abs() < 4.0 * se, "{m} vs {}", 1.0 / theta);
    let ks = ks_one_sample(&sups, |x| 1.0 - (-theta * x).exp(), 0.001).unwrap();
    assert!(ks.passed, "{ks:?}");
}

#[test]
fn big_jump_sampler_matches_its_law() {
    let s = PowerSide::new(1.0, 1.3);
    let t = LevyTriplet::new(0.0, 0.0, MeasureSpec::power(Some(s), Some(PowerSide::new(0.5, 0.8).tempered(1.0)))).unwrap();
    let d = decompose(&t, Cutoff::new(0.5, 2.0).unwrap()).unwrap();
    let mut rng = stream(12, 0);
    let draws: Vec<f64> = (0..20_000).map(|_| d.sample_big_jump(&mut rng)).collect();
    assert!(draws.iter().all(|&j| !(-0.5..=2.0).contains(&j)));
    let ks = ks_one_sample(&draws, |x| d.big_jump_cdf(x).unwrap(), 0.001).unwrap();
    assert!(ks.passed, "{ks:?}");
}

#[test]
fn compound_poisson_mean() {
    // E X_t = t (γ + Σ x Π{x}) when there is no small part
    let t = LevyTriplet::new(0.25, 0.0, MeasureSpec::atoms([(3.0, 0.5), (-1.5, 2.0)])).unwrap();
    let e = PathEngine::new(decompose(&t, Cutoff::unit()).unwrap(), SimConfig::default()).unwrap();
    let xs = replicate(13, Purpose::Auxiliary, 20_000, 2, |_, rng| e.value_at(rng, 4.0));
    let (m, se) = mean_and_se(&xs);
    assert!((m - 4.0 * (0.25 + 1.5 - 3.0)).abs() < 4.0 * se, "{m}");
}

#[test]
fn poisson_positivity_small_t() {
    // Only +1 jumps at rate 1: P(X_t > 0) = 1 - e^{-t}
    let t = LevyTriplet::new(0.0, 0.0, MeasureSpec::atoms([(1.0, 1.0)])).unwrap();
    let e = PathEngine::new(decompose(&t, Cutoff::symmetric(0.5)).unwrap(), SimConfig::default()).unwrap();
    let p = mc_positivity(&e, 0.7, 20_000).unwrap();
    assert!((p.estimate - (1.0 - (-0.7f64).exp())).abs() < 4.0 * p.stderr);
}
