use levy_bounds::asymptotics::{classify, criterion_value, mc_positivity as mc_positivity_core, Thresholds};
use levy_bounds::measure::{tail_minus, tail_plus, tail_report, trunc_mean_a, trunc_second_u, PowerSide};
use levy_bounds::sandwich::build_sandwich;
use levy_bounds::stats;
use levy_bounds::streams::stream;
use levy_bounds::{decompose, Cutoff, LevyError, LevyTriplet, MeasureSpec, SimConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: LevyError) -> PyErr {
    if e.is_config_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Lévy triplet `(γ, σ², Π)`.
#[pyclass(name = "Triplet", frozen)]
struct PyTriplet {
    inner: LevyTriplet,
}

type PowerArgs = (f64, f64, f64, f64);

fn power_side(p: Option<PowerArgs>) -> Option<PowerSide> {
    p.map(|(c, alpha, lambda, x_min)| PowerSide::new(c, alpha).tempered(lambda).floored(x_min))
}

#[pymethods]
impl PyTriplet {
    /// Finite measure of point masses `[(position, rate), ...]`.
    #[staticmethod]
    #[pyo3(signature = (gamma, atoms, sigma2 = 0.0))]
    fn atoms(gamma: f64, atoms: Vec<(f64, f64)>, sigma2: f64) -> PyResult<Self> {
        let inner = LevyTriplet::new(gamma, sigma2, MeasureSpec::atoms(atoms)).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Power-law sides given as `(c, alpha, lambda, x_min)`.
    #[staticmethod]
    #[pyo3(signature = (gamma, plus = None, minus = None, sigma2 = 0.0))]
    fn power(gamma: f64, plus: Option<PowerArgs>, minus: Option<PowerArgs>, sigma2: f64) -> PyResult<Self> {
        let m = MeasureSpec::power(power_side(plus), power_side(minus));
        let inner = LevyTriplet::new(gamma, sigma2, m).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Parse the `[triplet]` table format, without the header.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner: LevyTriplet = toml::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.sigma2
    }

    fn tail_plus(&self, x: f64) -> PyResult<f64> {
        tail_plus(&self.inner.measure, x).map_err(to_py)
    }

    fn tail_minus(&self, x: f64) -> PyResult<f64> {
        tail_minus(&self.inner.measure, x).map_err(to_py)
    }

    fn trunc_mean(&self, x: f64) -> PyResult<f64> {
        trunc_mean_a(&self.inner, x).map_err(to_py)
    }

    fn trunc_second(&self, x: f64) -> PyResult<f64> {
        trunc_second_u(&self.inner, x).map_err(to_py)
    }

    fn criterion(&self, x: f64) -> PyResult<f64> {
        Ok(criterion_value(&self.inner, x).map_err(to_py)?.as_f64())
    }

    /// Row of the tail table as a dict keyed x, N, M, T, D, A, U, criterion.
    fn tail_report<'py>(&self, py: Python<'py>, x: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = tail_report(&self.inner, x).map_err(to_py)?;
        let d = PyDict::new(py);
        for (k, v) in [
            ("x", r.x),
            ("N", r.n_plus),
            ("M", r.m_minus),
            ("T", r.t_sum),
            ("D", r.d_diff),
            ("A", r.a_trunc),
            ("U", r.u_trunc),
            ("criterion", r.criterion),
        ] {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    /// `(verdict, branch)` over the evaluation grid.
    fn classify(&self, x_grid: Vec<f64>) -> PyResult<(String, String)> {
        let r = classify(&self.inner, &x_grid, Thresholds::default()).map_err(to_py)?;
        let branch = match r.branch {
            levy_bounds::asymptotics::Branch::Criterion => "criterion",
            levy_bounds::asymptotics::Branch::FiniteMean => "finite-mean",
        };
        Ok((format!("{:?}", r.verdict), branch.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("Triplet(gamma={}, sigma2={}, measure={:?})", self.inner.gamma, self.inner.sigma2, self.inner.measure)
    }
}

/// Big/small split at the cutoff interval `[-eta_minus, eta_plus]`.
#[pyclass(name = "Decomposition", frozen)]
struct PyDecomposition {
    inner: levy_bounds::Decomposition,
}

#[pymethods]
impl PyDecomposition {
    #[new]
    #[pyo3(signature = (triplet, eta_minus = 1.0, eta_plus = 1.0))]
    fn new(triplet: &PyTriplet, eta_minus: f64, eta_plus: f64) -> PyResult<Self> {
        let cutoff = Cutoff::new(eta_minus, eta_plus).map_err(to_py)?;
        let inner = decompose(&triplet.inner, cutoff).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn small_drift(&self) -> f64 {
        self.inner.small_drift()
    }

    /// Simulate `n` big-jump intervals with a fine path.
    #[pyo3(signature = (n, seed = 0, grid_step = 0.01, inner_cutoff = 0.0))]
    fn skeleton(&self, n: usize, seed: u64, grid_step: f64, inner_cutoff: f64) -> PyResult<PySkeletonPath> {
        let engine = engine(&self.inner, seed, grid_step, inner_cutoff)?;
        Ok(PySkeletonPath {
            inner: engine.skeleton(&mut stream(seed, 0), n, true),
        })
    }

    /// `(estimate, stderr)` of `P(X_t > 0)`.
    #[pyo3(signature = (t, n_reps, seed = 0))]
    fn mc_positivity(&self, py: Python<'_>, t: f64, n_reps: usize, seed: u64) -> PyResult<(f64, f64)> {
        let engine = engine(&self.inner, seed, SimConfig::default().grid_step, 0.0)?;
        let p = py.detach(|| mc_positivity_core(&engine, t, n_reps)).map_err(to_py)?;
        Ok((p.estimate, p.stderr))
    }
}

fn engine(d: &levy_bounds::Decomposition, seed: u64, grid_step: f64, inner_cutoff: f64) -> PyResult<levy_bounds::PathEngine> {
    let config = SimConfig {
        seed,
        grid_step,
        inner_cutoff,
        ..SimConfig::default()
    };
    levy_bounds::PathEngine::new(d.clone(), config).map_err(to_py)
}

#[pyclass(name = "SkeletonPath", frozen)]
struct PySkeletonPath {
    inner: levy_bounds::SkeletonPath,
}

#[pymethods]
impl PySkeletonPath {
    #[getter]
    fn taus(&self) -> Vec<f64> {
        self.inner.taus.clone()
    }

    #[getter]
    fn jumps(&self) -> Vec<f64> {
        self.inner.jumps.clone()
    }

    #[getter]
    fn s_hat(&self) -> Vec<f64> {
        self.inner.s_hat.clone()
    }

    #[getter]
    fn m_tilde(&self) -> Vec<f64> {
        self.inner.m_tilde.clone()
    }

    #[getter]
    fn i_tilde(&self) -> Vec<f64> {
        self.inner.i_tilde.clone()
    }

    #[getter]
    fn upper(&self) -> Vec<f64> {
        self.inner.upper.clone()
    }

    #[getter]
    fn lower(&self) -> Vec<f64> {
        self.inner.lower.clone()
    }

    /// Fine path as `[(t, x), ...]`.
    #[getter]
    fn fine(&self) -> Vec<(f64, f64)> {
        self.inner.fine.iter().flatten().map(|p| (p.t, p.x)).collect()
    }

    #[pyo3(signature = (tol = 1e-12))]
    fn containment_violations(&self, tol: f64) -> Option<usize> {
        self.inner.containment_violations(tol)
    }

    /// Sandwich walks as a dict with s_plus, s_minus, m0, i0.
    fn sandwich<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let w = build_sandwich(&self.inner);
        let d = PyDict::new(py);
        d.set_item("s_plus", w.s_plus)?;
        d.set_item("s_minus", w.s_minus)?;
        d.set_item("m0", w.m0)?;
        d.set_item("i0", w.i0)?;
        Ok(d)
    }

    fn __len__(&self) -> usize {
        self.inner.steps()
    }
}

/// Two-sample KS test: `(statistic, critical value, passed)`.
#[pyfunction]
#[pyo3(signature = (a, b, level = 0.01))]
fn ks_two_sample(a: Vec<f64>, b: Vec<f64>, level: f64) -> PyResult<(f64, f64, bool)> {
    let r = stats::ks_two_sample(&a, &b, level).map_err(to_py)?;
    Ok((r.statistic, r.threshold, r.passed))
}

#[pymodule]
#[pyo3(name = "levy_bounds")]
fn levy_bounds_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTriplet>()?;
    m.add_class::<PyDecomposition>()?;
    m.add_class::<PySkeletonPath>()?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    Ok(())
}
