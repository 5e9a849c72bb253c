//! Run configuration read from TOML.
//!
//! ```toml
//! [triplet]
//! gamma = 0.0
//! sigma2 = 1.0
//! measure = { kind = "atoms", atoms = [[1.5, 1.0], [-2.5, 1.0]] }
//!
//! [cutoff]
//! eta_minus = 1.0
//! eta_plus = 1.0
//!
//! [sim]
//! seed = 7
//! grid_step = 0.01
//! steps = 5
//! replications = 10000
//!
//! [params]
//! suite = "thm11"
//! ```

use serde::{Deserialize, Serialize};

use crate::asymptotics::{geometric_grid, Thresholds};
use crate::decomposition::{auto_cutoff, Cutoff};
use crate::error::{LevyError, Result};
use crate::measure::LevyTriplet;
use crate::path::{Horizon, SimConfig, SmallMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub triplet: LevyTriplet,
    #[serde(default)]
    pub cutoff: Option<Cutoff>,
    #[serde(default)]
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub seed: u64,
    pub grid_step: f64,
    pub inner_cutoff: f64,
    pub steps: Option<usize>,
    pub time: Option<f64>,
    pub replications: usize,
    pub workers: usize,
    pub time_cap: f64,
    pub small_mode: SmallMode,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            seed: d.seed,
            grid_step: d.grid_step,
            inner_cutoff: d.inner_cutoff,
            steps: None,
            time: None,
            replications: 1000,
            workers: d.workers,
            time_cap: d.time_cap,
            small_mode: d.small_mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricGrid {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Sandwich,
    Wienerhopf,
    Thm11,
    Prop12,
    Identity25,
}

impl std::str::FromStr for Suite {
    type Err = LevyError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sandwich" => Suite::Sandwich,
            "wienerhopf" => Suite::Wienerhopf,
            "thm11" => Suite::Thm11,
            "prop12" => Suite::Prop12,
            "identity25" => Suite::Identity25,
            _ => {
                return Err(LevyError::param(
                    "params.suite",
                    format!("unknown suite `{s}` (expected sandwich, wienerhopf, thm11, prop12 or identity25)"),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub x_grid: Option<Vec<f64>>,
    pub x_geometric: Option<GeometricGrid>,
    pub t_list: Vec<f64>,
    pub r_list: Vec<f64>,
    pub alpha: f64,
    pub levels: Vec<f64>,
    pub suite: Option<Suite>,
    pub n: Option<usize>,
    pub t: Option<f64>,
    pub level: f64,
    pub thresholds: Thresholds,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            x_grid: None,
            x_geometric: None,
            t_list: Vec::new(),
            r_list: Vec::new(),
            alpha: 1.0,
            levels: Vec::new(),
            suite: None,
            n: None,
            t: None,
            level: 0.01,
            thresholds: Thresholds::default(),
        }
    }
}

impl RunConfig {
    /// Parse and validate. Errors name the offending key path.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| LevyError::param("<document>", e.message()))?;
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().message().to_string();
            LevyError::param(key_for(&path, &message), message)
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.triplet.validate().map_err(|e| match e {
            LevyError::InvalidParameter { key, message } => LevyError::param(format!("triplet.{key}"), message),
            other => other,
        })?;
        if let Some(c) = &self.cutoff {
            c.validate()?;
        }
        if let Some(s) = &self.sim {
            if s.steps.is_some() && s.time.is_some() {
                return Err(LevyError::param("sim", "give either `steps` or `time`, not both"));
            }
            if s.replications == 0 {
                return Err(LevyError::param("sim.replications", "must be at least 1"));
            }
            self.sim_config().validate()?;
        }
        let p = &self.params;
        if p.x_grid.is_some() && p.x_geometric.is_some() {
            return Err(LevyError::param("params", "give either `x_grid` or `x_geometric`, not both"));
        }
        if let Some(g) = &p.x_geometric {
            if !(g.from > 0.0 && g.to > g.from && g.points >= 2) {
                return Err(LevyError::param("params.x_geometric", "need 0 < from < to and points >= 2"));
            }
        }
        if let Some(g) = &p.x_grid {
            if g.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(LevyError::param("params.x_grid", "values must be positive and finite"));
            }
        }
        for (key, list) in [("params.t_list", &p.t_list), ("params.r_list", &p.r_list)] {
            if list.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(LevyError::param(key, "values must be positive and finite"));
            }
        }
        if !(p.alpha > 0.0) {
            return Err(LevyError::param("params.alpha", "must be positive"));
        }
        if !(p.level > 0.0 && p.level < 1.0) {
            return Err(LevyError::param("params.level", "must lie in (0, 1)"));
        }
        for (i, w) in p.levels.windows(2).enumerate() {
            if w[1] >= w[0] {
                return Err(LevyError::param(format!("params.levels[{}]", i + 1), "levels must decrease strictly"));
            }
        }
        if let Some(eps) = self.sim.as_ref().map(|s| s.inner_cutoff) {
            let floor = p.levels.last().copied().unwrap_or(f64::INFINITY);
            if eps > 0.0 && eps >= floor {
                return Err(LevyError::param("sim.inner_cutoff", "must be below the finest level"));
            }
        }
        Ok(())
    }

    /// Simulation settings; defaults when there is no `[sim]` section.
    pub fn sim_config(&self) -> SimConfig {
        let s = self.sim.clone().unwrap_or_default();
        let horizon = match (s.steps, s.time) {
            (_, Some(t)) => Horizon::Time(t),
            (Some(n), None) => Horizon::Steps(n),
            (None, None) => Horizon::default(),
        };
        SimConfig {
            seed: s.seed,
            grid_step: s.grid_step,
            inner_cutoff: s.inner_cutoff,
            horizon,
            workers: s.workers,
            time_cap: s.time_cap,
            small_mode: s.small_mode,
        }
    }

    pub fn replications(&self) -> usize {
        self.sim.as_ref().map_or(SimSection::default().replications, |s| s.replications)
    }

    /// The configured cutoff, or a unit-or-smaller one chosen automatically.
    pub fn cutoff(&self) -> Result<Cutoff> {
        match self.cutoff {
            Some(c) => Ok(c),
            None => auto_cutoff(&self.triplet),
        }
    }

    /// Evaluation points for tail tables.
    pub fn x_grid(&self) -> Result<Vec<f64>> {
        match (&self.params.x_grid, &self.params.x_geometric) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(g)) => Ok(geometric_grid(g.from, g.to, g.points)),
            (None, None) => Err(LevyError::param("params.x_grid", "missing (give x_grid or x_geometric)")),
        }
    }

    pub fn level_cutoffs(&self) -> Vec<Cutoff> {
        self.params.levels.iter().map(|&eta| Cutoff::symmetric(eta)).collect()
    }
}

/// Key path for a deserialization error; missing fields are appended.
fn key_for(path: &str, message: &str) -> String {
    let missing = message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next());
    match (path, missing) {
        (".", Some(field)) => field.to_string(),
        (p, Some(field)) => format!("{p}.{field}"),
        (p, None) => p.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BROWNIAN: &str = r#"
[triplet]
gamma = 0.5
sigma2 = 1.0
measure = { kind = "atoms", atoms = [[1.5, 1.0], [-2.5, 1.0]] }

[sim]
seed = 3
steps = 5
replications = 2000
small_mode = "exact"

[params]
suite = "thm11"
"#;

    #[test]
    fn parses_full_document() {
        let c = RunConfig::from_toml_str(BROWNIAN).unwrap();
        assert_eq!(c.triplet.gamma, 0.5);
        assert_eq!(c.params.suite, Some(Suite::Thm11));
        let sim = c.sim_config();
        assert_eq!(sim.horizon, Horizon::Steps(5));
        assert_eq!(sim.small_mode, SmallMode::Exact);
        assert_eq!(c.replications(), 2000);
        assert_eq!(c.cutoff().unwrap(), Cutoff::unit());
    }

    fn key_of(text: &str) -> String {
        match RunConfig::from_toml_str(text).unwrap_err() {
            LevyError::InvalidParameter { key, .. } => key,
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_measure_names_key() {
        assert_eq!(key_of("[triplet]\ngamma = 1.0\n"), "triplet.measure");
        assert_eq!(key_of("[params]\nalpha = 1.0\n"), "triplet");
    }

    #[test]
    fn bad_values_name_keys() {
        let text = BROWNIAN.replace("grid_step", "x").replace("steps = 5", "steps = 5\ngrid_step = -1.0");
        assert_eq!(key_of(&text), "sim.grid_step");
        let text = BROWNIAN.replace("sigma2 = 1.0", "sigma2 = -1.0");
        assert_eq!(key_of(&text), "triplet.sigma2");
        let text = BROWNIAN.replace("seed = 3", "seed = 3\nbogus = 1");
        assert!(key_of(&text).starts_with("sim"));
        let text = BROWNIAN.replace("\"thm11\"", "\"nope\"");
        assert_eq!(key_of(&text), "params.suite");
        let text = BROWNIAN.replace("[[1.5, 1.0]", "[[1.5, -1.0]");
        assert!(key_of(&text).starts_with("triplet.measure"));
    }

    #[test]
    fn geometric_grid_from_config() {
        let text = format!("{BROWNIAN}x_geometric = {{ from = 1.0, to = 1000.0, points = 4 }}\n");
        let c = RunConfig::from_toml_str(&text).unwrap();
        let g = c.x_grid().unwrap();
        assert_eq!(g.len(), 4);
        assert!((g[1] - 10.0).abs() < 1e-12);
    }
}
