//! Scenario files: TOML with `[window]`, `[model]`, `[run]` and an
//! optional `[verify]` section.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Configuration, RadialBins, TorusWindow};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::models::{ModelSpec, Regime};
use crate::simulator::{default_pair_bins, InitialState, Scenario, DEFAULT_POPULATION_CAP};

pub const DEFAULT_REPLICAS: usize = 100;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    window: RawWindow,
    model: RawModel,
    run: RawRun,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verify: Option<RawVerify>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    dimension: usize,
    side: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    regime: Suite,
    sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mortality: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<KernelFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel: Option<KernelFamily>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    t_end: f64,
    sample_times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_intensity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    population_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    record_snapshots: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pair_bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pair_r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pair_edges: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    suite: Option<Suite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mortality: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi_mass_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    second_order: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    superstability: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    extra_sides: Vec<f64>,
}

/// Regime names as they appear in files; also names the verification suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Free,
    GlobalRegulation,
    Establishment,
    Competition,
    Glauber,
}

impl Suite {
    pub fn of(regime: &Regime) -> Suite {
        match regime {
            Regime::Free => Suite::Free,
            Regime::GlobalRegulation { .. } => Suite::GlobalRegulation,
            Regime::Establishment { .. } => Suite::Establishment,
            Regime::Competition { .. } => Suite::Competition,
            Regime::Glauber { .. } => Suite::Glauber,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Free => "free",
            Suite::GlobalRegulation => "global-regulation",
            Suite::Establishment => "establishment",
            Suite::Competition => "competition",
            Suite::Glauber => "glauber",
        }
    }
}

/// Resolved `[verify]` section. `None` fields fall back to the model's
/// own parameters; overrides exist for negative controls.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifySpec {
    pub suite: Suite,
    pub sigma: Option<f64>,
    pub mortality: Option<f64>,
    pub k0: Option<f64>,
    pub phi_mass_scale: f64,
    pub f_constant: Option<f64>,
    pub c_scale: f64,
    pub second_order: bool,
    pub superstability: bool,
    pub extra_sides: Vec<f64>,
}

impl VerifySpec {
    pub fn for_suite(suite: Suite) -> Self {
        VerifySpec {
            suite,
            sigma: None,
            mortality: None,
            k0: None,
            phi_mass_scale: 1.0,
            f_constant: None,
            c_scale: 1.0,
            second_order: true,
            superstability: true,
            extra_sides: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub replicas: usize,
    pub verify: Option<VerifySpec>,
}

fn require<T>(v: Option<T>, what: &str, regime: Suite) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("regime {} requires model.{what}", regime.name())))
}

fn kernel(family: KernelFamily, d: usize, what: &str) -> Result<KernelSpec> {
    KernelSpec::new(family, d).map_err(|e| Error::Config(format!("model.{what}: {e}")))
}

fn build(raw: RawFile) -> Result<ScenarioConfig> {
    let cfg_err = |e: Error| match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    };
    let window = TorusWindow::new(raw.window.dimension, raw.window.side).map_err(cfg_err)?;
    let d = window.dimension();
    let m = raw.model;
    let regime = match m.regime {
        Suite::Free => Regime::Free,
        Suite::GlobalRegulation => Regime::GlobalRegulation {
            mortality: require(m.mortality, "mortality", m.regime)?,
        },
        Suite::Establishment => Regime::Establishment {
            phi: kernel(require(m.phi, "phi", m.regime)?, d, "phi")?,
        },
        Suite::Competition => Regime::Competition {
            kernel: kernel(require(m.kernel, "kernel", m.regime)?, d, "kernel")?,
        },
        Suite::Glauber => Regime::Glauber {
            mortality: require(m.mortality, "mortality", m.regime)?,
            phi: kernel(require(m.phi, "phi", m.regime)?, d, "phi")?,
        },
    };
    let model = ModelSpec::new(m.sigma, regime).map_err(cfg_err)?;

    let run = raw.run;
    let initial = match (run.initial_intensity, run.initial_points) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("give either run.initial_intensity or run.initial_points, not both".into()))
        }
        (Some(intensity), None) => InitialState::Poisson { intensity },
        (None, Some(points)) => InitialState::Explicit(Configuration::from_points(&window, &points).map_err(cfg_err)?),
        (None, None) => InitialState::Poisson { intensity: 0.0 },
    };
    let pair_bins = match (run.pair_edges, run.pair_bins, run.pair_r_max) {
        (Some(edges), None, None) => RadialBins::new(edges).map_err(cfg_err)?,
        (Some(_), _, _) => return Err(Error::Config("run.pair_edges excludes pair_bins and pair_r_max".into())),
        (None, None, None) => default_pair_bins(&model, &window).map_err(cfg_err)?,
        (None, n, r) => {
            let default = default_pair_bins(&model, &window).map_err(cfg_err)?;
            RadialBins::uniform(n.unwrap_or(default.len()), r.unwrap_or(default.r_max())).map_err(cfg_err)?
        }
    };
    let scenario = Scenario {
        model,
        window,
        initial,
        t_end: run.t_end,
        sample_times: run.sample_times,
        population_cap: run.population_cap.unwrap_or(DEFAULT_POPULATION_CAP),
        seed: run.seed.unwrap_or(0),
        pair_bins,
        record_snapshots: run.record_snapshots.unwrap_or(false),
    };
    scenario.validate().map_err(cfg_err)?;
    let replicas = run.replicas.unwrap_or(DEFAULT_REPLICAS);
    if replicas == 0 {
        return Err(Error::Config("run.replicas must be at least 1".into()));
    }

    let default_suite = Suite::of(scenario.model.regime());
    let verify = raw.verify.map(|v| {
        let base = VerifySpec::for_suite(v.suite.unwrap_or(default_suite));
        VerifySpec {
            sigma: v.sigma,
            mortality: v.mortality,
            k0: v.k0,
            phi_mass_scale: v.phi_mass_scale.unwrap_or(base.phi_mass_scale),
            f_constant: v.f_constant,
            c_scale: v.c_scale.unwrap_or(base.c_scale),
            second_order: v.second_order.unwrap_or(base.second_order),
            superstability: v.superstability.unwrap_or(base.superstability),
            extra_sides: v.extra_sides,
            ..base
        }
    });
    if let Some(v) = &verify {
        if v.suite != default_suite {
            return Err(Error::Config(format!(
                "verify.suite {} does not match model regime {}",
                v.suite.name(),
                default_suite.name()
            )));
        }
        for &side in &v.extra_sides {
            if !(side > 0.0) || side < 2.0 * (scenario.model.interaction_range()).max(scenario.pair_bins.r_max()) {
                return Err(Error::Config(format!(
                    "verify.extra_sides entry {side} must be at least twice the kernel cutoff and pair range"
                )));
            }
        }
    }
    Ok(ScenarioConfig {
        scenario,
        replicas,
        verify,
    })
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    build(raw)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Canonical TOML text of a configuration; parses back to an equal value.
pub fn to_toml(cfg: &ScenarioConfig) -> String {
    let s = &cfg.scenario;
    let (mortality, phi, kernel) = match s.model.regime() {
        Regime::Free => (None, None, None),
        Regime::GlobalRegulation { mortality } => (Some(*mortality), None, None),
        Regime::Establishment { phi } => (None, Some(phi.family().clone()), None),
        Regime::Competition { kernel } => (None, None, Some(kernel.family().clone())),
        Regime::Glauber { mortality, phi } => (Some(*mortality), Some(phi.family().clone()), None),
    };
    let (initial_intensity, initial_points) = match &s.initial {
        InitialState::Poisson { intensity } => (Some(*intensity), None),
        InitialState::Explicit(c) => (None, Some(c.iter().map(|(_, x)| x.to_vec()).collect())),
    };
    let raw = RawFile {
        window: RawWindow {
            dimension: s.window.dimension(),
            side: s.window.side(),
        },
        model: RawModel {
            regime: Suite::of(s.model.regime()),
            sigma: s.model.sigma(),
            mortality,
            phi,
            kernel,
        },
        run: RawRun {
            t_end: s.t_end,
            sample_times: s.sample_times.clone(),
            replicas: Some(cfg.replicas),
            seed: Some(s.seed),
            initial_intensity,
            initial_points,
            population_cap: Some(s.population_cap),
            record_snapshots: Some(s.record_snapshots),
            pair_bins: None,
            pair_r_max: None,
            pair_edges: Some(s.pair_bins.edges().to_vec()),
        },
        verify: cfg.verify.as_ref().map(|v| RawVerify {
            suite: Some(v.suite),
            sigma: v.sigma,
            mortality: v.mortality,
            k0: v.k0,
            phi_mass_scale: Some(v.phi_mass_scale),
            f_constant: v.f_constant,
            c_scale: Some(v.c_scale),
            second_order: Some(v.second_order),
            superstability: Some(v.superstability),
            extra_sides: v.extra_sides.clone(),
        }),
    };
    toml::to_string(&raw).expect("scenario configs serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const GLOBAL: &str = r#"
[window]
dimension = 1
side = 50.0

[model]
regime = "global-regulation"
sigma = 1.0
mortality = 1.0

[run]
t_end = 8.0
sample_times = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0]
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_scenario(GLOBAL).unwrap();
        assert_eq!(cfg.replicas, DEFAULT_REPLICAS);
        assert_eq!(cfg.scenario.seed, 0);
        assert_eq!(cfg.scenario.population_cap, DEFAULT_POPULATION_CAP);
        assert_eq!(cfg.scenario.initial, InitialState::Poisson { intensity: 0.0 });
        assert_eq!(cfg.scenario.pair_bins.len(), 40);
        assert!(cfg.verify.is_none());
        assert_eq!(cfg.scenario.model.mortality(), Some(1.0));
    }

    #[test]
    fn window_smaller_than_twice_cutoff_rejected() {
        let text = r#"
[window]
dimension = 1
side = 0.8
[model]
regime = "competition"
sigma = 1.0
kernel = { family = "top-hat", radius = 0.5, height = 1.0 }
[run]
t_end = 1.0
sample_times = [1.0]
pair_r_max = 0.4
"#;
        let err = parse_scenario(text).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("twice the kernel cutoff")), "{err}");
    }

    #[test]
    fn missing_regime_parameter_named() {
        let text = GLOBAL.replace("mortality = 1.0\n", "");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("mortality")), "{err}");
        assert!(parse_scenario("[window]\ndimension = 1").is_err());
    }

    #[test]
    fn round_trip() {
        let full = r#"
[window]
dimension = 2
side = 12.5

[model]
regime = "glauber"
sigma = 0.75
mortality = 0.3
phi = { family = "gaussian", amplitude = 1.5, length_scale = 0.2 }

[run]
t_end = 3.0
sample_times = [0.0, 1.5, 3.0]
replicas = 7
seed = 123456789
initial_points = [[0.1, 0.2], [3.3, 12.0]]
record_snapshots = true
pair_bins = 12
pair_r_max = 2.0

[verify]
phi_mass_scale = 0.1
extra_sides = [15.0]
"#;
        for text in [GLOBAL, full] {
            let a = parse_scenario(text).unwrap();
            let b = parse_scenario(&to_toml(&a)).unwrap();
            assert_eq!(a, b);
            assert_eq!(to_toml(&a), to_toml(&b));
        }
    }
}
