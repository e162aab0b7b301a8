//! Scenario to ensemble to estimates to report.

use crate::analytics::{f_type_user, global_reg_density, CompetitionBound};
use crate::error::{Error, Result};
use crate::estimators::{estimate_density, estimate_pair_correlation, DensityEstimate, PairCorrelationEstimate};
use crate::geometry::{Configuration, TorusWindow};
use crate::models::Regime;
use crate::simulator::{run_ensemble_with, EnsembleOptions, EnsembleResult, InitialState, Scenario};

use super::config::{ScenarioConfig, Suite, VerifySpec};
use super::verify::{
    collect_snapshots, competition_curves, competition_density_checks, competition_report, default_f,
    establishment_checks, free_checks, glauber_checks, global_regulation_checks, AnalyticCurve, BoundReport,
    CheckRecord, CompetitionInputs, CompetitionOptions, ESTABLISHMENT_NOTE,
};
use crate::analytics::{establishment_lower_bound, free_density};

/// Everything the report is computed from; exactly what gets persisted.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimates {
    pub density: DensityEstimate,
    pub pair: PairCorrelationEstimate,
    /// `[sample][replica]`, empty unless snapshots were recorded.
    pub snapshots: Vec<Vec<Configuration>>,
    /// Density estimates of the additional window sides, in config order.
    pub extra_density: Vec<(f64, DensityEstimate)>,
}

pub struct Completed {
    pub ensemble: EnsembleResult,
    pub extra: Vec<(f64, EnsembleResult)>,
    pub estimates: Estimates,
}

/// The same scenario on a torus of another side length.
pub fn with_side(scenario: &Scenario, side: f64) -> Result<Scenario> {
    if let InitialState::Explicit(_) = scenario.initial {
        return Err(Error::Config("extra window sides need a Poisson initial state".into()));
    }
    let mut s = scenario.clone();
    s.window = TorusWindow::new(scenario.window.dimension(), side)?;
    s.record_snapshots = false;
    s.validate()?;
    Ok(s)
}

pub fn estimate(ens: &EnsembleResult, extra: &[(f64, EnsembleResult)]) -> Result<Estimates> {
    Ok(Estimates {
        density: estimate_density(ens),
        pair: estimate_pair_correlation(ens, ens.bins())?,
        snapshots: collect_snapshots(ens),
        extra_density: extra.iter().map(|(l, e)| (*l, estimate_density(e))).collect(),
    })
}

/// Runs the main ensemble and, when verifying, one per extra side.
pub fn execute(cfg: &ScenarioConfig, opts: &EnsembleOptions, with_extra: bool) -> Result<Completed> {
    let ensemble = run_ensemble_with(&cfg.scenario, cfg.replicas, opts)?;
    let mut extra = Vec::new();
    if with_extra {
        if let Some(v) = &cfg.verify {
            for &side in &v.extra_sides {
                let s = with_side(&cfg.scenario, side)?;
                extra.push((side, run_ensemble_with(&s, cfg.replicas, opts)?));
            }
        }
    }
    let estimates = estimate(&ensemble, &extra)?;
    Ok(Completed {
        ensemble,
        extra,
        estimates,
    })
}

/// Resolved numeric parameters of a verification suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteParams {
    pub sigma: f64,
    pub mortality: Option<f64>,
    pub k0: f64,
    pub f: f64,
}

pub fn suite_params(cfg: &ScenarioConfig, v: &VerifySpec) -> Result<SuiteParams> {
    let s = &cfg.scenario;
    let f = match v.f_constant {
        Some(f) => f_type_user(f)?.f,
        None => default_f(&s.window),
    };
    Ok(SuiteParams {
        sigma: v.sigma.unwrap_or(s.model.sigma()),
        mortality: v.mortality.or(s.model.mortality()),
        k0: v.k0.unwrap_or(s.initial_density()),
        f,
    })
}

fn side_prefix(side: f64) -> String {
    format!("side_{side}/")
}

/// The verification report and analytic overlays as a pure function of
/// the configuration and the persisted estimates.
pub fn build_report(cfg: &ScenarioConfig, est: &Estimates) -> Result<(BoundReport, Vec<AnalyticCurve>)> {
    let default_spec;
    let v = match &cfg.verify {
        Some(v) => v,
        None => {
            default_spec = VerifySpec::for_suite(Suite::of(cfg.scenario.model.regime()));
            &default_spec
        }
    };
    if est.density.points.first().is_none_or(|p| p.n_replicas == 0) {
        return Err(Error::Contract("verification needs a non-empty ensemble".into()));
    }
    let p = suite_params(cfg, v)?;
    let s = &cfg.scenario;
    let digest = s.digest();
    let t_end = s.t_end;
    let mortality = || {
        p.mortality
            .ok_or_else(|| Error::Config(format!("suite {} needs a mortality", v.suite.name())))
    };
    let extra_checks = |f: &dyn Fn(&DensityEstimate, &str) -> Vec<CheckRecord>| -> Vec<CheckRecord> {
        est.extra_density
            .iter()
            .flat_map(|(side, d)| f(d, &side_prefix(*side)))
            .collect()
    };

    let mut report = BoundReport::new(&digest, v.suite.name());
    let mut curves = Vec::new();
    match v.suite {
        Suite::Free => {
            report.extend(free_checks(&est.density, p.sigma, p.k0, ""));
            report.extend(extra_checks(&|d, pre| free_checks(d, p.sigma, p.k0, pre)));
            curves.push(AnalyticCurve::sample("free_density", t_end, |t| free_density(p.k0, p.sigma, t)));
        }
        Suite::GlobalRegulation => {
            let m = mortality()?;
            report.parameters.insert("mortality".into(), m);
            report.extend(global_regulation_checks(&est.density, p.sigma, m, p.k0, ""));
            report.extend(extra_checks(&|d, pre| global_regulation_checks(d, p.sigma, m, p.k0, pre)));
            curves.push(AnalyticCurve::sample("global_reg_density", t_end, |t| {
                global_reg_density(p.k0, p.sigma, m, t)
            }));
            curves.push(AnalyticCurve::sample("poisson_limit", t_end, |_| p.sigma / m));
        }
        Suite::Establishment => {
            let phi = s
                .model
                .establishment_kernel()
                .ok_or_else(|| Error::Config("establishment suite needs phi".into()))?;
            let mass = phi.total_mass() * v.phi_mass_scale;
            report.parameters.insert("phi_mass".into(), mass);
            if v.phi_mass_scale != 1.0 {
                report.parameters.insert("phi_mass_scale".into(), v.phi_mass_scale);
            }
            report.notes.push(ESTABLISHMENT_NOTE.into());
            report.extend(establishment_checks(&est.density, mass, p.sigma, p.k0, ""));
            report.extend(extra_checks(&|d, pre| establishment_checks(d, mass, p.sigma, p.k0, pre)));
            curves.push(AnalyticCurve::sample("establishment_lower_bound", t_end, |t| {
                establishment_lower_bound(p.k0, mass, p.sigma * t)
            }));
        }
        Suite::Glauber => {
            let m = mortality()?;
            report.parameters.insert("mortality".into(), m);
            report
                .notes
                .push("glauber densities checked against the constant-mortality density as an upper envelope".into());
            report.extend(glauber_checks(&est.density, p.sigma, m, p.k0, ""));
            report.extend(extra_checks(&|d, pre| glauber_checks(d, p.sigma, m, p.k0, pre)));
            curves.push(AnalyticCurve::sample("global_reg_upper_envelope", t_end, |t| {
                global_reg_density(p.k0, p.sigma, m, t)
            }));
        }
        Suite::Competition => {
            let Regime::Competition { kernel } = s.model.regime() else {
                return Err(Error::Config("competition suite needs a competition kernel".into()));
            };
            let opts = CompetitionOptions {
                c_scale: v.c_scale,
                superstability: v.superstability,
                second_order: v.second_order,
            };
            let inputs = CompetitionInputs {
                digest: &digest,
                window: &s.window,
                kernel,
                sigma: p.sigma,
                f: p.f,
                rho0: p.k0,
                density: &est.density,
                pair: Some(&est.pair),
                snapshots: &est.snapshots,
            };
            let (r, bound): (BoundReport, CompetitionBound) = competition_report(&inputs, &opts)?;
            report = r;
            report.extend(extra_checks(&|d, pre| competition_density_checks(d, &bound, pre)));
            let pair = v.second_order.then_some(&est.pair);
            curves = competition_curves(&bound, kernel, t_end, pair, p.k0)?;
        }
    }
    report.parameters.insert("sigma".into(), p.sigma);
    report.parameters.insert("k0".into(), p.k0);
    if !est.extra_density.is_empty() {
        let sides: Vec<String> = est.extra_density.iter().map(|(l, _)| format!("{l}")).collect();
        report.notes.push(format!(
            "additional window sides {} share F and the derived constants",
            sides.join(", ")
        ));
    }
    Ok((report, curves))
}
