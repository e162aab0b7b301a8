//! Verification suites: empirical estimates against closed forms and
//! bounds, with a fixed 3-standard-error slack.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analytics::{
    check_superstability, establishment_lower_bound, f_type_ball, free_density, global_reg_density,
    riccati_solution, second_order_bound, CompetitionBound,
};
use crate::error::{Error, Result};
use crate::estimators::{estimate_density, estimate_pair_correlation, DensityEstimate, PairCorrelationEstimate};
use crate::geometry::{Configuration, TorusWindow};
use crate::kernels::KernelSpec;
use crate::models::{energy, KERNEL_TRUNCATION};
use crate::simulator::EnsembleResult;

pub const SE_SLACK: f64 = 3.0;
const SLOPE_REL_TOL: f64 = 0.03;
const GLOBAL_ABS_FLOOR: f64 = 0.01;
/// Points in the time grid of exported analytic curves.
pub const CURVE_POINTS: usize = 101;
/// Sample points per bin when taking the minimum kernel value over a bin.
const BIN_PROBES: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `|empirical - analytic| <= slack`
    TwoSided,
    /// `empirical <= analytic + slack`
    Upper,
    /// `empirical >= analytic - slack`
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub time: Option<f64>,
    pub kind: CheckKind,
    pub empirical: f64,
    pub stderr: f64,
    pub analytic: f64,
    pub slack: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, time: Option<f64>, kind: CheckKind, empirical: f64, stderr: f64, analytic: f64, slack: f64) -> Self {
        let pass = match kind {
            CheckKind::TwoSided => (empirical - analytic).abs() <= slack,
            CheckKind::Upper => empirical <= analytic + slack,
            CheckKind::Lower => empirical >= analytic - slack,
        };
        CheckRecord {
            name: name.into(),
            time,
            kind,
            empirical,
            stderr,
            analytic,
            slack,
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub scenario_digest: String,
    pub suite: String,
    pub parameters: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub checks: Vec<CheckRecord>,
    pub overall: bool,
}

impl BoundReport {
    pub fn new(scenario_digest: impl Into<String>, suite: impl Into<String>) -> Self {
        BoundReport {
            scenario_digest: scenario_digest.into(),
            suite: suite.into(),
            parameters: BTreeMap::new(),
            notes: Vec::new(),
            checks: Vec::new(),
            overall: true,
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.overall &= check.pass;
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckRecord>) {
        for c in checks {
            self.push(c);
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Recomputes `overall` as the conjunction of the rows.
    pub fn refresh(&mut self) {
        self.overall = self.checks.iter().all(|c| c.pass);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCurve {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl AnalyticCurve {
    pub fn sample<F: Fn(f64) -> f64>(name: impl Into<String>, t_end: f64, f: F) -> Self {
        let points = (0..CURVE_POINTS)
            .map(|i| {
                let t = t_end * i as f64 / (CURVE_POINTS - 1) as f64;
                (t, f(t))
            })
            .collect();
        AnalyticCurve { name: name.into(), points }
    }
}

fn require_replicas(density: &DensityEstimate) -> Result<()> {
    match density.points.first() {
        Some(p) if p.n_replicas > 0 => Ok(()),
        _ => Err(Error::Contract("verification needs a non-empty ensemble".into())),
    }
}

fn prefixed(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}{name}")
    }
}

/// Density tracks `k0 + σ t` and its fitted slope is within 3% of `σ`.
pub fn free_checks(density: &DensityEstimate, sigma: f64, k0: f64, prefix: &str) -> Vec<CheckRecord> {
    let mut out: Vec<CheckRecord> = density
        .points
        .iter()
        .map(|p| {
            CheckRecord::new(
                prefixed(prefix, "density"),
                Some(p.time),
                CheckKind::TwoSided,
                p.mean,
                p.stderr,
                free_density(k0, sigma, p.time),
                SE_SLACK * p.stderr,
            )
        })
        .collect();
    if let Some((slope, se)) = least_squares_slope(density) {
        out.push(CheckRecord::new(
            prefixed(prefix, "slope"),
            None,
            CheckKind::TwoSided,
            slope,
            se,
            sigma,
            SLOPE_REL_TOL * sigma,
        ));
    }
    out
}

/// Ordinary least-squares slope of mean density on time, with its
/// standard error propagated from the per-time standard errors.
pub fn least_squares_slope(density: &DensityEstimate) -> Option<(f64, f64)> {
    let n = density.points.len() as f64;
    if density.points.len() < 2 {
        return None;
    }
    let t_bar = density.points.iter().map(|p| p.time).sum::<f64>() / n;
    let sxx: f64 = density.points.iter().map(|p| (p.time - t_bar).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = density.points.iter().map(|p| (p.time - t_bar) * p.mean).sum::<f64>() / sxx;
    let var: f64 = density
        .points
        .iter()
        .map(|p| ((p.time - t_bar) / sxx).powi(2) * p.stderr * p.stderr)
        .sum();
    Some((slope, var.sqrt()))
}

pub fn global_regulation_checks(density: &DensityEstimate, sigma: f64, m: f64, k0: f64, prefix: &str) -> Vec<CheckRecord> {
    let mut out: Vec<CheckRecord> = density
        .points
        .iter()
        .map(|p| {
            CheckRecord::new(
                prefixed(prefix, "density"),
                Some(p.time),
                CheckKind::TwoSided,
                p.mean,
                p.stderr,
                global_reg_density(k0, sigma, m, p.time),
                (SE_SLACK * p.stderr).max(GLOBAL_ABS_FLOOR * sigma / m),
            )
        })
        .collect();
    if let Some(last) = density.points.last() {
        out.push(CheckRecord::new(
            prefixed(prefix, "poisson_limit"),
            Some(last.time),
            CheckKind::TwoSided,
            last.mean,
            last.stderr,
            sigma / m,
            SE_SLACK * last.stderr,
        ));
    }
    out
}

/// One-sided lower bound; time is rescaled by `σ`.
pub fn establishment_checks(density: &DensityEstimate, phi_mass: f64, sigma: f64, k0: f64, prefix: &str) -> Vec<CheckRecord> {
    density
        .points
        .iter()
        .map(|p| {
            CheckRecord::new(
                prefixed(prefix, "density_lower_bound"),
                Some(p.time),
                CheckKind::Lower,
                p.mean,
                p.stderr,
                establishment_lower_bound(k0, phi_mass, sigma * p.time),
                SE_SLACK * p.stderr,
            )
        })
        .collect()
}

/// Glauber births are a thinning of free births, so the constant-mortality
/// density is an upper envelope.
pub fn glauber_checks(density: &DensityEstimate, sigma: f64, m: f64, k0: f64, prefix: &str) -> Vec<CheckRecord> {
    density
        .points
        .iter()
        .map(|p| {
            CheckRecord::new(
                prefixed(prefix, "density_upper_envelope"),
                Some(p.time),
                CheckKind::Upper,
                p.mean,
                p.stderr,
                global_reg_density(k0, sigma, m, p.time),
                SE_SLACK * p.stderr,
            )
        })
        .collect()
}

pub fn competition_density_checks(density: &DensityEstimate, bound: &CompetitionBound, prefix: &str) -> Vec<CheckRecord> {
    density
        .points
        .iter()
        .map(|p| {
            CheckRecord::new(
                prefixed(prefix, "density_bound"),
                Some(p.time),
                CheckKind::Upper,
                p.mean,
                p.stderr,
                bound.d,
                SE_SLACK * p.stderr,
            )
        })
        .collect()
}

/// One record per sample time: the smallest `2 E_a |Λ| / n²` over
/// snapshots with at least two points, passing iff every snapshot
/// satisfies the inequality.
pub fn superstability_checks(
    a: &KernelSpec,
    c: f64,
    w: &TorusWindow,
    times: &[f64],
    snapshots: &[Vec<Configuration>],
) -> (Vec<CheckRecord>, usize) {
    let mut singletons = 0;
    let mut out = Vec::new();
    for (&t, snaps) in times.iter().zip(snapshots) {
        let mut min_ratio = f64::INFINITY;
        let mut all = true;
        let mut any = false;
        for cfg in snaps {
            match cfg.len() {
                0 => {}
                1 => singletons += 1,
                n => {
                    any = true;
                    let n2 = (n * n) as f64;
                    min_ratio = min_ratio.min(2.0 * energy(a, cfg, w) * w.volume() / n2);
                    all &= check_superstability(a, c, w, cfg);
                }
            }
        }
        if any {
            let mut rec = CheckRecord::new("superstability", Some(t), CheckKind::Lower, min_ratio, 0.0, c, 0.0);
            rec.pass = all;
            rec.slack = crate::analytics::SUPERSTABILITY_SLACK;
            out.push(rec);
        }
    }
    (out, singletons)
}

/// Smallest value of the kernel as simulated (zero past its truncation
/// radius) over a radial bin, probing both edges and interior points.
pub fn bin_kernel_min(a: &KernelSpec, lo: f64, hi: f64) -> f64 {
    let cutoff = a.effective_range(KERNEL_TRUNCATION);
    (0..BIN_PROBES)
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / (BIN_PROBES - 1) as f64;
            if r > cutoff {
                0.0
            } else {
                a.eval_radial(r)
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Second-order bound per bin where the kernel stays positive. Since the
/// bound decreases in `a(u)`, the bin minimum gives a bound for the bin
/// average.
pub fn second_order_checks(
    a: &KernelSpec,
    pair: &PairCorrelationEstimate,
    k2_initial: &[f64],
    sigma: f64,
    d: f64,
) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for slice in &pair.slices {
        for (b, bin) in slice.bins.iter().enumerate() {
            let a_u = bin_kernel_min(a, bin.r_lo, bin.r_hi);
            if a_u <= 0.0 {
                continue;
            }
            let bound = second_order_bound(a_u, k2_initial[b], sigma, d, slice.time)?;
            out.push(CheckRecord::new(
                format!("second_order[{},{})", bin.r_lo, bin.r_hi),
                Some(slice.time),
                CheckKind::Upper,
                bin.k2,
                bin.stderr,
                bound,
                SE_SLACK * bin.stderr,
            ));
        }
    }
    Ok(out)
}

pub fn verify_free(ens: &EnsembleResult, sigma: f64, k0: f64) -> Result<BoundReport> {
    let density = estimate_density(ens);
    require_replicas(&density)?;
    let mut report = BoundReport::new(&ens.scenario_digest, "free");
    report.parameters.insert("sigma".into(), sigma);
    report.parameters.insert("k0".into(), k0);
    report.extend(free_checks(&density, sigma, k0, ""));
    Ok(report)
}

pub fn verify_global_regulation(ens: &EnsembleResult, sigma: f64, m: f64, k0: f64) -> Result<BoundReport> {
    let density = estimate_density(ens);
    require_replicas(&density)?;
    let mut report = BoundReport::new(&ens.scenario_digest, "global-regulation");
    report.parameters.insert("sigma".into(), sigma);
    report.parameters.insert("mortality".into(), m);
    report.parameters.insert("k0".into(), k0);
    report.extend(global_regulation_checks(&density, sigma, m, k0, ""));
    Ok(report)
}

pub const ESTABLISHMENT_NOTE: &str =
    "establishment bound applied at rescaled time sigma*t (the closed form assumes unit birth intensity)";

pub fn verify_establishment_with_mass(ens: &EnsembleResult, phi_mass: f64, sigma: f64, k0: f64) -> Result<BoundReport> {
    let density = estimate_density(ens);
    require_replicas(&density)?;
    let mut report = BoundReport::new(&ens.scenario_digest, "establishment");
    report.parameters.insert("sigma".into(), sigma);
    report.parameters.insert("phi_mass".into(), phi_mass);
    report.parameters.insert("k0".into(), k0);
    report.notes.push(ESTABLISHMENT_NOTE.into());
    report.extend(establishment_checks(&density, phi_mass, sigma, k0, ""));
    Ok(report)
}

pub fn verify_establishment(ens: &EnsembleResult, phi: &KernelSpec, sigma: f64, k0: f64) -> Result<BoundReport> {
    verify_establishment_with_mass(ens, phi.total_mass(), sigma, k0)
}

pub fn verify_glauber(ens: &EnsembleResult, sigma: f64, m: f64, k0: f64) -> Result<BoundReport> {
    let density = estimate_density(ens);
    require_replicas(&density)?;
    let mut report = BoundReport::new(&ens.scenario_digest, "glauber");
    report.parameters.insert("sigma".into(), sigma);
    report.parameters.insert("mortality".into(), m);
    report.parameters.insert("k0".into(), k0);
    report.extend(glauber_checks(&density, sigma, m, k0, ""));
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompetitionOptions {
    /// Multiplier on the derived superstability constant (negative controls).
    pub c_scale: f64,
    pub superstability: bool,
    pub second_order: bool,
}

impl Default for CompetitionOptions {
    fn default() -> Self {
        CompetitionOptions {
            c_scale: 1.0,
            superstability: true,
            second_order: true,
        }
    }
}

/// Inputs of the competition suite, all recoverable from persisted outputs.
pub struct CompetitionInputs<'a> {
    pub digest: &'a str,
    pub window: &'a TorusWindow,
    pub kernel: &'a KernelSpec,
    pub sigma: f64,
    pub f: f64,
    pub rho0: f64,
    pub density: &'a DensityEstimate,
    pub pair: Option<&'a PairCorrelationEstimate>,
    /// `[sample][replica]`; empty when no snapshots were kept.
    pub snapshots: &'a [Vec<Configuration>],
}

pub fn competition_report(inp: &CompetitionInputs<'_>, opts: &CompetitionOptions) -> Result<(BoundReport, CompetitionBound)> {
    require_replicas(inp.density)?;
    let bound = CompetitionBound::derive(inp.kernel, inp.f, inp.sigma, inp.rho0, opts.c_scale)?;
    let mut report = BoundReport::new(inp.digest, "competition");
    report.parameters.insert("sigma".into(), inp.sigma);
    report.parameters.insert("F".into(), inp.f);
    report.parameters.insert("rho0".into(), inp.rho0);
    report.parameters.insert("c".into(), bound.c);
    report.parameters.insert("h_star".into(), bound.h_star);
    report.parameters.insert("D".into(), bound.d);
    report.parameters.insert("kernel_mass".into(), bound.kernel_mass);
    report.parameters.insert("delta_h_star".into(), bound.delta_h_star);
    if opts.c_scale != 1.0 {
        report.parameters.insert("c_scale".into(), opts.c_scale);
    }
    if !inp.kernel.is_known_positive_definite() {
        report.notes.push(
            "kernel is not certified positive definite; superstability is checked empirically only".into(),
        );
    }
    report.extend(competition_density_checks(inp.density, &bound, ""));

    if opts.superstability {
        if inp.snapshots.is_empty() {
            report.notes.push("superstability spot-check skipped: no snapshots recorded".into());
        } else {
            let times: Vec<f64> = inp.density.points.iter().map(|p| p.time).collect();
            let (checks, singletons) = superstability_checks(inp.kernel, bound.c, inp.window, &times, inp.snapshots);
            report.extend(checks);
            if singletons > 0 {
                report.notes.push(format!(
                    "{singletons} single-point snapshots excluded from the superstability check"
                ));
            }
        }
    }

    if opts.second_order {
        match inp.pair {
            None => report.notes.push("second-order check skipped: no pair-correlation estimate".into()),
            Some(pair) => match initial_pair_correlation(pair, inp.rho0) {
                Some((k2_0, note)) => {
                    if let Some(n) = note {
                        report.notes.push(n);
                    }
                    report.extend(second_order_checks(inp.kernel, pair, &k2_0, inp.sigma, bound.d)?);
                }
                None => report.notes.push("second-order check skipped: no time-0 sample".into()),
            },
        }
    }
    Ok((report, bound))
}

/// Per-bin `k̂²₀` from the time-0 slice, or `ρ0²` (the Poisson value)
/// when no time-0 slice exists.
fn initial_pair_correlation(pair: &PairCorrelationEstimate, rho0: f64) -> Option<(Vec<f64>, Option<String>)> {
    if let Some(s) = pair.at(0.0) {
        return Some((s.bins.iter().map(|b| b.k2).collect(), None));
    }
    let n = pair.slices.first()?.bins.len();
    Some((
        vec![rho0 * rho0; n],
        Some("no time-0 sample: initial pair correlation taken as rho0^2 (Poisson)".into()),
    ))
}

pub fn verify_competition_with(
    ens: &EnsembleResult,
    a: &KernelSpec,
    sigma: f64,
    f: f64,
    rho0: f64,
    opts: &CompetitionOptions,
) -> Result<BoundReport> {
    let density = estimate_density(ens);
    let pair = if opts.second_order {
        Some(estimate_pair_correlation(ens, ens.bins())?)
    } else {
        None
    };
    let snapshots = collect_snapshots(ens);
    let inputs = CompetitionInputs {
        digest: &ens.scenario_digest,
        window: ens.window(),
        kernel: a,
        sigma,
        f,
        rho0,
        density: &density,
        pair: pair.as_ref(),
        snapshots: &snapshots,
    };
    Ok(competition_report(&inputs, opts)?.0)
}

pub fn verify_competition(ens: &EnsembleResult, a: &KernelSpec, sigma: f64, f: f64, rho0: f64) -> Result<BoundReport> {
    verify_competition_with(ens, a, sigma, f, rho0, &CompetitionOptions::default())
}

/// Snapshots as `[sample][replica]`, or empty if any are missing.
pub fn collect_snapshots(ens: &EnsembleResult) -> Vec<Vec<Configuration>> {
    let n = ens.sample_times().len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(ens.n_replicas());
        for tr in &ens.trajectories {
            match &tr.samples[i].snapshot {
                Some(c) => row.push(c.clone()),
                None => return Vec::new(),
            }
        }
        out.push(row);
    }
    out
}

/// Default F: the ball-family constant for the window dimension.
pub fn default_f(w: &TorusWindow) -> f64 {
    f_type_ball(w.dimension()).expect("dimension >= 1").f
}

/// Riccati envelope `g(t)` started at `g0`.
pub fn riccati_curve(sigma: f64, c: f64, g0: f64, t_end: f64) -> Result<AnalyticCurve> {
    riccati_solution(sigma, c, g0, 0.0)?;
    Ok(AnalyticCurve::sample("riccati_solution", t_end, |t| {
        riccati_solution(sigma, c, g0, t).expect("checked regime")
    }))
}

/// Second-order bound for every bin (given as `(r_lo, r_hi)`) on which
/// the kernel stays positive.
pub fn second_order_curves(
    a: &KernelSpec,
    bins: &[(f64, f64)],
    k2_initial: &[f64],
    sigma: f64,
    d: f64,
    t_end: f64,
) -> Vec<AnalyticCurve> {
    bins.iter()
        .zip(k2_initial)
        .filter_map(|(&(lo, hi), &k2_0)| {
            let a_u = bin_kernel_min(a, lo, hi);
            (a_u > 0.0).then(|| {
                AnalyticCurve::sample(format!("second_order_bound[{lo},{hi})"), t_end, |t| {
                    second_order_bound(a_u, k2_0, sigma, d, t).expect("a_u > 0")
                })
            })
        })
        .collect()
}

/// Analytic overlay curves for a competition run: the constant bound `D`,
/// the Riccati envelope started at `D`, and the second-order bound per
/// qualifying bin.
pub fn competition_curves(
    bound: &CompetitionBound,
    a: &KernelSpec,
    t_end: f64,
    pair: Option<&PairCorrelationEstimate>,
    rho0: f64,
) -> Result<Vec<AnalyticCurve>> {
    let mut curves = vec![
        AnalyticCurve::sample("density_bound_D", t_end, |_| bound.d),
        riccati_curve(bound.sigma, bound.c, bound.d, t_end)?,
    ];
    if let Some(pair) = pair {
        if let Some((k2_0, _)) = initial_pair_correlation(pair, rho0) {
            let bins: Vec<(f64, f64)> = pair.slices[0].bins.iter().map(|b| (b.r_lo, b.r_hi)).collect();
            curves.extend(second_order_curves(a, &bins, &k2_0, bound.sigma, bound.d, t_end));
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::DensityPoint;

    fn density(points: &[(f64, f64, f64)]) -> DensityEstimate {
        DensityEstimate {
            points: points
                .iter()
                .map(|&(time, mean, stderr)| DensityPoint {
                    time,
                    mean,
                    stderr,
                    n_replicas: 10,
                })
                .collect(),
        }
    }

    #[test]
    fn record_verdicts() {
        assert!(CheckRecord::new("x", None, CheckKind::TwoSided, 1.0, 0.1, 1.2, 0.3).pass);
        assert!(!CheckRecord::new("x", None, CheckKind::TwoSided, 1.0, 0.1, 1.4, 0.3).pass);
        assert!(CheckRecord::new("x", None, CheckKind::Upper, 1.0, 0.1, 0.8, 0.3).pass);
        assert!(!CheckRecord::new("x", None, CheckKind::Upper, 1.2, 0.1, 0.8, 0.3).pass);
        assert!(CheckRecord::new("x", None, CheckKind::Lower, 0.6, 0.1, 0.8, 0.3).pass);
        assert!(!CheckRecord::new("x", None, CheckKind::Lower, 0.4, 0.1, 0.8, 0.3).pass);
        // NaN standard errors never pass.
        assert!(!CheckRecord::new("x", None, CheckKind::TwoSided, 1.0, f64::NAN, 1.0, f64::NAN).pass);
    }

    #[test]
    fn overall_is_conjunction() {
        let mut r = BoundReport::new("d", "free");
        r.push(CheckRecord::new("a", None, CheckKind::Upper, 0.0, 0.0, 1.0, 0.0));
        assert!(r.overall);
        r.push(CheckRecord::new("b", None, CheckKind::Upper, 2.0, 0.0, 1.0, 0.0));
        assert!(!r.overall);
        r.checks.pop();
        r.refresh();
        assert!(r.overall);
    }

    #[test]
    fn slope_of_exact_line() {
        let d = density(&[(0.0, 0.5, 0.0), (1.0, 1.5, 0.1), (2.0, 2.5, 0.1), (4.0, 4.5, 0.1)]);
        let (slope, se) = least_squares_slope(&d).unwrap();
        assert!((slope - 1.0).abs() < 1e-14);
        assert!(se > 0.0);
        let checks = free_checks(&d, 1.0, 0.5, "");
        assert!(checks.iter().all(|c| c.pass));
        assert!(!free_checks(&d, 2.0, 0.5, "").iter().all(|c| c.pass));
    }

    #[test]
    fn global_floor_applies() {
        let d = density(&[(8.0, 1.009, 0.0001)]);
        let checks = global_regulation_checks(&d, 1.0, 1.0, 1.0, "");
        assert!(checks[0].pass);
        assert!(!checks[1].pass);
    }

    #[test]
    fn establishment_check_at_time_zero() {
        let d = density(&[(0.0, 0.98, 0.01)]);
        assert!(establishment_checks(&d, 1.0, 1.0, 1.0, "")[0].pass);
        let d = density(&[(0.0, 0.9, 0.01)]);
        assert!(!establishment_checks(&d, 1.0, 1.0, 1.0, "")[0].pass);
    }

    #[test]
    fn bin_minimum_excludes_straddling_bins() {
        let a = KernelSpec::top_hat(1, 0.5, 1.0).unwrap();
        assert_eq!(bin_kernel_min(&a, 0.4375, 0.5), 1.0);
        assert_eq!(bin_kernel_min(&a, 0.5, 0.5625), 0.0);
        assert_eq!(bin_kernel_min(&a, 0.45, 0.55), 0.0);
        let g = KernelSpec::gaussian(1, 1.0, 0.25).unwrap();
        let cut = g.effective_range(KERNEL_TRUNCATION);
        assert!(bin_kernel_min(&g, 0.0, 0.1) > 0.0);
        assert_eq!(bin_kernel_min(&g, cut * 0.99, cut * 1.01), 0.0);
    }
}
