//! `regulab`: simulate, verify and tabulate spatial birth-and-death models.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or
//! parameter error, 3 population explosion, 4 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use regulab_core::analytics::{
    establishment_lower_bound, free_density, global_reg_density, CompetitionBound,
};
use regulab_core::experiments::output::{
    analytic_csv, analytic_file_json, report_json, write_file, write_outputs, OutputSet, ANALYTIC_FILE, REPORT_FILE,
};
use regulab_core::experiments::pipeline::{build_report, execute, suite_params};
use regulab_core::experiments::verify::{riccati_curve, second_order_curves, AnalyticCurve, BoundReport};
use regulab_core::experiments::{load_scenario, recompute_report, ScenarioConfig, Suite, VerifySpec};
use regulab_core::models::Regime;
use regulab_core::simulator::EnsembleOptions;
use regulab_core::Error;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_EXPLOSION: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "regulab", version, about = "Exact simulation and bound verification for spatial birth-and-death models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the ensemble and write density, pair-correlation and event CSVs.
    Simulate(RunArgs),
    /// Run the ensemble and the matching verification suite.
    Verify(RunArgs),
    /// Tabulate closed forms and derived constants without simulating.
    Analytic(AnalyticArgs),
    /// Recompute the report from the files in an output directory.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Overrides run.replicas.
    #[arg(long, value_name = "N")]
    replicas: Option<usize>,
    /// Overrides run.seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; defaults to the hardware parallelism.
    #[arg(long, value_name = "N", env = "REGULAB_THREADS")]
    threads: Option<usize>,
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args, Debug)]
struct AnalyticArgs {
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    /// Directory for analytic.csv and constants.json; prints the CSV when absent.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Initial value of the Riccati envelope (competition only; defaults to D).
    #[arg(long)]
    g0: Option<f64>,
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, short)]
    verbose: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_explosion() || matches!(e, Error::NonFiniteRate { .. }) {
            EXIT_EXPLOSION
        } else if e.is_io() {
            EXIT_IO
        } else {
            EXIT_CONFIG
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_run(&a, false),
        Command::Verify(a) => cmd_run(&a, true),
        Command::Analytic(a) => cmd_analytic(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("regulab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path, replicas: Option<usize>, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let mut cfg = load_scenario(path)?;
    if let Some(n) = replicas {
        if n == 0 {
            return Err(Error::Config("--replicas must be at least 1".into()).into());
        }
        cfg.replicas = n;
    }
    if let Some(s) = seed {
        cfg.scenario.seed = s;
    }
    Ok(cfg)
}

fn print_report(report: &BoundReport, verbose: bool) {
    if verbose {
        for c in &report.checks {
            let t = c.time.map_or("-".to_string(), |t| t.to_string());
            eprintln!(
                "{} {:<32} t={:<6} empirical={:.6} analytic={:.6} slack={:.3e}",
                if c.pass { "ok  " } else { "FAIL" },
                c.name,
                t,
                c.empirical,
                c.analytic,
                c.slack
            );
        }
        for n in &report.notes {
            eprintln!("note: {n}");
        }
    }
    let failed = report.failures().count();
    println!(
        "{}: {} ({} checks, {} failed)",
        report.suite,
        if report.overall { "PASS" } else { "FAIL" },
        report.checks.len(),
        failed
    );
}

fn cmd_run(a: &RunArgs, verify: bool) -> Result<u8, Failure> {
    if a.threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()).into());
    }
    let cfg = load(&a.scenario, a.replicas, a.seed)?;
    if verify && cfg.verify.is_none() {
        return Err(Error::Config(format!("{}: verify needs a [verify] section", a.scenario.display())).into());
    }
    let opts = EnsembleOptions { threads: a.threads };
    let done = execute(&cfg, &opts, verify)?;
    let (report, curves) = match build_report(&cfg, &done.estimates) {
        Ok(rc) => rc,
        Err(e) if !verify => {
            eprintln!("regulab: no analytic overlay: {e}");
            (BoundReport::new(cfg.scenario.digest(), "none"), Vec::new())
        }
        Err(e) => return Err(e.into()),
    };
    let set = OutputSet {
        config: &cfg,
        ensemble: &done.ensemble,
        estimates: &done.estimates,
        curves: &curves,
        report: verify.then_some(&report),
    };
    let written = write_outputs(&a.out, &set)?;
    if a.verbose {
        for p in &written {
            eprintln!("wrote {}", p.display());
        }
    }
    if !verify {
        println!(
            "simulated {} replicas to t = {} ({} sample times)",
            cfg.replicas,
            cfg.scenario.t_end,
            cfg.scenario.sample_times.len()
        );
        return Ok(0);
    }
    print_report(&report, a.verbose);
    Ok(if report.overall { 0 } else { EXIT_VERIFY_FAILED })
}

#[derive(Serialize)]
struct Constants {
    suite: &'static str,
    sigma: f64,
    k0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mortality: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    competition: Option<CompetitionBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    riccati_g0: Option<f64>,
}

fn cmd_analytic(a: &AnalyticArgs) -> Result<u8, Failure> {
    let cfg = load(&a.scenario, None, None)?;
    let s = &cfg.scenario;
    let v = cfg
        .verify
        .clone()
        .unwrap_or_else(|| VerifySpec::for_suite(Suite::of(s.model.regime())));
    let p = suite_params(&cfg, &v)?;
    let t_end = s.t_end;
    let mortality = || p.mortality.ok_or_else(|| Failure::from(Error::Config("missing mortality".into())));
    let mut constants = Constants {
        suite: v.suite.name(),
        sigma: p.sigma,
        k0: p.k0,
        mortality: p.mortality,
        phi_mass: None,
        competition: None,
        riccati_g0: None,
    };
    if a.g0.is_some() && v.suite != Suite::Competition {
        return Err(Error::Config("--g0 applies to competition scenarios only".into()).into());
    }
    let curves: Vec<AnalyticCurve> = match s.model.regime() {
        Regime::Free => vec![AnalyticCurve::sample("free_density", t_end, |t| free_density(p.k0, p.sigma, t))],
        Regime::GlobalRegulation { .. } | Regime::Glauber { .. } => {
            let m = mortality()?;
            vec![AnalyticCurve::sample("global_reg_density", t_end, |t| {
                global_reg_density(p.k0, p.sigma, m, t)
            })]
        }
        Regime::Establishment { phi } => {
            let mass = phi.total_mass() * v.phi_mass_scale;
            constants.phi_mass = Some(mass);
            vec![AnalyticCurve::sample("establishment_lower_bound", t_end, |t| {
                establishment_lower_bound(p.k0, mass, p.sigma * t)
            })]
        }
        Regime::Competition { kernel } => {
            let bound = CompetitionBound::derive(kernel, p.f, p.sigma, p.k0, v.c_scale)?;
            let g0 = a.g0.unwrap_or(bound.d);
            constants.competition = Some(bound);
            constants.riccati_g0 = Some(g0);
            let mut curves = vec![
                AnalyticCurve::sample("density_bound_D", t_end, |_| bound.d),
                riccati_curve(p.sigma, bound.c, g0, t_end)?,
            ];
            // Poisson start: k2_0 = rho0^2 in every bin.
            let edges = s.pair_bins.edges();
            let bins: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
            let k2_0 = vec![p.k0 * p.k0; bins.len()];
            curves.extend(second_order_curves(kernel, &bins, &k2_0, p.sigma, bound.d, t_end));
            curves
        }
    };
    let csv = analytic_csv(&curves);
    let json = analytic_file_json(&constants);
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure {
                code: EXIT_IO,
                message: format!("{}: {e}", dir.display()),
            })?;
            write_file(&dir.join(ANALYTIC_FILE), &csv)?;
            write_file(&dir.join("constants.json"), &json)?;
            print!("{json}");
        }
        None => {
            print!("{csv}");
            eprint!("{json}");
        }
    }
    if a.verbose {
        eprintln!("{} curves, {} points each", curves.len(), curves.first().map_or(0, |c| c.points.len()));
    }
    Ok(0)
}

fn cmd_report(a: &ReportArgs) -> Result<u8, Failure> {
    let (_, report, curves) = recompute_report(&a.out)?;
    let text = report_json(&report);
    let path = a.out.join(REPORT_FILE);
    if let Ok(old) = std::fs::read_to_string(&path) {
        if old != text {
            eprintln!("regulab: {} differed from the recomputed report; rewritten", path.display());
        }
    }
    write_file(&path, &text)?;
    write_file(&a.out.join(ANALYTIC_FILE), &analytic_csv(&curves))?;
    print_report(&report, a.verbose);
    Ok(if report.overall { 0 } else { EXIT_VERIFY_FAILED })
}
