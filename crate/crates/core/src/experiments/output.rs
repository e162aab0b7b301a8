//! Persisted outputs. Densities and other reals are written with 17
//! significant digits so every value reads back bit-exactly; times and
//! bin edges use the shortest round-trip form.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::estimators::{DensityEstimate, DensityPoint, PairBinEstimate, PairCorrelationEstimate, PairSlice};
use crate::geometry::Configuration;
use crate::simulator::EnsembleResult;

use super::config::{load_scenario, to_toml, ScenarioConfig};
use super::pipeline::{build_report, Estimates};
use super::verify::{AnalyticCurve, BoundReport};

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const DENSITY_FILE: &str = "density.csv";
pub const PAIR_FILE: &str = "pair_correlation.csv";
pub const ANALYTIC_FILE: &str = "analytic.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const SNAPSHOT_FILE: &str = "snapshots.csv";
pub const REPORT_FILE: &str = "report.json";

pub const DENSITY_HEADER: [&str; 4] = ["time", "mean_density", "stderr", "n_replicas"];
pub const PAIR_HEADER: [&str; 5] = ["time", "r_lo", "r_hi", "k2", "stderr"];
pub const ANALYTIC_HEADER: [&str; 3] = ["time", "value", "curve_name"];
pub const EVENTS_HEADER: [&str; 7] = [
    "replica",
    "stream",
    "time",
    "count",
    "births_proposed",
    "births_accepted",
    "deaths",
];

pub fn side_density_file(side: f64) -> String {
    format!("density_side_{side}.csv")
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn short(v: f64) -> String {
    format!("{v}")
}

pub struct OutputSet<'a> {
    pub config: &'a ScenarioConfig,
    pub ensemble: &'a EnsembleResult,
    pub estimates: &'a Estimates,
    pub curves: &'a [AnalyticCurve],
    pub report: Option<&'a BoundReport>,
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

pub fn density_csv(d: &DensityEstimate) -> String {
    csv_text(
        &DENSITY_HEADER,
        d.points
            .iter()
            .map(|p| vec![short(p.time), real(p.mean), real(p.stderr), p.n_replicas.to_string()]),
    )
}

pub fn pair_csv(p: &PairCorrelationEstimate) -> String {
    csv_text(
        &PAIR_HEADER,
        p.slices.iter().flat_map(|s| {
            s.bins
                .iter()
                .map(move |b| vec![short(s.time), short(b.r_lo), short(b.r_hi), real(b.k2), real(b.stderr)])
        }),
    )
}

pub fn analytic_csv(curves: &[AnalyticCurve]) -> String {
    csv_text(
        &ANALYTIC_HEADER,
        curves
            .iter()
            .flat_map(|c| c.points.iter().map(move |&(t, v)| vec![short(t), real(v), c.name.clone()])),
    )
}

pub fn events_csv(ens: &EnsembleResult) -> String {
    csv_text(
        &EVENTS_HEADER,
        ens.trajectories.iter().enumerate().flat_map(|(i, tr)| {
            tr.samples.iter().map(move |s| {
                vec![
                    i.to_string(),
                    tr.stream.to_string(),
                    short(s.time),
                    s.count.to_string(),
                    s.births_proposed.to_string(),
                    s.births_accepted.to_string(),
                    s.deaths.to_string(),
                ]
            })
        }),
    )
}

/// One row per point: `replica,time,point_id,x1..xd`, in slot order.
pub fn snapshots_csv(ens: &EnsembleResult) -> Option<String> {
    let d = ens.window().dimension();
    let mut header = vec!["replica".to_string(), "time".into(), "point_id".into()];
    header.extend((1..=d).map(|k| format!("x{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    for (i, tr) in ens.trajectories.iter().enumerate() {
        for s in &tr.samples {
            let cfg = s.snapshot.as_ref()?;
            for (id, x) in cfg.iter() {
                let mut row = vec![i.to_string(), short(s.time), id.to_string()];
                row.extend(x.iter().map(|&v| real(v)));
                rows.push(row);
            }
        }
    }
    Some(csv_text(&header, rows))
}

pub fn report_json(report: &BoundReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn analytic_file_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the full output set and returns the paths written.
pub fn write_outputs(out_dir: &Path, set: &OutputSet<'_>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files: Vec<(String, String)> = vec![
        (SCENARIO_FILE.into(), to_toml(set.config)),
        (DENSITY_FILE.into(), density_csv(&set.estimates.density)),
        (PAIR_FILE.into(), pair_csv(&set.estimates.pair)),
        (ANALYTIC_FILE.into(), analytic_csv(set.curves)),
        (EVENTS_FILE.into(), events_csv(set.ensemble)),
    ];
    if let Some(s) = snapshots_csv(set.ensemble) {
        files.push((SNAPSHOT_FILE.into(), s));
    }
    for (side, d) in &set.estimates.extra_density {
        files.push((side_density_file(*side), density_csv(d)));
    }
    if let Some(r) = set.report {
        files.push((REPORT_FILE.into(), report_json(r)));
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, text) in files {
        let path = out_dir.join(name);
        write_file(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let bad = |msg: String| Error::Config(format!("{}: {msg}", path.display()));
    let found = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if !header.is_empty() && found.iter().ne(header.iter().copied()) {
        return Err(bad(format!("unexpected header {:?}", found.iter().collect::<Vec<_>>())));
    }
    r.records().map(|rec| rec.map_err(|e| bad(e.to_string()))).collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Config(format!("{}: bad field {i} in row {:?}", path.display(), rec)))
}

pub fn read_density(path: &Path) -> Result<DensityEstimate> {
    let points = read_rows(path, &DENSITY_HEADER)?
        .iter()
        .map(|r| {
            Ok(DensityPoint {
                time: field(r, 0, path)?,
                mean: field(r, 1, path)?,
                stderr: field(r, 2, path)?,
                n_replicas: field(r, 3, path)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DensityEstimate { points })
}

pub fn read_pair(path: &Path) -> Result<PairCorrelationEstimate> {
    let mut slices: Vec<PairSlice> = Vec::new();
    for r in read_rows(path, &PAIR_HEADER)? {
        let time: f64 = field(&r, 0, path)?;
        let bin = PairBinEstimate {
            r_lo: field(&r, 1, path)?,
            r_hi: field(&r, 2, path)?,
            k2: field(&r, 3, path)?,
            stderr: field(&r, 4, path)?,
        };
        match slices.last_mut() {
            Some(s) if s.time == time => s.bins.push(bin),
            _ => slices.push(PairSlice { time, bins: vec![bin] }),
        }
    }
    Ok(PairCorrelationEstimate { slices })
}

/// Snapshots as `[sample][replica]`; replicas without rows at a time are
/// empty configurations.
pub fn read_snapshots(path: &Path, times: &[f64], n_replicas: usize, dimension: usize) -> Result<Vec<Vec<Configuration>>> {
    let mut out = vec![vec![Configuration::new(dimension); n_replicas]; times.len()];
    for r in read_rows(path, &[])? {
        let replica: usize = field(&r, 0, path)?;
        let time: f64 = field(&r, 1, path)?;
        let x: Vec<f64> = (0..dimension).map(|k| field(&r, 3 + k, path)).collect::<Result<_>>()?;
        let i = times
            .iter()
            .position(|&t| t == time)
            .ok_or_else(|| Error::Config(format!("{}: time {time} is not a sample time", path.display())))?;
        if replica >= n_replicas {
            return Err(Error::Config(format!("{}: replica {replica} out of range", path.display())));
        }
        out[i][replica].insert(&x);
    }
    Ok(out)
}

/// Reads back the estimates written by [`write_outputs`].
pub fn read_estimates(out_dir: &Path, cfg: &ScenarioConfig) -> Result<Estimates> {
    let density = read_density(&out_dir.join(DENSITY_FILE))?;
    let pair = read_pair(&out_dir.join(PAIR_FILE))?;
    let snap_path = out_dir.join(SNAPSHOT_FILE);
    let snapshots = if cfg.scenario.record_snapshots {
        let times: Vec<f64> = density.points.iter().map(|p| p.time).collect();
        let n = density.points.first().map_or(0, |p| p.n_replicas);
        read_snapshots(&snap_path, &times, n, cfg.scenario.window.dimension())?
    } else {
        Vec::new()
    };
    let mut extra_density = Vec::new();
    if let Some(v) = &cfg.verify {
        for &side in &v.extra_sides {
            extra_density.push((side, read_density(&out_dir.join(side_density_file(side)))?));
        }
    }
    Ok(Estimates {
        density,
        pair,
        snapshots,
        extra_density,
    })
}

/// Rebuilds the report and overlays from the persisted files alone.
pub fn recompute_report(out_dir: &Path) -> Result<(ScenarioConfig, BoundReport, Vec<AnalyticCurve>)> {
    let cfg = load_scenario(out_dir.join(SCENARIO_FILE))?;
    let est = read_estimates(out_dir, &cfg)?;
    let (report, curves) = build_report(&cfg, &est)?;
    Ok((cfg, report, curves))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789, f64::MIN_POSITIVE, -2.5e17] {
            assert_eq!(real(v).parse::<f64>().unwrap(), v);
        }
        assert!(real(f64::NAN).parse::<f64>().unwrap().is_nan());
        assert_eq!(real(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_uses_lf() {
        let d = DensityEstimate {
            points: vec![DensityPoint {
                time: 0.5,
                mean: 1.0,
                stderr: 0.25,
                n_replicas: 3,
            }],
        };
        let text = density_csv(&d);
        assert_eq!(
            text,
            "time,mean_density,stderr,n_replicas\n0.5,1.0000000000000000e0,2.5000000000000000e-1,3\n"
        );
        assert!(!text.contains('\r'));
    }
}
