use std::fs;
use std::path::Path;

use regulab_core::experiments::output::{report_json, write_outputs, OutputSet, REPORT_FILE, SNAPSHOT_FILE};
use regulab_core::experiments::pipeline::{build_report, execute};
use regulab_core::experiments::{parse_scenario, recompute_report, ScenarioConfig};
use regulab_core::simulator::EnsembleOptions;

const COMPETITION: &str = r#"
[window]
dimension = 1
side = 12.0

[model]
regime = "competition"
sigma = 1.0
kernel = { family = "top-hat", radius = 0.5, height = 1.0 }

[run]
t_end = 3.0
sample_times = [0.0, 0.7, 3.0]
replicas = 12
seed = 99
initial_intensity = 0.8
record_snapshots = true

[verify]
f_constant = 1.0
extra_sides = [6.0]
"#;

const ESTABLISHMENT: &str = r#"
[window]
dimension = 2
side = 6.0

[model]
regime = "establishment"
sigma = 2.0
phi = { family = "gaussian", amplitude = 0.8, length_scale = 0.3 }

[run]
t_end = 2.0
sample_times = [0.5, 2.0]
replicas = 8
seed = 3
initial_intensity = 0.2

[verify]
"#;

fn write(cfg: &ScenarioConfig, dir: &Path, threads: usize) {
    let done = execute(cfg, &EnsembleOptions { threads: Some(threads) }, true).unwrap();
    let (report, curves) = build_report(cfg, &done.estimates).unwrap();
    let set = OutputSet {
        config: cfg,
        ensemble: &done.ensemble,
        estimates: &done.estimates,
        curves: &curves,
        report: Some(&report),
    };
    write_outputs(dir, &set).unwrap();
}

fn contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    for text in [COMPETITION, ESTABLISHMENT] {
        let cfg = parse_scenario(text).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        write(&cfg, &tmp.path().join("a"), 1);
        write(&cfg, &tmp.path().join("b"), 4);
        let a = contents(&tmp.path().join("a"));
        assert_eq!(a, contents(&tmp.path().join("b")));
        assert!(a.iter().all(|(_, bytes)| !bytes.contains(&b'\r')));
    }
}

#[test]
fn report_is_recomputable_from_persisted_files() {
    for text in [COMPETITION, ESTABLISHMENT] {
        let cfg = parse_scenario(text).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        write(&cfg, tmp.path(), 2);
        let persisted = fs::read_to_string(tmp.path().join(REPORT_FILE)).unwrap();
        let (echo, report, _) = recompute_report(tmp.path()).unwrap();
        assert_eq!(echo, cfg);
        assert_eq!(report_json(&report), persisted);
        assert_eq!(report.overall, report.checks.iter().all(|c| c.pass));
    }
}

#[test]
fn snapshot_file_feeds_the_superstability_rows() {
    let cfg = parse_scenario(COMPETITION).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    write(&cfg, tmp.path(), 1);
    let (_, report, _) = recompute_report(tmp.path()).unwrap();
    assert!(report.checks.iter().any(|c| c.name == "superstability"));
    assert!(report.checks.iter().any(|c| c.name.starts_with("side_6/")));

    // Without the snapshot file the report cannot be rebuilt.
    fs::remove_file(tmp.path().join(SNAPSHOT_FILE)).unwrap();
    let err = recompute_report(tmp.path()).unwrap_err();
    assert!(err.is_io(), "{err}");
}
