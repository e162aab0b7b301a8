//! Density and pair-correlation estimates from replica ensembles.
//!
//! Replicas are the independent units: every standard error is the
//! sample standard deviation of per-replica values over `√n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pair_distance_histogram, RadialBins};
use crate::simulator::EnsembleResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub time: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n_replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub points: Vec<DensityPoint>,
}

impl DensityEstimate {
    pub fn at(&self, time: f64) -> Option<&DensityPoint> {
        self.points.iter().find(|p| p.time == time)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairBinEstimate {
    pub r_lo: f64,
    pub r_hi: f64,
    pub k2: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSlice {
    pub time: f64,
    pub bins: Vec<PairBinEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelationEstimate {
    pub slices: Vec<PairSlice>,
}

impl PairCorrelationEstimate {
    pub fn at(&self, time: f64) -> Option<&PairSlice> {
        self.slices.iter().find(|s| s.time == time)
    }
}

/// Mean and standard error of the mean. A single value has an undefined
/// (NaN) standard error.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn estimate_density(ens: &EnsembleResult) -> DensityEstimate {
    let volume = ens.window().volume();
    let points = ens
        .sample_times()
        .iter()
        .enumerate()
        .map(|(i, &time)| {
            let per: Vec<f64> = ens
                .trajectories
                .iter()
                .map(|t| t.samples[i].count as f64 / volume)
                .collect();
            let (mean, stderr) = mean_and_stderr(&per);
            DensityPoint {
                time,
                mean,
                stderr,
                n_replicas: per.len(),
            }
        })
        .collect();
    DensityEstimate { points }
}

/// `k̂²` per bin: ordered pairs at distance in the bin divided by
/// `|Λ| · shellvol`. Uses the recorded histograms when `bins` are the
/// scenario's bins, otherwise recounts from snapshots.
pub fn estimate_pair_correlation(ens: &EnsembleResult, bins: &RadialBins) -> Result<PairCorrelationEstimate> {
    let w = ens.window();
    if bins.r_max() > 0.5 * w.side() {
        return Err(Error::Contract(format!(
            "bins reach {} beyond half the window side {}",
            bins.r_max(),
            w.side()
        )));
    }
    let recorded = bins == ens.bins();
    let volume = w.volume();
    let d = w.dimension();
    let mut slices = Vec::with_capacity(ens.sample_times().len());
    for (i, &time) in ens.sample_times().iter().enumerate() {
        let mut per_replica = Vec::with_capacity(ens.n_replicas());
        for tr in &ens.trajectories {
            let sample = &tr.samples[i];
            let hist = if recorded {
                sample.histogram.clone()
            } else {
                let snap = sample.snapshot.as_ref().ok_or_else(|| {
                    Error::Contract("bins differ from the recorded ones and no snapshots were kept".into())
                })?;
                pair_distance_histogram(w, snap, bins)?
            };
            per_replica.push(hist);
        }
        let bins_out = (0..bins.len())
            .map(|b| {
                let norm = volume * bins.shell_volume(d, b);
                let vals: Vec<f64> = per_replica.iter().map(|h| h[b] as f64 / norm).collect();
                let (k2, stderr) = mean_and_stderr(&vals);
                let (r_lo, r_hi) = bins.bounds(b);
                PairBinEstimate { r_lo, r_hi, k2, stderr }
            })
            .collect();
        slices.push(PairSlice { time, bins: bins_out });
    }
    Ok(PairCorrelationEstimate { slices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Configuration, TorusWindow};
    use crate::models::ModelSpec;
    use crate::simulator::{run_ensemble, InitialState, Scenario};

    fn snapshots(intensity: f64, n: usize, bins: RadialBins) -> EnsembleResult {
        let w = TorusWindow::new(1, 50.0).unwrap();
        let s = Scenario::new(
            ModelSpec::free(1.0).unwrap(),
            w,
            InitialState::Poisson { intensity },
            1e-9,
            vec![0.0],
        )
        .unwrap()
        .with_pair_bins(bins)
        .with_seed(99);
        run_ensemble(&s, n).unwrap()
    }

    #[test]
    fn empty_replicas_give_zero() {
        let ens = snapshots(0.0, 5, RadialBins::uniform(4, 2.0).unwrap());
        let d = estimate_density(&ens);
        assert_eq!((d.points[0].mean, d.points[0].stderr), (0.0, 0.0));
        let k = estimate_pair_correlation(&ens, ens.bins()).unwrap();
        assert!(k.slices[0].bins.iter().all(|b| b.k2 == 0.0));
    }

    #[test]
    fn density_arithmetic() {
        assert_eq!(mean_and_stderr(&[40.0 / 50.0, 60.0 / 50.0]).0, 1.0);
    }

    #[test]
    fn poisson_snapshot_density() {
        let ens = snapshots(2.0, 1000, RadialBins::uniform(4, 2.0).unwrap());
        let p = &estimate_density(&ens).points[0];
        assert!((p.mean - 2.0).abs() <= 3.0 * p.stderr, "{p:?}");
    }

    #[test]
    fn two_points_single_bin() {
        let w = TorusWindow::new(1, 50.0).unwrap();
        let cfg = Configuration::from_points(&w, &[vec![1.0], vec![1.3]]).unwrap();
        let bins = RadialBins::uniform(10, 1.0).unwrap();
        let s = Scenario::new(
            ModelSpec::free(1.0).unwrap(),
            w,
            InitialState::Explicit(cfg),
            1e-9,
            vec![0.0],
        )
        .unwrap()
        .with_pair_bins(bins.clone());
        let ens = run_ensemble(&s, 1).unwrap();
        let k = estimate_pair_correlation(&ens, &bins).unwrap();
        for (i, b) in k.slices[0].bins.iter().enumerate() {
            if i == 3 {
                assert!((b.k2 - 2.0 / (50.0 * bins.shell_volume(1, 3))).abs() < 1e-12);
            } else {
                assert_eq!(b.k2, 0.0);
            }
        }
    }

    #[test]
    fn factorial_moment_identity() {
        let bins = RadialBins::uniform(25, 25.0).unwrap();
        let ens = snapshots(0.4, 40, bins.clone());
        let k = estimate_pair_correlation(&ens, &bins).unwrap();
        let lhs: f64 = k.slices[0]
            .bins
            .iter()
            .enumerate()
            .map(|(i, b)| b.k2 * bins.shell_volume(1, i) * 50.0)
            .sum();
        let rhs = ens
            .trajectories
            .iter()
            .map(|t| {
                let n = t.samples[0].count as f64;
                n * (n - 1.0)
            })
            .sum::<f64>()
            / ens.n_replicas() as f64;
        assert!((lhs - rhs).abs() < 1e-9 * rhs.max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn recount_from_snapshots() {
        let w = TorusWindow::new(1, 50.0).unwrap();
        let s = Scenario::new(
            ModelSpec::free(1.0).unwrap(),
            w,
            InitialState::Poisson { intensity: 1.0 },
            1e-9,
            vec![0.0],
        )
        .unwrap()
        .with_snapshots(true);
        let ens = run_ensemble(&s, 10).unwrap();
        let coarse = RadialBins::uniform(5, 1.0).unwrap();
        assert!(estimate_pair_correlation(&ens, &coarse).is_ok());
        assert!(matches!(
            estimate_pair_correlation(&ens, &RadialBins::uniform(5, 30.0).unwrap()),
            Err(Error::Contract(_))
        ));
    }
}
