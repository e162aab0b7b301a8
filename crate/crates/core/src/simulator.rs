//! Exact event-driven simulation of a model on a periodic window.
//!
//! Each step draws an exponential waiting time from the total rate
//! `σ|Λ| + Σ_x d(x, γ)`, then either proposes a birth at a uniform
//! location (kept with the model's acceptance probability) or removes a
//! point chosen with probability proportional to its death rate.
//! Competition death rates are cached per point and patched locally on
//! every birth and death.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{pair_distance_histogram, sample_poisson_with, CellGrid, Configuration, PointId, RadialBins, TorusWindow};
use crate::models::{kernel_sum, ModelSpec, Regime};

pub const DEFAULT_POPULATION_CAP: usize = 1_000_000;
pub const DEFAULT_PAIR_BINS: usize = 40;

const RESUM_INTERVAL: u64 = 10_000;
#[cfg(debug_assertions)]
const AUDIT_INTERVAL: u64 = 1_000;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Poisson { intensity: f64 },
    Explicit(Configuration),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub model: ModelSpec,
    pub window: TorusWindow,
    pub initial: InitialState,
    pub t_end: f64,
    pub sample_times: Vec<f64>,
    pub population_cap: usize,
    pub seed: u64,
    pub pair_bins: RadialBins,
    pub record_snapshots: bool,
}

/// Default pair-correlation bins: 40 uniform bins up to
/// `min(5 r_cut, L/2)`, with `r_cut = 1` for kernel-free regimes.
pub fn default_pair_bins(model: &ModelSpec, window: &TorusWindow) -> Result<RadialBins> {
    let r_cut = match model.interaction_range() {
        r if r > 0.0 => r,
        _ => 1.0,
    };
    RadialBins::uniform(DEFAULT_PAIR_BINS, (5.0 * r_cut).min(0.5 * window.side()))
}

impl Scenario {
    /// Scenario with default cap, seed 0, default bins and no snapshots.
    pub fn new(
        model: ModelSpec,
        window: TorusWindow,
        initial: InitialState,
        t_end: f64,
        sample_times: Vec<f64>,
    ) -> Result<Self> {
        let pair_bins = default_pair_bins(&model, &window)?;
        let s = Scenario {
            model,
            window,
            initial,
            t_end,
            sample_times,
            population_cap: DEFAULT_POPULATION_CAP,
            seed: 0,
            pair_bins,
            record_snapshots: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_population_cap(mut self, cap: usize) -> Self {
        self.population_cap = cap;
        self
    }

    pub fn with_snapshots(mut self, on: bool) -> Self {
        self.record_snapshots = on;
        self
    }

    pub fn with_pair_bins(mut self, bins: RadialBins) -> Self {
        self.pair_bins = bins;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.window;
        if let Some(d) = self.model.dimension() {
            if d != w.dimension() {
                return Err(Error::InvalidParameter(format!(
                    "kernel dimension {d} differs from window dimension {}",
                    w.dimension()
                )));
            }
        }
        let r_cut = self.model.interaction_range();
        if w.side() < 2.0 * r_cut {
            return Err(Error::InvalidParameter(format!(
                "window side {} is smaller than twice the kernel cutoff {r_cut}",
                w.side()
            )));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParameter(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.sample_times.is_empty() {
            return Err(Error::InvalidParameter("at least one sample time is required".into()));
        }
        if self.sample_times.windows(2).any(|p| p[1] < p[0]) {
            return Err(Error::InvalidParameter("sample times must be sorted".into()));
        }
        if self.sample_times.iter().any(|&t| !(0.0..=self.t_end).contains(&t)) {
            return Err(Error::InvalidParameter("sample times must lie in [0, t_end]".into()));
        }
        if self.population_cap == 0 {
            return Err(Error::InvalidParameter("population cap must be positive".into()));
        }
        if self.pair_bins.r_max() > 0.5 * w.side() {
            return Err(Error::InvalidParameter(format!(
                "pair bins reach {} beyond half the window side",
                self.pair_bins.r_max()
            )));
        }
        match &self.initial {
            InitialState::Poisson { intensity } => {
                if !(intensity.is_finite() && *intensity >= 0.0) {
                    return Err(Error::InvalidParameter(format!("initial intensity must be >= 0, got {intensity}")));
                }
            }
            InitialState::Explicit(cfg) => {
                if cfg.dimension() != w.dimension() || cfg.iter().any(|(_, x)| !w.contains(x)) {
                    return Err(Error::InvalidParameter("initial configuration does not fit the window".into()));
                }
            }
        }
        Ok(())
    }

    /// Initial density: the Poisson intensity, or the explicit count over
    /// the volume.
    pub fn initial_density(&self) -> f64 {
        match &self.initial {
            InitialState::Poisson { intensity } => *intensity,
            InitialState::Explicit(cfg) => cfg.len() as f64 / self.window.volume(),
        }
    }

    /// Hex SHA-256 of the scenario's debug representation.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(format!("{self:?}").as_bytes()))
    }
}

/// Generator for replica `stream` of a scenario seed: replicas share the
/// ChaCha key and differ in the stream selector.
pub fn replica_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub count: usize,
    pub births_proposed: u64,
    pub births_accepted: u64,
    pub deaths: u64,
    /// Ordered-pair distance counts in the scenario's bins.
    pub histogram: Vec<u64>,
    pub snapshot: Option<Configuration>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub stream: u64,
    pub initial_count: usize,
    pub samples: Vec<Sample>,
    pub births_proposed: u64,
    pub births_accepted: u64,
    pub deaths: u64,
    pub final_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    Birth(PointId),
    RejectedBirth,
    Death(PointId),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Mutable state of one replica.
pub struct Simulation<'m> {
    model: &'m ModelSpec,
    window: TorusWindow,
    cfg: Configuration,
    grid: Option<CellGrid>,
    cutoff: f64,
    /// Competition death rate per configuration slot.
    rates: Vec<f64>,
    competition_total: f64,
    time: f64,
    rng: ChaCha8Rng,
    proposal: Vec<f64>,
    pub births_proposed: u64,
    pub births_accepted: u64,
    pub deaths: u64,
    events: u64,
}

impl<'m> Simulation<'m> {
    pub fn new(model: &'m ModelSpec, window: TorusWindow, cfg: Configuration, rng: ChaCha8Rng) -> Result<Self> {
        let cutoff = model.interaction_range();
        let grid = if cutoff > 0.0 {
            Some(CellGrid::build(window, cutoff, &cfg)?)
        } else {
            None
        };
        let mut sim = Simulation {
            model,
            window,
            cfg,
            grid,
            cutoff,
            rates: Vec::new(),
            competition_total: 0.0,
            time: 0.0,
            rng,
            proposal: vec![0.0; window.dimension()],
            births_proposed: 0,
            births_accepted: 0,
            deaths: 0,
            events: 0,
        };
        sim.recompute_rates();
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn configuration(&self) -> &Configuration {
        &self.cfg
    }

    pub fn grid(&self) -> Option<&CellGrid> {
        self.grid.as_ref()
    }

    /// Location of the most recent birth proposal.
    pub fn last_proposal(&self) -> &[f64] {
        &self.proposal
    }

    /// Cached competition death rate of the point in `slot`.
    pub fn cached_rate(&self, slot: usize) -> Option<f64> {
        self.rates.get(slot).copied()
    }

    fn recompute_rates(&mut self) {
        self.rates.clear();
        if let Regime::Competition { kernel } = self.model.regime() {
            for slot in 0..self.cfg.len() {
                let id = self.cfg.id_at(slot);
                let r = kernel_sum(kernel, &self.window, self.cfg.at(slot), &self.cfg, self.grid.as_ref(), Some(id));
                self.rates.push(r);
            }
            self.competition_total = self.rates.iter().sum();
        }
    }

    pub fn death_total(&self) -> f64 {
        match self.model.regime() {
            Regime::Free | Regime::Establishment { .. } => 0.0,
            Regime::GlobalRegulation { mortality } | Regime::Glauber { mortality, .. } => {
                mortality * self.cfg.len() as f64
            }
            Regime::Competition { .. } => self.competition_total,
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.model.birth_proposal_rate(&self.window) + self.death_total()
    }

    /// Exponential waiting time to the next event at the current total rate.
    pub fn draw_waiting_time(&mut self) -> Result<f64> {
        let rate = self.total_rate();
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::NonFiniteRate { time: self.time, rate });
        }
        if rate == 0.0 {
            return Ok(f64::INFINITY);
        }
        let u: f64 = self.rng.random();
        Ok(-(1.0 - u).ln() / rate)
    }

    /// Executes one event at time `at`.
    pub fn fire(&mut self, at: f64) -> Result<Event> {
        self.time = at;
        let birth_rate = self.model.birth_proposal_rate(&self.window);
        let death_total = self.death_total();
        let u = self.rng.random::<f64>() * (birth_rate + death_total);
        let kind = if u < birth_rate || death_total <= 0.0 || self.cfg.is_empty() {
            self.propose_birth()
        } else {
            let slot = self.select_death(u - birth_rate);
            self.kill(slot)
        };
        self.events += 1;
        if self.events.is_multiple_of(RESUM_INTERVAL) && !self.rates.is_empty() {
            self.competition_total = self.rates.iter().sum();
        }
        #[cfg(debug_assertions)]
        if self.events.is_multiple_of(AUDIT_INTERVAL) {
            self.audit_rates();
        }
        Ok(Event { time: at, kind })
    }

    fn propose_birth(&mut self) -> EventKind {
        self.births_proposed += 1;
        let side = self.window.side();
        for v in self.proposal.iter_mut() {
            *v = self.window.wrap(self.rng.random::<f64>() * side);
        }
        if self.model.establishment_kernel().is_some() {
            let p = self.model.birth_acceptance(&self.proposal, &self.cfg, &self.window, self.grid.as_ref());
            if self.rng.random::<f64>() >= p {
                return EventKind::RejectedBirth;
            }
        }
        self.births_accepted += 1;
        let id = self.cfg.insert(&self.proposal);
        if let Some(grid) = self.grid.as_mut() {
            grid.insert(id, &self.proposal);
        }
        if let Regime::Competition { kernel } = self.model.regime() {
            let grid = self.grid.as_ref().expect("competition keeps a grid");
            let rates = &mut self.rates;
            let mut own = 0.0;
            grid.for_each_within(&self.cfg, &self.proposal, self.cutoff, Some(id), |_, slot, r| {
                let a = kernel.eval_radial(r);
                rates[slot] += a;
                own += a;
            })
            .expect("cutoff equals grid cutoff");
            rates.push(own);
            self.competition_total += 2.0 * own;
        }
        EventKind::Birth(id)
    }

    fn select_death(&self, target: f64) -> usize {
        let n = self.cfg.len();
        match self.model.regime() {
            Regime::Competition { .. } => {
                let mut acc = 0.0;
                let mut last_positive = 0;
                for (slot, &r) in self.rates.iter().enumerate() {
                    if r > 0.0 {
                        acc += r;
                        last_positive = slot;
                        if target < acc {
                            return slot;
                        }
                    }
                }
                // Running total drifted above the exact sum.
                last_positive
            }
            Regime::GlobalRegulation { mortality } | Regime::Glauber { mortality, .. } => {
                ((target / mortality) as usize).min(n - 1)
            }
            Regime::Free | Regime::Establishment { .. } => unreachable!("no deaths in pure-birth regimes"),
        }
    }

    fn kill(&mut self, slot: usize) -> EventKind {
        let id = self.cfg.id_at(slot);
        if let Regime::Competition { kernel } = self.model.regime() {
            let grid = self.grid.as_ref().expect("competition keeps a grid");
            let rates = &mut self.rates;
            let mut own = 0.0;
            grid.for_each_within(&self.cfg, self.cfg.at(slot), self.cutoff, Some(id), |_, other, r| {
                let a = kernel.eval_radial(r);
                rates[other] -= a;
                own += a;
            })
            .expect("cutoff equals grid cutoff");
            self.competition_total -= 2.0 * own;
            rates.swap_remove(slot);
        }
        if let Some(grid) = self.grid.as_mut() {
            grid.remove(id);
        }
        self.cfg.remove(id);
        self.deaths += 1;
        EventKind::Death(id)
    }

    /// Largest absolute deviation of cached competition rates from a full
    /// recomputation.
    pub fn rate_cache_deviation(&self) -> f64 {
        let Regime::Competition { kernel } = self.model.regime() else {
            return 0.0;
        };
        (0..self.cfg.len())
            .map(|slot| {
                let id = self.cfg.id_at(slot);
                let exact = kernel_sum(kernel, &self.window, self.cfg.at(slot), &self.cfg, self.grid.as_ref(), Some(id));
                (exact - self.rates[slot]).abs()
            })
            .fold(0.0, f64::max)
    }

    #[cfg(debug_assertions)]
    fn audit_rates(&self) {
        let dev = self.rate_cache_deviation();
        let scale = self.rates.iter().fold(1.0f64, |m, &r| m.max(r));
        assert!(dev <= 1e-9 * scale, "competition rate cache drifted by {dev}");
    }
}

fn record(sim: &Simulation<'_>, scenario: &Scenario, time: f64) -> Result<Sample> {
    let cfg = sim.configuration();
    Ok(Sample {
        time,
        count: cfg.len(),
        births_proposed: sim.births_proposed,
        births_accepted: sim.births_accepted,
        deaths: sim.deaths,
        histogram: pair_distance_histogram(&scenario.window, cfg, &scenario.pair_bins)?,
        snapshot: scenario.record_snapshots.then(|| cfg.clone()),
    })
}

/// Runs replica `stream` of the scenario.
pub fn run_replica(scenario: &Scenario, stream: u64) -> Result<Trajectory> {
    scenario.validate()?;
    let mut rng = replica_rng(scenario.seed, stream);
    let cfg = match &scenario.initial {
        InitialState::Poisson { intensity } => sample_poisson_with(&scenario.window, *intensity, &mut rng)?,
        InitialState::Explicit(cfg) => cfg.clone(),
    };
    let initial_count = cfg.len();
    if initial_count > scenario.population_cap {
        return Err(Error::Explosion {
            time: 0.0,
            population: initial_count,
            cap: scenario.population_cap,
        });
    }
    let mut sim = Simulation::new(&scenario.model, scenario.window, cfg, rng)?;
    let mut samples = Vec::with_capacity(scenario.sample_times.len());
    let mut next = 0;
    loop {
        let t_next = sim.time() + sim.draw_waiting_time()?;
        while next < scenario.sample_times.len() && scenario.sample_times[next] < t_next {
            samples.push(record(&sim, scenario, scenario.sample_times[next])?);
            next += 1;
        }
        if t_next > scenario.t_end {
            break;
        }
        sim.fire(t_next)?;
        if sim.configuration().len() > scenario.population_cap {
            return Err(Error::Explosion {
                time: t_next,
                population: sim.configuration().len(),
                cap: scenario.population_cap,
            });
        }
    }
    Ok(Trajectory {
        stream,
        initial_count,
        samples,
        births_proposed: sim.births_proposed,
        births_accepted: sim.births_accepted,
        deaths: sim.deaths,
        final_count: sim.configuration().len(),
    })
}

/// Single replica on stream 0.
pub fn run(scenario: &Scenario) -> Result<Trajectory> {
    run_replica(scenario, 0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub scenario_digest: String,
    pub scenario: Scenario,
    /// Stream selector of each replica, in result order.
    pub streams: Vec<u64>,
    pub trajectories: Vec<Trajectory>,
}

impl EnsembleResult {
    pub fn n_replicas(&self) -> usize {
        self.trajectories.len()
    }

    pub fn sample_times(&self) -> &[f64] {
        &self.scenario.sample_times
    }

    pub fn window(&self) -> &TorusWindow {
        &self.scenario.window
    }

    pub fn bins(&self) -> &RadialBins {
        &self.scenario.pair_bins
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EnsembleOptions {
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

/// Runs the given replica streams, assembling results in stream order
/// whatever the thread count.
pub fn run_streams(scenario: &Scenario, streams: &[u64], opts: &EnsembleOptions) -> Result<EnsembleResult> {
    if streams.is_empty() {
        return Err(Error::InvalidParameter("an ensemble needs at least one replica".into()));
    }
    scenario.validate()?;
    let results: Vec<Result<Trajectory>> = match opts.threads {
        Some(1) => streams.iter().map(|&s| run_replica(scenario, s)).collect(),
        threads => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            pool.install(|| streams.par_iter().map(|&s| run_replica(scenario, s)).collect())
        }
    };
    let mut trajectories = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        trajectories.push(r.map_err(|e| Error::Replica {
            index,
            source: Box::new(e),
        })?);
    }
    Ok(EnsembleResult {
        scenario_digest: scenario.digest(),
        scenario: scenario.clone(),
        streams: streams.to_vec(),
        trajectories,
    })
}

pub fn run_ensemble_with(scenario: &Scenario, n_replicas: usize, opts: &EnsembleOptions) -> Result<EnsembleResult> {
    let streams: Vec<u64> = (0..n_replicas as u64).collect();
    run_streams(scenario, &streams, opts)
}

/// Replica `i` runs on stream `i` of the scenario seed.
pub fn run_ensemble(scenario: &Scenario, n_replicas: usize) -> Result<EnsembleResult> {
    run_ensemble_with(scenario, n_replicas, &EnsembleOptions::default())
}
