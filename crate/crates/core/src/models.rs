//! Birth and death rates of the five regulation regimes.
//!
//! Births are proposed uniformly at the constant intensity `σ` per unit
//! volume and accepted with probability `exp(-Σ φ(x - y))` where an
//! establishment potential is present. Deaths happen at a per-point rate
//! that is zero (free), constant `m` (global mortality, Glauber), or the
//! summed competition kernel over the other points.

use crate::error::{Error, Result};
use crate::geometry::{CellGrid, Configuration, PointId, TorusWindow};
use crate::kernels::KernelSpec;

/// Kernel sums ignore contributions beyond the radius where the kernel
/// drops below this value.
pub const KERNEL_TRUNCATION: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Regime {
    Free,
    GlobalRegulation { mortality: f64 },
    Establishment { phi: KernelSpec },
    Competition { kernel: KernelSpec },
    Glauber { mortality: f64, phi: KernelSpec },
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Free => "free",
            Regime::GlobalRegulation { .. } => "global-regulation",
            Regime::Establishment { .. } => "establishment",
            Regime::Competition { .. } => "competition",
            Regime::Glauber { .. } => "glauber",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    sigma: f64,
    regime: Regime,
}

impl ModelSpec {
    pub fn new(sigma: f64, regime: Regime) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        match &regime {
            Regime::GlobalRegulation { mortality } | Regime::Glauber { mortality, .. }
                if !(mortality.is_finite() && *mortality > 0.0) =>
            {
                return Err(Error::InvalidParameter(format!(
                    "mortality must be positive, got {mortality}"
                )));
            }
            _ => {}
        }
        Ok(ModelSpec { sigma, regime })
    }

    pub fn free(sigma: f64) -> Result<Self> {
        Self::new(sigma, Regime::Free)
    }

    pub fn global_regulation(sigma: f64, mortality: f64) -> Result<Self> {
        Self::new(sigma, Regime::GlobalRegulation { mortality })
    }

    pub fn establishment(sigma: f64, phi: KernelSpec) -> Result<Self> {
        Self::new(sigma, Regime::Establishment { phi })
    }

    pub fn competition(sigma: f64, kernel: KernelSpec) -> Result<Self> {
        Self::new(sigma, Regime::Competition { kernel })
    }

    pub fn glauber(sigma: f64, mortality: f64, phi: KernelSpec) -> Result<Self> {
        Self::new(sigma, Regime::Glauber { mortality, phi })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn regime(&self) -> &Regime {
        &self.regime
    }

    pub fn mortality(&self) -> Option<f64> {
        match self.regime {
            Regime::GlobalRegulation { mortality } | Regime::Glauber { mortality, .. } => Some(mortality),
            _ => None,
        }
    }

    /// Establishment potential, if births are suppressed.
    pub fn establishment_kernel(&self) -> Option<&KernelSpec> {
        match &self.regime {
            Regime::Establishment { phi } | Regime::Glauber { phi, .. } => Some(phi),
            _ => None,
        }
    }

    pub fn competition_kernel(&self) -> Option<&KernelSpec> {
        match &self.regime {
            Regime::Competition { kernel } => Some(kernel),
            _ => None,
        }
    }

    /// The one spatial kernel the regime uses, if any.
    pub fn interaction_kernel(&self) -> Option<&KernelSpec> {
        self.establishment_kernel().or_else(|| self.competition_kernel())
    }

    /// Truncation radius of the interaction kernel (0 without one).
    pub fn interaction_range(&self) -> f64 {
        self.interaction_kernel()
            .map(|k| k.effective_range(KERNEL_TRUNCATION))
            .unwrap_or(0.0)
    }

    pub fn dimension(&self) -> Option<usize> {
        self.interaction_kernel().map(KernelSpec::dimension)
    }

    /// Dominating birth intensity `σ |Λ|`, the same for every regime.
    pub fn birth_proposal_rate(&self, w: &TorusWindow) -> f64 {
        self.sigma * w.volume()
    }

    /// Probability that a birth proposed at `x` is kept.
    pub fn birth_acceptance(&self, x: &[f64], cfg: &Configuration, w: &TorusWindow, grid: Option<&CellGrid>) -> f64 {
        match self.establishment_kernel() {
            None => 1.0,
            Some(phi) => {
                let s = kernel_sum(phi, w, x, cfg, grid, None);
                (-s).exp()
            }
        }
    }

    /// Per-point death rate of a member of `cfg`.
    pub fn death_rate(&self, id: PointId, cfg: &Configuration, w: &TorusWindow, grid: Option<&CellGrid>) -> Result<f64> {
        let x = cfg
            .position(id)
            .ok_or_else(|| Error::Contract(format!("point {id} not in configuration")))?;
        Ok(match &self.regime {
            Regime::Free | Regime::Establishment { .. } => 0.0,
            Regime::GlobalRegulation { mortality } | Regime::Glauber { mortality, .. } => *mortality,
            Regime::Competition { kernel } => kernel_sum(kernel, w, x, cfg, grid, Some(id)),
        })
    }
}

/// `Σ_{y ∈ cfg, y ≠ exclude} kernel(x - y)` over points within the kernel's
/// truncation radius. Uses the grid when its cells are wide enough,
/// otherwise scans every point.
pub fn kernel_sum(
    kernel: &KernelSpec,
    w: &TorusWindow,
    x: &[f64],
    cfg: &Configuration,
    grid: Option<&CellGrid>,
    exclude: Option<PointId>,
) -> f64 {
    let cutoff = kernel.effective_range(KERNEL_TRUNCATION);
    if cutoff == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    if let Some(g) = grid.filter(|g| g.cell_side() >= cutoff) {
        g.for_each_within(cfg, x, cutoff, exclude, |_, _, r| sum += kernel.eval_radial(r))
            .expect("cutoff checked against cell side");
    } else {
        for (id, y) in cfg.iter() {
            if Some(id) == exclude {
                continue;
            }
            let r = w.distance(x, y);
            if r <= cutoff {
                sum += kernel.eval_radial(r);
            }
        }
    }
    sum
}

/// `E_a(η) = Σ_{{x,y} ⊂ η} a(x - y)` under the periodic metric.
pub fn energy(a: &KernelSpec, cfg: &Configuration, w: &TorusWindow) -> f64 {
    let cutoff = a.effective_range(KERNEL_TRUNCATION);
    if cutoff == 0.0 || cfg.len() < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    match CellGrid::build(*w, cutoff, cfg) {
        Ok(grid) => {
            for (id, x) in cfg.iter() {
                grid.for_each_within(cfg, x, cutoff, None, |other, _, r| {
                    if other > id {
                        sum += a.eval_radial(r);
                    }
                })
                .expect("cutoff equals grid cutoff");
            }
        }
        Err(_) => {
            for i in 0..cfg.len() {
                for j in i + 1..cfg.len() {
                    let r = w.distance(cfg.at(i), cfg.at(j));
                    if r <= cutoff {
                        sum += a.eval_radial(r);
                    }
                }
            }
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_poisson;
    use proptest::prelude::*;

    fn top_hat() -> KernelSpec {
        KernelSpec::top_hat(1, 0.5, 1.0).unwrap()
    }

    #[test]
    fn proposal_rate_is_sigma_volume() {
        let m = ModelSpec::free(1.0).unwrap();
        assert_eq!(m.birth_proposal_rate(&TorusWindow::new(1, 50.0).unwrap()), 50.0);
        let m = ModelSpec::free(0.5).unwrap();
        assert_eq!(m.birth_proposal_rate(&TorusWindow::new(2, 10.0).unwrap()), 50.0);
    }

    #[test]
    fn acceptance_examples() {
        let w = TorusWindow::new(1, 10.0).unwrap();
        let est = ModelSpec::establishment(1.0, top_hat()).unwrap();
        let empty = Configuration::new(1);
        assert_eq!(est.birth_acceptance(&[1.0], &empty, &w, None), 1.0);

        let cfg = Configuration::from_points(&w, &[vec![1.3]]).unwrap();
        let grid = CellGrid::build(w, 0.5, &cfg).unwrap();
        let p = est.birth_acceptance(&[1.0], &cfg, &w, Some(&grid));
        assert!((p - (-1.0f64).exp()).abs() < 1e-15);
        // The acceptance does not depend on which configuration is present
        // for the proposal rate.
        assert_eq!(est.birth_proposal_rate(&w), 10.0);

        let comp = ModelSpec::competition(1.0, top_hat()).unwrap();
        assert_eq!(comp.birth_acceptance(&[1.0], &cfg, &w, Some(&grid)), 1.0);
    }

    #[test]
    fn death_rate_examples() {
        let w = TorusWindow::new(1, 10.0).unwrap();
        let cfg = Configuration::from_points(&w, &[vec![5.0], vec![5.2], vec![4.6], vec![5.9]]).unwrap();
        let grid = CellGrid::build(w, 0.5, &cfg).unwrap();

        assert_eq!(ModelSpec::free(1.0).unwrap().death_rate(0, &cfg, &w, Some(&grid)).unwrap(), 0.0);
        let glob = ModelSpec::global_regulation(1.0, 2.0).unwrap();
        assert_eq!(glob.death_rate(0, &cfg, &w, None).unwrap(), 2.0);
        assert_eq!(glob.death_rate(3, &cfg, &w, None).unwrap(), 2.0);

        // neighbors of point 0 at distances 0.2, 0.4, 0.9
        let comp = ModelSpec::competition(1.0, top_hat()).unwrap();
        assert_eq!(comp.death_rate(0, &cfg, &w, Some(&grid)).unwrap(), 2.0);
        assert_eq!(comp.death_rate(0, &cfg, &w, None).unwrap(), 2.0);
        assert!(matches!(comp.death_rate(9, &cfg, &w, None), Err(Error::Contract(_))));
    }

    #[test]
    fn energy_examples() {
        let w = TorusWindow::new(1, 10.0).unwrap();
        let a = top_hat();
        assert_eq!(energy(&a, &Configuration::new(1), &w), 0.0);
        let one = Configuration::from_points(&w, &[vec![3.0]]).unwrap();
        assert_eq!(energy(&a, &one, &w), 0.0);
        let two = Configuration::from_points(&w, &[vec![0.1], vec![9.8]]).unwrap();
        assert_eq!(energy(&a, &two, &w), 1.0);
    }

    #[test]
    fn invalid_models() {
        assert!(ModelSpec::free(0.0).is_err());
        assert!(ModelSpec::global_regulation(1.0, -1.0).is_err());
        assert!(ModelSpec::glauber(1.0, 0.0, top_hat()).is_err());
    }

    fn brute_energy(a: &KernelSpec, cfg: &Configuration, w: &TorusWindow) -> f64 {
        let mut s = 0.0;
        for i in 0..cfg.len() {
            for j in i + 1..cfg.len() {
                s += a.eval_radial(w.distance(cfg.at(i), cfg.at(j)));
            }
        }
        s
    }

    #[test]
    fn competition_rates_match_pair_sums() {
        let w = TorusWindow::new(1, 20.0).unwrap();
        let a = top_hat();
        let comp = ModelSpec::competition(1.0, a.clone()).unwrap();
        for seed in 0..500 {
            let cfg = sample_poisson(&w, 1.0 + (seed % 5) as f64, seed).unwrap();
            let grid = CellGrid::build(w, 0.5, &cfg).unwrap();
            let mut total = 0.0;
            for (id, x) in cfg.iter() {
                let fast = comp.death_rate(id, &cfg, &w, Some(&grid)).unwrap();
                let slow: f64 = cfg
                    .iter()
                    .filter(|&(o, _)| o != id)
                    .map(|(_, y)| a.eval_radial(w.distance(x, y)))
                    .sum();
                assert_eq!(fast, slow);
                total += fast;
            }
            let e = energy(&a, &cfg, &w);
            assert_eq!(2.0 * e, total);
            assert_eq!(e, brute_energy(&a, &cfg, &w));
        }
    }

    proptest! {
        #[test]
        fn gaussian_energy_vs_brute_force(pts in prop::collection::vec(prop::collection::vec(0.0f64..16.0, 2), 0..100)) {
            let w = TorusWindow::new(2, 16.0).unwrap();
            let a = KernelSpec::gaussian(2, 1.0, 0.4).unwrap();
            let cfg = Configuration::from_points(&w, &pts).unwrap();
            let e = energy(&a, &cfg, &w);
            let b = brute_energy(&a, &cfg, &w);
            prop_assert!((e - b).abs() <= 1e-9 * b.max(1.0));
            let comp = ModelSpec::competition(1.0, a.clone()).unwrap();
            let grid = CellGrid::build(w, a.effective_range(KERNEL_TRUNCATION), &cfg).unwrap();
            let total: f64 = cfg.ids().iter().map(|&id| comp.death_rate(id, &cfg, &w, Some(&grid)).unwrap()).sum();
            prop_assert!((2.0 * e - total).abs() <= 1e-10 * total.max(1.0));
        }

        #[test]
        fn acceptance_in_unit_interval(pts in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 1), 0..60), x in 0.0f64..10.0) {
            let w = TorusWindow::new(1, 10.0).unwrap();
            let cfg = Configuration::from_points(&w, &pts).unwrap();
            let m = ModelSpec::establishment(1.0, KernelSpec::exponential(1, 0.5, 3.0).unwrap()).unwrap();
            let p = m.birth_acceptance(&[x], &cfg, &w, None);
            prop_assert!(p > 0.0 && p <= 1.0);
        }
    }
}
