//! Closed-form densities, comparison bounds and constants for the
//! regulation regimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Configuration, TorusWindow};
use crate::kernels::KernelSpec;
use crate::models::energy;

/// Absolute slack in the superstability check.
pub const SUPERSTABILITY_SLACK: f64 = 1e-12;
/// Relative margin of `D` above `√(σ/c)`.
pub const DEFAULT_D_MARGIN: f64 = 0.05;
pub const DEFAULT_H_GRID: usize = 1000;

/// Free development: `k0 + σ t`.
pub fn free_density(k0: f64, sigma: f64, t: f64) -> f64 {
    k0 + sigma * t
}

/// Constant mortality: `e^{-mt} k0 + (σ/m)(1 - e^{-mt})`.
pub fn global_reg_density(k0: f64, sigma: f64, m: f64, t: f64) -> f64 {
    let e = (-m * t).exp();
    e * k0 + sigma / m * (1.0 - e)
}

/// Lower bound on the establishment-model density with unit birth
/// intensity: `(1/⟨φ⟩) ln(⟨φ⟩ t + e^{k0 ⟨φ⟩})`. For intensity `σ` pass
/// `σ t` as the time.
pub fn establishment_lower_bound(k0: f64, phi_mass: f64, t: f64) -> f64 {
    // ln(⟨φ⟩t + e^{k0⟨φ⟩}) = k0⟨φ⟩ + ln1p(⟨φ⟩t e^{-k0⟨φ⟩})
    let a = k0 * phi_mass;
    (a + (phi_mass * t * (-a).exp()).ln_1p()) / phi_mass
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FTypeProvenance {
    /// Balls `B(0, k)` in `R^d`.
    BallFamily { dimension: usize },
    UserSupplied,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FTypeParams {
    pub f: f64,
    pub provenance: FTypeProvenance,
}

/// `F = 2^d - 1` for growing balls.
pub fn f_type_ball(dimension: usize) -> Result<FTypeParams> {
    if dimension == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(FTypeParams {
        f: 2f64.powi(dimension as i32) - 1.0,
        provenance: FTypeProvenance::BallFamily { dimension },
    })
}

pub fn f_type_user(f: f64) -> Result<FTypeParams> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::InvalidParameter(format!("F must be positive, got {f}")));
    }
    Ok(FTypeParams {
        f,
        provenance: FTypeProvenance::UserSupplied,
    })
}

/// Ball-family constant for the window's dimension.
pub fn f_type_bound(w: &TorusWindow) -> FTypeParams {
    f_type_ball(w.dimension()).expect("windows have dimension >= 1")
}

/// `c(h) = (⟨a⟩ - δ(h))² / (δ(h) + (F + 1)⟨a⟩)`, or `None` where
/// `⟨a⟩ - δ(h) <= 0`.
pub fn superstability_c(a: &KernelSpec, f: f64, h: f64) -> Option<f64> {
    let mass = a.total_mass();
    let delta = a.tail_mass(h);
    let gap = mass - delta;
    (gap > 0.0).then(|| gap * gap / (delta + (f + 1.0) * mass))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Superstability {
    pub c: f64,
    pub h_star: f64,
    pub delta: f64,
}

/// Maximizes `c(h)` over `h_k = k / (n + 1)`, `k = 1..=n`. Ties keep the
/// smallest `h`.
pub fn superstability_constant_on_grid(a: &KernelSpec, f: f64, n: usize) -> Result<Superstability> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::InvalidParameter(format!("F must be positive, got {f}")));
    }
    let mut best: Option<Superstability> = None;
    for k in 1..=n {
        let h = k as f64 / (n + 1) as f64;
        if let Some(c) = superstability_c(a, f, h) {
            if best.is_none_or(|b| c > b.c) {
                best = Some(Superstability {
                    c,
                    h_star: h,
                    delta: a.tail_mass(h),
                });
            }
        }
    }
    best.ok_or(Error::KernelTooSpread)
}

pub fn superstability_constant(a: &KernelSpec, f: f64) -> Result<Superstability> {
    superstability_constant_on_grid(a, f, DEFAULT_H_GRID)
}

/// `2 E_a(η) >= c |η|² / |Λ|` up to [`SUPERSTABILITY_SLACK`], evaluated
/// literally (a singleton fails whenever `c > 0`).
pub fn check_superstability(a: &KernelSpec, c: f64, w: &TorusWindow, cfg: &Configuration) -> bool {
    let n = cfg.len() as f64;
    2.0 * energy(a, cfg, w) >= c * n * n / w.volume() - SUPERSTABILITY_SLACK
}

/// Positive solution of `g' = σ - c g²` with `g(0) = g0 > √(σ/c)`:
/// `√(σ/c) (1 + 2 / (C e^{2√(cσ) t} - 1))`.
pub fn riccati_solution(sigma: f64, c: f64, g0: f64, t: f64) -> Result<f64> {
    if !(sigma > 0.0 && c > 0.0) {
        return Err(Error::InvalidParameter("sigma and c must be positive".into()));
    }
    let eq = (sigma / c).sqrt();
    if !(g0 > eq) {
        return Err(Error::OutOfRegime(format!("g0 = {g0} must exceed sqrt(sigma/c) = {eq}")));
    }
    let big_c = 1.0 + 2.0 / (g0 / eq - 1.0);
    let denom = big_c * (2.0 * (c * sigma).sqrt() * t).exp() - 1.0;
    Ok(eq * (1.0 + 2.0 / denom))
}

/// `max(ρ0, (1 + margin) √(σ/c))`.
pub fn density_bound_d_with_margin(sigma: f64, c: f64, rho0: f64, margin: f64) -> f64 {
    rho0.max((1.0 + margin) * (sigma / c).sqrt())
}

pub fn density_bound_d(sigma: f64, c: f64, rho0: f64) -> f64 {
    density_bound_d_with_margin(sigma, c, rho0, DEFAULT_D_MARGIN)
}

/// `e^{-2 a t} k2_0 + (σ D / a)(1 - e^{-2 a t})` for `a = a(u) > 0`.
pub fn second_order_bound(a_u: f64, k2_0: f64, sigma: f64, d: f64, t: f64) -> Result<f64> {
    if !(a_u > 0.0) {
        return Err(Error::OutOfRegime(format!("second-order bound needs a(u) > 0, got {a_u}")));
    }
    let x = -2.0 * a_u * t;
    Ok(x.exp() * k2_0 - sigma * d / a_u * x.exp_m1())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompetitionBound {
    pub c: f64,
    pub h_star: f64,
    pub d: f64,
    pub sigma: f64,
    pub kernel_mass: f64,
    pub delta_h_star: f64,
    pub f: f64,
}

impl CompetitionBound {
    /// Superstability constant (optionally rescaled, for negative
    /// controls) and the resulting density bound.
    pub fn derive(a: &KernelSpec, f: f64, sigma: f64, rho0: f64, c_scale: f64) -> Result<Self> {
        let ss = superstability_constant(a, f)?;
        let c = ss.c * c_scale;
        Ok(CompetitionBound {
            c,
            h_star: ss.h_star,
            d: density_bound_d(sigma, c, rho0),
            sigma,
            kernel_mass: a.total_mass(),
            delta_h_star: ss.delta,
            f,
        })
    }
}

/// Classical fourth-order Runge–Kutta for a scalar autonomous ODE,
/// returning the path on `steps + 1` equally spaced times.
pub fn rk4_path<F: Fn(f64) -> f64>(f: F, y0: f64, t_end: f64, steps: usize) -> Vec<(f64, f64)> {
    let h = t_end / steps as f64;
    let mut y = y0;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, y));
    for i in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push(((i + 1) as f64 * h, y));
    }
    out
}

pub fn rk4<F: Fn(f64) -> f64>(f: F, y0: f64, t_end: f64, steps: usize) -> f64 {
    rk4_path(f, y0, t_end, steps).last().unwrap().1
}
