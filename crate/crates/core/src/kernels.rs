//! Radial kernel families used as competition kernels and establishment
//! potentials.
//!
//! Every kernel is a nonnegative function of `|x|` on `R^d`, so evenness
//! holds by construction. Integrals over `R^d` reduce to one-dimensional
//! radial integrals weighted by the surface area of the unit sphere; the
//! parametric families use closed forms, tabulated kernels use adaptive
//! quadrature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};

use crate::error::{Error, Result};
use crate::quadrature;

const QUAD_REL_TOL: f64 = 1e-10;

/// Family and parameters of a radial kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `height` on the closed ball of radius `radius`, zero outside.
    TopHat { radius: f64, height: f64 },
    /// `amplitude * exp(-r^2 / (2 length_scale^2))`.
    Gaussian { amplitude: f64, length_scale: f64 },
    /// `amplitude * exp(-rate * r)`.
    Exponential { amplitude: f64, rate: f64 },
    /// Piecewise-linear in `r` between `(radii[i], values[i])`, constant
    /// below the first radius and zero beyond the last.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    dimension: usize,
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Surface area of the unit sphere in `R^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

fn positive_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!("{name} must be positive and finite, got {v}")))
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidKernel("dimension must be at least 1".into()));
        }
        match &family {
            KernelFamily::TopHat { radius, height } => {
                positive_finite("top-hat radius", *radius)?;
                positive_finite("top-hat height", *height)?;
            }
            KernelFamily::Gaussian { amplitude, length_scale } => {
                positive_finite("gaussian amplitude", *amplitude)?;
                positive_finite("gaussian length scale", *length_scale)?;
            }
            KernelFamily::Exponential { amplitude, rate } => {
                positive_finite("exponential amplitude", *amplitude)?;
                positive_finite("exponential rate", *rate)?;
            }
            KernelFamily::Tabulated { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(Error::InvalidKernel(
                        "tabulated kernel needs equally long, non-empty radii and values".into(),
                    ));
                }
                if radii.iter().any(|r| !r.is_finite() || *r < 0.0) {
                    return Err(Error::InvalidKernel("tabulated radii must be finite and >= 0".into()));
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidKernel("tabulated radii must be strictly increasing".into()));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidKernel("tabulated values must be finite and >= 0".into()));
                }
            }
        }
        let kernel = KernelSpec { family, dimension };
        let mass = kernel.total_mass();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidKernel(format!("total mass must be positive, got {mass}")));
        }
        Ok(kernel)
    }

    pub fn top_hat(dimension: usize, radius: f64, height: f64) -> Result<Self> {
        Self::new(KernelFamily::TopHat { radius, height }, dimension)
    }

    pub fn gaussian(dimension: usize, amplitude: f64, length_scale: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian { amplitude, length_scale }, dimension)
    }

    pub fn exponential(dimension: usize, amplitude: f64, rate: f64) -> Result<Self> {
        Self::new(KernelFamily::Exponential { amplitude, rate }, dimension)
    }

    pub fn tabulated(dimension: usize, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(KernelFamily::Tabulated { radii, values }, dimension)
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Whether the family is known to be continuous and positive definite.
    ///
    /// Gaussians and `exp(-beta r)` are positive definite in every
    /// dimension. Top-hats are discontinuous and not positive definite;
    /// tabulated kernels are not certified.
    pub fn is_known_positive_definite(&self) -> bool {
        matches!(
            self.family,
            KernelFamily::Gaussian { .. } | KernelFamily::Exponential { .. }
        )
    }

    /// Value at an offset. Panics in debug builds on a dimension mismatch.
    pub fn eval(&self, offset: &[f64]) -> f64 {
        debug_assert_eq!(offset.len(), self.dimension);
        let r2: f64 = offset.iter().map(|v| v * v).sum();
        self.eval_radial(r2.sqrt())
    }

    /// Value at distance `r >= 0` from the origin.
    pub fn eval_radial(&self, r: f64) -> f64 {
        match &self.family {
            KernelFamily::TopHat { radius, height } => {
                if r <= *radius {
                    *height
                } else {
                    0.0
                }
            }
            KernelFamily::Gaussian { amplitude, length_scale } => {
                amplitude * (-r * r / (2.0 * length_scale * length_scale)).exp()
            }
            KernelFamily::Exponential { amplitude, rate } => amplitude * (-rate * r).exp(),
            KernelFamily::Tabulated { radii, values } => tabulated_value(radii, values, r),
        }
    }

    /// `∫_{R^d} kernel(x) dx`.
    pub fn total_mass(&self) -> f64 {
        let d = self.dimension;
        match &self.family {
            KernelFamily::TopHat { radius, height } => height * unit_ball_volume(d) * radius.powi(d as i32),
            KernelFamily::Gaussian { amplitude, length_scale } => {
                amplitude * (2.0 * PI).powf(d as f64 / 2.0) * length_scale.powi(d as i32)
            }
            KernelFamily::Exponential { amplitude, rate } => {
                amplitude * unit_sphere_area(d) * gamma(d as f64) / rate.powi(d as i32)
            }
            KernelFamily::Tabulated { radii, .. } => self.radial_quadrature(0.0, *radii.last().unwrap()),
        }
    }

    /// `∫_{|x| <= h} kernel(x) dx`.
    pub fn inner_mass(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let d = self.dimension;
        match &self.family {
            KernelFamily::TopHat { radius, height } => height * unit_ball_volume(d) * radius.min(h).powi(d as i32),
            KernelFamily::Gaussian { length_scale, .. } => {
                self.total_mass() * gamma_lr(d as f64 / 2.0, h * h / (2.0 * length_scale * length_scale))
            }
            KernelFamily::Exponential { rate, .. } => self.total_mass() * gamma_lr(d as f64, rate * h),
            KernelFamily::Tabulated { radii, .. } => self.radial_quadrature(0.0, h.min(*radii.last().unwrap())),
        }
    }

    /// `δ(h) = 2 ∫_{|x| > h} kernel(x) dx`, computed from the upper tail
    /// directly where a closed form exists so that it stays accurate when
    /// the tail is tiny.
    pub fn tail_mass(&self, h: f64) -> f64 {
        let d = self.dimension;
        let tail = match &self.family {
            KernelFamily::TopHat { radius, .. } => {
                if h >= *radius {
                    0.0
                } else {
                    self.total_mass() - self.inner_mass(h)
                }
            }
            KernelFamily::Gaussian { length_scale, .. } => {
                if h <= 0.0 {
                    self.total_mass()
                } else {
                    self.total_mass() * gamma_ur(d as f64 / 2.0, h * h / (2.0 * length_scale * length_scale))
                }
            }
            KernelFamily::Exponential { rate, .. } => {
                if h <= 0.0 {
                    self.total_mass()
                } else {
                    self.total_mass() * gamma_ur(d as f64, rate * h)
                }
            }
            KernelFamily::Tabulated { radii, .. } => {
                let last = *radii.last().unwrap();
                if h >= last {
                    0.0
                } else {
                    self.radial_quadrature(h.max(0.0), last)
                }
            }
        };
        2.0 * tail.max(0.0)
    }

    /// Smallest radius beyond which the kernel never exceeds `eps`.
    ///
    /// Returns 0 when the kernel is below `eps` everywhere.
    pub fn effective_range(&self, eps: f64) -> f64 {
        match &self.family {
            KernelFamily::TopHat { radius, height } => {
                if *height > eps {
                    *radius
                } else {
                    0.0
                }
            }
            KernelFamily::Gaussian { amplitude, length_scale } => {
                if *amplitude > eps {
                    length_scale * (2.0 * (amplitude / eps).ln()).sqrt()
                } else {
                    0.0
                }
            }
            KernelFamily::Exponential { amplitude, rate } => {
                if *amplitude > eps {
                    (amplitude / eps).ln() / rate
                } else {
                    0.0
                }
            }
            KernelFamily::Tabulated { radii, values } => {
                let n = radii.len();
                if values[n - 1] > eps {
                    return radii[n - 1];
                }
                // Last knot whose value exceeds eps; the crossing lies on the
                // following segment.
                match (0..n - 1).rev().find(|&i| values[i] > eps) {
                    None => 0.0,
                    Some(i) => {
                        let (r0, r1, v0, v1) = (radii[i], radii[i + 1], values[i], values[i + 1]);
                        r0 + (v0 - eps) / (v0 - v1) * (r1 - r0)
                    }
                }
            }
        }
    }

    /// Radial integral of `S_d r^{d-1} f(r)` over `[lo, hi]`, split at the
    /// tabulation knots so each piece is polynomial.
    fn radial_quadrature(&self, lo: f64, hi: f64) -> f64 {
        let d = self.dimension;
        let area = unit_sphere_area(d);
        let integrand = |r: f64| area * r.powi(d as i32 - 1) * self.eval_radial(r);
        let mut breaks = vec![lo];
        if let KernelFamily::Tabulated { radii, .. } = &self.family {
            breaks.extend(radii.iter().copied().filter(|&r| r > lo && r < hi));
        }
        breaks.push(hi);
        breaks
            .windows(2)
            .map(|w| quadrature::integrate(integrand, w[0], w[1], QUAD_REL_TOL, 0.0))
            .sum()
    }
}

fn tabulated_value(radii: &[f64], values: &[f64], r: f64) -> f64 {
    let n = radii.len();
    if r > radii[n - 1] {
        return 0.0;
    }
    if r <= radii[0] {
        return values[0];
    }
    // radii[i] < r <= radii[i + 1]
    let i = radii.partition_point(|&x| x < r) - 1;
    let t = (r - radii[i]) / (radii[i + 1] - radii[i]);
    values[i] + t * (values[i + 1] - values[i])
}
