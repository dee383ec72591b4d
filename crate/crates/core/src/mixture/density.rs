//! Emission densities, parametrized by location and covariance.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SymMatrix};
use crate::recovery::EmissionFamily;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Trapezoid nodes for the Bessel integral.
const BESSEL_NODES: usize = 256;

/// One mixture component with its factorized covariance, ready for repeated
/// density evaluations.
#[derive(Clone, Debug)]
pub struct ComponentDensity {
    family: EmissionFamily,
    mean: Vec<f64>,
    chol: Cholesky,
    /// Log normalizing constant, without the Mahalanobis term.
    log_norm: f64,
}

impl ComponentDensity {
    pub fn new(mean: &[f64], sigma: &SymMatrix, family: EmissionFamily) -> Result<Self> {
        family.validate()?;
        let d = mean.len();
        if sigma.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: sigma.dim() });
        }
        let chol = Cholesky::new(sigma)?;
        let df = d as f64;
        let log_norm = match family {
            EmissionFamily::Gaussian | EmissionFamily::Laplace => -0.5 * (df * LN_2PI + chol.log_det()),
            EmissionFamily::Student { df: nu } => {
                let nu = nu as f64;
                // Scale matrix S = (nu - 2) / nu * Sigma.
                let log_det_s = df * libm::log((nu - 2.0) / nu) + chol.log_det();
                libm::lgamma(0.5 * (nu + df)) - libm::lgamma(0.5 * nu) - 0.5 * df * libm::log(nu * PI) - 0.5 * log_det_s
            }
        };
        Ok(ComponentDensity { family, mean: mean.to_vec(), chol, log_norm })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Log density at `x`; `scratch` needs `2 d` slots.
    pub fn ln_pdf(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let d = self.dim();
        let (r, rest) = scratch.split_at_mut(d);
        for c in 0..d {
            r[c] = x[c] - self.mean[c];
        }
        let q = self.chol.mahalanobis_sq(r, &mut rest[..d]);
        let df = d as f64;
        match self.family {
            EmissionFamily::Gaussian => self.log_norm - 0.5 * q,
            EmissionFamily::Student { df: nu } => {
                let nu = nu as f64;
                let q_s = q * nu / (nu - 2.0);
                self.log_norm - 0.5 * (nu + df) * libm::log1p(q_s / nu)
            }
            EmissionFamily::Laplace => {
                // int_0^inf w^{-d/2} e^{-q/(2w) - w} dw = 2 (q/2)^{v/2} K_v(sqrt(2q)), v = 1 - d/2
                let v = 1.0 - 0.5 * df;
                let q = q.max(1e-16);
                self.log_norm + libm::log(2.0) + 0.5 * v * libm::log(0.5 * q) + ln_bessel_k(v, libm::sqrt(2.0 * q))
            }
        }
    }
}

/// `log K_v(z)` for `z > 0` from `K_v(z) = int_0^inf exp(-z cosh t) cosh(v t) dt`.
pub(crate) fn ln_bessel_k(v: f64, z: f64) -> f64 {
    let v = v.abs();
    let z = z.max(1e-8);
    let g = |t: f64| -z * libm::cosh(t) + v * t + libm::log1p(libm::exp(-2.0 * v * t)) - libm::log(2.0);
    // The integrand peaks where sinh t = v / z; cut where it is e^-60 below the peak.
    let peak_t = libm::asinh(v / z);
    let peak = g(peak_t);
    let mut t_max = peak_t + 1.0;
    while g(t_max) > peak - 60.0 {
        t_max += 1.0 + 0.5 * t_max;
    }
    let h = t_max / BESSEL_NODES as f64;
    let mut vals = vec![0.0; BESSEL_NODES + 1];
    let mut top = f64::NEG_INFINITY;
    for (j, val) in vals.iter_mut().enumerate() {
        *val = g(j as f64 * h);
        top = top.max(*val);
    }
    let mut sum = 0.0;
    for (j, val) in vals.iter().enumerate() {
        let w = if j == 0 || j == BESSEL_NODES { 0.5 } else { 1.0 };
        sum += w * libm::exp(val - top);
    }
    top + libm::log(sum * h)
}

/// Density of `family` with mean `m` and covariance `sigma` at `x`.
pub fn emission_density(x: &[f64], m: &[f64], sigma: &SymMatrix, family: EmissionFamily) -> Result<f64> {
    Ok(libm::exp(ln_emission_density(x, m, sigma, family)?))
}

pub fn ln_emission_density(x: &[f64], m: &[f64], sigma: &SymMatrix, family: EmissionFamily) -> Result<f64> {
    if x.len() != m.len() {
        return Err(Error::DimensionMismatch { expected: m.len(), found: x.len() });
    }
    let comp = ComponentDensity::new(m, sigma, family)?;
    let mut scratch = vec![0.0; 2 * m.len()];
    Ok(comp.ln_pdf(x, &mut scratch))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_values() {
        let f = emission_density(&[0.0; 3], &[0.0; 3], &SymMatrix::identity(3), EmissionFamily::Gaussian).unwrap();
        assert!((f - libm::pow(2.0 * PI, -1.5)).abs() < 1e-15);
        let f = emission_density(&[1.0], &[0.0], &SymMatrix::identity(1), EmissionFamily::Gaussian).unwrap();
        assert!((f - 0.241_970_724_519_143_37).abs() < 1e-15);
    }

    #[test]
    fn student_variance_matched_mode() {
        // t_3 with scale 1/sqrt(3): Gamma(2) / (Gamma(3/2) sqrt(3 pi) / sqrt(3)) = 2 / pi.
        let f = emission_density(&[0.0], &[0.0], &SymMatrix::identity(1), EmissionFamily::Student { df: 3 }).unwrap();
        assert!((f - 2.0 / PI).abs() < 1e-14, "{f}");
    }

    #[test]
    fn bessel_half_order_closed_form() {
        // K_{1/2}(z) = sqrt(pi / (2 z)) e^{-z}
        for z in [1e-3, 0.1, 1.0, 7.5, 40.0] {
            let exact = 0.5 * libm::log(PI / (2.0 * z)) - z;
            assert!((ln_bessel_k(0.5, z) - exact).abs() < 1e-10, "z={z}");
            assert!((ln_bessel_k(-0.5, z) - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn laplace_one_dimensional_closed_form() {
        // sqrt(W) N(0, s^2), W ~ Exp(1): density exp(-sqrt(2)|x|/s) / (sqrt(2) s)
        let s = 1.7;
        let sigma = SymMatrix::from_diagonal(&[s * s]);
        for x in [0.05, 0.5, 2.0, 6.0] {
            let f = emission_density(&[x], &[0.0], &sigma, EmissionFamily::Laplace).unwrap();
            let exact = libm::exp(-libm::sqrt(2.0) * x / s) / (libm::sqrt(2.0) * s);
            assert!(((f - exact) / exact).abs() < 1e-9, "x={x}: {f} vs {exact}");
        }
    }

    #[test]
    fn rejects_non_positive_definite() {
        let bad = SymMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(emission_density(&[0.0; 2], &[0.0; 2], &bad, EmissionFamily::Gaussian).is_err());
    }
}
