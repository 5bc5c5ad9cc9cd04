//! Incompressible Euler as an instance of the generic model: Leray
//! projection, the bilinear symbol `Ψ`, analytic norms, Picard iteration and
//! the random-datum experiments.

pub mod analytic;
pub mod experiments;
pub mod grid;
pub mod inequalities;
pub mod picard;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Freq, Model};
use crate::quasisolution::SpectralField;

pub use analytic::{analytic_norm, AnalyticNormConfig, AnalyticPartition, WindowSups};
pub use experiments::{norm_tail_mc, theorem2_experiment, typical_size_experiment};
pub use grid::GridField;
pub use inequalities::{measure_inequalities, InequalityReport};
pub use picard::{picard_iterate_euler, sample_initial_datum, EulerEnsembleSpec};

/// Euler in dimension `d`: `D = d`, `N = 2`, `ω ≡ 0`, `r = 1`.
#[derive(Clone, Copy, Debug)]
pub struct EulerModel {
    dim: usize,
}

impl EulerModel {
    pub fn new(dim: usize) -> Self {
        assert!((1..=3).contains(&dim));
        EulerModel { dim }
    }
}

impl Model for EulerModel {
    fn name(&self) -> &str {
        "euler"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn components(&self) -> usize {
        self.dim
    }
    fn arity(&self) -> usize {
        2
    }
    fn growth(&self) -> f64 {
        1.0
    }
    fn omega(&self, _xi: &Freq) -> f64 {
        0.0
    }
    /// The projection leaves nothing at zero total frequency.
    fn psi(&self, xis: &[Freq], xs: &[&[Complex64]], out: &mut [Complex64]) {
        let d = self.dim;
        match euler_psi(&xis[0][..d], &xis[1][..d], xs[0], xs[1]) {
            Ok(v) => out.copy_from_slice(&v),
            Err(_) => out.fill(Complex64::new(0.0, 0.0)),
        }
    }
}

/// `Ψ(ξ_1, ξ_2)(X, Y) = i (ξ_2 · X) (Y − (ξ·Y) ξ / |ξ|²)` with `ξ = ξ_1 + ξ_2`,
/// so that summing over `ξ_1 + ξ_2 = ξ` gives the transform of `P(u·∇v)`.
pub fn euler_psi(
    xi1: &[f64],
    xi2: &[f64],
    x: &[Complex64],
    y: &[Complex64],
) -> Result<Vec<Complex64>> {
    let xi: Vec<f64> = xi1.iter().zip(xi2).map(|(a, b)| a + b).collect();
    let n2: f64 = xi.iter().map(|v| v * v).sum();
    if n2 == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let transport: Complex64 =
        xi2.iter().zip(x).map(|(e, xj)| xj * *e).sum::<Complex64>() * Complex64::i();
    let along: Complex64 = xi.iter().zip(y).map(|(e, yj)| yj * *e).sum::<Complex64>() / n2;
    Ok(y.iter()
        .zip(&xi)
        .map(|(yj, e)| transport * (yj - along * *e))
        .collect())
}

/// `v ↦ v − (ξ·v) ξ / |ξ|²` for one mode.
pub fn leray_mode(xi: &[f64], v: &[Complex64]) -> Result<Vec<Complex64>> {
    let n2: f64 = xi.iter().map(|e| e * e).sum();
    if n2 == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let along: Complex64 = xi.iter().zip(v).map(|(e, c)| c * *e).sum::<Complex64>() / n2;
    Ok(v.iter().zip(xi).map(|(c, e)| c - along * *e).collect())
}

/// Leray projection of a sparse spectral field on `(1/L)ℤ^d_*`.
pub fn leray_project(field: &SpectralField, dim: usize, scale: f64) -> Result<SpectralField> {
    field
        .iter()
        .map(|(k, v)| {
            if k.is_zero() {
                return Err(Error::ZeroFrequency);
            }
            let xi = k.freq(scale);
            Ok((*k, leray_mode(&xi[..dim], v)?))
        })
        .collect()
}

/// Largest `|ξ · v̂(ξ)|` over a spectral field.
pub fn max_divergence(field: &SpectralField, dim: usize, scale: f64) -> f64 {
    field
        .iter()
        .map(|(k, v)| {
            let xi = k.freq(scale);
            xi[..dim]
                .iter()
                .zip(v)
                .map(|(e, c)| c * *e)
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max)
}
