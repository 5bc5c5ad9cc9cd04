//! Measured constants of the product, derivative and projection estimates in
//! the analytic spaces, on random band-limited fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::analytic::{
    apply_projection_chi1, derivative_ceiling, kernel_norms, product_ceiling, projection_ceiling,
    projection_window_bound, window_sups, AnalyticPartition, KernelNorms,
};
use super::grid::GridField;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeasuredConstant {
    /// Largest ratio seen over the probes.
    pub measured: f64,
    pub ceiling: f64,
    pub holds: bool,
}

impl MeasuredConstant {
    fn new(measured: f64, ceiling: f64) -> Self {
        MeasuredConstant {
            measured,
            ceiling,
            holds: measured <= ceiling,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub dim: usize,
    pub scale: usize,
    pub band: i64,
    pub probes: usize,
    pub rho: f64,
    pub rho_prime: f64,
    pub kernels: KernelNorms,
    /// `‖fg‖_ρ / (e^{2ρ} ‖f‖_ρ ‖g‖_ρ)`.
    pub product: MeasuredConstant,
    /// `‖∇f‖_{ρ'} (ρ − ρ') / (e^{ρ'} ‖f‖_ρ)`.
    pub derivative: MeasuredConstant,
    /// `‖P χ_1 f‖_ρ / ‖f‖_ρ`.
    pub projection: MeasuredConstant,
}

impl InequalityReport {
    pub fn holds(&self) -> bool {
        self.product.holds && self.derivative.holds && self.projection.holds
    }
}

/// Real random field with modes `|k|_∞ ≤ band`, Gaussian coefficients and a
/// random exponential decay rate, so that probes span several windows.
pub fn random_band_limited(
    dim: usize,
    n: usize,
    scale: usize,
    components: usize,
    band: i64,
    rng: &mut ChaCha8Rng,
) -> GridField {
    let mut g = GridField::zeros(dim, n, scale, components);
    let rate: f64 = rng.random_range(0.0..2.0);
    for i in 0..g.len() {
        let k = g.kvec(i);
        if k.max_abs() <= band && k.is_positive() {
            let decay = (-rate * (k.norm_sq() as f64).sqrt() / scale as f64).exp();
            let v: Vec<Complex64> = (0..components)
                .map(|_| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * decay
                })
                .collect();
            let c: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
            g.set_mode(&k, &v).expect("inside grid");
            g.set_mode(&-k, &c).expect("inside grid");
        }
    }
    g
}

fn pointwise_product(f: &GridField, g: &GridField) -> GridField {
    let a = f.physical();
    let b = g.physical();
    let prod: Vec<Complex64> = a[0].iter().zip(&b[0]).map(|(x, y)| x * y).collect();
    GridField::from_physical(f.dim(), f.n(), f.scale(), vec![prod])
}

/// Measures the three constants over `probes` random fields with modes up to
/// `band` on the torus of scale `L`.
#[allow(clippy::too_many_arguments)]
pub fn measure_inequalities(
    dim: usize,
    scale: usize,
    band: i64,
    probes: usize,
    rho: f64,
    rho_prime: f64,
    oversample: usize,
    seed: u64,
) -> Result<InequalityReport> {
    if !(0.0..rho).contains(&rho_prime) {
        return Err(Error::invalid("need 0 ≤ ρ' < ρ"));
    }
    if probes == 0 || band < 1 {
        return Err(Error::invalid("need at least one probe and band ≥ 1"));
    }
    let kernels = kernel_norms();
    // Products double the band; the grid resolves them exactly.
    let n = (4 * band + 1) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let part = AnalyticPartition::new(dim);
    let window_bound = part
        .windows(band as f64 / scale as f64)
        .iter()
        .map(|w| projection_window_bound(dim, scale, w, oversample))
        .fold(0.0, f64::max);
    let (mut prod, mut deriv, mut proj): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..probes {
        let f = random_band_limited(dim, n, scale, 1, band, &mut rng);
        let g = random_band_limited(dim, n, scale, 1, band, &mut rng);
        let sf = window_sups(&f, oversample);
        let sg = window_sups(&g, oversample);
        let fg = window_sups(&pointwise_product(&f, &g), oversample);
        prod = prod.max(fg.norm(rho) / ((2.0 * rho).exp() * sf.norm(rho) * sg.norm(rho)));
        let grad = window_sups(&f.gradient(), oversample);
        deriv =
            deriv.max(grad.norm(rho_prime) * (rho - rho_prime) / (rho_prime.exp() * sf.norm(rho)));
        let v = random_band_limited(dim, n, scale, dim, band, &mut rng);
        let pv = window_sups(&apply_projection_chi1(&v), oversample);
        proj = proj.max(pv.norm(rho) / window_sups(&v, oversample).norm(rho));
    }
    Ok(InequalityReport {
        dim,
        scale,
        band,
        probes,
        rho,
        rho_prime,
        kernels,
        product: MeasuredConstant::new(prod, product_ceiling(&kernels, dim, rho)),
        derivative: MeasuredConstant::new(deriv, derivative_ceiling(&kernels, dim, rho, rho_prime)),
        projection: MeasuredConstant::new(proj, projection_ceiling(dim, rho, window_bound)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inequalities_hold_on_a_few_probes() {
        let r = measure_inequalities(2, 4, 6, 5, 0.5, 0.25, 4, 1).unwrap();
        assert!(r.holds(), "{r:?}");
        assert!(
            r.product.measured > 0.0 && r.derivative.measured > 0.0 && r.projection.measured > 0.0
        );
    }

    #[test]
    fn rejects_bad_radii() {
        assert!(measure_inequalities(2, 4, 6, 5, 0.5, 0.5, 4, 1).is_err());
    }
}
