//! The analytic spaces `E_ρ` and `M(ρ_0, β, θ)`: a smooth partition of unity
//! in frequency, window-wise sup norms, and a-priori ceilings for the
//! product, derivative and projection inequalities.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{fft_nd, GridField};
use crate::error::{Error, Result};

/// `s(x) = e^{−1/x}` for `x > 0`, else 0.
fn bump_edge(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth nondecreasing ramp: 0 on `(−∞, 0]`, 1 on `[1, ∞)`.
pub fn psi_ramp(x: f64) -> f64 {
    let a = bump_edge(x);
    let b = bump_edge(1.0 - x);
    a / (a + b)
}

/// Tent profile `φ(x) = 1 − ψ(|x|)`, supported in `[−1, 1]`, with
/// `Σ_n φ(x − n) = 1`.
pub fn phi(x: f64) -> f64 {
    1.0 - psi_ramp(x.abs())
}

/// Radial cutoff: 0 for `|ξ| ≤ 1/2`, 1 for `|ξ| ≥ 1`.
pub fn chi1(xi: &[f64]) -> f64 {
    let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    psi_ramp(2.0 * r - 1.0)
}

/// The windows `φ_n(ξ) = Π_j φ(ξ_j − n_j)`, `n ∈ ℤ^d`.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticPartition {
    pub dim: usize,
}

impl AnalyticPartition {
    pub fn new(dim: usize) -> Self {
        AnalyticPartition { dim }
    }

    pub fn phi_n(&self, n: &[i64], xi: &[f64]) -> f64 {
        n.iter().zip(xi).map(|(&c, &x)| phi(x - c as f64)).product()
    }

    /// Every window that can be nonzero on `|ξ|_∞ ≤ band`.
    pub fn windows(&self, band: f64) -> Vec<Vec<i64>> {
        let m = band.floor() as i64 + 1;
        let mut out = Vec::new();
        let mut n = vec![-m; self.dim];
        loop {
            out.push(n.clone());
            let mut pos = 0;
            loop {
                if pos == self.dim {
                    return out;
                }
                n[pos] += 1;
                if n[pos] <= m {
                    break;
                }
                n[pos] = -m;
                pos += 1;
            }
        }
    }

    /// `Σ_n φ_n(ξ)` over all windows touching `ξ`.
    pub fn sum_at(&self, xi: &[f64]) -> f64 {
        let band = xi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        self.windows(band).iter().map(|n| self.phi_n(n, xi)).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AnalyticNormConfig {
    pub rho0: f64,
    pub beta: f64,
    pub theta: f64,
    /// Refinement factor of the sampling grid used for sup norms.
    pub oversample: usize,
    /// Samples of `ρ` in `(0, ρ_0)` for the `M` norm.
    pub rho_points: usize,
    /// Samples of `t` in `[0, θ(ρ))` for the `M` norm.
    pub t_points: usize,
}

impl Default for AnalyticNormConfig {
    fn default() -> Self {
        AnalyticNormConfig {
            rho0: 0.5,
            beta: 0.5,
            theta: 1.0,
            oversample: 4,
            rho_points: 32,
            t_points: 128,
        }
    }
}

impl AnalyticNormConfig {
    /// Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: &str| {
            Err(Error::Validation {
                key: key.into(),
                message: message.into(),
            })
        };
        if !(self.rho0 > 0.0) {
            return bad("rho0", "must be positive");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta", "must lie in (0, 1)");
        }
        if !(self.theta > 0.0) {
            return bad("theta", "must be positive");
        }
        if self.oversample < 2 {
            return bad("oversample", "must be at least 2");
        }
        if self.rho_points < 2 || self.t_points < 2 {
            return bad("rho_points", "need at least two samples");
        }
        Ok(())
    }

    /// `θ(ρ) = θ (ρ_0 − ρ)`.
    pub fn theta_of_rho(&self, rho: f64) -> f64 {
        self.theta * (self.rho0 - rho)
    }
}

/// Sampled `‖φ_n * f‖_{L^∞}` for every window touching a field's spectrum,
/// so that `‖f‖_ρ` is a cheap weighted sum for any `ρ`.
#[derive(Clone, Debug, Default)]
pub struct WindowSups {
    pub entries: Vec<(Vec<i64>, f64)>,
}

impl WindowSups {
    pub fn norm(&self, rho: f64) -> f64 {
        self.entries
            .iter()
            .map(|(n, s)| {
                let len = n.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
                (rho * len).exp() * s
            })
            .sum()
    }
}

/// Window sups of a field, each window demodulated to the origin and sampled
/// on a grid `oversample` times finer than its band requires. Vector fields
/// use the pointwise Euclidean norm.
pub fn window_sups(field: &GridField, oversample: usize) -> WindowSups {
    let d = field.dim();
    let l = field.scale() as i64;
    let part = AnalyticPartition::new(d);
    let band = field.band(0.0) as f64 / l as f64;
    let g = oversample * 2 * l as usize;
    let small = GridField::zeros(d, g, field.scale(), 1);
    let c = field.prefactor();
    // Nonzero coefficients, gathered once.
    let modes: Vec<(crate::lattice::KVec, [f64; 3], Vec<Complex64>)> = (0..field.len())
        .filter(|&i| {
            field
                .data()
                .iter()
                .any(|comp| comp[i] != Complex64::new(0.0, 0.0))
        })
        .map(|i| {
            (
                field.kvec(i),
                field.freq(i),
                field.data().iter().map(|comp| comp[i]).collect(),
            )
        })
        .collect();
    let mut entries = Vec::new();
    let mut buffers = vec![vec![Complex64::new(0.0, 0.0); small.len()]; field.components()];
    for n in part.windows(band) {
        let mut touched = false;
        buffers
            .iter_mut()
            .for_each(|b| b.fill(Complex64::new(0.0, 0.0)));
        for (k, xi, v) in &modes {
            let w = part.phi_n(&n, &xi[..d]);
            if w == 0.0 {
                continue;
            }
            let mut shifted = *k;
            for j in 0..d {
                shifted.0[j] -= n[j] * l;
            }
            let idx = small
                .index(&shifted)
                .expect("demodulated window fits the sampling grid");
            for (b, z) in buffers.iter_mut().zip(v) {
                b[idx] += z * w;
            }
            touched = true;
        }
        if !touched {
            continue;
        }
        let mut sq = vec![0.0; small.len()];
        for b in buffers.iter_mut() {
            fft_nd(b, d, g, true);
            for (s, z) in sq.iter_mut().zip(b.iter()) {
                *s += z.norm_sqr();
            }
        }
        let sup = sq.iter().fold(0.0f64, |a, &v| a.max(v)).sqrt() * c;
        entries.push((n, sup));
    }
    WindowSups { entries }
}

/// `‖f‖_ρ = Σ_n e^{ρ|n|} ‖φ_n * f‖_{L^∞}`.
pub fn analytic_norm(field: &GridField, rho: f64, oversample: usize) -> f64 {
    window_sups(field, oversample).norm(rho)
}

/// `M(ρ_0, β, θ)` norm of `u(t) = t^p w`, from the window sups of `w` and `∇w`:
/// `sup_ρ sup_{t < θ(ρ)} t^p (‖w‖_ρ + ‖∇w‖_ρ (θ(ρ) − t)^β)`.
pub fn m_norm(w: &WindowSups, grad: &WindowSups, power: u32, cfg: &AnalyticNormConfig) -> f64 {
    let mut best: f64 = 0.0;
    // The end samples are the limits ρ → 0 and ρ → ρ_0.
    for i in 0..=cfg.rho_points {
        let rho = cfg.rho0 * i as f64 / cfg.rho_points as f64;
        let a = w.norm(rho);
        let b = grad.norm(rho);
        let horizon = cfg.theta_of_rho(rho);
        if horizon <= 0.0 {
            if power == 0 {
                best = best.max(a);
            }
            continue;
        }
        for j in 0..=cfg.t_points {
            let t = horizon * j as f64 / cfg.t_points as f64;
            let v = t.powi(power as i32) * (a + b * (horizon - t).powf(cfg.beta));
            best = best.max(v);
        }
    }
    best
}

/// `‖K‖_{L¹(ℝ)}` for the kernel of the 1-D multiplier `m`, supported in `[−1, 1]`.
pub fn kernel_l1(m: impl Fn(f64) -> f64) -> f64 {
    // Period 2X in x and spacing dx; the kernel tail beyond X is negligible
    // for the Gevrey-smooth profiles used here.
    let x_half = 2048.0;
    let dx = 0.125;
    let n = (2.0 * x_half / dx) as usize;
    let dxi = 2.0 * PI / (n as f64 * dx);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (j, b) in buf.iter_mut().enumerate() {
        let xi = super::grid::wavenumber(j, n) as f64 * dxi;
        if xi.abs() < 1.0 {
            *b = Complex64::new(m(xi), 0.0);
        }
    }
    fft_nd(&mut buf, 1, n, true);
    let scale = dxi / (2.0 * PI);
    buf.iter().map(|z| z.norm() * scale).sum::<f64>() * dx
}

/// Kernel norms `Λ = ‖φ̌‖_{L¹}` and `Λ_1 = ‖(ξφ)ˇ‖_{L¹}` of the tent profile.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelNorms {
    pub lambda: f64,
    pub lambda1: f64,
}

pub fn kernel_norms() -> KernelNorms {
    KernelNorms {
        lambda: kernel_l1(phi),
        lambda1: kernel_l1(|x| x * phi(x)),
    }
}

/// Ceiling for `‖fg‖_ρ / (e^{2ρ} ‖f‖_ρ ‖g‖_ρ)`.
pub fn product_ceiling(k: &KernelNorms, dim: usize, rho: f64) -> f64 {
    let d = dim as f64;
    5f64.powf(d) * k.lambda.powf(d) * (2.0 * rho * (d.sqrt() - 1.0)).exp()
}

/// Ceiling for `‖∇f‖_{ρ'} (ρ − ρ') / (e^{ρ'} ‖f‖_ρ)`.
pub fn derivative_ceiling(k: &KernelNorms, dim: usize, rho: f64, rho_prime: f64) -> f64 {
    let d = dim as f64;
    let ld = k.lambda.powf(d);
    3f64.powf(d)
        * (rho_prime * (d.sqrt() - 1.0)).exp()
        * (ld / std::f64::consts::E
            + (rho - rho_prime) * (d.sqrt() * ld + d * k.lambda1 * k.lambda.powf(d - 1.0)))
}

/// Operator bound of `f ↦ (P χ_1 φ_n)(D) f` on `L^∞` vector fields, from
/// sampled torus kernels: `√d · max_i Σ_j ‖K_ij‖_{L¹}`.
pub fn projection_window_bound(dim: usize, scale: usize, n: &[i64], oversample: usize) -> f64 {
    let part = AnalyticPartition::new(dim);
    let l = scale as i64;
    let g = oversample * 2 * scale;
    let grid = GridField::zeros(dim, g, scale, 1);
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        let mut row = 0.0;
        for j in 0..dim {
            let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
            for (idx, b) in buf.iter_mut().enumerate() {
                let mut k = grid.kvec(idx);
                for c in 0..dim {
                    k.0[c] += n[c] * l;
                }
                let xi = k.freq(scale as f64);
                let xi = &xi[..dim];
                let w = part.phi_n(n, xi) * chi1(xi);
                if w == 0.0 {
                    continue;
                }
                let n2: f64 = xi.iter().map(|v| v * v).sum();
                let p = if i == j { 1.0 } else { 0.0 } - xi[i] * xi[j] / n2;
                *b = Complex64::new(w * p, 0.0);
            }
            fft_nd(&mut buf, dim, g, true);
            row += buf.iter().map(|z| z.norm()).sum::<f64>() / grid.len() as f64;
        }
        worst = worst.max(row);
    }
    (dim as f64).sqrt() * worst
}

/// Ceiling for `‖P χ_1 f‖_ρ / ‖f‖_ρ` given the window bounds in play.
pub fn projection_ceiling(dim: usize, rho: f64, max_window_bound: f64) -> f64 {
    let d = dim as f64;
    3f64.powf(d) * (rho * d.sqrt()).exp() * max_window_bound
}

/// `P χ_1 f` for a vector field on a grid.
pub fn apply_projection_chi1(field: &GridField) -> GridField {
    field.apply_multiplier(chi1).leray()
}
