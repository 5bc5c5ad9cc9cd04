//! Random divergence-free initial data and the Picard series of Euler.
//!
//! With `ω ≡ 0` every Picard term is a monomial in time: `u_n(t) = tⁿ w_n`
//! with `w_0 = a_L` and `w_{n+1} = (n+1)^{−1} Σ_{n_1+n_2=n} P(w_{n_1}·∇w_{n_2})`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::analytic::{m_norm, window_sups, AnalyticNormConfig};
use super::grid::{fft_nd, GridField};
use crate::ensemble::{GaussianDraw, SpectralEnsemble};
use crate::error::{Error, Result};
use crate::lattice::KVec;

/// Even, bounded, compactly supported amplitude profiles `a(ξ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AmplitudeProfile {
    /// `a(ξ) = s(ξ) ξ^⊥/|ξ|` on `|ξ| ≤ radius` (d = 2), where `s = ±1` is the
    /// half-space sign; unit length, tangential, even.
    Tangential { radius: f64 },
    /// Scalar `a ≡ 1` on `|ξ|_∞ ≤ radius`.
    ScalarUnit { radius: f64 },
}

impl AmplitudeProfile {
    pub fn components(&self, dim: usize) -> usize {
        match self {
            AmplitudeProfile::Tangential { .. } => dim,
            AmplitudeProfile::ScalarUnit { .. } => 1,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            AmplitudeProfile::Tangential { radius } | AmplitudeProfile::ScalarUnit { radius } => {
                radius
            }
        }
    }

    pub fn eval(&self, xi: &[f64]) -> Vec<f64> {
        match *self {
            AmplitudeProfile::Tangential { radius } => {
                let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r == 0.0 || r > radius {
                    return vec![0.0; xi.len()];
                }
                let sign = if KVec::new(&xi.iter().map(|v| v.signum() as i64).collect::<Vec<_>>())
                    .is_positive()
                {
                    1.0
                } else {
                    -1.0
                };
                match xi.len() {
                    2 => vec![-sign * xi[1] / r, sign * xi[0] / r],
                    _ => vec![0.0; xi.len()],
                }
            }
            AmplitudeProfile::ScalarUnit { radius } => {
                let inside =
                    xi.iter().all(|v| v.abs() <= radius + 1e-12) && xi.iter().any(|&v| v != 0.0);
                vec![if inside { 1.0 } else { 0.0 }]
            }
        }
    }
}

/// `ε(L) = ε_0 / √(ln L)`.
pub fn eps_of_l(eps0: f64, scale: usize) -> f64 {
    eps0 / (scale as f64).ln().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerEnsembleSpec {
    pub dim: usize,
    pub scale: usize,
    pub eps: f64,
    pub profile: AmplitudeProfile,
}

impl EulerEnsembleSpec {
    /// `a_{L,k} = ε(L) a(k/L)`.
    pub fn ensemble(&self) -> Result<SpectralEnsemble> {
        let comps = self.profile.components(self.dim);
        let e = SpectralEnsemble::from_profile(
            self.dim,
            comps,
            self.scale,
            self.profile.radius(),
            |xi| {
                self.profile
                    .eval(xi)
                    .into_iter()
                    .map(|v| v * self.eps)
                    .collect()
            },
        )?;
        if e.positive_support().is_empty() {
            return Err(Error::invalid(
                "amplitude profile has no lattice points at this L",
            ));
        }
        Ok(e)
    }

    /// Largest `|k|_∞` of the support.
    pub fn band(&self) -> i64 {
        (self.profile.radius() * self.scale as f64).floor() as i64
    }
}

/// Writes `a_{L,k} g_k` on a grid of `n` points per axis.
pub fn datum_on_grid(
    ensemble: &SpectralEnsemble,
    draw: &GaussianDraw,
    n: usize,
) -> Result<GridField> {
    let mut g = GridField::zeros(ensemble.dim(), n, ensemble.scale(), ensemble.components());
    for (k, gk) in ensemble.positive_support().iter().zip(draw.values()) {
        let a = ensemble.amplitude(k).expect("support vector");
        let v: Vec<Complex64> = a.iter().map(|&x| gk * x).collect();
        let c: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
        g.set_mode(k, &v)?;
        g.set_mode(&-*k, &c)?;
    }
    Ok(g)
}

/// One draw of the initial datum `a_L` on a grid of `n` points per axis.
pub fn sample_initial_datum(
    spec: &EulerEnsembleSpec,
    n: usize,
    seed: u64,
    index: u64,
) -> Result<GridField> {
    let ensemble = spec.ensemble()?;
    datum_on_grid(&ensemble, &ensemble.draw(seed, index), n)
}

/// Smallest odd grid size resolving order-`max_order` Picard products of a
/// datum with band `band`: `n > 2 (M + 1) K`.
pub fn picard_grid_size(band: i64, max_order: usize) -> usize {
    (2 * (max_order as i64 + 1) * band + 1).max(3) as usize | 1
}

/// The spatial profiles `w_0, …, w_M` with `u_n(t) = tⁿ w_n`.
pub fn picard_terms(u0: &GridField, max_order: usize) -> Result<Vec<GridField>> {
    let d = u0.dim();
    if u0.components() != d {
        return Err(Error::invalid(
            "Euler data must be d-component vector fields",
        ));
    }
    let band = u0.band(0.0);
    let need = 2 * (max_order as i64 + 1) * band;
    if need >= u0.n() as i64 {
        return Err(Error::invalid(format!(
            "aliasing guard: order {max_order} with datum band {band} needs more than {need} points per axis, grid has {}",
            u0.n()
        )));
    }
    let (n, scale, len) = (u0.n(), u0.scale(), u0.len());
    let mut terms = vec![u0.clone()];
    let mut phys = vec![u0.physical()];
    let mut grads = vec![u0.gradient().physical()];
    for m in 0..max_order {
        let mut acc = vec![vec![Complex64::new(0.0, 0.0); len]; d];
        for n1 in 0..=m {
            let u = &phys[n1];
            let g = &grads[m - n1];
            for (i, a) in acc.iter_mut().enumerate() {
                for (j, uj) in u.iter().enumerate() {
                    let gij = &g[i * d + j];
                    for p in 0..len {
                        a[p] += uj[p] * gij[p];
                    }
                }
            }
        }
        let next = GridField::from_physical(d, n, scale, acc)
            .leray()
            .scaled(Complex64::new(1.0 / (m as f64 + 1.0), 0.0));
        if m + 1 < max_order {
            phys.push(next.physical());
            grads.push(next.gradient().physical());
        }
        terms.push(next);
    }
    Ok(terms)
}

/// `Σ_{n ≤ M} tⁿ w_n`.
pub fn evaluate_series(terms: &[GridField], t: f64) -> GridField {
    let mut out = terms[0].clone();
    for (n, w) in terms.iter().enumerate().skip(1) {
        out.add_assign(&w.scaled(Complex64::new(t.powi(n as i32), 0.0)));
    }
    out
}

/// `A(θ) = θ^{−β−1} / (2C)`.
pub fn datum_threshold(cfg: &AnalyticNormConfig, c_picard: f64) -> f64 {
    cfg.theta.powf(-cfg.beta - 1.0) / (2.0 * c_picard)
}

fn random_solenoidal(
    dim: usize,
    n: usize,
    scale: usize,
    band: i64,
    rng: &mut ChaCha8Rng,
) -> GridField {
    let mut g = GridField::zeros(dim, n, scale, dim);
    for i in 0..g.len() {
        let k = g.kvec(i);
        if k.max_abs() <= band && k.is_positive() {
            let decay = (-(k.norm_sq() as f64).sqrt() / scale as f64).exp();
            let v: Vec<Complex64> = (0..dim)
                .map(|_| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * decay
                })
                .collect();
            let c: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
            g.set_mode(&k, &v).expect("inside grid");
            g.set_mode(&-k, &c).expect("inside grid");
        }
    }
    g.leray()
}

/// Picard constant `C = 4 C_B`, where `C_B` is the largest observed ratio
/// `‖∫_0^t P(u·∇v)‖_M / (θ^{1+β} ‖u‖_M ‖v‖_M)` over random monomial-in-time
/// probes `u = t^p w_1`, `v = t^q w_2`, and 4 bounds the Catalan growth.
pub fn calibrate_picard_constant(
    dim: usize,
    scale: usize,
    band: i64,
    cfg: &AnalyticNormConfig,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = picard_grid_size(band, 1);
    let mut best: f64 = 0.0;
    for _ in 0..probes {
        let w1 = random_solenoidal(dim, n, scale, band, &mut rng);
        let w2 = random_solenoidal(dim, n, scale, band, &mut rng);
        let p = rng.random_range(0..3u32);
        let q = rng.random_range(0..3u32);
        let b =
            GridField::transport(&w1, &w2)?.scaled(Complex64::new(1.0 / (p + q + 1) as f64, 0.0));
        let norm = |w: &GridField, power: u32| {
            m_norm(
                &window_sups(w, cfg.oversample),
                &window_sups(&w.gradient(), cfg.oversample),
                power,
                cfg,
            )
        };
        let ratio =
            norm(&b, p + q + 1) / (cfg.theta.powf(1.0 + cfg.beta) * norm(&w1, p) * norm(&w2, q));
        if ratio.is_finite() {
            best = best.max(ratio);
        }
    }
    Ok(4.0 * best)
}

#[derive(Clone, Debug, Serialize)]
pub struct PicardReport {
    pub datum_norm: f64,
    pub threshold: f64,
    pub c_picard: f64,
    /// `‖u_n‖_{M(ρ_0,β,θ)}` for `n = 0..=M`.
    pub norms: Vec<f64>,
    /// `θ^{(1+β)n} Cⁿ ‖u_0‖_{ρ_0}^{n+1}`.
    pub envelope: Vec<f64>,
    pub ratios: Vec<f64>,
    pub envelope_holds: bool,
    #[serde(skip)]
    pub terms: Vec<GridField>,
}

/// Runs the Picard series up to order `M` under the smallness gate
/// `‖u_0‖_{ρ_0} < A(θ)` and measures every term in the `M(ρ_0, β, θ)` norm.
pub fn picard_iterate_euler(
    u0: &GridField,
    max_order: usize,
    cfg: &AnalyticNormConfig,
    c_picard: f64,
) -> Result<PicardReport> {
    cfg.validate()?;
    let datum_norm = window_sups(u0, cfg.oversample).norm(cfg.rho0);
    let threshold = datum_threshold(cfg, c_picard);
    if datum_norm >= threshold {
        return Err(Error::Threshold {
            norm: datum_norm,
            threshold,
        });
    }
    let terms = picard_terms(u0, max_order)?;
    let norms: Vec<f64> = terms
        .iter()
        .enumerate()
        .map(|(n, w)| {
            m_norm(
                &window_sups(w, cfg.oversample),
                &window_sups(&w.gradient(), cfg.oversample),
                n as u32,
                cfg,
            )
        })
        .collect();
    let envelope: Vec<f64> = (0..=max_order)
        .map(|n| {
            let nf = n as f64;
            cfg.theta.powf((1.0 + cfg.beta) * nf) * c_picard.powf(nf) * datum_norm.powf(nf + 1.0)
        })
        .collect();
    let ratios = norms
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    // Order 0 is compared with the M norm of the datum itself, which carries
    // the gradient term; the envelope applies from order 1 on.
    let envelope_holds = norms.iter().zip(&envelope).skip(1).all(|(a, b)| *a <= *b);
    Ok(PicardReport {
        datum_norm,
        threshold,
        c_picard,
        norms,
        envelope,
        ratios,
        envelope_holds,
        terms,
    })
}

/// `u_1` by Gauss–Legendre quadrature of `∫_0^t J(u_0, u_0) dτ`, evaluating the
/// convolution sum mode by mode through [`super::euler_psi`].
pub fn first_order_by_quadrature(u0: &GridField, t: f64, nodes: usize) -> Result<GridField> {
    let d = u0.dim();
    let scale = u0.scale() as f64;
    let pref = u0.prefactor();
    let modes = u0.to_sparse();
    let mut out = GridField::zeros(d, u0.n(), u0.scale(), d);
    let (x, w) = gauss_legendre(nodes);
    for (k1, a) in &modes {
        for (k2, b) in &modes {
            let k = *k1 + *k2;
            if k.is_zero() {
                continue;
            }
            let xi1 = k1.freq(scale);
            let xi2 = k2.freq(scale);
            let psi = super::euler_psi(&xi1[..d], &xi2[..d], a, b)?;
            // The integrand is constant in τ since ω ≡ 0.
            let weight: f64 = x.iter().zip(&w).map(|(_, wi)| wi * t / 2.0).sum();
            let mut cur = out.mode(&k);
            for (c, p) in cur.iter_mut().zip(&psi) {
                *c += p * pref * weight;
            }
            out.set_mode(&k, &cur)?;
        }
    }
    Ok(out)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            let pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
                break;
            }
        }
    }
    (x, w)
}

/// Physical samples at the points `x_n = 2πn`, `n ∈ [1, L]` (d = 1), by
/// folding wavenumbers modulo `L` into a length-`L` transform.
pub fn values_at_integer_points(ensemble: &SpectralEnsemble, draw: &GaussianDraw) -> Vec<f64> {
    assert_eq!(
        ensemble.dim(),
        1,
        "grid-point sampling is implemented for d = 1"
    );
    let l = ensemble.scale();
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    for (k, g) in ensemble.positive_support().iter().zip(draw.values()) {
        let a = ensemble.amplitude(k).expect("support vector")[0];
        let idx = k.0[0].rem_euclid(l as i64) as usize;
        let neg = (-k.0[0]).rem_euclid(l as i64) as usize;
        buf[idx] += g * a;
        buf[neg] += g.conj() * a;
    }
    fft_nd(&mut buf, 1, l, true);
    let c = ensemble.fourier_prefactor();
    // Entry j of the transform is the value at x = 2πj; x_L = 2πL wraps to j = 0.
    (1..=l).map(|n| buf[n % l].re * c).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::EulerModel;
    use crate::quasisolution::fourier_mode;

    fn spec(scale: usize, eps: f64) -> EulerEnsembleSpec {
        EulerEnsembleSpec {
            dim: 2,
            scale,
            eps,
            profile: AmplitudeProfile::Tangential { radius: 0.5 },
        }
    }

    #[test]
    fn tangential_profile_is_even_and_divergence_free() {
        let p = AmplitudeProfile::Tangential { radius: 0.5 };
        for xi in [[0.1, 0.2], [-0.3, 0.05], [0.0, 0.4], [0.25, -0.25]] {
            let a = p.eval(&xi);
            let b = p.eval(&[-xi[0], -xi[1]]);
            assert_eq!(a, b);
            assert!((a[0] * xi[0] + a[1] * xi[1]).abs() < 1e-15);
            assert!(((a[0] * a[0] + a[1] * a[1]).sqrt() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_datum_is_real_solenoidal_mean_free() {
        let s = spec(4, 0.3);
        let g = sample_initial_datum(&s, 17, 3, 0).unwrap();
        assert!(g.max_imag() < 1e-13);
        assert!(g.max_divergence() < 1e-13);
        assert_eq!(g.mode(&KVec::ZERO), vec![Complex64::new(0.0, 0.0); 2]);
        assert!(g.hermitian_defect() == 0.0);
    }

    #[test]
    fn zero_datum_gives_zero_terms() {
        let z = GridField::zeros(2, 9, 4, 2);
        let terms = picard_terms(&z, 3).unwrap();
        assert!(terms.iter().all(|t| t.energy() == 0.0));
    }

    #[test]
    fn first_order_two_ways() {
        let s = spec(4, 0.5);
        let u0 = sample_initial_datum(&s, 17, 5, 1).unwrap();
        let terms = picard_terms(&u0, 1).unwrap();
        let t = 0.7;
        let quad = first_order_by_quadrature(&u0, t, 8).unwrap();
        let tree = terms[1].scaled(Complex64::new(t, 0.0));
        let scale = quad.energy().sqrt().max(1e-300);
        let diff: f64 = quad
            .data()
            .iter()
            .flatten()
            .zip(tree.data().iter().flatten())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-10 * scale, "{diff} vs {scale}");
        assert!(quad.energy() > 0.0);

        // A single ±k pair is a shear flow: u·∇u vanishes.
        let ens = SpectralEnsemble::new(2, 2, 4, &[(KVec::d2(1, 1), vec![0.5, -0.5])]).unwrap();
        let single = datum_on_grid(&ens, &ens.draw(1, 0), 9).unwrap();
        let q = first_order_by_quadrature(&single, t, 4).unwrap();
        let p = picard_terms(&single, 1).unwrap();
        assert!(q.energy() < 1e-30 && p[1].energy() < 1e-30);
    }

    #[test]
    fn grid_picard_matches_tree_expansion() {
        let s = spec(4, 0.5);
        let ens = s.ensemble().unwrap();
        let draw = ens.draw(2, 0);
        let n = picard_grid_size(s.band(), 2);
        let u0 = datum_on_grid(&ens, &draw, n).unwrap();
        let terms = picard_terms(&u0, 2).unwrap();
        let t = 0.9;
        let model = EulerModel::new(2);
        for k in [KVec::d2(1, 0), KVec::d2(2, -1), KVec::d2(0, 3)] {
            for (order, w) in terms.iter().enumerate() {
                let want = fourier_mode(&model, &ens, order, k, t)
                    .unwrap()
                    .evaluate(&ens, &draw);
                let got: Vec<Complex64> = w
                    .mode(&k)
                    .iter()
                    .map(|z| z * t.powi(order as i32))
                    .collect();
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).norm() < 1e-12, "order {order} {k:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn threshold_gate_refuses_large_data() {
        let cfg = AnalyticNormConfig::default();
        let s = spec(4, 50.0);
        let u0 = sample_initial_datum(&s, picard_grid_size(s.band(), 2), 1, 0).unwrap();
        assert!(matches!(
            picard_iterate_euler(&u0, 2, &cfg, 1.0),
            Err(Error::Threshold { .. })
        ));
    }

    #[test]
    fn aliasing_guard_refuses_coarse_grid() {
        let s = spec(4, 0.1);
        let u0 = sample_initial_datum(&s, 9, 1, 0).unwrap();
        assert!(picard_terms(&u0, 3).is_err());
    }
}
