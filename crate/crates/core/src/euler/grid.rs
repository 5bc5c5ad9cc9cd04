//! Dense spectral fields on the torus `(2πL 𝕋)^d` with FFT transforms.
//!
//! Coefficients are `û(k/L)` in FFT index order. Physical values follow
//! `u(x) = (2πL)^{−d/2} Σ_k û(k/L) e^{ikx/L}`, sampled at `x_j = 2πL j / n`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::{KVec, MAX_DIM};
use crate::quasisolution::SpectralField;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

thread_local! {
    static PLANNER: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if let Some(f) = p.1.get(&(n, inverse)) {
            return f.clone();
        }
        let f = if inverse {
            p.0.plan_fft_inverse(n)
        } else {
            p.0.plan_fft_forward(n)
        };
        p.1.insert((n, inverse), f.clone());
        f
    })
}

/// Unnormalized multi-dimensional DFT in place (axis 0 varies fastest).
pub fn fft_nd(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let fft = plan(n, inverse);
    let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
    if dim >= 1 {
        fft.process_with_scratch(data, &mut scratch);
    }
    let mut line = vec![ZERO; n];
    for axis in 1..dim {
        let stride = n.pow(axis as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, l) in line.iter().enumerate() {
                    data[base + j * stride] = *l;
                }
            }
        }
    }
}

/// Signed wavenumber of FFT index `i` on an axis of `n` points.
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= (n - 1) / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    dim: usize,
    n: usize,
    scale: usize,
    components: usize,
    data: Vec<Vec<Complex64>>,
}

impl GridField {
    pub fn zeros(dim: usize, n: usize, scale: usize, components: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim) && n >= 1 && scale >= 1);
        GridField {
            dim,
            n,
            scale,
            components,
            data: vec![vec![ZERO; n.pow(dim as u32)]; components],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest representable `|k_j|`.
    pub fn max_wavenumber(&self) -> i64 {
        ((self.n - 1) / 2) as i64
    }

    pub fn kvec(&self, idx: usize) -> KVec {
        let mut c = [0i64; MAX_DIM];
        let mut rest = idx;
        for slot in c.iter_mut().take(self.dim) {
            *slot = wavenumber(rest % self.n, self.n);
            rest /= self.n;
        }
        KVec(c)
    }

    pub fn index(&self, k: &KVec) -> Option<usize> {
        let m = self.max_wavenumber();
        let mut idx = 0;
        for j in (0..self.dim).rev() {
            let c = k.0[j];
            if c.abs() > m {
                return None;
            }
            idx = idx * self.n + c.rem_euclid(self.n as i64) as usize;
        }
        if k.0[self.dim..].iter().any(|&c| c != 0) {
            return None;
        }
        Some(idx)
    }

    /// `k/L` for a flat index.
    pub fn freq(&self, idx: usize) -> [f64; MAX_DIM] {
        self.kvec(idx).freq(self.scale as f64)
    }

    pub fn coeff(&self, comp: usize, k: &KVec) -> Complex64 {
        self.index(k).map_or(ZERO, |i| self.data[comp][i])
    }

    pub fn mode(&self, k: &KVec) -> Vec<Complex64> {
        (0..self.components).map(|c| self.coeff(c, k)).collect()
    }

    pub fn data(&self) -> &[Vec<Complex64>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.data
    }

    pub fn set_mode(&mut self, k: &KVec, value: &[Complex64]) -> Result<()> {
        let i = self.index(k).ok_or_else(|| {
            Error::invalid(format!(
                "{k:?} outside a grid of {} points per axis",
                self.n
            ))
        })?;
        for (c, v) in value.iter().enumerate() {
            self.data[c][i] = *v;
        }
        Ok(())
    }

    pub fn from_sparse(
        field: &SpectralField,
        dim: usize,
        n: usize,
        scale: usize,
        components: usize,
    ) -> Result<Self> {
        let mut g = Self::zeros(dim, n, scale, components);
        for (k, v) in field {
            g.set_mode(k, v)?;
        }
        Ok(g)
    }

    /// Nonzero modes as a sparse field.
    pub fn to_sparse(&self) -> SpectralField {
        (0..self.len())
            .filter(|&i| self.data.iter().any(|c| c[i] != ZERO))
            .map(|i| (self.kvec(i), self.data.iter().map(|c| c[i]).collect()))
            .collect()
    }

    /// Largest `|k|_∞` carrying a coefficient above `tol`.
    pub fn band(&self, tol: f64) -> i64 {
        (0..self.len())
            .filter(|&i| self.data.iter().any(|c| c[i].norm() > tol))
            .map(|i| self.kvec(i).max_abs())
            .max()
            .unwrap_or(0)
    }

    /// `(2πL)^{−d/2}`.
    pub fn prefactor(&self) -> f64 {
        (2.0 * PI * self.scale as f64).powf(-(self.dim as f64) / 2.0)
    }

    /// Physical samples of every component.
    pub fn physical(&self) -> Vec<Vec<Complex64>> {
        let c = self.prefactor();
        self.data
            .iter()
            .map(|comp| {
                let mut v = comp.clone();
                fft_nd(&mut v, self.dim, self.n, true);
                v.iter_mut().for_each(|x| *x *= c);
                v
            })
            .collect()
    }

    /// Inverse of [`GridField::physical`], exact for band-limited samples.
    pub fn from_physical(dim: usize, n: usize, scale: usize, values: Vec<Vec<Complex64>>) -> Self {
        let mut g = Self::zeros(dim, n, scale, values.len());
        let norm = 1.0 / (g.prefactor() * g.len() as f64);
        for (slot, mut v) in g.data.iter_mut().zip(values) {
            fft_nd(&mut v, dim, n, false);
            v.iter_mut().for_each(|x| *x *= norm);
            *slot = v;
        }
        g
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().flatten().for_each(|x| *x *= factor);
        out
    }

    pub fn add_assign(&mut self, other: &GridField) {
        assert_eq!((self.n, self.components), (other.n, other.components));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Multiplies every mode by a scalar symbol `m(k/L)`.
    pub fn apply_multiplier(&self, m: impl Fn(&[f64]) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.len() {
            let xi = self.freq(i);
            let s = m(&xi[..self.dim]);
            for comp in out.data.iter_mut() {
                comp[i] *= s;
            }
        }
        out
    }

    /// `∂_j u_i` stored at component `i·d + j`.
    pub fn gradient(&self) -> Self {
        let mut out = Self::zeros(self.dim, self.n, self.scale, self.components * self.dim);
        for i in 0..self.len() {
            let xi = self.freq(i);
            for c in 0..self.components {
                for j in 0..self.dim {
                    out.data[c * self.dim + j][i] = self.data[c][i] * Complex64::new(0.0, xi[j]);
                }
            }
        }
        out
    }

    /// Leray projection; the zero mode is removed.
    pub fn leray(&self) -> Self {
        assert_eq!(
            self.components, self.dim,
            "Leray projection needs a vector field"
        );
        let mut out = self.clone();
        for i in 0..self.len() {
            let xi = self.freq(i);
            let n2: f64 = xi[..self.dim].iter().map(|e| e * e).sum();
            if n2 == 0.0 {
                out.data.iter_mut().for_each(|c| c[i] = ZERO);
                continue;
            }
            let along: Complex64 = (0..self.dim)
                .map(|j| self.data[j][i] * xi[j])
                .sum::<Complex64>()
                / n2;
            for j in 0..self.dim {
                out.data[j][i] = self.data[j][i] - along * xi[j];
            }
        }
        out
    }

    /// `P(u · ∇v)` computed pseudo-spectrally. Fails if the product would alias.
    pub fn transport(u: &GridField, v: &GridField) -> Result<GridField> {
        let m = u.max_wavenumber();
        let need = u.band(0.0) + v.band(0.0);
        if 2 * need >= u.n as i64 {
            return Err(Error::invalid(format!(
                "aliasing guard: product band {need} needs more than {} points per axis, grid has {}",
                2 * need,
                u.n
            )));
        }
        debug_assert!(need <= m);
        let d = u.dim;
        let up = u.physical();
        let gp = v.gradient().physical();
        let len = u.len();
        let mut out = vec![vec![ZERO; len]; d];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, uj) in up.iter().enumerate() {
                let g = &gp[i * d + j];
                for p in 0..len {
                    o[p] += uj[p] * g[p];
                }
            }
        }
        Ok(GridField::from_physical(d, u.n, u.scale, out).leray())
    }

    /// Largest `|Im u(x)|` over the samples.
    pub fn max_imag(&self) -> f64 {
        self.physical()
            .iter()
            .flatten()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|ξ · û(ξ)|`.
    pub fn max_divergence(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let xi = self.freq(i);
                (0..self.dim)
                    .map(|j| self.data[j][i] * xi[j])
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|û(−ξ) − conj(û(ξ))|`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let k = self.kvec(i);
                let j = self.index(&-k).expect("grid is symmetric");
                self.data
                    .iter()
                    .map(|c| (c[j] - c[i].conj()).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Sum of `|û(ξ)|²` over modes.
    pub fn energy(&self) -> f64 {
        self.data.iter().flatten().map(|z| z.norm_sqr()).sum()
    }
}
