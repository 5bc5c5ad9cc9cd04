//! Deterministic amplitudes `a_{L,k}` and Gaussian draws `g_k` of the random
//! initial datum `Σ_k (2πL)^{−d/2} e^{ikx/L} g_k a_{L,k}`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{bracket, KVec};

/// Finitely supported, even amplitudes on a torus of scale `L`.
#[derive(Clone, Debug)]
pub struct SpectralEnsemble {
    dim: usize,
    components: usize,
    scale: usize,
    /// Positive half of the support, sorted.
    positive: Vec<KVec>,
    amplitudes: Vec<Vec<f64>>,
    index: HashMap<KVec, usize>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnsembleNorms {
    pub linf: f64,
    /// Includes the `(2πL)^{−d/2}` prefactor.
    pub l2: f64,
    /// `A_L = max ⟨k/L⟩` over the support.
    pub a_l: f64,
}

impl SpectralEnsemble {
    /// Builds an ensemble from `(k, a_{L,k})` pairs. Each `{k, −k}` pair may be
    /// listed once or twice; both entries must then agree.
    pub fn new(
        dim: usize,
        components: usize,
        scale: usize,
        entries: &[(KVec, Vec<f64>)],
    ) -> Result<Self> {
        if scale == 0 {
            return Err(Error::invalid("torus scale L must be positive"));
        }
        let mut map: HashMap<KVec, Vec<f64>> = HashMap::new();
        for (k, a) in entries {
            if k.is_zero() {
                return Err(Error::ZeroFrequency);
            }
            if k.0[dim..].iter().any(|&c| c != 0) {
                return Err(Error::invalid(format!(
                    "{k:?} has coordinates beyond d = {dim}"
                )));
            }
            if a.len() != components {
                return Err(Error::invalid(format!(
                    "amplitude at {k:?} has {} components, expected {components}",
                    a.len()
                )));
            }
            let (canon, _) = k.canonical();
            if let Some(prev) = map.get(&canon) {
                if prev != a {
                    return Err(Error::invalid(format!("a(−k) ≠ a(k) at {k:?}")));
                }
            }
            map.insert(canon, a.clone());
        }
        let mut positive: Vec<KVec> = map
            .iter()
            .filter(|(_, a)| a.iter().any(|&v| v != 0.0))
            .map(|(k, _)| *k)
            .collect();
        positive.sort();
        let amplitudes = positive.iter().map(|k| map[k].clone()).collect();
        let index = positive.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        Ok(SpectralEnsemble {
            dim,
            components,
            scale,
            positive,
            amplitudes,
            index,
        })
    }

    /// `a_{L,k} = profile(k/L)` for lattice points with `|k/L|_∞ ≤ radius`.
    /// The profile must satisfy `profile(−ξ) = profile(ξ)`.
    pub fn from_profile(
        dim: usize,
        components: usize,
        scale: usize,
        radius: f64,
        profile: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        let kmax = (radius * scale as f64).floor() as i64;
        let mut entries = Vec::new();
        let mut coords = vec![-kmax; dim];
        loop {
            let k = KVec::new(&coords);
            if k.is_positive() {
                let xi: Vec<f64> = coords.iter().map(|&c| c as f64 / scale as f64).collect();
                let a = profile(&xi);
                let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
                let b = profile(&neg);
                if a.iter()
                    .zip(&b)
                    .any(|(x, y)| (x - y).abs() > 1e-15 * x.abs().max(1.0))
                {
                    return Err(Error::invalid(format!("profile is not even at ξ = {xi:?}")));
                }
                entries.push((k, a));
            }
            let mut pos = 0;
            loop {
                if pos == dim {
                    return Self::new(dim, components, scale, &entries);
                }
                coords[pos] += 1;
                if coords[pos] <= kmax {
                    break;
                }
                coords[pos] = -kmax;
                pos += 1;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn scale_f64(&self) -> f64 {
        self.scale as f64
    }

    /// `(2πL)^{−d/2}`.
    pub fn fourier_prefactor(&self) -> f64 {
        (2.0 * PI * self.scale as f64).powf(-(self.dim as f64) / 2.0)
    }

    pub fn positive_support(&self) -> &[KVec] {
        &self.positive
    }

    /// Full support `{±k}`, sorted.
    pub fn support(&self) -> Vec<KVec> {
        let mut all: Vec<KVec> = self.positive.iter().flat_map(|&k| [k, -k]).collect();
        all.sort();
        all
    }

    /// Index into the positive support and whether `k` itself is positive.
    pub fn locate(&self, k: &KVec) -> Option<(usize, bool)> {
        let (canon, positive) = k.canonical();
        self.index.get(&canon).map(|&i| (i, positive))
    }

    pub fn amplitude(&self, k: &KVec) -> Option<&[f64]> {
        self.locate(k).map(|(i, _)| self.amplitudes[i].as_slice())
    }

    pub fn contains(&self, k: &KVec) -> bool {
        self.locate(k).is_some()
    }

    pub fn norms(&self) -> EnsembleNorms {
        let mut linf: f64 = 0.0;
        let mut sq = 0.0;
        let mut a_l: f64 = 1.0;
        for (k, a) in self.positive.iter().zip(&self.amplitudes) {
            let n2: f64 = a.iter().map(|v| v * v).sum();
            linf = linf.max(n2.sqrt());
            sq += 2.0 * n2;
            a_l = a_l.max(bracket(&k.freq(self.scale as f64)[..self.dim]));
        }
        EnsembleNorms {
            linf,
            l2: self.fourier_prefactor() * sq.sqrt(),
            a_l,
        }
    }

    /// The same ensemble with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for a in &mut out.amplitudes {
            for v in a.iter_mut() {
                *v *= factor;
            }
        }
        out
    }

    pub fn draw(&self, seed: u64, index: u64) -> GaussianDraw {
        GaussianDraw::sample(self.positive.len(), seed, index)
    }
}

/// Circular complex Gaussians `g_k` on the positive half of a support, with
/// `g_{−k} = conj(g_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianDraw {
    pub seed: u64,
    pub index: u64,
    values: Vec<Complex64>,
}

impl GaussianDraw {
    /// Draw number `index` of the stream seeded by `seed`. Each draw owns an
    /// independent ChaCha stream, so draws can be generated in any order.
    pub fn sample(len: usize, seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let values = (0..len)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        GaussianDraw {
            seed,
            index,
            values,
        }
    }

    pub fn from_values(values: Vec<Complex64>) -> Self {
        GaussianDraw {
            seed: 0,
            index: 0,
            values,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `g ↦ −g`.
    pub fn negated(&self) -> Self {
        GaussianDraw {
            seed: self.seed,
            index: self.index,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// `g_k` for any `k` of the support.
    pub fn get(&self, ensemble: &SpectralEnsemble, k: &KVec) -> Option<Complex64> {
        ensemble.locate(k).map(|(i, positive)| {
            if positive {
                self.values[i]
            } else {
                self.values[i].conj()
            }
        })
    }

    /// The draw of the datum translated by `y`: `g_k ↦ g_k e^{−ik·y/L}`.
    pub fn translated(&self, ensemble: &SpectralEnsemble, y: &[f64]) -> Self {
        let l = ensemble.scale_f64();
        let values = ensemble
            .positive_support()
            .iter()
            .zip(&self.values)
            .map(|(k, g)| {
                let phase: f64 = k
                    .coords(ensemble.dim())
                    .iter()
                    .zip(y)
                    .map(|(&c, &yy)| c as f64 * yy / l)
                    .sum();
                g * Complex64::from_polar(1.0, -phase)
            })
            .collect();
        GaussianDraw {
            seed: self.seed,
            index: self.index,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SpectralEnsemble {
        SpectralEnsemble::new(
            1,
            1,
            4,
            &[(KVec::d1(1), vec![1.0]), (KVec::d1(-2), vec![0.5])],
        )
        .unwrap()
    }

    #[test]
    fn support_and_norms() {
        let e = toy();
        assert_eq!(
            e.support(),
            vec![KVec::d1(-2), KVec::d1(-1), KVec::d1(1), KVec::d1(2)]
        );
        assert_eq!(e.amplitude(&KVec::d1(-1)), Some(&[1.0][..]));
        assert!(e.amplitude(&KVec::d1(3)).is_none());
        let n = e.norms();
        assert_eq!(n.linf, 1.0);
        assert!((n.a_l - (1.0f64 + 0.25).sqrt()).abs() < 1e-15);
        let want = (2.0 * PI * 4.0f64).powf(-0.5) * (2.0 * (1.0 + 0.25f64)).sqrt();
        assert!((n.l2 - want).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            SpectralEnsemble::new(1, 1, 4, &[(KVec::ZERO, vec![1.0])]),
            Err(Error::ZeroFrequency)
        ));
        let odd = [(KVec::d1(1), vec![1.0]), (KVec::d1(-1), vec![2.0])];
        assert!(SpectralEnsemble::new(1, 1, 4, &odd).is_err());
    }

    #[test]
    fn draws_are_reproducible_and_hermitian() {
        let e = toy();
        let a = e.draw(7, 3);
        assert_eq!(a, e.draw(7, 3));
        assert_ne!(a, e.draw(7, 4));
        let g = a.get(&e, &KVec::d1(2)).unwrap();
        assert_eq!(a.get(&e, &KVec::d1(-2)).unwrap(), g.conj());
    }

    #[test]
    fn draw_moments() {
        let n = 20_000;
        let (mut m2, mut m_abs, mut m1) = (Complex64::new(0.0, 0.0), 0.0, Complex64::new(0.0, 0.0));
        for i in 0..n {
            let g = GaussianDraw::sample(1, 11, i).values()[0];
            m1 += g;
            m2 += g * g;
            m_abs += g.norm_sqr();
        }
        let nf = n as f64;
        // Standard errors are about 1/sqrt(n) ≈ 0.007.
        assert!((m1 / nf).norm() < 0.03);
        assert!((m2 / nf).norm() < 0.03);
        assert!((m_abs / nf - 1.0).abs() < 0.03);
    }

    #[test]
    fn profile_constructor() {
        let e = SpectralEnsemble::from_profile(1, 1, 8, 0.5, |xi| {
            vec![if xi[0].abs() <= 0.25 { 1.0 } else { 0.0 }]
        })
        .unwrap();
        assert_eq!(e.positive_support(), &[KVec::d1(1), KVec::d1(2)]);
    }
}
