//! Finite sums `Σ_j c_j t^{p_j} e^{i λ_j t}` with vector coefficients `c_j ∈ ℂ^D`.
//!
//! The class is closed under multilinear products and under the Duhamel
//! kernel `∫_0^t e^{i(t−τ)μ} (·)(τ) dτ`, so every tree coefficient of the
//! Picard expansion is represented exactly.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Absolute frequency gap below which the resonant branch is taken.
pub fn resonance_tolerance(mu: f64) -> f64 {
    1e-9 * mu.abs().max(1.0)
}

/// Counts kernel calls whose frequency gap sat just above the tolerance.
static NEAR_RESONANT: AtomicU64 = AtomicU64::new(0);

/// Number of poorly conditioned kernel evaluations since process start.
pub fn near_resonance_count() -> u64 {
    NEAR_RESONANT.load(Ordering::Relaxed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveTerm {
    pub coeff: Vec<Complex64>,
    pub power: u32,
    pub freq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpPolyWave {
    components: usize,
    terms: Vec<WaveTerm>,
}

impl ExpPolyWave {
    pub fn zero(components: usize) -> Self {
        ExpPolyWave {
            components,
            terms: Vec::new(),
        }
    }

    /// `c · e^{iλt}`.
    pub fn oscillation(coeff: Vec<Complex64>, freq: f64) -> Self {
        let mut w = Self::zero(coeff.len());
        w.add_term(WaveTerm {
            coeff,
            power: 0,
            freq,
        });
        w
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn terms(&self) -> &[WaveTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds a term, merging it into an existing one with the same power and a
    /// frequency within the resonance tolerance.
    pub fn add_term(&mut self, term: WaveTerm) {
        debug_assert_eq!(term.coeff.len(), self.components);
        if term.coeff.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
            return;
        }
        let tol = resonance_tolerance(term.freq);
        if let Some(t) = self
            .terms
            .iter_mut()
            .find(|t| t.power == term.power && (t.freq - term.freq).abs() <= tol)
        {
            for (a, b) in t.coeff.iter_mut().zip(&term.coeff) {
                *a += b;
            }
        } else {
            self.terms.push(term);
        }
    }

    pub fn add_assign(&mut self, other: &ExpPolyWave) {
        for t in &other.terms {
            self.add_term(t.clone());
        }
    }

    pub fn scale(&mut self, factor: Complex64) {
        for t in &mut self.terms {
            for c in &mut t.coeff {
                *c *= factor;
            }
        }
    }

    pub fn eval(&self, t: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.components];
        for term in &self.terms {
            let w = Complex64::from_polar(t.powi(term.power as i32), term.freq * t);
            for (o, c) in out.iter_mut().zip(&term.coeff) {
                *o += c * w;
            }
        }
        out
    }

    /// Largest power of `t` present.
    pub fn degree(&self) -> Option<u32> {
        self.terms.iter().map(|t| t.power).max()
    }

    /// The multilinear combination `map(w_1(t), …, w_N(t))` expanded term by
    /// term. `map` must be linear in each argument.
    pub fn multilinear<F>(waves: &[&ExpPolyWave], out_components: usize, mut map: F) -> ExpPolyWave
    where
        F: FnMut(&[&[Complex64]], &mut [Complex64]),
    {
        let mut result = ExpPolyWave::zero(out_components);
        if waves.iter().any(|w| w.is_zero()) {
            return result;
        }
        let mut idx = vec![0usize; waves.len()];
        let mut args: Vec<&[Complex64]> = Vec::with_capacity(waves.len());
        loop {
            args.clear();
            let mut power = 0;
            let mut freq = 0.0;
            for (w, &j) in waves.iter().zip(&idx) {
                let term = &w.terms[j];
                args.push(&term.coeff);
                power += term.power;
                freq += term.freq;
            }
            let mut coeff = vec![Complex64::new(0.0, 0.0); out_components];
            map(&args, &mut coeff);
            result.add_term(WaveTerm { coeff, power, freq });

            // Odometer over the term indices.
            let mut pos = 0;
            loop {
                if pos == waves.len() {
                    return result;
                }
                idx[pos] += 1;
                if idx[pos] < waves[pos].terms.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    /// `t ↦ ∫_0^t e^{i(t−τ)μ} w(τ) dτ`.
    pub fn duhamel(&self, mu: f64) -> ExpPolyWave {
        let mut out = ExpPolyWave::zero(self.components);
        let tol = resonance_tolerance(mu);
        for term in &self.terms {
            let nu = term.freq - mu;
            let p = term.power;
            if nu.abs() <= tol {
                let f = 1.0 / (p as f64 + 1.0);
                out.add_term(WaveTerm {
                    coeff: term.coeff.iter().map(|c| c * f).collect(),
                    power: p + 1,
                    freq: mu,
                });
                continue;
            }
            if nu.abs() < 10.0 * tol {
                NEAR_RESONANT.fetch_add(1, Ordering::Relaxed);
                log::warn!(
                    "near-resonant Duhamel kernel: |λ − μ| = {:e}, tolerance {:e}",
                    nu.abs(),
                    tol
                );
            }
            // ∫_0^t τ^p e^{iντ} dτ = e^{iνt} Σ_q osc[q] t^q + constant.
            // The recurrence loses about p!/|ν|^{p+1} ulps to cancellation.
            let inv = 1.0 / (I * nu);
            let mut osc = vec![inv];
            let mut constant = -inv;
            for q in 1..=p {
                let f = -(q as f64) * inv;
                for c in osc.iter_mut() {
                    *c *= f;
                }
                constant *= f;
                osc.push(inv);
            }
            for (q, s) in osc.into_iter().enumerate() {
                out.add_term(WaveTerm {
                    coeff: term.coeff.iter().map(|c| c * s).collect(),
                    power: q as u32,
                    freq: term.freq,
                });
            }
            out.add_term(WaveTerm {
                coeff: term.coeff.iter().map(|c| c * constant).collect(),
                power: 0,
                freq: mu,
            });
        }
        out
    }
}
