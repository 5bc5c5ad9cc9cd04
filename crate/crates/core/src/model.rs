//! The generic model `∂_t u = K u + J(u, …, u)` in Fourier variables:
//! dispersion `ω`, multilinear symbol `Ψ`, arity `N`, growth exponent `r`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lattice::{bracket, MAX_DIM};

pub type Freq = [f64; MAX_DIM];

pub trait Model: Send + Sync {
    fn name(&self) -> &str;
    /// Space dimension `d`.
    fn dim(&self) -> usize;
    /// Component count `D`.
    fn components(&self) -> usize;
    /// Arity `N` of the nonlinearity.
    fn arity(&self) -> usize;
    /// Growth exponent `r ∈ [0, 1]`.
    fn growth(&self) -> f64;
    fn omega(&self, xi: &Freq) -> f64;
    /// Writes `Ψ(ξ_1, …, ξ_N)(X_1, …, X_N)` into `out`.
    fn psi(&self, xis: &[Freq], xs: &[&[Complex64]], out: &mut [Complex64]);
}

impl fmt::Debug for dyn Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Model({})", self.name())
    }
}

/// `d = 1`, `D = 1`, `N = 2`, `ω(ξ) = ξ²`, `Ψ(X, Y) = XY`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ToyModel;

impl Model for ToyModel {
    fn name(&self) -> &str {
        "toy-1d"
    }
    fn dim(&self) -> usize {
        1
    }
    fn components(&self) -> usize {
        1
    }
    fn arity(&self) -> usize {
        2
    }
    fn growth(&self) -> f64 {
        0.0
    }
    fn omega(&self, xi: &Freq) -> f64 {
        xi[0] * xi[0]
    }
    fn psi(&self, _xis: &[Freq], xs: &[&[Complex64]], out: &mut [Complex64]) {
        out[0] = xs[0][0] * xs[1][0];
    }
}

/// Model assembled from closures, mostly for tests and ad-hoc symbols.
#[derive(Clone)]
pub struct FnModel {
    pub name: String,
    pub dim: usize,
    pub components: usize,
    pub arity: usize,
    pub growth: f64,
    pub omega: Arc<dyn Fn(&Freq) -> f64 + Send + Sync>,
    #[allow(clippy::type_complexity)]
    pub psi: Arc<dyn Fn(&[Freq], &[&[Complex64]], &mut [Complex64]) + Send + Sync>,
}

impl FnModel {
    /// Scalar model with constant dispersion `c` and `Ψ = Π X_j`.
    pub fn scalar_product(dim: usize, arity: usize, c: f64) -> Self {
        FnModel {
            name: format!("scalar-product-c{c}"),
            dim,
            components: 1,
            arity,
            growth: 0.0,
            omega: Arc::new(move |_| c),
            psi: Arc::new(|_, xs, out| out[0] = xs.iter().map(|x| x[0]).product()),
        }
    }
}

impl Model for FnModel {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn components(&self) -> usize {
        self.components
    }
    fn arity(&self) -> usize {
        self.arity
    }
    fn growth(&self) -> f64 {
        self.growth
    }
    fn omega(&self, xi: &Freq) -> f64 {
        (self.omega)(xi)
    }
    fn psi(&self, xis: &[Freq], xs: &[&[Complex64]], out: &mut [Complex64]) {
        (self.psi)(xis, xs, out)
    }
}

/// Looks up a model by catalog id.
pub fn catalog(id: &str) -> Result<Arc<dyn Model>> {
    match id {
        "toy-1d" => Ok(Arc::new(ToyModel)),
        "euler-2d" => Ok(Arc::new(crate::euler::EulerModel::new(2))),
        other => Err(Error::Validation {
            key: "model".into(),
            message: format!("unknown model `{other}` (known: toy-1d, euler-2d)"),
        }),
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

fn random_freqs(rng: &mut ChaCha8Rng, model: &dyn Model, radius: f64) -> Vec<Freq> {
    (0..model.arity())
        .map(|_| {
            let mut f = [0.0; MAX_DIM];
            for c in f.iter_mut().take(model.dim()) {
                *c = rng.random_range(-radius..radius);
            }
            f
        })
        .collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn apply(model: &dyn Model, xis: &[Freq], xs: &[Vec<Complex64>]) -> Vec<Complex64> {
    let refs: Vec<&[Complex64]> = xs.iter().map(Vec::as_slice).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); model.components()];
    model.psi(xis, &refs, &mut out);
    out
}

/// Largest relative defect of `Ψ` against additivity and complex homogeneity
/// in each slot, over random probes.
pub fn multilinearity_defect(model: &dyn Model, probes: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dd = model.components();
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let xis = random_freqs(&mut rng, model, 3.0);
        let xs: Vec<Vec<Complex64>> = (0..model.arity())
            .map(|_| random_vec(&mut rng, dd))
            .collect();
        let base = apply(model, &xis, &xs);
        for slot in 0..model.arity() {
            let y = random_vec(&mut rng, dd);
            let lambda = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            let mut mixed = xs.clone();
            mixed[slot] = xs[slot]
                .iter()
                .zip(&y)
                .map(|(a, b)| lambda * a + b)
                .collect();
            let mut only_y = xs.clone();
            only_y[slot] = y;
            let lhs = apply(model, &xis, &mixed);
            let rhs_y = apply(model, &xis, &only_y);
            let diff: Vec<Complex64> = lhs
                .iter()
                .zip(base.iter().zip(&rhs_y))
                .map(|(l, (b, r))| l - (lambda * b + r))
                .collect();
            let scale = norm(&lhs) + lambda.norm() * norm(&base) + norm(&rhs_y);
            if scale > 0.0 {
                worst = worst.max(norm(&diff) / scale);
            }
        }
    }
    worst
}

/// Estimate of `C_ψ = sup |Ψ(ξ)(X)| / (Π|X_j| · max_j ⟨ξ_j⟩^r)` from random
/// unit probes; a lower bound on the true operator-norm constant.
pub fn calibrate_psi_constant(model: &dyn Model, probes: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dd = model.components();
    let mut best: f64 = 0.0;
    for _ in 0..probes {
        let xis = random_freqs(&mut rng, model, 3.0);
        let xs: Vec<Vec<Complex64>> = (0..model.arity())
            .map(|_| {
                let v = random_vec(&mut rng, dd);
                let n = norm(&v);
                v.into_iter().map(|c| c / n).collect()
            })
            .collect();
        let out = apply(model, &xis, &xs);
        let growth = xis
            .iter()
            .map(|x| bracket(&x[..model.dim()]).powf(model.growth()))
            .fold(0.0, f64::max);
        best = best.max(norm(&out) / growth);
    }
    best
}
