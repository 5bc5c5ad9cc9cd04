//! Tree-labelled Picard coefficients `G_{L,A,k̄}(t)`, Fourier modes of the
//! Picard iterates `u_{L,n}`, and sampled quasi-solutions.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::Serialize;

use crate::ensemble::{GaussianDraw, SpectralEnsemble};
use crate::error::{Error, Result};
use crate::lattice::{bracket, KVec};
use crate::model::{Freq, Model};
use crate::ntree::{enumerate_trees, NTree};
use crate::wave::ExpPolyWave;

/// Default cap on the number of leaf tuples scanned by a lattice sum.
pub const DEFAULT_TERM_BUDGET: u128 = 100_000_000;

fn check_compatible(model: &dyn Model, ensemble: &SpectralEnsemble) -> Result<()> {
    if model.dim() != ensemble.dim() || model.components() != ensemble.components() {
        return Err(Error::invalid(format!(
            "model {} has (d, D) = ({}, {}), ensemble has ({}, {})",
            model.name(),
            model.dim(),
            model.components(),
            ensemble.dim(),
            ensemble.components()
        )));
    }
    Ok(())
}

fn freq_of(sum: KVec, scale: f64) -> Freq {
    sum.freq(scale)
}

/// `G_{L,A,k̄}` as a closed-form wave. Leaves outside the support give the
/// zero wave.
pub fn evaluate_g(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    tree: &NTree,
    kvec: &[KVec],
) -> Result<ExpPolyWave> {
    check_compatible(model, ensemble)?;
    if tree.arity() != model.arity() {
        return Err(Error::invalid(format!(
            "tree arity {} differs from model arity {}",
            tree.arity(),
            model.arity()
        )));
    }
    if kvec.len() != tree.leaves() {
        return Err(Error::LeafCountMismatch {
            expected: tree.leaves(),
            got: kvec.len(),
        });
    }
    Ok(g_recursive(model, ensemble, tree, kvec))
}

fn g_recursive(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    tree: &NTree,
    kvec: &[KVec],
) -> ExpPolyWave {
    let scale = ensemble.scale_f64();
    if tree.is_trivial() {
        let k = kvec[0];
        return match ensemble.amplitude(&k) {
            Some(a) => ExpPolyWave::oscillation(
                a.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
                model.omega(&freq_of(k, scale)),
            ),
            None => ExpPolyWave::zero(model.components()),
        };
    }
    let table = tree.leaf_ranges();
    let mut children = Vec::with_capacity(tree.arity());
    let mut xis = Vec::with_capacity(tree.arity());
    for (j, child) in tree.children().iter().enumerate() {
        let slice = &kvec[table.slice(j)];
        let w = g_recursive(model, ensemble, child, slice);
        if w.is_zero() {
            return ExpPolyWave::zero(model.components());
        }
        xis.push(freq_of(slice.iter().copied().sum(), scale));
        children.push(w);
    }
    let total: KVec = kvec.iter().copied().sum();
    let mu = model.omega(&freq_of(total, scale));
    let refs: Vec<&ExpPolyWave> = children.iter().collect();
    let integrand =
        ExpPolyWave::multilinear(&refs, model.components(), |x, out| model.psi(&xis, x, out));
    integrand.duhamel(mu)
}

/// A Fourier mode `û_n(ξ)` as a polynomial in the `g_k`: monomials are keyed
/// by the sorted multiset of their lattice vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FormalMode {
    pub components: usize,
    pub terms: BTreeMap<Vec<KVec>, Vec<Complex64>>,
}

impl FormalMode {
    pub fn zero(components: usize) -> Self {
        FormalMode {
            components,
            terms: BTreeMap::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Every monomial degree present.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.terms.keys().map(Vec::len).collect();
        d.dedup();
        d
    }

    fn add(&mut self, mut key: Vec<KVec>, value: &[Complex64]) {
        key.sort();
        let slot = self
            .terms
            .entry(key)
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); value.len()]);
        for (s, v) in slot.iter_mut().zip(value) {
            *s += v;
        }
    }

    pub fn evaluate(&self, ensemble: &SpectralEnsemble, draw: &GaussianDraw) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.components];
        for (key, coeff) in &self.terms {
            let g: Complex64 = key
                .iter()
                .map(|k| draw.get(ensemble, k).expect("monomial outside the support"))
                .product();
            for (o, c) in out.iter_mut().zip(coeff) {
                *o += c * g;
            }
        }
        out
    }

    /// Single component `i` as a scalar polynomial.
    pub fn component(&self, i: usize) -> BTreeMap<Vec<KVec>, Complex64> {
        self.terms
            .iter()
            .filter(|(_, c)| c[i] != Complex64::new(0.0, 0.0))
            .map(|(k, c)| (k.clone(), c[i]))
            .collect()
    }
}

/// Calls `visit` on every ordered tuple of `len` support vectors summing to `target`.
pub fn for_each_tuple(
    support: &[KVec],
    len: usize,
    target: KVec,
    budget: u128,
    mut visit: impl FnMut(&[KVec]) -> Result<()>,
) -> Result<()> {
    let requested = (support.len() as u128).saturating_pow(len.saturating_sub(1) as u32);
    if requested > budget {
        return Err(Error::budget("lattice sum leaf tuples", requested, budget));
    }
    if len == 0 {
        return Ok(());
    }
    let lookup: std::collections::HashSet<KVec> = support.iter().copied().collect();
    let mut tuple = vec![KVec::ZERO; len];
    fn rec(
        support: &[KVec],
        lookup: &std::collections::HashSet<KVec>,
        tuple: &mut Vec<KVec>,
        pos: usize,
        remaining: KVec,
        visit: &mut dyn FnMut(&[KVec]) -> Result<()>,
    ) -> Result<()> {
        if pos + 1 == tuple.len() {
            if lookup.contains(&remaining) {
                tuple[pos] = remaining;
                visit(tuple)?;
            }
            return Ok(());
        }
        for &k in support {
            tuple[pos] = k;
            rec(support, lookup, tuple, pos + 1, remaining - k, visit)?;
        }
        Ok(())
    }
    rec(support, &lookup, &mut tuple, 0, target, &mut visit)
}

/// `û_n(ξ)` at `ξ = target / L` and time `t`, as a polynomial in the `g_k`.
pub fn fourier_mode(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    n: usize,
    target: KVec,
    t: f64,
) -> Result<FormalMode> {
    fourier_mode_budget(model, ensemble, n, target, t, DEFAULT_TERM_BUDGET)
}

pub fn fourier_mode_budget(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    n: usize,
    target: KVec,
    t: f64,
    budget: u128,
) -> Result<FormalMode> {
    check_compatible(model, ensemble)?;
    if target.is_zero() {
        return Err(Error::ZeroFrequency);
    }
    let trees = enumerate_trees(model.arity(), n)?;
    let leaves = (model.arity() - 1) * n + 1;
    let prefactor = ensemble
        .fourier_prefactor()
        .powi(((model.arity() - 1) * n) as i32);
    let mut mode = FormalMode::zero(model.components());
    let support = ensemble.support();
    for_each_tuple(&support, leaves, target, budget, |tuple| {
        let mut value = vec![Complex64::new(0.0, 0.0); model.components()];
        for tree in &trees {
            for (v, g) in value
                .iter_mut()
                .zip(g_recursive(model, ensemble, tree, tuple).eval(t))
            {
                *v += g * prefactor;
            }
        }
        mode.add(tuple.to_vec(), &value);
        Ok(())
    })?;
    mode.terms
        .retain(|_, c| c.iter().any(|v| *v != Complex64::new(0.0, 0.0)));
    Ok(mode)
}

/// A spectral field `k ↦ û(k/L) ∈ ℂ^D` on the lattice.
pub type SpectralField = BTreeMap<KVec, Vec<Complex64>>;

/// Weak compositions of `total` into `parts` non-negative parts.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 {
            vec![Vec::new()]
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Time-dependent Picard iterates `u_0, …, u_M` of one draw, mode by mode, as
/// closed-form waves. Includes the zero mode, which feeds higher orders.
pub fn picard_wave_fields(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    max_order: usize,
    draw: &GaussianDraw,
) -> Result<Vec<BTreeMap<KVec, ExpPolyWave>>> {
    check_compatible(model, ensemble)?;
    let scale = ensemble.scale_f64();
    let dd = model.components();
    let nn = model.arity();
    let prefactor = ensemble.fourier_prefactor().powi((nn - 1) as i32);
    let mut fields: Vec<BTreeMap<KVec, ExpPolyWave>> = Vec::with_capacity(max_order + 1);
    let mut base = BTreeMap::new();
    for k in ensemble.support() {
        let g = draw.get(ensemble, &k).expect("support vector");
        let a = ensemble.amplitude(&k).expect("support vector");
        base.insert(
            k,
            ExpPolyWave::oscillation(
                a.iter().map(|&v| g * v).collect(),
                model.omega(&freq_of(k, scale)),
            ),
        );
    }
    fields.push(base);
    for m in 0..max_order {
        let mut next: BTreeMap<KVec, ExpPolyWave> = BTreeMap::new();
        for comp in compositions(m, nn) {
            let slots: Vec<Vec<(&KVec, &ExpPolyWave)>> =
                comp.iter().map(|&o| fields[o].iter().collect()).collect();
            if slots.iter().any(Vec::is_empty) {
                continue;
            }
            let mut idx = vec![0usize; nn];
            'outer: loop {
                let ks: Vec<KVec> = idx.iter().zip(&slots).map(|(&i, s)| *s[i].0).collect();
                let waves: Vec<&ExpPolyWave> =
                    idx.iter().zip(&slots).map(|(&i, s)| s[i].1).collect();
                let xis: Vec<Freq> = ks.iter().map(|k| freq_of(*k, scale)).collect();
                let total: KVec = ks.iter().copied().sum();
                let product =
                    ExpPolyWave::multilinear(&waves, dd, |x, out| model.psi(&xis, x, out));
                next.entry(total)
                    .or_insert_with(|| ExpPolyWave::zero(dd))
                    .add_assign(&product);
                let mut pos = 0;
                loop {
                    if pos == nn {
                        break 'outer;
                    }
                    idx[pos] += 1;
                    if idx[pos] < slots[pos].len() {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
            }
        }
        let integrated = next
            .into_iter()
            .map(|(k, w)| {
                let mut out = w.duhamel(model.omega(&freq_of(k, scale)));
                out.scale(Complex64::new(prefactor, 0.0));
                (k, out)
            })
            .filter(|(_, w)| !w.is_zero())
            .collect();
        fields.push(integrated);
    }
    Ok(fields)
}

/// The quasi-solution `Σ_{n ≤ M} û_n(·)` of one draw at time `t`, on nonzero modes.
pub fn sample_realization(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    max_order: usize,
    t: f64,
    draw: &GaussianDraw,
) -> Result<SpectralField> {
    let fields = picard_wave_fields(model, ensemble, max_order, draw)?;
    let mut out: SpectralField = BTreeMap::new();
    for field in &fields {
        for (k, w) in field {
            if k.is_zero() {
                continue;
            }
            let slot = out
                .entry(*k)
                .or_insert_with(|| vec![Complex64::new(0.0, 0.0); model.components()]);
            for (s, v) in slot.iter_mut().zip(w.eval(t)) {
                *s += v;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct GBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `C = C_ψ · N`.
    pub c: f64,
    pub holds: bool,
}

/// Compares `|G_{L,A,k̄}(t)|` with `C^n t^n max_l ⟨k_l/L⟩^{rn} Π_j |a_{L,k_j}|`.
pub fn check_g_bound(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    tree: &NTree,
    kvec: &[KVec],
    t: f64,
    c_psi: f64,
) -> Result<GBoundReport> {
    let g = evaluate_g(model, ensemble, tree, kvec)?;
    let lhs = g.eval(t).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let n = tree.nodes() as i32;
    let c = c_psi * model.arity() as f64;
    let scale = ensemble.scale_f64();
    let growth = kvec
        .iter()
        .map(|k| bracket(&k.freq(scale)[..model.dim()]))
        .fold(0.0, f64::max)
        .powf(model.growth() * n as f64);
    let amps: f64 = kvec
        .iter()
        .map(|k| {
            ensemble
                .amplitude(k)
                .map_or(0.0, |a| a.iter().map(|v| v * v).sum::<f64>().sqrt())
        })
        .product();
    let rhs = c.powi(n) * t.powi(n) * growth * amps;
    Ok(GBoundReport {
        lhs,
        rhs,
        c,
        holds: lhs <= rhs * (1.0 + 1e-12) + 1e-300,
    })
}

/// Cache of `Σ_{A ∈ 𝒜_n} G^{(i)}_{A,k̄}(t)` keyed by `(n, k̄)`.
pub struct TreeSumCache<'a> {
    model: &'a dyn Model,
    ensemble: &'a SpectralEnsemble,
    t: f64,
    trees: Vec<Vec<NTree>>,
    cache: HashMap<(usize, Vec<KVec>), Vec<Complex64>>,
}

impl<'a> TreeSumCache<'a> {
    pub fn new(
        model: &'a dyn Model,
        ensemble: &'a SpectralEnsemble,
        t: f64,
        max_order: usize,
    ) -> Result<Self> {
        check_compatible(model, ensemble)?;
        let trees = (0..=max_order)
            .map(|n| enumerate_trees(model.arity(), n))
            .collect::<Result<_>>()?;
        Ok(TreeSumCache {
            model,
            ensemble,
            t,
            trees,
            cache: HashMap::new(),
        })
    }

    pub fn get(&mut self, n: usize, kvec: &[KVec]) -> &[Complex64] {
        let key = (n, kvec.to_vec());
        if !self.cache.contains_key(&key) {
            let mut value = vec![Complex64::new(0.0, 0.0); self.model.components()];
            for tree in &self.trees[n] {
                for (v, g) in value
                    .iter_mut()
                    .zip(g_recursive(self.model, self.ensemble, tree, kvec).eval(self.t))
                {
                    *v += g;
                }
            }
            self.cache.insert(key.clone(), value);
        }
        &self.cache[&key]
    }
}
