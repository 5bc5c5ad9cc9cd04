//! Joint moments of quasi-solution Fourier modes, computed three independent
//! ways (pairing sums, polynomial Isserlis expansion, Monte Carlo), and the
//! residual against the Wick-pair prediction.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::SpectralEnsemble;
use crate::error::{Error, Result};
use crate::lattice::KVec;
use crate::model::Model;
use crate::pairing::{
    enumerate_pairings, pairing_count, sigma_dimension, BlockIndexSet, ConstraintSystem,
    SigmaStatus,
};
use crate::quasisolution::{
    fourier_mode_budget, picard_wave_fields, TreeSumCache, DEFAULT_TERM_BUDGET,
};
use crate::stats::{complex_mean_se, fit_loglog, ComplexEstimate, LineFit};

/// Default cap on lattice points visited per pairing and on oracle monomials.
pub const DEFAULT_MOMENT_BUDGET: u128 = 50_000_000;

/// `E(Π_l û_{n_l}^{(i_l)}(t)(ξ_l))` with `ξ_l = kvecs[l] / L`. Components are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentQuery {
    pub orders: Vec<usize>,
    pub components: Vec<usize>,
    pub kvecs: Vec<KVec>,
    pub t: f64,
}

impl MomentQuery {
    /// All factors on component 0.
    pub fn scalar(orders: &[usize], kvecs: &[KVec], t: f64) -> Self {
        MomentQuery {
            orders: orders.to_vec(),
            components: vec![0; orders.len()],
            kvecs: kvecs.to_vec(),
            t,
        }
    }

    pub fn factors(&self) -> usize {
        self.orders.len()
    }

    /// `#S = (N − 1) Σ n_l + R`.
    pub fn leaf_count(&self, arity: usize) -> usize {
        (arity - 1) * self.orders.iter().sum::<usize>() + self.factors()
    }

    pub fn validate(&self, model: &dyn Model) -> Result<()> {
        let r = self.factors();
        if r == 0 || self.components.len() != r || self.kvecs.len() != r {
            return Err(Error::invalid(
                "orders, components and frequencies must have one entry per factor",
            ));
        }
        if self.kvecs.iter().any(KVec::is_zero) {
            return Err(Error::ZeroFrequency);
        }
        if let Some(&i) = self.components.iter().find(|&&i| i >= model.components()) {
            return Err(Error::invalid(format!(
                "component {i} out of range for D = {}",
                model.components()
            )));
        }
        if !self.t.is_finite() {
            return Err(Error::invalid("time must be finite"));
        }
        Ok(())
    }

    /// The query restricted to the factors `idx`.
    pub fn sub(&self, idx: &[usize]) -> Self {
        MomentQuery {
            orders: idx.iter().map(|&l| self.orders[l]).collect(),
            components: idx.iter().map(|&l| self.components[l]).collect(),
            kvecs: idx.iter().map(|&l| self.kvecs[l]).collect(),
            t: self.t,
        }
    }
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Sum over pairings `σ` and lattice points of `Σ_σ` of the products of tree
/// sums, times `(2πL)^{−d(N−1)Σn/2}`.
pub fn structural_moment(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    q: &MomentQuery,
) -> Result<Complex64> {
    structural_moment_budget(model, ensemble, q, DEFAULT_MOMENT_BUDGET)
}

pub fn structural_moment_budget(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    q: &MomentQuery,
    budget: u128,
) -> Result<Complex64> {
    q.validate(model)?;
    let set = BlockIndexSet::for_orders(model.arity(), &q.orders);
    if set.len() % 2 == 1 {
        return Ok(zero());
    }
    let support = ensemble.support();
    let max_order = q.orders.iter().copied().max().unwrap_or(0);
    let mut cache = TreeSumCache::new(model, ensemble, q.t, max_order)?;
    let total_order: usize = q.orders.iter().sum();
    let prefactor = ensemble
        .fourier_prefactor()
        .powi(((model.arity() - 1) * total_order) as i32);
    let mut total = zero();
    for sigma in enumerate_pairings(&set)? {
        let geometry = sigma_dimension(&sigma, &set, &q.kvecs)?;
        if geometry.status == SigmaStatus::Empty {
            continue;
        }
        let system = ConstraintSystem::build(&sigma, &set, &q.kvecs);
        let solution = system.solve().ok_or_else(|| {
            Error::Inconsistent("nonempty Σ_σ but the constraint system has no solution".into())
        })?;
        let free = solution.free_cols.len();
        if free != geometry.s_sigma {
            return Err(Error::Inconsistent(format!(
                "{free} free variables for s_σ = {}",
                geometry.s_sigma
            )));
        }
        let visits = (support.len() as u128)
            .checked_pow(free as u32)
            .unwrap_or(u128::MAX);
        if visits > budget {
            return Err(Error::budget("lattice points of Σ_σ", visits, budget));
        }
        let mut idx = vec![0usize; free];
        let mut values = vec![KVec::ZERO; free];
        loop {
            for (v, &i) in values.iter_mut().zip(&idx) {
                *v = support[i];
            }
            if let Some(vars) = solution.complete(&values) {
                if vars.iter().all(|v| ensemble.contains(v)) {
                    let ks = system.expand(&vars);
                    let mut product = Complex64::new(1.0, 0.0);
                    for l in 0..set.blocks() {
                        let block = &ks[set.block_range(l)];
                        if block.iter().copied().sum::<KVec>() != q.kvecs[l] {
                            return Err(Error::Inconsistent(format!(
                                "emitted point violates block {l}"
                            )));
                        }
                        product *= cache.get(q.orders[l], block)[q.components[l]];
                    }
                    total += product;
                }
            }
            let mut pos = 0;
            loop {
                if pos == free {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < support.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == free {
                break;
            }
        }
    }
    Ok(total * prefactor)
}

/// Multiplies the factors as explicit polynomials in the `g_k` and applies
/// `E(g_k^a conj(g_k)^b) = δ_{ab} a!` monomial by monomial.
pub fn oracle_moment(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    q: &MomentQuery,
) -> Result<Complex64> {
    oracle_moment_budget(model, ensemble, q, DEFAULT_MOMENT_BUDGET)
}

pub fn oracle_moment_budget(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    q: &MomentQuery,
    budget: u128,
) -> Result<Complex64> {
    q.validate(model)?;
    if q.leaf_count(model.arity()) % 2 == 1 {
        return Ok(zero());
    }
    // Monomials keyed by their sorted multiset of lattice vectors.
    let mut poly: HashMap<Vec<KVec>, Complex64> =
        HashMap::from([(Vec::new(), Complex64::new(1.0, 0.0))]);
    for l in 0..q.factors() {
        let mode = fourier_mode_budget(
            model,
            ensemble,
            q.orders[l],
            q.kvecs[l],
            q.t,
            DEFAULT_TERM_BUDGET,
        )?;
        let factor = mode.component(q.components[l]);
        let size = poly.len() as u128 * factor.len() as u128;
        if size > budget {
            return Err(Error::budget("oracle monomials", size, budget));
        }
        let mut next: HashMap<Vec<KVec>, Complex64> = HashMap::with_capacity(size as usize);
        for (m, c) in &poly {
            for (tuple, d) in &factor {
                let mut key = m.clone();
                key.extend_from_slice(tuple);
                key.sort();
                *next.entry(key).or_insert_with(zero) += c * d;
            }
        }
        poly = next;
    }
    let mut total = zero();
    // Sorted for a reproducible summation order.
    let mut terms: Vec<(Vec<KVec>, Complex64)> = poly.into_iter().collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    for (monomial, c) in terms {
        let mut counts: BTreeMap<KVec, (u32, u32)> = BTreeMap::new();
        for k in monomial {
            let (canon, positive) = k.canonical();
            let e = counts.entry(canon).or_insert((0, 0));
            if positive {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        if counts.values().all(|(a, b)| a == b) {
            let weight: f64 = counts
                .values()
                .map(|&(a, _)| (1..=a).map(f64::from).product::<f64>())
                .product();
            total += c * weight;
        }
    }
    Ok(total)
}

/// Monte Carlo estimate from `samples` draws of the stream `seed`. With
/// `antithetic`, every sample averages the draws `g` and `−g`.
pub fn mc_moment(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    q: &MomentQuery,
    samples: usize,
    seed: u64,
    antithetic: bool,
) -> Result<ComplexEstimate> {
    q.validate(model)?;
    if samples < 100 {
        return Err(Error::invalid(
            "Monte Carlo moments need at least 100 samples",
        ));
    }
    let max_order = q.orders.iter().copied().max().unwrap_or(0);
    let one = |draw: &crate::ensemble::GaussianDraw| -> Result<Complex64> {
        let fields = picard_wave_fields(model, ensemble, max_order, draw)?;
        let mut p = Complex64::new(1.0, 0.0);
        for l in 0..q.factors() {
            let v = fields[q.orders[l]]
                .get(&q.kvecs[l])
                .map_or(zero(), |w| w.eval(q.t)[q.components[l]]);
            p *= v;
        }
        Ok(p)
    };
    let values: Vec<Complex64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let draw = ensemble.draw(seed, i);
            let v = one(&draw)?;
            if antithetic {
                Ok((v + one(&draw.negated())?) * 0.5)
            } else {
                Ok(v)
            }
        })
        .collect::<Result<_>>()?;
    Ok(complex_mean_se(&values))
}

/// Draws per reduction chunk in [`mc_moments_batch`]; fixed so that results
/// do not depend on the worker count.
const MC_CHUNK: u64 = 1000;

/// Monte Carlo estimates of many queries from one shared set of draws.
pub fn mc_moments_batch(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    queries: &[MomentQuery],
    samples: usize,
    seed: u64,
    antithetic: bool,
) -> Result<Vec<ComplexEstimate>> {
    for q in queries {
        q.validate(model)?;
    }
    if samples < 100 {
        return Err(Error::invalid(
            "Monte Carlo moments need at least 100 samples",
        ));
    }
    let max_order = queries
        .iter()
        .flat_map(|q| q.orders.iter().copied())
        .max()
        .unwrap_or(0);
    let times: Vec<f64> = {
        let mut v: Vec<f64> = queries.iter().map(|q| q.t).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let products = |draw: &crate::ensemble::GaussianDraw| -> Result<Vec<Complex64>> {
        let fields = picard_wave_fields(model, ensemble, max_order, draw)?;
        // Mode values per (order, k, time) are shared between queries.
        let mut memo: HashMap<(usize, KVec, usize), Vec<Complex64>> = HashMap::new();
        Ok(queries
            .iter()
            .map(|q| {
                let ti = times.partition_point(|&x| x < q.t);
                let mut p = Complex64::new(1.0, 0.0);
                for l in 0..q.factors() {
                    let key = (q.orders[l], q.kvecs[l], ti);
                    let v = memo.entry(key).or_insert_with(|| {
                        fields[q.orders[l]]
                            .get(&q.kvecs[l])
                            .map_or(vec![zero(); model.components()], |w| w.eval(q.t))
                    });
                    p *= v[q.components[l]];
                }
                p
            })
            .collect())
    };
    let chunks = (samples as u64).div_ceil(MC_CHUNK);
    let partial: Vec<Vec<[f64; 4]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![[0.0; 4]; queries.len()];
            for i in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(samples as u64) {
                let draw = ensemble.draw(seed, i);
                let mut v = products(&draw)?;
                if antithetic {
                    for (a, b) in v.iter_mut().zip(products(&draw.negated())?) {
                        *a = (*a + b) * 0.5;
                    }
                }
                for (s, z) in acc.iter_mut().zip(&v) {
                    s[0] += z.re;
                    s[1] += z.im;
                    s[2] += z.re * z.re;
                    s[3] += z.im * z.im;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let n = samples as f64;
    Ok((0..queries.len())
        .map(|j| {
            let mut s = [0.0; 4];
            for chunk in &partial {
                for (a, b) in s.iter_mut().zip(&chunk[j]) {
                    *a += b;
                }
            }
            let (mr, mi) = (s[0] / n, s[1] / n);
            let vr = ((s[2] - n * mr * mr) / (n - 1.0)).max(0.0);
            let vi = ((s[3] - n * mi * mi) / (n - 1.0)).max(0.0);
            let (se_re, se_im) = ((vr / n).sqrt(), (vi / n).sqrt());
            ComplexEstimate {
                re: mr,
                im: mi,
                se_re,
                se_im,
                se: (se_re * se_re + se_im * se_im).sqrt(),
                n: samples,
            }
        })
        .collect())
}

/// Every query with `R ≤ max_factors` factors, orders `≤ max_order` and
/// scalar frequencies `k ∈ [−range, range] \ {0}`, one per multiset of
/// `(n_l, k_l)` pairs, on component 0.
pub fn standard_queries(
    max_factors: usize,
    max_order: usize,
    range: i64,
    t: f64,
) -> Vec<MomentQuery> {
    let atoms: Vec<(usize, i64)> = (0..=max_order)
        .flat_map(|n| (-range..=range).filter(|&k| k != 0).map(move |k| (n, k)))
        .collect();
    let mut out = Vec::new();
    fn grow(
        atoms: &[(usize, i64)],
        start: usize,
        cur: &mut Vec<(usize, i64)>,
        max: usize,
        t: f64,
        out: &mut Vec<MomentQuery>,
    ) {
        if !cur.is_empty() {
            let orders: Vec<usize> = cur.iter().map(|a| a.0).collect();
            let ks: Vec<KVec> = cur.iter().map(|a| KVec::d1(a.1)).collect();
            out.push(MomentQuery::scalar(&orders, &ks, t));
        }
        if cur.len() == max {
            return;
        }
        for i in start..atoms.len() {
            cur.push(atoms[i]);
            grow(atoms, i, cur, max, t, out);
            cur.pop();
        }
    }
    grow(&atoms, 0, &mut Vec::new(), max_factors, t, &mut out);
    out
}

/// `Σ_{𝒪 ∈ 𝒫_R} Π_{{l,l'} ∈ 𝒪} E(û_{n_l}(ξ_l) û_{n_l'}(ξ_l'))`, zero for odd `R`.
pub fn wick_prediction(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    q: &MomentQuery,
) -> Result<Complex64> {
    q.validate(model)?;
    let r = q.factors();
    if r % 2 == 1 {
        return Ok(zero());
    }
    let mut second: HashMap<(usize, usize), Complex64> = HashMap::new();
    for a in 0..r {
        for b in a + 1..r {
            second.insert((a, b), structural_moment(model, ensemble, &q.sub(&[a, b]))?);
        }
    }
    let factors = BlockIndexSet::new(vec![1; r]);
    Ok(enumerate_pairings(&factors)?
        .iter()
        .map(|s| {
            s.lower_elements()
                .into_iter()
                .map(|m| second[&(m, s.partner(m))])
                .product::<Complex64>()
        })
        .sum())
}

/// Theorem-1 comparison for one query.
#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub query: MomentQuery,
    pub scale: usize,
    pub structural: Complex64,
    pub oracle: Option<Complex64>,
    pub mc_estimate: Option<ComplexEstimate>,
    pub wick_prediction: Complex64,
    pub residual: f64,
    /// `(#S)!/(#S/2)! ‖a‖_{ℓ²∩ℓ∞} (C A_L^r)^{Σn} (2πL)^{−d/2}` with `C = C_ψ N`.
    pub bound: f64,
    /// `#𝔖 ‖a‖_{ℓ²∩ℓ∞}^{#S} (C̄ t A_L^r)^{Σn} (2πL)^{−d/2}`, where `#𝔖` counts
    /// the pairings of `S` and `C̄ = 4C_ψ` for `N = 2`, `3eN C_ψ` otherwise.
    pub pairing_bound: f64,
    pub c: f64,
    pub leaf_count: usize,
    pub holds: bool,
}

fn factorial_ratio(s: usize) -> f64 {
    // s!/(s/2)! = Π_{j = s/2 + 1}^{s} j
    (s / 2 + 1..=s).map(|j| j as f64).product()
}

/// Residual `|E(Π û) − wick|` against both forms of the bound. Odd `#S`
/// requires exact equality.
pub fn theorem1_residual(
    model: &dyn Model,
    ensemble: &SpectralEnsemble,
    q: &MomentQuery,
    c_psi: f64,
) -> Result<MomentReport> {
    let structural = structural_moment(model, ensemble, q)?;
    let wick = wick_prediction(model, ensemble, q)?;
    let residual = (structural - wick).norm();
    let s = q.leaf_count(model.arity());
    let norms = ensemble.norms();
    let a = norms.l2 + norms.linf;
    let n_total: usize = q.orders.iter().sum();
    let n_arity = model.arity() as f64;
    let c = c_psi * n_arity;
    let c_bar = if model.arity() == 2 {
        4.0 * c_psi
    } else {
        3.0 * std::f64::consts::E * n_arity * c_psi
    };
    let growth = norms.a_l.powf(model.growth());
    let lattice = ensemble.fourier_prefactor();
    let odd = s % 2 == 1;
    let (bound, pairing_bound) = if odd {
        (0.0, 0.0)
    } else {
        (
            factorial_ratio(s) * a * (c * growth).powi(n_total as i32) * lattice,
            pairing_count(s) as f64
                * a.powi(s as i32)
                * (c_bar * q.t.abs() * growth).powi(n_total as i32)
                * lattice,
        )
    };
    let holds = if odd {
        structural == zero() && wick == zero()
    } else {
        residual <= bound * (1.0 + 1e-12)
    };
    Ok(MomentReport {
        query: q.clone(),
        scale: ensemble.scale(),
        structural,
        oracle: None,
        mc_estimate: None,
        wick_prediction: wick,
        residual,
        bound,
        pairing_bound,
        c,
        leaf_count: s,
        holds,
    })
}

/// Residuals and bounds along an `L` ladder, with the log-log slope of the
/// residual.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeReport {
    pub reports: Vec<MomentReport>,
    /// `None` when a residual vanishes or fewer than two rungs exist.
    pub fit: Option<LineFit>,
}

pub fn residual_ladder(
    model: &dyn Model,
    scales: &[usize],
    ensemble_of: impl Fn(usize) -> Result<SpectralEnsemble>,
    query_of: impl Fn(usize) -> MomentQuery,
    c_psi: f64,
) -> Result<SlopeReport> {
    let reports = scales
        .iter()
        .map(|&l| theorem1_residual(model, &ensemble_of(l)?, &query_of(l), c_psi))
        .collect::<Result<Vec<_>>>()?;
    let fit = if reports.iter().all(|r| r.residual > 0.0) {
        let x: Vec<f64> = scales.iter().map(|&l| l as f64).collect();
        let y: Vec<f64> = reports.iter().map(|r| r.residual).collect();
        fit_loglog(&x, &y)
    } else {
        None
    };
    Ok(SlopeReport { reports, fit })
}

#[derive(Clone, Debug, Serialize)]
pub struct MixedModeRow {
    pub scale: usize,
    pub moment: Complex64,
    pub mc: Option<ComplexEstimate>,
}

/// `|E(û_{n_1}(ξ) û_{n_2}(η))|` for `ξ + η ≠ 0` along an `L` ladder; the
/// frequencies are given as lattice vectors at `L = scales[0]` and scaled with `L`.
pub fn mixed_mode_decay(
    model: &dyn Model,
    scales: &[usize],
    ensemble_of: impl Fn(usize) -> Result<SpectralEnsemble>,
    xi: KVec,
    eta: KVec,
    orders: (usize, usize),
    t: f64,
    mc_samples: Option<(usize, u64)>,
) -> Result<Vec<MixedModeRow>> {
    if (xi + eta).is_zero() {
        return Err(Error::invalid("mixed-mode decay needs ξ + η ≠ 0"));
    }
    let base = *scales
        .first()
        .ok_or_else(|| Error::invalid("empty L ladder"))?;
    scales
        .iter()
        .map(|&l| {
            if l % base != 0 {
                return Err(Error::invalid("every L must be a multiple of the first"));
            }
            let f = (l / base) as i64;
            let ens = ensemble_of(l)?;
            let q = MomentQuery::scalar(&[orders.0, orders.1], &[xi.scale(f), eta.scale(f)], t);
            let moment = structural_moment(model, &ens, &q)?;
            let mc = match mc_samples {
                Some((n, seed)) => Some(mc_moment(model, &ens, &q, n, seed, false)?),
                None => None,
            };
            Ok(MixedModeRow {
                scale: l,
                moment,
                mc,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnModel, ToyModel};
    use crate::pairing::maximal_zero_sum_partitions;

    fn toy_ensemble() -> SpectralEnsemble {
        SpectralEnsemble::new(
            1,
            1,
            4,
            &[(KVec::d1(1), vec![1.0]), (KVec::d1(2), vec![0.7])],
        )
        .unwrap()
    }

    fn k(v: i64) -> KVec {
        KVec::d1(v)
    }

    fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
        (a - b).norm() <= rel * a.norm().max(b.norm()).max(1e-300)
    }

    #[test]
    fn linear_second_moment() {
        let e = toy_ensemble();
        let q = MomentQuery::scalar(&[0, 0], &[k(2), k(-2)], 0.5);
        let omega = (2.0f64 / 4.0).powi(2);
        let want = Complex64::from_polar(0.49, 2.0 * omega * 0.5);
        let s = structural_moment(&ToyModel, &e, &q).unwrap();
        assert!(close(s, want, 1e-14), "{s} vs {want}");
        assert!(close(
            oracle_moment(&ToyModel, &e, &q).unwrap(),
            want,
            1e-14
        ));
        let flat = FnModel::scalar_product(1, 2, 0.0);
        assert!(close(
            structural_moment(&flat, &e, &q).unwrap(),
            Complex64::new(0.49, 0.0),
            1e-15
        ));
    }

    #[test]
    fn odd_leaf_count_vanishes() {
        let e = toy_ensemble();
        let q = MomentQuery::scalar(&[0, 0, 0], &[k(1), k(1), k(-2)], 0.5);
        assert_eq!(structural_moment(&ToyModel, &e, &q).unwrap(), zero());
        assert_eq!(oracle_moment(&ToyModel, &e, &q).unwrap(), zero());
        let r = theorem1_residual(&ToyModel, &e, &q, 1.0).unwrap();
        assert!(r.holds && r.residual == 0.0);
    }

    #[test]
    fn structural_matches_oracle_on_toy() {
        let e = toy_ensemble();
        let queries = [
            MomentQuery::scalar(&[1, 1], &[k(3), k(-3)], 0.5),
            MomentQuery::scalar(&[1, 1], &[k(1), k(-1)], 0.5),
            MomentQuery::scalar(&[1, 0, 0], &[k(2), k(-1), k(-1)], 0.5),
            MomentQuery::scalar(&[1, 1, 0, 0], &[k(3), k(-3), k(1), k(-1)], 0.5),
            MomentQuery::scalar(&[1, 0, 1, 0], &[k(2), k(-2), k(1), k(-1)], 0.5),
        ];
        for q in &queries {
            let s = structural_moment(&ToyModel, &e, q).unwrap();
            let o = oracle_moment(&ToyModel, &e, q).unwrap();
            assert!(s.norm() > 0.0, "{q:?}");
            assert!(close(s, o, 1e-10), "{q:?}: {s} vs {o}");
            let zs = maximal_zero_sum_partitions(&q.kvecs).unwrap();
            assert!(!zs.is_empty());
        }
    }

    #[test]
    fn four_linear_factors_reproduce_isserlis() {
        let e = toy_ensemble();
        let flat = FnModel::scalar_product(1, 2, 0.0);
        let q = MomentQuery::scalar(&[0; 4], &[k(1), k(-1), k(2), k(-2)], 0.0);
        let want = Complex64::new(0.49, 0.0);
        assert!(close(
            structural_moment(&flat, &e, &q).unwrap(),
            want,
            1e-15
        ));
        assert!(close(oracle_moment(&flat, &e, &q).unwrap(), want, 1e-15));
        // E|g|⁴ = 2.
        let q = MomentQuery::scalar(&[0; 4], &[k(1), k(-1), k(1), k(-1)], 0.0);
        assert!(close(
            structural_moment(&flat, &e, &q).unwrap(),
            Complex64::new(2.0, 0.0),
            1e-15
        ));
        assert!(close(
            oracle_moment(&flat, &e, &q).unwrap(),
            Complex64::new(2.0, 0.0),
            1e-15
        ));
        assert!(close(
            wick_prediction(&flat, &e, &q).unwrap(),
            Complex64::new(2.0, 0.0),
            1e-15
        ));
    }

    #[test]
    fn mc_is_deterministic_and_consistent() {
        let e = toy_ensemble();
        let q = MomentQuery::scalar(&[0, 0], &[k(1), k(-1)], 0.5);
        let a = mc_moment(&ToyModel, &e, &q, 4000, 11, false).unwrap();
        let b = mc_moment(&ToyModel, &e, &q, 4000, 11, false).unwrap();
        assert_eq!(a, b);
        let s = structural_moment(&ToyModel, &e, &q).unwrap();
        assert!((a.mean() - s).norm() <= 4.0 * a.se, "{a:?} vs {s}");
        let odd = MomentQuery::scalar(&[1, 0], &[k(2), k(-2)], 0.5);
        let z = mc_moment(&ToyModel, &e, &odd, 200, 3, true).unwrap();
        assert!(z.mean().norm() < 1e-15);
    }

    #[test]
    fn batch_mc_matches_single_queries() {
        let e = toy_ensemble();
        let qs = vec![
            MomentQuery::scalar(&[0, 0], &[k(1), k(-1)], 0.5),
            MomentQuery::scalar(&[1, 1], &[k(3), k(-3)], 0.5),
        ];
        let batch = mc_moments_batch(&ToyModel, &e, &qs, 2500, 4, false).unwrap();
        for (q, b) in qs.iter().zip(&batch) {
            let single = mc_moment(&ToyModel, &e, q, 2500, 4, false).unwrap();
            assert!((single.mean() - b.mean()).norm() < 1e-12 * (1.0 + b.mean().norm()));
            assert!((single.se - b.se).abs() < 1e-9 * (1.0 + b.se));
        }
    }

    #[test]
    fn standard_query_counts() {
        // Multisets of size ≤ 2 from 4 atoms: 4 + 10.
        assert_eq!(standard_queries(2, 0, 2, 0.5).len(), 14);
        assert_eq!(standard_queries(4, 1, 3, 0.5).len(), 12 + 78 + 364 + 1365);
    }

    #[test]
    fn wick_prediction_shapes() {
        let e = toy_ensemble();
        let q2 = MomentQuery::scalar(&[1, 1], &[k(3), k(-3)], 0.5);
        assert_eq!(
            wick_prediction(&ToyModel, &e, &q2).unwrap(),
            structural_moment(&ToyModel, &e, &q2).unwrap()
        );
        let r = theorem1_residual(&ToyModel, &e, &q2, 1.0).unwrap();
        assert_eq!(r.residual, 0.0);
        let q3 = MomentQuery::scalar(&[1, 0, 0], &[k(2), k(-1), k(-1)], 0.5);
        assert_eq!(wick_prediction(&ToyModel, &e, &q3).unwrap(), zero());
        let r = theorem1_residual(&ToyModel, &e, &q3, 1.0).unwrap();
        assert!(r.residual > 0.0 && r.holds, "{r:?}");
    }

    #[test]
    fn mixed_modes_vanish() {
        let e = toy_ensemble();
        let q = MomentQuery::scalar(&[1, 1], &[k(2), k(-1)], 0.5);
        assert!(maximal_zero_sum_partitions(&q.kvecs).unwrap().is_empty());
        assert_eq!(structural_moment(&ToyModel, &e, &q).unwrap(), zero());
        assert_eq!(oracle_moment(&ToyModel, &e, &q).unwrap(), zero());
    }

    #[test]
    fn residual_slope_is_half_in_one_dimension() {
        let ens = |l: usize| SpectralEnsemble::from_profile(1, 1, l, 0.5, |_| vec![1.0]);
        let query = |l: usize| {
            let f = (l / 4) as i64;
            MomentQuery::scalar(&[1, 0, 0], &[k(2 * f), k(-f), k(-f)], 0.5)
        };
        let rep = residual_ladder(&ToyModel, &[4, 8, 16, 32], ens, query, 1.0).unwrap();
        let slope = rep.fit.unwrap().slope;
        assert!((slope + 0.5).abs() < 1e-9, "{slope}");
        assert!(rep.reports.iter().all(|r| r.holds));
    }

    #[test]
    fn budget_is_enforced() {
        let e = toy_ensemble();
        let q = MomentQuery::scalar(&[1, 1], &[k(3), k(-3)], 0.5);
        assert!(matches!(
            structural_moment_budget(&ToyModel, &e, &q, 1),
            Err(Error::Budget { .. })
        ));
        let r = oracle_moment_budget(&ToyModel, &e, &q, 0);
        assert!(matches!(r, Err(Error::Budget { .. })), "{r:?}");
    }
}
