//! Monte Carlo experiments on random Euler data: norm tails, the typical size
//! of the datum, and conditioned mixed-mode moments of the solution.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::analytic::{window_sups, AnalyticNormConfig};
use super::picard::{
    datum_on_grid, datum_threshold, eps_of_l, evaluate_series, picard_grid_size, picard_terms,
    values_at_integer_points, AmplitudeProfile, EulerEnsembleSpec,
};
use crate::error::{Error, Result};
use crate::lattice::KVec;
use crate::stats::{complex_mean_se, fit_line, mean_se, ComplexEstimate, Estimate, LineFit};

/// Fewest exceedances a tail point needs to enter the fit.
pub const MIN_EXCEEDANCES: usize = 10;

/// `‖a_L‖_{ρ_0}` for draws `0..samples` of the stream `seed`, in draw order.
pub fn datum_norms(
    spec: &EulerEnsembleSpec,
    rho0: f64,
    oversample: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let ensemble = spec.ensemble()?;
    let n = picard_grid_size(spec.band(), 0);
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let u = datum_on_grid(&ensemble, &ensemble.draw(seed, i), n)?;
            Ok(window_sups(&u, oversample).norm(rho0))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TailPoint {
    pub r: f64,
    pub exceedances: usize,
    pub probability: f64,
    pub in_fit: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailCurve {
    pub eps: f64,
    pub samples: usize,
    pub points: Vec<TailPoint>,
    /// `c` in `ln P ≈ b − c R²/ε²` over the fitted points.
    pub c: Option<f64>,
    pub intercept: Option<f64>,
    /// The same fit on the lower and upper halves of the fitted points.
    pub c_halves: Option<(f64, f64)>,
    /// Both half fits within 30% of `c`.
    pub stable: bool,
}

fn tail_fit(points: &[TailPoint], eps: f64) -> Option<LineFit> {
    let x: Vec<f64> = points.iter().map(|p| p.r * p.r / (eps * eps)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.probability.ln()).collect();
    fit_line(&x, &y)
}

/// Tail curve from precomputed norms. The fit uses the upper half of the
/// `R` ladder, skipping points with fewer than [`MIN_EXCEEDANCES`].
pub fn tail_curve(norms: &[f64], eps: f64, r_values: &[f64]) -> TailCurve {
    let half = r_values.len() / 2;
    let points: Vec<TailPoint> = r_values
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let exceedances = norms.iter().filter(|&&v| v >= r).count();
            TailPoint {
                r,
                exceedances,
                probability: exceedances as f64 / norms.len() as f64,
                in_fit: i >= half && exceedances >= MIN_EXCEEDANCES,
            }
        })
        .collect();
    let used: Vec<TailPoint> = points.iter().filter(|p| p.in_fit).cloned().collect();
    let fit = tail_fit(&used, eps);
    let c = fit.map(|f| -f.slope);
    let c_halves = if used.len() >= 4 {
        let m = used.len() / 2;
        match (tail_fit(&used[..m], eps), tail_fit(&used[m..], eps)) {
            (Some(a), Some(b)) => Some((-a.slope, -b.slope)),
            _ => None,
        }
    } else {
        None
    };
    let stable = match (c, c_halves) {
        (Some(c), Some((a, b))) => c > 0.0 && [a, b].iter().all(|v| (v - c).abs() <= 0.3 * c),
        _ => false,
    };
    TailCurve {
        eps,
        samples: norms.len(),
        points,
        c,
        intercept: fit.map(|f| f.intercept),
        c_halves,
        stable,
    }
}

/// Empirical `P(‖a_L‖_{ρ_0} ≥ R)` over the `R` ladder, with the Gaussian tail
/// fit `ln P ≈ b − c R²/ε²`.
pub fn norm_tail_mc(
    spec: &EulerEnsembleSpec,
    rho0: f64,
    r_values: &[f64],
    samples: usize,
    seed: u64,
    oversample: usize,
) -> Result<TailCurve> {
    if samples < 1000 {
        return Err(Error::invalid("tail estimates need at least 1000 samples"));
    }
    if r_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("R ladder must be strictly increasing"));
    }
    let norms = datum_norms(spec, rho0, oversample, samples, seed)?;
    Ok(tail_curve(&norms, spec.eps, r_values))
}

#[derive(Clone, Debug, Serialize)]
pub struct TypicalSizeRow {
    pub scale: usize,
    pub threshold: f64,
    pub probability: f64,
    pub se: f64,
    /// Sample variance at `x_1`.
    pub variance: Estimate,
    /// Sample covariance of the values at `x_1` and `x_2`.
    pub covariance: Estimate,
}

/// `P(max_n |a_L(x_n)| ≥ δ √ln L)` at `x_n = 2πn`, a lower bound for
/// `P(‖a_L‖_{L^∞} ≥ δ √ln L)`, for the unit scalar profile on `[−1, 1]` in d = 1.
pub fn typical_size_experiment(
    delta: f64,
    l_values: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<TypicalSizeRow>> {
    l_values
        .iter()
        .map(|&l| {
            if l < 2 {
                return Err(Error::invalid("typical size needs L ≥ 2"));
            }
            let spec = EulerEnsembleSpec {
                dim: 1,
                scale: l,
                eps: 1.0,
                profile: AmplitudeProfile::ScalarUnit { radius: 1.0 },
            };
            let ensemble = spec.ensemble()?;
            let threshold = delta * (l as f64).ln().sqrt();
            let rows: Vec<(f64, f64, f64)> = (0..samples as u64)
                .into_par_iter()
                .map(|i| {
                    let v = values_at_integer_points(&ensemble, &ensemble.draw(seed, i));
                    let hit = if v.iter().any(|x| x.abs() >= threshold) {
                        1.0
                    } else {
                        0.0
                    };
                    (hit, v[0] * v[0], v[0] * v[1])
                })
                .collect();
            let hits: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let var: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let cov: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let p = mean_se(&hits);
            Ok(TypicalSizeRow {
                scale: l,
                threshold,
                probability: p.mean,
                se: p.se,
                variance: mean_se(&var),
                covariance: mean_se(&cov),
            })
        })
        .collect()
}

/// `M(L)`: the smallest order with `2^{−M} ≤ L^{−3/2}`, so that the Picard
/// remainder is below the `L^{−d/2}` residual scale in d = 2 with room to spare.
pub fn truncation_order(scale: usize) -> usize {
    let l = scale as f64;
    (1.5 * l.ln() / std::f64::consts::LN_2).floor() as usize + 1
}

#[derive(Clone, Debug)]
pub struct Theorem2Config {
    pub eps0: f64,
    pub t: f64,
    pub samples: usize,
    pub seed: u64,
    pub norm: AnalyticNormConfig,
    pub c_picard: f64,
    /// Lattice vectors `k` with `ξ = k/L`, given for `L = 4` and scaled by `L/4`.
    pub xi: KVec,
    pub eta: KVec,
    /// Components `i_1`, `i_2` of the moment.
    pub components: (usize, usize),
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem2Row {
    pub scale: usize,
    pub eps: f64,
    pub order: usize,
    pub threshold: f64,
    pub event_fraction: f64,
    /// `E(1_𝓔 û(ξ) û(η))` at order `M`.
    pub moment: ComplexEstimate,
    /// The same at order `M + 1`.
    pub moment_next: ComplexEstimate,
    /// The Wick prediction, zero since `ξ + η ≠ 0`.
    pub prediction: f64,
    /// `ε(L)² L^{−1}`.
    pub scale_factor: f64,
    /// `(|moment − prediction| + 4 SE) / (ε² L^{−1})`.
    pub ratio: f64,
    /// `|E_M − E_{M+1}|` against the standard error of the difference.
    pub truncation_gap: f64,
    pub truncation_se: f64,
}

/// Conditioned mixed-mode moments of the truncated Picard solution over the
/// `L` ladder.
pub fn theorem2_experiment(cfg: &Theorem2Config, l_values: &[usize]) -> Result<Vec<Theorem2Row>> {
    cfg.norm.validate()?;
    if cfg.t > cfg.norm.theta * cfg.norm.rho0 {
        return Err(Error::invalid(
            "t must lie inside the analytic time horizon θ ρ_0",
        ));
    }
    let threshold = datum_threshold(&cfg.norm, cfg.c_picard);
    l_values
        .iter()
        .map(|&l| {
            if l % 4 != 0 {
                return Err(Error::invalid("the L ladder must consist of multiples of 4"));
            }
            let factor = (l / 4) as i64;
            let (xi, eta) = (cfg.xi.scale(factor), cfg.eta.scale(factor));
            if (xi + eta).is_zero() {
                return Err(Error::invalid("theorem-2 experiment expects ξ + η ≠ 0"));
            }
            let eps = eps_of_l(cfg.eps0, l);
            let spec = EulerEnsembleSpec {
                dim: 2,
                scale: l,
                eps,
                profile: AmplitudeProfile::Tangential { radius: cfg.radius },
            };
            let ensemble = spec.ensemble()?;
            let order = truncation_order(l);
            let n = picard_grid_size(spec.band(), order + 1);
            let (c1, c2) = cfg.components;
            let draws: Vec<Option<(Complex64, Complex64)>> = (0..cfg.samples as u64)
                .into_par_iter()
                .map(|i| {
                    let u0 = datum_on_grid(&ensemble, &ensemble.draw(cfg.seed, i), n)?;
                    if window_sups(&u0, cfg.norm.oversample).norm(cfg.norm.rho0) > threshold {
                        return Ok(None);
                    }
                    let terms = picard_terms(&u0, order + 1)?;
                    let at = |m: usize| {
                        let u = evaluate_series(&terms[..=m], cfg.t);
                        u.coeff(c1, &xi) * u.coeff(c2, &eta)
                    };
                    Ok(Some((at(order), at(order + 1))))
                })
                .collect::<Result<_>>()?;
            let inside = draws.iter().filter(|d| d.is_some()).count();
            let event_fraction = inside as f64 / cfg.samples as f64;
            if event_fraction < 0.9 {
                return Err(Error::Acceptance(format!(
                    "conditioning event holds for {:.1}% of draws at L = {l} (threshold {threshold:.4e}); lower ε_0",
                    100.0 * event_fraction
                )));
            }
            let zero = Complex64::new(0.0, 0.0);
            let a: Vec<Complex64> = draws.iter().map(|d| d.map_or(zero, |v| v.0)).collect();
            let b: Vec<Complex64> = draws.iter().map(|d| d.map_or(zero, |v| v.1)).collect();
            let diff: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let moment = complex_mean_se(&a);
            let moment_next = complex_mean_se(&b);
            let gap = complex_mean_se(&diff);
            let scale_factor = eps * eps / l as f64;
            Ok(Theorem2Row {
                scale: l,
                eps,
                order,
                threshold,
                event_fraction,
                moment,
                moment_next,
                prediction: 0.0,
                scale_factor,
                ratio: (moment.mean().norm() + 4.0 * moment.se) / scale_factor,
                truncation_gap: gap.mean().norm(),
                truncation_se: moment.se,
            })
        })
        .collect()
}

/// Largest `ε_0` for which the quantile `q` of `‖a_L‖_{ρ_0}` stays below
/// `margin · A(θ)` at every `L` of the ladder, from `probes` pilot draws.
pub fn tune_eps0(
    l_values: &[usize],
    radius: f64,
    cfg: &AnalyticNormConfig,
    c_picard: f64,
    probes: usize,
    q: f64,
    margin: f64,
    seed: u64,
) -> Result<f64> {
    let threshold = datum_threshold(cfg, c_picard);
    let mut best = f64::INFINITY;
    for &l in l_values {
        let spec = EulerEnsembleSpec {
            dim: 2,
            scale: l,
            eps: eps_of_l(1.0, l),
            profile: AmplitudeProfile::Tangential { radius },
        };
        let mut norms = datum_norms(&spec, cfg.rho0, cfg.oversample, probes, seed)?;
        norms.sort_by(f64::total_cmp);
        let idx = ((q * probes as f64).ceil() as usize).min(probes - 1);
        best = best.min(margin * threshold / norms[idx]);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tangential(scale: usize, eps: f64) -> EulerEnsembleSpec {
        EulerEnsembleSpec {
            dim: 2,
            scale,
            eps,
            profile: AmplitudeProfile::Tangential { radius: 0.5 },
        }
    }

    #[test]
    fn truncation_orders() {
        assert_eq!(truncation_order(4), 4);
        assert_eq!(truncation_order(8), 5);
    }

    #[test]
    fn tail_is_monotone_in_eps() {
        let r = [0.5, 1.0, 1.5, 2.0];
        let a = norm_tail_mc(&tangential(4, 0.2), 0.5, &r, 1000, 3, 2).unwrap();
        let b = norm_tail_mc(&tangential(4, 0.4), 0.5, &r, 1000, 3, 2).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!(q.probability >= p.probability);
        }
        // Below the median the tail holds at least half the mass.
        let norms = datum_norms(&tangential(4, 0.2), 0.5, 2, 1000, 3).unwrap();
        let mut sorted = norms.clone();
        sorted.sort_by(f64::total_cmp);
        let c = tail_curve(&norms, 0.2, &[0.9 * sorted[500]]);
        assert!(c.points[0].probability >= 0.5);
    }

    #[test]
    fn gaussian_tail_fit_recovers_rate() {
        // Half-normal magnitudes: P(|X| ≥ R) ≈ e^{−R²/2} up to polynomial factors.
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                v.abs()
            })
            .collect();
        let ladder: Vec<f64> = (0..10).map(|i| 0.5 + 0.3 * i as f64).collect();
        let c = tail_curve(&xs, 1.0, &ladder);
        let rate = c.c.unwrap();
        assert!(rate > 0.3 && rate < 0.7, "{rate}");
    }

    #[test]
    fn grid_values_have_unit_over_pi_variance() {
        let rows = typical_size_experiment(0.3, &[64], 2000, 9).unwrap();
        let r = &rows[0];
        let v = 1.0 / std::f64::consts::PI;
        assert!(
            (r.variance.mean - v).abs() <= 4.0 * r.variance.se,
            "{:?}",
            r.variance
        );
        assert!(
            r.covariance.mean.abs() <= 4.0 * r.covariance.se,
            "{:?}",
            r.covariance
        );
        assert!(r.probability > 0.5);
    }

    #[test]
    fn theorem2_rejects_rare_event() {
        let cfg = Theorem2Config {
            eps0: 100.0,
            t: 0.1,
            samples: 20,
            seed: 1,
            norm: AnalyticNormConfig::default(),
            c_picard: 1.0,
            xi: KVec::d2(1, 0),
            eta: KVec::d2(0, 1),
            components: (1, 0),
            radius: 0.5,
        };
        assert!(matches!(
            theorem2_experiment(&cfg, &[4]),
            Err(Error::Acceptance(_))
        ));
    }
}
