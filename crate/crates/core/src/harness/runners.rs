//! One runner per experiment id. Each fills the manifest and writes its CSV
//! tables into the output directory.

use std::path::Path;

use num_complex::Complex64;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentId};
use super::manifest::{fit_slope, write_atomic, RunManifest, Table};
use crate::ensemble::SpectralEnsemble;
use crate::error::Result;
use crate::euler::experiments::{
    norm_tail_mc, theorem2_experiment, tune_eps0, typical_size_experiment, Theorem2Config,
};
use crate::euler::measure_inequalities;
use crate::euler::picard::{
    calibrate_picard_constant, datum_threshold, picard_grid_size, picard_iterate_euler,
    sample_initial_datum, AmplitudeProfile, EulerEnsembleSpec,
};
use crate::lattice::KVec;
use crate::model::{calibrate_psi_constant, catalog, Model};
use crate::moments::{
    mc_moments_batch, oracle_moment, residual_ladder, standard_queries, structural_moment,
    theorem1_residual, MomentQuery,
};
use crate::ntree::{count_trees, enumerate_codes_capped};
use crate::pairing::{enumerate_pairings_capped, sigma_dimension, BlockIndexSet, SigmaStatus};

pub fn run_experiment(
    cfg: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    match cfg.experiment()? {
        ExperimentId::Trees => trees(cfg, out, manifest),
        ExperimentId::Pairings => pairings(cfg, out, manifest),
        ExperimentId::Moments => moments(cfg, out, manifest),
        ExperimentId::Slope => slope(cfg, out, manifest),
        ExperimentId::EulerWp => euler_wp(cfg, out, manifest),
        ExperimentId::Tails => tails(cfg, out, manifest),
        ExperimentId::TypicalSize => typical_size(cfg, out, manifest),
        ExperimentId::Theorem2 => theorem2(cfg, out, manifest),
    }
}

fn emit(out: &Path, name: &str, table: &Table, manifest: &mut RunManifest) -> Result<()> {
    write_atomic(out, name, &table.render())?;
    manifest.artifacts.push(name.to_string());
    Ok(())
}

fn trees(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Result<()> {
    let codes = enumerate_codes_capped(cfg.arity, cfg.order, cfg.tree_cap)?;
    let count = count_trees(cfg.arity, cfg.order)?;
    let mut t = Table::new(&["index", "code"]);
    for (i, c) in codes.iter().enumerate() {
        t.push(vec![i.into(), c.to_string().into()]);
    }
    emit(out, "trees.csv", &t, m)?;
    m.budgets.insert("trees".into(), codes.len() as u128);
    let mut round_trip = true;
    for c in &codes {
        round_trip &= c.decode()?.encode() == *c;
    }
    let matches = count.count == num_bigint::BigUint::from(codes.len());
    m.summary = json!({ "count": count.count.to_string(), "within_bound": count.within_bound });
    m.assert(
        "enumeration matches count",
        matches,
        format!("{} codes, count {}", codes.len(), count.count),
    );
    m.assert("decode/encode round trip", round_trip, "");
    m.assert(
        "count within bound",
        count.within_bound,
        format!("ln bound {}", count.log_bound),
    );
    Ok(())
}

fn pairings(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Result<()> {
    let set = if cfg.block_sizes.is_empty() {
        BlockIndexSet::for_orders(cfg.arity, &cfg.orders)
    } else {
        BlockIndexSet::new(cfg.block_sizes.clone())
    };
    let list = enumerate_pairings_capped(&set, cfg.pairing_cap)?;
    let freqs: Vec<KVec> = cfg.frequencies.iter().map(|f| KVec::new(f)).collect();
    let mut t = Table::new(&["index", "pairs", "orbits", "status", "s_sigma", "rank"]);
    let mut nonempty = 0usize;
    for (i, s) in list.iter().enumerate() {
        let pairs: Vec<String> = s
            .pairs(&set)
            .iter()
            .map(|[a, b]| format!("({} {})-({} {})", a.0, a.1, b.0, b.1))
            .collect();
        let orbits = crate::pairing::orbit_partition(s, &set);
        let (status, dim, rank) = if freqs.is_empty() {
            ("-".to_string(), String::new(), String::new())
        } else {
            let g = sigma_dimension(s, &set, &freqs)?;
            if g.status == SigmaStatus::Nonempty {
                nonempty += 1;
            }
            (
                format!("{:?}", g.status).to_lowercase(),
                g.s_sigma.to_string(),
                g.rank_witness.to_string(),
            )
        };
        t.push(vec![
            i.into(),
            pairs.join(" ").into(),
            orbits.len().into(),
            status.into(),
            dim.into(),
            rank.into(),
        ]);
    }
    emit(out, "pairings.csv", &t, m)?;
    m.budgets.insert("pairings".into(), list.len() as u128);
    let expected = crate::pairing::pairing_count(set.len());
    m.summary = json!({ "pairings": list.len(), "nonempty": nonempty });
    m.assert(
        "pairing count is (|S|-1)!!",
        list.len() as u128 == expected,
        format!("{} vs {expected}", list.len()),
    );
    Ok(())
}

fn scalar_ensemble(
    model: &dyn Model,
    scale: usize,
    radius: f64,
    amplitude: f64,
) -> Result<SpectralEnsemble> {
    let comps = model.components();
    SpectralEnsemble::from_profile(model.dim(), comps, scale, radius, |_| {
        vec![amplitude; comps]
    })
}

fn psi_constant(cfg: &ExperimentConfig, model: &dyn Model, m: &mut RunManifest) -> f64 {
    let c = cfg
        .c_psi
        .unwrap_or_else(|| calibrate_psi_constant(model, cfg.psi_probes, cfg.seed));
    m.constants.insert("c_psi".into(), c);
    c
}

fn moments(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Result<()> {
    let model = catalog(&cfg.model)?;
    let model = model.as_ref();
    let ens = scalar_ensemble(model, cfg.scale, cfg.radius, cfg.amplitude)?;
    let queries = if cfg.queries.is_empty() {
        standard_queries(cfg.max_factors, cfg.max_order, cfg.frequency_range, cfg.t)
    } else {
        cfg.queries()
    };
    let c_psi = psi_constant(cfg, model, m);
    let mc = if cfg.samples > 0 {
        Some(mc_moments_batch(
            model,
            &ens,
            &queries,
            cfg.samples,
            cfg.seed,
            cfg.antithetic,
        )?)
    } else {
        None
    };
    m.budgets.insert("queries".into(), queries.len() as u128);
    m.budgets.insert("draws".into(), cfg.samples as u128);
    let mut t = Table::new(&[
        "query",
        "orders",
        "k",
        "structural_re",
        "structural_im",
        "oracle_re",
        "oracle_im",
        "mc_re",
        "mc_im",
        "mc_se",
        "wick_re",
        "wick_im",
        "residual",
        "bound",
    ]);
    let (mut worst_rel, mut worst_z, mut bound_ok, mut nonzero, mut odd_zero) =
        (0.0f64, 0.0f64, true, 0usize, true);
    for (i, q) in queries.iter().enumerate() {
        let s = structural_moment(model, &ens, q)?;
        let o = oracle_moment(model, &ens, q)?;
        let r = theorem1_residual(model, &ens, q, c_psi)?;
        let scale = s.norm().max(o.norm());
        if scale > 0.0 {
            nonzero += 1;
            worst_rel = worst_rel.max((s - o).norm() / scale);
        }
        bound_ok &= r.holds;
        if q.leaf_count(model.arity()) % 2 == 1 {
            odd_zero &= s == Complex64::new(0.0, 0.0);
        }
        let (mr, mi, se) = match &mc {
            Some(v) => {
                let e = v[i];
                let dev = (e.mean() - s).norm();
                if e.se > 0.0 {
                    worst_z = worst_z.max(dev / e.se);
                } else if dev > 1e-12 {
                    worst_z = f64::INFINITY;
                }
                (e.re, e.im, e.se)
            }
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        let orders: Vec<String> = q.orders.iter().map(|n| n.to_string()).collect();
        let ks: Vec<String> = q.kvecs.iter().map(|k| k.0[0].to_string()).collect();
        t.push(vec![
            i.into(),
            orders.join(" ").into(),
            ks.join(" ").into(),
            s.re.into(),
            s.im.into(),
            o.re.into(),
            o.im.into(),
            mr.into(),
            mi.into(),
            se.into(),
            r.wick_prediction.re.into(),
            r.wick_prediction.im.into(),
            r.residual.into(),
            r.bound.into(),
        ]);
    }
    emit(out, "moments.csv", &t, m)?;
    m.summary = json!({ "queries": queries.len(), "nonzero": nonzero, "max_rel_structural_oracle": worst_rel, "max_mc_deviation_in_se": worst_z });
    m.assert(
        "structural vs oracle ≤ 1e-10 relative",
        worst_rel <= 1e-10,
        format!("worst {worst_rel:e}"),
    );
    if mc.is_some() {
        m.assert(
            "Monte Carlo within 4 SE",
            worst_z <= 4.0,
            format!("worst {worst_z:.3} SE"),
        );
    }
    m.assert("residual within bound", bound_ok, "");
    m.assert("odd leaf counts give exactly 0", odd_zero, "");
    Ok(())
}

fn default_slope_query(base: usize) -> MomentQuery {
    // ξ = (1/2, −1/4, −1/4) at every L.
    let f = (base / 4).max(1) as i64;
    MomentQuery::scalar(
        &[1, 0, 0],
        &[KVec::d1(2 * f), KVec::d1(-f), KVec::d1(-f)],
        0.5,
    )
}

fn slope(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Result<()> {
    let model = catalog(&cfg.model)?;
    let model = model.as_ref();
    let base = cfg.scales[0];
    let mut q0 = cfg
        .queries()
        .into_iter()
        .next()
        .unwrap_or_else(|| default_slope_query(base));
    q0.t = cfg.t;
    let c_psi = psi_constant(cfg, model, m);
    let rep = residual_ladder(
        model,
        &cfg.scales,
        |l| scalar_ensemble(model, l, cfg.radius, cfg.amplitude),
        |l| {
            let f = (l / base) as i64;
            MomentQuery {
                kvecs: q0.kvecs.iter().map(|k| k.scale(f)).collect(),
                ..q0.clone()
            }
        },
        c_psi,
    )?;
    let mut t = Table::new(&[
        "L",
        "residual",
        "bound",
        "pairing_bound",
        "structural_re",
        "structural_im",
    ]);
    for r in &rep.reports {
        t.push(vec![
            r.scale.into(),
            r.residual.into(),
            r.bound.into(),
            r.pairing_bound.into(),
            r.structural.re.into(),
            r.structural.im.into(),
        ]);
    }
    emit(out, "slope.csv", &t, m)?;
    let pts: Vec<(f64, f64)> = rep
        .reports
        .iter()
        .map(|r| (r.scale as f64, r.residual))
        .collect();
    let fit = fit_slope(&pts)?;
    m.constants.insert("slope".into(), fit.slope);
    m.summary = json!({ "fit": fit, "query": q0 });
    let [lo, hi] = cfg.slope_window;
    m.assert(
        "slope in window",
        (lo..=hi).contains(&fit.slope),
        format!("{:.4} ± {:.2e} in [{lo}, {hi}]", fit.slope, fit.half_width),
    );
    m.assert(
        "residual within bound at every L",
        rep.reports.iter().all(|r| r.holds),
        "",
    );
    Ok(())
}

fn euler_wp(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Result<()> {
    let norm = cfg.norm_config();
    let spec = EulerEnsembleSpec {
        dim: 2,
        scale: cfg.scale,
        eps: cfg.eps,
        profile: AmplitudeProfile::Tangential { radius: cfg.radius },
    };
    let ineq = measure_inequalities(
        2,
        cfg.scale,
        cfg.inequality_band,
        cfg.inequality_probes,
        cfg.rho0,
        cfg.rho_prime,
        cfg.oversample,
        cfg.seed,
    )?;
    let mut it = Table::new(&["estimate", "measured", "ceiling", "holds"]);
    for (name, c) in [
        ("product", ineq.product),
        ("derivative", ineq.derivative),
        ("projection", ineq.projection),
    ] {
        it.push(vec![
            name.into(),
            c.measured.into(),
            c.ceiling.into(),
            c.holds.into(),
        ]);
        m.constants.insert(format!("{name}_constant"), c.measured);
    }
    emit(out, "inequalities.csv", &it, m)?;
    let c = match cfg.c_picard {
        Some(c) => c,
        None => calibrate_picard_constant(
            2,
            cfg.scale,
            spec.band(),
            &norm,
            cfg.picard_probes,
            cfg.seed,
        )?,
    };
    m.constants.insert("c_picard".into(), c);
    m.constants
        .insert("threshold".into(), datum_threshold(&norm, c));
    let u0 = sample_initial_datum(
        &spec,
        picard_grid_size(spec.band(), cfg.picard_order),
        cfg.seed,
        0,
    )?;
    let rep = picard_iterate_euler(&u0, cfg.picard_order, &norm, c)?;
    m.constants.insert("datum_norm".into(), rep.datum_norm);
    let mut t = Table::new(&["n", "m_norm", "envelope", "ratio"]);
    for (n, (a, b)) in rep.norms.iter().zip(&rep.envelope).enumerate() {
        let ratio = if n == 0 { f64::NAN } else { rep.ratios[n - 1] };
        t.push(vec![n.into(), (*a).into(), (*b).into(), ratio.into()]);
    }
    emit(out, "picard.csv", &t, m)?;
    let real = rep.terms.iter().map(|w| w.max_imag()).fold(0.0, f64::max);
    let div = rep
        .terms
        .iter()
        .map(|w| w.max_divergence())
        .fold(0.0, f64::max);
    let worst_ratio = rep.ratios.iter().take(5).copied().fold(0.0, f64::max);
    m.summary = json!({ "inequalities": ineq, "picard_norms": rep.norms, "ratios": rep.ratios, "max_imag": real, "max_divergence": div });
    m.assert("inequalities hold", ineq.holds(), "");
    m.assert("geometric envelope", rep.envelope_holds, "");
    m.assert(
        "ratio cap for n ≤ 5",
        worst_ratio <= cfg.ratio_cap,
        format!("worst {worst_ratio:.4}"),
    );
    m.assert(
        "terms real and divergence-free",
        real < 1e-12 && div < 1e-12,
        format!("{real:e}, {div:e}"),
    );
    Ok(())
}

fn tails(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Result<()> {
    let profile = if cfg.dim == 1 {
        AmplitudeProfile::ScalarUnit { radius: cfg.radius }
    } else {
        AmplitudeProfile::Tangential { radius: cfg.radius }
    };
    let spec = EulerEnsembleSpec {
        dim: cfg.dim,
        scale: cfg.scale,
        eps: cfg.eps,
        profile,
    };
    let curve = norm_tail_mc(
        &spec,
        cfg.rho0,
        &cfg.r_values,
        cfg.samples,
        cfg.seed,
        cfg.oversample,
    )?;
    let mut t = Table::new(&["R", "exceedances", "probability", "in_fit"]);
    for p in &curve.points {
        t.push(vec![
            p.r.into(),
            p.exceedances.into(),
            p.probability.into(),
            p.in_fit.into(),
        ]);
    }
    emit(out, "tails.csv", &t, m)?;
    if let Some(c) = curve.c {
        m.constants.insert("tail_c".into(), c);
    }
    m.summary = json!(curve);
    m.assert(
        "fitted c positive",
        curve.c.is_some_and(|c| c > 0.0),
        format!("{:?}", curve.c),
    );
    m.assert(
        "fitted c stable within 30%",
        curve.stable,
        format!("halves {:?}", curve.c_halves),
    );
    Ok(())
}

fn typical_size(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Result<()> {
    let rows = typical_size_experiment(cfg.delta, &cfg.scales, cfg.samples, cfg.seed)?;
    let mut t = Table::new(&[
        "L",
        "threshold",
        "probability",
        "se",
        "variance",
        "variance_se",
        "covariance",
        "covariance_se",
    ]);
    for r in &rows {
        t.push(vec![
            r.scale.into(),
            r.threshold.into(),
            r.probability.into(),
            r.se.into(),
            r.variance.mean.into(),
            r.variance.se.into(),
            r.covariance.mean.into(),
            r.covariance.se.into(),
        ]);
    }
    emit(out, "typical_size.csv", &t, m)?;
    let last = rows.last().expect("validated nonempty");
    let v = 1.0 / std::f64::consts::PI;
    let var_ok = rows
        .iter()
        .all(|r| (r.variance.mean - v).abs() <= 4.0 * r.variance.se);
    let cov_ok = rows
        .iter()
        .all(|r| r.covariance.mean.abs() <= 4.0 * r.covariance.se);
    m.summary = json!(rows);
    m.assert(
        "probability ≥ 1/2 at the largest L",
        last.probability >= 0.5,
        format!("{}", last.probability),
    );
    m.assert("grid variance 1/π within 4 SE", var_ok, "");
    m.assert("grid covariance 0 within 4 SE", cov_ok, "");
    Ok(())
}

fn theorem2(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Result<()> {
    let norm = cfg.norm_config();
    let c = match cfg.c_picard {
        Some(c) => c,
        None => {
            let mut best: f64 = 0.0;
            for &l in &cfg.scales {
                let band = (cfg.radius * l as f64).floor() as i64;
                best = best.max(calibrate_picard_constant(
                    2,
                    l,
                    band,
                    &norm,
                    cfg.picard_probes,
                    cfg.seed,
                )?);
            }
            best
        }
    };
    m.constants.insert("c_picard".into(), c);
    let eps0 = match cfg.eps0 {
        Some(e) => e,
        None => tune_eps0(
            &cfg.scales,
            cfg.radius,
            &norm,
            c,
            cfg.tune_probes,
            cfg.tune_quantile,
            cfg.tune_margin,
            cfg.seed ^ 0x5eed,
        )?,
    };
    m.constants.insert("eps0".into(), eps0);
    let t2 = Theorem2Config {
        eps0,
        t: cfg.t,
        samples: cfg.samples,
        seed: cfg.seed,
        norm,
        c_picard: c,
        xi: KVec::new(&cfg.xi),
        eta: KVec::new(&cfg.eta),
        components: (cfg.moment_components[0], cfg.moment_components[1]),
        radius: cfg.radius,
    };
    let rows = theorem2_experiment(&t2, &cfg.scales)?;
    let mut t = Table::new(&[
        "L",
        "eps",
        "M",
        "event_fraction",
        "moment_re",
        "moment_im",
        "se",
        "next_re",
        "next_im",
        "ratio",
        "truncation_gap",
    ]);
    for r in &rows {
        t.push(vec![
            r.scale.into(),
            r.eps.into(),
            r.order.into(),
            r.event_fraction.into(),
            r.moment.re.into(),
            r.moment.im.into(),
            r.moment.se.into(),
            r.moment_next.re.into(),
            r.moment_next.im.into(),
            r.ratio.into(),
            r.truncation_gap.into(),
        ]);
    }
    emit(out, "theorem2.csv", &t, m)?;
    m.budgets
        .insert("draws".into(), (cfg.samples * cfg.scales.len()) as u128);
    m.summary = json!(rows);
    let ratio_ok = rows.iter().all(|r| r.ratio <= 1.0);
    let trunc_ok = rows.iter().all(|r| r.truncation_gap < r.truncation_se);
    m.assert(
        "bounded ratio to ε²/L",
        ratio_ok,
        rows.iter()
            .map(|r| format!("L={}: {:.3}", r.scale, r.ratio))
            .collect::<Vec<_>>()
            .join(", "),
    );
    m.assert("truncation gap below SE", trunc_ok, "");
    Ok(())
}
