use std::collections::BTreeMap;

use qutop_core::chaos::{
    entanglement_series, eta_d_estimate, eta_g_estimate, fit_power_law, local_max_slope, pair_delta_s,
    stationary_negativity, DeltaSConvention, EntanglementSeries,
};
use qutop_core::dynamics::{Evolution, FloquetBuilder, TopParams};
use qutop_core::measures::fidelity;
use qutop_core::spin::{initial_density, CoherentParam};
use rayon::prelude::*;

use crate::config::{Analysis, Axis, Point, ScenarioConfig};
use crate::error::CliError;

/// Which quantity a series file holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    Negativity,
    Fidelity,
}

impl SeriesKind {
    pub fn stem(self) -> &'static str {
        match self {
            SeriesKind::Negativity => "negativity",
            SeriesKind::Fidelity => "fidelity",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeriesOut {
    pub kind: SeriesKind,
    pub p: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PointResult {
    pub point: Point,
    pub params: TopParams,
    pub metrics: BTreeMap<String, f64>,
    pub status: &'static str,
    pub series: Vec<SeriesOut>,
}

/// Power-law fit of the stationary value against `epsilon` for one curve.
#[derive(Clone, Debug)]
pub struct FitRow {
    pub pair: usize,
    pub k_re: f64,
    pub k_im: f64,
    pub p: f64,
    pub n_points: usize,
    pub status: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub points: Vec<PointResult>,
    pub fits: Vec<FitRow>,
}

pub fn p_label(p: f64) -> String {
    format!("p={p}")
}

fn metric(name: &str, p: f64) -> String {
    format!("{name}[{}]", p_label(p))
}

/// Fidelity between the trajectories generated by `k` and `k_prime` from the
/// same initial state, at kicks `0..=n_steps`.
pub fn run_fidelity_pair(
    params: TopParams,
    k_prime: f64,
    gamma1: CoherentParam,
    gamma2: CoherentParam,
    p: f64,
    n_steps: usize,
) -> Result<Vec<f64>, CliError> {
    if !params.is_unitary() {
        return Err(CliError::Config("fidelity pairs need k_im = 0".into()));
    }
    let builder = FloquetBuilder::new(params.spin)?;
    let u1 = builder.build(params)?;
    let u2 = builder.build(TopParams { k_re: k_prime, ..params })?;
    let rho = initial_density(params.spin, gamma1, gamma2, p)?;
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(fidelity(&rho, &rho)?);
    let mut a = Evolution::new(rho.clone(), &u1, false)?;
    let mut b = Evolution::new(rho, &u2, false)?;
    for _ in 0..n_steps {
        a.advance()?;
        b.advance()?;
        out.push(fidelity(a.current(), b.current())?);
    }
    Ok(out)
}

fn argmax(values: &[f64], lo: usize, hi: usize) -> Option<(usize, f64)> {
    let hi = hi.min(values.len().checked_sub(1)?);
    (lo..=hi).map(|t| (t, values[t])).fold(None, |best, (t, v)| match best {
        Some((_, bv)) if bv >= v => best,
        _ => Some((t, v)),
    })
}

fn run_point(config: &ScenarioConfig, builder: &FloquetBuilder, point: Point) -> Result<PointResult, CliError> {
    let params = config.top_params(&point)?;
    let pair = config.gamma_pairs[point.pair];
    let (g1, g2) = (pair.gamma1.param(), pair.gamma2.param());
    let floquet = builder.build(params)?;
    let wants = |a: Analysis| config.analyses.contains(&a);

    let mut metrics = BTreeMap::new();
    let mut series = Vec::new();
    let mut status = "ok";

    let mut needed: Vec<f64> = Vec::new();
    if wants(Analysis::Series) {
        needed.extend(&config.p);
    }
    if wants(Analysis::Correlation) {
        needed.extend([0.0, 0.5]);
    }
    needed.sort_by(f64::total_cmp);
    needed.dedup();
    let mut computed: Vec<(f64, EntanglementSeries)> = Vec::with_capacity(needed.len());
    for &p in &needed {
        computed.push((p, entanglement_series(&floquet, g1, g2, p, config.n_steps)?));
    }
    let lookup = |p: f64| computed.iter().find(|(q, _)| *q == p).map(|(_, s)| s.values());

    if wants(Analysis::Series) {
        for &p in &config.p {
            let values = lookup(p).expect("series computed").to_vec();
            let (t_max, max) = argmax(&values, 0, config.n_steps).expect("non-empty series");
            metrics.insert(metric("max", p), max);
            metrics.insert(metric("t_at_max", p), t_max as f64);
            metrics.insert(metric("final", p), values[config.n_steps]);
            metrics.insert(metric("mean", p), values.iter().sum::<f64>() / values.len() as f64);
            series.push(SeriesOut {
                kind: SeriesKind::Negativity,
                p,
                values,
            });
        }
    }

    if wants(Analysis::Correlation) {
        let (e1, e2) = (lookup(0.0).expect("p = 0"), lookup(0.5).expect("p = 0.5"));
        for conv in DeltaSConvention::ALL {
            let ds = pair_delta_s(params.spin, g1, g2, conv);
            let est = eta_d_estimate(e1, e2, ds, config.sign_tol, config.blocks)?;
            metrics.insert(format!("delta_s[{}]", conv.label()), ds);
            metrics.insert(format!("eta_d[{}]", conv.label()), est.value);
            if let Some(se) = est.std_error {
                metrics.insert(format!("eta_d_se[{}]", conv.label()), se);
            }
        }
        let g = eta_g_estimate(e1, e2, config.blocks)?;
        metrics.insert("eta_g".into(), g.value);
        if let Some(se) = g.std_error {
            metrics.insert("eta_g_se".into(), se);
        }
    }

    if wants(Analysis::Slope) {
        let res = local_max_slope(&floquet, g1, g2, &config.slope.p_grid, config.slope.window)?;
        metrics.insert("slope".into(), res.slope);
        for (p, t, v) in res.maxima {
            metrics.insert(metric("slope_max", p), v);
            metrics.insert(metric("slope_t", p), t as f64);
        }
    }

    if wants(Analysis::Stationary) {
        let settings = config.convergence.settings_for(point.epsilon);
        for &p in &config.p {
            let r = stationary_negativity(&floquet, g1, g2, p, &settings)?;
            metrics.insert(metric("stationary", p), r.value);
            metrics.insert(metric("converged", p), if r.converged { 1.0 } else { 0.0 });
            metrics.insert(metric("t_reached", p), r.t_reached as f64);
            metrics.insert(metric("window_spread", p), r.window_spread);
            if let Some((t, v)) = r.snapshot {
                metrics.insert(metric(&format!("snapshot_t{t}"), p), v);
            }
            if !r.converged {
                status = "not_converged";
            }
        }
    }

    if wants(Analysis::Fidelity) {
        let k_prime = point.k_prime.expect("validated k_prime");
        let (lo, hi) = config.fidelity.recurrence_window;
        let mut curves = Vec::new();
        for &p in &config.p {
            let values = run_fidelity_pair(params, k_prime, g1, g2, p, config.n_steps)?;
            metrics.insert(metric("fidelity_min", p), values.iter().copied().fold(f64::INFINITY, f64::min));
            if let Some((t, v)) = argmax(&values, lo, hi) {
                metrics.insert(metric("recurrence_max", p), v);
                metrics.insert(metric("recurrence_t", p), t as f64);
            }
            curves.push((p, values.clone()));
            series.push(SeriesOut {
                kind: SeriesKind::Fidelity,
                p,
                values,
            });
        }
        let curve = |p: f64| curves.iter().find(|c| c.0 == p).map(|c| &c.1);
        if let (Some(f0), Some(f5)) = (curve(0.0), curve(0.5)) {
            let gap: Vec<f64> = f0.iter().zip(f5).map(|(a, b)| (a - b).abs()).collect();
            let (t, v) = argmax(&gap, 0, config.n_steps).expect("non-empty");
            metrics.insert("divergence_max".into(), v);
            metrics.insert("divergence_t".into(), t as f64);
            let early_hi = config.fidelity.early_t.saturating_sub(1);
            if let Some((_, v)) = argmax(&gap, 0, early_hi) {
                metrics.insert("early_divergence_max".into(), v);
            }
        }
    }

    if let Some((name, _)) = metrics.iter().find(|(_, v)| !v.is_finite()) {
        return Err(CliError::NonFinite(name.clone()));
    }

    Ok(PointResult {
        point,
        params,
        metrics,
        status,
        series,
    })
}

fn power_law_fits(config: &ScenarioConfig, points: &[PointResult]) -> Vec<FitRow> {
    let sweeps_epsilon = config.sweep.iter().any(|s| s.axis == Axis::Epsilon);
    if !sweeps_epsilon || !config.analyses.contains(&Analysis::Stationary) {
        return Vec::new();
    }
    let mut groups: BTreeMap<(usize, u64, u64), Vec<&PointResult>> = BTreeMap::new();
    for r in points {
        let key = (r.point.pair, r.point.k_re.to_bits(), r.point.k_im.to_bits());
        groups.entry(key).or_default().push(r);
    }
    let mut rows = Vec::new();
    for ((pair, k_re, k_im), members) in groups {
        for &p in &config.p {
            let data: Vec<(f64, f64)> = members
                .iter()
                .filter(|r| r.point.epsilon > 0.0 && r.point.epsilon <= config.fit.epsilon_max)
                .filter_map(|r| r.metrics.get(&metric("stationary", p)).map(|v| (r.point.epsilon, *v)))
                .collect();
            let mut row = FitRow {
                pair,
                k_re: f64::from_bits(k_re),
                k_im: f64::from_bits(k_im),
                p,
                n_points: data.len(),
                status: "ok".into(),
                metrics: BTreeMap::new(),
            };
            match fit_power_law(&data) {
                Ok(fit) => {
                    row.metrics.insert("exponent".into(), fit.exponent);
                    row.metrics.insert("prefactor".into(), fit.prefactor);
                    row.metrics.insert("residual".into(), fit.residual);
                }
                Err(e) => row.status = e.to_string(),
            }
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| {
        a.pair
            .cmp(&b.pair)
            .then(a.k_re.total_cmp(&b.k_re))
            .then(a.k_im.total_cmp(&b.k_im))
            .then(a.p.total_cmp(&b.p))
    });
    rows
}

/// Runs every parameter point of the scenario. `jobs = None` uses all cores.
pub fn run_scenario(config: &ScenarioConfig, jobs: Option<usize>) -> Result<ScenarioResult, CliError> {
    config.validate()?;
    let builder = FloquetBuilder::new(config.spin())?;
    let points = config.points();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let mut results = pool.install(|| {
        points
            .par_iter()
            .map(|&pt| run_point(config, &builder, pt))
            .collect::<Result<Vec<_>, _>>()
    })?;
    results.sort_by(|a, b| a.point.cmp_key(&b.point));
    let fits = power_law_fits(config, &results);
    Ok(ScenarioResult { points: results, fits })
}
