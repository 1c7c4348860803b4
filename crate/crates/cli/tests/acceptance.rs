//! One PASS/FAIL line per acceptance criterion. Exits non-zero on any failure.

use std::process::ExitCode;
use std::time::Instant;

use qutop::run_fidelity_pair;
use qutop_core::chaos::{
    entanglement_series, eta_d, fit_power_law, local_max_slope, pair_delta_s, stationary_negativity,
    ConvergenceSettings, DeltaSConvention,
};
use qutop_core::dynamics::{
    build_floquet, collective_jz_squared, evolve, parity_decompose, FloquetBuilder, FloquetOperator, TopParams,
};
use qutop_core::measures::log_negativity;
use qutop_core::numerics::{
    exp_i_hermitian, hermitian_eig, inner, kron, ComplexMatrix, DEFAULT_TOL,
};
use qutop_core::spin::{initial_density, product_state, CoherentParam, Spin};
use qutop_core::state::{Bipartition, DensityMatrix};
use qutop_core::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const J1: Spin = Spin::ONE;
const KS: [f64; 3] = [0.25, 3.0, 6.0];
const EPS: f64 = 0.05;
const N_ETA: usize = 10_000;

type Outcome = Result<(bool, String), String>;

struct Report {
    failed: usize,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, outcome: Outcome, notes: &[String]) {
        let (pass, detail) = match outcome {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            self.failed += 1;
        }
        println!("{} [{id:>2}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        for n in notes {
            println!("          {n}");
        }
    }
}

fn g(x: f64) -> CoherentParam {
    CoherentParam::real(x)
}

fn chaotic(theta: f64) -> CoherentParam {
    CoherentParam::from_gamma(Complex64::from_polar((theta / 2.0).tan(), 0.63))
}

fn neg(c: CoherentParam) -> CoherentParam {
    match c {
        CoherentParam::Finite(z) => CoherentParam::Finite(-z),
        other => other,
    }
}

fn unitary(k: f64, eps: f64) -> FloquetOperator {
    build_floquet(TopParams::hermitian(J1, k, eps).unwrap()).unwrap()
}

fn amplified(k_re: f64, k_im: f64, eps: f64) -> FloquetOperator {
    build_floquet(TopParams::new(J1, k_re, k_im, eps).unwrap()).unwrap()
}

/// `eta_d` between the p = 0 and p = 0.5 trajectories.
fn eta_pair(k: f64, g1: CoherentParam, g2: CoherentParam, conv: DeltaSConvention) -> Result<f64, String> {
    let f = unitary(k, EPS);
    let e1 = entanglement_series(&f, g1, g2, 0.0, N_ETA).map_err(|e| e.to_string())?;
    let e2 = entanglement_series(&f, g1, g2, 0.5, N_ETA).map_err(|e| e.to_string())?;
    eta_d(e1.values(), e2.values(), pair_delta_s(J1, g1, g2, conv)).map_err(|e| e.to_string())
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn c1() -> Outcome {
    let v: Vec<f64> = KS
        .iter()
        .map(|&k| eta_pair(k, g(-3.0), g(3.0), DeltaSConvention::Exact))
        .collect::<Result<_, _>>()?;
    Ok((
        v[0] < v[2] && v[2] < v[1],
        format!("eta_d(0.25)={:.4} < eta_d(6)={:.4} < eta_d(3)={:.4}", v[0], v[2], v[1]),
    ))
}

fn c2() -> Outcome {
    let target = [0.314, 0.448, 0.410];
    let v: Vec<f64> = KS
        .iter()
        .map(|&k| eta_pair(k, g(1.0), g(-1.0), DeltaSConvention::Exact))
        .collect::<Result<_, _>>()?;
    let close = v.iter().zip(target).all(|(a, b)| within(*a, b, 0.05));
    let ordered = v[0] < v[2] && v[2] < v[1];
    Ok((
        close && ordered,
        format!(
            "k=0.25: {:.4} (0.314), k=3: {:.4} (0.448), k=6: {:.4} (0.410), tol 0.05, ordered={ordered}",
            v[0], v[1], v[2]
        ),
    ))
}

fn c3() -> Outcome {
    let states = [g(1.0), chaotic(2.25), g(3.0), chaotic(0.89)];
    let target = [0.448, 0.468, 0.605, 0.504];
    let v: Vec<f64> = states
        .iter()
        .map(|&s| eta_pair(3.0, s, neg(s), DeltaSConvention::Exact))
        .collect::<Result<_, _>>()?;
    let close = v.iter().zip(target).all(|(a, b)| within(*a, b, 0.05));
    let chaotic_larger = v[2].min(v[3]) > v[0].max(v[1]);
    Ok((
        close && chaotic_larger,
        format!(
            "{:.4} {:.4} {:.4} {:.4} vs 0.448 0.468 0.605 0.504 (tol 0.05); chaotic > fixed: {chaotic_larger}",
            v[0], v[1], v[2], v[3]
        ),
    ))
}

fn stationary(k_re: f64, k_im: f64, eps: f64, p: f64, settings: &ConvergenceSettings) -> Result<(f64, bool, usize), String> {
    let r = stationary_negativity(&amplified(k_re, k_im, eps), g(-3.0), g(3.0), p, settings).map_err(|e| e.to_string())?;
    Ok((r.value, r.converged, r.t_reached))
}

fn c4() -> Outcome {
    let settings = ConvergenceSettings {
        snapshot_at: None,
        ..ConvergenceSettings::default()
    };
    let (v9, ok9, _) = stationary(9.0, 0.01, EPS, 0.0, &settings)?;
    let grid = [0.9, 1.0, 1.1, 1.2];
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut all_converged = ok9;
    for eps in grid {
        let (v, ok, _) = stationary(3.0, 0.01, eps, 0.0, &settings)?;
        all_converged &= ok;
        if v > best.0 {
            best = (v, eps);
        }
    }
    let pass_a = within(v9, 0.14, 0.03);
    let pass_b = within(best.0, 1.55, 0.10) && best.0 < 3f64.log2();
    Ok((
        pass_a && pass_b && all_converged,
        format!(
            "Re k=9: {v9:.4} (0.14 +- 0.03); max over eps {grid:?} at Re k=3: {:.4} at eps={} (1.55 +- 0.10, < log2 3); converged={all_converged}",
            best.0, best.1
        ),
    ))
}

fn c5() -> Outcome {
    let settings = ConvergenceSettings {
        snapshot_at: None,
        ..ConvergenceSettings::default()
    };
    let eps: Vec<f64> = (1..=10).map(|i| i as f64 / 100.0).collect();
    let mut small = Vec::new();
    let mut large = Vec::new();
    for &e in &eps {
        small.push((e, stationary(3.0, 0.01, e, 0.0, &settings)?.0));
        large.push((e, stationary(3.0, 3.0, e, 0.0, &settings)?.0));
    }
    let fit = fit_power_law(&small).map_err(|e| e.to_string())?;
    let worst = small
        .iter()
        .zip(&large)
        .map(|(a, b)| (a.1 - b.1).abs() / a.1)
        .fold(0.0f64, f64::max);
    Ok((
        within(fit.exponent, 0.97, 0.05) && worst < 0.05,
        format!(
            "exponent {:.4} (0.97 +- 0.05), residual {:.2e}; max relative gap Im k=3 vs 0.01: {:.4} (< 0.05)",
            fit.exponent, fit.residual, worst
        ),
    ))
}

fn c6() -> Outcome {
    let settings = ConvergenceSettings {
        snapshot_at: None,
        ..ConvergenceSettings::default()
    };
    let (a, ok_a, ta) = stationary(3.0, 0.01, EPS, 0.0, &settings)?;
    let (b, ok_b, tb) = stationary(3.0, 0.01, EPS, 0.5, &settings)?;
    let gap = (a - b).abs();
    Ok((
        ok_a && ok_b && gap < 1e-6,
        format!("N(p=0)={a:.10} (t={ta}), N(p=0.5)={b:.10} (t={tb}), gap {gap:.2e} (< 1e-6)"),
    ))
}

fn c7() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for k in KS {
        let f = unitary(k, EPS);
        let e0 = entanglement_series(&f, g(-3.0), g(3.0), 0.0, 1000).map_err(|e| e.to_string())?;
        let e5 = entanglement_series(&f, g(-3.0), g(3.0), 0.5, 1000).map_err(|e| e.to_string())?;
        for (a, b) in e0.values().iter().zip(e5.values()) {
            worst = worst.max(b - a);
        }
    }
    Ok((worst <= 1e-9, format!("max_t (E_0.5 - E_0) = {worst:.3e} (<= 1e-9) over t <= 1000, k in {KS:?}")))
}

fn c8() -> Outcome {
    let obs = collective_jz_squared(J1);
    let mut worst = 0.0f64;
    for k in KS {
        let f = unitary(k, EPS);
        let traj = |p: f64| -> Result<Vec<f64>, String> {
            let rho = initial_density(J1, g(-3.0), g(3.0), p).map_err(|e| e.to_string())?;
            Ok(evolve(rho, &f, 1000, false)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|r| r.expectation(&obs).re)
                .collect())
        };
        let (a, b) = (traj(0.0)?, traj(0.5)?);
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok((worst <= 1e-10, format!("max |<Jz1^2+Jz2^2>_0 - <..>_0.5| = {worst:.3e} (<= 1e-10) over 1000 kicks")))
}

fn c9() -> Outcome {
    let mut counts_ok = true;
    let mut worst = 0.0f64;
    let pairs = [(g(-3.0), g(3.0)), (chaotic(0.89), chaotic(2.25)), (g(1.0), g(0.2))];
    for k in KS {
        let f = unitary(k, EPS);
        for &(g1, g2) in &pairs {
            let dec = parity_decompose(&f, &product_state(J1, g1, g2)).map_err(|e| e.to_string())?;
            counts_ok &= dec.even.states.len() == 6 && dec.odd.states.len() == 3;
            let plus = product_state(J1, g1, g2);
            let minus = product_state(J1, g2, g1);
            for e in &dec.even.states {
                worst = worst.max((inner(e, &plus) - inner(e, &minus)).norm());
            }
            for o in &dec.odd.states {
                worst = worst.max((inner(o, &plus) + inner(o, &minus)).norm());
            }
        }
    }
    Ok((
        counts_ok && worst <= 1e-10,
        format!("6 even / 3 odd: {counts_ok}; max |a+ - a-|, |b+ + b-| = {worst:.2e} (<= 1e-10)"),
    ))
}

fn c10() -> Outcome {
    let mut worst = [0.0f64; 2];
    for k in KS {
        let f = unitary(k, EPS);
        let dec = parity_decompose(&f, &product_state(J1, g(-3.0), g(3.0))).map_err(|e| e.to_string())?;
        for p in [0.0, 0.5] {
            let rho = initial_density(J1, g(-3.0), g(3.0), p).map_err(|e| e.to_string())?;
            let states = evolve(rho, &f, 1000, false).map_err(|e| e.to_string())?;
            for (i, n) in [50usize, 1000].into_iter().enumerate() {
                let d = dec.density_at(n as u64, p).max_abs_diff(states[n].matrix());
                worst[i] = worst[i].max(d);
            }
        }
    }
    Ok((
        worst[0] <= 1e-9 && worst[1] <= 1e-9,
        format!("max entry gap t=50: {:.2e}, t=1000: {:.2e} (<= 1e-9)", worst[0], worst[1]),
    ))
}

fn c11() -> Outcome {
    let p_grid: Vec<f64> = (0..6).map(|i| i as f64 / 10.0).collect();
    let mut slopes = Vec::new();
    for k in KS {
        let r = local_max_slope(&unitary(k, EPS), g(-3.0), g(3.0), &p_grid, (50, 90)).map_err(|e| e.to_string())?;
        slopes.push(r.slope);
    }
    Ok((
        slopes.iter().all(|s| within(*s, 0.9, 0.15)),
        format!(
            "window (50, 90): k=0.25: {:.4}, k=3: {:.4}, k=6: {:.4} (0.9 +- 0.15)",
            slopes[0], slopes[1], slopes[2]
        ),
    ))
}

fn first_index(values: &[f64], from: usize, pred: impl Fn(f64) -> bool) -> Option<usize> {
    values.iter().enumerate().skip(from).find(|(_, v)| pred(**v)).map(|(t, _)| t)
}

fn c12(notes: &mut Vec<String>) -> Outcome {
    let err = |e: qutop::CliError| e.to_string();
    let base = |eps: f64| TopParams::hermitian(J1, 0.25, eps).unwrap();

    let mut same_dev = 0.0f64;
    for eps in [0.0, 0.05, 0.5] {
        for p in [0.0, 0.2, 0.5] {
            let f = run_fidelity_pair(base(eps), 0.25, g(-3.0), g(3.0), p, 2000).map_err(err)?;
            same_dev = same_dev.max(f.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));
        }
    }
    let pass_a = same_dev <= 1e-10;

    let horizon = 6000;
    let mut rec = Vec::new();
    for p in [0.0, 0.5] {
        let f = run_fidelity_pair(base(0.0), 0.26, g(-3.0), g(3.0), p, horizon).map_err(err)?;
        let (t_max, max) = (100..=2000).map(|t| (t, f[t])).fold((0, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
        rec.push((p, max, t_max, first_index(&f, 100, |v| v >= 0.99)));
    }
    let pass_b = rec.iter().all(|r| r.1 >= 0.99);

    let f0 = run_fidelity_pair(base(0.5), 0.26, g(-3.0), g(3.0), 0.0, horizon).map_err(err)?;
    let f5 = run_fidelity_pair(base(0.5), 0.26, g(-3.0), g(3.0), 0.5, horizon).map_err(err)?;
    let gap: Vec<f64> = f0.iter().zip(&f5).map(|(a, b)| (a - b).abs()).collect();
    let early = gap[..10].iter().copied().fold(0.0, f64::max);
    let late = gap[..2000].iter().copied().fold(0.0, f64::max);
    let pass_c = early < 0.01 && late > 0.05;

    for (p, max, t, first) in &rec {
        notes.push(format!(
            "eps=0, p={p}: max F on [100, 2000] = {max:.4} at t={t}; first t >= 100 with F >= 0.99: {}",
            first.map_or(format!("none before {horizon}"), |t| t.to_string())
        ));
    }
    notes.push(format!(
        "eps=0.5: first t with |F_0 - F_0.5| > 0.05: {}; first t with gap > 0.01: {}",
        first_index(&gap, 0, |v| v > 0.05).map_or(format!("none before {horizon}"), |t| t.to_string()),
        first_index(&gap, 0, |v| v > 0.01).map_or(format!("none before {horizon}"), |t| t.to_string())
    ));
    Ok((
        pass_a && pass_b && pass_c,
        format!(
            "k=k': max |F-1| = {same_dev:.1e} [{}]; recurrence (eps=0) max F = {:.4}/{:.4} for p=0/0.5 [{}]; \
             eps=0.5 gap t<10: {early:.1e}, max gap t<2000: {late:.4} [{}]",
            verdict(pass_a),
            rec[0].1,
            rec[1].1,
            verdict(pass_b),
            verdict(pass_c)
        ),
    ))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "fail"
    }
}

fn random_hermitian(rng: &mut StdRng, dim: usize, scale: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for r in 0..dim {
        m[(r, r)] = Complex64::new(rng.random_range(-scale..scale), 0.0);
        for c in r + 1..dim {
            let z = Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
            m[(r, c)] = z;
            m[(c, r)] = z.conj();
        }
    }
    m
}

fn random_pure(rng: &mut StdRng, dim: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn c13() -> Outcome {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let e = |e: qutop_core::Error| e.to_string();
    let builder = FloquetBuilder::new(J1).map_err(e)?;

    let mut unit_dev = 0.0f64;
    for _ in 0..500 {
        let params = TopParams::hermitian(J1, rng.random_range(-10.0..10.0), rng.random_range(-2.0..2.0)).map_err(e)?;
        unit_dev = unit_dev.max(builder.build(params).map_err(e)?.matrix().unitarity_deviation());
    }

    let mut recon = 0.0f64;
    for _ in 0..200 {
        let m = random_hermitian(&mut rng, 9, 5.0);
        let eig = hermitian_eig(&m, DEFAULT_TOL).map_err(|x| x.to_string())?;
        recon = recon.max(eig.reconstruct().max_abs_diff(&m) / m.max_abs());
    }

    let (mut trace_dev, mut min_eig) = (0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let k_im = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.01..3.0) };
        let params = TopParams::new(J1, rng.random_range(0.0..10.0), k_im, rng.random_range(0.0..1.5)).map_err(e)?;
        let f = builder.build(params).map_err(e)?;
        let gam = |rng: &mut StdRng| CoherentParam::from_gamma(Complex64::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)));
        let rho = initial_density(J1, gam(&mut rng), gam(&mut rng), rng.random_range(0.0..1.0)).map_err(e)?;
        for s in evolve(rho, &f, 200, k_im > 0.0).map_err(e)?.iter().step_by(20) {
            trace_dev = trace_dev.max((s.matrix().trace().re - 1.0).abs());
            let eig = hermitian_eig(s.matrix(), DEFAULT_TOL).map_err(|x| x.to_string())?;
            min_eig = min_eig.min(eig.values[0]);
        }
    }

    let mut lu_dev = 0.0f64;
    let parts = Bipartition::symmetric(3);
    for _ in 0..100 {
        let psi: Vec<Complex64> = random_pure(&mut rng, 9);
        let phi: Vec<Complex64> = random_pure(&mut rng, 9);
        let w = rng.random_range(0.0..1.0);
        let rho = &ComplexMatrix::outer(&psi, &psi).scale(Complex64::new(w, 0.0))
            + &ComplexMatrix::outer(&phi, &phi).scale(Complex64::new(1.0 - w, 0.0));
        let rho = DensityMatrix::new(rho.hermitian_part(), parts).map_err(e)?;
        let ua = exp_i_hermitian(&random_hermitian(&mut rng, 3, 2.0), 1.0).map_err(|x| x.to_string())?;
        let ub = exp_i_hermitian(&random_hermitian(&mut rng, 3, 2.0), 1.0).map_err(|x| x.to_string())?;
        let moved = DensityMatrix::new(rho.matrix().conjugate_by(&kron(&ua, &ub)).hermitian_part(), parts).map_err(e)?;
        lu_dev = lu_dev.max((log_negativity(&rho).map_err(e)? - log_negativity(&moved).map_err(e)?).abs());
    }

    let mut ppt = 0.0f64;
    for _ in 0..50 {
        let mut rho = ComplexMatrix::zeros(9);
        let weights: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in weights {
            let a = random_pure(&mut rng, 3);
            let b = random_pure(&mut rng, 3);
            let prod = kron(&ComplexMatrix::outer(&a, &a), &ComplexMatrix::outer(&b, &b));
            rho = &rho + &prod.scale(Complex64::new(w / total, 0.0));
        }
        let rho = DensityMatrix::new(rho.hermitian_part(), parts).map_err(e)?;
        ppt = ppt.max(log_negativity(&rho).map_err(e)?);
    }

    let secs = started.elapsed().as_secs_f64();
    let pass = unit_dev <= 1e-12
        && recon <= 1e-10
        && trace_dev <= 1e-12
        && min_eig >= -1e-10
        && lu_dev <= 1e-10
        && ppt <= 1e-10
        && secs < 60.0;
    Ok((
        pass,
        format!(
            "unitarity {unit_dev:.1e}, eig reconstruction {recon:.1e}, trace {trace_dev:.1e}, min eigenvalue {min_eig:.1e}, \
             LU invariance {lu_dev:.1e}, separable negativity {ppt:.1e}; {secs:.1}s (< 60s)"
        ),
    ))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut report = Report { failed: 0 };
    report.record(1, "eta_d ordering, gamma = -3, 3", c1(), &[]);
    report.record(2, "eta_d values, gamma = 1, -1", c2(), &[]);
    report.record(3, "eta_d for four initial states at k=3", c3(), &[]);
    report.record(4, "stationary negativity anchors", c4(), &[]);
    report.record(5, "power law in epsilon", c5(), &[]);
    report.record(6, "stationary value is p-independent", c6(), &[]);
    report.record(7, "mixed state bounds pure state from below", c7(), &[]);
    report.record(8, "symmetric observable ignores p", c8(), &[]);
    report.record(9, "parity counts and coefficient signs", c9(), &[]);
    report.record(10, "spectral propagation matches stepping", c10(), &[]);
    report.record(11, "local maximum declines with p", c11(), &[]);
    let mut notes = Vec::new();
    let r12 = c12(&mut notes);
    report.record(12, "fidelity suite", r12, &notes);
    report.record(13, "kernel property suite", c13(), &[]);
    println!(
        "acceptance: {} of 13 criteria passed in {:.1}s",
        13 - report.failed,
        started.elapsed().as_secs_f64()
    );
    if report.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
