//! Chaos diagnostics built on log-negativity trajectories.
//!
//! * `eta_d`: increment-sign concordance of two trajectories, scaled by the
//!   entropy gap of their initial states.
//! * `eta_g`: mean product of raw increments.
//! * stationary log-negativity of the amplified (Im k > 0) dynamics, with the
//!   power-law and slope fits used to summarize it.
//!
//! By convention `E1` is the `p = 0` trajectory and `E2` the `p = 0.5` one.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::dynamics::{Evolution, FloquetOperator, TopParams};
use crate::error::{Error, Result};
use crate::measures::{delta_entropy, log_negativity};
use crate::spin::{coherent_overlap, initial_density, CoherentParam, Spin};

/// Increments with magnitude at or below this count as ties.
pub const SIGN_TOL: f64 = 1e-12;
/// Number of blocks used for the standard error of the correlation sums.
pub const DEFAULT_BLOCKS: usize = 10;

/// Log-negativity at kicks `t = 0..=N` of one trajectory.
#[derive(Clone, Debug)]
pub struct EntanglementSeries {
    values: Vec<f64>,
    pub params: TopParams,
    pub gamma1: CoherentParam,
    pub gamma2: CoherentParam,
    pub p: f64,
}

impl EntanglementSeries {
    pub fn new(
        values: Vec<f64>,
        params: TopParams,
        gamma1: CoherentParam,
        gamma2: CoherentParam,
        p: f64,
    ) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::SeriesTooShort);
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::OutOfRange(*bad));
        }
        Ok(Self { values, params, gamma1, gamma2, p })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }
}

/// Runs the two-top dynamics from `rho_p(0)` and records the log-negativity
/// at every kick. Non-unitary operators are renormalized every step.
pub fn entanglement_series(
    floquet: &FloquetOperator,
    gamma1: CoherentParam,
    gamma2: CoherentParam,
    p: f64,
    n_steps: usize,
) -> Result<EntanglementSeries> {
    let params = *floquet.params();
    let rho = initial_density(params.spin, gamma1, gamma2, p)?;
    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(log_negativity(&rho)?);
    let mut evo = Evolution::new(rho, floquet, !floquet.is_unitary())?;
    for _ in 0..n_steps {
        values.push(log_negativity(evo.advance()?)?);
    }
    EntanglementSeries::new(values, params, gamma1, gamma2, p)
}

/// Three-valued step function with a dead zone of width `tol` around zero.
pub fn sign_step(x: f64, tol: f64) -> i8 {
    if x > tol {
        1
    } else if x < -tol {
        -1
    } else {
        0
    }
}

/// A finite-N estimate and, when at least two blocks exist, the standard
/// error of the mean over contiguous blocks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

fn check_lengths(e1: &[f64], e2: &[f64]) -> Result<usize> {
    if e1.len() != e2.len() {
        return Err(Error::LengthMismatch(e1.len(), e2.len()));
    }
    if e1.len() < 2 {
        return Err(Error::SeriesTooShort);
    }
    Ok(e1.len() - 1)
}

fn block_estimate(terms: &[f64], blocks: usize) -> Estimate {
    let n = terms.len() as f64;
    let value = terms.iter().sum::<f64>() / n;
    let size = terms.len().div_ceil(blocks.max(1));
    let means: Vec<f64> = terms
        .chunks(size)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let std_error = (means.len() >= 2).then(|| {
        let b = means.len() as f64;
        let mean = means.iter().sum::<f64>() / b;
        let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (b - 1.0);
        libm::sqrt(var / b)
    });
    Estimate { value, std_error }
}

fn sign_products(e1: &[f64], e2: &[f64], tol: f64) -> Vec<f64> {
    e1.windows(2)
        .zip(e2.windows(2))
        .map(|(a, b)| f64::from(sign_step(a[1] - a[0], tol) * sign_step(b[1] - b[0], tol)))
        .collect()
}

fn increment_products(e1: &[f64], e2: &[f64]) -> Vec<f64> {
    e1.windows(2)
        .zip(e2.windows(2))
        .map(|(a, b)| (a[1] - a[0]) * (b[1] - b[0]))
        .collect()
}

/// Scaled rank correlation `(|dS|/N) sum_t sgn(dE1(t)) sgn(dE2(t))`.
pub fn eta_d(e1: &[f64], e2: &[f64], delta_s: f64) -> Result<f64> {
    Ok(eta_d_estimate(e1, e2, delta_s, SIGN_TOL, 1)?.value)
}

pub fn eta_d_estimate(e1: &[f64], e2: &[f64], delta_s: f64, tol: f64, blocks: usize) -> Result<Estimate> {
    check_lengths(e1, e2)?;
    let est = block_estimate(&sign_products(e1, e2, tol), blocks);
    let scale = libm::fabs(delta_s);
    Ok(Estimate {
        value: est.value * scale,
        std_error: est.std_error.map(|s| s * scale),
    })
}

/// Cross correlation `(1/N) sum_t dE1(t) dE2(t)`.
pub fn eta_g(e1: &[f64], e2: &[f64]) -> Result<f64> {
    Ok(eta_g_estimate(e1, e2, 1)?.value)
}

pub fn eta_g_estimate(e1: &[f64], e2: &[f64], blocks: usize) -> Result<Estimate> {
    check_lengths(e1, e2)?;
    Ok(block_estimate(&increment_products(e1, e2), blocks))
}

/// How the entropy gap scaling `eta_d` is computed from the initial states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DeltaSConvention {
    /// Closed form evaluated at `|<g1|g2>|^2`; equals the exact entropy gap
    /// between `rho_{p=0.5}(0)` and `rho_{p=0}(0)`.
    Exact,
    /// Closed form evaluated at `|<g1|g2>|^4`.
    SquaredOverlap,
    /// No scaling.
    Unit,
}

impl DeltaSConvention {
    pub const ALL: [DeltaSConvention; 3] = [Self::Exact, Self::SquaredOverlap, Self::Unit];

    pub fn label(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::SquaredOverlap => "squared_overlap",
            Self::Unit => "unit",
        }
    }
}

pub fn pair_delta_s(spin: Spin, gamma1: CoherentParam, gamma2: CoherentParam, convention: DeltaSConvention) -> f64 {
    let x = coherent_overlap(spin, gamma1, gamma2).norm_sqr().min(1.0);
    match convention {
        DeltaSConvention::Exact => delta_entropy(x).unwrap_or(0.0),
        DeltaSConvention::SquaredOverlap => delta_entropy(x * x).unwrap_or(0.0),
        DeltaSConvention::Unit => 1.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationResult {
    pub eta_d: Estimate,
    pub eta_g: Estimate,
    pub delta_s: f64,
    pub n_steps: usize,
}

/// `eta_d` and `eta_g` for the pair (`e1` at p = 0, `e2` at p = 0.5).
pub fn correlate(e1: &EntanglementSeries, e2: &EntanglementSeries, delta_s: f64) -> Result<CorrelationResult> {
    let eta_d = eta_d_estimate(e1.values(), e2.values(), delta_s, SIGN_TOL, DEFAULT_BLOCKS)?;
    let eta_g = eta_g_estimate(e1.values(), e2.values(), DEFAULT_BLOCKS)?;
    Ok(CorrelationResult {
        eta_d,
        eta_g,
        delta_s,
        n_steps: e1.n_steps(),
    })
}

/// Stopping rule for stationary log-negativity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceSettings {
    /// Number of consecutive kicks inspected.
    pub window: usize,
    /// Maximum allowed `max - min` over the window.
    pub tol: f64,
    /// Give up after this many kicks.
    pub t_max: usize,
    /// Also record the value at this kick (the run continues until reached).
    pub snapshot_at: Option<usize>,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        Self {
            window: 200,
            tol: 1e-6,
            t_max: 100_000,
            snapshot_at: Some(1000),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationaryReport {
    /// Window mean at the stopping time.
    pub value: f64,
    pub converged: bool,
    /// Kick at which the window first satisfied the tolerance, or `t_max`.
    pub t_reached: usize,
    pub window_spread: f64,
    pub snapshot: Option<(usize, f64)>,
}

/// Long-time log-negativity of the amplified dynamics from `rho_p(0)`.
///
/// Failure to converge within `t_max` is reported through
/// `StationaryReport::converged`, not as an error.
pub fn stationary_negativity(
    floquet: &FloquetOperator,
    gamma1: CoherentParam,
    gamma2: CoherentParam,
    p: f64,
    settings: &ConvergenceSettings,
) -> Result<StationaryReport> {
    if floquet.is_unitary() {
        return Err(Error::InvalidParams("stationary negativity requires Im k > 0"));
    }
    if settings.window < 2 {
        return Err(Error::EmptyWindow);
    }
    let spin = floquet.params().spin;
    let rho = initial_density(spin, gamma1, gamma2, p)?;
    let mut window: VecDeque<f64> = VecDeque::with_capacity(settings.window);
    window.push_back(log_negativity(&rho)?);
    let mut snapshot = (settings.snapshot_at == Some(0)).then(|| (0, window[0]));
    let mut converged: Option<(usize, f64, f64)> = None;
    let mut evo = Evolution::new(rho, floquet, true)?;

    let stats = |w: &VecDeque<f64>| {
        let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        (hi - lo, w.iter().sum::<f64>() / w.len() as f64)
    };

    let mut t = 0;
    while t < settings.t_max {
        let snapshot_pending = settings.snapshot_at.is_some_and(|s| snapshot.is_none() && s > t);
        if converged.is_some() && !snapshot_pending {
            break;
        }
        t += 1;
        let value = log_negativity(evo.advance()?)?;
        if settings.snapshot_at == Some(t) {
            snapshot = Some((t, value));
        }
        if converged.is_none() {
            if window.len() == settings.window {
                window.pop_front();
            }
            window.push_back(value);
            if window.len() == settings.window {
                let (spread, mean) = stats(&window);
                if spread <= settings.tol {
                    converged = Some((t, mean, spread));
                }
            }
        }
    }

    Ok(match converged {
        Some((t_reached, value, window_spread)) => StationaryReport {
            value,
            converged: true,
            t_reached,
            window_spread,
            snapshot,
        },
        None => {
            let (window_spread, value) = stats(&window);
            StationaryReport {
                value,
                converged: false,
                t_reached: t,
                window_spread,
                snapshot,
            }
        }
    })
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: xs.len() });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::OutOfRange(mx));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Fits `value = prefactor * epsilon^exponent` in log-log space.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: points.len() });
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::NonPositiveData);
    }
    let xs: Vec<f64> = points.iter().map(|p| libm::log(p.0)).collect();
    let ys: Vec<f64> = points.iter().map(|p| libm::log(p.1)).collect();
    let (exponent, intercept) = linear_fit(&xs, &ys)?;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (exponent * x + intercept);
            r * r
        })
        .sum();
    Ok(PowerLawFit {
        exponent,
        prefactor: libm::exp(intercept),
        residual: libm::sqrt(ss / xs.len() as f64),
    })
}

/// Largest value and its kick inside `[lo, hi]` (inclusive).
pub fn window_max(values: &[f64], window: (usize, usize)) -> Result<(usize, f64)> {
    let (lo, hi) = window;
    if lo > hi || lo >= values.len() {
        return Err(Error::EmptyWindow);
    }
    let hi = hi.min(values.len() - 1);
    let mut best = (lo, values[lo]);
    for (t, &v) in values.iter().enumerate().take(hi + 1).skip(lo + 1) {
        if v > best.1 {
            best = (t, v);
        }
    }
    Ok(best)
}

/// Negated slope of a linear fit of window maxima against `p`.
pub fn decline_slope(maxima: &[(f64, f64)]) -> Result<f64> {
    let xs: Vec<f64> = maxima.iter().map(|m| m.0).collect();
    let ys: Vec<f64> = maxima.iter().map(|m| m.1).collect();
    Ok(-linear_fit(&xs, &ys)?.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalMaxSlope {
    /// Decline rate of the window maximum with `p`.
    pub slope: f64,
    /// `(p, t_at_max, max)` per grid point.
    pub maxima: Vec<(f64, usize, f64)>,
}

/// How fast the early local maximum of log-negativity drops with the initial
/// mixing `p`, for unitary dynamics.
pub fn local_max_slope(
    floquet: &FloquetOperator,
    gamma1: CoherentParam,
    gamma2: CoherentParam,
    p_grid: &[f64],
    window: (usize, usize),
) -> Result<LocalMaxSlope> {
    if !floquet.is_unitary() {
        return Err(Error::NotUnitary {
            k_im: floquet.params().k_im,
        });
    }
    if window.0 > window.1 {
        return Err(Error::EmptyWindow);
    }
    if let Some(&bad) = p_grid.iter().find(|p| !(0.0..=0.5).contains(*p)) {
        return Err(Error::InvalidProbability(bad));
    }
    let mut maxima = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let series = entanglement_series(floquet, gamma1, gamma2, p, window.1)?;
        let (t, v) = window_max(series.values(), window)?;
        maxima.push((p, t, v));
    }
    let points: Vec<(f64, f64)> = maxima.iter().map(|m| (m.0, m.2)).collect();
    Ok(LocalMaxSlope {
        slope: decline_slope(&points)?,
        maxima,
    })
}
