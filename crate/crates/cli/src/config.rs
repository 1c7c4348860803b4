use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qutop_core::chaos::ConvergenceSettings;
use qutop_core::dynamics::TopParams;
use qutop_core::spin::{CoherentParam, Spin};
use qutop_core::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Custom,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 9] = [
        Self::Fig1,
        Self::Fig2,
        Self::Fig3,
        Self::Fig4,
        Self::Fig5,
        Self::Fig6,
        Self::Fig7,
        Self::Fig8,
        Self::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
            Self::Fig7 => "fig7",
            Self::Fig8 => "fig8",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown scenario `{s}`")))
    }
}

/// A coherent-state label, either `{re, im}` or `{theta, phi}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Gamma {
    Cartesian {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Angles { theta: f64, phi: f64 },
}

impl Gamma {
    pub fn real(re: f64) -> Self {
        Gamma::Cartesian { re, im: 0.0 }
    }

    pub fn param(self) -> CoherentParam {
        match self {
            Gamma::Cartesian { re, im } => CoherentParam::from_gamma(Complex64::new(re, im)),
            Gamma::Angles { theta, phi } => CoherentParam::from_angles(theta, phi),
        }
    }

    fn is_finite(self) -> bool {
        match self {
            Gamma::Cartesian { re, im } => re.is_finite() && im.is_finite(),
            Gamma::Angles { theta, phi } => theta.is_finite() && phi.is_finite(),
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Cartesian { re, im } => write!(f, "{re}{im:+}i"),
            Gamma::Angles { theta, phi } => write!(f, "theta={theta} phi={phi}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaPair {
    pub gamma1: Gamma,
    pub gamma2: Gamma,
}

impl GammaPair {
    pub fn new(gamma1: Gamma, gamma2: Gamma) -> Self {
        Self { gamma1, gamma2 }
    }

    /// `gamma2 = -gamma1`.
    pub fn antipodal(gamma1: Gamma) -> Self {
        let gamma2 = match gamma1 {
            Gamma::Cartesian { re, im } => Gamma::Cartesian { re: -re, im: -im },
            Gamma::Angles { theta, phi } => Gamma::Angles {
                theta,
                phi: phi + std::f64::consts::PI,
            },
        };
        Self { gamma1, gamma2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    KRe,
    KIm,
    KPrime,
    Epsilon,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::KRe => "k_re",
            Axis::KIm => "k_im",
            Axis::KPrime => "k_prime",
            Axis::Epsilon => "epsilon",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    pub grid: Vec<f64>,
}

impl Sweep {
    pub fn new(axis: Axis, grid: Vec<f64>) -> Self {
        Self { axis, grid }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    /// Log-negativity series per `p`.
    Series,
    /// `eta_d` and `eta_g` between the `p = 0` and `p = 0.5` series.
    Correlation,
    /// Decline of the windowed maximum with `p`.
    Slope,
    /// Long-time value of the amplified dynamics per `p`.
    Stationary,
    /// Fidelity between the `k` and `k_prime` trajectories per `p`.
    Fidelity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeConfig {
    pub p_grid: Vec<f64>,
    pub window: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Convergence {
    pub window: usize,
    pub tol: f64,
    pub t_max: usize,
    /// Budget used instead of `t_max` when `epsilon > strong_epsilon`.
    pub t_max_strong: usize,
    pub strong_epsilon: f64,
    pub snapshot_at: Option<usize>,
}

impl Default for Convergence {
    fn default() -> Self {
        let base = ConvergenceSettings::default();
        Self {
            window: base.window,
            tol: base.tol,
            t_max: base.t_max,
            t_max_strong: 400_000,
            strong_epsilon: 1.0,
            snapshot_at: base.snapshot_at,
        }
    }
}

impl Convergence {
    pub fn settings_for(&self, epsilon: f64) -> ConvergenceSettings {
        ConvergenceSettings {
            window: self.window,
            tol: self.tol,
            t_max: if epsilon > self.strong_epsilon {
                self.t_max_strong.max(self.t_max)
            } else {
                self.t_max
            },
            snapshot_at: self.snapshot_at,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Power-law fit of the stationary value over `epsilon <= epsilon_max`.
    pub epsilon_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityConfig {
    pub recurrence_window: (usize, usize),
    pub early_t: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub j: f64,
    pub k_re: f64,
    pub k_im: f64,
    pub k_prime: Option<f64>,
    pub epsilon: f64,
    pub gamma_pairs: Vec<GammaPair>,
    pub p: Vec<f64>,
    pub n_steps: usize,
    pub sweep: Vec<Sweep>,
    pub analyses: Vec<Analysis>,
    pub slope: SlopeConfig,
    pub convergence: Convergence,
    pub fit: FitConfig,
    pub fidelity: FidelityConfig,
    pub sign_tol: f64,
    pub blocks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn grid(lo: f64, step: f64, n: usize) -> Vec<f64> {
    // Round to 12 digits so that grid points print as typed.
    (0..n).map(|i| ((lo + step * i as f64) * 1e12).round() / 1e12).collect()
}

impl ScenarioConfig {
    fn base(scenario: ScenarioId) -> Self {
        Self {
            scenario,
            j: 1.0,
            k_re: 3.0,
            k_im: 0.0,
            k_prime: None,
            epsilon: 0.05,
            gamma_pairs: vec![GammaPair::new(Gamma::real(-3.0), Gamma::real(3.0))],
            p: vec![0.0, 0.5],
            n_steps: 1000,
            sweep: Vec::new(),
            analyses: vec![Analysis::Series],
            slope: SlopeConfig {
                p_grid: grid(0.0, 0.1, 6),
                window: (50, 90),
            },
            convergence: Convergence::default(),
            fit: FitConfig { epsilon_max: 0.1 },
            fidelity: FidelityConfig {
                recurrence_window: (100, 2000),
                early_t: 10,
            },
            sign_tol: qutop_core::chaos::SIGN_TOL,
            blocks: qutop_core::chaos::DEFAULT_BLOCKS,
            out: None,
        }
    }

    /// Parameter set of each scenario before any user overrides.
    pub fn preset(scenario: ScenarioId) -> Self {
        let mut c = Self::base(scenario);
        let three_k = Sweep::new(Axis::KRe, vec![0.25, 3.0, 6.0]);
        match scenario {
            ScenarioId::Fig1 => {
                c.sweep = vec![three_k];
            }
            ScenarioId::Fig2 => {
                c.sweep = vec![three_k];
                c.n_steps = 10_000;
                c.analyses = vec![Analysis::Series, Analysis::Correlation, Analysis::Slope];
                let chaotic = |theta: f64| Gamma::Angles { theta, phi: 0.63 };
                c.gamma_pairs = vec![
                    GammaPair::new(Gamma::real(-3.0), Gamma::real(3.0)),
                    GammaPair::antipodal(Gamma::real(1.0)),
                    GammaPair::antipodal(chaotic(2.25)),
                    GammaPair::antipodal(Gamma::real(3.0)),
                    GammaPair::antipodal(chaotic(0.89)),
                ];
            }
            ScenarioId::Fig3 => {
                c.sweep = vec![Sweep::new(Axis::KRe, grid(0.1, 0.1, 100))];
                c.n_steps = 10_000;
                c.analyses = vec![Analysis::Correlation];
            }
            ScenarioId::Fig4 => {
                c.sweep = vec![Sweep::new(Axis::KRe, vec![0.25, 3.0, 6.0])];
                c.k_im = 0.01;
                c.p = vec![0.0];
                c.n_steps = 1000;
            }
            ScenarioId::Fig5 => {
                c.sweep = vec![Sweep::new(Axis::KRe, grid(0.0, 0.25, 41))];
                c.k_im = 0.01;
                c.p = vec![0.0];
                c.analyses = vec![Analysis::Stationary];
                let chaotic = Gamma::Angles { theta: 0.89, phi: 0.63 };
                c.gamma_pairs = vec![
                    GammaPair::new(chaotic, chaotic),
                    GammaPair::new(Gamma::real(-3.0), Gamma::real(3.0)),
                ];
            }
            ScenarioId::Fig6 => {
                let mut eps = grid(0.01, 0.01, 10);
                eps.extend(grid(0.2, 0.1, 19));
                c.sweep = vec![
                    Sweep::new(Axis::KRe, vec![3.0, 0.25]),
                    Sweep::new(Axis::KIm, vec![0.01, 3.0]),
                    Sweep::new(Axis::Epsilon, eps),
                ];
                c.p = vec![0.0, 0.5];
                c.analyses = vec![Analysis::Stationary];
                c.convergence.snapshot_at = None;
            }
            ScenarioId::Fig7 => {
                c.k_re = 0.25;
                c.k_prime = Some(0.26);
                c.sweep = vec![Sweep::new(Axis::Epsilon, vec![0.02, 0.05])];
                c.p = vec![0.0, 0.2, 0.5];
                c.n_steps = 2000;
                c.analyses = vec![Analysis::Fidelity];
            }
            ScenarioId::Fig8 => {
                c.k_re = 0.25;
                c.k_prime = Some(0.26);
                c.sweep = vec![Sweep::new(Axis::Epsilon, vec![0.0, 0.5])];
                c.p = vec![0.0, 0.5];
                c.n_steps = 2000;
                c.analyses = vec![Analysis::Fidelity];
            }
            ScenarioId::Custom => {}
        }
        c
    }

    pub fn spin(&self) -> Spin {
        Spin::new(self.j).expect("validated spin")
    }

    /// Settings for one point after sweep substitution.
    pub fn top_params(&self, point: &Point) -> Result<TopParams, CliError> {
        TopParams::new(Spin::new(self.j).map_err(CliError::from_config)?, point.k_re, point.k_im, point.epsilon).map_err(CliError::from_config)
    }

    /// Cartesian product of gamma pairs and sweep axes, in declaration order.
    pub fn points(&self) -> Vec<Point> {
        let base = Point {
            pair: 0,
            k_re: self.k_re,
            k_im: self.k_im,
            k_prime: self.k_prime,
            epsilon: self.epsilon,
        };
        let mut points: Vec<Point> = (0..self.gamma_pairs.len()).map(|pair| Point { pair, ..base }).collect();
        for sweep in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|pt| sweep.grid.iter().map(move |&v| pt.with(sweep.axis, v)))
                .collect();
        }
        points
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let spin = Spin::new(self.j).map_err(CliError::from_config)?;
        if self.gamma_pairs.is_empty() {
            return bad("gamma_pairs must not be empty".into());
        }
        if self.gamma_pairs.iter().any(|g| !g.gamma1.is_finite() || !g.gamma2.is_finite()) {
            return bad("gamma values must be finite".into());
        }
        if self.p.is_empty() {
            return bad("p list must not be empty".into());
        }
        if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return bad(format!("p = {p} outside [0, 1]"));
        }
        if self.n_steps < 1 {
            return bad("n_steps must be at least 1".into());
        }
        if self.analyses.is_empty() {
            return bad("analyses must not be empty".into());
        }
        for s in &self.sweep {
            if s.grid.is_empty() {
                return bad(format!("sweep grid for {} is empty", s.axis.name()));
            }
            if s.grid.iter().any(|v| !v.is_finite()) {
                return bad(format!("sweep grid for {} has non-finite values", s.axis.name()));
            }
        }
        let mut axes: Vec<Axis> = self.sweep.iter().map(|s| s.axis).collect();
        axes.sort();
        if axes.windows(2).any(|w| w[0] == w[1]) {
            return bad("each sweep axis may appear once".into());
        }
        if !(self.sign_tol >= 0.0) {
            return bad("sign_tol must be non-negative".into());
        }
        if self.blocks < 1 {
            return bad("blocks must be at least 1".into());
        }
        for pt in self.points() {
            TopParams::new(spin, pt.k_re, pt.k_im, pt.epsilon).map_err(CliError::from_config)?;
            let unitary = pt.k_im == 0.0;
            for a in &self.analyses {
                match a {
                    Analysis::Correlation | Analysis::Slope if !unitary => {
                        return bad(format!("{a:?} analysis needs k_im = 0 (got {})", pt.k_im));
                    }
                    Analysis::Stationary if unitary => {
                        return bad("stationary analysis needs k_im > 0".into());
                    }
                    Analysis::Fidelity => {
                        let Some(kp) = pt.k_prime else {
                            return bad("fidelity analysis needs k_prime".into());
                        };
                        if !unitary || !kp.is_finite() {
                            return bad("fidelity analysis needs k_im = 0 and finite k_prime".into());
                        }
                    }
                    _ => {}
                }
            }
        }
        if self.analyses.contains(&Analysis::Correlation) && !(self.has_p(0.0) && self.has_p(0.5)) {
            return bad("correlation analysis pairs p = 0 with p = 0.5; both must be in the p list".into());
        }
        if self.analyses.contains(&Analysis::Slope) {
            let (lo, hi) = self.slope.window;
            if lo > hi {
                return bad("slope window is empty".into());
            }
            if self.slope.p_grid.len() < 2 || self.slope.p_grid.iter().any(|p| !(0.0..=0.5).contains(p)) {
                return bad("slope p_grid needs at least two values in [0, 0.5]".into());
            }
        }
        if self.analyses.contains(&Analysis::Stationary) {
            let c = &self.convergence;
            if c.window < 2 || !(c.tol >= 0.0) || c.t_max < 1 {
                return bad("convergence needs window >= 2, tol >= 0 and t_max >= 1".into());
            }
        }
        if self.analyses.contains(&Analysis::Fidelity) {
            let (lo, hi) = self.fidelity.recurrence_window;
            if lo > hi {
                return bad("fidelity recurrence window is empty".into());
            }
        }
        Ok(())
    }

    pub fn has_p(&self, p: f64) -> bool {
        self.p.contains(&p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_value(value: Value) -> Result<Self, CliError> {
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// One parameter point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub pair: usize,
    pub k_re: f64,
    pub k_im: f64,
    pub k_prime: Option<f64>,
    pub epsilon: f64,
}

impl Point {
    fn with(mut self, axis: Axis, v: f64) -> Self {
        match axis {
            Axis::KRe => self.k_re = v,
            Axis::KIm => self.k_im = v,
            Axis::KPrime => self.k_prime = Some(v),
            Axis::Epsilon => self.epsilon = v,
        }
        self
    }

    /// Sort key: pair index, then the numeric parameters.
    pub fn cmp_key(&self, other: &Self) -> std::cmp::Ordering {
        self.pair
            .cmp(&other.pair)
            .then(self.k_re.total_cmp(&other.k_re))
            .then(self.k_im.total_cmp(&other.k_im))
            .then(self.k_prime.unwrap_or(f64::NAN).total_cmp(&other.k_prime.unwrap_or(f64::NAN)))
            .then(self.epsilon.total_cmp(&other.epsilon))
    }
}

/// Recursively overlays `patch` onto `base`. Objects merge, everything else replaces.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies `a.b.0=value`. The value is read as JSON, falling back to a bare string.
pub fn apply_set(target: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{assignment}`")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut slot = target;
    for seg in path.split('.') {
        if seg.is_empty() {
            return Err(CliError::Config(format!("empty path segment in `{path}`")));
        }
        slot = match slot {
            Value::Object(map) => map.entry(seg).or_insert(Value::Null),
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| CliError::Config(format!("`{seg}` is not an index in `{path}`")))?;
                let len = items.len();
                items
                    .get_mut(idx)
                    .ok_or_else(|| CliError::Config(format!("index {idx} out of range ({len}) in `{path}`")))?
            }
            Value::Null => {
                *slot = Value::Object(Default::default());
                match slot {
                    Value::Object(map) => map.entry(seg).or_insert(Value::Null),
                    _ => unreachable!(),
                }
            }
            _ => return Err(CliError::Config(format!("cannot descend into `{seg}` of `{path}`"))),
        };
    }
    *slot = value;
    Ok(())
}

/// Builds the effective config: scenario preset, then the file, then `--set` overrides.
pub fn resolve(file: &str, scenario: Option<ScenarioId>, sets: &[String]) -> Result<ScenarioConfig, CliError> {
    let user: Value = serde_json::from_str(file).map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
    if !user.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    let id = match scenario {
        Some(id) => id,
        None => match user.get("scenario") {
            Some(Value::String(s)) => s.parse()?,
            Some(_) => return Err(CliError::Config("`scenario` must be a string".into())),
            None => return Err(CliError::Config("no scenario given in config or on the command line".into())),
        },
    };
    let mut value = serde_json::to_value(ScenarioConfig::preset(id)).expect("preset serializes");
    merge(&mut value, user);
    value["scenario"] = Value::String(id.as_str().into());
    for s in sets {
        apply_set(&mut value, s)?;
    }
    let config = ScenarioConfig::from_value(value)?;
    config.validate()?;
    Ok(config)
}
