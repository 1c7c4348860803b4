use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{Point, ScenarioConfig};
use crate::error::CliError;
use crate::run::{p_label, FitRow, PointResult, ScenarioResult, SeriesKind, SeriesOut};

pub const SERIES_DIR: &str = "series";

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn conventions(config: &ScenarioConfig) -> Vec<String> {
    vec![
        format!("qutop {} scenario={}", env!("CARGO_PKG_VERSION"), config.scenario),
        "basis: |m1>|m2> with m = j, j-1, ..., -j; row index = i1*(2j+1) + i2".into(),
        "floquet: U = K R, R = exp[-i(pi/2)(Jy1 + Jy2)], K = exp{-i[(k/2j)(Jz1^2 + Jz2^2) + (epsilon/j) Jz1 Jz2]}, k = k_re + i k_im".into(),
        "amplified runs (k_im > 0): rho -> U rho U^dag / Tr(U rho U^dag) after every kick".into(),
        "initial state: rho_p = p |g1,g2><g1,g2| + (1-p) |g2,g1><g2,g1|, normalized".into(),
        "log-negativity: log2 of the trace norm of rho with the second top transposed".into(),
    ]
}

fn header_block(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn series_file_name(point: &Point, s: &SeriesOut) -> String {
    let mut name = format!(
        "{}_g{}_kre={}_kim={}_eps={}",
        s.kind.stem(),
        point.pair,
        point.k_re,
        point.k_im,
        point.epsilon
    );
    if s.kind == SeriesKind::Fidelity {
        if let Some(kp) = point.k_prime {
            let _ = write!(name, "_kp={kp}");
        }
    }
    let _ = write!(name, "_{}.csv", p_label(s.p));
    name
}

pub fn series_csv(config: &ScenarioConfig, r: &PointResult, s: &SeriesOut) -> String {
    let pair = &config.gamma_pairs[r.point.pair];
    let mut lines = conventions(config);
    lines.push(format!(
        "params: j={} k_re={} k_im={} epsilon={} gamma1={} gamma2={} p={}",
        config.j, r.point.k_re, r.point.k_im, r.point.epsilon, pair.gamma1, pair.gamma2, s.p
    ));
    match s.kind {
        SeriesKind::Negativity => {
            lines.push("columns: t = kick index, value = log-negativity in bits".into());
        }
        SeriesKind::Fidelity => {
            lines.push(format!("k_prime={}", r.point.k_prime.unwrap_or(f64::NAN)));
            lines.push(
                "columns: t = kick index, value = [Tr sqrt(sqrt(rho_k) rho_k' sqrt(rho_k))]^2 with shared rho(0)".into(),
            );
        }
    }
    let mut out = header_block(&lines);
    out.push_str("t,value\n");
    for (t, v) in s.values.iter().enumerate() {
        let _ = writeln!(out, "{t},{}", fmt_f64(*v));
    }
    out
}

const KEY_COLUMNS: [&str; 8] = ["pair", "gamma1", "gamma2", "k_re", "k_im", "k_prime", "epsilon", "status"];

pub fn summary_csv(config: &ScenarioConfig, result: &ScenarioResult) -> String {
    let metric_names: BTreeSet<&String> = result.points.iter().flat_map(|r| r.metrics.keys()).collect();
    let mut lines = conventions(config);
    lines.extend([
        "one row per parameter point, sorted by (pair, k_re, k_im, k_prime, epsilon)".into(),
        "pair: index into gamma_pairs of the config; status: ok or not_converged".into(),
        "name[p=x]: metric of the trajectory started from rho_x".into(),
        "eta_d, eta_g: E1 = p=0 trajectory, E2 = p=0.5 trajectory; *_se = block standard error".into(),
        "delta_s[exact]: entropy gap S(rho_0.5) - S(rho_0) at t=0, closed form at x = |<g1|g2>|^2".into(),
        "delta_s[squared_overlap]: same closed form at x = |<g1|g2>|^4; delta_s[unit] = 1".into(),
        "slope: decline rate of the windowed maximum slope_max[p] vs p; slope_t is its kick index".into(),
        "stationary[p]: converged window mean; snapshot_t<n>[p]: value at kick n".into(),
        "recurrence_max[p]: maximum fidelity inside the recurrence window; divergence_*: |F(p=0) - F(p=0.5)|".into(),
    ]);
    let mut out = header_block(&lines);
    let mut cols: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend(metric_names.iter().map(|s| s.to_string()));
    out.push_str(&cols.join(","));
    out.push('\n');
    for r in &result.points {
        let pair = &config.gamma_pairs[r.point.pair];
        let mut row = vec![
            r.point.pair.to_string(),
            pair.gamma1.to_string(),
            pair.gamma2.to_string(),
            fmt_f64(r.point.k_re),
            fmt_f64(r.point.k_im),
            fmt_opt(r.point.k_prime),
            fmt_f64(r.point.epsilon),
            r.status.to_string(),
        ];
        row.extend(metric_names.iter().map(|m| fmt_opt(r.metrics.get(*m).copied())));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn fits_csv(config: &ScenarioConfig, fits: &[FitRow]) -> String {
    let mut lines = conventions(config);
    lines.push(format!(
        "power-law fit log(stationary[p]) = exponent log(epsilon) + log(prefactor) over 0 < epsilon <= {}",
        config.fit.epsilon_max
    ));
    lines.push("residual: RMS deviation in natural-log space".into());
    let mut out = header_block(&lines);
    out.push_str("pair,k_re,k_im,p,n_points,status,exponent,prefactor,residual\n");
    for f in fits {
        let m = |k: &str| fmt_opt(f.metrics.get(k).copied());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            f.pair,
            fmt_f64(f.k_re),
            fmt_f64(f.k_im),
            fmt_f64(f.p),
            f.n_points,
            f.status.replace(',', ";"),
            m("exponent"),
            m("prefactor"),
            m("residual")
        );
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Software {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointRecord {
    pub pair: usize,
    pub k_re: f64,
    pub k_im: f64,
    pub k_prime: Option<f64>,
    pub epsilon: f64,
    pub status: String,
    pub metrics: BTreeMap<String, f64>,
    pub series: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitRecord {
    pub pair: usize,
    pub k_re: f64,
    pub k_im: f64,
    pub p: f64,
    pub n_points: usize,
    pub status: String,
    pub metrics: BTreeMap<String, f64>,
}

/// Everything a run produced, with the config that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub software: Software,
    pub config: ScenarioConfig,
    pub points: Vec<PointRecord>,
    pub fits: Vec<FitRecord>,
    pub wall_clock_seconds: f64,
}

impl RunRecord {
    pub fn new(config: &ScenarioConfig, result: &ScenarioResult, wall_clock_seconds: f64) -> Self {
        let points = result
            .points
            .iter()
            .map(|r| PointRecord {
                pair: r.point.pair,
                k_re: r.point.k_re,
                k_im: r.point.k_im,
                k_prime: r.point.k_prime,
                epsilon: r.point.epsilon,
                status: r.status.into(),
                metrics: r.metrics.clone(),
                series: r
                    .series
                    .iter()
                    .map(|s| format!("{SERIES_DIR}/{}", series_file_name(&r.point, s)))
                    .collect(),
            })
            .collect();
        let fits = result
            .fits
            .iter()
            .map(|f| FitRecord {
                pair: f.pair,
                k_re: f.k_re,
                k_im: f.k_im,
                p: f.p,
                n_points: f.n_points,
                status: f.status.clone(),
                metrics: f.metrics.clone(),
            })
            .collect();
        Self {
            software: Software {
                name: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
            },
            config: config.clone(),
            points,
            fits,
            wall_clock_seconds,
        }
    }
}

/// Writes `contents` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

/// Writes series files, `summary.csv`, `fits.csv` (when any) and `run.json` under `dir`.
pub fn write_outputs(
    dir: &Path,
    config: &ScenarioConfig,
    result: &ScenarioResult,
    wall_clock_seconds: f64,
) -> Result<Vec<PathBuf>, CliError> {
    let series_dir = dir.join(SERIES_DIR);
    fs::create_dir_all(&series_dir).map_err(|e| CliError::io(&series_dir, e))?;
    let mut written = Vec::new();
    for r in &result.points {
        for s in &r.series {
            let path = series_dir.join(series_file_name(&r.point, s));
            write_atomic(&path, series_csv(config, r, s).as_bytes())?;
            written.push(path);
        }
    }
    let summary = dir.join("summary.csv");
    write_atomic(&summary, summary_csv(config, result).as_bytes())?;
    written.push(summary);
    if !result.fits.is_empty() {
        let fits = dir.join("fits.csv");
        write_atomic(&fits, fits_csv(config, &result.fits).as_bytes())?;
        written.push(fits);
    }
    let record = RunRecord::new(config, result, wall_clock_seconds);
    let json = serde_json::to_string_pretty(&record).expect("record serializes");
    let run = dir.join("run.json");
    write_atomic(&run, format!("{json}\n").as_bytes())?;
    written.push(run);
    Ok(written)
}
