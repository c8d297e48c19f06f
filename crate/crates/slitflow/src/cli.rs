//! Command-line front end. Configs are JSON; bulk output is CSV written next
//! to a `<prefix>_summary.json`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
//! 3 numerical failure.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::autoflow::classify;
use crate::chain::{self, ChainSpec, SolverOptions};
use crate::conformal::CanonicalDomain;
use crate::driving::{brownian_path, deterministic_path, DeterministicKind, DrivingPath, RandomSeed};
use crate::fields::{is_complete, semicomplete_check, CompleteField, FieldError, Pushforward, SlitField};
use crate::reparam::{cross_reparam, kappa_estimate, phase_probe, to_radial, RadialOptions};
use crate::transforms::{apply_all, normalize, normalize_stochastic, ElementaryTransform};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn numeric_err(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "slitflow", version, about = "Slit Loewner chains and slit holomorphic stochastic flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the driver seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "SLITFLOW_THREADS")]
    pub threads: Option<usize>,
    /// Output path prefix; overrides the config's `output`.
    #[arg(long, global = true)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Validate the fields and print their Herglotz form.
    Fields,
    /// Evolve the point grid to T.
    Simulate,
    /// Sample the trace.
    Trace,
    /// Apply the configured transforms, or normalize when none are given.
    Transform,
    /// Reparameterize as the radial chain, or as the configured target.
    Reparam,
    /// Monte Carlo quadratic-variation and phase statistics.
    Stats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverKind {
    Zero,
    Linear,
    Sqrt,
    TangentAngle,
    /// `c·sin(ωt)`.
    Sine,
    /// `√κ B_t + μt`.
    Brownian,
    /// CSV with header `t,u`.
    File,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_omega() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    #[serde(rename = "type")]
    pub kind: DriverKind,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl DriverConfig {
    pub fn build(&self, horizon: f64) -> Result<DrivingPath, CliError> {
        let det = |kind| deterministic_path(kind, self.dt, horizon).map_err(config_err);
        match self.kind {
            DriverKind::Zero => det(DeterministicKind::Constant0),
            DriverKind::Linear => det(DeterministicKind::Linear { mu: self.mu }),
            DriverKind::Sqrt => det(DeterministicKind::Sqrt { c: self.c }),
            DriverKind::TangentAngle => det(DeterministicKind::TangentAngle { theta: self.theta }),
            DriverKind::Sine => DrivingPath::from_fn(|t| self.c * (self.omega * t).sin(), self.dt, horizon).map_err(config_err),
            DriverKind::Brownian => Ok(brownian_path(self.kappa, self.dt, horizon, RandomSeed::new(self.seed, self.stream))
                .map_err(config_err)?
                .affine(1.0, self.mu)),
            DriverKind::File => {
                let path = self.path.as_ref().ok_or_else(|| config_err("file driver needs `path`"))?;
                DrivingPath::load(path).map_err(config_err)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridConfig {
    Polar { radii: usize, angles: usize, r_max: f64 },
    Rect { re_min: f64, re_max: f64, im_min: f64, im_max: f64, n_re: usize, n_im: usize },
    Points { points: Vec<[f64; 2]> },
}

impl GridConfig {
    pub fn default_for(domain: CanonicalDomain) -> Self {
        match domain {
            CanonicalDomain::Disk => GridConfig::Polar { radii: 10, angles: 10, r_max: 0.95 },
            CanonicalDomain::HalfPlane => GridConfig::Rect { re_min: -2.0, re_max: 2.0, im_min: 0.1, im_max: 2.0, n_re: 10, n_im: 10 },
            CanonicalDomain::Strip => GridConfig::Rect { re_min: -2.0, re_max: 2.0, im_min: 0.1, im_max: 3.0, n_re: 10, n_im: 10 },
        }
    }

    pub fn points(&self) -> Vec<Complex64> {
        let lin = |a: f64, b: f64, n: usize, k: usize| if n <= 1 { a } else { a + (b - a) * k as f64 / (n - 1) as f64 };
        match self {
            GridConfig::Polar { radii, angles, r_max } => {
                let mut pts = vec![Complex64::new(0.0, 0.0)];
                for i in 1..=*radii {
                    for j in 0..*angles {
                        pts.push(Complex64::from_polar(r_max * i as f64 / *radii as f64, std::f64::consts::TAU * j as f64 / *angles as f64));
                    }
                }
                pts
            }
            GridConfig::Rect { re_min, re_max, im_min, im_max, n_re, n_im } => (0..*n_re)
                .flat_map(|i| (0..*n_im).map(move |j| Complex64::new(lin(*re_min, *re_max, *n_re, i), lin(*im_min, *im_max, *n_im, j))))
                .collect(),
            GridConfig::Points { points } => points.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub b: [f64; 4],
    pub sigma: [f64; 3],
}

fn default_epsilon() -> f64 {
    1e-3
}

fn default_output() -> String {
    "slitflow".into()
}

fn default_paths() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: CanonicalDomain,
    pub b: [f64; 4],
    pub sigma: [f64; 3],
    pub driver: DriverConfig,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "default_epsilon")]
    pub trace_epsilon: f64,
    /// Trace sampling interval; defaults to the driver's `dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<ElementaryTransform>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    /// Monte Carlo path count for `stats`.
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Whether `stats` also samples and probes each path's trace.
    #[serde(default)]
    pub probe_phase: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn fields(&self) -> Result<(SlitField, CompleteField), CliError> {
        let b = SlitField::new(self.b, self.domain).map_err(|e| match e {
            FieldError::NonPositiveLeading(v) => CliError::Config(format!("b: the ell_-2 coefficient must be positive for a slit field, got {v}")),
            other => config_err(format!("b: {other}")),
        })?;
        if self.sigma[0] == 0.0 {
            return Err(config_err("sigma: the ell_-1 coefficient must be nonzero"));
        }
        if self.sigma.iter().any(|x| !x.is_finite()) {
            return Err(config_err("sigma: coefficients must be finite"));
        }
        Ok((b, CompleteField::new(self.sigma, self.domain)))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.fields()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(config_err(format!("T must be positive, got {}", self.horizon)));
        }
        if !(self.driver.dt > 0.0) {
            return Err(config_err(format!("driver.dt must be positive, got {}", self.driver.dt)));
        }
        if !(self.trace_epsilon > 0.0 && self.trace_epsilon < 0.1) {
            return Err(config_err(format!("trace_epsilon must lie in (0, 0.1), got {}", self.trace_epsilon)));
        }
        if let Some(dt) = self.trace_dt {
            if !(dt > 0.0) {
                return Err(config_err(format!("trace_dt must be positive, got {dt}")));
            }
        }
        for t in &self.transforms {
            ElementaryTransform::new(t.kind, t.c).map_err(config_err)?;
        }
        if let Some(target) = &self.target {
            SlitField::new(target.b, self.domain).map_err(|e| config_err(format!("target.b: {e}")))?;
            if target.sigma[0] == 0.0 {
                return Err(config_err("target.sigma: the ell_-1 coefficient must be nonzero"));
            }
        }
        if let Some(&z) = self.grid_points().iter().find(|z| !self.domain.contains(**z)) {
            return Err(config_err(format!("grid point {z} is not interior to {:?}", self.domain)));
        }
        Ok(())
    }

    pub fn grid_points(&self) -> Vec<Complex64> {
        self.grid.clone().unwrap_or_else(|| GridConfig::default_for(self.domain)).points()
    }

    pub fn spec(&self) -> Result<ChainSpec, CliError> {
        let (b, s) = self.fields()?;
        ChainSpec::new(b, s, self.driver.build(self.horizon)?).map_err(config_err)
    }
}

struct Output {
    prefix: String,
}

impl Output {
    fn new(prefix: String) -> Result<Self, CliError> {
        if let Some(dir) = Path::new(&prefix).parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
        }
        Ok(Output { prefix })
    }

    fn path(&self, suffix: &str) -> PathBuf {
        PathBuf::from(format!("{}_{suffix}", self.prefix))
    }

    fn create(&self, suffix: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.path(suffix);
        File::create(&path).map(BufWriter::new).map_err(|source| CliError::Io { path, source })
    }

    fn csv(&self, suffix: &str, write: impl FnOnce(BufWriter<File>) -> Result<(), csv::Error>) -> Result<(), CliError> {
        let path = self.path(suffix);
        write(self.create(suffix)?).map_err(|e| CliError::Io { path, source: std::io::Error::other(e) })
    }

    fn json(&self, suffix: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let path = self.path(suffix);
        serde_json::to_writer_pretty(self.create(suffix)?, value).map_err(|e| CliError::Io { path, source: e.into() })
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            warn!("thread pool already configured: {e}");
        }
    }
    let path = cli.config.as_ref().ok_or_else(|| config_err("--config <path> is required"))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.driver.seed = seed;
    }
    let out = Output::new(cli.out.clone().unwrap_or_else(|| cfg.output.clone()))?;
    match cli.command {
        Command::Fields => cmd_fields(&cfg, &out),
        Command::Simulate => cmd_simulate(&cfg, &out),
        Command::Trace => cmd_trace(&cfg, &out),
        Command::Transform => cmd_transform(&cfg, &out),
        Command::Reparam => cmd_reparam(&cfg, &out),
        Command::Stats => cmd_stats(&cfg, &out),
    }
}

fn cmd_fields(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (b, s) = cfg.fields()?;
    let to_disk = cfg.domain.to_disk();
    let b_disk = Pushforward::new(b, &to_disk);
    let s_disk = Pushforward::new(s, &to_disk);
    let semi = semicomplete_check(&b_disk).map_err(numeric_err)?;
    let b_complete = is_complete(&b_disk).map_err(numeric_err)?;
    let s_complete = is_complete(&s_disk).map_err(numeric_err)?;
    let h = b.to_herglotz();
    let (class, disc) = classify(&s);
    println!("b      = {:?} in {:?}", cfg.b, cfg.domain);
    println!("sigma  = {:?} ({class:?}, discriminant {disc})", cfg.sigma);
    println!("b semicomplete: {}  (min Re q = {:.3e})", semi.semicomplete, semi.min_re_q);
    println!("b complete: {b_complete}");
    println!("sigma complete: {s_complete}");
    println!("Herglotz form of b: alpha = {}, beta = {}, gamma = {}, pole = {}", h.alpha, h.beta, h.gamma, h.pole);
    let report = json!({
        "config": cfg,
        "b_semicomplete": semi.semicomplete,
        "b_min_re_q": semi.min_re_q,
        "b_complete": b_complete,
        "sigma_complete": s_complete,
        "sigma_class": format!("{class:?}"),
        "sigma_discriminant": disc,
        "herglotz": h,
    });
    out.json("summary.json", &report)?;
    if !semi.semicomplete || !s_complete {
        return Err(config_err("fields fail the slit/complete checks"));
    }
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let points = cfg.grid_points();
    let state = chain::evolve(&spec, &points, cfg.horizon, SolverOptions::default()).map_err(numeric_err)?;
    out.csv("state.csv", |w| state.write_csv(w))?;
    let driver_path = out.path("driver.csv");
    spec.driving().write_csv(out.create("driver.csv")?).map_err(|e| CliError::Io { path: driver_path, source: std::io::Error::other(e) })?;
    let alive = state.alive.iter().filter(|a| **a).count();
    info!("{alive} of {} points alive at T={}", points.len(), cfg.horizon);
    out.json(
        "summary.json",
        &json!({
            "config": cfg,
            "points": points.len(),
            "alive": alive,
            "T": cfg.horizon,
            "max_error_estimate": state.error_estimates.iter().cloned().fold(0.0, f64::max),
        }),
    )?;
    if alive == 0 && !points.is_empty() {
        let first = state.explosion_times.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(numeric_err(format!("every point exploded (first at t={first})")));
    }
    Ok(())
}

fn cmd_trace(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let dt = cfg.trace_dt.unwrap_or(cfg.driver.dt);
    let tr = chain::trace(&spec, cfg.horizon, dt, cfg.trace_epsilon, SolverOptions::default()).map_err(numeric_err)?;
    if tr.tips.is_empty() {
        return Err(numeric_err("no trace sample could be computed"));
    }
    out.csv("trace.csv", |w| tr.write_csv(w))?;
    let probe = (tr.tips.len() > 2 * crate::reparam::ADJACENCY_WINDOW).then(|| phase_probe(&tr));
    out.json("summary.json", &json!({ "config": cfg, "samples": tr.tips.len(), "failures": tr.failures, "phase": probe }))
}

fn cmd_transform(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let (result, applied, stochastic) = if cfg.transforms.is_empty() {
        let rec = normalize(&spec).map_err(config_err)?;
        let stochastic = (cfg.driver.kind == DriverKind::Brownian)
            .then(|| normalize_stochastic(*spec.b(), *spec.sigma(), cfg.driver.kappa, cfg.driver.mu))
            .transpose()
            .map_err(config_err)?
            .map(|n| json!({ "kappa": n.kappa, "mu": n.mu }));
        (rec.spec, rec.applied, stochastic)
    } else {
        (apply_all(&cfg.transforms, &spec).map_err(config_err)?, cfg.transforms.clone(), None)
    };
    let triple = json!({
        "domain": cfg.domain,
        "b": result.b().coeffs(),
        "sigma": result.sigma().coeffs(),
        "applied": applied,
        "stochastic": stochastic,
    });
    println!("{}", serde_json::to_string_pretty(&triple).expect("serializable"));
    let driver_path = out.path("driver.csv");
    result.driving().write_csv(out.create("driver.csv")?).map_err(|e| CliError::Io { path: driver_path, source: std::io::Error::other(e) })?;
    out.json("summary.json", &triple)
}

fn cmd_reparam(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let summary = match &cfg.target {
        None => {
            let red = to_radial(&spec, cfg.horizon, RadialOptions::default()).map_err(numeric_err)?;
            out.csv("reparam.csv", |w| red.write_csv(w))?;
            let kappa = (cfg.driver.kind == DriverKind::Brownian).then(|| kappa_estimate(&red).ok()).flatten();
            json!({
                "config": cfg,
                "target": "radial",
                "t_max": red.t_max,
                "origin_hit": red.origin_hit,
                "lambda_T": red.lambda.last(),
                "kappa_estimate": kappa,
            })
        }
        Some(target) => {
            let tb = SlitField::new(target.b, cfg.domain).map_err(config_err)?;
            let ts = CompleteField::new(target.sigma, cfg.domain);
            let st = cross_reparam(&spec, tb, ts, cfg.horizon, SolverOptions::default()).map_err(numeric_err)?;
            if st.times.len() < 2 {
                return Err(numeric_err("the reparameterization stopped immediately"));
            }
            out.csv("reparam.csv", |w| st.write_csv(w))?;
            json!({
                "config": cfg,
                "target": target,
                "stopped_at": st.stopped_at,
                "lambda_T": st.lambda.last(),
                "final_a": st.a.last(),
                "final_theta": st.theta.last(),
            })
        }
    };
    out.json("summary.json", &summary)
}

fn cmd_stats(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    if cfg.driver.kind != DriverKind::Brownian {
        return Err(config_err("stats needs a brownian driver"));
    }
    let (b, s) = cfg.fields()?;
    let rows: Vec<serde_json::Value> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|stream| {
            let mut d = cfg.driver.clone();
            d.stream = cfg.driver.stream + stream;
            let spec = ChainSpec::new(b, s, d.build(cfg.horizon)?).map_err(config_err)?;
            let kappa = to_radial(&spec, cfg.horizon, RadialOptions::default()).ok().and_then(|r| kappa_estimate(&r).ok());
            let phase = if cfg.probe_phase {
                let dt = cfg.trace_dt.unwrap_or(cfg.driver.dt);
                chain::trace(&spec, cfg.horizon, dt, cfg.trace_epsilon, SolverOptions::default()).ok().map(|t| phase_probe(&t))
            } else {
                None
            };
            Ok(json!({ "stream": d.stream, "kappa_estimate": kappa, "phase": phase }))
        })
        .collect::<Result<_, CliError>>()?;
    let estimates: Vec<f64> = rows.iter().filter_map(|r| r["kappa_estimate"].as_f64()).collect();
    if estimates.is_empty() {
        return Err(numeric_err("no path produced a kappa estimate"));
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let sd = (estimates.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    println!("kappa estimate: {mean:.4} ± {:.4} over {} paths", sd / n.sqrt(), estimates.len());
    out.json("summary.json", &json!({ "config": cfg, "kappa_mean": mean, "kappa_sd": sd, "paths": rows }))
}
