//! Direct simulation of `dG = −b(G)dt + √κ σ(G)∘dB`.
//!
//! The Brownian increments are exactly those of [`brownian_path`] for the same
//! seed, so a simulated flow can be compared pathwise against the chain
//! driven by that path (`G_t = h_{u_t} ∘ g_t`).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{self, ChainError, ChainSpec, SolverOptions};
use crate::conformal::{CanonicalDomain, ConformalMap, DOMAIN_SLACK};
use crate::driving::{brownian_path, standard_normals, uniform_grid, DrivingError, DrivingPath, RandomSeed};
use crate::fields::{CompleteField, FieldError, SlitField, VectorField};

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error(transparent)]
    Driving(#[from] DrivingError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("b and sigma live in different domains")]
    DomainMismatch,
    #[error("initial point {0} is not interior to the domain")]
    NotInterior(Complex64),
    #[error("{0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Chordal,
    Radial,
    Dipolar,
    #[serde(alias = "ABP")]
    Abp,
    /// Radial `b` with chordal `σ`.
    RadialBChordalSigma,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Chordal, Preset::Radial, Preset::Dipolar, Preset::Abp, Preset::RadialBChordalSigma];

    /// `[b₋₂, b₋₁, b₀, b₁]` and `[σ₋₁, σ₀, σ₁]`.
    pub fn coefficients(self) -> ([f64; 4], [f64; 3]) {
        match self {
            Preset::Chordal => ([2.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            Preset::Radial => ([2.0, 0.0, 0.5, 0.0], [1.0, 0.0, 0.25]),
            Preset::Dipolar => ([2.0, 0.0, -0.5, 0.0], [1.0, 0.0, -0.25]),
            Preset::Abp => ([2.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.25]),
            Preset::RadialBChordalSigma => ([2.0, 0.0, 0.5, 0.0], [1.0, 0.0, 0.0]),
        }
    }
}

pub fn preset_fields(preset: Preset, domain: CanonicalDomain) -> (SlitField, CompleteField) {
    let (b, s) = preset.coefficients();
    (SlitField::new(b, domain).expect("preset b has b_-2 = 2"), CompleteField::new(s, domain))
}

/// `z ↦ −b(z) + (κ/2)σ(z)σ'(z)`, the Itô drift of the Stratonovich flow.
pub fn ito_drift(b: SlitField, sigma: CompleteField, kappa: f64) -> impl Fn(Complex64) -> Result<Complex64, FieldError> {
    move |z| {
        let correction = if kappa == 0.0 { Complex64::new(0.0, 0.0) } else { 0.5 * kappa * sigma.value(z)? * sigma.derivative(z)? };
        Ok(-b.value(z)? + correction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdeScheme {
    EulerIto,
    #[default]
    StratonovichHeun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub kappa: f64,
    pub dt: f64,
    pub scheme: SdeScheme,
    pub seed: RandomSeed,
}

impl SdeConfig {
    pub fn new(kappa: f64, dt: f64, seed: RandomSeed) -> Self {
        SdeConfig { kappa, dt, scheme: SdeScheme::default(), seed }
    }

    pub fn with_scheme(self, scheme: SdeScheme) -> Self {
        SdeConfig { scheme, ..self }
    }

    fn validate(&self) -> Result<(), StochasticError> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(StochasticError::Parameter(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(StochasticError::Parameter(format!("dt must be > 0, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Per-point SDE trajectories on the step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRun {
    pub times: Vec<f64>,
    /// `paths[i][k]` is `G_{times[k]}(z_i)`; a path stops at its explosion.
    pub paths: Vec<Vec<Complex64>>,
    pub explosion_times: Vec<f64>,
}

impl FlowRun {
    pub fn final_values(&self) -> Vec<Complex64> {
        self.paths.iter().map(|p| *p.last().expect("initial point recorded")).collect()
    }

    pub fn alive(&self) -> Vec<bool> {
        self.explosion_times.iter().map(|t| t.is_infinite()).collect()
    }
}

/// Drift and noise coefficients plus pole geometry for one `(b, σ)` pair.
struct Coefficients {
    b: SlitField,
    sigma: CompleteField,
    kappa: f64,
    scheme: SdeScheme,
    domain: CanonicalDomain,
    to_disk: ConformalMap,
    blowup_radius: f64,
    pole_cap: f64,
}

/// Substeps never exceed this many per grid step.
const MAX_SUBDIVISION: usize = 1 << 20;

impl Coefficients {
    fn pole_distance(&self, z: Complex64) -> (f64, f64) {
        if !self.b.has_pole() {
            return (f64::INFINITY, 1.0);
        }
        let j = self.to_disk.jet(z);
        ((j.value - 1.0).norm(), j.d1.norm())
    }

    fn dead(&self, z: Complex64) -> bool {
        !(z.re.is_finite() && z.im.is_finite())
            || !self.domain.contains_closed(z, DOMAIN_SLACK)
            || self.pole_distance(z).0 < self.blowup_radius
    }

    fn drift(&self, z: Complex64) -> Result<Complex64, FieldError> {
        let b = self.b.value(z)?;
        Ok(match self.scheme {
            SdeScheme::StratonovichHeun => -b,
            SdeScheme::EulerIto => -b + 0.5 * self.kappa * self.sigma.value(z)? * self.sigma.derivative(z)?,
        })
    }

    fn raw_step(&self, z: Complex64, h: f64, dw: f64) -> Result<Complex64, FieldError> {
        let a0 = self.drift(z)?;
        let s0 = self.sigma.value(z)?;
        match self.scheme {
            SdeScheme::EulerIto => Ok(z + a0 * h + s0 * dw),
            SdeScheme::StratonovichHeun => {
                let pred = z + a0 * h + s0 * dw;
                let a1 = self.drift(pred)?;
                let s1 = self.sigma.value(pred)?;
                Ok(z + 0.5 * (a0 + a1) * h + 0.5 * (s0 + s1) * dw)
            }
        }
    }

    /// One grid step, subdivided evenly while the point would move more than
    /// `pole_cap` times its pole distance. Returns the new value or the time
    /// offset within the step at which the point died.
    fn step(&self, z: Complex64, h: f64, dw: f64) -> Result<Complex64, (f64, Complex64)> {
        let (dist, stretch) = self.pole_distance(z);
        let speed = match (self.drift(z), self.sigma.value(z)) {
            (Ok(a), Ok(s)) => (a * h + s * dw).norm() * stretch,
            _ => return Err((0.0, z)),
        };
        let n = if dist.is_finite() && speed > self.pole_cap * dist {
            ((speed / (self.pole_cap * dist)).ceil() as usize).min(MAX_SUBDIVISION)
        } else {
            1
        };
        let (hs, ws) = (h / n as f64, dw / n as f64);
        let mut w = z;
        for k in 0..n {
            w = match self.raw_step(w, hs, ws) {
                Ok(next) if !self.dead(next) => next,
                Ok(next) => return Err((hs * (k + 1) as f64, next)),
                Err(_) => return Err((hs * k as f64, w)),
            };
            // Re-plan once the point approaches the pole faster than expected.
            if n > 1 && k + 1 < n {
                let (d, _) = self.pole_distance(w);
                if d < 0.25 * dist {
                    let rest = n - k - 1;
                    return self.step(w, hs * rest as f64, ws * rest as f64).map_err(|(s, p)| (s + hs * (k + 1) as f64, p));
                }
            }
        }
        Ok(w)
    }
}

/// Simulates the flow over the given Brownian increments `ΔU_k = √κ ΔB_k`,
/// one per grid step starting at `t0`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_increments(
    b: SlitField,
    sigma: CompleteField,
    kappa: f64,
    scheme: SdeScheme,
    points: &[Complex64],
    t0: f64,
    dt: f64,
    increments: &[f64],
    opts: SolverOptions,
) -> Result<FlowRun, StochasticError> {
    if b.domain() != sigma.domain {
        return Err(StochasticError::DomainMismatch);
    }
    let domain = b.domain();
    if let Some(&z) = points.iter().find(|z| !domain.contains(**z)) {
        return Err(StochasticError::NotInterior(z));
    }
    let coeffs = Coefficients {
        b,
        sigma,
        kappa,
        scheme,
        domain,
        to_disk: domain.to_disk(),
        blowup_radius: opts.blowup_radius,
        pole_cap: opts.pole_cap,
    };
    let times: Vec<f64> = (0..=increments.len()).map(|k| t0 + k as f64 * dt).collect();
    let runs: Vec<(Vec<Complex64>, f64)> = points
        .par_iter()
        .map(|&z0| {
            let mut path = Vec::with_capacity(increments.len() + 1);
            path.push(z0);
            let mut z = z0;
            for (k, &dw) in increments.iter().enumerate() {
                match coeffs.step(z, dt, dw) {
                    Ok(next) => {
                        z = next;
                        path.push(z);
                    }
                    Err((offset, _)) => return (path, times[k] + offset),
                }
            }
            (path, f64::INFINITY)
        })
        .collect();
    let (paths, explosion_times) = runs.into_iter().unzip();
    Ok(FlowRun { times, paths, explosion_times })
}

/// `√κ ΔB_k` for grid steps `start..start+count`, matching [`brownian_path`].
pub fn brownian_increments(kappa: f64, dt: f64, seed: RandomSeed, start: u64, count: usize) -> Vec<f64> {
    let scale = (kappa * dt).sqrt();
    standard_normals(seed, start, count).into_iter().map(|z| scale * z).collect()
}

/// Simulates `G_t(z)` on the grid `k·dt` up to `horizon`.
pub fn simulate_flow(b: SlitField, sigma: CompleteField, config: SdeConfig, points: &[Complex64], horizon: f64) -> Result<FlowRun, StochasticError> {
    simulate_flow_from(b, sigma, config, points, 0, horizon)
}

/// Continues the flow from grid step `start_step` (time `start_step·dt`),
/// consuming the same increments a run from zero would use there.
pub fn simulate_flow_from(
    b: SlitField,
    sigma: CompleteField,
    config: SdeConfig,
    points: &[Complex64],
    start_step: u64,
    duration: f64,
) -> Result<FlowRun, StochasticError> {
    config.validate()?;
    let grid = uniform_grid(config.dt, duration)?;
    let steps = grid.len() - 1;
    if (grid[steps] - grid[steps - 1] - config.dt).abs() > 1e-9 * config.dt {
        return Err(StochasticError::Parameter(format!("horizon {duration} is not a multiple of dt {}", config.dt)));
    }
    let dw = brownian_increments(config.kappa, config.dt, config.seed, start_step, steps);
    simulate_increments(
        b,
        sigma,
        config.kappa,
        config.scheme,
        points,
        start_step as f64 * config.dt,
        config.dt,
        &dw,
        SolverOptions::default(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositionReport {
    /// `sup |G_t(z) − h_{u_t}(g_t(z))|` over compared samples.
    pub max_discrepancy: f64,
    pub samples: usize,
}

/// Compares the SDE against the chain driven by the same Brownian path.
/// Samples where `G_t(z)` is within `pole_margin` (disk metric) of the marked
/// point are skipped, as are samples after either explosion.
pub fn composition_check(
    b: SlitField,
    sigma: CompleteField,
    config: SdeConfig,
    points: &[Complex64],
    horizon: f64,
    pole_margin: f64,
    opts: SolverOptions,
) -> Result<CompositionReport, StochasticError> {
    config.validate()?;
    let u = brownian_path(config.kappa, config.dt, horizon, config.seed)?;
    composition_check_path(b, sigma, config.kappa, config.scheme, &u, points, pole_margin, opts)
}

/// [`composition_check`] on a given driving path `u = √κ B` sampled on a
/// uniform grid; the SDE consumes the path's increments.
#[allow(clippy::too_many_arguments)]
pub fn composition_check_path(
    b: SlitField,
    sigma: CompleteField,
    kappa: f64,
    scheme: SdeScheme,
    u: &DrivingPath,
    points: &[Complex64],
    pole_margin: f64,
    opts: SolverOptions,
) -> Result<CompositionReport, StochasticError> {
    let horizon = u.horizon();
    let dw: Vec<f64> = u.values().windows(2).map(|w| w[1] - w[0]).collect();
    let spec = ChainSpec::new(b, sigma, u.clone())?;
    let run = simulate_increments(b, sigma, kappa, scheme, points, 0.0, u.nominal_dt(), &dw, opts)?;
    let to_disk = b.domain().to_disk();
    let per_point: Vec<Result<(f64, usize), ChainError>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &z)| {
            let tr = chain::trajectory(&spec, z, horizon, false, opts)?;
            let mut worst = 0.0f64;
            let mut count = 0;
            for (k, (&t, &g)) in tr.times.iter().zip(&tr.values).enumerate() {
                let Some(&big_g) = run.paths[i].get(k) else { break };
                debug_assert!((run.times[k] - t).abs() < 1e-9);
                if (to_disk.apply(big_g) - 1.0).norm() < pole_margin {
                    continue;
                }
                let composed = spec.automorphism(t).apply(g);
                worst = worst.max((composed - big_g).norm());
                count += 1;
            }
            Ok((worst, count))
        })
        .collect();
    let mut report = CompositionReport { max_discrepancy: 0.0, samples: 0 };
    for r in per_point {
        let (w, n) = r?;
        report.max_discrepancy = report.max_discrepancy.max(w);
        report.samples += n;
    }
    Ok(report)
}

/// Same increments as [`brownian_path`] for the given seed, as a path.
pub fn driving_for(config: &SdeConfig, horizon: f64) -> Result<DrivingPath, StochasticError> {
    Ok(brownian_path(config.kappa, config.dt, horizon, config.seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::semicomplete_check;
    use crate::fields::{is_complete, Pushforward};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disk_points(n: usize) -> Vec<Complex64> {
        (0..n).map(|k| Complex64::from_polar(0.8 * ((k % 7) as f64 + 1.0) / 8.0, 2.3 * k as f64)).collect()
    }

    #[test]
    fn presets_match_printed_forms() {
        let d = CanonicalDomain::Disk;
        for z in disk_points(30) {
            let (b, s) = preset_fields(Preset::Radial, d);
            assert!((b.value(z).unwrap() + z * (1.0 + z) / (1.0 - z)).norm() < 1e-12);
            assert!((s.value(z).unwrap() + c(0.0, 1.0) * z).norm() < 1e-12);
            let (b, _) = preset_fields(Preset::Abp, d);
            assert!((b.value(z).unwrap() - 0.25 * (z + 1.0).powi(3) / (z - 1.0)).norm() < 1e-12);
            let (b, s) = preset_fields(Preset::RadialBChordalSigma, d);
            assert!((b.value(z).unwrap() - z * (z + 1.0) / (z - 1.0)).norm() < 1e-12);
            assert!((s.value(z).unwrap() + c(0.0, 0.25) * (z + 1.0).powi(2)).norm() < 1e-12);
        }
        let (b, s) = preset_fields(Preset::Dipolar, CanonicalDomain::Strip);
        let z = c(0.4, 1.1);
        assert!((b.value(z).unwrap() + 1.0 / (z / 2.0).tanh()).norm() < 1e-12);
        assert!((s.value(z).unwrap() + 1.0).norm() < 1e-12);
    }

    #[test]
    fn presets_are_slit_and_complete() {
        for p in Preset::ALL {
            let (b, s) = preset_fields(p, CanonicalDomain::Disk);
            assert!(semicomplete_check(&b).unwrap().semicomplete, "{p:?}");
            assert!(is_complete(&s).unwrap(), "{p:?}");
            let (bh, _) = preset_fields(p, CanonicalDomain::HalfPlane);
            let pushed = Pushforward::new(bh, &CanonicalDomain::HalfPlane.to_disk());
            assert!(semicomplete_check(&pushed).unwrap().semicomplete, "{p:?}");
        }
    }

    #[test]
    fn ito_correction() {
        let (b, s) = preset_fields(Preset::Radial, CanonicalDomain::Disk);
        let z = c(0.3, -0.2);
        let d = ito_drift(b, s, 3.0)(z).unwrap() + b.value(z).unwrap();
        assert!((d + 1.5 * z).norm() < 1e-7);
        let (b, s) = preset_fields(Preset::Chordal, CanonicalDomain::HalfPlane);
        assert_eq!(ito_drift(b, s, 4.0)(z + c(0.0, 1.0)).unwrap(), -b.value(z + c(0.0, 1.0)).unwrap());
        assert_eq!(ito_drift(b, s, 0.0)(c(0.1, 1.0)).unwrap(), -b.value(c(0.1, 1.0)).unwrap());
    }

    #[test]
    fn noise_free_flow_matches_chain() {
        let (b, s) = preset_fields(Preset::Abp, CanonicalDomain::Disk);
        let cfg = SdeConfig::new(0.0, 1e-3, RandomSeed::new(1, 0));
        let pts = [c(0.1, 0.2), c(-0.4, 0.3)];
        let run = simulate_flow(b, s, cfg, &pts, 0.5).unwrap();
        let spec = ChainSpec::new(b, s, DrivingPath::zero(1e-3, 0.5).unwrap()).unwrap();
        let st = chain::evolve(&spec, &pts, 0.5, SolverOptions::default()).unwrap();
        for (g, w) in run.final_values().iter().zip(&st.values) {
            assert!((g - w).norm() < 1e-6);
        }
    }

    #[test]
    fn chordal_sde_is_shifted_chain() {
        let (b, s) = preset_fields(Preset::Chordal, CanonicalDomain::HalfPlane);
        let cfg = SdeConfig::new(4.0, 1e-4, RandomSeed::new(7, 3));
        let pts = [c(0.5, 1.0), c(-1.0, 2.0)];
        let rep = composition_check(b, s, cfg, &pts, 0.2, 1e-2, SolverOptions::default()).unwrap();
        assert!(rep.samples > 1000 && rep.max_discrepancy < 1e-3, "{rep:?}");
    }

    #[test]
    fn markov_restart_is_seamless() {
        let (b, s) = preset_fields(Preset::Abp, CanonicalDomain::Disk);
        let cfg = SdeConfig::new(2.0, 1e-3, RandomSeed::new(11, 2));
        let pts = [c(0.0, 0.0), c(0.3, -0.3)];
        let whole = simulate_flow(b, s, cfg, &pts, 0.4).unwrap();
        let first = simulate_flow(b, s, cfg, &pts, 0.2).unwrap();
        let second = simulate_flow_from(b, s, cfg, &first.final_values(), 200, 0.2).unwrap();
        for (w, v) in whole.final_values().iter().zip(second.final_values()) {
            assert!((w - v).norm() < 1e-12);
        }
        let inc = brownian_increments(2.0, 1e-3, cfg.seed, 0, 400);
        let u = brownian_path(2.0, 1e-3, 0.4, cfg.seed).unwrap();
        assert!((inc.iter().sum::<f64>() - u.values()[400]).abs() < 1e-12);
    }

    #[test]
    fn schemes_agree() {
        let (b, s) = preset_fields(Preset::Radial, CanonicalDomain::Disk);
        let pts = [c(0.2, 0.1)];
        let gap = |dt: f64| {
            let cfg = SdeConfig::new(2.0, dt, RandomSeed::new(5, 0));
            let ito = simulate_flow(b, s, cfg.with_scheme(SdeScheme::EulerIto), &pts, 0.2).unwrap();
            let strat = simulate_flow(b, s, cfg, &pts, 0.2).unwrap();
            (ito.final_values()[0] - strat.final_values()[0]).norm()
        };
        let (g1, g2) = (gap(1e-3), gap(2.5e-4));
        assert!(g1 < 0.05 && g2 < g1, "{g1} {g2}");
    }

    #[test]
    fn chordal_point_on_axis_explodes() {
        let (b, s) = preset_fields(Preset::Chordal, CanonicalDomain::HalfPlane);
        let run = simulate_flow(b, s, SdeConfig::new(0.0, 1e-3, RandomSeed::new(0, 0)), &[c(0.0, 1.0)], 0.5).unwrap();
        assert!((run.explosion_times[0] - 0.25).abs() < 1e-2);
    }
}
