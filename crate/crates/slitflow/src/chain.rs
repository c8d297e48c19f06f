//! The slit Loewner chain `∂_t g_t = −V(t, g_t)` with
//! `V(t,·) = (h_{u_t}^{-1})_* b`, solved pointwise by adaptive Runge–Kutta.
//!
//! Every integration is split at the driving samples so the field is smooth
//! in `t` within each step. Explosion is measured in disk coordinates, in all
//! domains: a point dies within `blowup_radius` of the moving pole
//! `h_{u_t}^{-1}(1)`, on leaving the closed domain, or on step underflow.
//! Steps are capped so a point moves at most `pole_cap` times its distance to
//! the pole.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autoflow::Flow;
use crate::conformal::{conjugate_into, CanonicalDomain, ConformalMap, DiskAutomorphism, Jet, DOMAIN_SLACK};
use crate::driving::{uniform_grid, DrivingError, DrivingPath};
use crate::fields::{CompleteField, FieldError, HerglotzSlitForm, SlitField, VectorField};
use crate::ode::{Dopri5, OdeOptions, Outcome};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Driving(#[from] DrivingError),
    #[error("b lives in {b:?} but sigma lives in {sigma:?}")]
    DomainMismatch { b: CanonicalDomain, sigma: CanonicalDomain },
    #[error("sigma_-1 must be nonzero")]
    DegenerateSigma,
    #[error("time {t} exceeds the driving path horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("initial point {0} is not interior to the domain")]
    NotInterior(Complex64),
    #[error("point {z} exploded at t={time}")]
    Exploded { z: Complex64, time: f64 },
    #[error("trace offset epsilon must lie in (0, 0.1), got {0}")]
    BadEpsilon(f64),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Fraction of the pole distance a point may travel per step.
    pub pole_cap: f64,
    /// Disk-metric distance to the pole at which a point counts as exploded.
    pub blowup_radius: f64,
    pub min_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rtol: 1e-10, atol: 1e-12, pole_cap: 0.5, blowup_radius: 1e-6, min_step: 1e-14 }
    }
}

impl SolverOptions {
    fn ode(&self) -> OdeOptions {
        OdeOptions { rtol: self.rtol, atol: self.atol, min_step: self.min_step, ..OdeOptions::default() }
    }
}

/// The triple `(b, σ, u)` in one canonical domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    b: SlitField,
    sigma: CompleteField,
    u: DrivingPath,
}

impl ChainSpec {
    pub fn new(b: SlitField, sigma: CompleteField, u: DrivingPath) -> Result<Self, ChainError> {
        if b.domain() != sigma.domain {
            return Err(ChainError::DomainMismatch { b: b.domain(), sigma: sigma.domain });
        }
        if sigma.sigma_m1 == 0.0 {
            return Err(ChainError::DegenerateSigma);
        }
        Ok(ChainSpec { b, sigma, u })
    }

    pub fn b(&self) -> &SlitField {
        &self.b
    }

    pub fn sigma(&self) -> &CompleteField {
        &self.sigma
    }

    pub fn driving(&self) -> &DrivingPath {
        &self.u
    }

    pub fn domain(&self) -> CanonicalDomain {
        self.b.domain()
    }

    pub fn horizon(&self) -> f64 {
        self.u.horizon()
    }

    pub fn with_driving(&self, u: DrivingPath) -> Self {
        ChainSpec { u, ..self.clone() }
    }

    pub fn with_fields(&self, b: SlitField, sigma: CompleteField) -> Result<Self, ChainError> {
        Self::new(b.with_domain(self.domain()), sigma.with_domain(self.domain()), self.u.clone())
    }

    /// The same chain conjugated into another canonical domain.
    pub fn in_domain(&self, domain: CanonicalDomain) -> Self {
        ChainSpec { b: self.b.with_domain(domain), sigma: self.sigma.with_domain(domain), u: self.u.clone() }
    }

    /// `h_{u_t}` in disk coordinates.
    pub fn disk_automorphism(&self, t: f64) -> DiskAutomorphism {
        Flow::new(&self.sigma).at(self.u.value_at(t))
    }

    /// `h_{u_t}` in the chain's own domain.
    pub fn automorphism(&self, t: f64) -> ConformalMap {
        conjugate_into(self.domain(), self.disk_automorphism(t))
    }

    /// The moving pole `h_{u_t}^{-1}(1)` in disk coordinates.
    pub fn pole_in_disk(&self, t: f64) -> Complex64 {
        Flow::new(&self.sigma).at(-self.u.value_at(t)).eval(ONE)
    }

    /// Chain restarted at `s`: driven by `u_{s+τ} − u_s`, and related to the
    /// original by `g_{s+τ} ∘ g_s^{-1} = H^{-1} ∘ g̃_τ ∘ H` with the returned `H = h_{u_s}`.
    pub fn restarted(&self, s: f64) -> Result<(ChainSpec, ConformalMap), ChainError> {
        Ok((self.with_driving(self.u.shifted(s)?), self.automorphism(s)))
    }
}

/// Evaluates the chain's field and its pole geometry.
pub(crate) struct Engine {
    domain: CanonicalDomain,
    flow: Flow,
    b: SlitField,
    disk_b: Option<HerglotzSlitForm>,
    to_disk: ConformalMap,
    from_disk: ConformalMap,
    has_pole: bool,
    opts: SolverOptions,
}

impl Engine {
    pub(crate) fn new(spec: &ChainSpec, opts: SolverOptions) -> Self {
        let domain = spec.domain();
        Engine {
            domain,
            flow: Flow::new(&spec.sigma),
            b: spec.b,
            disk_b: (domain == CanonicalDomain::Disk).then(|| spec.b.to_herglotz()),
            to_disk: domain.to_disk(),
            from_disk: domain.from_disk(),
            has_pole: spec.b.has_pole(),
            opts,
        }
    }

    fn h_jet(&self, u: f64, z: Complex64) -> Jet {
        let m = self.flow.at(u);
        match self.domain {
            CanonicalDomain::Disk => m.jet(z),
            _ => {
                let j = self.to_disk.jet(z);
                let j = j.then(m.jet(j.value));
                j.then(self.from_disk.jet(j.value))
            }
        }
    }

    fn b_eval(&self, z: Complex64) -> Result<(Complex64, Complex64), FieldError> {
        match &self.disk_b {
            Some(h) => Ok((h.value(z)?, h.derivative(z)?)),
            None => Ok((self.b.value(z)?, self.b.derivative(z)?)),
        }
    }

    /// `V(t, z)` and `∂_z V(t, z)` for driving value `u`.
    pub(crate) fn field(&self, u: f64, z: Complex64) -> Result<(Complex64, Complex64), FieldError> {
        let j = self.h_jet(u, z);
        let (b, db) = self.b_eval(j.value)?;
        let v = b / j.d1;
        let dv = db - b * j.d2 / (j.d1 * j.d1);
        if v.re.is_finite() && v.im.is_finite() && dv.re.is_finite() && dv.im.is_finite() {
            Ok((v, dv))
        } else {
            Err(FieldError::Pole(z))
        }
    }

    fn pole_disk(&self, u: f64) -> Complex64 {
        self.flow.at(-u).eval(ONE)
    }

    /// Disk-metric distance to the pole and the disk-coordinate stretch at `z`.
    fn pole_geometry(&self, u: f64, z: Complex64) -> (f64, f64) {
        if !self.has_pole {
            return (f64::INFINITY, 1.0);
        }
        let j = match self.domain {
            CanonicalDomain::Disk => Jet::identity(z),
            _ => self.to_disk.jet(z),
        };
        ((j.value - self.pole_disk(u)).norm(), j.d1.norm())
    }

    fn dead(&self, u: f64, z: Complex64) -> bool {
        if !self.domain.contains_closed(z, DOMAIN_SLACK) {
            return true;
        }
        self.pole_geometry(u, z).0 < self.opts.blowup_radius
    }

    fn cap(&self, u: f64, z: Complex64, speed: f64) -> f64 {
        let (dist, stretch) = self.pole_geometry(u, z);
        if !dist.is_finite() || speed == 0.0 {
            return f64::INFINITY;
        }
        self.opts.pole_cap * dist / (stretch * speed)
    }
}

/// One trajectory of `g_t(z)` (and optionally `g_t'(z)`) sampled at the
/// driving samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    /// `g_t'(z)` at the same times, when requested.
    pub derivatives: Option<Vec<Complex64>>,
    pub explosion: Option<f64>,
    pub error_estimate: f64,
}

impl Trajectory {
    pub fn last(&self) -> Complex64 {
        *self.values.last().expect("trajectory has its initial point")
    }
}

fn segment_ends(u: &DrivingPath, from: f64, to: f64) -> Vec<f64> {
    let mut ends = u.knots_between(from, to);
    ends.push(to);
    ends
}

/// Integrates one point of the chain between `t0` and `t1` (either order),
/// optionally with the variational equation, recording at segment ends.
pub(crate) fn integrate(
    engine: &Engine,
    u: &DrivingPath,
    z0: Complex64,
    t0: f64,
    t1: f64,
    with_derivative: bool,
    record: bool,
) -> Trajectory {
    let mut ode = Dopri5::new(engine.opts.ode());
    let mut traj = Trajectory {
        times: vec![t0],
        values: vec![z0],
        derivatives: with_derivative.then(|| vec![ONE]),
        explosion: None,
        error_estimate: 0.0,
    };
    let mut y = [z0, ONE];
    let mut t = t0;
    for end in segment_ends(u, t0, t1) {
        let (ua, ub) = (u.value_at(t), u.value_at(end));
        let (ta, tb) = (t, end);
        let drive = move |s: f64| if tb == ta { ua } else { ua + (ub - ua) * (s - ta) / (tb - ta) };
        let outcome = if with_derivative {
            ode.advance(
                t,
                end,
                y,
                &mut |s, y: &[Complex64; 2]| {
                    let (v, dv) = engine.field(drive(s), y[0]).ok()?;
                    Some([-v, -dv * y[1]])
                },
                &mut |s, y, k| engine.cap(drive(s), y[0], k[0].norm()),
                &mut |s, y| engine.dead(drive(s), y[0]),
            )
        } else {
            let out = ode.advance(
                t,
                end,
                [y[0]],
                &mut |s, y: &[Complex64; 1]| {
                    let (v, _) = engine.field(drive(s), y[0]).ok()?;
                    Some([-v])
                },
                &mut |s, y, k| engine.cap(drive(s), y[0], k[0].norm()),
                &mut |s, y| engine.dead(drive(s), y[0]),
            );
            match out {
                Outcome::Reached(v) => Outcome::Reached([v[0], ONE]),
                Outcome::Stopped { t, y } => Outcome::Stopped { t, y: [y[0], ONE] },
                Outcome::Underflow { t, y } => Outcome::Underflow { t, y: [y[0], ONE] },
            }
        };
        match outcome {
            Outcome::Reached(next) => {
                y = next;
                t = end;
                if record || end == t1 {
                    traj.times.push(end);
                    traj.values.push(y[0]);
                    if let Some(d) = traj.derivatives.as_mut() {
                        d.push(y[1]);
                    }
                }
            }
            Outcome::Stopped { t: te, .. } | Outcome::Underflow { t: te, .. } => {
                traj.explosion = Some(te);
                break;
            }
        }
    }
    traj.error_estimate = ode.error_sum;
    traj
}

/// Per-point outcome of [`evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub initial: Vec<Complex64>,
    /// `g_T(z)` for survivors; the last computed value for dead points.
    pub values: Vec<Complex64>,
    pub alive: Vec<bool>,
    /// Explosion time, `+∞` for survivors.
    pub explosion_times: Vec<f64>,
    pub time: f64,
    /// Accumulated local error estimates per point.
    pub error_estimates: Vec<f64>,
}

impl ChainState {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["re0", "im0", "alive", "T_explode", "re", "im"])?;
        for i in 0..self.initial.len() {
            wr.write_record([
                format!("{:.15e}", self.initial[i].re),
                format!("{:.15e}", self.initial[i].im),
                (self.alive[i] as u8).to_string(),
                if self.explosion_times[i].is_finite() { format!("{:.15e}", self.explosion_times[i]) } else { "inf".into() },
                format!("{:.15e}", self.values[i].re),
                format!("{:.15e}", self.values[i].im),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn check_time(spec: &ChainSpec, t: f64) -> Result<(), ChainError> {
    if !(t >= 0.0) || t > spec.horizon() * (1.0 + 1e-12) {
        return Err(ChainError::BeyondHorizon { t, horizon: spec.horizon() });
    }
    Ok(())
}

/// Evolves every point to time `horizon` or its explosion.
pub fn evolve(spec: &ChainSpec, points: &[Complex64], horizon: f64, opts: SolverOptions) -> Result<ChainState, ChainError> {
    check_time(spec, horizon)?;
    if let Some(&z) = points.iter().find(|z| !spec.domain().contains(**z)) {
        return Err(ChainError::NotInterior(z));
    }
    let engine = Engine::new(spec, opts);
    let runs: Vec<Trajectory> = points.par_iter().map(|&z| integrate(&engine, &spec.u, z, 0.0, horizon, false, false)).collect();
    Ok(ChainState {
        initial: points.to_vec(),
        values: runs.iter().map(Trajectory::last).collect(),
        alive: runs.iter().map(|r| r.explosion.is_none()).collect(),
        explosion_times: runs.iter().map(|r| r.explosion.unwrap_or(f64::INFINITY)).collect(),
        time: horizon,
        error_estimates: runs.iter().map(|r| r.error_estimate).collect(),
    })
}

/// `g_t(z)` (and `g_t'(z)` if requested) at every driving sample up to `horizon`.
pub fn trajectory(spec: &ChainSpec, z: Complex64, horizon: f64, with_derivative: bool, opts: SolverOptions) -> Result<Trajectory, ChainError> {
    check_time(spec, horizon)?;
    if !spec.domain().contains(z) {
        return Err(ChainError::NotInterior(z));
    }
    Ok(integrate(&Engine::new(spec, opts), &spec.u, z, 0.0, horizon, with_derivative, true))
}

/// `V(t, z)`.
pub fn herglotz_field(spec: &ChainSpec, t: f64, z: Complex64) -> Result<Complex64, ChainError> {
    Ok(Engine::new(spec, SolverOptions::default()).field(spec.u.value_at(t), z)?.0)
}

/// `g_t'(z)` from the variational equation.
pub fn derivative_at(spec: &ChainSpec, z: Complex64, t: f64, opts: SolverOptions) -> Result<Complex64, ChainError> {
    let tr = trajectory(spec, z, t, true, opts)?;
    if let Some(time) = tr.explosion {
        return Err(ChainError::Exploded { z, time });
    }
    Ok(*tr.derivatives.expect("requested").last().expect("non-empty"))
}

/// `(1 − |g_t(0)|²)/|g_t'(0)|`, the Schwarz–Pick ratio of `g_t^{-1}` at
/// `g_t(0)`, computed on the disk model of the chain.
pub fn schwarz_pick_ratio(spec: &ChainSpec, t: f64, opts: SolverOptions) -> Result<f64, ChainError> {
    let disk = spec.in_domain(CanonicalDomain::Disk);
    let tr = trajectory(&disk, Complex64::new(0.0, 0.0), t, true, opts)?;
    if let Some(time) = tr.explosion {
        return Err(ChainError::Exploded { z: Complex64::new(0.0, 0.0), time });
    }
    let g = tr.last();
    let dg = *tr.derivatives.expect("requested").last().expect("non-empty");
    Ok((1.0 - g.norm_sqr()) / dg.norm())
}

/// Tip samples `γ(t) ≈ g_t^{-1}(w_ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub times: Vec<f64>,
    pub tips: Vec<Complex64>,
    pub epsilon: f64,
    /// Sample times whose backward integration failed.
    pub failures: Vec<f64>,
}

impl Trace {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "re", "im"])?;
        for (t, z) in self.times.iter().zip(&self.tips) {
            wr.write_record([format!("{t:.15e}"), format!("{:.15e}", z.re), format!("{:.15e}", z.im)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Backward-flow tip of the hull at time `t`.
pub(crate) fn tip(engine: &Engine, u: &DrivingPath, t: f64, epsilon: f64) -> Option<Complex64> {
    let start_disk = (1.0 - epsilon) * engine.pole_disk(u.value_at(t));
    let start = engine.from_disk.apply(start_disk);
    if t == 0.0 {
        return Some(start);
    }
    let run = integrate(engine, u, start, t, 0.0, false, false);
    run.explosion.is_none().then(|| run.last())
}

/// Samples the trace every `sample_dt` up to `horizon`, with interior offset `epsilon`.
pub fn trace(spec: &ChainSpec, horizon: f64, sample_dt: f64, epsilon: f64, opts: SolverOptions) -> Result<Trace, ChainError> {
    check_time(spec, horizon)?;
    trace_at(spec, &uniform_grid(sample_dt, horizon)?, epsilon, opts)
}

/// Trace samples at the given times.
pub fn trace_at(spec: &ChainSpec, times: &[f64], epsilon: f64, opts: SolverOptions) -> Result<Trace, ChainError> {
    if !(epsilon > 0.0 && epsilon < 0.1) {
        return Err(ChainError::BadEpsilon(epsilon));
    }
    for &t in times {
        check_time(spec, t)?;
    }
    let engine = Engine::new(spec, opts);
    let tips: Vec<Option<Complex64>> = times.par_iter().map(|&t| tip(&engine, &spec.u, t, epsilon)).collect();
    let mut out = Trace { times: Vec::new(), tips: Vec::new(), epsilon, failures: Vec::new() };
    for (&t, z) in times.iter().zip(tips) {
        match z {
            Some(z) => {
                out.times.push(t);
                out.tips.push(z);
            }
            None => out.failures.push(t),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn chordal_h(u: DrivingPath) -> ChainSpec {
        ChainSpec::new(
            SlitField::new([2.0, 0.0, 0.0, 0.0], CanonicalDomain::HalfPlane).unwrap(),
            CompleteField::new([1.0, 0.0, 0.0], CanonicalDomain::HalfPlane),
            u,
        )
        .unwrap()
    }

    fn radial_d(u: DrivingPath) -> ChainSpec {
        ChainSpec::new(
            SlitField::new([2.0, 0.0, 0.5, 0.0], CanonicalDomain::Disk).unwrap(),
            CompleteField::new([1.0, 0.0, 0.25], CanonicalDomain::Disk),
            u,
        )
        .unwrap()
    }

    fn abp(u: DrivingPath) -> ChainSpec {
        ChainSpec::new(
            SlitField::new([2.0, 0.0, 0.0, 0.0], CanonicalDomain::Disk).unwrap(),
            CompleteField::new([1.0, 0.0, 0.25], CanonicalDomain::Disk),
            u,
        )
        .unwrap()
    }

    #[test]
    fn spec_validation() {
        let u = DrivingPath::zero(0.1, 1.0).unwrap();
        let b = SlitField::new([2.0, 0.0, 0.0, 0.0], CanonicalDomain::Disk).unwrap();
        assert!(matches!(
            ChainSpec::new(b, CompleteField::new([0.0, 1.0, 0.0], CanonicalDomain::Disk), u.clone()),
            Err(ChainError::DegenerateSigma)
        ));
        assert!(matches!(
            ChainSpec::new(b, CompleteField::new([1.0, 0.0, 0.0], CanonicalDomain::HalfPlane), u),
            Err(ChainError::DomainMismatch { .. })
        ));
    }

    #[test]
    fn field_reference_forms() {
        let u = DrivingPath::from_fn(|t| 0.7 * t.sin(), 0.01, 2.0).unwrap();
        let ch = chordal_h(u.clone());
        let ab = abp(u.clone());
        for t in [0.0, 0.4, 1.3] {
            let ut = u.value_at(t);
            for z in [c(0.3, 0.5), c(-1.0, 2.0)] {
                let want = -2.0 / (z - ut);
                assert!((herglotz_field(&ch, t, z).unwrap() - want).norm() < 1e-12);
            }
            for z in [c(0.3, 0.5), c(-0.2, -0.4)] {
                let e = Complex64::from_polar(1.0, ut);
                let want = -(e + z).powi(3) / (4.0 * e * (e - z));
                assert!((herglotz_field(&ab, t, z).unwrap() - want).norm() < 1e-12);
            }
        }
        let zero = abp(DrivingPath::zero(0.1, 1.0).unwrap());
        let z = c(0.1, 0.2);
        assert!((herglotz_field(&zero, 0.5, z).unwrap() - zero.b().value(z).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn field_derivative_matches_difference() {
        let u = DrivingPath::from_fn(|t| 0.7 * t.sin(), 0.01, 2.0).unwrap();
        for spec in [chordal_h(u.clone()), abp(u.clone()), abp(u.clone()).in_domain(CanonicalDomain::Strip)] {
            let engine = Engine::new(&spec, SolverOptions::default());
            let z = match spec.domain() {
                CanonicalDomain::Disk => c(0.2, 0.3),
                _ => c(0.4, 1.1),
            };
            let h = 1e-6;
            let fd = (engine.field(0.5, z + h).unwrap().0 - engine.field(0.5, z - h).unwrap().0) / (2.0 * h);
            let an = engine.field(0.5, z).unwrap().1;
            assert!((fd - an).norm() < 1e-6 * (1.0 + an.norm()));
        }
    }

    #[test]
    fn chordal_closed_form_and_explosion() {
        let spec = chordal_h(DrivingPath::zero(0.01, 1.0).unwrap());
        let z = c(1.0, 1.0);
        let st = evolve(&spec, &[z, c(0.0, 1.0)], 1.0, SolverOptions::default()).unwrap();
        assert!((st.values[0] - (z * z + 4.0).sqrt()).norm() < 1e-8);
        assert!(st.alive[0] && !st.alive[1]);
        assert!((st.explosion_times[1] - 0.25).abs() < 1e-9);
        let d = derivative_at(&spec, c(0.0, 3.0), 1.0, SolverOptions::default()).unwrap();
        assert!((d - c(3.0 / 5f64.sqrt(), 0.0)).norm() < 1e-8);
        assert_eq!(derivative_at(&spec, z, 0.0, SolverOptions::default()).unwrap(), ONE);
    }

    #[test]
    fn radial_fixes_origin() {
        let spec = radial_d(DrivingPath::zero(0.01, 2.0).unwrap());
        let st = evolve(&spec, &[c(0.0, 0.0)], 2.0, SolverOptions::default()).unwrap();
        assert!(st.alive[0] && st.values[0].norm() < 1e-14);
        let d = derivative_at(&spec, c(0.0, 0.0), 1.0, SolverOptions::default()).unwrap();
        assert!((d - c(1f64.exp(), 0.0)).norm() < 1e-8);
        let beta = schwarz_pick_ratio(&spec, 1.0, SolverOptions::default()).unwrap();
        assert!((beta - (-1f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn chordal_trace_is_vertical_slit() {
        let spec = chordal_h(DrivingPath::zero(0.01, 1.0).unwrap());
        let tr = trace(&spec, 1.0, 0.1, 1e-3, SolverOptions::default()).unwrap();
        assert!(tr.failures.is_empty(), "{:?}", tr.failures);
        for (t, z) in tr.times.iter().zip(&tr.tips) {
            assert!((z - c(0.0, (4.0 * t + 1.0005e-3f64.powi(2)).sqrt())).norm() < 1e-7, "t={t} z={z}");
        }
    }

    #[test]
    fn radial_trace_on_real_axis() {
        let spec = radial_d(DrivingPath::zero(0.01, 1.0).unwrap());
        let tr = trace(&spec, 1.0, 0.1, 1e-3, SolverOptions::default()).unwrap();
        for w in tr.tips.windows(2) {
            assert!(w[0].im.abs() < 1e-9 && w[1].re < w[0].re && w[1].re > 0.0);
        }
        assert!((tr.tips[0] - ONE).norm() < 2e-3);
    }

    #[test]
    fn restart_composes() {
        let u = DrivingPath::from_fn(|t| 0.4 * t.sin(), 1e-3, 0.8).unwrap();
        let spec = abp(u);
        let (s, t) = (0.3, 0.8);
        let pts = [c(0.1, 0.2), c(-0.5, 0.1), c(0.0, -0.6)];
        let direct = evolve(&spec, &pts, t, SolverOptions::default()).unwrap();
        let first = evolve(&spec, &pts, s, SolverOptions::default()).unwrap();
        let (shifted, h) = spec.restarted(s).unwrap();
        let moved: Vec<_> = first.values.iter().map(|&w| h.apply(w)).collect();
        let second = evolve(&shifted, &moved, t - s, SolverOptions::default()).unwrap();
        for i in 0..pts.len() {
            assert!(direct.alive[i] && second.alive[i]);
            assert!((h.inverse().apply(second.values[i]) - direct.values[i]).norm() < 1e-8);
        }
    }
}
