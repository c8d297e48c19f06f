//! Driving paths: sampled continuous real functions with `u₀ = 0`, evaluated
//! through their piecewise-linear interpolant.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DrivingError {
    #[error("driving path needs at least two samples")]
    TooShort,
    #[error("times and values differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("times must start at 0 and increase strictly (problem at index {0})")]
    BadTimes(usize),
    #[error("driving path must start at u=0, got {0}")]
    NonzeroStart(f64),
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("time {t} lies outside the path horizon {horizon}")]
    OutOfRange { t: f64, horizon: f64 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Seed and stream index of a reproducible Brownian path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSeed {
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl RandomSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        RandomSeed { seed, stream }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        RandomSeed { stream, ..self }
    }
}

/// Words of generator output reserved per step; a standard normal rarely
/// needs more than two.
const WORDS_PER_STEP: u128 = 16;

/// Standard normals `Z_start, …, Z_{start+count−1}` of the stream. Each `Z_i`
/// depends only on `(seed, stream, i)`.
pub fn standard_normals(seed: RandomSeed, start: u64, count: usize) -> Vec<f64> {
    let mut base = ChaCha8Rng::seed_from_u64(seed.seed);
    base.set_stream(seed.stream);
    (0..count as u64)
        .map(|k| {
            base.set_word_pos(u128::from(start + k) * WORDS_PER_STEP);
            base.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

/// Uniform grid `0, dt, 2dt, …` ending exactly at `horizon`.
pub fn uniform_grid(dt: f64, horizon: f64) -> Result<Vec<f64>, DrivingError> {
    if !(dt > 0.0 && horizon > 0.0 && dt.is_finite() && horizon.is_finite()) {
        return Err(DrivingError::Parameter(format!("need dt > 0 and T > 0, got dt={dt}, T={horizon}")));
    }
    let n = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((0..=n).map(|i| if i == n { horizon } else { i as f64 * dt }).collect())
}

impl DrivingPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, DrivingError> {
        if times.len() != values.len() {
            return Err(DrivingError::LengthMismatch(times.len(), values.len()));
        }
        if times.len() < 2 {
            return Err(DrivingError::TooShort);
        }
        if let Some(i) = times.iter().chain(values.iter()).position(|x| !x.is_finite()) {
            return Err(DrivingError::NonFinite(i % times.len()));
        }
        if times[0] != 0.0 {
            return Err(DrivingError::BadTimes(0));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(DrivingError::BadTimes(i + 1));
        }
        if values[0] != 0.0 {
            return Err(DrivingError::NonzeroStart(values[0]));
        }
        Ok(DrivingPath { times, values })
    }

    /// Samples `f` on a uniform grid; `f(0)` is subtracted.
    pub fn from_fn(f: impl Fn(f64) -> f64, dt: f64, horizon: f64) -> Result<Self, DrivingError> {
        let times = uniform_grid(dt, horizon)?;
        let f0 = f(0.0);
        let values = times.iter().map(|&t| f(t) - f0).collect();
        Self::new(times, values)
    }

    pub fn zero(dt: f64, horizon: f64) -> Result<Self, DrivingError> {
        Self::from_fn(|_| 0.0, dt, horizon)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("validated path")
    }

    /// Spacing of the first interval; the grid spacing for uniform paths.
    pub fn nominal_dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Index `i` of the interval `[t_i, t_{i+1}]` containing `t`, clamped.
    pub fn segment(&self, t: f64) -> usize {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i.min(self.times.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.times.len() - 2),
        }
    }

    /// Linear interpolant; constant extrapolation beyond the samples.
    pub fn value_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= self.horizon() {
            return *self.values.last().expect("validated path");
        }
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    /// Sample times in `(from, to)` in order of travel, for splitting an
    /// integration into pieces that never cross a sample.
    pub fn knots_between(&self, from: f64, to: f64) -> Vec<f64> {
        let (lo, hi) = if from <= to { (from, to) } else { (to, from) };
        // Knots within rounding of an end point would only create empty segments.
        let pad = 1e-12 * (1.0 + hi.abs());
        let start = self.times.partition_point(|&x| x <= lo + pad);
        let end = self.times.partition_point(|&x| x < hi - pad);
        let mut k: Vec<f64> = self.times[start..end.max(start)].to_vec();
        if from > to {
            k.reverse();
        }
        k
    }

    /// `τ ↦ u_{s+τ} − u_s` on the samples after `s`.
    pub fn shifted(&self, s: f64) -> Result<Self, DrivingError> {
        if !(0.0..self.horizon()).contains(&s) {
            return Err(DrivingError::OutOfRange { t: s, horizon: self.horizon() });
        }
        let us = self.value_at(s);
        let mut times = vec![0.0];
        let mut values = vec![0.0];
        for (&t, &u) in self.times.iter().zip(&self.values) {
            if t > s + 1e-12 * (1.0 + s) {
                times.push(t - s);
                values.push(u - us);
            }
        }
        Self::new(times, values)
    }

    /// `t ↦ scale·u_{c·t} + drift·t` sampled on a uniform grid of spacing
    /// `dt` over `[0, horizon/c]`.
    pub fn time_changed(&self, c: f64, scale: f64, drift: f64, dt: f64) -> Result<Self, DrivingError> {
        if !(c > 0.0) {
            return Err(DrivingError::Parameter(format!("time change needs c > 0, got {c}")));
        }
        let times = uniform_grid(dt, self.horizon() / c)?;
        let values = times.iter().map(|&t| scale * self.value_at((c * t).min(self.horizon())) + drift * t).collect();
        Self::new(times, values)
    }

    /// `t ↦ scale·u_t + drift·t` on the same samples.
    pub fn affine(&self, scale: f64, drift: f64) -> Self {
        let values = self.times.iter().zip(&self.values).map(|(&t, &u)| scale * u + drift * t).collect();
        DrivingPath { times: self.times.clone(), values }
    }

    /// Every `factor`-th sample (and the last).
    pub fn coarsened(&self, factor: usize) -> Result<Self, DrivingError> {
        if factor == 0 {
            return Err(DrivingError::Parameter("coarsening factor must be positive".into()));
        }
        let n = self.times.len();
        let mut idx: Vec<usize> = (0..n).step_by(factor).collect();
        if *idx.last().expect("non-empty") != n - 1 {
            idx.push(n - 1);
        }
        Self::new(idx.iter().map(|&i| self.times[i]).collect(), idx.iter().map(|&i| self.values[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DrivingError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "u"])?;
        for (t, u) in self.times.iter().zip(&self.values) {
            wr.write_record([format!("{t:.17e}"), format!("{u:.17e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, DrivingError> {
        #[derive(Deserialize)]
        struct Row {
            t: f64,
            u: f64,
        }
        let mut rd = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for row in rd.deserialize() {
            let row: Row = row?;
            times.push(row.t);
            values.push(row.u);
        }
        Self::new(times, values)
    }

    pub fn load(path: &Path) -> Result<Self, DrivingError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// `√κ·B_t` on a uniform grid from the counter-based normal stream.
pub fn brownian_path(kappa: f64, dt: f64, horizon: f64, seed: RandomSeed) -> Result<DrivingPath, DrivingError> {
    if !(kappa >= 0.0) {
        return Err(DrivingError::Parameter(format!("kappa must be >= 0, got {kappa}")));
    }
    let times = uniform_grid(dt, horizon)?;
    let z = standard_normals(seed, 0, times.len() - 1);
    let mut values = Vec::with_capacity(times.len());
    values.push(0.0);
    let mut u = 0.0;
    for (w, zi) in times.windows(2).zip(z) {
        u += (kappa * (w[1] - w[0])).sqrt() * zi;
        values.push(u);
    }
    DrivingPath::new(times, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeterministicKind {
    Constant0,
    Linear { mu: f64 },
    Sqrt { c: f64 },
    /// `c√t` with `c` chosen so the trace leaves the boundary at angle `theta`.
    TangentAngle { theta: f64 },
}

/// Coefficient `c` of `u_t = c√t` for a trace meeting the boundary at angle `θ`.
pub fn tangent_angle_coefficient(theta: f64) -> Result<f64, DrivingError> {
    use std::f64::consts::PI;
    if !(theta > 0.0 && theta < PI) {
        return Err(DrivingError::Parameter(format!("tangent angle must lie in (0, pi), got {theta}")));
    }
    Ok(2.0 * (PI - 2.0 * theta) / (theta * (PI - theta)).sqrt())
}

pub fn deterministic_path(kind: DeterministicKind, dt: f64, horizon: f64) -> Result<DrivingPath, DrivingError> {
    match kind {
        DeterministicKind::Constant0 => DrivingPath::zero(dt, horizon),
        DeterministicKind::Linear { mu } => DrivingPath::from_fn(|t| mu * t, dt, horizon),
        DeterministicKind::Sqrt { c } => DrivingPath::from_fn(|t| c * t.sqrt(), dt, horizon),
        DeterministicKind::TangentAngle { theta } => {
            let c = tangent_angle_coefficient(theta)?;
            DrivingPath::from_fn(|t| c * t.sqrt(), dt, horizon)
        }
    }
}

/// `max |u_t − u_s| / √|t−s|` over sample pairs with `0 < |t−s| ≤ window`.
pub fn holder_half_seminorm(u: &DrivingPath, window: f64) -> f64 {
    let (t, v) = (u.times(), u.values());
    let mut best = 0.0f64;
    for i in 0..t.len() {
        for j in (i + 1)..t.len() {
            let gap = t[j] - t[i];
            if gap > window {
                break;
            }
            best = best.max((v[j] - v[i]).abs() / gap.sqrt());
        }
    }
    best
}
