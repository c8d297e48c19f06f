//! Elementary transformations of triples `(b, σ, u)` and normalization to
//! `b₋₂ = 2`, `σ₋₁ = 1`, `−2b₋₁/b₋₂ + 3σ₀/σ₋₁ = 0`.
//!
//! | kind | fields | driver | chain |
//! |------|--------|--------|-------|
//! | `V_c` | `σ ↦ cσ` | `u ↦ u/c` | unchanged |
//! | `T_c` | `b ↦ cb` | `u_t ↦ u_{ct}` | `g_t ↦ g_{ct}` |
//! | `D_c` | `b ↦ b + cσ` | `u_t ↦ u_t + ct` | `g_t ↦ h_{−ct} ∘ g_t` |
//! | `R_c` | push by `r_c` (flow of `ℓ₁`) | unchanged | `r_c ∘ g_t ∘ r_c⁻¹` |
//! | `S_c` | push by `s_c` (flow of `ℓ₀`) | unchanged | `s_c ∘ g_t ∘ s_c⁻¹` |
//! | `S⁰_c` | `V_{e^c} T_{e^{2c}} S_c` | `u_t ↦ e^{−c} u_{e^{2c}t}` | `s_c ∘ g_{e^{2c}t} ∘ s_c⁻¹` |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autoflow::Flow;
use crate::chain::{ChainError, ChainSpec};
use crate::conformal::{conjugate_into, CanonicalDomain, ConformalMap};
use crate::driving::{DrivingError, DrivingPath};
use crate::fields::{CompleteField, FieldError, SlitField};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("{kind:?} needs {requirement}, got c={c}")]
    Constraint { kind: TransformKind, c: f64, requirement: &'static str },
    #[error("normalization needs sigma_-1 != 0")]
    DegenerateSigma,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Driving(#[from] DrivingError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransformKind {
    V,
    T,
    D,
    R,
    S,
    S0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementaryTransform {
    pub kind: TransformKind,
    pub c: f64,
}

impl ElementaryTransform {
    pub fn new(kind: TransformKind, c: f64) -> Result<Self, TransformError> {
        let t = ElementaryTransform { kind, c };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<(), TransformError> {
        let bad = |requirement| Err(TransformError::Constraint { kind: self.kind, c: self.c, requirement });
        if !self.c.is_finite() {
            return bad("a finite parameter");
        }
        match self.kind {
            TransformKind::V if self.c == 0.0 => bad("c != 0"),
            TransformKind::T if self.c <= 0.0 => bad("c > 0"),
            _ => Ok(()),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self.kind {
            TransformKind::V | TransformKind::T => self.c == 1.0,
            _ => self.c == 0.0,
        }
    }

    /// New `(b, σ)` coefficients.
    pub fn apply_fields(&self, b: SlitField, sigma: CompleteField) -> Result<(SlitField, CompleteField), TransformError> {
        self.validate()?;
        let c = self.c;
        let [bm2, bm1, b0, b1] = b.coeffs();
        let [sm1, s0, s1] = sigma.coeffs();
        let (nb, ns) = match self.kind {
            TransformKind::V => (b.coeffs(), [c * sm1, c * s0, c * s1]),
            TransformKind::T => ([c * bm2, c * bm1, c * b0, c * b1], sigma.coeffs()),
            TransformKind::D => ([bm2, bm1 + c * sm1, b0 + c * s0, b1 + c * s1], sigma.coeffs()),
            TransformKind::R => (
                [
                    bm2,
                    bm1 - 3.0 * c * bm2,
                    b0 - 2.0 * c * bm1 + 3.0 * c * c * bm2,
                    b1 - c * b0 + c * c * bm1 - c.powi(3) * bm2,
                ],
                [sm1, s0 - 2.0 * c * sm1, s1 - c * s0 + c * c * sm1],
            ),
            TransformKind::S => {
                let e = c.exp();
                ([bm2 / (e * e), bm1 / e, b0, e * b1], [sm1 / e, s0, e * s1])
            }
            TransformKind::S0 => {
                let e = c.exp();
                ([bm2, e * bm1, e * e * b0, e.powi(3) * b1], [sm1, e * s0, e * e * s1])
            }
        };
        Ok((SlitField::new(nb, b.domain())?, CompleteField::new(ns, sigma.domain)))
    }

    /// New driving path; time changes resample at the path's nominal spacing.
    pub fn apply_driving(&self, u: &DrivingPath) -> Result<DrivingPath, TransformError> {
        self.validate()?;
        if self.is_identity() {
            return Ok(u.clone());
        }
        let c = self.c;
        Ok(match self.kind {
            TransformKind::V => u.affine(1.0 / c, 0.0),
            TransformKind::T => u.time_changed(c, 1.0, 0.0, u.nominal_dt())?,
            TransformKind::D => u.affine(1.0, c),
            TransformKind::R | TransformKind::S => u.clone(),
            TransformKind::S0 => u.time_changed((2.0 * c).exp(), (-c).exp(), 0.0, u.nominal_dt())?,
        })
    }

    pub fn apply(&self, spec: &ChainSpec) -> Result<ChainSpec, TransformError> {
        let (b, sigma) = self.apply_fields(*spec.b(), *spec.sigma())?;
        Ok(ChainSpec::new(b, sigma, self.apply_driving(spec.driving())?)?)
    }

    /// The conjugating map for `R_c`, `S_c` and `S⁰_c` in `domain`.
    pub fn conjugator(&self, domain: CanonicalDomain) -> Option<ConformalMap> {
        let generator = match self.kind {
            TransformKind::R => [0.0, 0.0, 1.0],
            TransformKind::S | TransformKind::S0 => [0.0, 1.0, 0.0],
            _ => return None,
        };
        Some(conjugate_into(domain, Flow::new(&CompleteField::new(generator, CanonicalDomain::Disk)).at(self.c)))
    }
}

/// Applies transforms first to last.
pub fn apply_all(transforms: &[ElementaryTransform], spec: &ChainSpec) -> Result<ChainSpec, TransformError> {
    transforms.iter().try_fold(spec.clone(), |s, t| t.apply(&s))
}

/// Values of the three normalization conditions, zero when normalized:
/// `b₋₂ − 2`, `σ₋₁ − 1`, `−2b₋₁/b₋₂ + 3σ₀/σ₋₁`.
pub fn normalization_residuals(b: &SlitField, sigma: &CompleteField) -> [f64; 3] {
    let [bm2, bm1, ..] = b.coeffs();
    let [sm1, s0, _] = sigma.coeffs();
    [bm2 - 2.0, sm1 - 1.0, -2.0 * bm1 / bm2 + 3.0 * s0 / sm1]
}

/// `V_{1/σ₋₁}`, `T_{2/b₋₂}` and the `D_c` that then zeroes the third condition.
pub fn normalizing_transforms(b: &SlitField, sigma: &CompleteField) -> Result<[ElementaryTransform; 3], TransformError> {
    let [sm1, ..] = sigma.coeffs();
    if sm1 == 0.0 {
        return Err(TransformError::DegenerateSigma);
    }
    let v = ElementaryTransform::new(TransformKind::V, 1.0 / sm1)?;
    let t = ElementaryTransform::new(TransformKind::T, 2.0 / b.b_m2())?;
    let (b1, s1) = v.apply_fields(*b, *sigma)?;
    let (b2, s2) = t.apply_fields(b1, s1)?;
    let [bm2, bm1, ..] = b2.coeffs();
    let [sm1, s0, _] = s2.coeffs();
    let d = ElementaryTransform::new(TransformKind::D, (1.5 * bm2 * s0 - bm1) / sm1)?;
    Ok([v, t, d])
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationRecord {
    pub applied: Vec<ElementaryTransform>,
    pub spec: ChainSpec,
    /// `(κ̃, μ̃)` when the input was a Brownian driver with drift.
    pub stochastic: Option<(f64, f64)>,
}

pub fn normalize(spec: &ChainSpec) -> Result<NormalizationRecord, TransformError> {
    let applied = normalizing_transforms(spec.b(), spec.sigma())?.to_vec();
    Ok(NormalizationRecord { spec: apply_all(&applied, spec)?, applied, stochastic: None })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticNormalization {
    pub b: SlitField,
    pub sigma: CompleteField,
    pub kappa: f64,
    pub mu: f64,
    pub applied: [ElementaryTransform; 3],
}

/// Normalizes `(b, σ)` for the driver `√κ B_t + μt`; by Brownian scaling the
/// result is driven by `√κ̃ B̃_t + μ̃t`.
pub fn normalize_stochastic(b: SlitField, sigma: CompleteField, kappa: f64, mu: f64) -> Result<StochasticNormalization, TransformError> {
    let applied = normalizing_transforms(&b, &sigma)?;
    let (mut nb, mut ns) = (b, sigma);
    for t in &applied {
        (nb, ns) = t.apply_fields(nb, ns)?;
    }
    let sm1 = sigma.sigma_m1;
    let bm2 = b.b_m2();
    Ok(StochasticNormalization {
        b: nb,
        sigma: ns,
        kappa: kappa * 2.0 * sm1 * sm1 / bm2,
        mu: 2.0 * sm1 / bm2 * mu + applied[2].c,
        applied,
    })
}
