//! The basis fields `ℓ_n`, complete and slit fields built from them, their
//! disk normal forms, pushforwards and the sampled semicompleteness test.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::{CanonicalDomain, ConformalMap, DiskAutomorphism};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field has a pole at {0}")]
    Pole(Complex64),
    #[error("basis index {0} is outside -2..=2")]
    BadIndex(i32),
    #[error("slit fields need b_-2 > 0, got {0}")]
    NonPositiveLeading(f64),
    #[error("Herglotz form with gamma {0} does not describe a slit field")]
    NonPositiveGamma(f64),
    #[error("Herglotz form has pole {0}, expected 1")]
    PoleNotMarked(Complex64),
    #[error("coefficient {0} is not finite")]
    NonFinite(f64),
}

fn finite(v: Complex64, z: Complex64) -> Result<Complex64, FieldError> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(FieldError::Pole(z))
    }
}

/// `ℓ_n` in the given domain.
pub fn ell(n: i32, domain: CanonicalDomain, z: Complex64) -> Result<Complex64, FieldError> {
    if !(-2..=2).contains(&n) {
        return Err(FieldError::BadIndex(n));
    }
    let one = Complex64::new(1.0, 0.0);
    let v = match domain {
        CanonicalDomain::HalfPlane => -z.powi(n + 1),
        CanonicalDomain::Disk => {
            let k = -(2f64).powi(n - 1) * (-I).powi(n);
            k * (z - one).powi(n + 1) * (z + one).powi(1 - n)
        }
        CanonicalDomain::Strip => -(2f64).powi(n) * z.sinh() * (z / 2.0).tanh().powi(n),
    };
    finite(v, z)
}

/// Complex derivative of `ℓ_n`.
pub fn ell_derivative(n: i32, domain: CanonicalDomain, z: Complex64) -> Result<Complex64, FieldError> {
    if !(-2..=2).contains(&n) {
        return Err(FieldError::BadIndex(n));
    }
    let one = Complex64::new(1.0, 0.0);
    let v = match domain {
        CanonicalDomain::HalfPlane => -f64::from(n + 1) * z.powi(n),
        CanonicalDomain::Disk => {
            let k = -(2f64).powi(n - 1) * (-I).powi(n);
            let zm = z - one;
            let zp = z + one;
            k * (f64::from(n + 1) * zm.powi(n) * zp.powi(1 - n) + f64::from(1 - n) * zm.powi(n + 1) * zp.powi(-n))
        }
        CanonicalDomain::Strip => -(2f64).powi(n) * (z / 2.0).tanh().powi(n) * (z.cosh() + f64::from(n)),
    };
    finite(v, z)
}

/// A holomorphic vector field evaluated pointwise.
pub trait VectorField {
    fn value(&self, z: Complex64) -> Result<Complex64, FieldError>;

    /// Complex derivative; the default is a central difference.
    fn derivative(&self, z: Complex64) -> Result<Complex64, FieldError> {
        let h = 1e-6 * (1.0 + z.norm());
        Ok((self.value(z + h)? - self.value(z - h)?) / (2.0 * h))
    }
}

impl<F: VectorField + ?Sized> VectorField for &F {
    fn value(&self, z: Complex64) -> Result<Complex64, FieldError> {
        (**self).value(z)
    }
    fn derivative(&self, z: Complex64) -> Result<Complex64, FieldError> {
        (**self).derivative(z)
    }
}

/// Adapts a closure to [`VectorField`].
pub struct FnField<F>(pub F);

impl<F: Fn(Complex64) -> Result<Complex64, FieldError>> VectorField for FnField<F> {
    fn value(&self, z: Complex64) -> Result<Complex64, FieldError> {
        (self.0)(z)
    }
}

/// `σ₋₁ℓ₋₁ + σ₀ℓ₀ + σ₁ℓ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompleteField {
    pub sigma_m1: f64,
    pub sigma_0: f64,
    pub sigma_1: f64,
    pub domain: CanonicalDomain,
}

/// `(a+ib) − icz + (−a+ib)z²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompleteDiskForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CompleteDiskForm {
    /// `α` in `α − iβz − ᾱz²`.
    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.a, self.b)
    }

    /// `β` in `α − iβz − ᾱz²`.
    pub fn beta(&self) -> f64 {
        self.c
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let alpha = self.alpha();
        alpha - I * self.c * z - alpha.conj() * z * z
    }
}

impl CompleteField {
    pub fn new(coeffs: [f64; 3], domain: CanonicalDomain) -> Self {
        CompleteField { sigma_m1: coeffs[0], sigma_0: coeffs[1], sigma_1: coeffs[2], domain }
    }

    pub fn coeffs(&self) -> [f64; 3] {
        [self.sigma_m1, self.sigma_0, self.sigma_1]
    }

    pub fn with_domain(self, domain: CanonicalDomain) -> Self {
        CompleteField { domain, ..self }
    }

    pub fn scaled(self, c: f64) -> Self {
        CompleteField { sigma_m1: c * self.sigma_m1, sigma_0: c * self.sigma_0, sigma_1: c * self.sigma_1, ..self }
    }

    pub fn to_disk_form(&self) -> CompleteDiskForm {
        CompleteDiskForm {
            a: self.sigma_0 / 2.0,
            b: self.sigma_1 - self.sigma_m1 / 4.0,
            c: 2.0 * self.sigma_1 + self.sigma_m1 / 2.0,
        }
    }

    pub fn from_disk_form(form: CompleteDiskForm, domain: CanonicalDomain) -> Self {
        CompleteField {
            sigma_m1: -2.0 * form.b + form.c,
            sigma_0: 2.0 * form.a,
            sigma_1: (2.0 * form.b + form.c) / 4.0,
            domain,
        }
    }
}

impl VectorField for CompleteField {
    fn value(&self, z: Complex64) -> Result<Complex64, FieldError> {
        Ok(self.sigma_m1 * ell(-1, self.domain, z)? + self.sigma_0 * ell(0, self.domain, z)? + self.sigma_1 * ell(1, self.domain, z)?)
    }

    fn derivative(&self, z: Complex64) -> Result<Complex64, FieldError> {
        Ok(self.sigma_m1 * ell_derivative(-1, self.domain, z)?
            + self.sigma_0 * ell_derivative(0, self.domain, z)?
            + self.sigma_1 * ell_derivative(1, self.domain, z)?)
    }
}

/// `b₋₂ℓ₋₂ + b₋₁ℓ₋₁ + b₀ℓ₀ + b₁ℓ₁` with `b₋₂ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlitField {
    b_m2: f64,
    b_m1: f64,
    b_0: f64,
    b_1: f64,
    domain: CanonicalDomain,
}

impl SlitField {
    pub fn new(coeffs: [f64; 4], domain: CanonicalDomain) -> Result<Self, FieldError> {
        if let Some(&bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(FieldError::NonFinite(bad));
        }
        if coeffs[0] <= 0.0 {
            return Err(FieldError::NonPositiveLeading(coeffs[0]));
        }
        Ok(Self::raw(coeffs, domain))
    }

    /// Admits `b₋₂ = 0`, where the field is complete. Diagnostic use only.
    pub fn allowing_complete(coeffs: [f64; 4], domain: CanonicalDomain) -> Result<Self, FieldError> {
        if coeffs[0] < 0.0 {
            return Err(FieldError::NonPositiveLeading(coeffs[0]));
        }
        if let Some(&bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(FieldError::NonFinite(bad));
        }
        Ok(Self::raw(coeffs, domain))
    }

    fn raw(c: [f64; 4], domain: CanonicalDomain) -> Self {
        SlitField { b_m2: c[0], b_m1: c[1], b_0: c[2], b_1: c[3], domain }
    }

    pub fn coeffs(&self) -> [f64; 4] {
        [self.b_m2, self.b_m1, self.b_0, self.b_1]
    }

    pub fn b_m2(&self) -> f64 {
        self.b_m2
    }

    pub fn domain(&self) -> CanonicalDomain {
        self.domain
    }

    pub fn with_domain(self, domain: CanonicalDomain) -> Self {
        SlitField { domain, ..self }
    }

    /// Whether the field is a genuine slit field rather than a complete one.
    pub fn has_pole(&self) -> bool {
        self.b_m2 > 0.0
    }

    pub fn to_herglotz(&self) -> HerglotzSlitForm {
        let gamma = self.b_m2 / 2.0;
        HerglotzSlitForm {
            alpha: Complex64::new((self.b_0 - gamma / 2.0) / 2.0, self.b_1 - self.b_m1 / 4.0),
            beta: self.b_m1 / 2.0 + 2.0 * self.b_1,
            gamma,
            pole: Complex64::new(1.0, 0.0),
        }
    }

    pub fn from_herglotz(h: &HerglotzSlitForm, domain: CanonicalDomain) -> Result<Self, FieldError> {
        if h.gamma <= 0.0 {
            return Err(FieldError::NonPositiveGamma(h.gamma));
        }
        if (h.pole - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(FieldError::PoleNotMarked(h.pole));
        }
        Self::new(
            [
                2.0 * h.gamma,
                h.beta - 2.0 * h.alpha.im,
                h.gamma / 2.0 + 2.0 * h.alpha.re,
                (h.beta + 2.0 * h.alpha.im) / 4.0,
            ],
            domain,
        )
    }
}

impl<'de> Deserialize<'de> for SlitField {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            b_m2: f64,
            b_m1: f64,
            b_0: f64,
            b_1: f64,
            domain: CanonicalDomain,
        }
        let r = Raw::deserialize(de)?;
        SlitField::new([r.b_m2, r.b_m1, r.b_0, r.b_1], r.domain).map_err(serde::de::Error::custom)
    }
}

impl VectorField for SlitField {
    fn value(&self, z: Complex64) -> Result<Complex64, FieldError> {
        let d = self.domain;
        let pole = if self.b_m2 != 0.0 { self.b_m2 * ell(-2, d, z)? } else { Complex64::new(0.0, 0.0) };
        Ok(pole + self.b_m1 * ell(-1, d, z)? + self.b_0 * ell(0, d, z)? + self.b_1 * ell(1, d, z)?)
    }

    fn derivative(&self, z: Complex64) -> Result<Complex64, FieldError> {
        let d = self.domain;
        let pole = if self.b_m2 != 0.0 { self.b_m2 * ell_derivative(-2, d, z)? } else { Complex64::new(0.0, 0.0) };
        Ok(pole + self.b_m1 * ell_derivative(-1, d, z)? + self.b_0 * ell_derivative(0, d, z)? + self.b_1 * ell_derivative(1, d, z)?)
    }
}

/// `α − z(iβ + γ(z₀+z)/(z₀−z)) − ᾱz²` on the disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HerglotzSlitForm {
    pub alpha: Complex64,
    pub beta: f64,
    pub gamma: f64,
    pub pole: Complex64,
}

impl VectorField for HerglotzSlitForm {
    fn value(&self, z: Complex64) -> Result<Complex64, FieldError> {
        let herglotz = if self.gamma != 0.0 { self.gamma * (self.pole + z) / (self.pole - z) } else { Complex64::new(0.0, 0.0) };
        finite(self.alpha - z * (I * self.beta + herglotz) - self.alpha.conj() * z * z, z)
    }

    fn derivative(&self, z: Complex64) -> Result<Complex64, FieldError> {
        let d = self.pole - z;
        let herglotz = if self.gamma != 0.0 {
            self.gamma * ((self.pole + z) / d + z * 2.0 * self.pole / (d * d))
        } else {
            Complex64::new(0.0, 0.0)
        };
        finite(-(I * self.beta) - herglotz - 2.0 * self.alpha.conj() * z, z)
    }
}

/// Herglotz form of `m_* V`: the new pole is `m(z₀)`, `γ` scales by `|m′(z₀)|²`,
/// `α` is the pushforward's value at 0 and `β` is read off its derivative at 0.
pub fn mobius_transform_slit(h: &HerglotzSlitForm, m: &DiskAutomorphism) -> HerglotzSlitForm {
    let a = m.a();
    let va = h.value(a).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let dva = h.derivative(a).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let shrink = 1.0 - a.norm_sqr();
    let alpha = m.rotation_factor() * va / shrink;
    // W'(0) = V'(a) + m''(a)/m'(a)·V(a) and W'(0) = −(iβ̃ + γ̃).
    let w1 = dva + 2.0 * a.conj() * va / shrink;
    HerglotzSlitForm { alpha, beta: -w1.im, gamma: h.gamma * m.derivative(h.pole).norm_sqr(), pole: m.eval(h.pole) }
}

/// `ψ_* V` evaluated as `ψ′(ψ⁻¹(z))·V(ψ⁻¹(z))`.
pub struct Pushforward<F> {
    field: F,
    inverse: ConformalMap,
}

impl<F: VectorField> Pushforward<F> {
    pub fn new(field: F, map: &ConformalMap) -> Self {
        Pushforward { field, inverse: map.inverse() }
    }
}

impl<F: VectorField> VectorField for Pushforward<F> {
    fn value(&self, z: Complex64) -> Result<Complex64, FieldError> {
        let inv = self.inverse.jet(z);
        finite(self.field.value(inv.value)? / inv.d1, z)
    }

    fn derivative(&self, z: Complex64) -> Result<Complex64, FieldError> {
        // W(z) = V(ζ)/ζ' with ζ = m⁻¹(z), so W' = V'(ζ) − V(ζ)ζ''/ζ'².
        let inv = self.inverse.jet(z);
        let v = self.field.value(inv.value)?;
        let dv = self.field.derivative(inv.value)?;
        finite(dv - v * inv.d2 / (inv.d1 * inv.d1), z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemicompleteReport {
    pub semicomplete: bool,
    /// Smallest sampled `Re q`.
    pub min_re_q: f64,
    pub argmin: Complex64,
}

pub const SEMICOMPLETE_TOLERANCE: f64 = -1e-9;

/// Samples `Re q` for `V(z) = V(0) − z q(z) − conj(V(0)) z²` on a polar grid of
/// the disk. Fields in other domains should be pushed to the disk first.
pub fn semicomplete_check(field: &dyn VectorField) -> Result<SemicompleteReport, FieldError> {
    semicomplete_check_grid(field, 64, 32, 0.999)
}

pub fn semicomplete_check_grid(field: &dyn VectorField, radii: usize, angles: usize, r_max: f64) -> Result<SemicompleteReport, FieldError> {
    let v0 = field.value(Complex64::new(0.0, 0.0))?;
    let h = 1e-5;
    let q0 = -(field.value(Complex64::new(h, 0.0))? - field.value(Complex64::new(-h, 0.0))?) / (2.0 * h);
    let mut report = SemicompleteReport { semicomplete: true, min_re_q: q0.re, argmin: Complex64::new(0.0, 0.0) };
    for i in 1..=radii {
        let r = r_max * i as f64 / radii as f64;
        for j in 0..angles {
            let z = Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / angles as f64);
            let q = (v0 - field.value(z)?) / z - v0.conj() * z;
            if q.re < report.min_re_q {
                report.min_re_q = q.re;
                report.argmin = z;
            }
        }
    }
    report.semicomplete = report.min_re_q >= SEMICOMPLETE_TOLERANCE;
    Ok(report)
}

/// Whether a field's disk form is a quadratic `α − iβz − ᾱz²` with real `β`,
/// judged from its Taylor data at 0 and samples on a circle.
pub fn is_complete(field: &dyn VectorField) -> Result<bool, FieldError> {
    let alpha = field.value(Complex64::new(0.0, 0.0))?;
    let d0 = field.derivative(Complex64::new(0.0, 0.0))?;
    if d0.re.abs() > 1e-8 {
        return Ok(false);
    }
    let form = CompleteDiskForm { a: alpha.re, b: alpha.im, c: -d0.im };
    for j in 0..32 {
        let z = Complex64::from_polar(0.9, std::f64::consts::TAU * j as f64 / 32.0);
        if (field.value(z)? - form.eval(z)).norm() > 1e-8 * (1.0 + alpha.norm() + form.c.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::canonical_iso;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disk_points(n: usize) -> Vec<Complex64> {
        (0..n).map(|k| Complex64::from_polar(0.95 * ((k as f64 + 0.5) / n as f64).sqrt(), 2.39996 * k as f64)).collect()
    }

    #[test]
    fn ell_reference_values() {
        assert!((ell(-2, CanonicalDomain::HalfPlane, c(2.0, 0.0)).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((ell(-2, CanonicalDomain::Disk, c(0.0, 0.0)).unwrap() - c(-0.125, 0.0)).norm() < 1e-15);
        for z in disk_points(20) {
            let expect = -(I / 4.0) * (z + 1.0) * (z + 1.0);
            assert!((ell(-1, CanonicalDomain::Disk, z).unwrap() - expect).norm() < 1e-15);
            let lm2 = (z + 1.0).powi(3) / (8.0 * (z - 1.0));
            assert!((ell(-2, CanonicalDomain::Disk, z).unwrap() - lm2).norm() < 1e-14);
        }
        assert_eq!(ell(-2, CanonicalDomain::Disk, c(1.0, 0.0)), Err(FieldError::Pole(c(1.0, 0.0))));
        assert_eq!(ell(-2, CanonicalDomain::HalfPlane, c(0.0, 0.0)), Err(FieldError::Pole(c(0.0, 0.0))));
        assert_eq!(ell(3, CanonicalDomain::Disk, c(0.0, 0.0)), Err(FieldError::BadIndex(3)));
    }

    #[test]
    fn ell_derivatives_match_differences() {
        let h = 1e-6;
        for d in [CanonicalDomain::HalfPlane, CanonicalDomain::Disk, CanonicalDomain::Strip] {
            for n in -2..=2 {
                for z in [c(0.3, 0.4), c(-0.5, 0.2), c(0.1, 0.8)] {
                    let fd = (ell(n, d, z + h).unwrap() - ell(n, d, z - h).unwrap()) / (2.0 * h);
                    let an = ell_derivative(n, d, z).unwrap();
                    assert!((fd - an).norm() < 1e-6 * (1.0 + an.norm()), "{d:?} n={n} z={z}");
                }
            }
        }
    }

    #[test]
    fn disk_and_strip_closed_forms_are_pushforwards() {
        let to_disk = canonical_iso(CanonicalDomain::HalfPlane, CanonicalDomain::Disk);
        let to_strip = canonical_iso(CanonicalDomain::HalfPlane, CanonicalDomain::Strip);
        for n in -2..=2 {
            let lh = FnField(move |z| ell(n, CanonicalDomain::HalfPlane, z));
            let pd = Pushforward::new(&lh, &to_disk);
            for z in disk_points(40) {
                let direct = ell(n, CanonicalDomain::Disk, z).unwrap();
                assert!((pd.value(z).unwrap() - direct).norm() < 1e-10 * (1.0 + direct.norm()));
            }
            let ps = Pushforward::new(&lh, &to_strip);
            for k in 0..40 {
                let z = c(-3.0 + 0.15 * k as f64, 0.2 + 0.07 * k as f64);
                let direct = ell(n, CanonicalDomain::Strip, z).unwrap();
                assert!((ps.value(z).unwrap() - direct).norm() < 1e-10 * (1.0 + direct.norm()));
            }
        }
    }

    #[test]
    fn pushforward_of_constant_field_at_marked_point() {
        let chordal = FnField(|_| Ok(c(-1.0, 0.0)));
        let p = Pushforward::new(&chordal, &canonical_iso(CanonicalDomain::HalfPlane, CanonicalDomain::Disk));
        assert!((p.value(c(1.0, 0.0)).unwrap() - c(0.0, -1.0)).norm() < 1e-14);
        let id = Pushforward::new(&chordal, &ConformalMap::Identity);
        assert_eq!(id.value(c(0.2, 0.3)).unwrap(), c(-1.0, 0.0));
    }

    #[test]
    fn pushforward_derivative_matches_difference() {
        let m = DiskAutomorphism::new(0.7, c(0.3, -0.2)).unwrap();
        let b = SlitField::new([2.0, 0.3, -0.4, 0.1], CanonicalDomain::Disk).unwrap();
        let p = Pushforward::new(b, &ConformalMap::Mobius(m));
        let h = 1e-6;
        for z in disk_points(15) {
            let fd = (p.value(z + h).unwrap() - p.value(z - h).unwrap()) / (2.0 * h);
            assert!((p.derivative(z).unwrap() - fd).norm() < 1e-5 * (1.0 + fd.norm()));
        }
    }

    #[test]
    fn complete_form_conversions() {
        let radial = CompleteField::new([1.0, 0.0, 0.25], CanonicalDomain::Disk);
        assert_eq!(radial.to_disk_form(), CompleteDiskForm { a: 0.0, b: 0.0, c: 1.0 });
        let chordal = CompleteField::new([1.0, 0.0, 0.0], CanonicalDomain::Disk);
        assert_eq!(chordal.to_disk_form(), CompleteDiskForm { a: 0.0, b: -0.25, c: 0.5 });
        let zero = CompleteField::from_disk_form(CompleteDiskForm { a: 0.0, b: 0.0, c: 0.0 }, CanonicalDomain::Disk);
        assert_eq!(zero.coeffs(), [0.0, 0.0, 0.0]);
        let s = CompleteField::new([0.7, -1.3, 2.2], CanonicalDomain::Disk);
        let back = CompleteField::from_disk_form(s.to_disk_form(), CanonicalDomain::Disk);
        for (x, y) in s.coeffs().iter().zip(back.coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
        for z in disk_points(20) {
            assert!((s.value(z).unwrap() - s.to_disk_form().eval(z)).norm() < 1e-13);
        }
        assert!((radial.value(I).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn herglotz_conversions() {
        let radial = SlitField::new([2.0, 0.0, 0.5, 0.0], CanonicalDomain::Disk).unwrap();
        let h = radial.to_herglotz();
        assert_eq!((h.alpha, h.beta, h.gamma), (c(0.0, 0.0), 0.0, 1.0));
        let abp = SlitField::new([2.0, 0.0, 0.0, 0.0], CanonicalDomain::Disk).unwrap().to_herglotz();
        assert_eq!((abp.alpha, abp.beta, abp.gamma), (c(-0.25, 0.0), 0.0, 1.0));
        let b = SlitField::new([2.0, 1.0, -0.5, 0.25], CanonicalDomain::Disk).unwrap();
        assert_eq!(SlitField::from_herglotz(&b.to_herglotz(), CanonicalDomain::Disk).unwrap(), b);
        for z in disk_points(30) {
            assert!((b.value(z).unwrap() - b.to_herglotz().value(z).unwrap()).norm() < 1e-12 * (1.0 + b.value(z).unwrap().norm()));
        }
        assert!(SlitField::new([-1.0, 0.0, 0.0, 0.0], CanonicalDomain::Disk).is_err());
        assert!(SlitField::new([0.0, 0.0, 0.0, 0.0], CanonicalDomain::Disk).is_err());
        let degenerate = HerglotzSlitForm { gamma: 0.0, ..h };
        assert!(SlitField::from_herglotz(&degenerate, CanonicalDomain::Disk).is_err());
    }

    #[test]
    fn radial_and_abp_values() {
        let radial = SlitField::new([2.0, 0.0, 0.5, 0.0], CanonicalDomain::Disk).unwrap();
        assert!((radial.value(c(0.2, 0.0)).unwrap() - c(-0.3, 0.0)).norm() < 1e-15);
        let abp = SlitField::new([2.0, 0.0, 0.0, 0.0], CanonicalDomain::Disk).unwrap();
        assert!((abp.value(c(0.0, 0.0)).unwrap() - c(-0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mobius_transform_agrees_with_pushforward() {
        let b = SlitField::new([2.0, 0.7, -0.3, 0.4], CanonicalDomain::Disk).unwrap();
        let h = b.to_herglotz();
        for (theta, a) in [(0.7, c(0.3, 0.0)), (-1.9, c(-0.2, 0.55)), (3.0, c(0.6, -0.6))] {
            let m = DiskAutomorphism::new(theta, a).unwrap();
            let t = mobius_transform_slit(&h, &m);
            let p = Pushforward::new(h, &ConformalMap::Mobius(m));
            for z in disk_points(50) {
                let want = p.value(z).unwrap();
                assert!((t.value(z).unwrap() - want).norm() < 1e-9 * (1.0 + want.norm()));
            }
            let alpha = m.rotation_factor() * h.value(a).unwrap() / (1.0 - a.norm_sqr());
            assert!((t.alpha - alpha).norm() < 1e-14);
        }
        let rot = DiskAutomorphism::rotation(std::f64::consts::PI / 3.0);
        assert!((mobius_transform_slit(&h, &rot).gamma - h.gamma).abs() < 1e-14);
        let same = mobius_transform_slit(&h, &DiskAutomorphism::identity());
        assert!((same.alpha - h.alpha).norm() < 1e-15 && (same.beta - h.beta).abs() < 1e-15);
    }

    #[test]
    fn semicompleteness_of_basis_fields() {
        let lm2 = FnField(|z| ell(-2, CanonicalDomain::Disk, z));
        assert!(semicomplete_check(&lm2).unwrap().semicomplete);
        for z in disk_points(10) {
            let q = (lm2.value(c(0.0, 0.0)).unwrap() - lm2.value(z).unwrap()) / z - lm2.value(c(0.0, 0.0)).unwrap().conj() * z;
            assert!((q - 0.5 * (1.0 + z) / (1.0 - z)).norm() < 1e-12);
        }
        let neg_l2 = FnField(|z| Ok(-ell(2, CanonicalDomain::Disk, z)?));
        assert!(semicomplete_check(&neg_l2).unwrap().semicomplete);
        for z in disk_points(10) {
            let v0 = neg_l2.value(c(0.0, 0.0)).unwrap();
            let q = (v0 - neg_l2.value(z).unwrap()) / z - v0.conj() * z;
            assert!((q - 8.0 * (1.0 - z) / (1.0 + z)).norm() < 1e-11);
        }
        let l2 = FnField(|z| ell(2, CanonicalDomain::Disk, z));
        let r = semicomplete_check(&l2).unwrap();
        assert!(!r.semicomplete && r.min_re_q < -1.0);
    }

    #[test]
    fn completeness_detection() {
        let s = CompleteField::new([1.0, 0.5, -0.3], CanonicalDomain::Disk);
        assert!(is_complete(&s).unwrap());
        let b = SlitField::new([2.0, 0.0, 0.5, 0.0], CanonicalDomain::Disk).unwrap();
        assert!(!is_complete(&b).unwrap());
    }
}
