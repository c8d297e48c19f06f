//! Flows of complete fields as closed-form disk automorphisms, and the
//! boundary transit time `T^σ` with `h_{T^σ(e^{iθ})}(1) = e^{iθ}`.
//!
//! A complete field `α − iβz − ᾱz²` corresponds to the trace-free matrix
//! `A = [[−iβ/2, α], [ᾱ, iβ/2]]`, and `h_t` is the Möbius map of `exp(tA)`.
//! Since `A² = (D/4)·I` with `D = −β² + 4|α|²`, the exponential is
//! `C(t)·I + S(t)·A` with `C, S` hyperbolic, trigonometric or polynomial
//! according to the sign of `D`.

use num_complex::Complex64;
use thiserror::Error;

use crate::conformal::DiskAutomorphism;
use crate::fields::{CompleteField, VectorField};

/// `|D|` at or below this is treated as parabolic.
pub const PARABOLIC_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("e^(i{0}) is a fixed point of the flow and cannot be reached from 1")]
    FixedPoint(f64),
    #[error("e^(i{0}) lies beyond a boundary fixed point and is not on the orbit of 1")]
    Unreachable(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowClass {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

/// Precomputed generator of the flow of one complete field.
#[derive(Debug, Clone, Copy)]
pub struct Flow {
    alpha: Complex64,
    beta: f64,
    /// `D/4`.
    quarter_disc: f64,
}

impl Flow {
    pub fn new(sigma: &CompleteField) -> Self {
        let form = sigma.to_disk_form();
        let alpha = form.alpha();
        let beta = form.beta();
        Flow { alpha, beta, quarter_disc: (4.0 * alpha.norm_sqr() - beta * beta) / 4.0 }
    }

    pub fn discriminant(&self) -> f64 {
        4.0 * self.quarter_disc
    }

    pub fn class(&self) -> FlowClass {
        let d = self.discriminant();
        if d.abs() <= PARABOLIC_TOLERANCE {
            FlowClass::Parabolic
        } else if d < 0.0 {
            FlowClass::Elliptic
        } else {
            FlowClass::Hyperbolic
        }
    }

    /// `(C, S)` with `exp(tA) = C·I + S·A`.
    fn coefficients(&self, t: f64) -> (f64, f64) {
        let s = self.quarter_disc;
        if 4.0 * s.abs() <= PARABOLIC_TOLERANCE {
            let x = s * t * t;
            (1.0 + x / 2.0 + x * x / 24.0, t * (1.0 + x / 6.0 + x * x / 120.0))
        } else if s < 0.0 {
            let w = (-s).sqrt();
            ((w * t).cos(), (w * t).sin() / w)
        } else {
            let w = s.sqrt();
            ((w * t).cosh(), (w * t).sinh() / w)
        }
    }

    /// `h_t`.
    pub fn at(&self, t: f64) -> DiskAutomorphism {
        let (c, s) = self.coefficients(t);
        let p = Complex64::new(c, -s * self.beta / 2.0);
        DiskAutomorphism::from_su11(p, s * self.alpha)
    }

    /// Transit time from 1 to `e^{iθ}` and, for elliptic flows, the period.
    pub fn transit(&self, theta: f64) -> Result<Transit, FlowError> {
        let target = Complex64::from_polar(1.0, theta);
        let period = match self.class() {
            FlowClass::Elliptic => Some(std::f64::consts::PI / (-self.quarter_disc).sqrt()),
            _ => None,
        };
        if (target - 1.0).norm() <= 1e-15 {
            return Ok(Transit { time: 0.0, period });
        }
        let speed = self.alpha - Complex64::new(0.0, self.beta) * target - self.alpha.conj() * target * target;
        if speed.norm() <= 1e-12 {
            return Err(FlowError::FixedPoint(theta));
        }
        // exp(tA)(1,1)ᵀ ∥ (e^{iθ},1)ᵀ reduces to C·n + S·k = 0 with n, k below;
        // the ratio −n/k is real for boundary points.
        let ib2 = Complex64::new(0.0, self.beta / 2.0);
        let k = (self.alpha - ib2) - target * (self.alpha.conj() + ib2);
        let n = Complex64::new(1.0, 0.0) - target;
        let ratio_num = -(n * k.conj()).re;
        let ratio_den = k.norm_sqr();
        let time = match self.class() {
            FlowClass::Parabolic => {
                if ratio_den == 0.0 {
                    return Err(FlowError::Unreachable(theta));
                }
                ratio_num / ratio_den
            }
            FlowClass::Elliptic => {
                let w = (-self.quarter_disc).sqrt();
                (w * ratio_num).atan2(ratio_den) / w
            }
            FlowClass::Hyperbolic => {
                let w = self.quarter_disc.sqrt();
                if ratio_den == 0.0 || (w * ratio_num / ratio_den).abs() >= 1.0 {
                    return Err(FlowError::Unreachable(theta));
                }
                (w * ratio_num / ratio_den).atanh() / w
            }
        };
        Ok(Transit { time, period })
    }

    /// The piecewise closed-form transit formula in its printed normalization,
    /// kept for comparison with [`Flow::transit`].
    pub fn printed_transit(&self, theta: f64) -> Option<f64> {
        let d = self.discriminant();
        let q = 2.0 * self.alpha - Complex64::new(0.0, self.beta);
        let e = Complex64::from_polar(1.0, -theta);
        let num = ((Complex64::new(1.0, 0.0) - e) * q).re;
        let den = q.norm_sqr() - (e * q * q).re;
        match self.class() {
            FlowClass::Elliptic => Some(-2.0 / (-d).sqrt() * ((-d).sqrt() * num / den).atan()),
            FlowClass::Hyperbolic => {
                let x = d.sqrt() * num / den;
                (x.abs() < 1.0).then(|| -2.0 / d.sqrt() * x.atanh())
            }
            FlowClass::Parabolic => {
                let tan = (theta / 2.0).tan();
                let (a, im, re) = (self.alpha.norm(), self.alpha.im, self.alpha.re);
                let den = if self.beta > 0.0 { a - im + re * tan } else { a + im - re * tan };
                (den != 0.0 && tan.is_finite()).then(|| tan / den)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transit {
    /// Principal transit time.
    pub time: f64,
    /// Period of the flow; all `time + k·period` also transit.
    pub period: Option<f64>,
}

impl Transit {
    /// The representative `time + k·period` nearest to `reference`.
    pub fn nearest(&self, reference: f64) -> f64 {
        match self.period {
            Some(p) => self.time + ((reference - self.time) / p).round() * p,
            None => self.time,
        }
    }
}

pub fn classify(sigma: &CompleteField) -> (FlowClass, f64) {
    let f = Flow::new(sigma);
    (f.class(), f.discriminant())
}

/// The time-`t` map of the flow of `sigma`.
pub fn flow_at(sigma: &CompleteField, t: f64) -> DiskAutomorphism {
    Flow::new(sigma).at(t)
}

pub fn inverse_flow_at(sigma: &CompleteField, t: f64) -> DiskAutomorphism {
    Flow::new(sigma).at(-t)
}

/// `T^σ(e^{iθ})`. Disagreement with the printed closed form beyond `1e−6` is
/// logged; the returned value always satisfies the defining contract.
pub fn t_sigma(sigma: &CompleteField, theta: f64) -> Result<Transit, FlowError> {
    let flow = Flow::new(sigma);
    let target = Complex64::from_polar(1.0, theta);
    if sigma.to_disk_form().eval(target).norm() <= 1e-12 && (target - 1.0).norm() > 1e-15 {
        return Err(FlowError::FixedPoint(theta));
    }
    let transit = flow.transit(theta)?;
    if let Some(printed) = flow.printed_transit(theta) {
        let hit = flow.at(printed).eval(Complex64::new(1.0, 0.0));
        if (hit - target).norm() > 1e-6 {
            log::warn!(
                "printed transit formula gives T={printed:.9} (h_T(1)={hit:.6}) against contract value {:.9} for theta={theta}",
                transit.time
            );
        }
    }
    Ok(transit)
}

/// Residual of `∂_t h_t(z) = σ(h_t(z))` by central difference; a diagnostic.
pub fn flow_residual(sigma: &CompleteField, t: f64, z: Complex64, dt: f64) -> f64 {
    let flow = Flow::new(sigma);
    let dh = (flow.at(t + dt).eval(z) - flow.at(t - dt).eval(z)) / (2.0 * dt);
    let disk = sigma.with_domain(crate::conformal::CanonicalDomain::Disk);
    (dh - disk.value(flow.at(t).eval(z)).unwrap_or(Complex64::new(f64::NAN, 0.0))).norm()
}
