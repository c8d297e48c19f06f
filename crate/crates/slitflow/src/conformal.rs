//! Canonical domains, the fixed isomorphisms between them, and the Möbius
//! algebra of disk automorphisms.
//!
//! The upper half-plane is the reference domain. It maps to the unit disk by
//! `z ↦ −(z−2i)/(z+2i)` (so `0 ↦ 1`, `2i ↦ 0`, `∞ ↦ −1`) and to the strip
//! `{0 < Im z < π}` by `z ↦ Log((2+z)/(2−z))` (so `0 ↦ 0`). Automorphisms of
//! the half-plane and strip are disk automorphisms conjugated through these.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Slack allowed when checking that a point lies in a closed domain.
pub const DOMAIN_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConformalError {
    #[error("point {0} lies outside the closed unit disk")]
    OutsideDisk(Complex64),
    #[error("automorphism center {0} must satisfy |a| < 1")]
    CenterOutsideDisk(Complex64),
    #[error("map is singular at {0}")]
    Singular(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalDomain {
    #[serde(alias = "H", alias = "halfplane")]
    HalfPlane,
    #[serde(alias = "D")]
    Disk,
    #[serde(alias = "S")]
    Strip,
}

impl CanonicalDomain {
    /// The boundary point at which slit fields have their pole.
    pub fn marked_point(self) -> Complex64 {
        match self {
            CanonicalDomain::Disk => Complex64::new(1.0, 0.0),
            CanonicalDomain::HalfPlane | CanonicalDomain::Strip => Complex64::new(0.0, 0.0),
        }
    }

    /// Whether `z` lies in the closure of the domain, up to `slack`.
    pub fn contains_closed(self, z: Complex64, slack: f64) -> bool {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return false;
        }
        match self {
            CanonicalDomain::Disk => z.norm() <= 1.0 + slack,
            CanonicalDomain::HalfPlane => z.im >= -slack,
            CanonicalDomain::Strip => z.im >= -slack && z.im <= PI + slack,
        }
    }

    /// Whether `z` lies strictly inside the domain.
    pub fn contains(self, z: Complex64) -> bool {
        match self {
            CanonicalDomain::Disk => z.norm() < 1.0,
            CanonicalDomain::HalfPlane => z.im > 0.0,
            CanonicalDomain::Strip => z.im > 0.0 && z.im < PI,
        }
    }

    /// Isomorphism from this domain onto the unit disk.
    pub fn to_disk(self) -> ConformalMap {
        canonical_iso(self, CanonicalDomain::Disk)
    }

    /// Isomorphism from the unit disk onto this domain.
    pub fn from_disk(self) -> ConformalMap {
        canonical_iso(CanonicalDomain::Disk, self)
    }
}

/// A point of the extended plane. Only the closed-form maps accept infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(Complex64),
    Infinity,
}

/// Value, first and second derivative of a holomorphic map at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

impl Jet {
    pub fn identity(z: Complex64) -> Self {
        Jet { value: z, d1: Complex64::new(1.0, 0.0), d2: Complex64::new(0.0, 0.0) }
    }

    /// Jet of `outer ∘ self`, where `outer` is the jet of the outer map at `self.value`.
    pub fn then(self, outer: Jet) -> Jet {
        Jet {
            value: outer.value,
            d1: outer.d1 * self.d1,
            d2: outer.d2 * self.d1 * self.d1 + outer.d1 * self.d2,
        }
    }
}

/// Disk automorphism `z ↦ e^{iθ}(z−a)/(1−āz)` with `|a| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskAutomorphism {
    theta: f64,
    a: Complex64,
    rot: Complex64,
}

impl DiskAutomorphism {
    pub fn new(theta: f64, a: Complex64) -> Result<Self, ConformalError> {
        if !(a.norm() < 1.0) {
            return Err(ConformalError::CenterOutsideDisk(a));
        }
        Ok(Self::from_parts(theta, a))
    }

    pub(crate) fn from_parts(theta: f64, a: Complex64) -> Self {
        DiskAutomorphism { theta, a, rot: Complex64::from_polar(1.0, theta) }
    }

    pub fn identity() -> Self {
        Self::from_parts(0.0, Complex64::new(0.0, 0.0))
    }

    pub fn rotation(theta: f64) -> Self {
        Self::from_parts(theta, Complex64::new(0.0, 0.0))
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    /// `e^{iθ}`.
    pub fn rotation_factor(&self) -> Complex64 {
        self.rot
    }

    /// Builds the map `z ↦ (pz+q)/(q̄z+p̄)` of an SU(1,1) matrix `[[p, q], [q̄, p̄]]`.
    pub(crate) fn from_su11(p: Complex64, q: Complex64) -> Self {
        Self::from_parts(2.0 * p.arg(), -q / p)
    }

    /// Builds the automorphism from a general matrix `[[n11, n12], [n21, n22]]`
    /// known to represent one.
    fn from_matrix(n: [[Complex64; 2]; 2]) -> Self {
        let rot = n[0][0] / n[1][1];
        Self::from_parts(rot.arg(), -n[0][1] / n[0][0])
    }

    fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.rot, -self.a * self.rot], [-self.a.conj(), Complex64::new(1.0, 0.0)]]
    }

    /// Evaluates the map, rejecting points outside the closed disk.
    pub fn apply(&self, z: Complex64) -> Result<Complex64, ConformalError> {
        if z.norm() > 1.0 + DOMAIN_SLACK {
            return Err(ConformalError::OutsideDisk(z));
        }
        Ok(self.eval(z))
    }

    /// Evaluates the Möbius formula without a domain check.
    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.rot * (z - self.a) / (Complex64::new(1.0, 0.0) - self.a.conj() * z)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let den = Complex64::new(1.0, 0.0) - self.a.conj() * z;
        self.rot * (1.0 - self.a.norm_sqr()) / (den * den)
    }

    #[inline]
    pub fn jet(&self, z: Complex64) -> Jet {
        let ac = self.a.conj();
        let den = Complex64::new(1.0, 0.0) - ac * z;
        let d1 = self.rot * (1.0 - self.a.norm_sqr()) / (den * den);
        Jet { value: self.rot * (z - self.a) / den, d1, d2: 2.0 * ac * d1 / den }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &DiskAutomorphism) -> DiskAutomorphism {
        let m = self.matrix();
        let n = inner.matrix();
        let mut p = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in p.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = m[i][0] * n[0][j] + m[i][1] * n[1][j];
            }
        }
        Self::from_matrix(p)
    }

    pub fn inverse(&self) -> DiskAutomorphism {
        Self::from_parts(-self.theta, -self.a * self.rot)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConformalMap {
    Identity,
    /// `z ↦ −(z−2i)/(z+2i)`.
    HalfPlaneToDisk,
    DiskToHalfPlane,
    /// `z ↦ Log((2+z)/(2−z))`.
    HalfPlaneToStrip,
    StripToHalfPlane,
    Mobius(DiskAutomorphism),
    /// Applied first to last.
    Chain(Vec<ConformalMap>),
}

/// The fixed isomorphism between two canonical domains.
pub fn canonical_iso(from: CanonicalDomain, to: CanonicalDomain) -> ConformalMap {
    use CanonicalDomain::*;
    use ConformalMap::*;
    match (from, to) {
        (a, b) if a == b => Identity,
        (HalfPlane, Disk) => HalfPlaneToDisk,
        (Disk, HalfPlane) => DiskToHalfPlane,
        (HalfPlane, Strip) => HalfPlaneToStrip,
        (Strip, HalfPlane) => StripToHalfPlane,
        (Disk, Strip) => Chain(vec![DiskToHalfPlane, HalfPlaneToStrip]),
        (Strip, Disk) => Chain(vec![StripToHalfPlane, HalfPlaneToDisk]),
        _ => unreachable!(),
    }
}

/// Conjugate of a disk automorphism into `domain`: `ι⁻¹ ∘ m ∘ ι` with `ι` the
/// isomorphism of `domain` onto the disk.
pub fn conjugate_into(domain: CanonicalDomain, m: DiskAutomorphism) -> ConformalMap {
    match domain {
        CanonicalDomain::Disk => ConformalMap::Mobius(m),
        _ => ConformalMap::Chain(vec![domain.to_disk(), ConformalMap::Mobius(m), domain.from_disk()]),
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl ConformalMap {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.jet(z).value
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        self.jet(z).d1
    }

    pub fn jet(&self, z: Complex64) -> Jet {
        match self {
            ConformalMap::Identity => Jet::identity(z),
            ConformalMap::HalfPlaneToDisk => {
                let den = z + 2.0 * I;
                let d1 = -4.0 * I / (den * den);
                Jet { value: -(z - 2.0 * I) / den, d1, d2: -2.0 * d1 / den }
            }
            ConformalMap::DiskToHalfPlane => {
                let den = one() + z;
                let d1 = -4.0 * I / (den * den);
                Jet { value: 2.0 * I * (one() - z) / den, d1, d2: -2.0 * d1 / den }
            }
            ConformalMap::HalfPlaneToStrip => {
                let q = Complex64::new(4.0, 0.0) - z * z;
                Jet { value: ((2.0 + z) / (2.0 - z)).ln(), d1: 4.0 / q, d2: 8.0 * z / (q * q) }
            }
            ConformalMap::StripToHalfPlane => {
                let th = (z / 2.0).tanh();
                let sech2 = one() - th * th;
                Jet { value: 2.0 * th, d1: sech2, d2: -sech2 * th }
            }
            ConformalMap::Mobius(m) => m.jet(z),
            ConformalMap::Chain(maps) => {
                maps.iter().fold(Jet::identity(z), |acc, m| acc.then(m.jet(acc.value)))
            }
        }
    }

    pub fn inverse(&self) -> ConformalMap {
        match self {
            ConformalMap::Identity => ConformalMap::Identity,
            ConformalMap::HalfPlaneToDisk => ConformalMap::DiskToHalfPlane,
            ConformalMap::DiskToHalfPlane => ConformalMap::HalfPlaneToDisk,
            ConformalMap::HalfPlaneToStrip => ConformalMap::StripToHalfPlane,
            ConformalMap::StripToHalfPlane => ConformalMap::HalfPlaneToStrip,
            ConformalMap::Mobius(m) => ConformalMap::Mobius(m.inverse()),
            ConformalMap::Chain(maps) => ConformalMap::Chain(maps.iter().rev().map(|m| m.inverse()).collect()),
        }
    }

    /// Evaluates on the extended plane. Infinity is meaningful only for the
    /// half-plane side of the closed-form maps.
    pub fn apply_extended(&self, z: Extended) -> Result<Extended, ConformalError> {
        use ConformalMap::*;
        use Extended::{Finite, Infinity};
        match (self, z) {
            (Identity, p) => Ok(p),
            (HalfPlaneToDisk, Infinity) => Ok(Finite(-one())),
            (HalfPlaneToDisk, Finite(w)) if w == -2.0 * I => Ok(Infinity),
            (DiskToHalfPlane, Finite(w)) if w == -one() => Ok(Infinity),
            (DiskToHalfPlane, Infinity) => Ok(Finite(-2.0 * I)),
            (HalfPlaneToStrip, Infinity) => Ok(Finite(Complex64::new(0.0, PI))),
            (HalfPlaneToStrip, Finite(w)) if w.re.abs() == 2.0 && w.im == 0.0 => Ok(Infinity),
            (StripToHalfPlane, Finite(w)) if w == Complex64::new(0.0, PI) => Ok(Infinity),
            (StripToHalfPlane, Infinity) => Err(ConformalError::Singular(Complex64::new(f64::INFINITY, 0.0))),
            (Mobius(m), Infinity) => {
                if m.a.norm_sqr() == 0.0 {
                    Ok(Infinity)
                } else {
                    Ok(Finite(-m.rot / m.a.conj()))
                }
            }
            (Mobius(m), Finite(w)) if m.a.norm_sqr() > 0.0 && w == one() / m.a.conj() => Ok(Infinity),
            (Chain(maps), p) => maps.iter().try_fold(p, |acc, m| m.apply_extended(acc)),
            (map, Finite(w)) => Ok(Finite(map.apply(w))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn sample_interior(domain: CanonicalDomain) -> Vec<Complex64> {
        (0..24)
            .map(|k| {
                let s = k as f64 / 24.0;
                match domain {
                    CanonicalDomain::Disk => Complex64::from_polar(0.05 + 0.9 * s, 7.3 * s),
                    CanonicalDomain::HalfPlane => Complex64::new(-3.0 + 6.0 * s, 0.1 + 2.5 * (3.1 * s).sin().abs()),
                    CanonicalDomain::Strip => Complex64::new(-4.0 + 8.0 * s, 0.1 + 2.9 * (5.7 * s).sin().abs()),
                }
            })
            .collect()
    }

    #[test]
    fn phi_reference_values() {
        let phi = canonical_iso(CanonicalDomain::HalfPlane, CanonicalDomain::Disk);
        assert!(close(phi.apply(2.0 * I), Complex64::new(0.0, 0.0), 1e-15));
        assert!(close(phi.apply(Complex64::new(0.0, 0.0)), one(), 1e-15));
        assert_eq!(phi.apply_extended(Extended::Infinity).unwrap(), Extended::Finite(-one()));
        assert!(close(phi.apply(Complex64::new(1e9, 0.0)), -one(), 1e-8));
        let id = canonical_iso(CanonicalDomain::HalfPlane, CanonicalDomain::HalfPlane);
        assert_eq!(id.apply(Complex64::new(1.0, 1.0)), Complex64::new(1.0, 1.0));
    }

    #[test]
    fn psi_fixes_marked_point_and_lands_in_strip() {
        let psi = canonical_iso(CanonicalDomain::HalfPlane, CanonicalDomain::Strip);
        assert!(close(psi.apply(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0), 1e-15));
        assert!(close(psi.apply(2.0 * I), Complex64::new(0.0, PI / 2.0), 1e-15));
        for z in sample_interior(CanonicalDomain::HalfPlane) {
            assert!(CanonicalDomain::Strip.contains(psi.apply(z)));
        }
    }

    #[test]
    fn isomorphisms_round_trip() {
        use CanonicalDomain::*;
        for a in [HalfPlane, Disk, Strip] {
            for b in [HalfPlane, Disk, Strip] {
                let fwd = canonical_iso(a, b);
                let back = canonical_iso(b, a);
                for z in sample_interior(a) {
                    let w = fwd.apply(z);
                    assert!(b.contains(w), "{a:?}->{b:?} left the target at {z}");
                    assert!(close(back.apply(w), z, 1e-11 * (1.0 + z.norm())));
                    assert!(close(fwd.inverse().apply(w), z, 1e-11 * (1.0 + z.norm())));
                }
            }
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        use CanonicalDomain::*;
        let h = 1e-5;
        for (a, b) in [(HalfPlane, Disk), (Disk, HalfPlane), (HalfPlane, Strip), (Strip, HalfPlane), (Disk, Strip)] {
            let map = canonical_iso(a, b);
            for z in sample_interior(a) {
                let j = map.jet(z);
                let fd1 = (map.apply(z + h) - map.apply(z - h)) / (2.0 * h);
                let fd2 = (map.apply(z + h) - 2.0 * map.apply(z) + map.apply(z - h)) / (h * h);
                assert!(close(j.d1, fd1, 1e-7 * (1.0 + j.d1.norm())));
                assert!(close(j.d2, fd2, 1e-4 * (1.0 + j.d2.norm())));
            }
        }
    }

    #[test]
    fn mobius_reference_values() {
        let id = DiskAutomorphism::identity();
        let z = Complex64::new(0.3, 0.1);
        assert_eq!(id.apply(z).unwrap(), z);
        let flip = DiskAutomorphism::rotation(PI);
        assert!(close(flip.apply(one()).unwrap(), -one(), 1e-15));
        let m = DiskAutomorphism::new(0.0, Complex64::new(0.5, 0.0)).unwrap();
        assert!(close(m.apply(Complex64::new(0.5, 0.0)).unwrap(), Complex64::new(0.0, 0.0), 1e-15));
        assert!(close(m.derivative(Complex64::new(0.0, 0.0)), Complex64::new(0.75, 0.0), 1e-15));
        assert_eq!(id.inverse(), id);
        assert!(matches!(m.apply(Complex64::new(1.1, 0.0)), Err(ConformalError::OutsideDisk(_))));
        assert!(DiskAutomorphism::new(0.0, one()).is_err());
    }

    #[test]
    fn compose_and_invert() {
        let m1 = DiskAutomorphism::new(0.4, Complex64::new(0.2, -0.5)).unwrap();
        let m2 = DiskAutomorphism::new(-2.1, Complex64::new(-0.6, 0.3)).unwrap();
        let c = m1.compose(&m2);
        for z in sample_interior(CanonicalDomain::Disk) {
            assert!(close(c.eval(z), m1.eval(m2.eval(z)), 1e-12));
            assert!(close(m1.compose(&m1.inverse()).eval(z), z, 1e-12));
            assert!(close(m1.inverse().eval(m1.eval(z)), z, 1e-12));
        }
        let w = Complex64::new(0.0, 0.7);
        assert!(close(m2.compose(&m2.inverse()).apply(w).unwrap(), w, 1e-12));
    }

    #[test]
    fn mobius_jet_matches_finite_differences() {
        let m = DiskAutomorphism::new(1.3, Complex64::new(0.45, 0.2)).unwrap();
        let h = 1e-5;
        for z in sample_interior(CanonicalDomain::Disk) {
            let fd = (m.eval(z + h) - m.eval(z - h)) / (2.0 * h);
            assert!(close(m.derivative(z), fd, 1e-8));
            let fd2 = (m.derivative(z + h) - m.derivative(z - h)) / (2.0 * h);
            assert!(close(m.jet(z).d2, fd2, 1e-6 * (1.0 + fd2.norm())));
        }
    }

    #[test]
    fn conjugated_automorphism_preserves_half_plane() {
        let m = DiskAutomorphism::new(0.9, Complex64::new(0.1, 0.4)).unwrap();
        let h = conjugate_into(CanonicalDomain::HalfPlane, m);
        for z in sample_interior(CanonicalDomain::HalfPlane) {
            assert!(h.apply(z).im > 0.0);
            assert!(close(h.inverse().apply(h.apply(z)), z, 1e-10 * (1.0 + z.norm_sqr())));
        }
    }
}
