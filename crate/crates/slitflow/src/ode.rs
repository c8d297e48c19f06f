//! Dormand–Prince 5(4) for small complex systems, with a caller-supplied step
//! cap and stopping predicate. Integration runs forward or backward in time.

use num_complex::Complex64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Steps shorter than this count as underflow.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, min_step: 1e-14, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome<const N: usize> {
    /// Reached the end time.
    Reached([Complex64; N]),
    /// The stop predicate fired after an accepted step at `t`.
    Stopped { t: f64, y: [Complex64; N] },
    /// The step size fell below the minimum at `t`.
    Underflow { t: f64, y: [Complex64; N] },
}

/// Integrator state carried across consecutive calls (step size, error budget).
#[derive(Debug, Clone)]
pub struct Dopri5 {
    opts: OdeOptions,
    h: f64,
    steps: usize,
    /// Sum of accepted local error estimates (absolute, max-norm).
    pub error_sum: f64,
}

fn axpy<const N: usize>(y: &[Complex64; N], terms: &[(f64, &[Complex64; N])], h: f64) -> [Complex64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += *c * k[i];
        }
        *o += h * acc;
    }
    out
}

impl Dopri5 {
    pub fn new(opts: OdeOptions) -> Self {
        Dopri5 { opts, h: 0.0, steps: 0, error_sum: 0.0 }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1`. `f` returning `None`
    /// rejects the step. `cap(t, y, f(t,y))` bounds `|h|`; `stop(t, y)` is
    /// checked after every accepted step.
    pub fn advance<const N: usize>(
        &mut self,
        t0: f64,
        t1: f64,
        y0: [Complex64; N],
        f: &mut impl FnMut(f64, &[Complex64; N]) -> Option<[Complex64; N]>,
        cap: &mut impl FnMut(f64, &[Complex64; N], &[Complex64; N]) -> f64,
        stop: &mut impl FnMut(f64, &[Complex64; N]) -> bool,
    ) -> Outcome<N> {
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let mut t = t0;
        let mut y = y0;
        if t0 == t1 {
            return Outcome::Reached(y);
        }
        let Some(mut k1) = f(t, &y) else {
            return Outcome::Underflow { t, y };
        };
        if self.h <= 0.0 {
            let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max) + 1e-3;
            let speed = k1.iter().map(|v| v.norm()).fold(0.0, f64::max);
            self.h = if speed > 0.0 { 1e-3 * scale / speed } else { (t1 - t0).abs() };
        }
        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= 1e-15 * (1.0 + t1.abs()) {
                return Outcome::Reached(y);
            }
            let h = self.h.min(cap(t, &y, &k1)).min(remaining);
            let final_step = h >= remaining;
            if h < self.opts.min_step && !final_step {
                return Outcome::Underflow { t, y };
            }
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Outcome::Underflow { t, y };
            }
            let hs = dir * h;
            let attempt = (|| {
                let k2 = f(t + C2 * hs, &axpy(&y, &[(A21, &k1)], hs))?;
                let k3 = f(t + C3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs))?;
                let k4 = f(t + C4 * hs, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs))?;
                let k5 = f(t + C5 * hs, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs))?;
                let k6 = f(t + hs, &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs))?;
                let yn = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], hs);
                let k7 = f(t + hs, &yn)?;
                let err = axpy(&[Complex64::new(0.0, 0.0); N], &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)], hs);
                Some((yn, k7, err))
            })();
            let Some((yn, k7, err)) = attempt else {
                self.h = h / 4.0;
                if self.h < self.opts.min_step {
                    return Outcome::Underflow { t, y };
                }
                continue;
            };
            let mut norm = 0.0;
            let mut abs_err = 0.0f64;
            for i in 0..N {
                let sc = self.opts.atol + self.opts.rtol * y[i].norm().max(yn[i].norm());
                let e = err[i].norm();
                norm += (e / sc).powi(2);
                abs_err = abs_err.max(e);
            }
            let norm = (norm / N as f64).sqrt();
            if !norm.is_finite() {
                self.h = h / 4.0;
                if self.h < self.opts.min_step {
                    return Outcome::Underflow { t, y };
                }
                continue;
            }
            let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
            if norm <= 1.0 {
                t = if final_step { t1 } else { t + hs };
                y = yn;
                k1 = k7;
                self.error_sum += abs_err;
                // Keep the controller's proposal even when this step was shortened by the cap or the end point.
                self.h = (h * factor).max(self.h.min(h * 5.0));
                if stop(t, &y) {
                    return Outcome::Stopped { t, y };
                }
            } else {
                self.h = h * factor.min(1.0);
                if self.h < self.opts.min_step {
                    return Outcome::Underflow { t, y };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_cap<const N: usize>() -> impl FnMut(f64, &[Complex64; N], &[Complex64; N]) -> f64 {
        |_, _, _| f64::INFINITY
    }

    #[test]
    fn exponential_forward_and_backward() {
        let mut ode = Dopri5::new(OdeOptions::default());
        let mut f = |_t: f64, y: &[Complex64; 1]| Some([Complex64::new(0.0, 1.0) * y[0]]);
        let out = ode.advance(0.0, 2.0, [Complex64::new(1.0, 0.0)], &mut f, &mut no_cap(), &mut |_, _| false);
        let Outcome::Reached(y) = out else { panic!("{out:?}") };
        assert!((y[0] - Complex64::from_polar(1.0, 2.0)).norm() < 1e-9);
        let mut back = Dopri5::new(OdeOptions::default());
        let Outcome::Reached(z) = back.advance(2.0, 0.0, y, &mut f, &mut no_cap(), &mut |_, _| false) else { panic!() };
        assert!((z[0] - 1.0).norm() < 1e-9);
    }

    #[test]
    fn blowup_is_detected() {
        // y' = y², y(0)=1 blows up at t=1.
        let mut ode = Dopri5::new(OdeOptions::default());
        let mut f = |_t: f64, y: &[Complex64; 1]| Some([y[0] * y[0]]);
        let mut cap = |_: f64, _: &[Complex64; 1], _: &[Complex64; 1]| f64::INFINITY;
        let out = ode.advance(0.0, 2.0, [Complex64::new(1.0, 0.0)], &mut f, &mut cap, &mut |_, y| y[0].norm() > 1e6);
        let Outcome::Stopped { t, .. } = out else { panic!("{out:?}") };
        assert!((t - 1.0).abs() < 1e-5);
    }
}
