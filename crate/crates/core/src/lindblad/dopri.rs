//! Dormand-Prince 5(4) with PI step-size control.
//!
//! The state is any type that exposes its components as a contiguous complex
//! slice, which covers both dense density matrices and state vectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Contiguous complex storage the integrator can update in place.
pub trait OdeState: Clone {
    fn components(&self) -> &[Complex64];
    fn components_mut(&mut self) -> &mut [Complex64];
}

impl OdeState for DMatrix<Complex64> {
    fn components(&self) -> &[Complex64] {
        self.as_slice()
    }
    fn components_mut(&mut self) -> &mut [Complex64] {
        self.as_mut_slice()
    }
}

impl OdeState for DVector<Complex64> {
    fn components(&self) -> &[Complex64] {
        self.as_slice()
    }
    fn components_mut(&mut self) -> &mut [Complex64] {
        self.as_mut_slice()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const MAX_STEPS: usize = 5_000_000;

fn lin_comb(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, k) in terms {
            acc += k[i] * *w;
        }
        *o = y[i] + acc * h;
    }
}

/// Adaptive integrator for `dy/dt = f(t, y)`.
pub struct Stepper<S, F>
where
    S: OdeState,
    F: FnMut(f64, &S, &mut S),
{
    rhs: F,
    tol: Tolerances,
    t: f64,
    y: S,
    k: [S; 7],
    scratch: S,
    h: f64,
    err_prev: f64,
    stats: StepStats,
}

impl<S, F> Stepper<S, F>
where
    S: OdeState,
    F: FnMut(f64, &S, &mut S),
{
    pub fn new(mut rhs: F, tol: Tolerances, t0: f64, y0: S) -> Self {
        let mut k1 = y0.clone();
        rhs(t0, &y0, &mut k1);
        let k = std::array::from_fn(|_| k1.clone());
        let scratch = y0.clone();
        Self {
            rhs,
            tol,
            t: t0,
            y: y0,
            k,
            scratch,
            h: 0.0,
            err_prev: 1e-4,
            stats: StepStats {
                rhs_evals: 1,
                ..StepStats::default()
            },
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &S {
        &self.y
    }

    /// Derivative at the current time (first stage of the next step).
    pub fn derivative(&self) -> &S {
        &self.k[0]
    }

    pub fn stats(&self) -> &StepStats {
        &self.stats
    }

    pub fn into_state(self) -> S {
        self.y
    }

    fn weighted_rms(&self, a: &[Complex64], b: &[Complex64], v: &[Complex64]) -> f64 {
        let n = v.len().max(1) as f64;
        let sum: f64 = v
            .iter()
            .zip(a.iter().zip(b))
            .map(|(e, (x, y))| {
                let sc = self.tol.abs_tol + self.tol.rel_tol * x.norm().max(y.norm());
                (e.norm() / sc).powi(2)
            })
            .sum();
        (sum / n).sqrt()
    }

    /// Standard starting-step heuristic for a fifth-order method.
    fn initial_step(&mut self, span: f64) -> f64 {
        let y = self.y.components();
        let f0 = self.k[0].components();
        let zero = vec![Complex64::new(0.0, 0.0); y.len()];
        let d0 = self.weighted_rms(y, y, y);
        let d1 = self.weighted_rms(y, y, f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        }
        .min(span);
        let mut y1 = self.y.clone();
        lin_comb(y1.components_mut(), y, h0, &[(1.0, f0)]);
        let mut f1 = self.y.clone();
        (self.rhs)(self.t + h0, &y1, &mut f1);
        self.stats.rhs_evals += 1;
        let diff: Vec<Complex64> = f1.components().iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = self.weighted_rms(y, &zero, &diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Attempts one step of size `h` and returns the scaled error norm. The
    /// candidate solution is left in `scratch` and its derivative in `k[6]`.
    fn attempt(&mut self, h: f64) -> f64 {
        let t = self.t;
        let ys = self.y.components();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let stage = &mut self.scratch;

        lin_comb(stage.components_mut(), ys, h, &[(A21, k1.components())]);
        (self.rhs)(t + C2 * h, stage, k2);
        lin_comb(
            stage.components_mut(),
            ys,
            h,
            &[(A31, k1.components()), (A32, k2.components())],
        );
        (self.rhs)(t + C3 * h, stage, k3);
        lin_comb(
            stage.components_mut(),
            ys,
            h,
            &[(A41, k1.components()), (A42, k2.components()), (A43, k3.components())],
        );
        (self.rhs)(t + C4 * h, stage, k4);
        lin_comb(
            stage.components_mut(),
            ys,
            h,
            &[
                (A51, k1.components()),
                (A52, k2.components()),
                (A53, k3.components()),
                (A54, k4.components()),
            ],
        );
        (self.rhs)(t + C5 * h, stage, k5);
        lin_comb(
            stage.components_mut(),
            ys,
            h,
            &[
                (A61, k1.components()),
                (A62, k2.components()),
                (A63, k3.components()),
                (A64, k4.components()),
                (A65, k5.components()),
            ],
        );
        (self.rhs)(t + h, stage, k6);
        // fifth-order solution lands in `stage`
        lin_comb(
            stage.components_mut(),
            ys,
            h,
            &[
                (A71, k1.components()),
                (A73, k3.components()),
                (A74, k4.components()),
                (A75, k5.components()),
                (A76, k6.components()),
            ],
        );
        (self.rhs)(t + h, stage, k7);
        self.stats.rhs_evals += 6;

        let n = ys.len().max(1) as f64;
        let mut sum = 0.0;
        let (c1, c3, c4, c5, c6, c7) = (
            k1.components(),
            k3.components(),
            k4.components(),
            k5.components(),
            k6.components(),
            k7.components(),
        );
        let ynew = stage.components();
        for i in 0..ys.len() {
            let e = (c1[i] * E1 + c3[i] * E3 + c4[i] * E4 + c5[i] * E5 + c6[i] * E6 + c7[i] * E7) * h;
            let sc = self.tol.abs_tol + self.tol.rel_tol * ys[i].norm().max(ynew[i].norm());
            sum += (e.norm() / sc).powi(2);
        }
        (sum / n).sqrt()
    }

    /// Advances to exactly `t_target`. After every accepted step `on_step`
    /// receives `(t, y, dy/dt)`; returning `true` stops early, in which case
    /// the method returns `Ok(true)`.
    pub fn advance_to(
        &mut self,
        t_target: f64,
        mut on_step: impl FnMut(f64, &S, &S) -> bool,
    ) -> Result<bool> {
        let span_total = t_target - self.t;
        if span_total <= 0.0 {
            return Ok(false);
        }
        if self.h == 0.0 {
            self.h = self.initial_step(span_total);
        }
        let h_min = 1e-14 * t_target.abs().max(1.0);
        loop {
            let remaining = t_target - self.t;
            if remaining <= h_min {
                self.t = t_target;
                return Ok(false);
            }
            if self.stats.accepted + self.stats.rejected >= MAX_STEPS {
                return Err(Error::Integration {
                    time: self.t,
                    reason: format!("step budget of {MAX_STEPS} exhausted"),
                });
            }
            let clipped = self.h >= remaining;
            let h = if clipped { remaining } else { self.h };
            let err = self.attempt(h);
            if !err.is_finite() {
                self.stats.rejected += 1;
                self.h = h * FAC_MIN;
            } else if err <= 1.0 {
                self.stats.accepted += 1;
                let fac = (SAFETY * err.max(1e-10).powf(-ALPHA) * self.err_prev.powf(BETA))
                    .clamp(FAC_MIN, FAC_MAX);
                self.err_prev = err.max(1e-4);
                self.t = if clipped { t_target } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.scratch);
                self.k.swap(0, 6);
                // keep the controller's proposal when the step was only
                // shortened to land on the target
                let proposal = h * fac;
                self.h = if clipped { self.h.max(proposal) } else { proposal };
                if on_step(self.t, &self.y, &self.k[0]) {
                    return Ok(true);
                }
            } else {
                self.stats.rejected += 1;
                let fac = (SAFETY * err.powf(-ALPHA)).clamp(FAC_MIN, 1.0);
                self.h = h * fac;
            }
            if self.h < h_min {
                return Err(Error::Integration {
                    time: self.t,
                    reason: format!("step size underflow (h = {:.3e}); problem too stiff", self.h),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_to_tolerance() {
        let y0 = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let mut s = Stepper::new(
            |_t, y: &DVector<Complex64>, dy: &mut DVector<Complex64>| {
                dy[0] = -y[0];
            },
            Tolerances::default(),
            0.0,
            y0,
        );
        for k in 1..=10 {
            let t = k as f64 * 0.5;
            s.advance_to(t, |_, _, _| false).unwrap();
            assert_eq!(s.time(), t);
            let exact = (-t).exp();
            assert!((s.state()[0].re - exact).abs() < 1e-8 * exact + 1e-10);
        }
    }

    #[test]
    fn harmonic_oscillator_phase() {
        let y0 = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let mut s = Stepper::new(
            |_t, y: &DVector<Complex64>, dy: &mut DVector<Complex64>| {
                dy[0] = Complex64::new(0.0, -3.0) * y[0];
            },
            Tolerances {
                rel_tol: 1e-10,
                abs_tol: 1e-12,
            },
            0.0,
            y0,
        );
        s.advance_to(10.0, |_, _, _| false).unwrap();
        let exact = Complex64::new(0.0, -30.0).exp();
        assert!((s.state()[0] - exact).norm() < 1e-8);
    }

    #[test]
    fn early_stop_reports_true() {
        let y0 = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let mut s = Stepper::new(
            |_t, y: &DVector<Complex64>, dy: &mut DVector<Complex64>| dy[0] = -y[0],
            Tolerances::default(),
            0.0,
            y0,
        );
        let stopped = s.advance_to(100.0, |_, y, _| y[0].re < 0.5).unwrap();
        assert!(stopped);
        assert!(s.time() > 2f64.ln() && s.time() < 100.0);
    }

    #[test]
    fn non_finite_rhs_fails_with_time() {
        let y0 = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let mut s = Stepper::new(
            |t, _y: &DVector<Complex64>, dy: &mut DVector<Complex64>| {
                dy[0] = if t > 0.5 { Complex64::new(f64::NAN, 0.0) } else { Complex64::new(1.0, 0.0) };
            },
            Tolerances::default(),
            0.0,
            y0,
        );
        match s.advance_to(1.0, |_, _, _| false) {
            Err(Error::Integration { time, .. }) => assert!(time <= 0.5 + 1e-12),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }
}
