//! Adaptive Dormand-Prince 5(4) integration.
//!
//! Error control is per unit step (local error <= tol * h), so the
//! accumulated error over an interval of length L stays near tol * L
//! instead of tol times the step count. Output times are landed on
//! exactly; there is no dense interpolant.

use alloc::vec::Vec;

// Unused when a dependency turns on num-traits/std: inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;

use crate::CoreError;

#[derive(Debug, Clone, Copy)]
pub struct OdeConfig {
    /// Target local error per unit step, mixed absolute/relative.
    pub tol: f64,
    pub max_step: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig { tol: 1e-10, max_step: 0.1 }
    }
}

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
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stepper<'f, F> {
    deriv: &'f F,
    t: f64,
    y: Vec<f64>,
    k1: Vec<f64>,
    h: f64,
    dir: f64,
    cfg: OdeConfig,
}

impl<'f, F> Stepper<'f, F>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<(), CoreError>,
{
    fn new(deriv: &'f F, t0: f64, y0: &[f64], dir: f64, cfg: OdeConfig) -> Result<Self, CoreError> {
        let mut k1 = alloc::vec![0.0; y0.len()];
        deriv(t0, y0, &mut k1)?;
        let h = cfg.max_step.min(0.05);
        Ok(Stepper { deriv, t: t0, y: y0.to_vec(), k1, h, dir, cfg })
    }

    /// Advances to exactly `target` (in the stepper's direction).
    fn advance_to(&mut self, target: f64) -> Result<(), CoreError> {
        let n = self.y.len();
        let mut k2 = alloc::vec![0.0; n];
        let mut k3 = alloc::vec![0.0; n];
        let mut k4 = alloc::vec![0.0; n];
        let mut k5 = alloc::vec![0.0; n];
        let mut k6 = alloc::vec![0.0; n];
        let mut k7 = alloc::vec![0.0; n];
        let mut stage = alloc::vec![0.0; n];
        let mut y5 = alloc::vec![0.0; n];

        while (target - self.t) * self.dir > 0.0 {
            let remaining = (target - self.t) * self.dir;
            let h = self.h.min(self.cfg.max_step).min(remaining);
            if h < 1e-13 * self.t.abs().max(1.0) {
                // Within roundoff of the target: snap.
                self.t = target;
                return Ok(());
            }
            let hs = h * self.dir;

            for i in 0..n {
                stage[i] = self.y[i] + hs * A21 * self.k1[i];
            }
            (self.deriv)(self.t + C2 * hs, &stage, &mut k2)?;
            for i in 0..n {
                stage[i] = self.y[i] + hs * (A31 * self.k1[i] + A32 * k2[i]);
            }
            (self.deriv)(self.t + C3 * hs, &stage, &mut k3)?;
            for i in 0..n {
                stage[i] = self.y[i] + hs * (A41 * self.k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            (self.deriv)(self.t + C4 * hs, &stage, &mut k4)?;
            for i in 0..n {
                stage[i] = self.y[i]
                    + hs * (A51 * self.k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            (self.deriv)(self.t + C5 * hs, &stage, &mut k5)?;
            for i in 0..n {
                stage[i] = self.y[i]
                    + hs * (A61 * self.k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i]
                        + A65 * k5[i]);
            }
            (self.deriv)(self.t + hs, &stage, &mut k6)?;
            for i in 0..n {
                y5[i] = self.y[i]
                    + hs * (B1 * self.k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            (self.deriv)(self.t + hs, &y5, &mut k7)?;

            let mut err_sq = 0.0;
            for i in 0..n {
                let e = hs
                    * (E1 * self.k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let scale = self.cfg.tol * h * (1.0 + self.y[i].abs().max(y5[i].abs()));
                let r = e / scale;
                err_sq += r * r;
            }
            let err = (err_sq / n as f64).sqrt();
            if !err.is_finite() {
                return Err(CoreError::NonFiniteState { t: self.t });
            }

            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                self.t += hs;
                if (target - self.t) * self.dir <= 0.0 {
                    self.t = target;
                }
                core::mem::swap(&mut self.y, &mut y5);
                core::mem::swap(&mut self.k1, &mut k7);
                if self.y.iter().any(|v| !v.is_finite()) {
                    return Err(CoreError::NonFiniteState { t: self.t });
                }
                self.h = (h * factor).min(self.cfg.max_step);
            } else {
                self.h = h * factor;
                if self.h < 1e-14 * self.t.abs().max(1.0) {
                    return Err(CoreError::StepUnderflow { t: self.t });
                }
            }
        }
        self.t = target;
        Ok(())
    }
}

/// Integrates y' = deriv(t, y) from `t0` to `t1` (either direction).
pub fn integrate_to<F>(
    deriv: &F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    cfg: OdeConfig,
) -> Result<Vec<f64>, CoreError>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<(), CoreError>,
{
    if t0 == t1 {
        return Ok(y0.to_vec());
    }
    let dir = if t1 > t0 { 1.0 } else { -1.0 };
    let mut st = Stepper::new(deriv, t0, y0, dir, cfg)?;
    st.advance_to(t1)?;
    Ok(st.y)
}

/// Integrates forward, delivering the state at every time in `outputs`
/// (ascending, all >= t0) to `sink`.
pub fn integrate_path<F>(
    deriv: &F,
    t0: f64,
    y0: &[f64],
    outputs: &[f64],
    cfg: OdeConfig,
    mut sink: impl FnMut(usize, f64, &[f64]),
) -> Result<(), CoreError>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<(), CoreError>,
{
    if outputs.is_empty() {
        return Ok(());
    }
    let mut st = Stepper::new(deriv, t0, y0, 1.0, cfg)?;
    for (idx, &target) in outputs.iter().enumerate() {
        if target < t0 {
            return Err(CoreError::TimeOrder { t: target, s: t0 });
        }
        st.advance_to(target)?;
        sink(idx, target, &st.y);
    }
    Ok(())
}
