//! Time-dependent input signals u(t) in R^n.
//!
//! A signal is either closed-form (one expression per component),
//! sampled with linear interpolation, the result of cutting a signal at
//! a time and propagating the frozen state with an evolution family, or
//! a scalar multiple of another signal. A cut signal agrees with the
//! original below the cut time and follows U(., cut_time) from there;
//! it keeps the family handle so downstream integrations can walk the
//! propagated branch in one pass instead of restarting per point.

use alloc::boxed::Box;
use alloc::rc::Rc;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::expr::Expr;
use crate::family::EvolutionFamily;

#[derive(Clone)]
pub struct TimeFunction {
    repr: Repr,
    dim: usize,
}

#[derive(Clone)]
enum Repr {
    ClosedForm(Vec<Expr>),
    Samples { times: Vec<f64>, values: Vec<Vec<f64>> },
    Cut { family: Rc<EvolutionFamily>, cut_time: f64, anchor: Vec<f64>, below: Box<TimeFunction> },
    Scaled { inner: Box<TimeFunction>, factor: f64 },
}

impl TimeFunction {
    pub fn constant(components: Vec<f64>) -> Result<Self, CoreError> {
        if components.is_empty() {
            return Err(CoreError::EmptyInput { what: "constant signal components" });
        }
        for (index, c) in components.iter().enumerate() {
            if !c.is_finite() {
                return Err(CoreError::NonFiniteComponent { index });
            }
        }
        let dim = components.len();
        let exprs = components.into_iter().map(Expr::Const).collect();
        Ok(TimeFunction { repr: Repr::ClosedForm(exprs), dim })
    }

    pub fn closed_form(components: Vec<Expr>) -> Result<Self, CoreError> {
        if components.is_empty() {
            return Err(CoreError::EmptyInput { what: "closed-form signal components" });
        }
        let dim = components.len();
        Ok(TimeFunction { repr: Repr::ClosedForm(components), dim })
    }

    /// Linear interpolation through (times[k], values[k]); times must be
    /// strictly increasing. Evaluation clamps to the end values only
    /// within roundoff of the ends.
    pub fn from_samples(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self, CoreError> {
        if times.is_empty() {
            return Err(CoreError::EmptyInput { what: "sample times" });
        }
        if times.len() != values.len() {
            return Err(CoreError::DimensionMismatch { expected: times.len(), got: values.len() });
        }
        let dim = values[0].len();
        if dim == 0 {
            return Err(CoreError::EmptyInput { what: "sample values" });
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::TimeOrder { t: w[1], s: w[0] });
            }
        }
        for (t, row) in times.iter().zip(&values) {
            if !t.is_finite() {
                return Err(CoreError::NonFiniteValue { t: *t });
            }
            if row.len() != dim {
                return Err(CoreError::DimensionMismatch { expected: dim, got: row.len() });
            }
            if let Some(index) = row.iter().position(|c| !c.is_finite()) {
                return Err(CoreError::NonFiniteComponent { index });
            }
        }
        Ok(TimeFunction { repr: Repr::Samples { times, values }, dim })
    }

    pub(crate) fn cut(
        family: Rc<EvolutionFamily>,
        cut_time: f64,
        anchor: Vec<f64>,
        below: TimeFunction,
    ) -> Self {
        let dim = anchor.len();
        TimeFunction {
            repr: Repr::Cut { family, cut_time, anchor, below: Box::new(below) },
            dim,
        }
    }

    pub fn scaled(self, factor: f64) -> Result<Self, CoreError> {
        if !factor.is_finite() {
            return Err(CoreError::NonFiniteValue { t: factor });
        }
        let dim = self.dim;
        Ok(TimeFunction { repr: Repr::Scaled { inner: Box::new(self), factor }, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// First time the signal is defined at, if bounded below.
    pub fn domain_start(&self) -> Option<f64> {
        match &self.repr {
            Repr::ClosedForm(_) => None,
            Repr::Samples { times, .. } => Some(times[0]),
            Repr::Cut { below, .. } => below.domain_start(),
            Repr::Scaled { inner, .. } => inner.domain_start(),
        }
    }

    /// Last time the signal is defined at, if bounded above.
    pub fn domain_end(&self) -> Option<f64> {
        match &self.repr {
            Repr::ClosedForm(_) => None,
            Repr::Samples { times, .. } => Some(*times.last().unwrap()),
            Repr::Cut { family, .. } => family.domain_end(),
            Repr::Scaled { inner, .. } => inner.domain_end(),
        }
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>, CoreError> {
        match &self.repr {
            Repr::ClosedForm(exprs) => exprs.iter().map(|e| e.eval(t)).collect(),
            Repr::Samples { times, values } => {
                let last = times.len() - 1;
                let snap = 1e-9 * t.abs().max(1.0);
                if t <= times[0] {
                    if times[0] - t > snap {
                        return Err(CoreError::OutOfDomain { t, domain_end: times[last] });
                    }
                    return Ok(values[0].clone());
                }
                if t >= times[last] {
                    if t - times[last] > snap {
                        return Err(CoreError::OutOfDomain { t, domain_end: times[last] });
                    }
                    return Ok(values[last].clone());
                }
                let hi = times.partition_point(|&v| v < t);
                if times[hi] == t {
                    return Ok(values[hi].clone());
                }
                let lo = hi - 1;
                let w = (t - times[lo]) / (times[hi] - times[lo]);
                Ok(values[lo]
                    .iter()
                    .zip(&values[hi])
                    .map(|(a, b)| a + w * (b - a))
                    .collect())
            }
            Repr::Cut { family, cut_time, anchor, below } => {
                if t < *cut_time {
                    below.eval(t)
                } else {
                    family.apply_raw(t, *cut_time, anchor)
                }
            }
            Repr::Scaled { inner, factor } => {
                let mut v = inner.eval(t)?;
                for c in v.iter_mut() {
                    *c *= factor;
                }
                Ok(v)
            }
        }
    }

}
