//! Which exponential weights a family admits, and at what cost.
//!
//! A weight alpha is admissible when the sup
//!
//! ```text
//!     M(s) = sup over t >= s of  e^{-alpha (t - s)} ||U(t, s)||
//! ```
//!
//! is finite for every s; M is then the per-start-time price of the
//! decay rate alpha. Finiteness is not observable from a finite window,
//! so verdicts compare the windowed sup at horizon T against the one at
//! 2T: an admissible weight saturates (ratio near 1), a weight below
//! the family's growth keeps climbing (ratio far above 1).

use alloc::vec::Vec;

// Unused when a dependency turns on num-traits/std: inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;

use crate::envelope::{uniform_grid, EnvelopeProfile};
use crate::error::CoreError;
use crate::family::{BackendKind, EvolutionFamily};

/// Saturation threshold for returning windowed sups in linear scale;
/// anything above e^700 would overflow f64 shortly after.
const LOG_SATURATION: f64 = 700.0;

/// Windowed bound M(s) on a grid of start times, kept in log scale so
/// strongly growing families stay representable.
#[derive(Debug, Clone)]
pub struct BoundingFunction {
    alpha: f64,
    window: f64,
    s_grid: Vec<f64>,
    log_values: Vec<f64>,
}

impl BoundingFunction {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Window length the sup was taken over.
    pub fn window(&self) -> f64 {
        self.window
    }

    /// ln M at s, linearly interpolated and clamped to the grid ends.
    pub fn log_eval(&self, s: f64) -> f64 {
        let grid = &self.s_grid;
        let last = grid.len() - 1;
        if s <= grid[0] {
            return self.log_values[0];
        }
        if s >= grid[last] {
            return self.log_values[last];
        }
        let hi = grid.partition_point(|&v| v < s);
        if grid[hi] == s {
            return self.log_values[hi];
        }
        let lo = hi - 1;
        let w = (s - grid[lo]) / (grid[hi] - grid[lo]);
        self.log_values[lo] + w * (self.log_values[hi] - self.log_values[lo])
    }

    /// M at s; values above e^700 saturate instead of overflowing.
    pub fn eval(&self, s: f64) -> f64 {
        self.log_eval(s).min(LOG_SATURATION).exp()
    }

    /// The (s, M(s)) samples, saturated like `eval`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s_grid
            .iter()
            .zip(&self.log_values)
            .map(|(s, lv)| (*s, lv.min(LOG_SATURATION).exp()))
    }

    pub fn max_log_value(&self) -> f64 {
        self.log_values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }
}

/// Computes the windowed bound M(s) = sup over [s, s + window] of
/// e^{-alpha (t - s)} ||U(t, s)|| for each start time in s_grid.
///
/// The sup over each window runs on a grid of spacing at most t_step;
/// for the closed-form scalar backend, local peaks are additionally
/// refined, since pointwise evaluation there is cheap. t = s is always
/// on the grid, so M >= 1 exactly.
pub fn bounding_function(
    family: &EvolutionFamily,
    alpha: f64,
    s_grid: &[f64],
    window: f64,
    t_step: f64,
) -> Result<BoundingFunction, CoreError> {
    if s_grid.is_empty() {
        return Err(CoreError::EmptyInput { what: "bounding function start times" });
    }
    if !(window > 0.0) || !window.is_finite() {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("bounding window must be positive and finite"),
        });
    }
    if !(t_step > 0.0) {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("bounding t_step must be positive"),
        });
    }
    if !alpha.is_finite() {
        return Err(CoreError::NonFiniteValue { t: alpha });
    }
    for w in s_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(CoreError::TimeOrder { t: w[1], s: w[0] });
        }
    }
    let refine_depth = match family.kind() {
        BackendKind::ScalarExp => 3,
        _ => 0,
    };
    let mut log_values = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let mut end = s + window;
        if let Some(de) = family.domain_end() {
            if s > de {
                return Err(CoreError::OutOfDomain { t: s, domain_end: de });
            }
            end = end.min(de);
        }
        if !(end > s) {
            // Start time at the domain end: only t = s remains.
            log_values.push(0.0);
            continue;
        }
        let grid = uniform_grid(s, end, t_step);
        let sample = |ts: &[f64]| -> Result<Vec<f64>, CoreError> {
            match family.kind() {
                BackendKind::ScalarExp => {
                    ts.iter().map(|&t| family.log_operator_norm(t, s)).collect()
                }
                _ => {
                    let ests = family.operator_norm_trajectory(s, ts)?;
                    ests.iter()
                        .map(|e| {
                            if !(e.value > 0.0) || !e.value.is_finite() {
                                Err(CoreError::Overflow { t: s })
                            } else {
                                Ok(e.value.ln())
                            }
                        })
                        .collect()
                }
            }
        };
        let prof = EnvelopeProfile::build_with(&sample, &grid, alpha, refine_depth)?;
        log_values.push(prof.log_phi_base(0));
    }
    Ok(BoundingFunction { alpha, window, s_grid: s_grid.to_vec(), log_values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The windowed sup saturates when the window doubles.
    Admissible,
    /// The windowed sup keeps growing when the window doubles.
    Growth,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct AdmissibilityVerdict {
    pub alpha: f64,
    pub verdict: Verdict,
    /// Largest M^(2T)(s) / M^(T)(s) over the probed start times;
    /// saturated at e^700.
    pub growth_ratio: f64,
    /// The short window T the comparison used.
    pub window: f64,
    pub m_short: BoundingFunction,
    pub m_long: BoundingFunction,
}

#[derive(Debug, Clone)]
pub struct VerdictConfig {
    pub s_grid: Vec<f64>,
    /// Short window T; the verdict compares against 2T.
    pub window: f64,
    pub t_step: f64,
    /// Ratio above which the weight is declared growing.
    pub growth_threshold: f64,
    /// Ratio at most 1 + this counts as saturated.
    pub saturation_slack: f64,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        VerdictConfig {
            s_grid: (0..=80).map(|i| i as f64 * 0.25).collect(),
            window: 10.0 * core::f64::consts::PI,
            t_step: 0.01,
            growth_threshold: 2.0,
            saturation_slack: 0.05,
        }
    }
}

/// Classifies a single weight by window doubling.
pub fn admissibility_verdict(
    family: &EvolutionFamily,
    alpha: f64,
    cfg: &VerdictConfig,
) -> Result<AdmissibilityVerdict, CoreError> {
    let m_short = bounding_function(family, alpha, &cfg.s_grid, cfg.window, cfg.t_step)?;
    let m_long = bounding_function(family, alpha, &cfg.s_grid, 2.0 * cfg.window, cfg.t_step)?;
    let mut log_ratio = f64::NEG_INFINITY;
    for ((_, a), (_, b)) in m_short
        .s_grid
        .iter()
        .zip(&m_short.log_values)
        .zip(m_long.s_grid.iter().zip(&m_long.log_values))
    {
        log_ratio = log_ratio.max(b - a);
    }
    let growth_ratio = log_ratio.min(LOG_SATURATION).exp();
    let verdict = if growth_ratio > cfg.growth_threshold {
        Verdict::Growth
    } else if growth_ratio <= 1.0 + cfg.saturation_slack {
        Verdict::Admissible
    } else {
        Verdict::Inconclusive
    };
    Ok(AdmissibilityVerdict { alpha, verdict, growth_ratio, window: cfg.window, m_short, m_long })
}

/// A bracket around the smallest admissible weight.
#[derive(Debug, Clone)]
pub struct BoundaryBracket {
    /// Below the boundary (not observed to saturate).
    pub lo: f64,
    /// Admissible.
    pub hi: f64,
    pub iterations: usize,
}

/// Bisects for the boundary of the admissible set inside [lo, hi].
///
/// hi must classify as admissible and lo must not. Inconclusive
/// midpoints retry with the window doubled and quadrupled; if still
/// inconclusive, the midpoint is treated as not admissible, keeping the
/// returned upper end safe.
pub fn boundary_search(
    family: &EvolutionFamily,
    lo: f64,
    hi: f64,
    alpha_tol: f64,
    cfg: &VerdictConfig,
) -> Result<BoundaryBracket, CoreError> {
    if !(lo < hi) {
        return Err(CoreError::InvalidBracket { alpha: lo, reason: "bracket is empty" });
    }
    if !(alpha_tol > 0.0) {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("boundary alpha_tol must be positive"),
        });
    }
    let classify = |alpha: f64| -> Result<Verdict, CoreError> {
        let mut scaled = cfg.clone();
        for _ in 0..3 {
            let v = admissibility_verdict(family, alpha, &scaled)?.verdict;
            if v != Verdict::Inconclusive {
                return Ok(v);
            }
            scaled.window *= 2.0;
        }
        // Never saturated within the escalated windows: treat as growth
        // so the admissible end of the bracket stays trustworthy.
        Ok(Verdict::Growth)
    };
    if classify(hi)? != Verdict::Admissible {
        return Err(CoreError::InvalidBracket { alpha: hi, reason: "upper end not admissible" });
    }
    if classify(lo)? == Verdict::Admissible {
        return Err(CoreError::InvalidBracket { alpha: lo, reason: "lower end already admissible" });
    }
    let mut lo = lo;
    let mut hi = hi;
    let mut iterations = 0;
    while hi - lo > alpha_tol {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        match classify(mid)? {
            Verdict::Admissible => hi = mid,
            _ => lo = mid,
        }
    }
    Ok(BoundaryBracket { lo, hi, iterations })
}

/// Top growth rate observed from start time zero.
#[derive(Debug, Clone)]
pub struct LyapunovEstimate {
    pub value: f64,
    /// Time window the slope max was taken over.
    pub window: (f64, f64),
    /// Drift between the estimate over the full window and over its
    /// last half; small means the slope has settled.
    pub residual: f64,
}

/// Estimates the top growth exponent as the largest ln||U(t, 0)|| / t
/// over the second half of [0, t_max].
pub fn lyapunov_exponent(
    family: &EvolutionFamily,
    t_max: f64,
    grid_step: f64,
) -> Result<LyapunovEstimate, CoreError> {
    let mut t_max = t_max;
    if let Some(de) = family.domain_end() {
        t_max = t_max.min(de);
    }
    let s0 = family.domain_start().unwrap_or(0.0);
    if !(t_max > s0) || !t_max.is_finite() {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("lyapunov t_max must exceed the domain start"),
        });
    }
    if !(grid_step > 0.0) {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("lyapunov grid_step must be positive"),
        });
    }
    let lo = s0 + 0.5 * (t_max - s0);
    let grid = uniform_grid(lo, t_max, grid_step);
    let logs: Vec<f64> = match family.kind() {
        BackendKind::ScalarExp => grid
            .iter()
            .map(|&t| family.log_operator_norm(t, s0))
            .collect::<Result<_, _>>()?,
        _ => {
            let ests = family.operator_norm_trajectory(s0, &grid)?;
            let mut v = Vec::with_capacity(ests.len());
            for e in &ests {
                if !(e.value > 0.0) || !e.value.is_finite() {
                    return Err(CoreError::Overflow { t: t_max });
                }
                v.push(e.value.ln());
            }
            v
        }
    };
    let mut best = f64::NEG_INFINITY;
    let mut best_late = f64::NEG_INFINITY;
    let late_from = s0 + 0.75 * (t_max - s0);
    for (t, lw) in grid.iter().zip(&logs) {
        let slope = lw / (t - s0);
        best = best.max(slope);
        if *t >= late_from {
            best_late = best_late.max(slope);
        }
    }
    Ok(LyapunovEstimate { value: best, window: (lo, t_max), residual: (best - best_late).abs() })
}
