//! Cutting a signal at a time and propagating the frozen state.
//!
//! The cut operator at time c leaves a signal u unchanged below c and
//! replaces it by the trajectory xi -> U(xi, c) u(c) from c onward.
//! Cutting is idempotent in the strong sense that cutting again at any
//! later time changes nothing, the envelope at the cut time is
//! unchanged, and past the cut the envelope can only decay at the
//! weight's rate. These facts carry the integral-condition machinery
//! downstream, so each has an explicit check here.

use alloc::rc::Rc;
use alloc::vec::Vec;

// Unused when a dependency turns on num-traits/std: inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;

use crate::envelope::{envelope, uniform_grid, validate_config, EnvelopeConfig, EnvelopeProfile};
use crate::error::CoreError;
use crate::family::EvolutionFamily;
use crate::rng::SplitMix64;
use crate::timefn::TimeFunction;

/// The cut-and-propagate operator at a fixed time.
pub struct CutOperator {
    family: Rc<EvolutionFamily>,
    cut_time: f64,
}

impl CutOperator {
    pub fn new(family: Rc<EvolutionFamily>, cut_time: f64) -> Result<Self, CoreError> {
        if !cut_time.is_finite() {
            return Err(CoreError::NonFiniteValue { t: cut_time });
        }
        if let Some(end) = family.domain_end() {
            let start = family.domain_start().unwrap();
            if cut_time < start || cut_time > end {
                return Err(CoreError::OutOfDomain { t: cut_time, domain_end: end });
            }
        }
        Ok(CutOperator { family, cut_time })
    }

    pub fn cut_time(&self) -> f64 {
        self.cut_time
    }

    /// Freezes u at the cut time and lets the family carry it onward.
    pub fn apply(&self, u: &TimeFunction) -> Result<TimeFunction, CoreError> {
        let anchor = u.eval(self.cut_time)?;
        if anchor.len() != self.family.dimension() {
            return Err(CoreError::DimensionMismatch {
                expected: self.family.dimension(),
                got: anchor.len(),
            });
        }
        Ok(TimeFunction::cut(Rc::clone(&self.family), self.cut_time, anchor, u.clone()))
    }
}

/// Convenience free function for a one-off cut.
pub fn cut_and_propagate(
    family: &Rc<EvolutionFamily>,
    cut_time: f64,
    u: &TimeFunction,
) -> Result<TimeFunction, CoreError> {
    CutOperator::new(Rc::clone(family), cut_time)?.apply(u)
}

/// Deviation of the later-cut-changes-nothing rule.
#[derive(Debug, Clone)]
pub struct ProjectionReport {
    pub samples: usize,
    pub max_rel_dev: f64,
    /// (s, t, xi) of the worst sample.
    pub worst: (f64, f64, f64),
    pub tol: f64,
    pub pass: bool,
}

/// Checks that cutting at t >= s after cutting at s is a no-op: for
/// each pair, both signals are compared at random times in
/// [t, t + window].
pub fn check_projection_algebra(
    family: &Rc<EvolutionFamily>,
    u: &TimeFunction,
    pairs: &[(f64, f64)],
    window: f64,
    probes_per_pair: usize,
    tol: f64,
    seed: u64,
) -> Result<ProjectionReport, CoreError> {
    if !(window > 0.0) {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("projection check window must be positive"),
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut max_rel = 0.0f64;
    let mut worst = (0.0, 0.0, 0.0);
    let mut samples = 0usize;
    for &(s, t) in pairs {
        if t < s {
            return Err(CoreError::TimeOrder { t, s });
        }
        let once = cut_and_propagate(family, s, u)?;
        let twice = cut_and_propagate(family, t, &once)?;
        let mut end = t + window;
        if let Some(de) = family.domain_end() {
            end = end.min(de);
        }
        for k in 0..probes_per_pair {
            // First probe pinned to t, the rest random in the window.
            let xi = if k == 0 || !(end > t) { t } else { rng.range(t, end) };
            let a = once.eval(xi)?;
            let b = twice.eval(xi)?;
            let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let denom = family.norm_kind().vector_norm(&a).max(1e-300);
            let rel = family.norm_kind().vector_norm(&diff) / denom;
            samples += 1;
            if rel > max_rel {
                max_rel = rel;
                worst = (s, t, xi);
            }
        }
    }
    Ok(ProjectionReport { samples, max_rel_dev: max_rel, worst, tol, pass: max_rel <= tol })
}

/// Comparison of the envelope before and after cutting at its anchor.
#[derive(Debug, Clone)]
pub struct FixpointReport {
    pub t: f64,
    pub value_of_u: f64,
    pub value_of_cut: f64,
    pub rel_dev: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Checks that cutting at t leaves the envelope at t unchanged.
pub fn check_cut_invariance(
    family: &Rc<EvolutionFamily>,
    u: &TimeFunction,
    t: f64,
    cfg: &EnvelopeConfig,
    tol: f64,
) -> Result<FixpointReport, CoreError> {
    let direct = envelope(family, u, t, cfg)?;
    let cut = cut_and_propagate(family, t, u)?;
    let cut_val = envelope(family, &cut, t, cfg)?;
    let scale = direct.value.abs().max(cut_val.value.abs()).max(1e-300);
    let rel_dev = (direct.value - cut_val.value).abs() / scale;
    Ok(FixpointReport {
        t,
        value_of_u: direct.value,
        value_of_cut: cut_val.value,
        rel_dev,
        tol,
        pass: rel_dev <= tol,
    })
}

/// Worst violation of the anchored decay rule, in log scale.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub pairs: usize,
    /// max over checked xi <= t of
    /// ln phi(t) - alpha (t - xi) - ln phi(xi); nonpositive means the
    /// envelope of the cut signal decays at least at rate alpha.
    pub max_log_violation: f64,
    /// (xi, t) of the worst pair.
    pub worst: (f64, f64),
    pub slack: f64,
    pub pass: bool,
}

/// Checks that past a cut at s, the envelope obeys
/// phi(t) <= e^{alpha (t - xi)} phi(xi) for s <= xi <= t inside the
/// window. All envelope values come from one shared profile anchored at
/// s, so the comparison is exact up to arithmetic roundoff.
pub fn check_decay_bound(
    family: &EvolutionFamily,
    u: &TimeFunction,
    s: f64,
    window: f64,
    check_points: usize,
    cfg: &EnvelopeConfig,
    slack: f64,
) -> Result<DecayReport, CoreError> {
    validate_config(cfg)?;
    if !(window > 0.0) || check_points < 2 {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from(
                "decay check needs a positive window and at least two points",
            ),
        });
    }
    let anchor = u.eval(s)?;
    if anchor.len() != family.dimension() {
        return Err(CoreError::DimensionMismatch {
            expected: family.dimension(),
            got: anchor.len(),
        });
    }
    if family.norm_kind().vector_norm(&anchor) == 0.0 {
        // Zero trajectory: both sides are zero everywhere.
        return Ok(DecayReport {
            pairs: 0,
            max_log_violation: 0.0,
            worst: (s, s),
            slack,
            pass: true,
        });
    }
    let mut check_end = s + window;
    let mut prof_end = check_end + cfg.horizon;
    if let Some(de) = family.domain_end() {
        check_end = check_end.min(de);
        prof_end = prof_end.min(de);
    }
    if !(check_end > s) {
        return Err(CoreError::OutOfDomain { t: s, domain_end: check_end });
    }
    let grid = uniform_grid(s, prof_end, cfg.tau_step);
    let prof = EnvelopeProfile::for_state(family, s, &anchor, &grid, cfg.alpha, cfg.refine_depth)?;

    // Evenly spaced base indices within the check window.
    let last_q = grid.partition_point(|&v| v <= check_end) - 1;
    let mut idxs: Vec<usize> = (0..check_points)
        .map(|k| ((k as f64) * (last_q as f64) / ((check_points - 1) as f64)).round() as usize)
        .collect();
    idxs.dedup();

    let mut max_v = f64::NEG_INFINITY;
    let mut worst = (s, s);
    let mut pairs = 0usize;
    for (a, &i) in idxs.iter().enumerate() {
        let xi = prof.tau_base(i);
        let log_phi_xi = prof.log_phi_base(i);
        for &j in &idxs[a..] {
            let t = prof.tau_base(j);
            let v = prof.log_phi_base(j) - cfg.alpha * (t - xi) - log_phi_xi;
            pairs += 1;
            if v > max_v {
                max_v = v;
                worst = (xi, t);
            }
        }
    }
    Ok(DecayReport { pairs, max_log_violation: max_v, worst, slack, pass: max_v <= slack })
}

/// sup over anchor times of the envelope of a signal.
#[derive(Debug, Clone)]
pub struct EnvelopeSupNorm {
    pub alpha: f64,
    pub window: (f64, f64),
    pub grid_step: f64,
    pub value: f64,
    /// Anchor time where the sup was attained.
    pub arg_t: f64,
}

/// Takes sup over t in the window (clamped to the signal's domain) of
/// the envelope of w anchored at t.
pub fn envelope_sup_norm(
    family: &EvolutionFamily,
    w: &TimeFunction,
    window: (f64, f64),
    grid_step: f64,
    cfg: &EnvelopeConfig,
) -> Result<EnvelopeSupNorm, CoreError> {
    validate_config(cfg)?;
    if !(grid_step > 0.0) {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("sup norm grid_step must be positive"),
        });
    }
    let mut lo = window.0;
    let mut hi = window.1;
    if let Some(ds) = w.domain_start() {
        lo = lo.max(ds);
    }
    if let Some(de) = w.domain_end() {
        hi = hi.min(de);
    }
    if let Some(de) = family.domain_end() {
        hi = hi.min(de);
        lo = lo.max(family.domain_start().unwrap());
    }
    if !(hi >= lo) {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("sup norm window does not meet the signal domain"),
        });
    }
    let grid = if hi > lo { uniform_grid(lo, hi, grid_step) } else { alloc::vec![lo] };
    let mut best = f64::NEG_INFINITY;
    let mut arg_t = lo;
    for &t in &grid {
        let v = envelope(family, w, t, cfg)?.value;
        if v > best {
            best = v;
            arg_t = t;
        }
    }
    Ok(EnvelopeSupNorm { alpha: cfg.alpha, window: (lo, hi), grid_step, value: best, arg_t })
}

/// Sup-norm comparison of a signal against its cut.
#[derive(Debug, Clone)]
pub struct CutNormReport {
    pub t: f64,
    pub alpha: f64,
    pub norm_u: f64,
    pub norm_cut: f64,
    /// e^{-alpha t} norm_u, the ceiling the cut signal must respect.
    pub bound: f64,
    /// ln(bound) - ln(norm_cut); None when either side is zero.
    pub log_margin: Option<f64>,
    pub pass: bool,
}

/// Checks the sup-norm bound: cutting at t costs at most e^{-alpha t}.
pub fn check_cut_norm_bound(
    family: &Rc<EvolutionFamily>,
    u: &TimeFunction,
    t: f64,
    window: (f64, f64),
    grid_step: f64,
    cfg: &EnvelopeConfig,
    rel_slack: f64,
) -> Result<CutNormReport, CoreError> {
    let norm_u = envelope_sup_norm(family, u, window, grid_step, cfg)?;
    let cut = cut_and_propagate(family, t, u)?;
    let norm_cut = envelope_sup_norm(family, &cut, window, grid_step, cfg)?;
    let bound = (-cfg.alpha * t).exp() * norm_u.value;
    if !bound.is_finite() {
        return Err(CoreError::Overflow { t });
    }
    let log_margin = if norm_cut.value > 0.0 && bound > 0.0 {
        Some(bound.ln() - norm_cut.value.ln())
    } else {
        None
    };
    let pass = norm_cut.value <= bound * (1.0 + rel_slack);
    Ok(CutNormReport {
        t,
        alpha: cfg.alpha,
        norm_u: norm_u.value,
        norm_cut: norm_cut.value,
        bound,
        log_margin,
        pass,
    })
}
