//! Weighted decay envelopes.
//!
//! For a signal u and weight alpha, the envelope at time t is
//!
//! ```text
//!     sup over tau >= t of  e^{-alpha (tau - t)} ||U(tau, t) u(t)||,
//! ```
//!
//! the tightest ceiling of the form C e^{alpha (tau - t)} the trajectory
//! admits from t onward. The sup is taken on a dense grid in log space,
//! with local peaks refined by bracketed subdivision, and optionally an
//! explicit bound for the part of the sup beyond the search window. All
//! envelope-like quantities in this crate evaluate through one shared
//! profile structure so that relations between them (monotonicity of
//! the log-space suffix, shared trajectories) hold exactly instead of
//! up to quadrature noise.

use alloc::vec::Vec;

// Unused when a dependency turns on num-traits/std: inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;

use crate::admissibility::BoundingFunction;
use crate::error::CoreError;
use crate::family::EvolutionFamily;
use crate::linalg::StateVector;
use crate::timefn::TimeFunction;

/// Dominates the untracked tail of the sup with a known admissible
/// weight: for tau past the window, the weighted norm is at most
/// m_ref(t) e^{(alpha_ref - alpha)(tau - t)} ||u(t)||, which decays
/// whenever alpha_ref < alpha.
#[derive(Debug, Clone)]
pub struct TailBound {
    pub alpha_ref: f64,
    pub m_ref: BoundingFunction,
}

#[derive(Debug, Clone)]
pub struct EnvelopeConfig {
    pub alpha: f64,
    /// Length of the search window past the anchor time.
    pub horizon: f64,
    /// Base grid step inside the window.
    pub tau_step: f64,
    /// Rounds of local peak refinement (each shrinks brackets 4x).
    pub refine_depth: usize,
    /// Tail-to-value ratio below which the value counts as certified.
    pub rel_tol: f64,
    pub tail: Option<TailBound>,
}

impl EnvelopeConfig {
    pub fn new(alpha: f64) -> Self {
        EnvelopeConfig {
            alpha,
            horizon: 40.0,
            tau_step: 0.01,
            refine_depth: 3,
            rel_tol: 1e-6,
            tail: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnvelopeValue {
    pub value: f64,
    /// Time at which the supremum was attained.
    pub arg_tau: f64,
    /// Bound for the sup beyond the window, when a tail reference was given.
    pub tail_bound: Option<f64>,
    /// True when the tail bound exceeds the windowed value.
    pub tail_dominates: bool,
    /// True when the window provably contains the sup: the family's
    /// domain ends inside it, the state is zero, or the tail bound is
    /// below rel_tol times the value.
    pub certified: bool,
}

/// How an envelope value changes under small shifts of the anchor time.
#[derive(Debug, Clone)]
pub struct ContinuityReport {
    pub t: f64,
    pub h: f64,
    pub value_at_t: f64,
    pub delta_h: f64,
    pub delta_half: f64,
    /// delta_half / delta_h when the former is meaningful.
    pub ratio: Option<f64>,
    pub pass: bool,
}

/// ||u(t)|| in the family's norm.
pub fn state_norm(family: &EvolutionFamily, u: &TimeFunction, t: f64) -> Result<f64, CoreError> {
    let x = u.eval(t)?;
    if x.len() != family.dimension() {
        return Err(CoreError::DimensionMismatch { expected: family.dimension(), got: x.len() });
    }
    Ok(family.norm_kind().vector_norm(&x))
}

/// The decay envelope of u anchored at t.
pub fn envelope(
    family: &EvolutionFamily,
    u: &TimeFunction,
    t: f64,
    cfg: &EnvelopeConfig,
) -> Result<EnvelopeValue, CoreError> {
    let x = u.eval(t)?;
    state_envelope_raw(family, t, &x, cfg)
}

/// The decay envelope of the trajectory started from state x at t.
pub fn state_envelope(
    family: &EvolutionFamily,
    x: &StateVector,
    t: f64,
    cfg: &EnvelopeConfig,
) -> Result<EnvelopeValue, CoreError> {
    state_envelope_raw(family, t, x.components(), cfg)
}

pub(crate) fn validate_config(cfg: &EnvelopeConfig) -> Result<(), CoreError> {
    if !cfg.alpha.is_finite() {
        return Err(CoreError::NonFiniteValue { t: cfg.alpha });
    }
    if !(cfg.horizon > 0.0) || !cfg.horizon.is_finite() {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("envelope horizon must be positive and finite"),
        });
    }
    if !(cfg.tau_step > 0.0) || !cfg.tau_step.is_finite() {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("envelope tau_step must be positive and finite"),
        });
    }
    if !(cfg.rel_tol >= 0.0) {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("envelope rel_tol must be nonnegative"),
        });
    }
    if let Some(tb) = &cfg.tail {
        if !(tb.alpha_ref < cfg.alpha) {
            return Err(CoreError::InvalidParameter {
                what: alloc::string::String::from(
                    "tail reference weight must be strictly below the envelope weight",
                ),
            });
        }
    }
    Ok(())
}

fn state_envelope_raw(
    family: &EvolutionFamily,
    t: f64,
    x: &[f64],
    cfg: &EnvelopeConfig,
) -> Result<EnvelopeValue, CoreError> {
    validate_config(cfg)?;
    if x.len() != family.dimension() {
        return Err(CoreError::DimensionMismatch { expected: family.dimension(), got: x.len() });
    }
    let norm_x = family.norm_kind().vector_norm(x);
    if norm_x == 0.0 {
        // Linearity: the whole forward trajectory is zero.
        return Ok(EnvelopeValue {
            value: 0.0,
            arg_tau: t,
            tail_bound: None,
            tail_dominates: false,
            certified: true,
        });
    }

    let mut end = t + cfg.horizon;
    let mut domain_complete = false;
    if let Some(de) = family.domain_end() {
        if end >= de {
            end = de;
            domain_complete = true;
        }
    }
    if !(end > t) {
        // Anchor sits at the end of the domain: the sup is over {t} alone.
        return Ok(EnvelopeValue {
            value: norm_x,
            arg_tau: t,
            tail_bound: None,
            tail_dominates: false,
            certified: true,
        });
    }

    let grid = uniform_grid(t, end, cfg.tau_step);
    let prof = EnvelopeProfile::for_state(family, t, x, &grid, cfg.alpha, cfg.refine_depth)?;
    let value = prof.phi_base(0);
    let arg_tau = prof.arg_tau_base(0);

    if domain_complete {
        return Ok(EnvelopeValue {
            value,
            arg_tau,
            tail_bound: None,
            tail_dominates: false,
            certified: true,
        });
    }
    match &cfg.tail {
        None => Ok(EnvelopeValue {
            value,
            arg_tau,
            tail_bound: None,
            tail_dominates: false,
            certified: false,
        }),
        Some(tb) => {
            let m = tb.m_ref.eval(t);
            let tail = m * ((tb.alpha_ref - cfg.alpha) * (end - t)).exp() * norm_x;
            if !tail.is_finite() {
                return Err(CoreError::NonFiniteValue { t: end });
            }
            Ok(EnvelopeValue {
                value,
                arg_tau,
                tail_bound: Some(tail),
                tail_dominates: tail > value,
                certified: tail <= cfg.rel_tol * value,
            })
        }
    }
}

/// Probes continuity of t -> envelope(t, u) at t by comparing the
/// change over a step h with the change over h/2.
pub fn continuity_probe(
    family: &EvolutionFamily,
    u: &TimeFunction,
    t: f64,
    h: f64,
    cfg: &EnvelopeConfig,
) -> Result<ContinuityReport, CoreError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("continuity probe step must be positive"),
        });
    }
    let p0 = envelope(family, u, t, cfg)?.value;
    let ph = envelope(family, u, t + h, cfg)?.value;
    let p2 = envelope(family, u, t + h / 2.0, cfg)?.value;
    let delta_h = (ph - p0).abs();
    let delta_half = (p2 - p0).abs();
    let scale = p0.abs().max(ph.abs()).max(1e-300);
    let ratio = if delta_h > 0.0 { Some(delta_half / delta_h) } else { None };
    // Continuity evidence: the half-step change shrinks with the step,
    // or both changes are negligible against the value itself.
    let pass = delta_half <= 0.9 * delta_h + 1e-9 * scale;
    Ok(ContinuityReport { t, h, value_at_t: p0, delta_h, delta_half, ratio, pass })
}

/// Ascending grid from start to end with spacing at most `step`; both
/// ends are included exactly and the spacing is uniform.
pub(crate) fn uniform_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let span = end - start;
    let k = ((span / step).ceil() as usize).max(1);
    let mut g: Vec<f64> = (0..k).map(|i| start + span * (i as f64) / (k as f64)).collect();
    g.push(end);
    g
}

struct Bracket {
    lo: f64,
    hi: f64,
    best_tau: f64,
    best_r: f64,
}

/// Log-space suffix structure behind every envelope-like sup.
///
/// Holds samples (tau_i, ln w(tau_i)) of a weighted trajectory, merged
/// from a caller grid and refinement points, plus the running suffix
/// maximum of r_i = ln w(tau_i) - alpha tau_i. The envelope anchored at
/// a grid point tau_k is then e^{alpha tau_k + suffix_k}; the suffix is
/// non-increasing by construction, which makes the anchored-decay
/// comparisons downstream exact rather than approximate.
pub(crate) struct EnvelopeProfile {
    alpha: f64,
    taus: Vec<f64>,
    suffix: Vec<f64>,
    argmax: Vec<usize>,
    /// Internal index of each caller grid point.
    base: Vec<usize>,
}

impl EnvelopeProfile {
    /// Builds from ln-of-weight samples supplied by `sample_log`, which
    /// receives ascending times and returns ln w at each. Values may be
    /// -inf (zero weight) but not NaN.
    pub(crate) fn build_with<F>(
        sample_log: &F,
        grid: &[f64],
        alpha: f64,
        refine_depth: usize,
    ) -> Result<Self, CoreError>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>, CoreError>,
    {
        if grid.is_empty() {
            return Err(CoreError::EmptyInput { what: "envelope grid" });
        }
        for w in grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::TimeOrder { t: w[1], s: w[0] });
            }
        }
        let base_logs = sample_log(grid)?;
        if base_logs.len() != grid.len() {
            return Err(CoreError::DimensionMismatch {
                expected: grid.len(),
                got: base_logs.len(),
            });
        }
        for (tau, lw) in grid.iter().zip(&base_logs) {
            if lw.is_nan() {
                return Err(CoreError::NonFiniteValue { t: *tau });
            }
        }
        let n = grid.len();
        let r: Vec<f64> = grid.iter().zip(&base_logs).map(|(tau, lw)| lw - alpha * tau).collect();

        // Bracket every local maximum of r; interior peaks get both
        // neighbours, edge peaks the single adjacent cell. The left test
        // is strict so a plateau contributes one bracket, not one per
        // node (r is exactly constant for scalar families at the
        // matching weight).
        let mut brackets: Vec<Bracket> = Vec::new();
        if n >= 2 && refine_depth > 0 {
            for j in 0..n {
                let left_ok = j == 0 || r[j] > r[j - 1];
                let right_ok = j == n - 1 || r[j] >= r[j + 1];
                if left_ok && right_ok && r[j] > f64::NEG_INFINITY {
                    brackets.push(Bracket {
                        lo: grid[j.saturating_sub(1)],
                        hi: grid[(j + 1).min(n - 1)],
                        best_tau: grid[j],
                        best_r: r[j],
                    });
                }
            }
        }

        let mut extra: Vec<(f64, f64)> = Vec::new();
        for _ in 0..refine_depth {
            if brackets.is_empty() {
                break;
            }
            let mut cands: Vec<f64> = Vec::new();
            for b in &brackets {
                let w = b.hi - b.lo;
                if w <= 0.0 {
                    continue;
                }
                for i in 1..8 {
                    cands.push(b.lo + w * (i as f64) / 8.0);
                }
            }
            cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cands.dedup();
            if cands.is_empty() {
                break;
            }
            let logs = sample_log(&cands)?;
            if logs.len() != cands.len() {
                return Err(CoreError::DimensionMismatch {
                    expected: cands.len(),
                    got: logs.len(),
                });
            }
            for (tau, lw) in cands.iter().zip(&logs) {
                if lw.is_nan() {
                    return Err(CoreError::NonFiniteValue { t: *tau });
                }
                extra.push((*tau, *lw));
            }
            for b in &mut brackets {
                for (tau, lw) in cands.iter().zip(&logs) {
                    if *tau >= b.lo && *tau <= b.hi {
                        let rv = lw - alpha * tau;
                        if rv > b.best_r {
                            b.best_r = rv;
                            b.best_tau = *tau;
                        }
                    }
                }
                let w = b.hi - b.lo;
                b.lo = (b.best_tau - w / 8.0).max(b.lo);
                b.hi = (b.best_tau + w / 8.0).min(b.hi);
            }
        }

        // Merge the base grid and refinement samples into one profile.
        let mut pts: Vec<(f64, f64, Option<usize>)> = Vec::with_capacity(n + extra.len());
        for (k, (tau, lw)) in grid.iter().zip(&base_logs).enumerate() {
            pts.push((*tau, *lw, Some(k)));
        }
        for (tau, lw) in extra {
            pts.push((tau, lw, None));
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut taus: Vec<f64> = Vec::with_capacity(pts.len());
        let mut logw: Vec<f64> = Vec::with_capacity(pts.len());
        let mut base = alloc::vec![usize::MAX; n];
        for (tau, lw, marker) in pts {
            if let Some(&last) = taus.last() {
                if tau == last {
                    let li = logw.len() - 1;
                    if lw > logw[li] {
                        logw[li] = lw;
                    }
                    if let Some(k) = marker {
                        base[k] = li;
                    }
                    continue;
                }
            }
            if let Some(k) = marker {
                base[k] = taus.len();
            }
            taus.push(tau);
            logw.push(lw);
        }

        let m = taus.len();
        let mut suffix = alloc::vec![0.0; m];
        let mut argmax = alloc::vec![0usize; m];
        let mut best = f64::NEG_INFINITY;
        let mut best_i = m - 1;
        for i in (0..m).rev() {
            let rv = logw[i] - alpha * taus[i];
            if rv >= best {
                best = rv;
                best_i = i;
            }
            suffix[i] = best;
            argmax[i] = best_i;
        }
        Ok(EnvelopeProfile { alpha, taus, suffix, argmax, base })
    }

    /// Profile of ||U(tau, anchor_t) x|| over the given grid, which must
    /// start at anchor_t.
    pub(crate) fn for_state(
        family: &EvolutionFamily,
        anchor_t: f64,
        x: &[f64],
        grid: &[f64],
        alpha: f64,
        refine_depth: usize,
    ) -> Result<Self, CoreError> {
        let sample = |ts: &[f64]| -> Result<Vec<f64>, CoreError> {
            let states = family.trajectory(anchor_t, x, ts)?;
            Ok(states
                .iter()
                .map(|st| {
                    let nv = family.norm_kind().vector_norm(st);
                    if nv == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        nv.ln()
                    }
                })
                .collect())
        };
        Self::build_with(&sample, grid, alpha, refine_depth)
    }

    pub(crate) fn tau_base(&self, k: usize) -> f64 {
        self.taus[self.base[k]]
    }

    /// ln of the envelope anchored at the k-th caller grid point.
    pub(crate) fn log_phi_base(&self, k: usize) -> f64 {
        let i = self.base[k];
        self.alpha * self.taus[i] + self.suffix[i]
    }

    pub(crate) fn phi_base(&self, k: usize) -> f64 {
        self.log_phi_base(k).exp()
    }

    /// Where the sup anchored at the k-th grid point is attained.
    pub(crate) fn arg_tau_base(&self, k: usize) -> f64 {
        self.taus[self.argmax[self.base[k]]]
    }
}
