//! The integral condition on decay envelopes and what it certifies.
//!
//! The central quantity is, for a weight alpha and exponent p >= 1,
//!
//! ```text
//!     I(t, u) = integral over xi >= t of phi^p(xi, cut_t u) d xi,
//! ```
//!
//! where phi is the decay envelope and cut_t freezes u at t. When
//! I(t, u) <= K phi^p(t, u) uniformly, explicit constants N, N~ and a
//! decay rate follow, and the family's propagator obeys
//! ||U(t, s)|| <= N~ M(s) e^{-rate (t - s)}. This module measures the
//! integral (Simpson ladder with Richardson extrapolation on a shared
//! envelope profile), estimates K, checks the necessity-side bound
//! 1/(-p alpha), builds and verifies certificates, and exposes the
//! integral as an energy functional with an additivity check.

use alloc::rc::Rc;
use alloc::vec::Vec;

// Unused when a dependency turns on num-traits/std: inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;

use crate::admissibility::BoundingFunction;
use crate::envelope::{uniform_grid, validate_config, EnvelopeConfig, EnvelopeProfile, TailBound};
use crate::error::CoreError;
use crate::family::{BackendKind, EvolutionFamily};
use crate::rng::SplitMix64;
use crate::timefn::TimeFunction;

#[derive(Debug, Clone)]
pub struct QuadConfig {
    /// Length of the integration window past the anchor.
    pub window: f64,
    /// Target spacing of quadrature nodes.
    pub dense_step: f64,
    /// Relative agreement required of the two finest Simpson levels.
    pub rel_tol: f64,
    /// Dominates the integral past the window; requires a negative
    /// admissible reference weight below the envelope weight.
    pub tail: Option<TailBound>,
    /// Tail-to-value ratio below which a measurement is certified.
    pub cert_rel_tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            window: 40.0,
            dense_step: 0.005,
            rel_tol: 1e-8,
            tail: None,
            cert_rel_tol: 1e-6,
        }
    }
}

fn validate_quad(quad: &QuadConfig, alpha: f64) -> Result<(), CoreError> {
    if !(quad.window > 0.0) || !quad.window.is_finite() {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("quadrature window must be positive and finite"),
        });
    }
    if !(quad.dense_step > 0.0) {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("quadrature dense_step must be positive"),
        });
    }
    if !(quad.rel_tol > 0.0) || !(quad.cert_rel_tol >= 0.0) {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("quadrature tolerances must be positive"),
        });
    }
    if let Some(tb) = &quad.tail {
        if !(tb.alpha_ref < 0.0) || !(tb.alpha_ref < alpha) {
            return Err(CoreError::InvalidParameter {
                what: alloc::string::String::from(
                    "integral tail reference must be negative and below the envelope weight",
                ),
            });
        }
    }
    Ok(())
}

fn validate_p(p: f64) -> Result<(), CoreError> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("exponent p must be finite and at least 1"),
        });
    }
    Ok(())
}

/// What was left out of a windowed integral.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub window: f64,
    /// Richardson error estimate |S_fine - S_coarse| / 15.
    pub quad_error: f64,
    pub tail_bound: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DatkoMeasurement {
    pub p: f64,
    pub alpha: f64,
    pub t: f64,
    /// Quadrature value over [t, t + window].
    pub integral: f64,
    /// Envelope of u at the anchor.
    pub phi_at_t: f64,
    /// (integral + tail) / phi^p: the constant this case witnesses.
    /// None when the anchor state is zero.
    pub ratio: Option<f64>,
    /// True when the part past the window is provably below
    /// cert_rel_tol times the integral (or the domain ends inside it).
    pub certified: bool,
    pub truncation: Truncation,
}

/// Basis vectors plus random unit vectors, the standard probe suite.
fn probe_suite(n: usize, random_probes: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut probes: Vec<Vec<f64>> = Vec::with_capacity(n + random_probes);
    for i in 0..n {
        let mut e = alloc::vec![0.0; n];
        e[i] = 1.0;
        probes.push(e);
    }
    let mut rng = SplitMix64::new(seed);
    for _ in 0..random_probes {
        probes.push(rng.unit_vector(n));
    }
    probes
}

/// Simpson rule using every stride-th value; (len - 1) must be an even
/// multiple of stride.
fn simpson_strided(vals: &[f64], h: f64, stride: usize) -> f64 {
    let m = (vals.len() - 1) / stride;
    debug_assert!(m >= 2 && m % 2 == 0 && m * stride == vals.len() - 1);
    let mut acc = vals[0] + vals[m * stride];
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * vals[k * stride];
    }
    acc * h * (stride as f64) / 3.0
}

/// Integrand values phi^p at the first `count` profile grid points.
fn integrand(prof: &EnvelopeProfile, p: f64, count: usize) -> Result<Vec<f64>, CoreError> {
    let mut vals = Vec::with_capacity(count);
    for k in 0..count {
        let lp = p * prof.log_phi_base(k);
        if lp > 700.0 {
            return Err(CoreError::Overflow { t: prof.tau_base(k) });
        }
        vals.push(lp.exp());
    }
    Ok(vals)
}

/// Simpson ladder on strides 4, 2, 1 with a convergence check and
/// Richardson extrapolation of the finest pair.
fn simpson_ladder(vals: &[f64], h: f64, rel_tol: f64) -> Result<(f64, f64), CoreError> {
    let s1 = simpson_strided(vals, h, 4);
    let s2 = simpson_strided(vals, h, 2);
    let s3 = simpson_strided(vals, h, 1);
    let err = (s3 - s2).abs();
    let scale = s3.abs().max(1e-300);
    // Converged outright, or still contracting like an O(h^4) rule:
    // Richardson is trustworthy.
    if err <= rel_tol * scale || err <= 0.25 * (s2 - s1).abs() {
        return Ok((s3 + (s3 - s2) / 15.0, err / 15.0));
    }
    // The integrand is only piecewise smooth where the active envelope
    // peak switches; the stride errors then shrink at lower order and
    // lose monotonicity. Keep the finest sum with the last step as the
    // error bar, and fail only a ladder that is still moving coarsely.
    if err <= 1e-4 * scale {
        return Ok((s3, err));
    }
    Err(CoreError::QuadratureStall { last: s3, previous: s2 })
}

/// Bound for the integral of phi^p past the window, from a negative
/// admissible reference weight. In log scale:
/// p (ln sup M_ref + ln M_ref(t) + ln ||u(t)||) + p alpha_ref W
/// - ln(-p alpha_ref).
fn integral_tail_bound(tb: &TailBound, p: f64, t: f64, norm_anchor: f64, span: f64) -> f64 {
    let log_tail = p * (tb.m_ref.max_log_value() + tb.m_ref.log_eval(t) + norm_anchor.ln())
        + p * tb.alpha_ref * span
        - (-p * tb.alpha_ref).ln();
    log_tail.min(700.0).exp()
}

/// Measures the windowed integral of phi^p along the cut of u at t and
/// the constant it witnesses.
pub fn datko_integral(
    family: &Rc<EvolutionFamily>,
    u: &TimeFunction,
    p: f64,
    t: f64,
    env: &EnvelopeConfig,
    quad: &QuadConfig,
) -> Result<DatkoMeasurement, CoreError> {
    validate_config(env)?;
    validate_quad(quad, env.alpha)?;
    validate_p(p)?;
    let anchor = u.eval(t)?;
    if anchor.len() != family.dimension() {
        return Err(CoreError::DimensionMismatch {
            expected: family.dimension(),
            got: anchor.len(),
        });
    }
    let norm_anchor = family.norm_kind().vector_norm(&anchor);
    if norm_anchor == 0.0 {
        return Ok(DatkoMeasurement {
            p,
            alpha: env.alpha,
            t,
            integral: 0.0,
            phi_at_t: 0.0,
            ratio: None,
            certified: true,
            truncation: Truncation { window: quad.window, quad_error: 0.0, tail_bound: None },
        });
    }

    let mut end_q = t + quad.window;
    let mut domain_complete = false;
    if let Some(de) = family.domain_end() {
        if end_q >= de {
            end_q = de;
            domain_complete = true;
        }
    }
    if !(end_q > t) {
        // Anchor at the domain end: nothing left to integrate over.
        return Ok(DatkoMeasurement {
            p,
            alpha: env.alpha,
            t,
            integral: 0.0,
            phi_at_t: norm_anchor,
            ratio: Some(0.0),
            certified: true,
            truncation: Truncation { window: 0.0, quad_error: 0.0, tail_bound: None },
        });
    }
    let span = end_q - t;
    let m3 = 16 * (((span / (16.0 * quad.dense_step)).ceil() as usize).max(1));
    let h = span / m3 as f64;
    let mut grid: Vec<f64> = (0..=m3).map(|k| t + span * (k as f64) / (m3 as f64)).collect();
    let mut prof_end = end_q + env.horizon;
    if let Some(de) = family.domain_end() {
        prof_end = prof_end.min(de);
    }
    if prof_end > end_q {
        let ext = uniform_grid(end_q, prof_end, env.tau_step);
        grid.extend_from_slice(&ext[1..]);
    }
    let prof = EnvelopeProfile::for_state(family, t, &anchor, &grid, env.alpha, env.refine_depth)?;
    let vals = integrand(&prof, p, m3 + 1)?;
    let (integral, quad_error) = simpson_ladder(&vals, h, quad.rel_tol)?;
    let phi_at_t = prof.phi_base(0);

    let tail_bound = if domain_complete {
        None
    } else {
        quad.tail.as_ref().map(|tb| integral_tail_bound(tb, p, t, norm_anchor, span))
    };
    let certified =
        domain_complete || tail_bound.is_some_and(|tl| tl <= quad.cert_rel_tol * integral);
    let log_phi_p = p * prof.log_phi_base(0);
    let ratio = if log_phi_p > 700.0 {
        return Err(CoreError::Overflow { t });
    } else {
        Some((integral + tail_bound.unwrap_or(0.0)) / log_phi_p.exp())
    };
    Ok(DatkoMeasurement {
        p,
        alpha: env.alpha,
        t,
        integral,
        phi_at_t,
        ratio,
        certified,
        truncation: Truncation { window: span, quad_error, tail_bound },
    })
}

/// The measured integral-condition constant over a probe suite.
#[derive(Debug, Clone)]
pub struct DatkoConstant {
    pub p: f64,
    pub alpha: f64,
    /// Constant witnessed with the doubled window (the value to use).
    pub value: f64,
    /// Constant witnessed with the base window.
    pub short_value: f64,
    pub cases: usize,
    /// (anchor time, probe index) of the worst case.
    pub worst: (f64, usize),
    pub all_certified: bool,
}

/// Estimates K = sup over probes of I(t, u) / phi^p(t, u) with basis
/// probes plus random unit probes at each anchor time; the run is
/// repeated with the window doubled and must agree within 5 percent,
/// which rejects families whose integral has not converged.
pub fn measure_datko_constant(
    family: &Rc<EvolutionFamily>,
    p: f64,
    t_points: &[f64],
    random_probes: usize,
    seed: u64,
    env: &EnvelopeConfig,
    quad: &QuadConfig,
) -> Result<DatkoConstant, CoreError> {
    if t_points.is_empty() {
        return Err(CoreError::EmptyInput { what: "constant measurement anchor times" });
    }
    let probes = probe_suite(family.dimension(), random_probes, seed);
    let mut quad_long = quad.clone();
    quad_long.window = 2.0 * quad.window;

    let mut k_short = 0.0f64;
    let mut k_long = 0.0f64;
    let mut worst = (t_points[0], 0usize);
    let mut all_certified = true;
    let mut cases = 0usize;
    for &t in t_points {
        for (pi, x) in probes.iter().enumerate() {
            let u = TimeFunction::constant(x.clone())?;
            let short = datko_integral(family, &u, p, t, env, quad)?;
            let long = datko_integral(family, &u, p, t, env, &quad_long)?;
            cases += 1;
            all_certified &= long.certified;
            if let Some(r) = short.ratio {
                k_short = k_short.max(r);
            }
            if let Some(r) = long.ratio {
                if r > k_long {
                    k_long = r;
                    worst = (t, pi);
                }
            }
        }
    }
    if k_long > 1.05 * k_short {
        return Err(CoreError::KValidationFailed { k_short, k_long });
    }
    Ok(DatkoConstant {
        p,
        alpha: env.alpha,
        value: k_long,
        short_value: k_short,
        cases,
        worst,
        all_certified,
    })
}

#[derive(Debug, Clone)]
pub struct NecessityCase {
    pub t: f64,
    pub probe: usize,
    pub ratio: f64,
    pub certified: bool,
}

/// Measured ratios against the closed-form ceiling 1/(-p alpha).
#[derive(Debug, Clone)]
pub struct NecessityReport {
    pub p: f64,
    pub alpha: f64,
    /// 1/(-p alpha).
    pub bound: f64,
    pub max_ratio: f64,
    pub cases: Vec<NecessityCase>,
    pub rel_slack: f64,
    pub pass: bool,
}

/// For a negative admissible weight, every ratio I(t, u)/phi^p(t, u)
/// must stay below 1/(-p alpha); this checks that on a probe suite.
pub fn necessity_check(
    family: &Rc<EvolutionFamily>,
    p: f64,
    t_points: &[f64],
    random_probes: usize,
    seed: u64,
    env: &EnvelopeConfig,
    quad: &QuadConfig,
    rel_slack: f64,
) -> Result<NecessityReport, CoreError> {
    if !(env.alpha < 0.0) {
        return Err(CoreError::InadmissibleExponent { alpha: env.alpha });
    }
    validate_p(p)?;
    let bound = 1.0 / (-p * env.alpha);
    let probes = probe_suite(family.dimension(), random_probes, seed);
    let mut cases = Vec::new();
    let mut max_ratio = 0.0f64;
    for &t in t_points {
        for (pi, x) in probes.iter().enumerate() {
            let u = TimeFunction::constant(x.clone())?;
            let m = datko_integral(family, &u, p, t, env, quad)?;
            if let Some(r) = m.ratio {
                max_ratio = max_ratio.max(r);
                cases.push(NecessityCase { t, probe: pi, ratio: r, certified: m.certified });
            }
        }
    }
    let pass = max_ratio <= bound * (1.0 + rel_slack);
    Ok(NecessityReport { p, alpha: env.alpha, bound, max_ratio, cases, rel_slack, pass })
}

/// The integral viewed as an energy of the state at t.
#[derive(Debug, Clone)]
pub struct EnergyValue {
    pub t: f64,
    pub value: f64,
    pub tail_bound: Option<f64>,
    pub certified: bool,
}

/// W(t, u) = I(t, u), the forward energy left in the cut trajectory.
pub fn energy_functional(
    family: &Rc<EvolutionFamily>,
    u: &TimeFunction,
    p: f64,
    t: f64,
    env: &EnvelopeConfig,
    quad: &QuadConfig,
) -> Result<EnergyValue, CoreError> {
    let m = datko_integral(family, u, p, t, env, quad)?;
    Ok(EnergyValue {
        t,
        value: m.integral,
        tail_bound: m.truncation.tail_bound,
        certified: m.certified,
    })
}

/// Windowed-energy bookkeeping between two anchor times.
#[derive(Debug, Clone)]
pub struct EnergyBalanceReport {
    pub t0: f64,
    /// Split time actually used (snapped onto the quadrature grid).
    pub t: f64,
    pub w_t0: f64,
    /// Integral of phi^p over [t0, t] along the cut at t0.
    pub middle: f64,
    pub w_t: f64,
    /// w_t0 - middle - w_t.
    pub residual: f64,
    pub rel_residual: f64,
    pub rel_slack: f64,
    pub pass: bool,
}

/// Checks the energy bookkeeping W(t0) = middle + W(t) for the cut of u
/// at t0, with all three integrals on one shared profile and one fixed
/// Simpson grid whose nodes contain the split time.
pub fn check_energy_balance(
    family: &Rc<EvolutionFamily>,
    u: &TimeFunction,
    p: f64,
    t0: f64,
    t: f64,
    env: &EnvelopeConfig,
    quad: &QuadConfig,
    rel_slack: f64,
) -> Result<EnergyBalanceReport, CoreError> {
    validate_config(env)?;
    validate_quad(quad, env.alpha)?;
    validate_p(p)?;
    if !(t > t0) || !(t < t0 + quad.window) {
        return Err(CoreError::TimeOrder { t, s: t0 });
    }
    let anchor = u.eval(t0)?;
    if anchor.len() != family.dimension() {
        return Err(CoreError::DimensionMismatch {
            expected: family.dimension(),
            got: anchor.len(),
        });
    }
    if family.norm_kind().vector_norm(&anchor) == 0.0 {
        return Ok(EnergyBalanceReport {
            t0,
            t,
            w_t0: 0.0,
            middle: 0.0,
            w_t: 0.0,
            residual: 0.0,
            rel_residual: 0.0,
            rel_slack,
            pass: true,
        });
    }
    let mut end_q = t0 + quad.window;
    if let Some(de) = family.domain_end() {
        end_q = end_q.min(de);
        if t >= end_q {
            return Err(CoreError::OutOfDomain { t, domain_end: end_q });
        }
    }
    // Even node counts on both sides of the split keep all three ranges
    // Simpson-compatible on one grid.
    let n_mid = 2 * (((t - t0) / (2.0 * quad.dense_step)).round() as usize).max(1);
    let h = (t - t0) / n_mid as f64;
    let mut n_ext = (((end_q - t) / (2.0 * h)).ceil() as usize).max(1);
    if family.domain_end().is_some() {
        // A bounded domain must not be overshot by the even-count
        // rounding; shrink instead.
        n_ext = (((end_q - t) / (2.0 * h)).floor() as usize).max(1);
        if t0 + ((n_mid + 2 * n_ext) as f64) * h > end_q + 1e-9 {
            return Err(CoreError::OutOfDomain { t, domain_end: end_q });
        }
    }
    let n_tot = n_mid + 2 * n_ext;
    let mut grid: Vec<f64> = (0..=n_tot).map(|k| t0 + h * k as f64).collect();
    let quad_end = grid[n_tot];
    let mut prof_end = quad_end + env.horizon;
    if let Some(de) = family.domain_end() {
        prof_end = prof_end.min(de);
    }
    if prof_end > quad_end {
        let ext = uniform_grid(quad_end, prof_end, env.tau_step);
        grid.extend_from_slice(&ext[1..]);
    }
    let prof = EnvelopeProfile::for_state(family, t0, &anchor, &grid, env.alpha, env.refine_depth)?;
    let vals = integrand(&prof, p, n_tot + 1)?;
    let w_t0 = simpson_strided(&vals, h, 1);
    let middle = simpson_strided(&vals[..=n_mid], h, 1);
    let w_t = simpson_strided(&vals[n_mid..], h, 1);
    let residual = w_t0 - middle - w_t;
    let rel_residual = residual.abs() / w_t0.abs().max(1e-300);
    Ok(EnergyBalanceReport {
        t0,
        t: prof.tau_base(n_mid),
        w_t0,
        middle,
        w_t,
        residual,
        rel_residual,
        rel_slack,
        pass: rel_residual <= rel_slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertStatus {
    Passed,
    Failed,
}

#[derive(Debug, Clone, Copy)]
pub struct CertificateConstants {
    /// N = max(e^{p alpha} K, e^{p alpha}).
    pub n: f64,
    /// N~ = (N / (1 - delta))^{1/p}.
    pub n_tilde: f64,
    /// delta / (p N).
    pub rate: f64,
}

/// The explicit constants the integral condition buys.
pub fn certificate_constants(
    p: f64,
    k: f64,
    alpha: f64,
    delta: f64,
) -> Result<CertificateConstants, CoreError> {
    validate_p(p)?;
    if !(k > 0.0) || !k.is_finite() {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from("constant K must be positive and finite"),
        });
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(CoreError::InadmissibleExponent { alpha });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CoreError::InvalidDelta { delta });
    }
    let epa = (p * alpha).exp();
    let n = (epa * k).max(epa);
    let base = n / (1.0 - delta);
    let n_tilde = if p == 1.0 { base } else { base.powf(1.0 / p) };
    let rate = delta / (p * n);
    if !n.is_finite() || !n_tilde.is_finite() || !rate.is_finite() {
        return Err(CoreError::Overflow { t: alpha });
    }
    Ok(CertificateConstants { n, n_tilde, rate })
}

#[derive(Debug, Clone)]
pub struct StabilityCertificate {
    pub p: f64,
    pub alpha: f64,
    pub k: f64,
    pub delta: f64,
    pub n: f64,
    pub n_tilde: f64,
    pub rate: f64,
    pub pairs: usize,
    /// (t, s) with the smallest margin.
    pub worst_pair: (f64, f64),
    /// min over pairs of ln(N~ M(s) e^{-rate (t-s)}) - ln ||U(t, s)||.
    pub min_log_margin: f64,
    pub status: CertStatus,
}

/// Builds the decay certificate from a measured K and verifies the
/// resulting bound ||U(t, s)|| <= N~ M(s) e^{-rate (t - s)} on a grid
/// of pairs. m_ref must be the bounding function for the same weight
/// the constant was measured at.
pub fn build_certificate(
    family: &EvolutionFamily,
    p: f64,
    k: f64,
    alpha: f64,
    delta: f64,
    m_ref: &BoundingFunction,
    pairs: &[(f64, f64)],
) -> Result<StabilityCertificate, CoreError> {
    let c = certificate_constants(p, k, alpha, delta)?;
    if pairs.is_empty() {
        return Err(CoreError::EmptyInput { what: "certificate verification pairs" });
    }
    if (m_ref.alpha() - alpha).abs() > 1e-12 {
        return Err(CoreError::InvalidParameter {
            what: alloc::string::String::from(
                "bounding function weight does not match the certificate weight",
            ),
        });
    }
    for &(t, s) in pairs {
        if t < s {
            return Err(CoreError::TimeOrder { t, s });
        }
    }

    // ln ||U(t, s)|| per pair; for integrating backends, pairs sharing
    // a start time ride one trajectory.
    let mut log_meas = alloc::vec![0.0; pairs.len()];
    match family.kind() {
        BackendKind::ScalarExp => {
            for (i, &(t, s)) in pairs.iter().enumerate() {
                log_meas[i] = family.log_operator_norm(t, s)?;
            }
        }
        _ => {
            let mut order: Vec<usize> = (0..pairs.len()).collect();
            order.sort_by(|&a, &b| {
                (pairs[a].1, pairs[a].0).partial_cmp(&(pairs[b].1, pairs[b].0)).unwrap()
            });
            let mut i = 0;
            while i < order.len() {
                let s = pairs[order[i]].1;
                let mut j = i;
                while j < order.len() && pairs[order[j]].1 == s {
                    j += 1;
                }
                let ts: Vec<f64> = order[i..j].iter().map(|&idx| pairs[idx].0).collect();
                let ests = family.operator_norm_trajectory(s, &ts)?;
                for (&idx, est) in order[i..j].iter().zip(&ests) {
                    if !(est.value > 0.0) || !est.value.is_finite() {
                        return Err(CoreError::Overflow { t: pairs[idx].0 });
                    }
                    log_meas[idx] = est.value.ln();
                }
                i = j;
            }
        }
    }

    let ln_n_tilde = c.n_tilde.ln();
    let mut min_margin = f64::INFINITY;
    let mut worst = pairs[0];
    for (&(t, s), &lm) in pairs.iter().zip(&log_meas) {
        let margin = ln_n_tilde + m_ref.log_eval(s) - c.rate * (t - s) - lm;
        if margin < min_margin {
            min_margin = margin;
            worst = (t, s);
        }
    }
    let status = if min_margin >= -1e-9 { CertStatus::Passed } else { CertStatus::Failed };
    Ok(StabilityCertificate {
        p,
        alpha,
        k,
        delta,
        n: c.n,
        n_tilde: c.n_tilde,
        rate: c.rate,
        pairs: pairs.len(),
        worst_pair: worst,
        min_log_margin: min_margin,
        status,
    })
}
