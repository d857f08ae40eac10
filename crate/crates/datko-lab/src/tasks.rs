//! Task execution: builds the family, runs each task, and collects
//! report fragments plus CSV payloads. All randomness is derived from
//! the run seed and the task index, so sequential and parallel runs
//! produce identical fragments.

use std::path::Path;
use std::rc::Rc;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use datko_core::admissibility::{
    admissibility_verdict, boundary_search, bounding_function, lyapunov_exponent, BoundingFunction,
    Verdict, VerdictConfig,
};
use datko_core::cut::{
    check_cut_invariance, check_cut_norm_bound, check_decay_bound, check_projection_algebra,
};
use datko_core::datko::{
    build_certificate, check_energy_balance, measure_datko_constant, necessity_check, CertStatus,
    QuadConfig,
};
use datko_core::envelope::{envelope, EnvelopeConfig, TailBound};
use datko_core::expr::{parse_generator, Expr};
use datko_core::family::{BackendKind, EvolutionFamily};
use datko_core::linalg::{Matrix, NormKind};
use datko_core::rng::{derive_stream, SplitMix64};
use datko_core::timefn::TimeFunction;
use datko_core::CoreError;

use crate::config::{
    AdmissibleTask, CertifyTask, ConfigFile, DatkoTask, FamilySpec, LyapunovTask, MRefOpts,
    PhiTask, QuadOpts, SignalSpec, SuiteName, TailRefSpec, TaskSpec, VerifyPropsTask,
};
use crate::csvio;
use crate::report::{
    AdmissibleFragment, BoundaryFragment, CertificateJson, CertifyFragment, DatkoConstantFragment,
    DatkoFragment, FamilySummary, FragmentBody, KValidationFragment, LyapunovFragment,
    NecessityFragment, PhiFragment, PropsFragment, SuiteFragment, TaskFragment, TaskTiming,
    VerdictFragment,
};

/// Thread-shareable recipe for a family; each worker instantiates its
/// own copy, so the non-Send runtime objects never cross threads.
pub enum FamilyBlueprint {
    Scalar { f: Expr, dim: usize, norm: NormKind },
    Ode { a: Vec<Vec<f64>>, integrator_tol: f64, max_step: f64, norm: NormKind },
    Tabulated { rows: Arc<Vec<(f64, f64, Vec<f64>)>>, norm: NormKind },
}

impl FamilyBlueprint {
    pub fn build(spec: &FamilySpec, base_dir: &Path) -> Result<(Self, FamilySummary)> {
        let bp = match spec {
            FamilySpec::ScalarExp(s) => {
                let f = parse_generator(&s.f)
                    .map_err(|e| anyhow!("family generator `{}`: {e}", s.f))?;
                FamilyBlueprint::Scalar { f, dim: s.dim, norm: s.norm.kind() }
            }
            FamilySpec::MatrixOde(s) => {
                let mut a = Vec::with_capacity(s.a.len());
                for row in &s.a {
                    let mut out = Vec::with_capacity(row.len());
                    for entry in row {
                        out.push(constant_entry(entry)?);
                    }
                    a.push(out);
                }
                FamilyBlueprint::Ode {
                    a,
                    integrator_tol: s.integrator_tol,
                    max_step: s.max_step,
                    norm: s.norm.kind(),
                }
            }
            FamilySpec::Tabulated(s) => {
                let rows = csvio::read_table(&base_dir.join(&s.path))?;
                FamilyBlueprint::Tabulated { rows: Arc::new(rows), norm: s.norm.kind() }
            }
        };
        // Instantiate once up front: this validates the block (square
        // matrix, coherent table grid) before any task starts.
        let family = bp.instantiate()?;
        let domain = match (family.domain_start(), family.domain_end()) {
            (Some(lo), Some(hi)) => Some([lo, hi]),
            _ => None,
        };
        let summary = FamilySummary {
            kind: spec.kind_name(),
            dimension: family.dimension(),
            norm: spec.norm().name(),
            reversible: family.reversible(),
            domain,
            caveat: match family.kind() {
                BackendKind::Tabulated => Some("interpolated"),
                _ => None,
            },
        };
        Ok((bp, summary))
    }

    pub fn instantiate(&self) -> Result<Rc<EvolutionFamily>> {
        let family = match self {
            FamilyBlueprint::Scalar { f, dim, norm } => {
                EvolutionFamily::scalar_exp(f.clone(), *dim, *norm)?
            }
            FamilyBlueprint::Ode { a, integrator_tol, max_step, norm } => {
                EvolutionFamily::matrix_ode(Matrix::from_rows(a)?, *integrator_tol, *max_step, *norm)?
            }
            FamilyBlueprint::Tabulated { rows, norm } => EvolutionFamily::tabulated(rows, *norm)?,
        };
        Ok(Rc::new(family))
    }
}

fn constant_entry(entry: &crate::config::MatrixEntry) -> Result<f64> {
    match entry {
        crate::config::MatrixEntry::Num(v) => {
            if !v.is_finite() {
                bail!("matrix entries must be finite");
            }
            Ok(*v)
        }
        crate::config::MatrixEntry::Expr(src) => {
            let e = parse_generator(src).map_err(|err| anyhow!("matrix entry `{src}`: {err}"))?;
            if contains_time(&e) {
                bail!("matrix entry `{src}` depends on t; the solver takes constant coefficients");
            }
            let v = e.eval(0.0).map_err(|err| anyhow!("matrix entry `{src}`: {err}"))?;
            Ok(v)
        }
    }
}

fn contains_time(e: &Expr) -> bool {
    match e {
        Expr::Const(_) => false,
        Expr::Time => true,
        Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Abs(a) => {
            contains_time(a)
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
            contains_time(a) || contains_time(b)
        }
    }
}

fn build_signal(spec: Option<&SignalSpec>, dim: usize) -> Result<TimeFunction> {
    let tf = match spec {
        None => TimeFunction::constant(vec![1.0; dim])?,
        Some(SignalSpec::Constant { components }) => TimeFunction::constant(components.clone())?,
        Some(SignalSpec::ClosedForm { exprs }) => {
            let mut parsed = Vec::with_capacity(exprs.len());
            for e in exprs {
                parsed.push(
                    parse_generator(e).map_err(|err| anyhow!("signal component `{e}`: {err}"))?,
                );
            }
            TimeFunction::closed_form(parsed)?
        }
        Some(SignalSpec::Samples { times, values }) => {
            TimeFunction::from_samples(times.clone(), values.clone())?
        }
    };
    Ok(tf)
}

fn build_tail(
    family: &EvolutionFamily,
    spec: &TailRefSpec,
    default_span: (f64, f64),
) -> Result<TailBound> {
    let s_grid = match &spec.s_grid {
        Some(g) => g.build()?,
        None => default_ref_grid(family, default_span),
    };
    let window = spec.window.unwrap_or(10.0 * std::f64::consts::PI);
    let t_step = spec.t_step.unwrap_or(0.01);
    let m_ref = bounding_function(family, spec.alpha, &s_grid, window, t_step)?;
    Ok(TailBound { alpha_ref: spec.alpha, m_ref })
}

/// Start-time grid for reference bounds, step 0.25, clipped to the
/// family domain.
fn default_ref_grid(family: &EvolutionFamily, span: (f64, f64)) -> Vec<f64> {
    let mut lo = span.0;
    let mut hi = span.1;
    if let Some(ds) = family.domain_start() {
        lo = lo.max(ds);
    }
    if let Some(de) = family.domain_end() {
        hi = hi.min(de);
    }
    if !(hi > lo) {
        return vec![lo];
    }
    let k = ((hi - lo) / 0.25).ceil().max(1.0) as usize;
    let mut g: Vec<f64> = (0..k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect();
    g.push(hi);
    g
}

fn quad_config(opts: &QuadOpts, tail: Option<TailBound>) -> QuadConfig {
    let mut quad = QuadConfig::default();
    if let Some(w) = opts.window {
        quad.window = w;
    }
    if let Some(s) = opts.dense_step {
        quad.dense_step = s;
    }
    if let Some(r) = opts.rel_tol {
        quad.rel_tol = r;
    }
    if let Some(r) = opts.cert_rel_tol {
        quad.cert_rel_tol = r;
    }
    quad.tail = tail;
    quad
}

/// Default anchor times for constant measurements: 16 points from the
/// domain start, spanning 7.5 time units or half of a bounded domain.
fn default_t_points(family: &EvolutionFamily) -> Vec<f64> {
    let lo = family.domain_start().unwrap_or(0.0);
    let span = match family.domain_end() {
        Some(de) => (0.5 * (de - lo)).min(7.5),
        None => 7.5,
    };
    (0..16).map(|i| lo + span * i as f64 / 15.0).collect()
}

pub struct TaskOutcome {
    pub fragment: TaskFragment,
    pub csvs: Vec<(String, String)>,
    /// Certification verdict when the task kind carries one.
    pub certified: Option<bool>,
    pub ms: u64,
}

pub fn execute_task(
    bp: &FamilyBlueprint,
    caveat: Option<&'static str>,
    task: &TaskSpec,
    index: usize,
    run_seed: u64,
) -> Result<TaskOutcome> {
    let start = std::time::Instant::now();
    let family = bp.instantiate()?;
    let seed = derive_stream(run_seed, index as u64);
    let kind = task.kind_name();
    let mut outcome = match task {
        TaskSpec::Phi(t) => run_phi(&family, t, index),
        TaskSpec::Admissible(t) => run_admissible(&family, t, index),
        TaskSpec::Lyapunov(t) => run_lyapunov(&family, t),
        TaskSpec::Datko(t) => run_datko(&family, t, seed),
        TaskSpec::Certify(t) => run_certify(&family, t, index, seed),
        TaskSpec::VerifyProps(t) => run_verify_props(&family, t, seed),
    }
    .with_context(|| format!("task {index} ({kind})"))?;
    outcome.fragment.index = index;
    outcome.fragment.kind = kind;
    outcome.fragment.caveat = caveat;
    outcome.ms = start.elapsed().as_millis() as u64;
    log::info!(
        "task {index} ({kind}) finished: passed={} in {} ms",
        outcome.fragment.passed,
        outcome.ms
    );
    Ok(outcome)
}

fn blank_fragment(passed: bool, body: FragmentBody) -> TaskFragment {
    TaskFragment { index: 0, kind: "", passed, caveat: None, body }
}

fn run_phi(family: &Rc<EvolutionFamily>, t: &PhiTask, index: usize) -> Result<TaskOutcome> {
    let u = build_signal(t.signal.as_ref(), family.dimension())?;
    let mut env = t.envelope.to_config(t.alpha);
    if let Some(tail) = &t.tail_ref {
        env.tail = Some(build_tail(family, tail, (0.0, 20.0))?);
    }
    let grid = t.grid.build()?;
    let mut rows = Vec::with_capacity(grid.len());
    let mut all_certified = true;
    let mut min_phi = f64::INFINITY;
    let mut max_phi = f64::NEG_INFINITY;
    for &ti in &grid {
        let v = envelope(family, &u, ti, &env)?;
        all_certified &= v.certified;
        min_phi = min_phi.min(v.value);
        max_phi = max_phi.max(v.value);
        rows.push((ti, v.value, v.arg_tau, v.certified));
    }
    let series_file = format!("task{index:02}_phi_vs_t.csv");
    let csv = csvio::phi_series(&rows)?;
    let body = FragmentBody::Phi(PhiFragment {
        alpha: t.alpha,
        points: grid.len(),
        all_certified,
        min_phi,
        max_phi,
        series_file: series_file.clone(),
    });
    Ok(TaskOutcome {
        fragment: blank_fragment(true, body),
        csvs: vec![(series_file, csv)],
        certified: Some(all_certified),
        ms: 0,
    })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Admissible => "admissible",
        Verdict::Growth => "growth_detected",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn run_admissible(
    family: &Rc<EvolutionFamily>,
    t: &AdmissibleTask,
    index: usize,
) -> Result<TaskOutcome> {
    let mut cfg = VerdictConfig::default();
    if let Some(w) = t.window {
        cfg.window = w;
    }
    if let Some(g) = &t.s_grid {
        cfg.s_grid = g.build()?;
    } else if family.domain_end().is_some() {
        cfg.s_grid = default_ref_grid(family, (0.0, 20.0));
    }
    if let Some(s) = t.t_step {
        cfg.t_step = s;
    }
    let mut verdicts = Vec::new();
    let mut csvs = Vec::new();
    for &alpha in &t.alphas {
        let v = admissibility_verdict(family, alpha, &cfg)?;
        let samples: Vec<(f64, f64)> = v.m_short.samples().collect();
        let series_file = format!("task{index:02}_M_vs_s_alpha{alpha}.csv");
        csvs.push((series_file.clone(), csvio::m_vs_s(&samples)?));
        verdicts.push(VerdictFragment {
            alpha,
            verdict: verdict_name(v.verdict),
            growth_ratio: v.growth_ratio,
            window: v.window,
            m_samples: samples.iter().map(|&(s, m)| [s, m]).collect(),
            series_file,
        });
    }
    let boundary = match t.bracket {
        Some([lo, hi]) => {
            let b = boundary_search(family, lo, hi, t.bracket_tol, &cfg)?;
            Some(BoundaryFragment {
                lo: b.lo,
                hi: b.hi,
                value: 0.5 * (b.lo + b.hi),
                iterations: b.iterations,
            })
        }
        None => None,
    };
    let body = FragmentBody::Admissible(AdmissibleFragment { verdicts, boundary });
    Ok(TaskOutcome { fragment: blank_fragment(true, body), csvs, certified: None, ms: 0 })
}

fn run_lyapunov(family: &Rc<EvolutionFamily>, t: &LyapunovTask) -> Result<TaskOutcome> {
    let est = lyapunov_exponent(family, t.t_max, t.grid_step)?;
    let body = FragmentBody::Lyapunov(LyapunovFragment {
        value: est.value,
        window: [est.window.0, est.window.1],
        residual: est.residual,
    });
    Ok(TaskOutcome { fragment: blank_fragment(true, body), csvs: Vec::new(), certified: None, ms: 0 })
}

fn run_datko(family: &Rc<EvolutionFamily>, t: &DatkoTask, seed: u64) -> Result<TaskOutcome> {
    let env = t.envelope.to_config(t.alpha);
    let tail = match &t.tail_ref {
        Some(spec) => Some(build_tail(family, spec, (0.0, 20.0))?),
        None => None,
    };
    let quad = quad_config(&t.quad, tail);
    let t_points = match &t.t_points {
        Some(pts) => pts.clone(),
        None => default_t_points(family),
    };
    let measured = measure_datko_constant(family, t.p, &t_points, t.probes, seed, &env, &quad);
    let (constant, k_failure, mut passed, certified) = match measured {
        Ok(c) => {
            let frag = DatkoConstantFragment {
                k: c.value,
                k_short: c.short_value,
                cases: c.cases,
                all_certified: c.all_certified,
                worst: c.worst,
            };
            let cert = c.all_certified;
            (Some(frag), None, true, Some(cert))
        }
        Err(CoreError::KValidationFailed { k_short, k_long }) => {
            log::warn!("datko constant did not stabilize: {k_short} vs {k_long} after doubling");
            (None, Some(KValidationFragment { k_short, k_long }), false, Some(false))
        }
        Err(e) => return Err(e.into()),
    };
    let necessity = match (&t.necessity, k_failure.is_none()) {
        (Some(opts), true) => {
            let rep = necessity_check(
                family,
                t.p,
                &t_points,
                t.probes,
                derive_stream(seed, 1),
                &env,
                &quad,
                opts.rel_slack,
            )?;
            passed &= rep.pass;
            Some(NecessityFragment {
                bound: rep.bound,
                max_ratio: rep.max_ratio,
                cases: rep.cases.len(),
                rel_slack: rep.rel_slack,
                pass: rep.pass,
            })
        }
        _ => None,
    };
    let body = FragmentBody::Datko(DatkoFragment {
        p: t.p,
        alpha: t.alpha,
        constant,
        k_validation_failure: k_failure,
        necessity,
    });
    Ok(TaskOutcome { fragment: blank_fragment(passed, body), csvs: Vec::new(), certified, ms: 0 })
}

fn build_m_ref(
    family: &EvolutionFamily,
    opts: &MRefOpts,
    alpha: f64,
    pairs_span: (f64, f64),
) -> Result<BoundingFunction> {
    let s_grid = match &opts.s_grid {
        Some(g) => g.build()?,
        None => default_ref_grid(family, pairs_span),
    };
    let window = opts.window.unwrap_or(10.0 * std::f64::consts::PI);
    let t_step = opts.t_step.unwrap_or(0.01);
    Ok(bounding_function(family, alpha, &s_grid, window, t_step)?)
}

/// Measured operator norms for the verification pairs, batched per
/// start time for the integrating backends.
fn operator_norms(family: &EvolutionFamily, grid: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::new();
    for (j, &s) in grid.iter().enumerate() {
        let ts = &grid[j..];
        match family.kind() {
            BackendKind::ScalarExp => {
                for &t in ts {
                    out.push((t, s, family.log_operator_norm(t, s)?.exp()));
                }
            }
            _ => {
                let ests = family.operator_norm_trajectory(s, ts)?;
                for (&t, est) in ts.iter().zip(&ests) {
                    out.push((t, s, est.value));
                }
            }
        }
    }
    Ok(out)
}

fn run_certify(
    family: &Rc<EvolutionFamily>,
    t: &CertifyTask,
    index: usize,
    seed: u64,
) -> Result<TaskOutcome> {
    let env = t.envelope.to_config(t.alpha);
    let tail = match &t.tail_ref {
        Some(spec) => Some(build_tail(family, spec, (0.0, 20.0))?),
        None => None,
    };
    let quad = quad_config(&t.quad, tail);
    let t_points = match &t.t_points {
        Some(pts) => pts.clone(),
        None => default_t_points(family),
    };
    let grid = t.pairs.build()?;
    let measured = match measure_datko_constant(family, t.p, &t_points, t.probes, seed, &env, &quad)
    {
        Ok(c) => c,
        Err(CoreError::KValidationFailed { k_short, k_long }) => {
            log::warn!("certificate rejected: the constant kept growing with the window");
            let body = FragmentBody::Certify(CertifyFragment {
                certificate: None,
                k_validation_failure: Some(KValidationFragment { k_short, k_long }),
                series_file: None,
            });
            return Ok(TaskOutcome {
                fragment: blank_fragment(false, body),
                csvs: Vec::new(),
                certified: Some(false),
                ms: 0,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let m_ref = build_m_ref(family, &t.m_ref, t.alpha, (grid[0], grid[grid.len() - 1]))?;
    let mut pairs = Vec::with_capacity(grid.len() * (grid.len() + 1) / 2);
    for (j, &s) in grid.iter().enumerate() {
        for &ti in &grid[j..] {
            pairs.push((ti, s));
        }
    }
    let cert = build_certificate(family, t.p, measured.value, t.alpha, t.delta, &m_ref, &pairs)?;
    let norms = operator_norms(family, &grid)?;
    let rows: Vec<(f64, f64, f64)> = norms
        .iter()
        .map(|&(ti, s, measured_norm)| {
            let bound = cert.n_tilde * m_ref.eval(s) * (-cert.rate * (ti - s)).exp();
            (ti - s, measured_norm, bound)
        })
        .collect();
    let series_file = format!("task{index:02}_norm_vs_certificate.csv");
    let csv = csvio::norm_vs_certificate(&rows)?;
    let passed = cert.status == CertStatus::Passed;
    let body = FragmentBody::Certify(CertifyFragment {
        certificate: Some(CertificateJson {
            p: cert.p,
            alpha: cert.alpha,
            k: cert.k,
            n: cert.n,
            delta: cert.delta,
            n_tilde: cert.n_tilde,
            rate: cert.rate,
            status: if passed { "PASSED" } else { "FAILED" },
            worst_pair: [cert.worst_pair.0, cert.worst_pair.1],
            margin: cert.min_log_margin,
            m_ref: m_ref.samples().map(|(s, m)| [s, m]).collect(),
        }),
        k_validation_failure: None,
        series_file: Some(series_file.clone()),
    });
    Ok(TaskOutcome {
        fragment: blank_fragment(passed, body),
        csvs: vec![(series_file, csv)],
        certified: Some(measured.all_certified),
        ms: 0,
    })
}

struct SuiteTols {
    cocycle_composition: f64,
    cocycle_identity: f64,
    cocycle_reversal: f64,
    projection: f64,
}

fn suite_tols(kind: BackendKind) -> SuiteTols {
    match kind {
        // Closed-form evaluation: pure roundoff.
        BackendKind::ScalarExp => SuiteTols {
            cocycle_composition: 1e-11,
            cocycle_identity: 1e-12,
            cocycle_reversal: 1e-11,
            projection: 1e-11,
        },
        // Bounded by the integrator tolerance, amplified by composition.
        BackendKind::MatrixOde => SuiteTols {
            cocycle_composition: 1e-5,
            cocycle_identity: 1e-12,
            cocycle_reversal: 1e-4,
            projection: 1e-7,
        },
        // Interpolation error dominates everything else.
        BackendKind::Tabulated => SuiteTols {
            cocycle_composition: 0.05,
            cocycle_identity: 1e-12,
            cocycle_reversal: f64::INFINITY,
            projection: 0.05,
        },
    }
}

fn run_verify_props(
    family: &Rc<EvolutionFamily>,
    t: &VerifyPropsTask,
    seed: u64,
) -> Result<TaskOutcome> {
    let dim = family.dimension();
    let u = build_signal(t.signal.as_ref(), dim)?;
    let lo = family.domain_start().unwrap_or(0.0);
    let domain_span = family.domain_end().map(|de| de - lo);
    let span = t.span.unwrap_or_else(|| domain_span.map_or(8.0, |s| s.min(8.0)));
    if let Some(ds) = domain_span {
        if span > ds {
            bail!("span {span} exceeds the family domain length {ds}");
        }
    }
    let cases = t.cases.unwrap_or(6).max(1);
    let tols = suite_tols(family.kind());
    let env = EnvelopeConfig::new(t.alpha);
    let mut suites = Vec::new();
    let mut passed = true;

    for (ordinal, suite) in t.suite_list().into_iter().enumerate() {
        let sseed = derive_stream(seed, ordinal as u64);
        let frag = match suite {
            SuiteName::Cocycle => {
                // Reversal error grows like e^{|lambda| span}; keep the
                // backward leg short so the claim stays meaningful.
                let hi = lo + span.min(2.5);
                let rep = family.check_cocycle(lo, hi, cases.max(4), sseed)?;
                let rev_ok = rep.max_reversal_dev.map_or(true, |d| d <= tols.cocycle_reversal);
                let ok = rep.max_identity_dev <= tols.cocycle_identity
                    && rep.max_composition_dev <= tols.cocycle_composition
                    && rev_ok;
                SuiteFragment {
                    name: suite.name(),
                    pass: ok,
                    cases: rep.samples,
                    worst: rep.max_composition_dev,
                    tolerance: tols.cocycle_composition,
                }
            }
            SuiteName::Projection => {
                let mut rng = SplitMix64::new(sseed);
                let mut pairs = Vec::with_capacity(cases);
                for _ in 0..cases {
                    let s = rng.range(lo, lo + 0.6 * span);
                    let ti = rng.range(s, lo + 0.8 * span);
                    pairs.push((s, ti));
                }
                let window = 0.2 * span;
                let rep = check_projection_algebra(
                    family,
                    &u,
                    &pairs,
                    window,
                    3,
                    tols.projection,
                    derive_stream(sseed, 1),
                )?;
                SuiteFragment {
                    name: suite.name(),
                    pass: rep.pass,
                    cases: rep.samples,
                    worst: rep.max_rel_dev,
                    tolerance: rep.tol,
                }
            }
            SuiteName::CutInvariance => {
                // The two evaluations traverse identical propagator
                // values, so the deviation must be exactly zero.
                let anchors = [lo + 0.1 * span, lo + 0.45 * span, lo + 0.8 * span];
                let mut worst = 0.0f64;
                let mut ok = true;
                for &a in &anchors {
                    let rep = check_cut_invariance(family, &u, a, &env, 0.0)?;
                    worst = worst.max(rep.rel_dev);
                    ok &= rep.pass;
                }
                SuiteFragment {
                    name: suite.name(),
                    pass: ok,
                    cases: anchors.len(),
                    worst,
                    tolerance: 0.0,
                }
            }
            SuiteName::DecayBound => {
                let slack = 2.0 * env.rel_tol;
                let rep = check_decay_bound(family, &u, lo, span, 40, &env, slack)?;
                SuiteFragment {
                    name: suite.name(),
                    pass: rep.pass,
                    cases: rep.pairs,
                    worst: rep.max_log_violation,
                    tolerance: rep.slack,
                }
            }
            SuiteName::NormBound => {
                let t_cut = lo + 0.3 * span;
                let rep = check_cut_norm_bound(
                    family,
                    &u,
                    t_cut,
                    (lo, lo + span),
                    span / 8.0,
                    &env,
                    1e-6,
                )?;
                SuiteFragment {
                    name: suite.name(),
                    pass: rep.pass,
                    cases: 1,
                    worst: rep.norm_cut / rep.bound.max(1e-300),
                    tolerance: 1.0 + 1e-6,
                }
            }
            SuiteName::Energy => {
                let window = domain_span.map_or(40.0, |s| s.min(40.0));
                let mut quad = QuadConfig { window, ..QuadConfig::default() };
                quad.dense_step = 0.01;
                let t0 = lo;
                let split = t0 + 0.25 * span.min(window);
                let rep = check_energy_balance(family, &u, t.p, t0, split, &env, &quad, 1e-6)?;
                SuiteFragment {
                    name: suite.name(),
                    pass: rep.pass,
                    cases: 1,
                    worst: rep.rel_residual,
                    tolerance: rep.rel_slack,
                }
            }
        };
        passed &= frag.pass;
        if !frag.pass {
            log::warn!("suite {} failed: worst {} vs tolerance {}", frag.name, frag.worst, frag.tolerance);
        }
        suites.push(frag);
    }
    let body = FragmentBody::Props(PropsFragment { alpha: t.alpha, p: t.p, suites });
    Ok(TaskOutcome { fragment: blank_fragment(passed, body), csvs: Vec::new(), certified: None, ms: 0 })
}

pub struct RunOutcome {
    pub fragments: Vec<TaskFragment>,
    pub csvs: Vec<(String, String)>,
    pub timings: Vec<TaskTiming>,
    pub error: Option<String>,
    pub all_passed: bool,
    pub all_certified: bool,
}

/// Executes the tasks (in declaration order, or concurrently when
/// `parallel` is set) and folds the outcomes into report inputs. On a
/// runtime error, fragments of tasks before the failing one are kept so
/// sequential and parallel runs agree.
pub fn run_tasks(
    bp: &FamilyBlueprint,
    caveat: Option<&'static str>,
    tasks: &[(usize, &TaskSpec)],
    run_seed: u64,
    parallel: bool,
) -> RunOutcome {
    let results: Vec<Result<TaskOutcome>> = if parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = tasks
                .iter()
                .map(|&(index, task)| {
                    scope.spawn(move || execute_task(bp, caveat, task, index, run_seed))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("task worker panicked"))))
                .collect()
        })
    } else {
        let mut out = Vec::with_capacity(tasks.len());
        for &(index, task) in tasks {
            let r = execute_task(bp, caveat, task, index, run_seed);
            let failed = r.is_err();
            out.push(r);
            if failed {
                break;
            }
        }
        out
    };

    let mut fragments = Vec::new();
    let mut csvs = Vec::new();
    let mut timings = Vec::new();
    let mut error = None;
    let mut all_passed = true;
    let mut all_certified = true;
    for (pos, result) in results.into_iter().enumerate() {
        match result {
            Ok(outcome) => {
                if error.is_some() {
                    continue;
                }
                all_passed &= outcome.fragment.passed;
                if let Some(c) = outcome.certified {
                    all_certified &= c;
                }
                timings.push(TaskTiming {
                    index: outcome.fragment.index,
                    kind: outcome.fragment.kind,
                    ms: outcome.ms,
                });
                csvs.extend(outcome.csvs);
                fragments.push(outcome.fragment);
            }
            Err(e) => {
                error = Some(format!("{e:#}"));
                // Keep only fragments that precede the failure, so the
                // partial report matches what a sequential run saw.
                let keep = tasks[..pos].len();
                fragments.truncate(keep);
                break;
            }
        }
    }
    RunOutcome { fragments, csvs, timings, error, all_passed, all_certified }
}

/// Builds everything the run needs, without executing tasks: used by
/// both `validate` and the pre-run validation pass.
pub fn prepare(config: &ConfigFile, base_dir: &Path) -> Result<(FamilyBlueprint, FamilySummary)> {
    let (bp, summary) = FamilyBlueprint::build(&config.family, base_dir)?;
    crate::config::validate_tasks(config, summary.dimension)?;
    Ok((bp, summary))
}
