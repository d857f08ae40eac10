//! Run configuration: one JSON file holding a family block and an
//! ordered task list. Deserialization is strict (unknown fields are
//! rejected) so typos surface as config errors, not silent defaults.

use anyhow::{anyhow, bail, Context, Result};
use datko_core::envelope::EnvelopeConfig;
use datko_core::linalg::NormKind;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer};
use serde_json::Value;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub family: FamilySpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpec {
    #[default]
    Euclidean,
    Max,
}

impl NormSpec {
    pub fn kind(self) -> NormKind {
        match self {
            NormSpec::Euclidean => NormKind::Euclidean,
            NormSpec::Max => NormKind::Max,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NormSpec::Euclidean => "euclidean",
            NormSpec::Max => "max",
        }
    }
}

#[derive(Debug, Clone)]
pub enum FamilySpec {
    ScalarExp(ScalarExpSpec),
    MatrixOde(MatrixOdeSpec),
    Tabulated(TabulatedSpec),
}

impl FamilySpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FamilySpec::ScalarExp(_) => "scalar_exp",
            FamilySpec::MatrixOde(_) => "matrix_ode",
            FamilySpec::Tabulated(_) => "tabulated",
        }
    }

    pub fn norm(&self) -> NormSpec {
        match self {
            FamilySpec::ScalarExp(s) => s.norm,
            FamilySpec::MatrixOde(s) => s.norm,
            FamilySpec::Tabulated(s) => s.norm,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarExpSpec {
    /// Generator exponent f(t); the propagator is e^{f(t) - f(s)}.
    pub f: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub norm: NormSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MatrixEntry {
    Num(f64),
    /// Constant expression, e.g. "-1" or "2*sin(1)".
    Expr(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixOdeSpec {
    #[serde(rename = "A")]
    pub a: Vec<Vec<MatrixEntry>>,
    #[serde(default = "default_integrator_tol")]
    pub integrator_tol: f64,
    #[serde(default = "default_max_step")]
    pub max_step: f64,
    #[serde(default)]
    pub norm: NormSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedSpec {
    /// CSV of sampled propagators, resolved relative to the config file.
    pub path: String,
    #[serde(default)]
    pub norm: NormSpec,
}

impl<'de> Deserialize<'de> for FamilySpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (kind, rest) = split_kind(d, "family")?;
        let fail = |e: serde_json::Error| D::Error::custom(format!("family `{kind}`: {e}"));
        match kind.as_str() {
            "scalar_exp" => Ok(FamilySpec::ScalarExp(serde_json::from_value(rest).map_err(fail)?)),
            "matrix_ode" => Ok(FamilySpec::MatrixOde(serde_json::from_value(rest).map_err(fail)?)),
            "tabulated" => Ok(FamilySpec::Tabulated(serde_json::from_value(rest).map_err(fail)?)),
            other => Err(D::Error::custom(format!("invalid family block: unknown kind `{other}`"))),
        }
    }
}

/// Pulls the `kind` tag out of a JSON object so the remainder can be
/// routed to a variant struct that still rejects unknown fields.
fn split_kind<'de, D: Deserializer<'de>>(d: D, what: &str) -> Result<(String, Value), D::Error> {
    let mut v = Value::deserialize(d)?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| D::Error::custom(format!("{what} must be a JSON object")))?;
    let kind = obj
        .remove("kind")
        .ok_or_else(|| D::Error::custom(format!("{what} is missing `kind`")))?;
    let kind = kind
        .as_str()
        .ok_or_else(|| D::Error::custom(format!("{what} `kind` must be a string")))?
        .to_owned();
    Ok((kind, Value::Object(std::mem::take(obj))))
}

#[derive(Debug, Clone)]
pub enum TaskSpec {
    Phi(PhiTask),
    Admissible(AdmissibleTask),
    Lyapunov(LyapunovTask),
    Datko(DatkoTask),
    Certify(CertifyTask),
    VerifyProps(VerifyPropsTask),
}

impl TaskSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TaskSpec::Phi(_) => "phi",
            TaskSpec::Admissible(_) => "admissible",
            TaskSpec::Lyapunov(_) => "lyapunov",
            TaskSpec::Datko(_) => "datko",
            TaskSpec::Certify(_) => "certify",
            TaskSpec::VerifyProps(_) => "verify-props",
        }
    }
}

impl<'de> Deserialize<'de> for TaskSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (kind, rest) = split_kind(d, "task")?;
        let fail = |e: serde_json::Error| D::Error::custom(format!("task `{kind}`: {e}"));
        match kind.as_str() {
            "phi" => Ok(TaskSpec::Phi(serde_json::from_value(rest).map_err(fail)?)),
            "admissible" => Ok(TaskSpec::Admissible(serde_json::from_value(rest).map_err(fail)?)),
            "lyapunov" => Ok(TaskSpec::Lyapunov(serde_json::from_value(rest).map_err(fail)?)),
            "datko" => Ok(TaskSpec::Datko(serde_json::from_value(rest).map_err(fail)?)),
            "certify" => Ok(TaskSpec::Certify(serde_json::from_value(rest).map_err(fail)?)),
            "verify-props" => {
                Ok(TaskSpec::VerifyProps(serde_json::from_value(rest).map_err(fail)?))
            }
            other => Err(D::Error::custom(format!("unknown task kind `{other}`"))),
        }
    }
}

/// Evenly spaced sample times, inclusive of both ends.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        if !self.start.is_finite() || !self.end.is_finite() {
            bail!("grid ends must be finite");
        }
        if self.points == 0 {
            bail!("grid needs at least one point");
        }
        if self.points == 1 {
            if self.end != self.start {
                bail!("a one-point grid must have start == end");
            }
            return Ok(vec![self.start]);
        }
        if !(self.end > self.start) {
            bail!("grid end must exceed start");
        }
        let n = self.points - 1;
        Ok((0..=n).map(|i| self.start + (self.end - self.start) * i as f64 / n as f64).collect())
    }
}

/// Strictly increasing grid by target step; the end is hit exactly.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepGridSpec {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl StepGridSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        if !self.start.is_finite() || !self.end.is_finite() || !(self.end > self.start) {
            bail!("step grid needs finite start < end");
        }
        if !(self.step > 0.0) {
            bail!("step grid step must be positive");
        }
        let span = self.end - self.start;
        let k = ((span / self.step).ceil() as usize).max(1);
        let mut g: Vec<f64> = (0..k).map(|i| self.start + span * i as f64 / k as f64).collect();
        g.push(self.end);
        Ok(g)
    }
}

/// A signal u(t): constant vector, closed-form components, or samples.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SignalSpec {
    Constant { components: Vec<f64> },
    ClosedForm { exprs: Vec<String> },
    Samples { times: Vec<f64>, values: Vec<Vec<f64>> },
}

/// Overrides for the envelope search; unset fields keep the defaults
/// baked into the core (horizon 40, step 0.01, 3 refinement rounds).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeOpts {
    pub horizon: Option<f64>,
    pub tau_step: Option<f64>,
    pub refine_depth: Option<usize>,
    pub rel_tol: Option<f64>,
}

impl EnvelopeOpts {
    pub fn to_config(&self, alpha: f64) -> EnvelopeConfig {
        let mut cfg = EnvelopeConfig::new(alpha);
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(s) = self.tau_step {
            cfg.tau_step = s;
        }
        if let Some(r) = self.refine_depth {
            cfg.refine_depth = r;
        }
        if let Some(r) = self.rel_tol {
            cfg.rel_tol = r;
        }
        cfg
    }
}

/// Overrides for the integral quadrature (window 40, step 0.005).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadOpts {
    pub window: Option<f64>,
    pub dense_step: Option<f64>,
    pub rel_tol: Option<f64>,
    pub cert_rel_tol: Option<f64>,
}

/// A reference decay weight below the working one, used to bound what
/// lies past the search window. Soundness rests on the reference bound
/// M(s) being a true bound for every later start time, which holds when
/// M saturates over the chosen grid; pick the grid accordingly.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailRefSpec {
    pub alpha: f64,
    pub s_grid: Option<StepGridSpec>,
    pub window: Option<f64>,
    pub t_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiTask {
    pub alpha: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub signal: Option<SignalSpec>,
    #[serde(default)]
    pub envelope: EnvelopeOpts,
    #[serde(default)]
    pub tail_ref: Option<TailRefSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibleTask {
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// [lo, hi] to bisect for the edge of the admissible set.
    #[serde(default)]
    pub bracket: Option<[f64; 2]>,
    #[serde(default = "default_bracket_tol")]
    pub bracket_tol: f64,
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default)]
    pub s_grid: Option<StepGridSpec>,
    #[serde(default)]
    pub t_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovTask {
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_lyapunov_step")]
    pub grid_step: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NecessityOpts {
    #[serde(default = "default_rel_slack")]
    pub rel_slack: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatkoTask {
    pub p: f64,
    pub alpha: f64,
    #[serde(default)]
    pub t_points: Option<Vec<f64>>,
    /// Random probe states on top of the canonical basis.
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub envelope: EnvelopeOpts,
    #[serde(default)]
    pub quad: QuadOpts,
    #[serde(default)]
    pub tail_ref: Option<TailRefSpec>,
    /// When present and alpha < 0, also check the closed-form ceiling
    /// on the measured ratios.
    #[serde(default)]
    pub necessity: Option<NecessityOpts>,
}

/// Grid for the reference bound M(s) carried by a certificate.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MRefOpts {
    pub s_grid: Option<StepGridSpec>,
    pub window: Option<f64>,
    pub t_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyTask {
    pub p: f64,
    pub alpha: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Anchor grid; all ordered pairs (t_i, t_j) with t_i >= t_j are
    /// checked against the certified bound.
    pub pairs: GridSpec,
    #[serde(default)]
    pub t_points: Option<Vec<f64>>,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub envelope: EnvelopeOpts,
    #[serde(default)]
    pub quad: QuadOpts,
    #[serde(default)]
    pub tail_ref: Option<TailRefSpec>,
    #[serde(default)]
    pub m_ref: MRefOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    Cocycle,
    Projection,
    CutInvariance,
    DecayBound,
    NormBound,
    Energy,
}

impl SuiteName {
    pub const ALL: [SuiteName; 6] = [
        SuiteName::Cocycle,
        SuiteName::Projection,
        SuiteName::CutInvariance,
        SuiteName::DecayBound,
        SuiteName::NormBound,
        SuiteName::Energy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteName::Cocycle => "cocycle",
            SuiteName::Projection => "projection",
            SuiteName::CutInvariance => "cut-invariance",
            SuiteName::DecayBound => "decay-bound",
            SuiteName::NormBound => "norm-bound",
            SuiteName::Energy => "energy",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyPropsTask {
    #[serde(default)]
    pub suites: Option<Vec<SuiteName>>,
    #[serde(default = "default_props_alpha")]
    pub alpha: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Length of the time range the probes are drawn from.
    #[serde(default)]
    pub span: Option<f64>,
    #[serde(default)]
    pub cases: Option<usize>,
    #[serde(default)]
    pub signal: Option<SignalSpec>,
}

impl VerifyPropsTask {
    pub fn suite_list(&self) -> Vec<SuiteName> {
        match &self.suites {
            Some(list) => list.clone(),
            None => SuiteName::ALL.to_vec(),
        }
    }
}

fn default_dim() -> usize {
    1
}

fn default_integrator_tol() -> f64 {
    1e-10
}

fn default_max_step() -> f64 {
    0.1
}

fn default_bracket_tol() -> f64 {
    0.01
}

fn default_t_max() -> f64 {
    40.0
}

fn default_lyapunov_step() -> f64 {
    0.01
}

fn default_probes() -> usize {
    8
}

fn default_delta() -> f64 {
    0.5
}

fn default_rel_slack() -> f64 {
    1e-6
}

fn default_props_alpha() -> f64 {
    -1.0
}

fn default_p() -> f64 {
    1.0
}

/// Parses the file and echoes the raw JSON for the report.
pub fn load(path: &std::path::Path) -> Result<(ConfigFile, Value)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let echo: Value = serde_json::from_str(&text)
        .with_context(|| format!("config {} is not valid JSON", path.display()))?;
    let config: ConfigFile = serde_json::from_str(&text)
        .with_context(|| format!("config {} is invalid", path.display()))?;
    Ok((config, echo))
}

/// Structural validation of every task, run before any computation.
pub fn validate_tasks(config: &ConfigFile, dimension: usize) -> Result<()> {
    for (index, task) in config.tasks.iter().enumerate() {
        validate_task(task, dimension)
            .with_context(|| format!("task {index} ({})", task.kind_name()))?;
    }
    Ok(())
}

fn validate_task(task: &TaskSpec, dimension: usize) -> Result<()> {
    match task {
        TaskSpec::Phi(t) => {
            require_finite("alpha", t.alpha)?;
            t.grid.build()?;
            validate_signal(t.signal.as_ref(), dimension)?;
            validate_tail_ref(t.tail_ref.as_ref(), t.alpha)?;
        }
        TaskSpec::Admissible(t) => {
            if t.alphas.is_empty() && t.bracket.is_none() {
                bail!("needs at least one of `alphas` or `bracket`");
            }
            for &a in &t.alphas {
                require_finite("alpha", a)?;
            }
            if let Some([lo, hi]) = t.bracket {
                require_finite("bracket end", lo)?;
                require_finite("bracket end", hi)?;
                if !(lo < hi) {
                    bail!("bracket must satisfy lo < hi");
                }
            }
            if !(t.bracket_tol > 0.0) {
                bail!("bracket_tol must be positive");
            }
            if let Some(g) = &t.s_grid {
                g.build()?;
            }
        }
        TaskSpec::Lyapunov(t) => {
            if !(t.t_max > 0.0) || !t.t_max.is_finite() {
                bail!("t_max must be positive and finite");
            }
            if !(t.grid_step > 0.0) {
                bail!("grid_step must be positive");
            }
        }
        TaskSpec::Datko(t) => {
            validate_p("p", t.p)?;
            require_finite("alpha", t.alpha)?;
            if let Some(pts) = &t.t_points {
                if pts.is_empty() {
                    bail!("t_points must not be empty when given");
                }
            }
            validate_tail_ref(t.tail_ref.as_ref(), t.alpha)?;
            if t.necessity.is_some() && !(t.alpha < 0.0) {
                bail!("the necessity ceiling needs alpha < 0");
            }
        }
        TaskSpec::Certify(t) => {
            validate_p("p", t.p)?;
            require_finite("alpha", t.alpha)?;
            if t.alpha < 0.0 {
                bail!("the certificate path requires alpha >= 0; negative weights are already decay bounds");
            }
            if !(t.delta > 0.0 && t.delta < 1.0) {
                bail!("delta must lie strictly between 0 and 1");
            }
            t.pairs.build()?;
            validate_tail_ref(t.tail_ref.as_ref(), t.alpha)?;
            if let Some(g) = &t.m_ref.s_grid {
                g.build()?;
            }
        }
        TaskSpec::VerifyProps(t) => {
            require_finite("alpha", t.alpha)?;
            validate_p("p", t.p)?;
            if let Some(s) = t.span {
                if !(s > 0.0) {
                    bail!("span must be positive");
                }
            }
            if t.suite_list().is_empty() {
                bail!("suites must not be empty when given");
            }
            validate_signal(t.signal.as_ref(), dimension)?;
        }
    }
    Ok(())
}

fn validate_p(what: &str, p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        bail!("{what} must be a finite real >= 1");
    }
    Ok(())
}

fn require_finite(what: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        bail!("{what} must be finite");
    }
    Ok(())
}

fn validate_tail_ref(tail: Option<&TailRefSpec>, alpha: f64) -> Result<()> {
    let Some(t) = tail else { return Ok(()) };
    require_finite("tail reference alpha", t.alpha)?;
    if !(t.alpha < 0.0 && t.alpha < alpha) {
        bail!("tail reference alpha must be negative and below the task alpha");
    }
    if let Some(g) = &t.s_grid {
        g.build()?;
    }
    if let Some(w) = t.window {
        if !(w > 0.0) {
            bail!("tail reference window must be positive");
        }
    }
    if let Some(s) = t.t_step {
        if !(s > 0.0) {
            bail!("tail reference t_step must be positive");
        }
    }
    Ok(())
}

fn validate_signal(signal: Option<&SignalSpec>, dimension: usize) -> Result<()> {
    let Some(s) = signal else { return Ok(()) };
    match s {
        SignalSpec::Constant { components } => {
            if components.len() != dimension {
                bail!(
                    "signal has {} components but the family has dimension {}",
                    components.len(),
                    dimension
                );
            }
            for c in components {
                require_finite("signal component", *c)?;
            }
        }
        SignalSpec::ClosedForm { exprs } => {
            if exprs.len() != dimension {
                bail!(
                    "signal has {} components but the family has dimension {}",
                    exprs.len(),
                    dimension
                );
            }
            for e in exprs {
                datko_core::expr::parse_generator(e)
                    .map_err(|err| anyhow!("signal component `{e}`: {err}"))?;
            }
        }
        SignalSpec::Samples { times, values } => {
            if times.len() != values.len() || times.is_empty() {
                bail!("sampled signal needs matching, nonempty times and values");
            }
            for v in values {
                if v.len() != dimension {
                    bail!(
                        "signal sample has {} components but the family has dimension {}",
                        v.len(),
                        dimension
                    );
                }
            }
        }
    }
    Ok(())
}
