//! Report structures serialized to report.json. Field values are
//! deterministic for a fixed config and seed: wall-clock numbers go to
//! a separate timings.json so the main report stays byte-stable.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: "datko-lab",
            version: env!("CARGO_PKG_VERSION"),
            core_version: datko_core::VERSION,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilySummary {
    pub kind: &'static str,
    pub dimension: usize,
    pub norm: &'static str,
    pub reversible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    /// Set for sampled families: values between grid nodes are
    /// interpolated, so all downstream numbers carry that error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: ToolInfo,
    pub seed: u64,
    pub family: FamilySummary,
    pub config: Value,
    pub tasks: Vec<TaskFragment>,
    pub summary: RunSummary,
    /// First runtime error, when the run aborted early.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub tasks: usize,
    pub passed: usize,
    pub failed: usize,
    pub all_passed: bool,
    /// True when every measurement that supports certification was
    /// certified. Independent of pass/fail: a sound measurement may
    /// simply lack a tail reference.
    pub all_certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskFragment {
    pub index: usize,
    pub kind: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<&'static str>,
    #[serde(flatten)]
    pub body: FragmentBody,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum FragmentBody {
    Phi(PhiFragment),
    Admissible(AdmissibleFragment),
    Lyapunov(LyapunovFragment),
    Datko(DatkoFragment),
    Certify(CertifyFragment),
    Props(PropsFragment),
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiFragment {
    pub alpha: f64,
    pub points: usize,
    pub all_certified: bool,
    pub min_phi: f64,
    pub max_phi: f64,
    pub series_file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibleFragment {
    pub verdicts: Vec<VerdictFragment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryFragment>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictFragment {
    pub alpha: f64,
    pub verdict: &'static str,
    pub growth_ratio: f64,
    pub window: f64,
    #[serde(rename = "M_samples")]
    pub m_samples: Vec<[f64; 2]>,
    pub series_file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryFragment {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovFragment {
    pub value: f64,
    pub window: [f64; 2],
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatkoFragment {
    pub p: f64,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<DatkoConstantFragment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_validation_failure: Option<KValidationFragment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub necessity: Option<NecessityFragment>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatkoConstantFragment {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "K_short")]
    pub k_short: f64,
    pub cases: usize,
    pub all_certified: bool,
    /// (anchor time, probe index) of the worst ratio.
    pub worst: (f64, usize),
}

/// Doubling the window moved the constant: the window is too short for
/// this family, or no finite constant exists.
#[derive(Debug, Clone, Serialize)]
pub struct KValidationFragment {
    #[serde(rename = "K_short")]
    pub k_short: f64,
    #[serde(rename = "K_long")]
    pub k_long: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NecessityFragment {
    pub bound: f64,
    pub max_ratio: f64,
    pub cases: usize,
    pub rel_slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyFragment {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_validation_failure: Option<KValidationFragment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_file: Option<String>,
}

/// The certified bound ||U(t,s)|| <= N_tilde M(s) e^{-rate (t-s)} and
/// which grid pair came closest to violating it.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateJson {
    pub p: f64,
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub delta: f64,
    #[serde(rename = "N_tilde")]
    pub n_tilde: f64,
    pub rate: f64,
    pub status: &'static str,
    pub worst_pair: [f64; 2],
    pub margin: f64,
    #[serde(rename = "M_ref")]
    pub m_ref: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropsFragment {
    pub alpha: f64,
    pub p: f64,
    pub suites: Vec<SuiteFragment>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteFragment {
    pub name: &'static str,
    pub pass: bool,
    pub cases: usize,
    /// Worst deviation observed, in the suite's own scale.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_ms: u64,
    pub tasks: Vec<TaskTiming>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskTiming {
    pub index: usize,
    pub kind: &'static str,
    pub ms: u64,
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}
