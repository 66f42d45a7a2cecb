use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::comparison::Tagged;
use crate::spectral::{IdentityCheck, Mesh};

use super::config::{Scenario, Task};
use super::pipeline::Outcome;
use super::verify::{InequalityRecord, Operand};
use super::{HarnessError, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_VIOLATION};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Range of `Ric(y)/F(y)²` over the sampled tangent vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RicciRange {
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantities {
    pub lambda_f: Option<Tagged>,
    pub uniformity: Option<Tagged>,
    pub sigma: Option<SigmaStats>,
    pub volume: Option<Tagged>,
    pub diameter: Option<Tagged>,
    pub lambda1: Option<Tagged>,
    /// Exact Cheeger constant of the grid (1D only).
    pub h_exact: Option<Tagged>,
    /// Best level-set sweep of the eigenfunction.
    pub h_ub: Option<Tagged>,
    pub ricci: Option<RicciRange>,
    pub k: Option<Tagged>,
    pub delta: Option<Tagged>,
    /// `λ₁ / (δ h_ub + h_ub²)`.
    pub buser_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSummary {
    pub lambda1: f64,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    pub seed: u64,
    pub start: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheegerSummary {
    pub level: f64,
    pub volume_below: f64,
    pub volume_above: f64,
    pub area_forward: f64,
    pub area_backward: f64,
    pub segments: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySummary {
    pub coarea: IdentityCheck,
    pub layer_cake: IdentityCheck,
}

/// One eigen solve (the main one and any re-runs behind the checks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRecord {
    pub label: String,
    pub lambda1: f64,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    pub start: String,
}

/// A check that was not run because its operands point the wrong way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refusal {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Status {
    pub exit_code: i32,
    pub converged: bool,
    pub hard_failures: Vec<String>,
}

impl Status {
    pub fn from_parts(converged: bool, inequalities: &[InequalityRecord]) -> Self {
        let hard_failures: Vec<String> =
            inequalities.iter().filter(|r| r.is_hard_failure()).map(|r| r.name.clone()).collect();
        let exit_code = if !hard_failures.is_empty() {
            EXIT_VIOLATION
        } else if !converged {
            EXIT_NOT_CONVERGED
        } else {
            EXIT_OK
        };
        Self { exit_code, converged, hard_failures }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub scenario: Scenario,
    pub family: String,
    pub dim: usize,
    pub nodes: Vec<usize>,
    pub tasks: Vec<Task>,
    pub quantities: Quantities,
    pub eigen: Option<EigenSummary>,
    pub cheeger: Option<CheegerSummary>,
    pub identities: Option<IdentitySummary>,
    pub inequalities: Vec<InequalityRecord>,
    pub refusals: Vec<Refusal>,
    pub solves: Vec<SolveRecord>,
    pub status: Status,
}

impl BoundReport {
    pub fn to_json(&self) -> Result<String, HarnessError> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter::default());
        self.serialize(&mut ser).map_err(|e| HarnessError::Io(e.to_string()))?;
        buf.push(b'\n');
        String::from_utf8(buf).map_err(|e| HarnessError::Io(e.to_string()))
    }
}

/// Timing and environment, kept out of the report so reports are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Runtime {
    pub scenario: String,
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub started_unix: u64,
    pub tool_version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Pretty JSON with every float written as `{:.16e}`, which round-trips.
#[derive(Default)]
struct SciFormatter {
    inner: PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
            self.inner.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for SciFormatter {
    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }

    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a temporary file so a failed run never leaves a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| HarnessError::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))
}

fn node_rows<'a>(mesh: &'a Mesh, values: &'a [f64]) -> impl Iterator<Item = Vec<String>> + 'a {
    values.iter().enumerate().map(move |(i, v)| {
        let x = mesh.coords(i);
        vec![i.to_string(), sci(x[0]), sci(x[1]), sci(*v)]
    })
}

fn tagged_row(name: &str, t: &Option<Tagged>) -> Option<Vec<String>> {
    let t = t.as_ref()?;
    let prov = serde_json::to_value(t.provenance).ok()?.as_str()?.to_string();
    Some(vec!["quantity".into(), name.into(), sci(t.value), prov, String::new(), String::new(), String::new()])
}

fn summary_csv(r: &BoundReport) -> Result<Vec<u8>, HarnessError> {
    let q = &r.quantities;
    let mut rows: Vec<Vec<String>> = [
        ("lambda_F", &q.lambda_f),
        ("Lambda_F", &q.uniformity),
        ("volume", &q.volume),
        ("diameter", &q.diameter),
        ("lambda1", &q.lambda1),
        ("h_exact", &q.h_exact),
        ("h_ub", &q.h_ub),
        ("k", &q.k),
        ("delta", &q.delta),
    ]
    .iter()
    .filter_map(|(n, t)| tagged_row(n, t))
    .collect();
    if let Some(b) = q.buser_ratio {
        rows.push(vec!["quantity".into(), "buser_ratio".into(), sci(b), "estimate".into(), "".into(), "".into(), "".into()]);
    }
    for ineq in &r.inequalities {
        let hardness = serde_json::to_value(ineq.hardness).map_err(|e| HarnessError::Io(e.to_string()))?;
        rows.push(vec![
            "inequality".into(),
            ineq.name.clone(),
            sci(ineq.margin),
            hardness.as_str().unwrap_or_default().to_string(),
            sci(ineq.lhs),
            sci(ineq.rhs),
            ineq.satisfied.to_string(),
        ]);
    }
    csv_bytes(&["kind", "name", "value", "tag", "lhs", "rhs", "satisfied"], rows)
}

/// Writes the report and its side files into `dir`; returns the paths written.
pub fn emit(outcome: &Outcome, dir: &Path, format: Format) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let name = &outcome.report.scenario.name;
    let mut written = Vec::new();
    let mut put = |suffix: &str, bytes: Vec<u8>| -> Result<(), HarnessError> {
        let path = dir.join(format!("{name}{suffix}"));
        write_atomic(&path, &bytes)?;
        written.push(path);
        Ok(())
    };
    if let Some((mesh, sigma)) = &outcome.density {
        put(".density.csv", csv_bytes(&["node", "x0", "x1", "sigma"], node_rows(mesh, sigma.values()))?)?;
    }
    if let Some(u) = &outcome.eigenfunction {
        put(".eigenfunction.csv", csv_bytes(&["node", "x0", "x1", "u"], node_rows(u.mesh(), u.values()))?)?;
    }
    if let Some(cut) = &outcome.cut {
        let rows = cut.segments.iter().enumerate().map(|(k, s)| {
            let mut row = vec![k.to_string()];
            row.extend(
                [s.start[0], s.start[1], s.end[0], s.end[1], s.normal[0], s.normal[1], s.length, s.sigma, s.forward, s.backward]
                    .map(sci),
            );
            row
        });
        let header = [
            "segment", "x0_start", "x1_start", "x0_end", "x1_end", "n0", "n1", "length", "sigma", "forward", "backward",
        ];
        put(".cut.csv", csv_bytes(&header, rows)?)?;
    }
    match format {
        Format::Json => put(".json", outcome.report.to_json()?.into_bytes())?,
        Format::Csv => put(".csv", summary_csv(&outcome.report)?)?,
    }
    Ok(written)
}

pub fn write_runtime(dir: &Path, runtime: &Runtime) -> Result<PathBuf, HarnessError> {
    let path = dir.join(format!("{}.runtime.json", runtime.scenario));
    let text = serde_json::to_string_pretty(runtime).map_err(|e| HarnessError::Io(e.to_string()))?;
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

fn check_operands(ops: &[Operand]) -> bool {
    ops.iter().all(|o| !o.name.is_empty())
}

/// Strictly parses a JSON report and checks its internal consistency.
pub fn validate_json(text: &str) -> Result<BoundReport, HarnessError> {
    let bad = |msg: String| HarnessError::Io(format!("invalid report: {msg}"));
    let r: BoundReport = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if r.schema_version != SCHEMA_VERSION {
        return Err(bad(format!("schema_version {} (expected {SCHEMA_VERSION})", r.schema_version)));
    }
    if r.nodes.len() != r.dim || r.scenario.dim() != r.dim {
        return Err(bad("dimension mismatch".into()));
    }
    for ineq in &r.inequalities {
        let again = InequalityRecord::new(
            &ineq.name,
            &ineq.statement,
            ineq.lhs,
            ineq.rhs,
            ineq.slack,
            ineq.slack_on,
            ineq.hardness,
            ineq.operands.clone(),
        );
        if again.satisfied != ineq.satisfied || !check_operands(&ineq.operands) {
            return Err(bad(format!("inequality {} is inconsistent", ineq.name)));
        }
    }
    if r.status.converged != r.solves.iter().all(|s| s.converged) {
        return Err(bad("convergence flag does not match the solve log".into()));
    }
    let status = Status::from_parts(r.status.converged, &r.inequalities);
    if status != r.status {
        return Err(bad("status does not match the inequality records".into()));
    }
    Ok(r)
}
