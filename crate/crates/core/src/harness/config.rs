use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::comparison::Provenance;
use crate::measures::{MeasureKind, MeasureSpec};
use crate::metric::{Axis, Chart, Family, MetricModel, OneForm, RiemannianField};
use crate::spectral::{EigenOptions, Mesh, DEFAULT_LEVELS, DEFAULT_SLABS};
use crate::{Matrix, Vector};

use super::HarnessError;

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Invariants,
    Measures,
    Eigen,
    Cheeger,
    Coarea,
    Bounds,
    Verify,
}

impl Task {
    pub const ALL: [Task; 7] =
        [Task::Invariants, Task::Measures, Task::Eigen, Task::Cheeger, Task::Coarea, Task::Bounds, Task::Verify];

    /// Stages this one consumes results from.
    pub fn requires(self) -> &'static [Task] {
        match self {
            Task::Invariants | Task::Measures => &[],
            Task::Eigen => &[Task::Measures],
            Task::Cheeger => &[Task::Measures, Task::Eigen],
            Task::Coarea => &[Task::Measures, Task::Eigen],
            Task::Bounds => &[Task::Invariants, Task::Measures, Task::Eigen, Task::Cheeger],
            Task::Verify => &[Task::Invariants, Task::Measures, Task::Eigen, Task::Cheeger, Task::Bounds],
        }
    }

    /// `tasks` plus everything they depend on, sorted in execution order.
    pub fn closure(tasks: &[Task]) -> Vec<Task> {
        let mut out: Vec<Task> = tasks.iter().flat_map(|t| t.requires().iter().copied().chain([*t])).collect();
        out.sort();
        out.dedup();
        out
    }
}

/// A period given as a number or as text such as `"2pi"`, `"pi/2"` or `"3.5"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Period {
    Number(f64),
    Text(String),
}

impl Period {
    pub fn value(&self) -> Result<f64, HarnessError> {
        match self {
            Period::Number(v) => Ok(*v),
            Period::Text(s) => parse_period(s).ok_or_else(|| HarnessError::Config(format!("cannot parse period {s:?}"))),
        }
    }
}

fn parse_period(s: &str) -> Option<f64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase().replace('π', "pi");
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().ok()?),
        None => (t, 1.0),
    };
    let v = if let Some(coef) = num.strip_suffix("pi") {
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let c = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().ok()? };
        c * PI
    } else {
        num.parse::<f64>().ok()?
    };
    Some(v / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    /// Optional cross-check of `periods.len()`.
    #[serde(default)]
    pub dim: Option<usize>,
    pub periods: Vec<Period>,
    /// Nodes per axis.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Riemannian,
    Randers,
    Minkowski,
    ConformalNeck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSpec {
    pub b: f64,
    pub wavevector: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

/// Metric parameters; which keys apply depends on `family`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub family: FamilyTag,
    /// Coefficient matrix `a_ij` (identity when absent).
    #[serde(default)]
    pub a: Option<Vec<Vec<f64>>>,
    /// Constant Randers 1-form.
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    /// Travelling-wave Randers 1-form.
    #[serde(default)]
    pub wave: Option<WaveSpec>,
    #[serde(default)]
    pub quartic: Option<f64>,
    #[serde(default)]
    pub drift: Option<Vec<f64>>,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub profile: Option<NeckProfile>,
    /// `F ↦ √C F`.
    #[serde(default = "one")]
    pub scale: f64,
}

/// How the neck profile enters the metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeckProfile {
    /// Scales the whole metric.
    Conformal,
    /// Scales only the transverse direction.
    Warped,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default = "default_measure_kind")]
    pub kind: MeasureKind,
    #[serde(default = "default_directions")]
    pub directions: usize,
}

fn default_measure_kind() -> MeasureKind {
    MeasureKind::HolmesThompson
}

fn default_directions() -> usize {
    MeasureSpec::DEFAULT_DIRECTIONS
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self { kind: default_measure_kind(), directions: default_directions() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheegerConfig {
    pub levels: usize,
}

impl Default for CheegerConfig {
    fn default() -> Self {
        Self { levels: DEFAULT_LEVELS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoareaConfig {
    pub slabs: usize,
    pub layer_levels: usize,
}

impl Default for CoareaConfig {
    fn default() -> Self {
        Self { slabs: DEFAULT_SLABS, layer_levels: 1024 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub diameter_sources: usize,
    /// Ricci samples: this many points per axis times `ricci_directions`.
    pub ricci_points: usize,
    pub ricci_directions: usize,
    /// Constant for the Buser-form comparison; absent means calibration only.
    pub buser_constant: Option<f64>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self { diameter_sources: 32, ricci_points: 8, ricci_directions: 16, buser_constant: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub cheeger_slack: f64,
    pub yau_slack: f64,
    pub minimax: bool,
    pub minimax_slack: f64,
    pub sandwich_slack: f64,
    /// Rescaling constant for the scaling check; absent disables it.
    pub scaling: Option<f64>,
    pub scaling_tol_lambda: f64,
    pub scaling_tol_h: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            cheeger_slack: 0.02,
            yau_slack: 0.02,
            minimax: true,
            minimax_slack: 0.05,
            sandwich_slack: 0.02,
            scaling: Some(4.0),
            scaling_tol_lambda: 1e-6,
            scaling_tol_h: 1e-9,
        }
    }
}

fn default_tasks() -> Vec<Task> {
    Task::ALL.to_vec()
}

/// A scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Scenarios sharing a group are compared in sweep summaries.
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    pub manifold: ManifoldSpec,
    pub metric: MetricSpec,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default)]
    pub eigen: EigenOptions,
    #[serde(default)]
    pub cheeger: CheegerConfig,
    #[serde(default)]
    pub coarea: CoareaConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl Scenario {
    /// Parses and validates; every failure is a configuration error.
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let s: Scenario = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(HarnessError::Config(format!("scenario name {:?} must be a plain file stem", self.name)));
        }
        self.mesh()?;
        self.model()?;
        self.measure_spec()?;
        if self.cheeger.levels < 2 || self.coarea.slabs < 2 || self.coarea.layer_levels < 2 {
            return Err(HarnessError::Config("level counts must be at least 2".into()));
        }
        if !(self.eigen.tol > 0.0 && self.eigen.step > 0.0 && self.eigen.max_iter > 0) {
            return Err(HarnessError::Config("eigen options must be positive".into()));
        }
        if let Some(c) = self.verify.scaling {
            if !(c > 0.0 && c.is_finite()) {
                return Err(HarnessError::Config(format!("scaling constant {c} must be positive")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.manifold.periods.len()
    }

    pub fn chart(&self) -> Result<Chart, HarnessError> {
        if let Some(d) = self.manifold.dim {
            if d != self.dim() {
                return Err(HarnessError::Config(format!("dim = {d} but {} periods given", self.dim())));
            }
        }
        let axes = self.manifold.periods.iter().map(|p| p.value().map(Axis::Periodic)).collect::<Result<_, _>>()?;
        Chart::new(axes).map_err(HarnessError::invalid)
    }

    pub fn mesh(&self) -> Result<Mesh, HarnessError> {
        Mesh::for_chart(&self.chart()?, self.manifold.resolution).map_err(HarnessError::invalid)
    }

    pub fn measure_spec(&self) -> Result<MeasureSpec, HarnessError> {
        MeasureSpec::new(self.measure.kind).with_directions(self.measure.directions).map_err(HarnessError::invalid)
    }

    pub fn model(&self) -> Result<MetricModel, HarnessError> {
        let dim = self.dim();
        let spec = &self.metric;
        let bad = |msg: String| HarnessError::Config(msg);
        let a = match &spec.a {
            Some(rows) => matrix(dim, rows).ok_or_else(|| bad(format!("metric.a must be {dim}×{dim}")))?,
            None => identity(dim),
        };
        let vector = |v: &Vec<f64>, key: &str| vec2(dim, v).ok_or_else(|| bad(format!("metric.{key} must have {dim} entries")));
        let allowed: &[&str] = match spec.family {
            FamilyTag::Riemannian => &[],
            FamilyTag::Randers => &["beta", "wave"],
            FamilyTag::Minkowski => &["quartic", "drift"],
            FamilyTag::ConformalNeck => &["width", "profile"],
        };
        let present = [
            ("beta", spec.beta.is_some()),
            ("wave", spec.wave.is_some()),
            ("quartic", spec.quartic.is_some()),
            ("drift", spec.drift.is_some()),
            ("width", spec.width.is_some()),
            ("profile", spec.profile.is_some()),
        ];
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                return Err(bad(format!("metric.{key} does not apply to this family")));
            }
        }
        let family = match spec.family {
            FamilyTag::Riemannian => Family::Riemannian(RiemannianField::Constant(a)),
            FamilyTag::Randers => {
                let beta = match (&spec.beta, &spec.wave) {
                    (Some(v), None) => OneForm::Constant(vector(v, "beta")?),
                    (None, Some(w)) => OneForm::Wave {
                        b: w.b,
                        wavevector: vec2(dim, &w.wavevector).ok_or_else(|| bad("metric.wave.wavevector size".into()))?,
                        phase: w.phase,
                    },
                    _ => return Err(bad("randers needs exactly one of metric.beta, metric.wave".into())),
                };
                Family::Randers { alpha: RiemannianField::Constant(a), beta }
            }
            FamilyTag::Minkowski => Family::Minkowski {
                a,
                quartic: spec.quartic.unwrap_or(0.0),
                drift: match &spec.drift {
                    Some(v) => vector(v, "drift")?,
                    None => [0.0; 2],
                },
            },
            FamilyTag::ConformalNeck => Family::ConformalNeck {
                a,
                width: spec.width.ok_or_else(|| bad("conformal-neck needs metric.width".into()))?,
                warped: spec.profile == Some(NeckProfile::Warped),
            },
        };
        let m = MetricModel::new(self.chart()?, family).map_err(HarnessError::invalid)?;
        if spec.scale == 1.0 {
            Ok(m)
        } else {
            m.rescaled(spec.scale).map_err(HarnessError::invalid)
        }
    }

    /// Provenance of `λ₁`: a discretized minimum.
    pub fn eigen_provenance(&self) -> Provenance {
        Provenance::Estimate
    }
}

fn identity(dim: usize) -> Matrix {
    if dim == 1 {
        [[1.0, 0.0], [0.0, 0.0]]
    } else {
        [[1.0, 0.0], [0.0, 1.0]]
    }
}

fn matrix(dim: usize, rows: &[Vec<f64>]) -> Option<Matrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return None;
    }
    let mut m = [[0.0; 2]; 2];
    for i in 0..dim {
        for j in 0..dim {
            m[i][j] = rows[i][j];
        }
    }
    Some(m)
}

fn vec2(dim: usize, v: &[f64]) -> Option<Vector> {
    (v.len() == dim).then(|| if dim == 1 { [v[0], 0.0] } else { [v[0], v[1]] })
}
