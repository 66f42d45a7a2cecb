use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparison::{BoundInputs, Provenance, Tagged};
use crate::error::FinslerError;
use crate::invariants;
use crate::measures::{self, DensityField, MeasureKind};
use crate::metric::{ChartPoint, Family, MetricModel, OneForm, Tangent};
use crate::spectral::{self, EigenOptions, EigenResult, LevelSetCut, Mask, Mesh, ScalarField};

use super::config::{Scenario, Task};
use super::report::{
    self, BoundReport, CheegerSummary, EigenSummary, Format, IdentitySummary, Quantities, Refusal, RicciRange, Runtime,
    SigmaStats, SolveRecord, Status,
};
use super::verify::{self, InequalityRecord};
use super::{HarnessError, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
    pub tasks: Option<Vec<Task>>,
}

impl Overrides {
    pub fn apply(&self, mut s: Scenario) -> Result<Scenario, HarnessError> {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(n) = self.resolution {
            s.manifold.resolution = n;
        }
        if let Some(t) = &self.tasks {
            s.tasks = t.clone();
        }
        s.validate()?;
        Ok(s)
    }
}

/// A finished run: the report plus the fields behind its side files.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: BoundReport,
    pub eigenfunction: Option<ScalarField>,
    pub density: Option<(Mesh, DensityField)>,
    pub cut: Option<LevelSetCut>,
    pub elapsed_seconds: f64,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.report.status.exit_code
    }

    /// Writes the report, side files and runtime metadata into `dir`.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>, HarnessError> {
        let mut paths = report::emit(self, dir, format)?;
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        paths.push(report::write_runtime(
            dir,
            &Runtime {
                scenario: self.report.scenario.name.clone(),
                elapsed_seconds: self.elapsed_seconds,
                threads: rayon::current_num_threads(),
                started_unix: started.saturating_sub(self.elapsed_seconds as u64),
                tool_version: report::TOOL_VERSION.to_string(),
            },
        )?);
        Ok(paths)
    }
}

fn tagged(value: f64, p: Provenance) -> Tagged {
    Tagged::new(value, p)
}

fn eigen_summary(r: &EigenResult) -> EigenSummary {
    EigenSummary {
        lambda1: r.lambda1,
        converged: r.converged,
        residual: r.residual,
        iterations: r.iterations,
        seed: r.seed,
        start: r.start.clone(),
    }
}

/// Samples `Ric(y)/F(y)²` on a point lattice times a direction fan.
fn ricci_range(m: &MetricModel, points: usize, directions: usize) -> Result<RicciRange, HarnessError> {
    let pts = m.sample_points(points.max(1));
    let dirs: Vec<[f64; 2]> = (0..directions.max(1))
        .map(|j| {
            let th = std::f64::consts::TAU * (j as f64 + 0.5) / directions.max(1) as f64;
            [th.cos(), th.sin()]
        })
        .collect();
    let values = pts
        .par_iter()
        .map(|&x| {
            dirs.iter()
                .map(|&y| {
                    let p = ChartPoint::new(x);
                    let f = m.eval(&p, y);
                    m.ricci(&Tangent::new(p, y)).map(|r| r / (f * f))
                })
                .collect::<Result<Vec<f64>, FinslerError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let flat: Vec<f64> = values.into_iter().flatten().collect();
    let min = flat.iter().copied().fold(f64::INFINITY, f64::min);
    let max = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RicciRange { min, max, samples: flat.len() })
}

/// The two halves `[0, L/2]` and `[L/2, L]` of axis 0; their interiors are disjoint.
fn halves(mesh: &Mesh) -> Result<(Mask, Mask), FinslerError> {
    let l = mesh.period(0);
    let eps = 1e-9 * mesh.spacing(0);
    let d1 = Mask::from_fn(*mesh, |x| x[0] <= 0.5 * l + eps)?;
    let d2 = Mask::from_fn(*mesh, |x| x[0] >= 0.5 * l - eps || x[0] <= eps)?;
    Ok((d1, d2))
}

/// Eigen solves of a run, logged so every one shows up in the report.
struct Solver {
    mesh: Mesh,
    q: measures::MeasureSpec,
    opts: EigenOptions,
    levels: usize,
    log: Vec<SolveRecord>,
}

impl Solver {
    fn record(&mut self, label: &str, r: EigenResult) -> EigenResult {
        self.log.push(SolveRecord {
            label: label.to_string(),
            lambda1: r.lambda1,
            converged: r.converged,
            residual: r.residual,
            iterations: r.iterations,
            start: r.start.clone(),
        });
        r
    }

    fn eigen(&mut self, label: &str, m: &MetricModel, sigma: &DensityField) -> Result<EigenResult, FinslerError> {
        let r = spectral::eigen_closed(&self.mesh, m, sigma, &self.opts)?;
        Ok(self.record(label, r))
    }

    fn dirichlet(
        &mut self,
        label: &str,
        m: &MetricModel,
        sigma: &DensityField,
        mask: &Mask,
    ) -> Result<EigenResult, FinslerError> {
        let r = spectral::eigen_dirichlet(&self.mesh, m, sigma, mask, &self.opts)?;
        Ok(self.record(label, r))
    }

    /// `(λ₁, h)` for a model, with `h` exact in 1D and from the sweep otherwise.
    fn lambda_and_h(&mut self, label: &str, m: &MetricModel) -> Result<(f64, f64), FinslerError> {
        let sigma = measures::density_field(m, &self.mesh, &self.q)?;
        let r = self.eigen(label, m, &sigma)?;
        let h = if self.mesh.dim() == 1 {
            spectral::cheeger_1d_exact(m, &self.mesh, &sigma)?
        } else {
            spectral::cheeger_sweep(&r.eigenfunction, m, &sigma, self.levels)?.h_ub
        };
        Ok((r.lambda1, h))
    }

    fn converged(&self) -> bool {
        self.log.iter().all(|r| r.converged)
    }
}

/// Runs the scenario's tasks (with their dependencies) in order.
pub fn run_scenario(s: &Scenario) -> Result<Outcome, HarnessError> {
    let start = Instant::now();
    let tasks = Task::closure(&s.tasks);
    let has = |t: Task| tasks.contains(&t);
    let m = s.model()?;
    let mesh = s.mesh()?;
    let q = s.measure_spec()?;
    let n = s.dim();
    let mut solver =
        Solver { mesh, q, opts: EigenOptions { seed: s.seed, ..s.eigen }, levels: s.cheeger.levels, log: Vec::new() };
    let mut quantities = Quantities::default();

    if has(Task::Invariants) {
        let inv = invariants::invariants(&m, &mesh)?;
        quantities.lambda_f = Some(tagged(inv.lambda_f, Provenance::LowerBound));
        quantities.uniformity = Some(tagged(inv.uniformity, Provenance::LowerBound));
    }

    let sigma = if has(Task::Measures) {
        let sigma = measures::density_field(&m, &mesh, &q)?;
        quantities.sigma = Some(SigmaStats { min: sigma.min(), max: sigma.max(), mean: sigma.mean() });
        quantities.volume = Some(Tagged::estimate(spectral::total_volume(&mesh, &sigma)?));
        Some(sigma)
    } else {
        None
    };

    let mut eigen = None;
    if let (true, Some(sigma)) = (has(Task::Eigen), &sigma) {
        let r = solver.eigen("main", &m, sigma)?;
        quantities.lambda1 = Some(tagged(r.lambda1, s.eigen_provenance()));
        eigen = Some(r);
    }

    let mut cheeger = None;
    let mut cut = None;
    if let (true, Some(sigma), Some(r)) = (has(Task::Cheeger), &sigma, &eigen) {
        let sweep = spectral::cheeger_sweep(&r.eigenfunction, &m, sigma, s.cheeger.levels)?;
        quantities.h_ub = Some(tagged(sweep.h_ub, Provenance::UpperBound));
        if n == 1 {
            quantities.h_exact = Some(Tagged::exact(spectral::cheeger_1d_exact(&m, &mesh, sigma)?));
        }
        let c = &sweep.cut;
        cheeger = Some(CheegerSummary {
            level: c.level,
            volume_below: c.volume_below,
            volume_above: c.volume_above,
            area_forward: c.area_forward,
            area_backward: c.area_backward,
            segments: c.segments.len(),
        });
        cut = Some(sweep.cut);
    }

    let mut identities = None;
    if let (true, Some(sigma), Some(r)) = (has(Task::Coarea), &sigma, &eigen) {
        let u = &r.eigenfunction;
        let weight = u.map(|v| 1.0 + v * v)?;
        let shifted = u.map(|v| v - u.min())?;
        identities = Some(IdentitySummary {
            coarea: spectral::coarea_check(&weight, u, &m, sigma, s.coarea.slabs)?,
            layer_cake: spectral::layer_cake_check(&shifted, sigma, s.coarea.layer_levels)?,
        });
    }

    if has(Task::Bounds) {
        let d = spectral::diameter(&m, &mesh, s.bounds.diameter_sources)?;
        quantities.diameter = Some(Tagged::estimate(d.value));
        let k = if n >= 2 {
            let ric = ricci_range(&m, s.bounds.ricci_points, s.bounds.ricci_directions)?;
            quantities.ricci = Some(ric);
            ric.min / (n - 1) as f64
        } else {
            0.0
        };
        quantities.k = Some(Tagged::estimate(k));
        quantities.delta = Some(Tagged::estimate((-k).max(0.0).sqrt()));
        if let (Some(l), Some(h), Some(delta)) = (quantities.lambda1, quantities.h_ub, quantities.delta) {
            quantities.buser_ratio = Some(l.value / (delta.value * h.value + h.value * h.value));
        }
    }

    let mut inequalities: Vec<InequalityRecord> = Vec::new();
    let mut refusals = Vec::new();
    if has(Task::Verify) {
        let sigma = sigma.as_ref().ok_or(FinslerError::IncompleteVerification("density".into()))?;
        let v = &s.verify;
        let mut refuse = |name: &str, e: FinslerError| -> Result<(), HarnessError> {
            match e {
                FinslerError::DirectionViolation(_) | FinslerError::UnsupportedDimension(_) => {
                    refusals.push(Refusal { name: name.to_string(), reason: e.to_string() });
                    Ok(())
                }
                other => Err(other.into()),
            }
        };

        let h = quantities.h_exact.or(quantities.h_ub);
        match verify::cheeger_eigen_lower(quantities.lambda1, h, quantities.lambda_f, v.cheeger_slack) {
            Ok(r) => inequalities.push(r),
            Err(e) => refuse("cheeger-eigenvalue-lower", e)?,
        }

        let inputs = BoundInputs {
            n,
            k: quantities.k.ok_or(FinslerError::IncompleteVerification("k".into()))?,
            uniformity: quantities.uniformity.ok_or(FinslerError::IncompleteVerification("Lambda_F".into()))?,
            reversibility: quantities.lambda_f.ok_or(FinslerError::IncompleteVerification("lambda_F".into()))?,
            volume: quantities.volume.ok_or(FinslerError::IncompleteVerification("volume".into()))?,
            diameter: quantities.diameter.ok_or(FinslerError::IncompleteVerification("diameter".into()))?,
        };
        match verify::croke_cheeger(&inputs, quantities.h_ub) {
            Ok(r) => inequalities.push(r),
            Err(e) => refuse("croke-cheeger-lower", e)?,
        }
        match verify::yau_eigen(&inputs, quantities.lambda1, v.yau_slack) {
            Ok(r) => inequalities.push(r),
            Err(e) => refuse("yau-eigenvalue-lower", e)?,
        }

        let lambda1 = quantities.lambda1.ok_or(FinslerError::IncompleteVerification("lambda1".into()))?;
        let lambda_f = quantities.lambda_f.ok_or(FinslerError::IncompleteVerification("lambda_F".into()))?;
        if v.minimax {
            let (d1, d2) = halves(&mesh)?;
            let l1 = solver.dirichlet("minimax-d1", &m, sigma, &d1)?.lambda1;
            let l2 = solver.dirichlet("minimax-d2", &m, sigma, &d2)?.lambda1;
            inequalities.push(verify::minimax(
                lambda1,
                lambda_f,
                Tagged::estimate(l1),
                Tagged::estimate(l2),
                v.minimax_slack,
            ));
        }

        if let Some(c) = v.scaling {
            let h = quantities.h_exact.or(quantities.h_ub).ok_or(FinslerError::IncompleteVerification("h".into()))?;
            let (l_c, h_c) = solver.lambda_and_h("scaled", &m.rescaled(c)?)?;
            inequalities.push(verify::scaling("scaling-lambda1", c, 1.0, lambda1, Tagged::estimate(l_c), v.scaling_tol_lambda));
            inequalities.push(verify::scaling("scaling-cheeger", c, 0.5, h, tagged(h_c, h.provenance), v.scaling_tol_h));
        }

        if let (Family::Randers { alpha, beta: OneForm::Constant(_) }, MeasureKind::HolmesThompson) =
            (m.family(), q.kind)
        {
            let alpha_model = MetricModel::new(m.chart().clone(), Family::Riemannian(*alpha))?;
            let alpha_model = alpha_model.rescaled(m.scale() * m.scale())?;
            let sigma_alpha = measures::density_field(&alpha_model, &mesh, &q)?;
            let l_alpha = solver.eigen("alpha", &alpha_model, &sigma_alpha)?.lambda1;
            let b = m.randers_b().ok_or(FinslerError::IncompleteVerification("b".into()))?;
            inequalities.extend(verify::randers_sandwich(Tagged::estimate(l_alpha), b, lambda1, v.sandwich_slack));
        }

        if let (Some(c), Some(h), Some(delta)) = (s.bounds.buser_constant, quantities.h_ub, quantities.delta) {
            inequalities.push(verify::buser_form(lambda1, delta, h, c));
        }

        if let Some(ids) = &identities {
            inequalities.push(verify::identity_gap(
                "coarea-identity",
                "|int f dmu - int dt int_{phi=t} f dA / F(grad phi)| / int f dmu <= tol",
                ids.coarea.gap,
                0.02,
            ));
            inequalities.push(verify::identity_gap(
                "layer-cake-identity",
                "|int f dmu - int_0^inf mu(f > t) dt| / int f dmu <= tol",
                ids.layer_cake.gap,
                0.02,
            ));
        }
    }

    let converged = solver.converged();
    let report = BoundReport {
        schema_version: report::SCHEMA_VERSION,
        tool_version: report::TOOL_VERSION.to_string(),
        scenario: s.clone(),
        family: m.family().tag().to_string(),
        dim: n,
        nodes: (0..n).map(|a| mesh.nodes(a)).collect(),
        tasks,
        quantities,
        eigen: eigen.as_ref().map(eigen_summary),
        cheeger,
        identities,
        inequalities,
        refusals,
        solves: solver.log,
        status: Status::from_parts(converged, &[]),
    };
    let mut report = report;
    report.status = Status::from_parts(converged, &report.inequalities);
    Ok(Outcome {
        report,
        eigenfunction: eigen.map(|r| r.eigenfunction),
        density: sigma.map(|s| (mesh, s)),
        cut,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// One scenario of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub file: String,
    pub name: Option<String>,
    pub group: Option<String>,
    pub exit_code: i32,
    pub error: Option<String>,
    pub width: Option<f64>,
    pub lambda1: Option<f64>,
    pub h_ub: Option<f64>,
    pub buser_ratio: Option<f64>,
}

/// Cross-scenario comparison within a group, ordered by neck width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSummary {
    pub group: String,
    pub members: Vec<String>,
    pub widths: Vec<f64>,
    /// `max / min` of the Buser-form ratio over the group.
    pub band_factor: Option<f64>,
    /// `λ₁` strictly increases with width (so decreases as the neck narrows).
    pub lambda1_monotone: bool,
    pub h_ub_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSummary {
    pub entries: Vec<SweepEntry>,
    pub groups: Vec<GroupSummary>,
    pub exit_code: i32,
}

fn strictly_increasing(v: &[Option<f64>]) -> bool {
    v.iter().all(Option::is_some) && v.windows(2).all(|w| w[0] < w[1])
}

fn summarize(entries: &[SweepEntry]) -> Vec<GroupSummary> {
    let mut names: Vec<&str> = entries.iter().filter_map(|e| e.group.as_deref()).collect();
    names.sort_unstable();
    names.dedup();
    names
        .into_iter()
        .map(|g| {
            let mut members: Vec<&SweepEntry> =
                entries.iter().filter(|e| e.group.as_deref() == Some(g) && e.exit_code != EXIT_CONFIG).collect();
            members.sort_by(|a, b| a.width.unwrap_or(f64::NAN).total_cmp(&b.width.unwrap_or(f64::NAN)));
            let ratios: Vec<f64> = members.iter().filter_map(|e| e.buser_ratio).collect();
            let band_factor = (ratios.len() == members.len() && !ratios.is_empty()).then(|| {
                ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min)
            });
            GroupSummary {
                group: g.to_string(),
                members: members.iter().filter_map(|e| e.name.clone()).collect(),
                widths: members.iter().filter_map(|e| e.width).collect(),
                band_factor,
                lambda1_monotone: strictly_increasing(&members.iter().map(|e| e.lambda1).collect::<Vec<_>>()),
                h_ub_monotone: strictly_increasing(&members.iter().map(|e| e.h_ub).collect::<Vec<_>>()),
            }
        })
        .collect()
}

/// Runs every `*.toml` in `dir` in parallel, writes each report to `out` and a
/// `sweep-summary.json`; the exit code is the worst scenario's.
pub fn sweep(dir: &Path, overrides: &Overrides, out: &Path, format: Format) -> Result<SweepSummary, HarnessError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(HarnessError::Config(format!("no .toml scenarios in {}", dir.display())));
    }
    let entries: Vec<SweepEntry> = files
        .par_iter()
        .map(|path| {
            let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
            let mut entry = SweepEntry {
                file,
                name: None,
                group: None,
                exit_code: EXIT_OK,
                error: None,
                width: None,
                lambda1: None,
                h_ub: None,
                buser_ratio: None,
            };
            let scenario = match Scenario::load(path).and_then(|s| overrides.apply(s)) {
                Ok(s) => s,
                Err(e) => {
                    entry.exit_code = e.exit_code();
                    entry.error = Some(e.to_string());
                    return entry;
                }
            };
            entry.name = Some(scenario.name.clone());
            entry.group = scenario.group.clone();
            entry.width = scenario.metric.width;
            match run_scenario(&scenario).and_then(|o| o.write(out, format).map(|_| o)) {
                Ok(o) => {
                    let q = &o.report.quantities;
                    entry.exit_code = o.exit_code();
                    entry.lambda1 = q.lambda1.map(|t| t.value);
                    entry.h_ub = q.h_ub.map(|t| t.value);
                    entry.buser_ratio = q.buser_ratio;
                }
                Err(e) => {
                    entry.exit_code = e.exit_code().max(EXIT_RUNTIME);
                    entry.error = Some(e.to_string());
                }
            }
            entry
        })
        .collect();
    let groups = summarize(&entries);
    let exit_code = entries.iter().map(|e| e.exit_code).max().unwrap_or(EXIT_OK);
    let summary = SweepSummary { entries, groups, exit_code };
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let path = out.join("sweep-summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::Io(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(summary)
}
