use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::linalg::{self, Vector};
use crate::measures::DensityField;
use crate::metric::MetricModel;

use super::energy::LocalDual;
use super::{Mesh, ScalarField};

/// Default number of quantile bins in a level sweep.
pub const DEFAULT_LEVELS: usize = 128;

/// One straight piece of `{f = t}` (a single crossing point in 1D).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSegment {
    pub start: Vector,
    pub end: Vector,
    /// Euclidean unit conormal pointing out of `D₁ = {f < t}`.
    pub normal: Vector,
    /// Euclidean length; `1` for points.
    pub length: f64,
    pub sigma: f64,
    /// `σ F*(ν̂) dS`.
    pub forward: f64,
    /// `σ F*(−ν̂) dS`.
    pub backward: f64,
}

/// A level-set cut `Γ = {f = t}` splitting the mesh into `D₁ = {f < t}` and `D₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetCut {
    pub level: f64,
    pub segments: Vec<InterfaceSegment>,
    pub volume_below: f64,
    pub volume_above: f64,
    pub area_forward: f64,
    pub area_backward: f64,
}

impl LevelSetCut {
    /// `min{A₊, A₋} / min{μ(D₁), μ(D₂)}`.
    pub fn ratio(&self) -> f64 {
        self.area_forward.min(self.area_backward) / self.volume_below.min(self.volume_above)
    }
}

/// Interface piece in cell-local coordinates `[0, 1]^dim`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RawSegment {
    pub cell: usize,
    pub a: Vector,
    pub b: Vector,
}

impl RawSegment {
    pub fn mid(&self) -> Vector {
        linalg::scale(linalg::add(self.a, self.b), 0.5)
    }
}

/// Corner values of the cell at `cell`: `(0,0), (1,0), (1,1), (0,1)`.
fn corners(mesh: &Mesh, v: &[f64], cell: usize) -> [f64; 4] {
    [
        v[cell],
        v[mesh.offset(cell, [1, 0])],
        v[mesh.offset(cell, [1, 1])],
        v[mesh.offset(cell, [0, 1])],
    ]
}

/// Linear (1D) or bilinear (2D) interpolation inside a cell.
pub(crate) fn interpolate(mesh: &Mesh, v: &[f64], cell: usize, s: Vector) -> f64 {
    if mesh.dim() == 1 {
        return v[cell] * (1.0 - s[0]) + v[mesh.neighbor(cell, 0, 1)] * s[0];
    }
    let c = corners(mesh, v, cell);
    c[0] * (1.0 - s[0]) * (1.0 - s[1]) + c[1] * s[0] * (1.0 - s[1]) + c[2] * s[0] * s[1] + c[3] * (1.0 - s[0]) * s[1]
}

/// Chart-coordinate gradient of the interpolant inside a cell.
pub(crate) fn interpolate_grad(mesh: &Mesh, v: &[f64], cell: usize, s: Vector) -> Vector {
    if mesh.dim() == 1 {
        return [(v[mesh.neighbor(cell, 0, 1)] - v[cell]) / mesh.spacing(0), 0.0];
    }
    let c = corners(mesh, v, cell);
    [
        ((1.0 - s[1]) * (c[1] - c[0]) + s[1] * (c[2] - c[3])) / mesh.spacing(0),
        ((1.0 - s[0]) * (c[3] - c[0]) + s[0] * (c[2] - c[1])) / mesh.spacing(1),
    ]
}

/// Chart coordinates of a cell-local point (not wrapped).
pub(crate) fn to_chart(mesh: &Mesh, cell: usize, s: Vector) -> Vector {
    let o = mesh.coords(cell);
    let mut x = [o[0] + s[0] * mesh.spacing(0), 0.0];
    if mesh.dim() == 2 {
        x[1] = o[1] + s[1] * mesh.spacing(1);
    }
    x
}

/// Crossings of `{f = t}`: sign changes in 1D, marching squares in 2D with
/// saddle cells resolved by the cell-centre average.
pub(crate) fn extract_interface(f: &ScalarField, t: f64) -> Vec<RawSegment> {
    let mesh = f.mesh();
    let v = f.values();
    let below = |x: f64| x < t;
    let cross = |a: f64, b: f64| (t - a) / (b - a);
    let mut out = Vec::new();
    if mesh.dim() == 1 {
        for i in 0..mesh.len() {
            let (a, b) = (v[i], v[mesh.neighbor(i, 0, 1)]);
            if below(a) != below(b) {
                let s = cross(a, b);
                out.push(RawSegment { cell: i, a: [s, 0.0], b: [s, 0.0] });
            }
        }
        return out;
    }
    const POS: [Vector; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    for cell in 0..mesh.len() {
        let c = corners(mesh, v, cell);
        let mut hits: Vec<(usize, Vector)> = Vec::with_capacity(4);
        for e in 0..4 {
            let (p, q) = (e, (e + 1) % 4);
            if below(c[p]) != below(c[q]) {
                let s = cross(c[p], c[q]);
                hits.push((e, linalg::add(POS[p], linalg::scale(linalg::sub(POS[q], POS[p]), s))));
            }
        }
        match hits.len() {
            2 => out.push(RawSegment { cell, a: hits[0].1, b: hits[1].1 }),
            4 => {
                let centre = 0.25 * (c[0] + c[1] + c[2] + c[3]);
                // Edge e joins corners e and e+1; pair edges around the
                // corners that are separated from the centre.
                let (p, q) = if below(centre) == below(c[0]) { ((0, 1), (2, 3)) } else { ((3, 0), (1, 2)) };
                out.push(RawSegment { cell, a: hits[p.0].1, b: hits[p.1].1 });
                out.push(RawSegment { cell, a: hits[q.0].1, b: hits[q.1].1 });
            }
            _ => {}
        }
    }
    out
}

/// Euclidean length and unit conormal (towards increasing `f`) of a raw segment.
pub(crate) fn geometry(f: &ScalarField, seg: &RawSegment) -> (f64, Vector) {
    let mesh = f.mesh();
    let grad = interpolate_grad(mesh, f.values(), seg.cell, seg.mid());
    if mesh.dim() == 1 {
        return (1.0, [grad[0].signum(), 0.0]);
    }
    let a = to_chart(mesh, seg.cell, seg.a);
    let b = to_chart(mesh, seg.cell, seg.b);
    let d = linalg::sub(b, a);
    let len = linalg::norm(d);
    let mut n = if len > 0.0 { [-d[1] / len, d[0] / len] } else { linalg::ZERO };
    let mut orient = linalg::dot(n, grad);
    if orient == 0.0 {
        let c = corners(mesh, f.values(), seg.cell);
        let avg = [(c[1] + c[2] - c[0] - c[3]) / mesh.spacing(0), (c[2] + c[3] - c[0] - c[1]) / mesh.spacing(1)];
        orient = linalg::dot(n, avg);
    }
    if orient < 0.0 {
        n = linalg::neg(n);
    }
    (len, n)
}

pub(crate) fn local_dual(m: &MetricModel, mesh: &Mesh, x: Vector) -> LocalDual {
    LocalDual::new(m.norm_at(mesh.chart().canonicalize(x)))
}

/// Forward and backward areas of `{f = t}` with `dA± = σ F*(±ν̂) dS`.
pub fn cut_areas(f: &ScalarField, t: f64, m: &MetricModel, sigma: &DensityField) -> Result<LevelSetCut> {
    let mesh = f.mesh();
    if sigma.len() != mesh.len() {
        return Err(FinslerError::InvalidMesh("density does not match mesh".into()));
    }
    let raw = extract_interface(f, t);
    let mut segments = Vec::with_capacity(raw.len());
    for seg in &raw {
        let (length, normal) = geometry(f, seg);
        if length == 0.0 || normal == linalg::ZERO {
            continue;
        }
        let mid = seg.mid();
        let s = interpolate(mesh, sigma.values(), seg.cell, mid);
        let dual = local_dual(m, mesh, to_chart(mesh, seg.cell, mid));
        segments.push(InterfaceSegment {
            start: to_chart(mesh, seg.cell, seg.a),
            end: to_chart(mesh, seg.cell, seg.b),
            normal,
            length,
            sigma: s,
            forward: s * dual.value(normal) * length,
            backward: s * dual.value(linalg::neg(normal)) * length,
        });
    }
    if segments.is_empty() {
        return Err(FinslerError::TrivialCut(t));
    }
    let cell = mesh.cell_volume();
    let (mut below, mut above) = (0.0, 0.0);
    for (v, s) in f.values().iter().zip(sigma.values()) {
        if *v < t {
            below += s * cell;
        } else {
            above += s * cell;
        }
    }
    Ok(LevelSetCut {
        level: t,
        area_forward: segments.iter().map(|s| s.forward).sum(),
        area_backward: segments.iter().map(|s| s.backward).sum(),
        segments,
        volume_below: below,
        volume_above: above,
    })
}

/// Thresholds splitting the sorted values into `levels` equal-count bins,
/// each placed midway between neighbouring sorted values and nudged off any
/// node value by `10⁻¹² × range`.
pub fn quantile_levels(values: &[f64], levels: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let range = sorted[n - 1] - sorted[0];
    let mut out: Vec<f64> = Vec::new();
    for q in 1..levels {
        let idx = (q * n / levels).clamp(1, n - 1);
        let mut t = 0.5 * (sorted[idx - 1] + sorted[idx]);
        if sorted.binary_search_by(|v| v.total_cmp(&t)).is_ok() {
            t += 1e-12 * range;
        }
        if t > sorted[0] && t < sorted[n - 1] && out.last() != Some(&t) {
            out.push(t);
        }
    }
    out
}

/// The best level cut of a sweep; `h_ub` bounds the Cheeger constant from above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheegerSweep {
    pub h_ub: f64,
    pub cut: LevelSetCut,
}

pub fn cheeger_sweep(f: &ScalarField, m: &MetricModel, sigma: &DensityField, levels: usize) -> Result<CheegerSweep> {
    if !(f.max() > f.min()) {
        return Err(FinslerError::InvalidArgument("sweep needs a nonconstant field".into()));
    }
    let cuts = quantile_levels(f.values(), levels.max(2))
        .into_par_iter()
        .map(|t| cut_areas(f, t, m, sigma))
        .collect::<Result<Vec<_>>>()?;
    let cut = cuts
        .into_iter()
        .reduce(|a, b| if b.ratio() < a.ratio() { b } else { a })
        .ok_or(FinslerError::TrivialCut(f.min()))?;
    Ok(CheegerSweep { h_ub: cut.ratio(), cut })
}

/// Exact discrete Cheeger constant of a circle: every pair of cut points at
/// cell midpoints, each weighted by `σ F*(±1)`.
pub fn cheeger_1d_exact(m: &MetricModel, mesh: &Mesh, sigma: &DensityField) -> Result<f64> {
    if mesh.dim() != 1 || m.dim() != 1 {
        return Err(FinslerError::UnsupportedDimension(mesh.dim().max(m.dim())));
    }
    if sigma.len() != mesh.len() {
        return Err(FinslerError::InvalidMesh("density does not match mesh".into()));
    }
    let n = mesh.len();
    let s = sigma.values();
    let h = mesh.spacing(0);
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + s[i] * mesh.cell_volume();
    }
    let total = prefix[n];
    // Cut k sits between nodes k and k+1.
    let weights: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let sm = 0.5 * (s[k] + s[(k + 1) % n]);
            let dual = local_dual(m, mesh, [(k as f64 + 0.5) * h, 0.0]);
            (sm * dual.value([1.0, 0.0]), sm * dual.value([-1.0, 0.0]))
        })
        .collect();
    let best = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in i + 1..n {
                // D₁ = nodes i+1..=j; its outward conormal is +1 at cut j and −1 at cut i.
                let v1 = prefix[j + 1] - prefix[i + 1];
                let forward = weights[j].0 + weights[i].1;
                let backward = weights[j].1 + weights[i].0;
                let r = forward.min(backward) / v1.min(total - v1);
                best = best.min(r);
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}
