//! Busemann–Hausdorff and Holmes–Thompson densities, distortion and S-curvature.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::linalg::{self, Vector};
use crate::metric::{geodesic, ChartPoint, MetricModel, Tangent, TangentNorm};
use crate::spectral::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    BusemannHausdorff,
    HolmesThompson,
}

impl MeasureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasureKind::BusemannHausdorff => "busemann-hausdorff",
            MeasureKind::HolmesThompson => "holmes-thompson",
        }
    }
}

/// Which density to compute and with how many angular quadrature nodes.
///
/// The Holmes–Thompson integrand `det g` is constant along rays, so the
/// radial integral over the unit ball is taken exactly and only the angular
/// resolution is a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub directions: usize,
}

impl MeasureSpec {
    pub const DEFAULT_DIRECTIONS: usize = 512;

    pub fn new(kind: MeasureKind) -> Self {
        Self { kind, directions: Self::DEFAULT_DIRECTIONS }
    }

    pub fn busemann_hausdorff() -> Self {
        Self::new(MeasureKind::BusemannHausdorff)
    }

    pub fn holmes_thompson() -> Self {
        Self::new(MeasureKind::HolmesThompson)
    }

    pub fn with_directions(mut self, directions: usize) -> Result<Self> {
        if directions < 64 {
            return Err(FinslerError::InvalidArgument(format!("need ≥ 64 directions, got {directions}")));
        }
        self.directions = directions;
        Ok(self)
    }
}

/// Node-sampled measure density `σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(FinslerError::InvalidArgument("density must be positive and finite".into()));
        }
        Ok(Self { values })
    }

    /// Constant density on `n` nodes.
    pub fn uniform(n: usize, sigma: f64) -> Self {
        Self { values: vec![sigma; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect() }
    }
}

/// `vol(𝔹ⁿ)`: `1, 2, π, …` via `V_n = 2π/n · V_{n−2}`.
pub fn unit_ball_volume_euclidean(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => TAU / n as f64 * unit_ball_volume_euclidean(n - 2),
    }
}

/// `vol(𝕊ᵏ)`, the area of the unit `k`-sphere in `ℝᵏ⁺¹`; `vol(𝕊⁰) = 2`.
pub fn unit_sphere_area(k: usize) -> f64 {
    (k + 1) as f64 * unit_ball_volume_euclidean(k + 1)
}

/// Lebesgue volume of `B_pM = {y : F(p, y) < 1}`.
pub fn unit_ball_volume(m: &MetricModel, p: &ChartPoint, directions: usize) -> f64 {
    ball_volume_at(&m.norm_at(p.coords), directions)
}

fn ball_volume_at(norm: &TangentNorm, directions: usize) -> f64 {
    if norm.dim == 1 {
        return 1.0 / norm.eval([1.0, 0.0]) + 1.0 / norm.eval([-1.0, 0.0]);
    }
    // Trapezoid rule in angle for ½∮ r(θ)² dθ with r = 1/F(e(θ)).
    let dtheta = TAU / directions as f64;
    let sum: f64 = (0..directions)
        .map(|k| {
            let r = 1.0 / norm.eval(linalg::polar(k as f64 * dtheta));
            r * r
        })
        .sum();
    0.5 * sum * dtheta
}

pub fn bh_density(m: &MetricModel, p: &ChartPoint, q: &MeasureSpec) -> f64 {
    unit_ball_volume_euclidean(m.dim()) / unit_ball_volume(m, p, q.directions)
}

pub fn ht_density(m: &MetricModel, p: &ChartPoint, q: &MeasureSpec) -> Result<f64> {
    ht_density_at(&m.norm_at(p.coords), q.directions)
}

fn ht_density_at(norm: &TangentNorm, directions: usize) -> Result<f64> {
    let dim = norm.dim;
    let det_g = |y: Vector| norm.fundamental_tensor(y).map(|g| linalg::det(dim, &g));
    if dim == 1 {
        // ∫ det g dy over (−1/F(−1), 1/F(1)) with det g = F(±1)² on each half-line.
        let up = det_g([1.0, 0.0])? / norm.eval([1.0, 0.0]);
        let down = det_g([-1.0, 0.0])? / norm.eval([-1.0, 0.0]);
        return Ok((up + down) / unit_ball_volume_euclidean(1));
    }
    let dtheta = TAU / directions as f64;
    let mut sum = 0.0;
    for k in 0..directions {
        let e = linalg::polar(k as f64 * dtheta);
        let r = 1.0 / norm.eval(e);
        sum += det_g(e)? * 0.5 * r * r;
    }
    Ok(sum * dtheta / PI)
}

/// `σ(p)` for the requested measure.
pub fn density(m: &MetricModel, p: &ChartPoint, q: &MeasureSpec) -> Result<f64> {
    density_at(&m.norm_at(p.coords), q)
}

fn density_at(norm: &TangentNorm, q: &MeasureSpec) -> Result<f64> {
    match q.kind {
        MeasureKind::BusemannHausdorff => {
            Ok(unit_ball_volume_euclidean(norm.dim) / ball_volume_at(norm, q.directions))
        }
        MeasureKind::HolmesThompson => ht_density_at(norm, q.directions),
    }
}

/// Density at every mesh node; a single fibre is evaluated for `x`-independent metrics.
pub fn density_field(m: &MetricModel, mesh: &Mesh, q: &MeasureSpec) -> Result<DensityField> {
    if m.is_x_homogeneous() {
        let s = density_at(&m.norm_at(mesh.coords(0)), q)?;
        return Ok(DensityField::uniform(mesh.len(), s));
    }
    let values = (0..mesh.len())
        .into_par_iter()
        .map(|i| density_at(&m.norm_at(mesh.coords(i)), q))
        .collect::<Result<Vec<_>>>()?;
    DensityField::new(values)
}

/// `τ(y) = log(√det g(x, y) / σ(x))`.
pub fn distortion(m: &MetricModel, t: &Tangent, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(FinslerError::InvalidArgument(format!("density {sigma} must be positive")));
    }
    let g = m.fundamental_tensor(t)?;
    Ok((g.det().sqrt() / sigma).ln())
}

/// Steps used on each side when integrating the geodesic for `S`.
const S_CURVATURE_STEPS: usize = 16;

/// `S(y) = d/dt τ(γ̇(t))|₀` by a central difference along the geodesic with
/// `γ̇(0) = y`, step `10⁻³ ×` the chart scale.
pub fn s_curvature(m: &MetricModel, t: &Tangent, q: &MeasureSpec) -> Result<f64> {
    if linalg::norm(t.y) == 0.0 {
        return Err(FinslerError::DegenerateDirection);
    }
    let h = 1e-3 * m.chart().scale();
    let tau_at = |duration: f64| -> Result<f64> {
        let path = geodesic::integrate(m, t, duration, S_CURVATURE_STEPS)?;
        let end = path.last();
        let sigma = density(m, &end.point, q)?;
        distortion(m, &Tangent::new(end.point, end.velocity), sigma)
    };
    Ok((tau_at(h)? - tau_at(-h)?) / (2.0 * h))
}
