//! Finsler metric models on one- and two-dimensional charts.
//!
//! A [`MetricModel`] is a parametric family evaluated pointwise through a
//! [`TangentNorm`], the Minkowski norm it induces on a single tangent space.
//! Curvature quantities live in [`curvature`] and geodesic integration in
//! [`geodesic`].

pub mod curvature;
pub mod geodesic;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::linalg::{self, Matrix, Vector};

pub use curvature::FundamentalTensor;
pub use geodesic::{GeodesicPath, GeodesicSample};

/// Largest admissible `sup ‖β‖_α` for Randers models.
pub const RANDERS_MAX_B: f64 = 0.95;

/// Width of the excluded polar band in the spherical chart.
pub const POLE_BAND: f64 = 0.1;

/// One coordinate axis of a chart: periodic with a period, or a bounded interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Axis {
    Periodic(f64),
    Interval(f64, f64),
}

impl Axis {
    pub fn extent(&self) -> f64 {
        match *self {
            Axis::Periodic(l) => l,
            Axis::Interval(lo, hi) => hi - lo,
        }
    }
}

/// Coordinate chart: one or two axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    axes: Vec<Axis>,
}

impl Chart {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(FinslerError::UnsupportedDimension(axes.len()));
        }
        for a in &axes {
            let ok = match *a {
                Axis::Periodic(l) => l.is_finite() && l > 0.0,
                Axis::Interval(lo, hi) => lo.is_finite() && hi.is_finite() && hi > lo,
            };
            if !ok {
                return Err(FinslerError::InvalidModel(format!("bad chart axis {a:?}")));
            }
        }
        Ok(Self { axes })
    }

    pub fn circle(length: f64) -> Result<Self> {
        Self::new(vec![Axis::Periodic(length)])
    }

    pub fn torus(l0: f64, l1: f64) -> Result<Self> {
        Self::new(vec![Axis::Periodic(l0), Axis::Periodic(l1)])
    }

    /// Spherical coordinates `(θ, φ)` with the polar caps removed.
    pub fn sphere() -> Self {
        Self {
            axes: vec![Axis::Interval(POLE_BAND, PI - POLE_BAND), Axis::Periodic(TAU)],
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn is_periodic(&self) -> bool {
        self.axes.iter().all(|a| matches!(a, Axis::Periodic(_)))
    }

    /// Smallest axis extent; sets the differencing scale in `x`.
    pub fn scale(&self) -> f64 {
        self.axes.iter().map(Axis::extent).fold(f64::INFINITY, f64::min)
    }

    /// Wraps periodic coordinates into `[0, L)`.
    pub fn canonicalize(&self, mut x: Vector) -> Vector {
        for (i, a) in self.axes.iter().enumerate() {
            if let Axis::Periodic(l) = *a {
                let r = x[i].rem_euclid(l);
                x[i] = if r >= l { 0.0 } else { r };
            }
        }
        x
    }

    pub fn contains(&self, x: Vector) -> bool {
        self.axes.iter().enumerate().all(|(i, a)| match *a {
            Axis::Periodic(_) => x[i].is_finite(),
            Axis::Interval(lo, hi) => x[i] >= lo && x[i] <= hi,
        })
    }

    /// Euclidean chart distance with periodic identification.
    pub fn distance(&self, a: Vector, b: Vector) -> f64 {
        let mut d = [0.0; 2];
        for (i, ax) in self.axes.iter().enumerate() {
            let mut di = (a[i] - b[i]).abs();
            if let Axis::Periodic(l) = *ax {
                di %= l;
                di = di.min(l - di);
            }
            d[i] = di;
        }
        linalg::norm(d)
    }

    pub fn point(&self, coords: Vector) -> ChartPoint {
        ChartPoint { coords: self.canonicalize(coords) }
    }
}

/// A point of the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub coords: Vector,
}

impl ChartPoint {
    pub fn new(coords: Vector) -> Self {
        Self { coords }
    }
}

/// A tangent vector `y` at `base`, with components in the chart frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    pub base: ChartPoint,
    pub y: Vector,
}

impl Tangent {
    pub fn new(base: ChartPoint, y: Vector) -> Self {
        Self { base, y }
    }
}

/// Riemannian coefficient field `a_ij(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RiemannianField {
    Constant(Matrix),
    /// Round sphere of the given radius in spherical coordinates `(θ, φ)`.
    Sphere { radius: f64 },
}

impl RiemannianField {
    pub fn at(&self, x: Vector) -> Matrix {
        match *self {
            RiemannianField::Constant(a) => a,
            RiemannianField::Sphere { radius } => {
                let r2 = radius * radius;
                let s = x[0].sin();
                [[r2, 0.0], [0.0, r2 * s * s]]
            }
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, RiemannianField::Constant(_))
    }
}

/// The 1-form `β` of a Randers metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OneForm {
    /// Constant chart components.
    Constant(Vector),
    /// `β = b · L(x) (cos ψ, sin ψ)` with `ψ = k·x + phase` and `a = L Lᵀ`,
    /// so `‖β‖_α = b` everywhere in two dimensions (`b |cos ψ|` in one).
    Wave { b: f64, wavevector: Vector, phase: f64 },
}

impl OneForm {
    fn at(&self, dim: usize, x: Vector, a: &Matrix) -> Vector {
        match *self {
            OneForm::Constant(v) => v,
            OneForm::Wave { b, wavevector, phase } => {
                let psi = linalg::dot(wavevector, x) + phase;
                let (s, c) = psi.sin_cos();
                if dim == 1 {
                    return [b * a[0][0].sqrt() * c, 0.0];
                }
                let l = linalg::cholesky(2, a).unwrap_or([[f64::NAN; 2]; 2]);
                linalg::mat_vec(&l, [b * c, b * s])
            }
        }
    }

    fn negated(&self) -> Self {
        match *self {
            OneForm::Constant(v) => OneForm::Constant(linalg::neg(v)),
            OneForm::Wave { b, wavevector, phase } => OneForm::Wave { b, wavevector, phase: phase + PI },
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, OneForm::Constant(_))
    }
}

/// Metric family together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Riemannian(RiemannianField),
    Randers { alpha: RiemannianField, beta: OneForm },
    /// `x`-independent norm `((yᵀAy)² + ε Σ yᵢ⁴)^{1/4} + drift·y`.
    Minkowski { a: Matrix, quartic: f64, drift: Vector },
    /// `ρ(x₀) · sqrt(yᵀAy)` with `ρ = w + (1 − w) sin²(2π x₀ / L₀)`: two necks
    /// of relative width `w` at `x₀ = 0` and `x₀ = L₀/2`. With `warped` set,
    /// `ρ` scales only the transverse coordinate, `sqrt(ỹᵀAỹ)` with `ỹ = (y₀, ρ y₁)`.
    ConformalNeck {
        a: Matrix,
        width: f64,
        #[serde(default)]
        warped: bool,
    },
}

/// Short family tag used in reports.
impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Riemannian(_) => "riemannian",
            Family::Randers { .. } => "randers",
            Family::Minkowski { .. } => "minkowski",
            Family::ConformalNeck { .. } => "conformal-neck",
        }
    }
}

/// A Finsler metric on a chart, optionally rescaled by a constant factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricModel {
    chart: Chart,
    family: Family,
    /// Multiplier on `F`; rescaling `F ↦ √C F` sets this to `√C`.
    scale: f64,
}

impl MetricModel {
    pub fn new(chart: Chart, family: Family) -> Result<Self> {
        let m = Self { chart, family, scale: 1.0 };
        m.validate()?;
        Ok(m)
    }

    pub fn riemannian(chart: Chart, a: Matrix) -> Result<Self> {
        Self::new(chart, Family::Riemannian(RiemannianField::Constant(a)))
    }

    pub fn euclidean(chart: Chart) -> Result<Self> {
        Self::riemannian(chart, [[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn round_sphere(radius: f64) -> Result<Self> {
        Self::new(Chart::sphere(), Family::Riemannian(RiemannianField::Sphere { radius }))
    }

    pub fn randers(chart: Chart, a: Matrix, beta: Vector) -> Result<Self> {
        Self::new(
            chart,
            Family::Randers { alpha: RiemannianField::Constant(a), beta: OneForm::Constant(beta) },
        )
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `F ↦ √C · F`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(FinslerError::InvalidModel(format!("rescaling constant {c} must be positive")));
        }
        let mut m = self.clone();
        m.scale *= c.sqrt();
        Ok(m)
    }

    /// The reverse metric `F̃(x, y) = F(x, −y)`.
    pub fn reverse(&self) -> Self {
        let family = match &self.family {
            Family::Randers { alpha, beta } => Family::Randers { alpha: *alpha, beta: beta.negated() },
            Family::Minkowski { a, quartic, drift } => {
                Family::Minkowski { a: *a, quartic: *quartic, drift: linalg::neg(*drift) }
            }
            other => other.clone(),
        };
        Self { chart: self.chart.clone(), family, scale: self.scale }
    }

    /// True when `F` does not depend on the base point.
    pub fn is_x_homogeneous(&self) -> bool {
        match &self.family {
            Family::Riemannian(f) => f.is_constant(),
            Family::Randers { alpha, beta } => alpha.is_constant() && beta.is_constant(),
            Family::Minkowski { .. } => true,
            Family::ConformalNeck { width, warped, .. } => *width == 1.0 || (*warped && self.dim() == 1),
        }
    }

    /// True when `F²` is quadratic in `y` everywhere.
    pub fn is_riemannian(&self) -> bool {
        matches!(self.family, Family::Riemannian(_) | Family::ConformalNeck { .. })
    }

    /// Conformal factor of the neck family.
    pub fn neck_profile(&self, x: Vector) -> Option<f64> {
        match self.family {
            Family::ConformalNeck { width, .. } => {
                let l0 = self.chart.axes()[0].extent();
                let s = (TAU * x[0] / l0).sin();
                Some(width + (1.0 - width) * s * s)
            }
            _ => None,
        }
    }

    /// The Minkowski norm `F(x, ·)` on the tangent space at `x`.
    pub fn norm_at(&self, x: Vector) -> TangentNorm {
        let dim = self.dim();
        let s = self.scale;
        let s2 = s * s;
        let kind = match &self.family {
            Family::Riemannian(field) => NormKind::Quadratic { a: mat_scale(field.at(x), s2) },
            Family::Randers { alpha, beta } => {
                let a = alpha.at(x);
                let b = beta.at(dim, x, &a);
                NormKind::Randers { a: mat_scale(a, s2), beta: linalg::scale(b, s) }
            }
            Family::Minkowski { a, quartic, drift } => NormKind::Quartic {
                a: mat_scale(*a, s2),
                quartic: quartic * s2 * s2,
                drift: linalg::scale(*drift, s),
            },
            Family::ConformalNeck { a, warped: false, .. } => {
                let rho = self.neck_profile(x).unwrap_or(1.0);
                NormKind::Quadratic { a: mat_scale(*a, s2 * rho * rho) }
            }
            Family::ConformalNeck { a, warped: true, .. } => {
                let rho = if dim == 2 { self.neck_profile(x).unwrap_or(1.0) } else { 1.0 };
                let w = [[a[0][0], a[0][1] * rho], [a[1][0] * rho, a[1][1] * rho * rho]];
                NormKind::Quadratic { a: mat_scale(w, s2) }
            }
        };
        TangentNorm { dim, kind }
    }

    /// `F(p, y)`.
    pub fn eval(&self, p: &ChartPoint, y: Vector) -> f64 {
        self.norm_at(p.coords).eval(y)
    }

    /// `sup ‖β‖_α` over the chart for Randers models.
    pub fn randers_b(&self) -> Option<f64> {
        match &self.family {
            Family::Randers { alpha, beta } => Some(match (alpha, beta) {
                (_, OneForm::Wave { b, .. }) => b.abs(),
                (RiemannianField::Constant(a), OneForm::Constant(v)) => alpha_norm(self.dim(), a, *v),
                (field, OneForm::Constant(v)) => {
                    // Sup over a latitude sweep of the spherical chart.
                    let mut best: f64 = 0.0;
                    for k in 0..=512 {
                        let th = POLE_BAND + (PI - 2.0 * POLE_BAND) * k as f64 / 512.0;
                        best = best.max(alpha_norm(self.dim(), &field.at([th, 0.0]), *v));
                    }
                    best
                }
            }),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let dim = self.dim();
        let bad = |msg: String| Err(FinslerError::InvalidModel(msg));
        let finite_mat = |a: &Matrix| a.iter().flatten().all(|v| v.is_finite());
        match &self.family {
            Family::Riemannian(RiemannianField::Constant(a))
            | Family::Randers { alpha: RiemannianField::Constant(a), .. }
            | Family::Minkowski { a, .. }
            | Family::ConformalNeck { a, .. } => {
                if !finite_mat(a) {
                    return bad("non-finite coefficient matrix".into());
                }
                if linalg::cholesky(dim, &linalg::symmetrize(a)).is_none() {
                    return bad("coefficient matrix is not positive definite".into());
                }
            }
            _ => {}
        }
        if let Family::Riemannian(RiemannianField::Sphere { radius })
        | Family::Randers { alpha: RiemannianField::Sphere { radius }, .. } = &self.family
        {
            if !(radius.is_finite() && *radius > 0.0) {
                return bad(format!("sphere radius {radius} must be positive"));
            }
            if dim != 2 {
                return bad("sphere field requires a two-dimensional chart".into());
            }
        }
        match &self.family {
            Family::Randers { beta, .. } => {
                let finite = match beta {
                    OneForm::Constant(v) => linalg::is_finite(*v),
                    OneForm::Wave { b, wavevector, phase } => {
                        b.is_finite() && linalg::is_finite(*wavevector) && phase.is_finite()
                    }
                };
                if !finite {
                    return bad("non-finite 1-form".into());
                }
                let b = self.randers_b().unwrap_or(f64::NAN);
                if !(b <= RANDERS_MAX_B) {
                    return bad(format!("Randers bound b = {b} exceeds {RANDERS_MAX_B}"));
                }
            }
            Family::Minkowski { quartic, drift, .. } => {
                if !(quartic.is_finite() && *quartic >= 0.0 && linalg::is_finite(*drift)) {
                    return bad("Minkowski parameters must be finite with quartic ≥ 0".into());
                }
            }
            Family::ConformalNeck { width, .. } => {
                if !(width.is_finite() && *width > 0.0 && *width <= 1.0) {
                    return bad(format!("neck width {width} must lie in (0, 1]"));
                }
                if !self.chart.is_periodic() {
                    return bad("neck profile needs a periodic chart".into());
                }
            }
            _ => {}
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return bad("scale must be positive".into());
        }
        self.check_convexity()
    }

    /// Probabilistic strong-convexity check: `F > 0` and `g` positive definite
    /// on a deterministic set of sample points and directions.
    fn check_convexity(&self) -> Result<()> {
        let dim = self.dim();
        let dirs: Vec<Vector> = if dim == 1 {
            vec![[1.0, 0.0], [-1.0, 0.0]]
        } else {
            (0..24).map(|k| linalg::polar(TAU * (k as f64 + 0.37) / 24.0)).collect()
        };
        for x in self.sample_points(5) {
            let norm = self.norm_at(x);
            for &y in &dirs {
                let f = norm.eval(y);
                if !(f.is_finite() && f > 0.0) {
                    return Err(FinslerError::InvalidModel(format!("F(x, y) = {f} at x = {x:?}, y = {y:?}")));
                }
                let g = norm.fundamental_tensor(y)?;
                if linalg::sym_eigenvalues(dim, &g)[0] <= 0.0 {
                    return Err(FinslerError::DegenerateMetric(x));
                }
            }
        }
        Ok(())
    }

    /// A deterministic `n`-per-axis lattice of points inside the chart.
    pub fn sample_points(&self, n: usize) -> Vec<Vector> {
        let axis_samples = |a: &Axis| -> Vec<f64> {
            (0..n)
                .map(|k| match *a {
                    Axis::Periodic(l) => l * (k as f64 + 0.25) / n as f64,
                    Axis::Interval(lo, hi) => lo + (hi - lo) * (k as f64 + 0.5) / n as f64,
                })
                .collect()
        };
        let axes = self.chart.axes();
        let first = axis_samples(&axes[0]);
        if axes.len() == 1 {
            return first.into_iter().map(|v| [v, 0.0]).collect();
        }
        let second = axis_samples(&axes[1]);
        first.iter().flat_map(|&u| second.iter().map(move |&v| [u, v])).collect()
    }
}

fn mat_scale(a: Matrix, s: f64) -> Matrix {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

fn alpha_norm(dim: usize, a: &Matrix, v: Vector) -> f64 {
    match linalg::inverse(dim, a) {
        Some(inv) => linalg::quad_form(&inv, v).max(0.0).sqrt(),
        None => f64::NAN,
    }
}

/// Parameters of a Minkowski norm on one tangent space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// `sqrt(yᵀ a y)`.
    Quadratic { a: Matrix },
    /// `sqrt(yᵀ a y) + β·y`.
    Randers { a: Matrix, beta: Vector },
    /// `((yᵀ a y)² + ε Σ yᵢ⁴)^{1/4} + drift·y`.
    Quartic { a: Matrix, quartic: f64, drift: Vector },
}

/// `F(x, ·)` frozen at a base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentNorm {
    pub dim: usize,
    pub kind: NormKind,
}

impl TangentNorm {
    pub fn eval(&self, y: Vector) -> f64 {
        let y = if self.dim == 1 { [y[0], 0.0] } else { y };
        match self.kind {
            NormKind::Quadratic { a } => linalg::quad_form(&a, y).max(0.0).sqrt(),
            NormKind::Randers { a, beta } => linalg::quad_form(&a, y).max(0.0).sqrt() + linalg::dot(beta, y),
            NormKind::Quartic { a, quartic, drift } => {
                let q = linalg::quad_form(&a, y).max(0.0);
                let quart = q * q + quartic * (y[0].powi(4) + y[1].powi(4));
                quart.sqrt().sqrt() + linalg::dot(drift, y)
            }
        }
    }

    #[inline]
    pub fn eval_sq(&self, y: Vector) -> f64 {
        let f = self.eval(y);
        f * f
    }

    /// `g_ij(y) = ½ ∂²F²/∂yⁱ∂yʲ`.
    ///
    /// Closed form for quadratic and Randers norms and in one dimension;
    /// otherwise central differences with Richardson extrapolation, steps
    /// proportional to `|y|`.
    pub fn fundamental_tensor(&self, y: Vector) -> Result<Matrix> {
        let ny = linalg::norm(y);
        if !(ny > 0.0) {
            return Err(FinslerError::DegenerateDirection);
        }
        if let NormKind::Quadratic { a } = self.kind {
            return Ok(linalg::symmetrize(&a));
        }
        if self.dim == 1 {
            // F² = F(±1)² y² on each half-line.
            let f = self.eval([y[0].signum(), 0.0]);
            return Ok([[f * f, 0.0], [0.0, 0.0]]);
        }
        if let NormKind::Randers { a, beta } = self.kind {
            // g = (F/α)(a − ℓℓᵀ) + (ℓ + β)(ℓ + β)ᵀ with ℓ = a y / α.
            let a = linalg::symmetrize(&a);
            let alpha = linalg::quad_form(&a, y).sqrt();
            let l = linalg::scale(linalg::mat_vec(&a, y), 1.0 / alpha);
            let k = (alpha + linalg::dot(beta, y)) / alpha;
            let lb = linalg::add(l, beta);
            let mut g = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    g[i][j] = k * (a[i][j] - l[i] * l[j]) + lb[i] * lb[j];
                }
            }
            return Ok(g);
        }
        self.numeric_fundamental_tensor(y)
    }

    /// `g` by finite differences of `F²` regardless of the norm kind.
    pub fn numeric_fundamental_tensor(&self, y: Vector) -> Result<Matrix> {
        let ny = linalg::norm(y);
        if !(ny > 0.0) {
            return Err(FinslerError::DegenerateDirection);
        }
        let h = 2e-3 * ny;
        if y[0] + h == y[0] && y[1] + h == y[1] {
            return Err(FinslerError::DifferentiationFailure("y step underflow".into()));
        }
        let f2 = |v: Vector| self.eval_sq(v);
        let mut g = [[0.0; 2]; 2];
        for i in 0..self.dim {
            let ei = linalg::unit(self.dim, i);
            g[i][i] = 0.5 * crate::diff::second(|t| f2(linalg::axpy(y, t, ei)), h);
            for j in 0..i {
                let ej = linalg::unit(self.dim, j);
                let v = 0.5
                    * crate::diff::mixed(|s, t| f2(linalg::axpy(linalg::axpy(y, s, ei), t, ej)), h, h);
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        Ok(g)
    }

    /// Closed-form dual norm `F*(η)` where one is available: quadratic and
    /// Randers norms in any dimension, every norm in one dimension.
    pub fn dual_closed_form(&self, eta: Vector) -> Option<f64> {
        if self.dim == 1 {
            let e = eta[0];
            return Some(if e > 0.0 {
                e / self.eval([1.0, 0.0])
            } else if e < 0.0 {
                -e / self.eval([-1.0, 0.0])
            } else {
                0.0
            });
        }
        match self.kind {
            NormKind::Quadratic { a } => {
                let inv = linalg::inverse(2, &a)?;
                Some(linalg::quad_form(&inv, eta).max(0.0).sqrt())
            }
            NormKind::Randers { a, beta } => {
                let r = RandersDual::new(&a, beta)?;
                Some(r.value(eta))
            }
            NormKind::Quartic { .. } => None,
        }
    }

    /// Closed-form `(F*²(η), ∂F*²/∂η)`; the gradient equals `2 𝔏⁻¹(η)`.
    pub fn dual_sq_grad_closed_form(&self, eta: Vector) -> Option<(f64, Vector)> {
        if self.dim == 1 {
            let e = eta[0];
            if e == 0.0 {
                return Some((0.0, [0.0, 0.0]));
            }
            let f = if e > 0.0 { self.eval([1.0, 0.0]) } else { self.eval([-1.0, 0.0]) };
            let inv = 1.0 / (f * f);
            return Some((e * e * inv, [2.0 * e * inv, 0.0]));
        }
        match self.kind {
            NormKind::Quadratic { a } => {
                let inv = linalg::inverse(2, &a)?;
                let v = linalg::mat_vec(&inv, eta);
                Some((linalg::dot(eta, v), linalg::scale(v, 2.0)))
            }
            NormKind::Randers { a, beta } => RandersDual::new(&a, beta).map(|r| r.sq_grad(eta)),
            NormKind::Quartic { .. } => None,
        }
    }
}

/// Closed-form dual of a Randers norm `sqrt(yᵀay) + β·y`:
/// `F*(η) = (sqrt((1 − b²)|η|²_{a⁻¹} + ⟨η, β⟩²) − ⟨η, β⟩) / (1 − b²)` with
/// `⟨η, β⟩ = ηᵀ a⁻¹ β` and `b² = βᵀ a⁻¹ β`.
#[derive(Debug, Clone, Copy)]
pub struct RandersDual {
    inv: Matrix,
    raised: Vector,
    one_minus_b2: f64,
}

impl RandersDual {
    pub fn new(a: &Matrix, beta: Vector) -> Option<Self> {
        let inv = linalg::inverse(2, a)?;
        let raised = linalg::mat_vec(&inv, beta);
        let one_minus_b2 = 1.0 - linalg::dot(beta, raised);
        (one_minus_b2 > 0.0).then_some(Self { inv, raised, one_minus_b2 })
    }

    pub fn value(&self, eta: Vector) -> f64 {
        let q = linalg::quad_form(&self.inv, eta);
        let p = linalg::dot(eta, self.raised);
        let s = (self.one_minus_b2 * q + p * p).max(0.0).sqrt();
        (s - p) / self.one_minus_b2
    }

    pub fn sq_grad(&self, eta: Vector) -> (f64, Vector) {
        let ai = linalg::mat_vec(&self.inv, eta);
        let q = linalg::dot(eta, ai);
        let p = linalg::dot(eta, self.raised);
        let s = (self.one_minus_b2 * q + p * p).max(0.0).sqrt();
        if s == 0.0 {
            return (0.0, [0.0, 0.0]);
        }
        let k = 1.0 / self.one_minus_b2;
        let f = (s - p) * k;
        let grad_s = linalg::scale(linalg::axpy(linalg::scale(ai, self.one_minus_b2), p, self.raised), 1.0 / s);
        let grad_f = linalg::scale(linalg::sub(grad_s, self.raised), k);
        (f * f, linalg::scale(grad_f, 2.0 * f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> Chart {
        Chart::torus(TAU, TAU).unwrap()
    }

    #[test]
    fn euclidean_pythagoras() {
        let m = MetricModel::euclidean(torus()).unwrap();
        let p = ChartPoint::new([0.3, 1.0]);
        assert!((m.eval(&p, [3.0, 4.0]) - 5.0).abs() < 1e-14);
        assert_eq!(m.eval(&p, [0.0, 0.0]), 0.0);
    }

    #[test]
    fn one_dimensional_randers() {
        let m = MetricModel::randers(Chart::circle(TAU).unwrap(), [[4.0, 0.0], [0.0, 0.0]], [1.0, 0.0]).unwrap();
        let p = ChartPoint::new([1.0, 0.0]);
        assert!((m.eval(&p, [1.0, 0.0]) - 3.0).abs() < 1e-14);
        assert!((m.eval(&p, [-1.0, 0.0]) - 1.0).abs() < 1e-14);
        assert!((m.randers_b().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn randers_bound_enforced() {
        let err = MetricModel::randers(torus(), [[1.0, 0.0], [0.0, 1.0]], [0.96, 0.0]);
        assert!(matches!(err, Err(FinslerError::InvalidModel(_))));
        assert!(MetricModel::randers(torus(), [[1.0, 0.0], [0.0, 1.0]], [0.95, 0.0]).is_ok());
    }

    #[test]
    fn non_finite_parameters_rejected() {
        let err = MetricModel::riemannian(torus(), [[f64::NAN, 0.0], [0.0, 1.0]]);
        assert!(matches!(err, Err(FinslerError::InvalidModel(_))));
        let err = MetricModel::new(
            torus(),
            Family::Minkowski { a: [[1.0, 0.0], [0.0, 1.0]], quartic: f64::INFINITY, drift: [0.0, 0.0] },
        );
        assert!(matches!(err, Err(FinslerError::InvalidModel(_))));
    }

    #[test]
    fn reverse_is_involution_and_mirrors() {
        let m = MetricModel::new(
            torus(),
            Family::Randers {
                alpha: RiemannianField::Constant([[1.5, 0.2], [0.2, 0.8]]),
                beta: OneForm::Wave { b: 0.4, wavevector: [1.0, 2.0], phase: 0.3 },
            },
        )
        .unwrap();
        let r = m.reverse();
        let rr = r.reverse();
        for (i, x) in m.sample_points(4).into_iter().enumerate() {
            let p = ChartPoint::new(x);
            let y = linalg::polar(0.7 * i as f64);
            assert!((r.eval(&p, y) - m.eval(&p, linalg::neg(y))).abs() < 1e-12);
            assert!((rr.eval(&p, y) - m.eval(&p, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn reversible_metric_is_its_own_reverse() {
        let m = MetricModel::new(
            torus(),
            Family::Minkowski { a: [[1.0, 0.1], [0.1, 1.2]], quartic: 0.3, drift: [0.0, 0.0] },
        )
        .unwrap();
        let r = m.reverse();
        let p = ChartPoint::new([0.2, 0.4]);
        for k in 0..16 {
            let y = linalg::polar(k as f64 * 0.4);
            assert!((r.eval(&p, y) - m.eval(&p, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn wave_one_form_has_constant_alpha_norm() {
        let m = MetricModel::new(
            torus(),
            Family::Randers {
                alpha: RiemannianField::Constant([[2.0, 0.3], [0.3, 1.0]]),
                beta: OneForm::Wave { b: 0.5, wavevector: [1.0, 1.0], phase: 0.0 },
            },
        )
        .unwrap();
        for x in m.sample_points(3) {
            let NormKind::Randers { a, beta } = m.norm_at(x).kind else { unreachable!() };
            assert!((alpha_norm(2, &a, beta) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_multiplies_norm() {
        let m = MetricModel::randers(torus(), [[1.0, 0.0], [0.0, 1.0]], [0.3, 0.1]).unwrap();
        let s = m.rescaled(4.0).unwrap();
        let p = ChartPoint::new([0.0, 0.0]);
        assert_eq!(s.eval(&p, [0.3, -0.7]), 2.0 * m.eval(&p, [0.3, -0.7]));
    }

    #[test]
    fn randers_tensor_closed_form_matches_hessian() {
        let norm = TangentNorm { dim: 2, kind: NormKind::Randers { a: [[2.0, 0.3], [0.3, 1.0]], beta: [0.4, -0.2] } };
        for k in 0..12 {
            let y = linalg::scale(linalg::polar(0.5 * k as f64), 1.7);
            let exact = norm.fundamental_tensor(y).unwrap();
            let approx = norm.numeric_fundamental_tensor(y).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((exact[i][j] - approx[i][j]).abs() < 1e-8, "{exact:?} vs {approx:?}");
                }
            }
            assert!((linalg::quad_form(&exact, y) - norm.eval_sq(y)).abs() < 1e-12);
        }
    }
}
