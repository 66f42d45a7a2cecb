use crate::duality;
use crate::error::{FinslerError, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::measures::DensityField;
use crate::metric::{MetricModel, NormKind, RandersDual, TangentNorm};

use std::sync::Arc;

use super::dual_table::{shared_table, DualTable};
use super::{Mesh, ScalarField};

/// `F*²` and its gradient on one tangent space, closed form where possible.
#[derive(Debug, Clone)]
pub(crate) enum LocalDual {
    Quadratic(Matrix),
    Randers(RandersDual),
    /// `1/F(+1)²` and `1/F(−1)²`.
    Line(f64, f64),
    Table(Arc<DualTable>),
    Numeric(TangentNorm),
}

impl LocalDual {
    pub(crate) fn new(norm: TangentNorm) -> Self {
        if norm.dim == 1 {
            let up = norm.eval([1.0, 0.0]);
            let down = norm.eval([-1.0, 0.0]);
            return LocalDual::Line(1.0 / (up * up), 1.0 / (down * down));
        }
        match norm.kind {
            NormKind::Quadratic { a } => match linalg::inverse(2, &a) {
                Some(inv) => LocalDual::Quadratic(inv),
                None => LocalDual::Numeric(norm),
            },
            NormKind::Randers { a, beta } => match RandersDual::new(&a, beta) {
                Some(r) => LocalDual::Randers(r),
                None => LocalDual::Numeric(norm),
            },
            NormKind::Quartic { .. } => match shared_table(&norm) {
                Some(t) => LocalDual::Table(t),
                None => LocalDual::Numeric(norm),
            },
        }
    }

    /// `F*(η)`.
    pub(crate) fn value(&self, eta: Vector) -> f64 {
        match self {
            LocalDual::Quadratic(inv) => linalg::quad_form(inv, eta).max(0.0).sqrt(),
            LocalDual::Randers(r) => r.value(eta),
            LocalDual::Line(up, down) => {
                let e = eta[0];
                if e >= 0.0 {
                    e * up.sqrt()
                } else {
                    -e * down.sqrt()
                }
            }
            LocalDual::Table(t) => t.value(eta),
            LocalDual::Numeric(norm) => duality::dual_norm_at(norm, eta),
        }
    }

    pub(crate) fn sq(&self, eta: Vector) -> f64 {
        match self {
            LocalDual::Quadratic(inv) => linalg::quad_form(inv, eta),
            LocalDual::Line(up, down) => eta[0] * eta[0] * if eta[0] >= 0.0 { *up } else { *down },
            _ => {
                let v = self.value(eta);
                v * v
            }
        }
    }

    /// `(F*²(η), 2 𝔏⁻¹(η))`.
    pub(crate) fn sq_grad(&self, eta: Vector) -> Result<(f64, Vector)> {
        Ok(match self {
            LocalDual::Quadratic(inv) => {
                let v = linalg::mat_vec(inv, eta);
                (linalg::dot(eta, v), linalg::scale(v, 2.0))
            }
            LocalDual::Randers(r) => r.sq_grad(eta),
            LocalDual::Table(t) => t.sq_grad(eta),
            LocalDual::Line(up, down) => {
                let k = if eta[0] >= 0.0 { *up } else { *down };
                (eta[0] * eta[0] * k, [2.0 * eta[0] * k, 0.0])
            }
            LocalDual::Numeric(norm) => {
                if linalg::norm(eta) < 1e-14 {
                    return Ok((0.0, linalg::ZERO));
                }
                let y = duality::legendre_inverse_at(norm, eta)?;
                (linalg::dot(eta, y), linalg::scale(y, 2.0))
            }
        })
    }
}

/// A P1 simplex: `du = Σ coef[k] · u[nodes[k]]`.
#[derive(Debug, Clone)]
struct Element {
    nodes: [usize; 3],
    coef: [Vector; 3],
    weight: f64,
    dual: LocalDual,
}

impl Element {
    fn differential(&self, u: &[f64]) -> Vector {
        let mut du = linalg::ZERO;
        for k in 0..3 {
            du = linalg::axpy(du, u[self.nodes[k]], self.coef[k]);
        }
        du
    }
}

/// The discrete energy `E(u) = Σ_T σ_T F*²(x_T, du_T)|T| / Σ_i σ_i u_i² Δ`.
///
/// Differentials are piecewise linear on triangles; each grid cell is covered
/// by both diagonal splits at half weight so the discretization has no
/// preferred diagonal. Metric and density are taken at triangle centroids.
#[derive(Debug, Clone)]
pub struct EnergyFunctional {
    mesh: Mesh,
    elements: Vec<Element>,
    mass: Vec<f64>,
    volume: f64,
}

/// Cell corners as offsets, and the four triangles over them.
const CORNERS: [[usize; 2]; 4] = [[0, 0], [1, 0], [0, 1], [1, 1]];
const TRIANGLES: [[usize; 3]; 4] = [[0, 1, 3], [0, 3, 2], [0, 1, 2], [1, 3, 2]];

impl EnergyFunctional {
    pub fn new(m: &MetricModel, mesh: &Mesh, sigma: &DensityField) -> Result<Self> {
        if sigma.len() != mesh.len() {
            return Err(FinslerError::InvalidMesh("density does not match mesh".into()));
        }
        if m.dim() != mesh.dim() {
            return Err(FinslerError::InvalidMesh("metric and mesh dimensions differ".into()));
        }
        let chart = mesh.chart();
        let s = sigma.values();
        let shared = m.is_x_homogeneous().then(|| LocalDual::new(m.norm_at(mesh.coords(0))));
        let dual_at = |x: Vector| shared.clone().unwrap_or_else(|| LocalDual::new(m.norm_at(chart.canonicalize(x))));
        let mut elements = Vec::with_capacity(4 * mesh.len());
        if mesh.dim() == 1 {
            let h = mesh.spacing(0);
            for i in 0..mesh.len() {
                let j = mesh.neighbor(i, 0, 1);
                let x = mesh.coords(i)[0] + 0.5 * h;
                elements.push(Element {
                    nodes: [i, j, j],
                    coef: [[-1.0 / h, 0.0], [1.0 / h, 0.0], linalg::ZERO],
                    weight: 0.5 * (s[i] + s[j]) * h,
                    dual: dual_at([x, 0.0]),
                });
            }
        } else {
            let h = [mesh.spacing(0), mesh.spacing(1)];
            let area = 0.25 * h[0] * h[1];
            for i in 0..mesh.len() {
                let origin = mesh.coords(i);
                let corner: Vec<usize> =
                    CORNERS.iter().map(|c| mesh.offset(i, [c[0] as isize, c[1] as isize])).collect();
                for tri in TRIANGLES {
                    let nodes = [corner[tri[0]], corner[tri[1]], corner[tri[2]]];
                    let offs = tri.map(|k| [CORNERS[k][0] as f64, CORNERS[k][1] as f64]);
                    let coef = p1_coefficients(offs, h);
                    let centroid = [
                        origin[0] + h[0] * (offs[0][0] + offs[1][0] + offs[2][0]) / 3.0,
                        origin[1] + h[1] * (offs[0][1] + offs[1][1] + offs[2][1]) / 3.0,
                    ];
                    let sigma_t = (s[nodes[0]] + s[nodes[1]] + s[nodes[2]]) / 3.0;
                    elements.push(Element { nodes, coef, weight: sigma_t * area, dual: dual_at(centroid) });
                }
            }
        }
        let cell = mesh.cell_volume();
        let mass: Vec<f64> = s.iter().map(|v| v * cell).collect();
        let volume = mass.iter().sum();
        Ok(Self { mesh: *mesh, elements, mass, volume })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Lumped mass `σ_i Δ`.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// `Σ σ_i u_i² Δ`.
    pub fn mass_norm_sq(&self, u: &[f64]) -> f64 {
        self.mass.iter().zip(u).map(|(m, v)| m * v * v).sum()
    }

    /// `∫ F*²(du) dμ`.
    pub fn numerator(&self, u: &[f64]) -> f64 {
        self.elements.iter().map(|e| e.weight * e.dual.sq(e.differential(u))).sum()
    }

    /// The numerator and its gradient with respect to nodal values.
    pub fn numerator_grad(&self, u: &[f64], grad: &mut [f64]) -> Result<f64> {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for e in &self.elements {
            let (v, dv) = e.dual.sq_grad(e.differential(u))?;
            total += e.weight * v;
            for k in 0..3 {
                grad[e.nodes[k]] += e.weight * linalg::dot(dv, e.coef[k]);
            }
        }
        Ok(total)
    }

    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        let d = self.mass_norm_sq(u);
        if !(d > 0.0) {
            return Err(FinslerError::UndefinedEnergy);
        }
        Ok(self.numerator(u) / d)
    }
}

/// Coefficients of the constant gradient of the linear interpolant on a
/// triangle with vertex offsets `p` (in cells) and spacings `h`.
fn p1_coefficients(p: [[f64; 2]; 3], h: [f64; 2]) -> [Vector; 3] {
    let x = p.map(|q| [q[0] * h[0], q[1] * h[1]]);
    let e1 = linalg::sub(x[1], x[0]);
    let e2 = linalg::sub(x[2], x[0]);
    let inv = linalg::inverse(2, &[e1, e2]).expect("nondegenerate triangle");
    // du · e_k = u_k − u_0, so du = J⁻¹ (u_1 − u_0, u_2 − u_0) with rows e_k.
    let c1 = [inv[0][0], inv[1][0]];
    let c2 = [inv[0][1], inv[1][1]];
    [linalg::neg(linalg::add(c1, c2)), c1, c2]
}

/// `E(u) = ∫F*²(du)dμ / ∫u²dμ`.
pub fn energy(u: &ScalarField, m: &MetricModel, sigma: &DensityField) -> Result<f64> {
    EnergyFunctional::new(m, u.mesh(), sigma)?.energy(u.values())
}
