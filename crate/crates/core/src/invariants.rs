//! Reversibility `λ_F` and uniformity constant `Λ_F`.
//!
//! Both suprema are taken over mesh nodes and a grid of unit directions, then
//! polished by golden-section search at the best node. `x`-independent
//! metrics are evaluated on a single fibre.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::metric::{MetricModel, TangentNorm};
use crate::quad;
use crate::spectral::Mesh;

/// Direction samples for `λ_F`.
pub const REVERSIBILITY_DIRECTIONS: usize = 512;
/// Samples of `X` (and of `Y`) for `Λ_F`.
pub const UNIFORMITY_DIRECTIONS: usize = 128;

const ANGLE_TOL: f64 = 1e-12 * TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversibilityWitness {
    pub point: Vector,
    /// Angle of `y` in the chart frame.
    pub direction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityWitness {
    pub point: Vector,
    /// Angles of the maximizing `X`, the minimizing `Z` and the test vector `Y`.
    pub x: f64,
    pub z: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub lambda_f: f64,
    pub uniformity: f64,
    pub lambda_witness: ReversibilityWitness,
    pub uniformity_witness: UniformityWitness,
}

impl InvariantReport {
    /// `Λ_F ≥ λ_F² ≥ 1` up to a relative slack.
    pub fn is_consistent(&self, slack: f64) -> bool {
        let l2 = self.lambda_f * self.lambda_f;
        self.uniformity >= l2 * (1.0 - slack) && l2 >= 1.0 - slack
    }
}

pub fn invariants(m: &MetricModel, mesh: &Mesh) -> Result<InvariantReport> {
    let (lambda_f, lambda_witness) = reversibility_with_witness(m, mesh)?;
    let (uniformity, uniformity_witness) = uniformity_with_witness(m, mesh)?;
    Ok(InvariantReport { lambda_f, uniformity, lambda_witness, uniformity_witness })
}

fn nodes(m: &MetricModel, mesh: &Mesh) -> Result<Vec<Vector>> {
    if m.dim() != mesh.dim() {
        return Err(FinslerError::InvalidMesh("metric and mesh dimensions differ".into()));
    }
    Ok(if m.is_x_homogeneous() { vec![mesh.coords(0)] } else { (0..mesh.len()).map(|i| mesh.coords(i)).collect() })
}

/// Picks the entry with the largest value; earlier entries win ties.
fn best_by<T: Send>(items: Vec<(f64, T)>) -> (f64, T) {
    items.into_iter().reduce(|a, b| if b.0 > a.0 { b } else { a }).expect("nonempty")
}

/// `λ_F = sup_{F(y)=1} F(−y)`.
pub fn reversibility(m: &MetricModel, mesh: &Mesh) -> Result<f64> {
    Ok(reversibility_with_witness(m, mesh)?.0)
}

pub fn reversibility_with_witness(m: &MetricModel, mesh: &Mesh) -> Result<(f64, ReversibilityWitness)> {
    let pts = nodes(m, mesh)?;
    let ratio = |norm: &TangentNorm, th: f64| {
        let y = linalg::polar(th);
        norm.eval(linalg::neg(y)) / norm.eval(y)
    };
    if m.dim() == 1 {
        let per: Vec<(f64, (Vector, f64))> = pts
            .iter()
            .map(|&x| {
                let n = m.norm_at(x);
                let (up, down) = (n.eval([1.0, 0.0]), n.eval([-1.0, 0.0]));
                if down >= up {
                    (down / up, (x, 0.0))
                } else {
                    (up / down, (x, std::f64::consts::PI))
                }
            })
            .collect();
        let (v, (point, direction)) = best_by(per);
        return Ok((v, ReversibilityWitness { point, direction }));
    }
    let dth = TAU / REVERSIBILITY_DIRECTIONS as f64;
    let per: Vec<(f64, (Vector, usize))> = pts
        .par_iter()
        .map(|&x| {
            let n = m.norm_at(x);
            let (k, v) = (0..REVERSIBILITY_DIRECTIONS)
                .map(|k| (k, ratio(&n, k as f64 * dth)))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            (v, (x, k))
        })
        .collect();
    let (_, (point, k)) = best_by(per);
    let n = m.norm_at(point);
    let c = k as f64 * dth;
    let (direction, v) = quad::golden_max(|t| ratio(&n, t), c - dth, c + dth, ANGLE_TOL);
    Ok((v, ReversibilityWitness { point, direction: direction.rem_euclid(TAU) }))
}

/// `Λ_F = sup g_X(Y,Y) / g_Z(Y,Y)` over unit `X, Y, Z` in one fibre.
pub fn uniformity(m: &MetricModel, mesh: &Mesh) -> Result<f64> {
    Ok(uniformity_with_witness(m, mesh)?.0)
}

pub fn uniformity_with_witness(m: &MetricModel, mesh: &Mesh) -> Result<(f64, UniformityWitness)> {
    let pts = nodes(m, mesh)?;
    if m.dim() == 1 {
        let per = pts
            .iter()
            .map(|&x| {
                let n = m.norm_at(x);
                let gp = n.fundamental_tensor([1.0, 0.0])?[0][0];
                let gm = n.fundamental_tensor([-1.0, 0.0])?[0][0];
                let (r, wx, wz) = if gp >= gm { (gp / gm, 0.0, std::f64::consts::PI) } else { (gm / gp, std::f64::consts::PI, 0.0) };
                Ok((r, UniformityWitness { point: x, x: wx, z: wz, y: 0.0 }))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(best_by(per));
    }
    let nd = UNIFORMITY_DIRECTIONS;
    let dth = TAU / nd as f64;
    let per = pts
        .par_iter()
        .map(|&x| {
            let n = m.norm_at(x);
            let g = (0..nd).map(|k| n.fundamental_tensor(linalg::polar(k as f64 * dth))).collect::<Result<Vec<_>>>()?;
            let mut best = (f64::NEG_INFINITY, 0usize);
            for ky in 0..nd {
                let r = grid_ratio(&g, linalg::polar(ky as f64 * dth));
                if r > best.0 {
                    best = (r, ky);
                }
            }
            Ok((best.0, (x, best.1)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, (point, ky)) = best_by(per);
    let n = m.norm_at(point);
    let extremes = |th_y: f64| -> (f64, f64, f64) {
        let y = linalg::polar(th_y);
        let gxy = |th_x: f64| n.fundamental_tensor(linalg::polar(th_x)).map(|g| linalg::quad_form(&g, y)).unwrap_or(f64::NAN);
        let (ax, max) = quad::periodic_max(gxy, nd, ANGLE_TOL);
        let (az, neg_min) = quad::periodic_max(|t| -gxy(t), nd, ANGLE_TOL);
        (max / -neg_min, ax, az)
    };
    let c = ky as f64 * dth;
    let (th_y, value) = quad::golden_max(|t| extremes(t).0, c - dth, c + dth, 1e-9 * TAU);
    let (_, ax, az) = extremes(th_y);
    // The polish can only improve on the grid value; guard against a worse local answer.
    let grid = extremes(c);
    let (value, th_y, ax, az) = if grid.0 > value { (grid.0, c, grid.1, grid.2) } else { (value, th_y, ax, az) };
    Ok((value, UniformityWitness { point, x: ax, z: az, y: th_y.rem_euclid(TAU) }))
}

fn grid_ratio(g: &[Matrix], y: Vector) -> f64 {
    let (lo, hi) = g.iter().map(|g| linalg::quad_form(g, y)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi / lo
}
