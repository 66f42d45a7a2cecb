//! Dual norm, Legendre transform and gradients.
//!
//! `F*(η) = sup η(y)/F(y)` is computed by sampling the unit circle of
//! directions and polishing the best sample; in one dimension the supremum
//! over the two half-lines is taken directly. The closed forms on
//! [`TangentNorm`] are used elsewhere as fast paths and serve as oracles here.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::linalg::{self, Vector};
use crate::metric::{ChartPoint, MetricModel, Tangent, TangentNorm};
use crate::quad;
use crate::spectral::{Mesh, ScalarField};

/// Direction samples for the dual-norm supremum in two dimensions.
pub const DUAL_DIRECTIONS: usize = 256;
const MAX_NEWTON: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covector {
    pub base: ChartPoint,
    pub eta: Vector,
}

impl Covector {
    pub fn new(base: ChartPoint, eta: Vector) -> Self {
        Self { base, eta }
    }
}

/// `F*(η)` at the covector's base point.
pub fn dual_norm(m: &MetricModel, c: &Covector) -> f64 {
    dual_norm_at(&m.norm_at(c.base.coords), c.eta)
}

/// `F*(η)` for a single tangent-space norm, together with the unit direction
/// `θ` of a maximizer (meaningless when `η = 0`).
pub fn dual_sup(norm: &TangentNorm, eta: Vector) -> (f64, f64) {
    if eta == linalg::ZERO {
        return (0.0, 0.0);
    }
    if norm.dim == 1 {
        let up = eta[0] / norm.eval([1.0, 0.0]);
        let down = -eta[0] / norm.eval([-1.0, 0.0]);
        return if up >= down { (up, 0.0) } else { (down, std::f64::consts::PI) };
    }
    let ratio = |theta: f64| {
        let y = linalg::polar(theta);
        linalg::dot(eta, y) / norm.eval(y)
    };
    let (theta, value) = quad::periodic_max(ratio, DUAL_DIRECTIONS, 1e-12 * TAU);
    (value, theta)
}

pub fn dual_norm_at(norm: &TangentNorm, eta: Vector) -> f64 {
    dual_sup(norm, eta).0
}

/// `𝔏(X) = g_X(X, ·)`, and `0` at `X = 0`.
pub fn legendre(m: &MetricModel, t: &Tangent) -> Result<Covector> {
    let eta = legendre_at(&m.norm_at(t.base.coords), t.y)?;
    Ok(Covector::new(t.base, eta))
}

pub fn legendre_at(norm: &TangentNorm, y: Vector) -> Result<Vector> {
    if y == linalg::ZERO {
        return Ok(linalg::ZERO);
    }
    let g = norm.fundamental_tensor(y)?;
    Ok(linalg::mat_vec(&g, y))
}

/// `𝔏⁻¹(η)` by damped Newton iteration on `y ↦ g_y(y, ·) − η`.
pub fn legendre_inverse(m: &MetricModel, c: &Covector) -> Result<Vector> {
    legendre_inverse_at(&m.norm_at(c.base.coords), c.eta)
}

pub fn legendre_inverse_at(norm: &TangentNorm, eta: Vector) -> Result<Vector> {
    if eta == linalg::ZERO {
        return Ok(linalg::ZERO);
    }
    let dim = norm.dim;
    if dim == 1 {
        let f = if eta[0] > 0.0 { norm.eval([1.0, 0.0]) } else { norm.eval([-1.0, 0.0]) };
        return Ok([eta[0] / (f * f), 0.0]);
    }
    // 𝔏⁻¹ is positively homogeneous: solve for η/|η| and scale back.
    let scale = linalg::norm(eta);
    let eta = linalg::scale(eta, 1.0 / scale);
    // The maximizing direction of the dual supremum is the direction of
    // 𝔏⁻¹(η); scale it so that F(y) = F*(η).
    let (dual, theta) = dual_sup(norm, eta);
    let dir = linalg::polar(theta);
    let mut y = linalg::scale(dir, dual / norm.eval(dir));
    let residual = |y: Vector| -> Result<(Vector, f64)> {
        let r = linalg::sub(legendre_at(norm, y)?, eta);
        Ok((r, linalg::norm(r)))
    };
    let (mut r, mut rn) = residual(y)?;
    for _ in 0..MAX_NEWTON {
        if rn <= 1e-13 {
            return Ok(linalg::scale(y, scale));
        }
        let g = norm.fundamental_tensor(y)?;
        let ginv = linalg::inverse(dim, &g).ok_or(FinslerError::DegenerateMetric([f64::NAN; 2]))?;
        let step = linalg::mat_vec(&ginv, r);
        let mut lambda = 1.0;
        loop {
            let trial = linalg::axpy(y, -lambda, step);
            if linalg::norm(trial) > 0.0 {
                let (tr, trn) = residual(trial)?;
                if trn < rn || lambda < 1e-6 {
                    y = trial;
                    r = tr;
                    rn = trn;
                    break;
                }
            }
            lambda *= 0.5;
        }
    }
    // The finite-difference tensor limits the attainable residual.
    if rn <= 1e-9 {
        return Ok(linalg::scale(y, scale));
    }
    Err(FinslerError::InversionFailure { iterations: MAX_NEWTON, residual: rn })
}

/// `∇f = 𝔏⁻¹(df)` at every mesh node, with `df` by central differences.
pub fn gradient_field(m: &MetricModel, f: &ScalarField) -> Result<Vec<Vector>> {
    let mesh = f.mesh();
    (0..mesh.len())
        .map(|i| {
            let df = central_differential(mesh, f.values(), i);
            if df == linalg::ZERO {
                return Ok(linalg::ZERO);
            }
            legendre_inverse_at(&m.norm_at(mesh.coords(i)), df)
        })
        .collect()
}

/// Central-difference differential of nodal values at node `i`.
pub fn central_differential(mesh: &Mesh, values: &[f64], i: usize) -> Vector {
    let mut df = linalg::ZERO;
    for (axis, d) in df.iter_mut().enumerate().take(mesh.dim()) {
        let fwd = values[mesh.neighbor(i, axis, 1)];
        let bwd = values[mesh.neighbor(i, axis, -1)];
        *d = (fwd - bwd) / (2.0 * mesh.spacing(axis));
    }
    df
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Chart, Family};

    fn circle_randers() -> MetricModel {
        MetricModel::randers(Chart::circle(TAU).unwrap(), [[4.0, 0.0], [0.0, 0.0]], [1.0, 0.0]).unwrap()
    }

    #[test]
    fn euclidean_is_self_dual() {
        let m = MetricModel::euclidean(Chart::torus(TAU, TAU).unwrap()).unwrap();
        let c = Covector::new(ChartPoint::new([0.0, 0.0]), [3.0, -4.0]);
        assert!((dual_norm(&m, &c) - 5.0).abs() < 1e-12);
        let y = legendre_inverse(&m, &c).unwrap();
        assert!((y[0] - 3.0).abs() < 1e-10 && (y[1] + 4.0).abs() < 1e-10);
        let l = legendre(&m, &Tangent::new(c.base, [1.5, 2.5])).unwrap();
        assert_eq!(l.eta, [1.5, 2.5]);
    }

    #[test]
    fn one_dimensional_randers_dual() {
        let m = circle_randers();
        let p = ChartPoint::new([0.0, 0.0]);
        assert!((dual_norm(&m, &Covector::new(p, [1.0, 0.0])) - 1.0 / 3.0).abs() < 1e-15);
        assert!((dual_norm(&m, &Covector::new(p, [-1.0, 0.0])) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_randers_legendre() {
        // F² = 9y² for y > 0 so g₁₁ = 9.
        let m = circle_randers();
        let l = legendre(&m, &Tangent::new(ChartPoint::new([0.0, 0.0]), [1.0, 0.0])).unwrap();
        assert!((l.eta[0] - 9.0).abs() < 1e-8);
        let back = legendre_inverse(&m, &l).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_maps_to_zero() {
        let m = MetricModel::randers(Chart::torus(TAU, TAU).unwrap(), [[1.0, 0.0], [0.0, 1.0]], [0.3, 0.2]).unwrap();
        let p = ChartPoint::new([0.0, 0.0]);
        assert_eq!(dual_norm(&m, &Covector::new(p, [0.0, 0.0])), 0.0);
        assert_eq!(legendre(&m, &Tangent::new(p, [0.0, 0.0])).unwrap().eta, [0.0, 0.0]);
        assert_eq!(legendre_inverse(&m, &Covector::new(p, [0.0, 0.0])).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn sampled_supremum_matches_randers_closed_form() {
        let m = MetricModel::randers(Chart::torus(TAU, TAU).unwrap(), [[1.3, 0.2], [0.2, 0.7]], [0.3, -0.25]).unwrap();
        let norm = m.norm_at([0.0, 0.0]);
        for k in 0..32 {
            let eta = linalg::scale(linalg::polar(0.3 + k as f64 * 0.2), 0.5 + k as f64 * 0.1);
            let exact = norm.dual_closed_form(eta).unwrap();
            let sampled = dual_norm_at(&norm, eta);
            assert!((sampled - exact).abs() <= 1e-10 * exact, "{sampled} vs {exact}");
        }
    }

    #[test]
    fn closed_form_gradient_is_twice_legendre_inverse() {
        let m = MetricModel::randers(Chart::torus(TAU, TAU).unwrap(), [[1.0, 0.1], [0.1, 0.9]], [0.2, 0.4]).unwrap();
        let norm = m.norm_at([0.0, 0.0]);
        for k in 0..12 {
            let eta = linalg::scale(linalg::polar(k as f64 * 0.5), 1.7);
            let (_, grad) = norm.dual_sq_grad_closed_form(eta).unwrap();
            let y = legendre_inverse_at(&norm, eta).unwrap();
            assert!((grad[0] - 2.0 * y[0]).abs() < 1e-8 && (grad[1] - 2.0 * y[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn minkowski_round_trip() {
        let m = MetricModel::new(
            Chart::torus(TAU, TAU).unwrap(),
            Family::Minkowski { a: [[1.0, 0.2], [0.2, 1.4]], quartic: 0.5, drift: [0.2, 0.1] },
        )
        .unwrap();
        let p = ChartPoint::new([0.0, 0.0]);
        for k in 0..12 {
            let eta = linalg::polar(k as f64 * 0.52);
            let c = Covector::new(p, eta);
            let y = legendre_inverse(&m, &c).unwrap();
            let back = legendre(&m, &Tangent::new(p, y)).unwrap();
            assert!(linalg::norm(linalg::sub(back.eta, eta)) < 1e-9);
            assert!((m.eval(&p, y) - dual_norm(&m, &c)).abs() < 1e-8);
        }
    }
}
