//! Fundamental tensor, geodesic spray and Ricci curvature by finite differences.

use serde::{Deserialize, Serialize};

use super::{MetricModel, Tangent};
use crate::diff;
use crate::error::{FinslerError, Result};
use crate::linalg::{self, Matrix, Vector};

/// `g_ij(x, y)` at a fixed tangent vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalTensor {
    pub dim: usize,
    pub g: Matrix,
}

impl FundamentalTensor {
    /// `g_y(u, v)`.
    pub fn apply(&self, u: Vector, v: Vector) -> f64 {
        linalg::dot(u, linalg::mat_vec(&self.g, v))
    }

    pub fn det(&self) -> f64 {
        linalg::det(self.dim, &self.g)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::sym_eigenvalues(self.dim, &self.g)[0]
    }

    pub fn inverse(&self) -> Option<Matrix> {
        linalg::inverse(self.dim, &self.g)
    }
}

/// Relative `x`-step for differencing the spray inputs.
const SPRAY_X_STEP: f64 = 1e-3;
/// Relative `y`-step for the mixed `x`–`y` derivative inside the spray.
const SPRAY_Y_STEP: f64 = 2e-3;
/// Outer steps used when differencing the spray itself.
const RICCI_X_STEP: f64 = 1e-2;
const RICCI_Y_STEP: f64 = 2e-2;

impl MetricModel {
    pub fn fundamental_tensor(&self, t: &Tangent) -> Result<FundamentalTensor> {
        let g = self.norm_at(t.base.coords).fundamental_tensor(t.y)?;
        Ok(FundamentalTensor { dim: self.dim(), g })
    }

    /// Geodesic coefficients `Gⁱ(x, y)`, evaluated through the equivalent form
    /// `Gⁱ = ¼ gⁱˡ ([F²]_{xᵏyˡ} yᵏ − [F²]_{xˡ})`.
    pub fn spray(&self, t: &Tangent) -> Result<Vector> {
        self.spray_at(t.base.coords, t.y)
    }

    fn spray_at(&self, x: Vector, y: Vector) -> Result<Vector> {
        let ny = linalg::norm(y);
        if !(ny > 0.0) {
            return Err(FinslerError::DegenerateDirection);
        }
        if self.is_x_homogeneous() {
            return Ok(linalg::ZERO);
        }
        let dim = self.dim();
        let g = self.norm_at(x).fundamental_tensor(y)?;
        let ginv = linalg::inverse(dim, &g).ok_or(FinslerError::DegenerateMetric(x))?;
        let hx = SPRAY_X_STEP * self.chart().scale();
        let hy = SPRAY_Y_STEP * ny;
        let f2 = |x: Vector, y: Vector| self.norm_at(x).eval_sq(y);
        let mut rhs = linalg::ZERO;
        for l in 0..dim {
            let el = linalg::unit(dim, l);
            let dx = diff::first(|t| f2(linalg::axpy(x, t, el), y), hx);
            let mut contraction = 0.0;
            for k in 0..dim {
                let ek = linalg::unit(dim, k);
                let m = diff::mixed(|s, t| f2(linalg::axpy(x, s, ek), linalg::axpy(y, t, el)), hx, hy);
                contraction += m * y[k];
            }
            rhs[l] = contraction - dx;
        }
        let out = linalg::scale(linalg::mat_vec(&ginv, rhs), 0.25);
        if !linalg::is_finite(out) {
            return Err(FinslerError::DegenerateMetric(x));
        }
        Ok(out)
    }

    /// `Ric(y) = Σᵢ Rⁱᵢ(y)` with
    /// `Rⁱₖ = 2∂ₖGⁱ − yʲ ∂²Gⁱ/∂xʲ∂yᵏ + 2Gʲ ∂²Gⁱ/∂yʲ∂yᵏ − ∂Gⁱ/∂yʲ ∂Gʲ/∂yᵏ`.
    pub fn ricci(&self, t: &Tangent) -> Result<f64> {
        let (x, y) = (t.base.coords, t.y);
        let ny = linalg::norm(y);
        if !(ny > 0.0) {
            return Err(FinslerError::DegenerateDirection);
        }
        if self.is_x_homogeneous() {
            return Ok(0.0);
        }
        let dim = self.dim();
        let hx = RICCI_X_STEP * self.chart().scale();
        let hy = RICCI_Y_STEP * ny;
        if y[0] + hy == y[0] && y[1] + hy == y[1] {
            return Err(FinslerError::DifferentiationFailure("y step underflow".into()));
        }
        // Differencing closures cannot propagate errors; collect the first one.
        let failure = std::cell::Cell::new(None);
        let spray = |x: Vector, y: Vector| -> Vector {
            match self.spray_at(x, y) {
                Ok(v) => v,
                Err(e) => {
                    failure.set(Some(e));
                    [f64::NAN; 2]
                }
            }
        };
        let g0 = spray(x, y);
        let mut d_x = [linalg::ZERO; 2];
        let mut d_y = [linalg::ZERO; 2];
        let mut d_yy = [[linalg::ZERO; 2]; 2];
        let mut d_xy = [[linalg::ZERO; 2]; 2];
        for k in 0..dim {
            let ek = linalg::unit(dim, k);
            d_x[k] = diff::first(|t| spray(linalg::axpy(x, t, ek), y), hx);
            d_y[k] = diff::first(|t| spray(x, linalg::axpy(y, t, ek)), hy);
            d_yy[k][k] = diff::second(|t| spray(x, linalg::axpy(y, t, ek)), hy);
            for j in 0..dim {
                let ej = linalg::unit(dim, j);
                d_xy[j][k] = diff::mixed(|s, t| spray(linalg::axpy(x, s, ej), linalg::axpy(y, t, ek)), hx, hy);
                if j < k {
                    let v = diff::mixed(|s, t| spray(x, linalg::axpy(linalg::axpy(y, s, ej), t, ek)), hy, hy);
                    d_yy[j][k] = v;
                    d_yy[k][j] = v;
                }
            }
        }
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let mut ric = 0.0;
        for i in 0..dim {
            let k = i;
            let mut r = 2.0 * d_x[k][i];
            for j in 0..dim {
                r -= y[j] * d_xy[j][k][i];
                r += 2.0 * g0[j] * d_yy[j][k][i];
                r -= d_y[j][i] * d_y[k][j];
            }
            ric += r;
        }
        if !ric.is_finite() {
            return Err(FinslerError::DifferentiationFailure(format!("non-finite Ricci at {x:?}")));
        }
        Ok(ric)
    }
}
