//! Fixed-step classical Runge–Kutta integration of `γ̈ⁱ + 2Gⁱ(γ̇) = 0`.

use serde::{Deserialize, Serialize};

use super::{ChartPoint, MetricModel, Tangent};
use crate::error::{FinslerError, Result};
use crate::linalg::{self, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSample {
    pub t: f64,
    pub point: ChartPoint,
    pub velocity: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub samples: Vec<GeodesicSample>,
    pub step: f64,
    pub order: u32,
}

impl GeodesicPath {
    pub fn last(&self) -> &GeodesicSample {
        self.samples.last().expect("a path always holds its initial sample")
    }

    /// Largest relative deviation of `F(γ̇)` from its initial value.
    pub fn speed_drift(&self, m: &MetricModel) -> f64 {
        let speed = |s: &GeodesicSample| m.eval(&s.point, s.velocity);
        let v0 = speed(&self.samples[0]);
        self.samples.iter().map(|s| (speed(s) - v0).abs() / v0).fold(0.0, f64::max)
    }
}

/// Integrates the geodesic with initial data `t0` over `[0, duration]` using
/// `steps` RK4 steps. A negative duration integrates backwards in time.
pub fn integrate(m: &MetricModel, t0: &Tangent, duration: f64, steps: usize) -> Result<GeodesicPath> {
    if steps < 16 {
        return Err(FinslerError::InvalidArgument(format!("need at least 16 steps, got {steps}")));
    }
    if linalg::norm(t0.y) == 0.0 {
        return Err(FinslerError::DegenerateDirection);
    }
    let h = duration / steps as f64;
    let chart = m.chart();
    let accel = |x: Vector, v: Vector| -> Result<Vector> {
        let g = m.spray(&Tangent::new(ChartPoint::new(x), v))?;
        Ok(linalg::scale(g, -2.0))
    };
    let mut x = chart.canonicalize(t0.base.coords);
    let mut v = t0.y;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(GeodesicSample { t: 0.0, point: ChartPoint::new(x), velocity: v });
    for n in 0..steps {
        let t = (n + 1) as f64 * h;
        let diverged = |_| FinslerError::IntegrationDiverged { t };
        let k1x = v;
        let k1v = accel(x, v).map_err(diverged)?;
        let k2x = linalg::axpy(v, 0.5 * h, k1v);
        let k2v = accel(linalg::axpy(x, 0.5 * h, k1x), k2x).map_err(diverged)?;
        let k3x = linalg::axpy(v, 0.5 * h, k2v);
        let k3v = accel(linalg::axpy(x, 0.5 * h, k2x), k3x).map_err(diverged)?;
        let k4x = linalg::axpy(v, h, k3v);
        let k4v = accel(linalg::axpy(x, h, k3x), k4x).map_err(diverged)?;
        let sixth = h / 6.0;
        for i in 0..2 {
            x[i] += sixth * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            v[i] += sixth * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        if !(linalg::is_finite(x) && linalg::is_finite(v)) {
            return Err(FinslerError::IntegrationDiverged { t });
        }
        if !chart.contains(x) {
            return Err(FinslerError::ChartExit { t });
        }
        x = chart.canonicalize(x);
        samples.push(GeodesicSample { t, point: ChartPoint::new(x), velocity: v });
    }
    Ok(GeodesicPath { samples, step: h, order: 4 })
}
