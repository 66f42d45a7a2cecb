//! Tabulated dual norms for Minkowski norms without a closed-form dual.
//!
//! `F*` is positively homogeneous, so `F*(η) = |η| φ(θ)` with `θ = arg η`.
//! `φ` and `φ'` are computed once on a fine angular grid and interpolated by
//! periodic cubic Hermite splines; the interpolant is C¹ and its gradient is
//! differentiated exactly, so energies and their gradients stay consistent.

use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::duality;
use crate::error::Result;
use crate::linalg::{self, Vector};
use crate::metric::{NormKind, TangentNorm};

/// Angular nodes of a table.
pub(crate) const TABLE_SIZE: usize = 4096;

#[derive(Debug)]
pub(crate) struct DualTable {
    phi: Vec<f64>,
    dphi: Vec<f64>,
}

type Key = [u64; 7];

fn key(norm: &TangentNorm) -> Option<Key> {
    match norm.kind {
        NormKind::Quartic { a, quartic, drift } => Some(
            [a[0][0], a[0][1], a[1][0], a[1][1], quartic, drift[0], drift[1]].map(f64::to_bits),
        ),
        _ => None,
    }
}

fn cache() -> &'static Mutex<Vec<(Key, Arc<DualTable>)>> {
    static CACHE: OnceLock<Mutex<Vec<(Key, Arc<DualTable>)>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

/// Table for a quartic norm, built on first use and shared afterwards.
pub(crate) fn shared_table(norm: &TangentNorm) -> Option<Arc<DualTable>> {
    let k = key(norm)?;
    if let Some((_, t)) = cache().lock().ok()?.iter().find(|(kk, _)| *kk == k) {
        return Some(t.clone());
    }
    let table = Arc::new(DualTable::build(norm).ok()?);
    let mut guard = cache().lock().ok()?;
    if let Some((_, t)) = guard.iter().find(|(kk, _)| *kk == k) {
        return Some(t.clone());
    }
    guard.push((k, table.clone()));
    Some(table)
}

impl DualTable {
    pub(crate) fn build(norm: &TangentNorm) -> Result<Self> {
        let dth = TAU / TABLE_SIZE as f64;
        let rows = (0..TABLE_SIZE)
            .into_par_iter()
            .map(|k| {
                let th = k as f64 * dth;
                let eta = linalg::polar(th);
                let y = duality::legendre_inverse_at(norm, eta)?;
                // η·y/F(y) is stationary in the direction of y, so errors in
                // the Newton solve enter only to second order.
                let phi = linalg::dot(eta, y) / norm.eval(y);
                let dphi = linalg::dot(y, [-th.sin(), th.cos()]) / phi;
                Ok((phi, dphi))
            })
            .collect::<Result<Vec<_>>>()?;
        let (phi, dphi) = rows.into_iter().unzip();
        Ok(Self { phi, dphi })
    }

    /// `(φ(θ), φ'(θ))`.
    fn profile(&self, th: f64) -> (f64, f64) {
        let n = TABLE_SIZE;
        let dth = TAU / n as f64;
        let u = th.rem_euclid(TAU) / dth;
        let k = (u.floor() as usize).min(n - 1);
        let s = u - k as f64;
        let j = (k + 1) % n;
        let (p0, p1) = (self.phi[k], self.phi[j]);
        let (m0, m1) = (self.dphi[k] * dth, self.dphi[j] * dth);
        let (s2, s3) = (s * s, s * s * s);
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * m1;
        let ds = (6.0 * s2 - 6.0 * s) * p0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * p1
            + (3.0 * s2 - 2.0 * s) * m1;
        (value, ds / dth)
    }

    pub(crate) fn value(&self, eta: Vector) -> f64 {
        let r = linalg::norm(eta);
        if r == 0.0 {
            return 0.0;
        }
        r * self.profile(eta[1].atan2(eta[0])).0
    }

    /// `(F*²(η), ∇F*²(η))`.
    pub(crate) fn sq_grad(&self, eta: Vector) -> (f64, Vector) {
        let r = linalg::norm(eta);
        if r == 0.0 {
            return (0.0, linalg::ZERO);
        }
        let th = eta[1].atan2(eta[0]);
        let (phi, dphi) = self.profile(th);
        let radial = linalg::scale(eta, 1.0 / r);
        let angular = [-radial[1], radial[0]];
        let g = linalg::axpy(linalg::scale(radial, 2.0 * r * phi * phi), 2.0 * r * phi * dphi, angular);
        (r * r * phi * phi, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Chart, Family, MetricModel};

    fn quartic() -> TangentNorm {
        let chart = Chart::torus(TAU, TAU).unwrap();
        let m = MetricModel::new(
            chart,
            Family::Minkowski { a: [[1.0, 0.2], [0.2, 1.5]], quartic: 0.5, drift: [0.1, 0.05] },
        )
        .unwrap();
        m.norm_at([0.0, 0.0])
    }

    #[test]
    fn table_matches_sampled_dual() {
        let norm = quartic();
        let t = DualTable::build(&norm).unwrap();
        for k in 0..37 {
            let eta = linalg::scale(linalg::polar(0.17 * k as f64 + 0.05), 0.3 + 0.1 * k as f64);
            let exact = duality::dual_norm_at(&norm, eta);
            assert!((t.value(eta) - exact).abs() < 1e-9 * exact, "k = {k}");
        }
    }

    #[test]
    fn gradient_is_consistent_with_value() {
        let t = DualTable::build(&quartic()).unwrap();
        let eta = [0.7, -0.4];
        let (_, g) = t.sq_grad(eta);
        let h = 1e-6;
        for i in 0..2 {
            let mut p = eta;
            let mut q = eta;
            p[i] += h;
            q[i] -= h;
            let fd = (t.sq_grad(p).0 - t.sq_grad(q).0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7, "component {i}: {fd} vs {}", g[i]);
        }
    }
}
