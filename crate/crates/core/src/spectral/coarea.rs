use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::linalg;
use crate::measures::DensityField;
use crate::metric::MetricModel;

use super::cut::{extract_interface, geometry, interpolate, interpolate_grad, local_dual, to_chart};
use super::ScalarField;

/// Default number of quantile slabs for the `t`-integral.
pub const DEFAULT_SLABS: usize = 256;

/// Both sides of an integral identity and their relative gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, gap: (lhs - rhs).abs() / lhs.abs() }
    }
}

/// `∫ f dμ` against `∫ dt ∫_{φ = t} f dA_𝐧 / F(∇φ)` with the forward normal
/// `𝐧 = ∇φ/F(∇φ)`.
///
/// The `t`-integral is a midpoint rule on slabs between quantiles of `φ`; on
/// each level set `f`, `σ` and `dφ` are interpolated to segment midpoints.
pub fn coarea_check(
    f: &ScalarField,
    phi: &ScalarField,
    m: &MetricModel,
    sigma: &DensityField,
    slabs: usize,
) -> Result<IdentityCheck> {
    let mesh = phi.mesh();
    if f.mesh() != mesh || sigma.len() != mesh.len() {
        return Err(FinslerError::InvalidMesh("fields live on different meshes".into()));
    }
    if !(f.min() > 0.0) {
        return Err(FinslerError::InvalidArgument("co-area weight must be positive".into()));
    }
    if !(phi.max() > phi.min()) {
        return Err(FinslerError::InvalidArgument("co-area needs a nonconstant φ".into()));
    }
    let cell = mesh.cell_volume();
    let lhs: f64 = f.values().iter().zip(sigma.values()).map(|(a, s)| a * s * cell).sum();

    let mut sorted = phi.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut breaks: Vec<f64> = (0..=slabs).map(|k| sorted[k * (n - 1) / slabs]).collect();
    breaks.dedup();
    let slab_terms: Vec<f64> = breaks
        .par_windows(2)
        .map(|w| {
            let t = 0.5 * (w[0] + w[1]);
            let mut level = 0.0;
            for seg in extract_interface(phi, t) {
                let (length, normal) = geometry(phi, &seg);
                let mid = seg.mid();
                let dphi = interpolate_grad(mesh, phi.values(), seg.cell, mid);
                if length == 0.0 || dphi == linalg::ZERO {
                    continue;
                }
                let dual = local_dual(m, mesh, to_chart(mesh, seg.cell, mid));
                let s = interpolate(mesh, sigma.values(), seg.cell, mid);
                let weight = interpolate(mesh, f.values(), seg.cell, mid);
                // F(∇φ) = F*(dφ).
                level += weight * s * dual.value(normal) * length / dual.value(dphi);
            }
            level * (w[1] - w[0])
        })
        .collect();
    let rhs: f64 = slab_terms.iter().sum();
    Ok(IdentityCheck::new(lhs, rhs))
}

/// `∫ f dμ` against `∫₀^∞ μ({f > t}) dt`, midpoint rule on `levels` uniform
/// subintervals of `[0, max f]`.
pub fn layer_cake_check(f: &ScalarField, sigma: &DensityField, levels: usize) -> Result<IdentityCheck> {
    let mesh = f.mesh();
    if sigma.len() != mesh.len() {
        return Err(FinslerError::InvalidMesh("density does not match mesh".into()));
    }
    if f.min() < 0.0 {
        return Err(FinslerError::InvalidArgument("layer-cake needs f ≥ 0".into()));
    }
    let cell = mesh.cell_volume();
    let mut pairs: Vec<(f64, f64)> = f.values().iter().zip(sigma.values()).map(|(&v, &s)| (v, s * cell)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lhs: f64 = pairs.iter().map(|(v, w)| v * w).sum();
    // Suffix sums give μ({f > t}).
    let mut suffix = vec![0.0; pairs.len() + 1];
    for i in (0..pairs.len()).rev() {
        suffix[i] = suffix[i + 1] + pairs[i].1;
    }
    let top = f.max();
    let dt = top / levels as f64;
    let rhs: f64 = (0..levels)
        .map(|k| {
            let t = (k as f64 + 0.5) * dt;
            let first = pairs.partition_point(|p| p.0 <= t);
            suffix[first] * dt
        })
        .sum();
    Ok(IdentityCheck::new(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Chart;
    use crate::spectral::Mesh;
    use std::f64::consts::TAU;

    #[test]
    fn unit_weight_gives_total_volume() {
        let m = MetricModel::euclidean(Chart::torus(TAU, TAU).unwrap()).unwrap();
        let mesh = Mesh::new(&[TAU, TAU], &[48, 48]).unwrap();
        let one = ScalarField::from_fn(mesh, |_| 1.0).unwrap();
        let phi = ScalarField::from_fn(mesh, |x| x[0].sin()).unwrap();
        let c = coarea_check(&one, &phi, &m, &DensityField::uniform(mesh.len(), 1.0), DEFAULT_SLABS).unwrap();
        assert!((c.lhs - TAU * TAU).abs() < 1e-9);
        assert!(c.gap < 0.01, "{c:?}");
    }

    #[test]
    fn layer_cake_one_dimensional() {
        let mesh = Mesh::new(&[TAU], &[256]).unwrap();
        let f = ScalarField::from_fn(mesh, |x| 2.0 + x[0].sin()).unwrap();
        let c = layer_cake_check(&f, &DensityField::uniform(256, 1.0), 1024).unwrap();
        assert!(c.gap < 1e-3, "{c:?}");
    }
}
