//! Space-form profiles and evaluators for the comparison bounds.

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::measures::unit_sphere_area;
use crate::quad;

const PROFILE_TOL: f64 = 1e-10;

/// `s_k(t)`: the solution of `s'' + k s = 0`, `s(0) = 0`, `s'(0) = 1`.
pub fn s_k(k: f64, t: f64) -> f64 {
    let kt2 = k * t * t;
    if kt2.abs() < 1e-6 {
        return t * (1.0 - kt2 / 6.0 + kt2 * kt2 / 120.0);
    }
    if k > 0.0 {
        let r = k.sqrt();
        (r * t).sin() / r
    } else {
        let r = (-k).sqrt();
        (r * t).sinh() / r
    }
}

/// Constant-curvature model of dimension `n` and curvature `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormProfile {
    pub n: usize,
    pub k: f64,
}

impl SpaceFormProfile {
    pub fn new(n: usize, k: f64) -> Result<Self> {
        if n == 0 {
            return Err(FinslerError::UnsupportedDimension(0));
        }
        if !k.is_finite() {
            return Err(FinslerError::InvalidArgument(format!("curvature {k} must be finite")));
        }
        Ok(Self { n, k })
    }

    /// `∫₀^r s_k^{n−1}(t) dt`.
    pub fn power_integral(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let p = (self.n - 1) as i32;
        quad::integrate(|t| s_k(self.k, t).powi(p), 0.0, r, PROFILE_TOL)
    }

    /// `A_{n,k}(r) = vol(𝕊ⁿ⁻¹) s_k^{n−1}(r)`.
    pub fn area(&self, r: f64) -> f64 {
        unit_sphere_area(self.n - 1) * s_k(self.k, r).powi((self.n - 1) as i32)
    }

    /// `V_{n,k}(r) = vol(𝕊ⁿ⁻¹) ∫₀^r s_k^{n−1}`.
    pub fn volume(&self, r: f64) -> f64 {
        unit_sphere_area(self.n - 1) * self.power_integral(r)
    }
}

/// Whether a quantity is exact or a one-sided estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    /// The true value is at most this.
    UpperBound,
    /// The true value is at least this.
    LowerBound,
    /// Discretized value without a guaranteed direction.
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    pub value: f64,
    pub provenance: Provenance,
}

impl Tagged {
    pub fn new(value: f64, provenance: Provenance) -> Self {
        Self { value, provenance }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, Provenance::Exact)
    }

    pub fn estimate(value: f64) -> Self {
        Self::new(value, Provenance::Estimate)
    }
}

/// Operands of the diameter-volume bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    /// Lower Ricci bound `Ric ≥ (n−1)k F²`.
    pub k: Tagged,
    /// Uniformity constant `Λ_F`.
    pub uniformity: Tagged,
    /// Reversibility `λ_F`.
    pub reversibility: Tagged,
    pub volume: Tagged,
    pub diameter: Tagged,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let l = self.reversibility.value;
        let big = self.uniformity.value;
        if !(l >= 1.0 - 1e-9 && big >= l * l * (1.0 - 1e-9)) {
            return Err(FinslerError::InvalidArgument(format!("need Λ ≥ λ² ≥ 1, got Λ = {big}, λ = {l}")));
        }
        if !(self.volume.value > 0.0 && self.diameter.value > 0.0) {
            return Err(FinslerError::InvalidArgument("volume and diameter must be positive".into()));
        }
        Ok(())
    }

    /// `(n−1) μ(M) / (vol(𝕊ⁿ⁻²) diam ∫₀^diam s_k^{n−1})`, shared by both bounds.
    fn core(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(FinslerError::UnsupportedDimension(self.n));
        }
        self.validate()?;
        let profile = SpaceFormProfile::new(self.n, self.k.value)?;
        let d = self.diameter.value;
        Ok((self.n - 1) as f64 * self.volume.value / (unit_sphere_area(self.n - 2) * d * profile.power_integral(d)))
    }
}

/// `h²/(4λ²)`, the lower bound on `λ₁` from the Cheeger constant.
pub fn cheeger_eigen_lower(h: f64, lambda: f64) -> f64 {
    h * h / (4.0 * lambda * lambda)
}

/// `(n−1)μ(M) / (2 vol(𝕊ⁿ⁻²) Λ^{4n+½} diam ∫₀^diam s_k^{n−1})`, a lower bound on `𝕙(M)`.
pub fn croke_cheeger_lower(b: &BoundInputs) -> Result<f64> {
    let exponent = 4.0 * b.n as f64 + 0.5;
    Ok(b.core()? / (2.0 * b.uniformity.value.powf(exponent)))
}

/// `((n−1)μ(M) / (4 vol(𝕊ⁿ⁻²) Λ^{4n+1} diam ∫₀^diam s_k^{n−1}))²`, a lower bound on `λ₁`.
pub fn yau_eigen_lower(b: &BoundInputs) -> Result<f64> {
    let exponent = 4.0 * b.n as f64 + 1.0;
    let x = b.core()? / (4.0 * b.uniformity.value.powf(exponent));
    Ok(x * x)
}

/// Maximizer of the star-like isoperimetric expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarlikeBound {
    pub value: f64,
    pub beta: f64,
}

/// `max_{0<β<r/(2√Λ)} A(β)[V(r/(2√Λ)) − V(β)] / (2Λ^{4n+½} V(r) V(R))` with
/// the `(n, k)` profiles, by a 1024-point grid and golden-section refinement.
pub fn starlike_isoperimetric_lower(n: usize, k: f64, uniformity: f64, r: f64, big_r: f64) -> Result<StarlikeBound> {
    if !(k < 0.0) {
        return Err(FinslerError::InvalidArgument(format!("star-like bound needs k < 0, got {k}")));
    }
    if !(r > 0.0 && big_r >= r) {
        return Err(FinslerError::InvalidArgument(format!("need 0 < r ≤ R, got r = {r}, R = {big_r}")));
    }
    if !(uniformity >= 1.0) {
        return Err(FinslerError::InvalidArgument(format!("Λ = {uniformity} must be ≥ 1")));
    }
    let objective = starlike_objective(n, k, uniformity, r, big_r)?;
    let top = r / (2.0 * uniformity.sqrt());
    const GRID: usize = 1024;
    let step = top / GRID as f64;
    let (best_i, _) = (1..GRID)
        .map(|i| (i, objective(i as f64 * step)))
        .fold((1, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let c = best_i as f64 * step;
    let (beta, value) = quad::golden_max(&objective, c - step, c + step, 1e-12 * top);
    Ok(StarlikeBound { value, beta })
}

/// The β-objective of [`starlike_isoperimetric_lower`].
pub fn starlike_objective(n: usize, k: f64, uniformity: f64, r: f64, big_r: f64) -> Result<impl Fn(f64) -> f64> {
    let p = SpaceFormProfile::new(n, k)?;
    let top = r / (2.0 * uniformity.sqrt());
    let v_top = p.volume(top);
    let denom = 2.0 * uniformity.powf(4.0 * n as f64 + 0.5) * p.volume(r) * p.volume(big_r);
    Ok(move |beta: f64| {
        if beta <= 0.0 || beta >= top {
            return 0.0;
        }
        p.area(beta) * (v_top - p.volume(beta)) / denom
    })
}

/// `C (δ h + h²)`; `C` is supplied by the caller.
pub fn buser_rhs(delta: f64, h: f64, c: f64) -> f64 {
    c * (delta * h + h * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    pub lambda1: f64,
    pub h: f64,
    pub ric: f64,
}

/// Quantities of `(M, C·F²)`: `λ₁/C`, `h/√C`, `Ric/C`.
pub fn rescale_quantities(c: f64, lambda1: f64, h: f64, ric: f64) -> Result<Rescaled> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(FinslerError::InvalidArgument(format!("rescaling constant {c} must be positive")));
    }
    Ok(Rescaled { lambda1: lambda1 / c, h: h / c.sqrt(), ric: ric / c })
}

/// `𝒥(r) = A(r/4Λ) V(r/4Λ) / (4Λ^{4n+½} V(r/√Λ) V(2r√Λ))` with `k = −1` profiles.
pub fn j_profile(r: f64, n: usize, uniformity: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(FinslerError::InvalidArgument(format!("r = {r} must be positive")));
    }
    let p = SpaceFormProfile::new(n, -1.0)?;
    let l = uniformity;
    let a = r / (4.0 * l);
    Ok(p.area(a) * p.volume(a) / (4.0 * l.powf(4.0 * n as f64 + 0.5) * p.volume(r / l.sqrt()) * p.volume(2.0 * r * l.sqrt())))
}
