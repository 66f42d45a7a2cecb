//! Discretization, the nonlinear first eigenvalue, level-set cuts with
//! forward and backward areas, integral identities and asymmetric distances.

mod coarea;
mod cut;
mod distance;
mod dual_table;
mod eigen;
mod energy;
mod mesh;

pub use coarea::{coarea_check, layer_cake_check, IdentityCheck, DEFAULT_SLABS};
pub use cut::{
    cheeger_1d_exact, cheeger_sweep, cut_areas, quantile_levels, CheegerSweep, InterfaceSegment, LevelSetCut,
    DEFAULT_LEVELS,
};
pub use distance::{diameter, distance_map, DiameterEstimate, MIN_SOURCES};
pub use eigen::{eigen_closed, eigen_dirichlet, EigenOptions, EigenResult};
pub use energy::{energy, EnergyFunctional};
pub use mesh::{Mask, Mesh, ScalarField};

use crate::error::{FinslerError, Result};
use crate::measures::DensityField;

/// `μ(M) = Σ σ_i Δ`.
pub fn total_volume(mesh: &Mesh, sigma: &DensityField) -> Result<f64> {
    if sigma.len() != mesh.len() {
        return Err(FinslerError::InvalidMesh("density does not match mesh".into()));
    }
    Ok(sigma.values().iter().sum::<f64>() * mesh.cell_volume())
}
