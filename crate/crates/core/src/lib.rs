//! Numerical laboratory for Finsler spectral geometry.
//!
//! The crate evaluates Finsler metrics and their curvature, the canonical
//! measures, the dual norm and Legendre transform, the nonlinear first
//! eigenvalue, asymmetric Cheeger constants, and the comparison-geometry
//! bounds linking them, on one- and two-dimensional model manifolds.

pub mod comparison;
pub mod diff;
pub mod duality;
pub mod error;
pub mod harness;
pub mod invariants;
pub mod linalg;
pub mod measures;
pub mod metric;
pub mod quad;
pub mod spectral;

pub use error::{FinslerError, Result};
pub use linalg::{Matrix, Vector};
pub use metric::{Chart, ChartPoint, Family, MetricModel, OneForm, RiemannianField, Tangent};
