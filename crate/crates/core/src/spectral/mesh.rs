use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::linalg::Vector;
use crate::metric::{Axis, Chart};

/// Uniform periodic grid on a circle or a flat 2-torus chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    dim: usize,
    periods: [f64; 2],
    nodes: [usize; 2],
}

impl Mesh {
    pub const MIN_NODES: usize = 16;

    pub fn new(periods: &[f64], nodes: &[usize]) -> Result<Self> {
        let dim = periods.len();
        if !(1..=2).contains(&dim) {
            return Err(FinslerError::UnsupportedDimension(dim));
        }
        if nodes.len() != dim {
            return Err(FinslerError::InvalidMesh(format!("{} node counts for {dim} axes", nodes.len())));
        }
        let mut mesh = Self { dim, periods: [1.0; 2], nodes: [1; 2] };
        for a in 0..dim {
            if !(periods[a].is_finite() && periods[a] > 0.0) {
                return Err(FinslerError::InvalidMesh(format!("period {} must be positive", periods[a])));
            }
            if nodes[a] < Self::MIN_NODES {
                return Err(FinslerError::InvalidMesh(format!(
                    "{} nodes on axis {a}; need at least {}",
                    nodes[a],
                    Self::MIN_NODES
                )));
            }
            mesh.periods[a] = periods[a];
            mesh.nodes[a] = nodes[a];
        }
        Ok(mesh)
    }

    /// `n` nodes per axis on a periodic chart.
    pub fn for_chart(chart: &Chart, n: usize) -> Result<Self> {
        let periods = chart
            .axes()
            .iter()
            .map(|a| match *a {
                Axis::Periodic(l) => Ok(l),
                Axis::Interval(..) => Err(FinslerError::InvalidMesh("mesh needs a periodic chart".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&periods, &vec![n; periods.len()])
    }

    pub fn chart(&self) -> Chart {
        let axes = (0..self.dim).map(|a| Axis::Periodic(self.periods[a])).collect();
        Chart::new(axes).expect("mesh periods are valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.nodes[axis]
    }

    pub fn period(&self, axis: usize) -> f64 {
        self.periods[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.nodes[axis] as f64
    }

    /// Volume element `Δ = Π Lᵢ/Nᵢ`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Lebesgue volume of the chart.
    pub fn chart_volume(&self) -> f64 {
        self.periods[..self.dim].iter().product()
    }

    /// Axis 0 varies fastest.
    pub fn index(&self, ij: [usize; 2]) -> usize {
        ij[0] + self.nodes[0] * ij[1]
    }

    pub fn multi_index(&self, i: usize) -> [usize; 2] {
        [i % self.nodes[0], i / self.nodes[0]]
    }

    pub fn coords(&self, i: usize) -> Vector {
        let [a, b] = self.multi_index(i);
        let mut x = [a as f64 * self.spacing(0), 0.0];
        if self.dim == 2 {
            x[1] = b as f64 * self.spacing(1);
        }
        x
    }

    /// Node `step` positions away from `i` along `axis`, with periodic wrap.
    pub fn neighbor(&self, i: usize, axis: usize, step: isize) -> usize {
        let mut ij = self.multi_index(i);
        let n = self.nodes[axis] as isize;
        ij[axis] = (ij[axis] as isize + step).rem_euclid(n) as usize;
        self.index(ij)
    }

    /// Node at integer offset `d` from `i`.
    pub fn offset(&self, i: usize, d: [isize; 2]) -> usize {
        let j = self.neighbor(i, 0, d[0]);
        if self.dim == 2 {
            self.neighbor(j, 1, d[1])
        } else {
            j
        }
    }

    /// The same domain with `n` nodes per axis.
    pub fn with_nodes(&self, n: usize) -> Result<Self> {
        Self::new(&self.periods[..self.dim], &vec![n; self.dim])
    }
}

/// Real values at the nodes of a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    mesh: Mesh,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(FinslerError::InvalidMesh(format!(
                "{} values for {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FinslerError::InvalidArgument("field values must be finite".into()));
        }
        Ok(Self { mesh, values })
    }

    pub fn from_fn(mesh: Mesh, f: impl Fn(Vector) -> f64) -> Result<Self> {
        let values = (0..mesh.len()).map(|i| f(mesh.coords(i))).collect();
        Self::new(mesh, values)
    }

    /// Independent uniform values in `[-1, 1]`.
    pub fn random(mesh: Mesh, rng: &mut impl Rng) -> Self {
        let values = (0..mesh.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.mesh, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// A closed node subset `D` for Dirichlet problems.
///
/// Nodes of `D` with a grid neighbour outside `D` form the boundary and are
/// held at zero together with the complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mask {
    mesh: Mesh,
    inside: Vec<bool>,
}

impl Mask {
    pub fn new(mesh: Mesh, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != mesh.len() {
            return Err(FinslerError::InvalidMesh("mask length does not match mesh".into()));
        }
        let mask = Self { mesh, inside };
        let count = mask.inside.iter().filter(|&&b| b).count();
        if count == 0 || count == mesh.len() {
            return Err(FinslerError::InvalidMesh("Dirichlet domain must be a nonempty proper subset".into()));
        }
        if !mask.free().iter().any(|&b| b) {
            return Err(FinslerError::InvalidMesh("Dirichlet domain has no interior nodes".into()));
        }
        Ok(mask)
    }

    pub fn from_fn(mesh: Mesh, pred: impl Fn(Vector) -> bool) -> Result<Self> {
        let inside = (0..mesh.len()).map(|i| pred(mesh.coords(i))).collect();
        Self::new(mesh, inside)
    }

    /// Nodes with `lo ≤ x_axis ≤ hi` (up to a rounding allowance).
    pub fn strip(mesh: Mesh, axis: usize, lo: f64, hi: f64) -> Result<Self> {
        let eps = 1e-9 * mesh.spacing(axis);
        Self::from_fn(mesh, |x| x[axis] >= lo - eps && x[axis] <= hi + eps)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn contains(&self, i: usize) -> bool {
        self.inside[i]
    }

    /// Interior nodes: in `D` with every axis neighbour in `D`.
    pub fn free(&self) -> Vec<bool> {
        (0..self.mesh.len())
            .map(|i| {
                self.inside[i]
                    && (0..self.mesh.dim()).all(|a| {
                        self.inside[self.mesh.neighbor(i, a, 1)] && self.inside[self.mesh.neighbor(i, a, -1)]
                    })
            })
            .collect()
    }
}
