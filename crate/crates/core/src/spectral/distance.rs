use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::linalg::{self, Vector};
use crate::metric::MetricModel;

use super::{Mesh, ScalarField};

/// Minimum number of diameter sources.
pub const MIN_SOURCES: usize = 32;

/// Grid steps of the 2D stencil: axis, diagonal and knight moves.
const STENCIL_2D: [[isize; 2]; 16] = [
    [1, 0], [-1, 0], [0, 1], [0, -1],
    [1, 1], [1, -1], [-1, 1], [-1, -1],
    [2, 1], [2, -1], [-2, 1], [-2, -1],
    [1, 2], [1, -2], [-1, 2], [-1, -2],
];
const STENCIL_1D: [[isize; 2]; 2] = [[1, 0], [-1, 0]];

/// Directed grid graph with edge weights `F(x_mid, Δx)`.
struct Graph {
    mesh: Mesh,
    stencil: &'static [[isize; 2]],
    /// `weights[i * stencil.len() + k]`, or one row for `x`-independent metrics.
    weights: Vec<f64>,
    shared: bool,
}

impl Graph {
    fn new(m: &MetricModel, mesh: &Mesh) -> Result<Self> {
        if m.dim() != mesh.dim() {
            return Err(FinslerError::InvalidMesh("metric and mesh dimensions differ".into()));
        }
        let stencil: &'static [[isize; 2]] = if mesh.dim() == 1 { &STENCIL_1D } else { &STENCIL_2D };
        let chart = &mesh.chart();
        let step = |d: [isize; 2]| -> Vector {
            let mut v = [d[0] as f64 * mesh.spacing(0), 0.0];
            if mesh.dim() == 2 {
                v[1] = d[1] as f64 * mesh.spacing(1);
            }
            v
        };
        let shared = m.is_x_homogeneous();
        let nodes = if shared { 1 } else { mesh.len() };
        let weights = (0..nodes)
            .into_par_iter()
            .flat_map_iter(|i| {
                let x = mesh.coords(i);
                stencil.iter().map(move |&d| {
                    let dx = step(d);
                    m.eval(&chart.point(linalg::axpy(x, 0.5, dx)), dx)
                })
            })
            .collect();
        Ok(Self { mesh: *mesh, stencil, weights, shared })
    }

    fn weight(&self, i: usize, k: usize) -> f64 {
        let row = if self.shared { 0 } else { i };
        self.weights[row * self.stencil.len() + k]
    }

    /// Label-setting shortest paths from `source` along edge directions.
    fn forward_distances(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.mesh.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry(0.0, source));
        while let Some(Entry(d, i)) = heap.pop() {
            if d > dist[i] {
                continue;
            }
            for (k, &off) in self.stencil.iter().enumerate() {
                let j = self.mesh.offset(i, off);
                let nd = d + self.weight(i, k);
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Entry(nd, j));
                }
            }
        }
        dist
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Forward distances `d(p, ·)` from node `source`.
pub fn distance_map(m: &MetricModel, mesh: &Mesh, source: usize) -> Result<ScalarField> {
    if source >= mesh.len() {
        return Err(FinslerError::InvalidArgument(format!("source node {source} out of range")));
    }
    let g = Graph::new(m, mesh)?;
    ScalarField::new(*mesh, g.forward_distances(source))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterEstimate {
    /// `max_{p ∈ sources} max_q d(p, q)` on the given mesh.
    pub value: f64,
    /// The same on the mesh with half the nodes per axis.
    pub coarse: f64,
    /// First-order extrapolation `2·value − coarse`.
    pub extrapolated: f64,
    pub sources: usize,
}

/// Stratified sources: an evenly spaced `k × k` (or `k`) subset of nodes.
fn sources(mesh: &Mesh, count: usize) -> Vec<usize> {
    let count = count.max(MIN_SOURCES);
    if mesh.dim() == 1 {
        let n = mesh.len();
        let k = count.min(n);
        return (0..k).map(|q| q * n / k).collect();
    }
    let k = (count as f64).sqrt().ceil() as usize;
    let (k0, k1) = (k.min(mesh.nodes(0)), k.min(mesh.nodes(1)));
    (0..k1)
        .flat_map(|b| (0..k0).map(move |a| (a, b)))
        .map(|(a, b)| mesh.index([a * mesh.nodes(0) / k0, b * mesh.nodes(1) / k1]))
        .collect()
}

fn max_eccentricity(m: &MetricModel, mesh: &Mesh, count: usize) -> Result<(f64, usize)> {
    let g = Graph::new(m, mesh)?;
    let src = sources(mesh, count);
    let value = src
        .par_iter()
        .map(|&p| g.forward_distances(p).into_iter().fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    Ok((value, src.len()))
}

/// Forward diameter estimate over at least [`MIN_SOURCES`] stratified sources.
pub fn diameter(m: &MetricModel, mesh: &Mesh, count: usize) -> Result<DiameterEstimate> {
    let (value, sources) = max_eccentricity(m, mesh, count)?;
    let coarse_n = (mesh.nodes(0) / 2).max(Mesh::MIN_NODES);
    let coarse_mesh = mesh.with_nodes(coarse_n)?;
    let (coarse, _) = max_eccentricity(m, &coarse_mesh, count)?;
    Ok(DiameterEstimate { value, coarse, extrapolated: 2.0 * value - coarse, sources })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Chart;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn flat_torus_distances() {
        let m = MetricModel::euclidean(Chart::torus(TAU, TAU).unwrap()).unwrap();
        let mesh = Mesh::new(&[TAU, TAU], &[64, 64]).unwrap();
        let d = distance_map(&m, &mesh, 0).unwrap();
        for ij in [[10, 3], [20, 7], [32, 32], [5, 40], [17, 29]] {
            let q = mesh.index(ij);
            let exact = mesh.chart().distance(mesh.coords(0), mesh.coords(q));
            let got = d.values()[q];
            assert!(got >= exact - 1e-12 && got <= exact * 1.03, "{ij:?}: {got} vs {exact}");
        }
        assert_eq!(d.values()[0], 0.0);
    }

    #[test]
    fn one_dimensional_randers_asymmetry() {
        let (a, b, l) = (2.0, 1.0, TAU);
        let m = MetricModel::randers(Chart::circle(l).unwrap(), [[a * a, 0.0], [0.0, 0.0]], [b, 0.0]).unwrap();
        let mesh = Mesh::new(&[l], &[64]).unwrap();
        let d = distance_map(&m, &mesh, 0).unwrap();
        let h = mesh.spacing(0);
        // One step forward costs (a+b)h; one step backward costs (a−b)h.
        assert!((d.values()[1] - (a + b) * h).abs() < 1e-12);
        assert!((d.values()[63] - (a - b) * h).abs() < 1e-12);
        let dm = diameter(&m, &mesh, 32).unwrap();
        // Farthest point is reached going backward or forward at equal cost.
        let expect = (a + b) * (a - b) * l / (2.0 * a);
        assert!((dm.value - expect).abs() < (a + b) * h, "{} vs {expect}", dm.value);
    }

    #[test]
    fn flat_torus_diameter() {
        let m = MetricModel::euclidean(Chart::torus(TAU, TAU).unwrap()).unwrap();
        let mesh = Mesh::new(&[TAU, TAU], &[32, 32]).unwrap();
        let d = diameter(&m, &mesh, 32).unwrap();
        assert!((d.value - PI * 2f64.sqrt()).abs() < 0.03 * PI * 2f64.sqrt(), "{d:?}");
    }
}
