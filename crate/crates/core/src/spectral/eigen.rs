use std::collections::VecDeque;
use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::measures::DensityField;
use crate::metric::MetricModel;

use super::energy::EnergyFunctional;
use super::{Mask, Mesh, ScalarField};

/// Options for the first-eigenvalue minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenOptions {
    /// Seed of the random start.
    pub seed: u64,
    /// Initial trial step, in units of `1/E`.
    pub step: f64,
    /// Stop when the relative projected-gradient residual drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { seed: 0, step: 1.0, tol: 1e-6, max_iter: 4000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda1: f64,
    pub eigenfunction: ScalarField,
    /// Energy after every accepted step.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Label of the winning start.
    pub start: String,
}

/// Line-search stalls count as convergence within this factor of `tol`.
const STALL_FACTOR: f64 = 100.0;
/// Energy stagnation window, in iterations, and its relative threshold.
const STAGNATION_WINDOW: usize = 50;
const STAGNATION_TOL: f64 = 1e-13;
/// A stalled run also counts as converged when the quadratic model predicts
/// no step along the search direction can gain more than this, relative to E.
const ROUNDOFF_GAIN: f64 = 1e-12;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

struct Problem<'a> {
    energy: &'a EnergyFunctional,
    /// `None` for the closed problem; otherwise the free (interior) nodes.
    free: Option<&'a [bool]>,
}

impl Problem<'_> {
    fn mass(&self) -> &[f64] {
        self.energy.mass()
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass().iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
    }

    /// Removes the constraint-normal part: μ-mean (closed) or clamped nodes.
    fn project(&self, v: &mut [f64]) {
        match self.free {
            None => {
                let mean = self.inner(v, &vec![1.0; v.len()]) / self.energy.volume();
                v.iter_mut().for_each(|x| *x -= mean);
            }
            Some(free) => v.iter_mut().zip(free).filter(|(_, &f)| !f).for_each(|(x, _)| *x = 0.0),
        }
    }

    fn normalize(&self, u: &mut [f64]) -> Result<()> {
        self.project(u);
        let n = self.energy.mass_norm_sq(u);
        if !(n > 0.0) {
            return Err(FinslerError::UndefinedEnergy);
        }
        let k = (self.energy.volume() / n).sqrt();
        u.iter_mut().for_each(|x| *x *= k);
        Ok(())
    }

    /// Energy and projected gradient in the mass metric, scaled by `∫u²dμ`.
    fn eval(&self, u: &[f64], g: &mut [f64]) -> Result<f64> {
        let num = self.energy.numerator_grad(u, g)?;
        let d = self.energy.mass_norm_sq(u);
        let e = num / d;
        for ((gi, m), ui) in g.iter_mut().zip(self.mass()).zip(u) {
            *gi = *gi / m - 2.0 * e * ui;
        }
        self.project(g);
        Ok(e)
    }

    fn residual(&self, g: &[f64], e: f64) -> f64 {
        (self.inner(g, g) / self.energy.volume()).sqrt() / e
    }

    /// Quadratic-model gain along `dir`, with the curvature taken from the
    /// slopes at the origin and at the smallest probe step past the line
    /// minimum; true when it is below the rounding level of the energy.
    fn gain_exhausted(&self, u: &[f64], dir: &[f64], slope: f64, e: f64) -> Result<bool> {
        let vol = self.energy.volume();
        let d0 = -slope / vol;
        let mut g = vec![0.0; u.len()];
        let mut trial = vec![0.0; u.len()];
        let mut s = 1e-2 * (vol / self.inner(dir, dir)).sqrt();
        let mut bracket = None;
        for _ in 0..MAX_HALVINGS {
            for ((t, ui), di) in trial.iter_mut().zip(u).zip(dir) {
                *t = ui - s * di;
            }
            self.normalize(&mut trial)?;
            self.eval(&trial, &mut g)?;
            let ds = -self.inner(&g, dir) / vol;
            if ds <= 0.0 {
                break;
            }
            bracket = Some((ds - d0) / s);
            s *= 0.5;
        }
        Ok(bracket.is_some_and(|c| d0 * d0 / (2.0 * c) <= ROUNDOFF_GAIN * e))
    }

    /// Riemannian nonlinear conjugate gradients (Polak–Ribière⁺) on the
    /// constraint sphere, with Armijo backtracking.
    fn minimize(&self, start: Vec<f64>, opts: &EigenOptions) -> Result<Run> {
        let n = start.len();
        let mut u = start;
        self.normalize(&mut u)?;
        let mut g = vec![0.0; n];
        let mut e = self.eval(&u, &mut g)?;
        let mut dir = g.clone();
        let mut gg = self.inner(&g, &g);
        let mut trace = vec![e];
        let mut step = opts.step / e;
        let mut trial = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        let mut residual = self.residual(&g, e);
        let mut converged = false;
        let mut iterations = 0;
        while iterations < opts.max_iter {
            if residual < opts.tol {
                converged = true;
                break;
            }
            let mut slope = self.inner(&g, &dir);
            if !(slope > 0.0) {
                dir.copy_from_slice(&g);
                slope = gg;
            }
            let vol = self.energy.volume();
            let mut accepted = None;
            let mut s = step;
            for _ in 0..MAX_HALVINGS {
                for ((t, ui), di) in trial.iter_mut().zip(&u).zip(&dir) {
                    *t = ui - s * di;
                }
                if self.normalize(&mut trial).is_ok() {
                    let et = self.energy.energy(&trial)?;
                    if et <= e - ARMIJO * s * slope / vol {
                        accepted = Some(s);
                        break;
                    }
                }
                s *= 0.5;
            }
            let Some(s) = accepted else {
                converged = residual < STALL_FACTOR * opts.tol || self.gain_exhausted(&u, &dir, slope, e)?;
                break;
            };
            step = 2.0 * s;
            std::mem::swap(&mut u, &mut trial);
            e = self.eval(&u, &mut g_new)?;
            trace.push(e);
            iterations += 1;
            let gg_new = self.inner(&g_new, &g_new);
            let cross = self.inner(&g_new, &g);
            let beta = ((gg_new - cross) / gg).max(0.0);
            for (d, gn) in dir.iter_mut().zip(&g_new) {
                *d = gn + beta * *d;
            }
            self.project(&mut dir);
            let along = self.inner(&dir, &u) / self.energy.mass_norm_sq(&u);
            dir.iter_mut().zip(&u).for_each(|(d, ui)| *d -= along * ui);
            std::mem::swap(&mut g, &mut g_new);
            gg = gg_new;
            residual = self.residual(&g, e);
            if trace.len() > STAGNATION_WINDOW && residual < STALL_FACTOR * opts.tol {
                let past = trace[trace.len() - 1 - STAGNATION_WINDOW];
                if past - e <= STAGNATION_TOL * e {
                    converged = true;
                    break;
                }
            }
        }
        if !converged && residual < opts.tol {
            converged = true;
        }
        Ok(Run { u, energy: e, trace, converged, residual, iterations })
    }
}

struct Run {
    u: Vec<f64>,
    energy: f64,
    trace: Vec<f64>,
    converged: bool,
    residual: f64,
    iterations: usize,
}

fn solve(
    energy: &EnergyFunctional,
    free: Option<&[bool]>,
    starts: Vec<(String, Vec<f64>)>,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    let problem = Problem { energy, free };
    let runs = starts
        .into_par_iter()
        .map(|(label, u)| problem.minimize(u, opts).map(|r| (label, r)))
        .collect::<Result<Vec<_>>>()?;
    let (label, best) = runs
        .into_iter()
        .reduce(|a, b| if b.1.energy < a.1.energy { b } else { a })
        .expect("at least one start");
    Ok(EigenResult {
        lambda1: best.energy,
        eigenfunction: ScalarField::new(*energy.mesh(), best.u)?,
        trace: best.trace,
        converged: best.converged,
        residual: best.residual,
        iterations: best.iterations,
        seed: opts.seed,
        start: label,
    })
}

/// Random start, smoothed by a few neighbour-averaging sweeps.
fn random_start(mesh: &Mesh, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = ScalarField::random(*mesh, &mut rng).into_values();
    for _ in 0..8 {
        let prev = u.clone();
        for (i, ui) in u.iter_mut().enumerate() {
            let mut acc = prev[i];
            for a in 0..mesh.dim() {
                acc += prev[mesh.neighbor(i, a, 1)] + prev[mesh.neighbor(i, a, -1)];
            }
            *ui = acc / (1 + 2 * mesh.dim()) as f64;
        }
    }
    u
}

/// `λ₁ = inf E(u)` over `μ`-mean-zero fields.
///
/// Starts from the lowest Fourier modes along each axis with both signs, since
/// `E(−u) ≠ E(u)` for nonreversible metrics, plus one seeded random field.
pub fn eigen_closed(mesh: &Mesh, m: &MetricModel, sigma: &DensityField, opts: &EigenOptions) -> Result<EigenResult> {
    let energy = EnergyFunctional::new(m, mesh, sigma)?;
    let mut starts = Vec::new();
    for axis in 0..mesh.dim() {
        let l = mesh.period(axis);
        for (name, f) in [("sin", f64::sin as fn(f64) -> f64), ("cos", f64::cos)] {
            let mode: Vec<f64> = (0..mesh.len()).map(|i| f(TAU * mesh.coords(i)[axis] / l)).collect();
            starts.push((format!("+{name}{axis}"), mode.clone()));
            starts.push((format!("-{name}{axis}"), mode.iter().map(|v| -v).collect()));
        }
    }
    starts.push((format!("random{}", opts.seed), random_start(mesh, opts.seed)));
    solve(&energy, None, starts, opts)
}

/// `λ₁(D)` over fields vanishing outside the interior of `D`.
pub fn eigen_dirichlet(
    mesh: &Mesh,
    m: &MetricModel,
    sigma: &DensityField,
    mask: &Mask,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    if mask.mesh() != mesh {
        return Err(FinslerError::InvalidMesh("mask does not match mesh".into()));
    }
    let energy = EnergyFunctional::new(m, mesh, sigma)?;
    let free = mask.free();
    let tent = grid_distance(mesh, &free);
    let mut random = random_start(mesh, opts.seed);
    random.iter_mut().zip(&free).for_each(|(v, &f)| {
        if !f {
            *v = 0.0
        }
    });
    let starts = vec![
        ("+tent".to_string(), tent.clone()),
        ("-tent".to_string(), tent.iter().map(|v| -v).collect()),
        (format!("random{}", opts.seed), random),
    ];
    solve(&energy, Some(&free), starts, opts)
}

/// Grid-step distance from the clamped set, by breadth-first search.
fn grid_distance(mesh: &Mesh, free: &[bool]) -> Vec<f64> {
    let mut dist = vec![usize::MAX; mesh.len()];
    let mut queue = VecDeque::new();
    for (i, &f) in free.iter().enumerate() {
        if !f {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for a in 0..mesh.dim() {
            for step in [-1, 1] {
                let j = mesh.neighbor(i, a, step);
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
    }
    dist.into_iter().map(|d| d as f64).collect()
}
