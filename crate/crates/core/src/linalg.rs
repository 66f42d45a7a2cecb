//! Fixed-size helpers for the one- and two-dimensional charts.
//!
//! Every vector is stored as `[f64; 2]`; in one dimension the second slot is
//! zero and ignored. Functions that depend on the dimension take it explicitly.

pub type Vector = [f64; 2];
pub type Matrix = [[f64; 2]; 2];

pub const ZERO: Vector = [0.0, 0.0];

#[inline]
pub fn dot(a: Vector, b: Vector) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vector) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn scale(a: Vector, s: f64) -> Vector {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn add(a: Vector, b: Vector) -> Vector {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vector, b: Vector) -> Vector {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn axpy(a: Vector, s: f64, b: Vector) -> Vector {
    [a[0] + s * b[0], a[1] + s * b[1]]
}

#[inline]
pub fn neg(a: Vector) -> Vector {
    [-a[0], -a[1]]
}

#[inline]
pub fn unit(dim: usize, i: usize) -> Vector {
    debug_assert!(i < dim);
    let mut e = ZERO;
    e[i] = 1.0;
    e
}

/// Unit vector at angle `theta` in the chart frame.
#[inline]
pub fn polar(theta: f64) -> Vector {
    let (s, c) = theta.sin_cos();
    [c, s]
}

#[inline]
pub fn mat_vec(m: &Matrix, v: Vector) -> Vector {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

#[inline]
pub fn quad_form(m: &Matrix, v: Vector) -> f64 {
    dot(v, mat_vec(m, v))
}

pub fn det(dim: usize, m: &Matrix) -> f64 {
    match dim {
        1 => m[0][0],
        _ => m[0][0] * m[1][1] - m[0][1] * m[1][0],
    }
}

pub fn inverse(dim: usize, m: &Matrix) -> Option<Matrix> {
    let d = det(dim, m);
    if !d.is_finite() || d == 0.0 {
        return None;
    }
    Some(match dim {
        1 => [[1.0 / m[0][0], 0.0], [0.0, 0.0]],
        _ => [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]],
    })
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(dim: usize, m: &Matrix) -> Vector {
    if dim == 1 {
        return [m[0][0], m[0][0]];
    }
    let tr = m[0][0] + m[1][1];
    let half_gap = (0.25 * (m[0][0] - m[1][1]).powi(2) + m[0][1] * m[1][0]).max(0.0).sqrt();
    [0.5 * tr - half_gap, 0.5 * tr + half_gap]
}

/// Lower Cholesky factor `L` with `m = L L^T`.
pub fn cholesky(dim: usize, m: &Matrix) -> Option<Matrix> {
    let l00 = m[0][0].sqrt();
    if !(l00 > 0.0) {
        return None;
    }
    if dim == 1 {
        return Some([[l00, 0.0], [0.0, 0.0]]);
    }
    let l10 = m[1][0] / l00;
    let r = m[1][1] - l10 * l10;
    if !(r > 0.0) {
        return None;
    }
    Some([[l00, 0.0], [l10, r.sqrt()]])
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    let off = 0.5 * (m[0][1] + m[1][0]);
    [[m[0][0], off], [off, m[1][1]]]
}

pub fn is_finite(v: Vector) -> bool {
    v[0].is_finite() && v[1].is_finite()
}
