//! Central finite differences with one level of Richardson extrapolation.
//!
//! Each stencil is evaluated at step `h` and `h/2` and combined so the
//! leading `O(h^2)` truncation term cancels.

use crate::linalg::Vector;

/// Values that can be combined linearly by the stencils below.
pub trait Linear: Copy {
    fn lin(a: f64, x: Self, b: f64, y: Self) -> Self;
}

impl Linear for f64 {
    #[inline]
    fn lin(a: f64, x: f64, b: f64, y: f64) -> f64 {
        a * x + b * y
    }
}

impl Linear for Vector {
    #[inline]
    fn lin(a: f64, x: Vector, b: f64, y: Vector) -> Vector {
        [a * x[0] + b * y[0], a * x[1] + b * y[1]]
    }
}

#[inline]
fn richardson<T: Linear>(coarse: T, fine: T) -> T {
    T::lin(4.0 / 3.0, fine, -1.0 / 3.0, coarse)
}

/// First derivative of `f` at `t = 0` along a parameter, i.e. `d/dt f(t)`.
pub fn first<T: Linear>(f: impl Fn(f64) -> T, h: f64) -> T {
    let stencil = |h: f64| T::lin(0.5 / h, f(h), -0.5 / h, f(-h));
    richardson(stencil(h), stencil(0.5 * h))
}

/// Second derivative of `f` at `t = 0`.
pub fn second<T: Linear>(f: impl Fn(f64) -> T, h: f64) -> T {
    let f0 = f(0.0);
    let stencil = |h: f64| {
        let ih2 = 1.0 / (h * h);
        let s = T::lin(1.0, f(h), 1.0, f(-h));
        T::lin(ih2, s, -2.0 * ih2, f0)
    };
    richardson(stencil(h), stencil(0.5 * h))
}

/// Mixed derivative `d^2/(ds dt) f(s, t)` at the origin with steps `hs`, `ht`.
pub fn mixed<T: Linear>(f: impl Fn(f64, f64) -> T, hs: f64, ht: f64) -> T {
    let stencil = |hs: f64, ht: f64| {
        let c = 0.25 / (hs * ht);
        let p = T::lin(1.0, f(hs, ht), 1.0, f(-hs, -ht));
        let m = T::lin(1.0, f(hs, -ht), 1.0, f(-hs, ht));
        T::lin(c, p, -c, m)
    };
    richardson(stencil(hs, ht), stencil(0.5 * hs, 0.5 * ht))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_exponential() {
        let d = first(|t| (0.3 + t).exp(), 1e-2);
        assert!((d - 0.3f64.exp()).abs() < 1e-10);
        let d2 = second(|t| (0.3 + t).exp(), 1e-2);
        assert!((d2 - 0.3f64.exp()).abs() < 1e-8);
        let m = mixed(|s, t| (0.2 + s).sin() * (0.7 + t).cos(), 1e-2, 1e-2);
        assert!((m + 0.2f64.cos() * 0.7f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn vector_valued() {
        let d: Vector = first(|t| [t * t + 2.0 * t, (3.0 * t).sin()], 1e-2);
        assert!((d[0] - 2.0).abs() < 1e-12);
        assert!((d[1] - 3.0).abs() < 1e-7);
    }
}
