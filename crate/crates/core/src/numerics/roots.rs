//! Bracketed root finding and unimodal minimisation.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: u32,
    /// Final bracket, `lo <= x <= hi`.
    pub lo: f64,
    pub hi: f64,
}

/// Brent's method on a sign-changing bracket `[a, b]`. Stops when the bracket
/// is narrower than `xtol` or an exact zero is hit.
pub fn brent<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: u32) -> Result<Root> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(Root { x: a, fx: 0.0, iterations: 0, lo: a, hi: a });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: 0.0, iterations: 0, lo: b, hi: b });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numeric {
            message: format!("no sign change on [{a}, {b}]"),
            estimate: b,
            error_estimate: (b - a).abs(),
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for it in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            let (lo, hi) = if b < c { (b, c) } else { (c, b) };
            return Ok(Root { x: b, fx: fb, iterations: it, lo, hi });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::Numeric {
        message: format!("root finder did not converge in {max_iter} iterations"),
        estimate: b,
        error_estimate: (c - b).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub fx: f64,
    pub iterations: u32,
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: u32) -> Result<Minimum> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut it = 0;
    while (b - a).abs() > xtol && it < max_iter {
        it += 1;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    let (x, fx) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    Ok(Minimum { x, fx, iterations: it })
}
