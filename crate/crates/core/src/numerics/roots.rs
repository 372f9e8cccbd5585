//! Scalar root finding.

use crate::error::{numerical, Result};

/// Brent's method on a bracketing interval.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(numerical(format!("brent: no sign change on [{a}, {b}] (f = {fa}, {fb})")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(numerical(format!("brent: non-finite value at {b}")));
        }
    }
    Err(numerical("brent: iteration budget exhausted"))
}

/// Plain bisection; slow but immune to pathological function shapes.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(numerical(format!("bisect: no sign change on [{a}, {b}]")));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Secant iteration from two starting points.
pub fn secant<F: FnMut(f64) -> f64>(mut f: F, x0: f64, x1: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let (mut xa, mut xb) = (x0, x1);
    let mut fa = f(xa);
    let mut fb = f(xb);
    for _ in 0..max_iter {
        if fb == 0.0 {
            return Ok(xb);
        }
        let denom = fb - fa;
        if denom == 0.0 || !denom.is_finite() {
            return Err(numerical("secant: flat secant"));
        }
        let xn = xb - fb * (xb - xa) / denom;
        if (xn - xb).abs() <= tol * (1.0 + xn.abs()) {
            return Ok(xn);
        }
        xa = xb;
        fa = fb;
        xb = xn;
        fb = f(xb);
        if !fb.is_finite() {
            return Err(numerical(format!("secant: non-finite value at {xb}")));
        }
    }
    Err(numerical("secant: iteration budget exhausted"))
}

/// Sample `f` on a uniform grid of `n` intervals and return sign-change brackets.
pub fn scan_brackets<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut x_prev = a;
    let mut f_prev = f(a);
    for i in 1..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        let fx = f(x);
        if f_prev.is_finite() && fx.is_finite() && (f_prev == 0.0 || f_prev.signum() != fx.signum()) {
            out.push((x_prev, x));
        }
        x_prev = x;
        f_prev = fx;
    }
    out
}
