//! Adaptive Dormand–Prince 5(4) integrator over fixed-size states.
//!
//! The driver hands every accepted step to a monitor closure, which may stop
//! the integration. Events are located inside a step by re-integrating a
//! partial step from its left end, so located states carry the full
//! 5th-order accuracy rather than an interpolant's.

use crate::error::{numerical, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

/// What the monitor wants after seeing a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// An accepted step `t0 -> t1`.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub x0: [f64; N],
    pub t1: f64,
    pub x1: [f64; N],
}

#[derive(Debug, Clone, Copy)]
pub struct OdeEnd<const N: usize> {
    pub t: f64,
    pub x: [f64; N],
    pub steps: usize,
    /// True when the monitor asked to stop before `t_end`.
    pub stopped: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn comb<const N: usize>(x: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *x;
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One Dormand–Prince step. Returns (5th order solution, error estimate, f at the new point).
fn dopri_step<const N: usize, F>(f: &F, t: f64, x: &[f64; N], k1: &[f64; N], h: f64) -> ([f64; N], [f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(t + C2 * h, &comb(x, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &comb(x, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &comb(x, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(t + C5 * h, &comb(x, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(t + h, &comb(x, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let x_new = comb(x, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &x_new);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (x_new, err, k7)
}

/// Advance `x` from `t` by a single (unchecked) step of size `h`.
pub fn substep<const N: usize, F>(f: &F, t: f64, x: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if h == 0.0 {
        return *x;
    }
    let k1 = f(t, x);
    dopri_step(f, t, x, &k1, h).0
}

fn err_norm<const N: usize>(err: &[f64; N], x0: &[f64; N], x1: &[f64; N], o: &OdeOptions) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * x0[i].abs().max(x1[i].abs());
        s += (err[i] / sc).powi(2);
    }
    (s / N as f64).sqrt()
}

/// Integrate `x' = f(t, x)` from `t0` to `t_end` (either direction).
pub fn integrate<const N: usize, F, M>(
    f: F,
    t0: f64,
    x0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut monitor: M,
) -> Result<OdeEnd<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    M: FnMut(&Step<N>) -> Control,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut x = x0;
    if span == 0.0 {
        return Ok(OdeEnd { t, x, steps: 0, stopped: false });
    }
    let mut k1 = f(t, &x);
    if k1.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(numerical(format!("non-finite initial state at t = {t}")));
    }
    // Starting step from the size of the derivative relative to the tolerance scale.
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * x[i].abs();
        d0 += (x[i] / sc).powi(2);
        d1 += (k1[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span).min(opts.h_max).max(1e-12 * span.max(1.0));
    let mut steps = 0usize;
    let mut rejects_in_row = 0usize;
    loop {
        let remaining = (t_end - t).abs();
        if remaining <= 1e-14 * t_end.abs().max(1.0) {
            return Ok(OdeEnd { t: t_end, x, steps, stopped: false });
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let (x_new, err, k7) = dopri_step(&f, t, &x, &k1, dir * h);
        let en = err_norm(&err, &x, &x_new, opts);
        if !en.is_finite() || x_new.iter().any(|v| !v.is_finite()) {
            rejects_in_row += 1;
            h *= 0.1;
            if rejects_in_row > 60 || h < 1e-15 * t.abs().max(1.0) {
                return Err(numerical(format!("step size underflow near t = {t}")));
            }
            continue;
        }
        if en <= 1.0 {
            let t_new = if last { t_end } else { t + dir * h };
            let st = Step { t0: t, x0: x, t1: t_new, x1: x_new };
            t = t_new;
            x = x_new;
            k1 = k7;
            steps += 1;
            rejects_in_row = 0;
            if monitor(&st) == Control::Stop {
                return Ok(OdeEnd { t, x, steps, stopped: true });
            }
            if last {
                return Ok(OdeEnd { t, x, steps, stopped: false });
            }
            if steps >= opts.max_steps {
                return Err(numerical(format!("step budget {} exhausted at t = {t}", opts.max_steps)));
            }
            let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(opts.h_max);
        } else {
            rejects_in_row += 1;
            let fac = (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
            h *= fac;
            if rejects_in_row > 60 || h < 1e-15 * t.abs().max(1.0) {
                return Err(numerical(format!("step size underflow near t = {t}")));
            }
        }
    }
}

/// Locate a sign change of `g` inside an accepted step. The caller must have
/// checked that `g` changes sign between the step ends.
pub fn locate_in_step<const N: usize, F, G>(f: &F, st: &Step<N>, g: G) -> (f64, [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: Fn(f64, &[f64; N]) -> f64,
{
    let h = st.t1 - st.t0;
    let eval = |theta: f64| {
        let x = substep(f, st.t0, &st.x0, theta * h);
        (g(st.t0 + theta * h, &x), x)
    };
    let g0 = g(st.t0, &st.x0);
    let g1 = g(st.t1, &st.x1);
    if g0 == 0.0 {
        return (st.t0, st.x0);
    }
    if g1 == 0.0 {
        return (st.t1, st.x1);
    }
    let root = crate::numerics::roots::brent(|th| eval(th).0, 0.0, 1.0, 1e-15, 200)
        .unwrap_or_else(|_| g0 / (g0 - g1));
    let x = eval(root).1;
    (st.t0 + root * h, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_full_period() {
        let f = |_t: f64, x: &[f64; 2]| [x[1], -x[0]];
        let end = integrate(f, 0.0, [1.0, 0.0], 2.0 * std::f64::consts::PI, &OdeOptions::default(), |_| Control::Continue).unwrap();
        assert!((end.x[0] - 1.0).abs() < 1e-9);
        assert!(end.x[1].abs() < 1e-9);
    }

    #[test]
    fn backward_exponential() {
        let f = |_t: f64, x: &[f64; 1]| [x[0]];
        let end = integrate(f, 1.0, [1.0], 0.0, &OdeOptions::default(), |_| Control::Continue).unwrap();
        assert!((end.x[0] - (-1.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn event_location_on_decay() {
        let f = |_t: f64, x: &[f64; 1]| [-x[0]];
        let mut hit = None;
        integrate(f, 0.0, [1.0], 5.0, &OdeOptions::default(), |st| {
            if (st.x0[0] - 0.25) * (st.x1[0] - 0.25) <= 0.0 {
                hit = Some(locate_in_step(&f, st, |_t, x| x[0] - 0.25));
                Control::Stop
            } else {
                Control::Continue
            }
        })
        .unwrap();
        let (t, _) = hit.unwrap();
        assert!((t - 4f64.ln()).abs() < 1e-10);
    }
}
