//! Higher-order travelling fronts: W^s(P^{+,s}) of the perturbed slow flow
//! spirals around a persistent periodic orbit and meets the touch-down curve
//! repeatedly; each meeting is turned into a front by a self-consistency
//! iteration in c.

use super::{idown_point, FrontKind, FrontResult, TOUCHDOWN_BRANCH};
use crate::error::{numerical, regime, Result};
use crate::fast::{c_of_w, w_fold, w_top};
use crate::numerics::ode::{integrate, locate_in_step, Control, OdeOptions};
use crate::numerics::roots::secant;
use crate::params::{derive_coeffs, ScaledParams};
use crate::slow::{rho1, saddle_point, slow_plus_field, slowplus_force_dw, slowplus_hamiltonian, SlowPlusState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WsCrossing {
    /// −1 for the branch leaving the saddle towards smaller w, +1 otherwise.
    pub branch: i8,
    pub w: f64,
    pub q: f64,
    /// Sign of d/dX (q − ℓ^u(w)) at the crossing, in forward X.
    pub orient: i8,
    /// Backward slow distance from the saddle neighbourhood.
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HigherFrontOptions {
    /// ε used in the friction term; defaults to the parameter set's ε.
    pub eps: Option<f64>,
    /// Backward integration length in X.
    pub x_span: f64,
    /// Reference speed for locating crossings; defaults to a primary speed.
    pub c_start: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// Offset from the saddle along its stable eigenvector.
    pub offset: f64,
}

impl Default for HigherFrontOptions {
    fn default() -> Self {
        HigherFrontOptions { eps: None, x_span: 4000.0, c_start: None, tol: 1e-11, max_iter: 100, offset: 1e-7 }
    }
}

/// Crossings of W^s(P^{+,s}) (perturbed flow at speed c) with ℓ^u, in the
/// order met by backward integration from the saddle.
pub fn ws_crossings(s: &ScaledParams, c: f64, eps: f64, x_span: f64, max_cross: usize, offset: f64) -> Result<Vec<WsCrossing>> {
    let k = derive_coeffs(s);
    let sd = saddle_point(&k).ok_or_else(|| regime("no saddle on M+"))?;
    let f = slow_plus_field(&k, s.theta, c, eps);
    let fr = eps * c * rho1(sd.w, &k, s.theta);
    let fp = slowplus_force_dw(sd.w, &k);
    let lam = 0.5 * (fr - (fr * fr + 4.0 * fp).sqrt());
    let r = s.phi.sqrt();
    let w0 = s.w_bare();
    let g = |x: &[f64; 2]| x[1] - r * (x[0] - w0);
    let (lo, hi) = (w_fold(s.a) * (1.0 + 1e-12), w_top(s.a));
    let opts = OdeOptions { rtol: 1e-11, atol: 1e-13, h_max: 0.5, max_steps: 5_000_000 };
    let mut out = Vec::new();
    for branch in [-1i8, 1] {
        let d = branch as f64 * offset * sd.w.max(1.0);
        let x0 = [sd.w + d, lam * d];
        let mut found = 0usize;
        let res = integrate(&f, 0.0, x0, -x_span, &opts, |st| {
            if st.x1[0] < lo || st.x1[0] > hi || !st.x1[1].is_finite() {
                return Control::Stop;
            }
            let (g0, g1) = (g(&st.x0), g(&st.x1));
            if g0 != 0.0 && g0.signum() != g1.signum() {
                let (t, x) = locate_in_step(&f, st, |_t, x| g(x));
                let dx = f(t, &x);
                let dg = dx[1] - r * dx[0];
                out.push(WsCrossing { branch, w: x[0], q: x[1], orient: dg.signum() as i8, x: -t });
                found += 1;
                if found >= max_cross {
                    return Control::Stop;
                }
            }
            Control::Continue
        });
        res.map_err(|e| numerical(format!("W^s integration: {e}")))?;
    }
    Ok(out)
}

/// Crossings of one family (branch, orientation), in order.
fn family(cr: &[WsCrossing], branch: i8, orient: i8) -> Vec<WsCrossing> {
    cr.iter().filter(|x| x.branch == branch && x.orient == orient).copied().collect()
}

/// Orientations of the left-branch families: (j = 1, j = 2). Family 1 is
/// the one whose first crossing has the smaller w, i.e. the larger speed.
fn family_orientations(cr: &[WsCrossing]) -> Option<(i8, i8)> {
    let a = family(cr, -1, 1).first().copied();
    let b = family(cr, -1, -1).first().copied();
    match (a, b) {
        (Some(a), Some(b)) => Some(if a.w < b.w { (1, -1) } else { (-1, 1) }),
        (Some(_), None) => Some((1, -1)),
        (None, Some(_)) => Some((-1, 1)),
        _ => None,
    }
}

fn touchdown_speed(w: f64, a: f64) -> f64 {
    c_of_w(w, a, TOUCHDOWN_BRANCH).unwrap_or(f64::NAN)
}

/// Solve c = c⁻(w_m(c)) for the m-th crossing of a family.
fn self_consistent(s: &ScaledParams, branch: i8, orient: i8, m: usize, c0: f64, eps: f64, o: &HigherFrontOptions) -> Result<(f64, WsCrossing)> {
    let cross_at = |c: f64| -> Option<WsCrossing> {
        let cr = ws_crossings(s, c, eps, o.x_span, 2 * m + 4, o.offset).ok()?;
        family(&cr, branch, orient).get(m).copied()
    };
    let map = |c: f64| cross_at(c).map(|x| touchdown_speed(x.w, s.a));
    let mut c = c0;
    let mut prev = c0;
    for _ in 0..o.max_iter {
        let Some(next) = map(c) else { break };
        if (next - c).abs() <= o.tol * (1.0 + c.abs()) {
            let x = cross_at(next).ok_or_else(|| numerical("crossing vanished at the fixed point"))?;
            return Ok((next, x));
        }
        prev = c;
        c = 0.5 * c + 0.5 * next;
    }
    // fall back to a secant solve of c⁻(w_m(c)) − c from the last iterates
    let h = |c: f64| map(c).map(|v| v - c).unwrap_or(f64::NAN);
    let c1 = if (c - prev).abs() > 0.0 { prev } else { c + 1e-6 };
    let root = secant(h, c1, c, o.tol, 60)?;
    let x = cross_at(root).ok_or_else(|| numerical("self-consistency iteration did not converge"))?;
    if (touchdown_speed(x.w, s.a) - root).abs() > 1e-8 * (1.0 + root.abs()) {
        return Err(numerical("self-consistency iteration did not converge"));
    }
    Ok((root, x))
}

fn front_from(s: &ScaledParams, c: f64, x: &WsCrossing, kind: FrontKind) -> Result<FrontResult> {
    let k = derive_coeffs(s);
    let t = idown_point(c, s)?;
    let h = slowplus_hamiltonian(SlowPlusState { w: t.w, q: t.q }, &k)?;
    Ok(FrontResult { kind, c, touchdown: t, h_level: h, residual: touchdown_speed(x.w, s.a) - c, degenerate: false })
}

fn reference_speed(s: &ScaledParams, o: &HigherFrontOptions) -> Result<f64> {
    if let Some(c) = o.c_start {
        return Ok(c);
    }
    let prim = super::find_primary_fronts(s)?;
    if !prim.is_empty() {
        return Ok(prim.iter().map(|f| f.c).sum::<f64>() / prim.len() as f64);
    }
    let k = derive_coeffs(s);
    let sd = saddle_point(&k).ok_or_else(|| regime("no saddle on M+"))?;
    Ok(touchdown_speed(sd.w, s.a))
}

/// Fronts of family j (1 or 2) on the spiralling branch of W^s, for
/// k = 0..=k_max (k = 0 is the primary front of that family). The list
/// stops at the first k whose crossing does not exist or does not converge.
pub fn count_higher_fronts(s: &ScaledParams, j: usize, k_max: usize, o: &HigherFrontOptions) -> Result<Vec<FrontResult>> {
    if !(j == 1 || j == 2) {
        return Err(crate::error::domain("family index j must be 1 or 2"));
    }
    let eps = o.eps.unwrap_or(s.eps);
    let c_ref = reference_speed(s, o)?;
    let cr = ws_crossings(s, c_ref, eps, o.x_span, 2 * k_max + 4, o.offset)?;
    let Some((o1, o2)) = family_orientations(&cr) else { return Ok(Vec::new()) };
    let orient = if j == 1 { o1 } else { o2 };
    let fam = family(&cr, -1, orient);
    let mut out: Vec<FrontResult> = Vec::new();
    if fam.is_empty() {
        return Ok(out);
    }
    for m in 0..=k_max.min(fam.len() - 1) {
        let c0 = out.last().map(|f| f.c).unwrap_or_else(|| touchdown_speed(fam[m].w, s.a));
        let c0 = if m == 0 { touchdown_speed(fam[m].w, s.a) } else { 0.5 * (c0 + touchdown_speed(fam[m].w, s.a)) };
        match self_consistent(s, -1, orient, m, c0, eps, o) {
            Ok((c, x)) => {
                let kind = if m == 0 { FrontKind::Primary } else { FrontKind::HigherOrder(m) };
                out.push(front_from(s, c, &x, kind)?);
            }
            Err(_) => break,
        }
    }
    Ok(out)
}

/// All self-consistent fronts from both branches of W^s with up to `k_max`
/// windings per family, deduplicated in c and sorted.
pub fn all_self_consistent_fronts(s: &ScaledParams, k_max: usize, o: &HigherFrontOptions) -> Result<Vec<FrontResult>> {
    let eps = o.eps.unwrap_or(s.eps);
    let c_ref = reference_speed(s, o)?;
    let cr = ws_crossings(s, c_ref, eps, o.x_span, 2 * k_max + 4, o.offset)?;
    let mut out: Vec<FrontResult> = Vec::new();
    for branch in [-1i8, 1] {
        for orient in [-1i8, 1] {
            let fam = family(&cr, branch, orient);
            if fam.is_empty() {
                continue;
            }
            for m in 0..=k_max.min(fam.len() - 1) {
                let c0 = touchdown_speed(fam[m].w, s.a);
                if let Ok((c, x)) = self_consistent(s, branch, orient, m, c0, eps, o) {
                    if out.iter().all(|f| (f.c - c).abs() > 1e-8 * (1.0 + c.abs())) {
                        let kind = if m == 0 { FrontKind::Primary } else { FrontKind::HigherOrder(m) };
                        out.push(front_from(s, c, &x, kind)?);
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a.c.partial_cmp(&b.c).unwrap());
    Ok(out)
}
