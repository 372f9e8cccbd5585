//! Singular skeletons of stationary (c = 0) multi-front patterns.

use crate::error::{domain, regime, Result};
use crate::fast::{w_fold, w_stationary, w_top};
use crate::numerics::quad::GaussLegendre;
use crate::numerics::roots::brent;
use crate::params::{derive_coeffs, ScaledParams, SlowPlusCoeffs};
use crate::numerics::ode::{integrate, Control, OdeOptions};
use crate::slow::{level_radicand, potential, saddle_point, slow_plus_field, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlowManifold {
    M0,
    Mplus,
}

/// `Up` jumps from M⁰ to M⁺ (b rises), `Down` from M⁺ to M⁰.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SkeletonSegment {
    Slow {
        manifold: SlowManifold,
        h_level: f64,
        start: (f64, f64),
        end: (f64, f64),
        /// Full circuits of a closed level curve inserted into this arc.
        winding: usize,
        /// Slow length X; infinite for arcs leaving or reaching a critical point.
        length: f64,
    },
    Jump {
        direction: JumpDirection,
        w: f64,
        q: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSkeleton {
    pub segments: Vec<SkeletonSegment>,
    pub closed: bool,
    /// Sum of slow lengths for periodic skeletons.
    pub period: Option<f64>,
}

impl OrbitSkeleton {
    /// Largest (w, q) gap between consecutive segment ends.
    pub fn closure_defect(&self) -> f64 {
        let ends: Vec<((f64, f64), (f64, f64))> = self
            .segments
            .iter()
            .map(|s| match *s {
                SkeletonSegment::Slow { start, end, .. } => (start, end),
                SkeletonSegment::Jump { w, q, .. } => ((w, q), (w, q)),
            })
            .collect();
        let mut worst: f64 = 0.0;
        let n = ends.len();
        let pairs = if self.closed { n } else { n.saturating_sub(1) };
        for i in 0..pairs {
            let a = ends[i].1;
            let b = ends[(i + 1) % n].0;
            worst = worst.max((a.0 - b.0).abs().max((a.1 - b.1).abs()));
        }
        worst
    }

    /// The same skeleton traversed backwards.
    pub fn reversed(&self) -> OrbitSkeleton {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|seg| match *seg {
                SkeletonSegment::Slow { manifold, h_level, start, end, winding, length } => {
                    SkeletonSegment::Slow { manifold, h_level, start: end, end: start, winding, length }
                }
                SkeletonSegment::Jump { direction, w, q } => SkeletonSegment::Jump {
                    direction: match direction {
                        JumpDirection::Up => JumpDirection::Down,
                        JumpDirection::Down => JumpDirection::Up,
                    },
                    w,
                    q,
                },
            })
            .collect();
        OrbitSkeleton { segments, closed: self.closed, period: self.period }
    }

    /// Slow segments and their lengths, in order.
    pub fn slow_lengths(&self) -> Vec<f64> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                SkeletonSegment::Slow { length, .. } => Some(*length),
                _ => None,
            })
            .collect()
    }

    /// Samples (X, w, q, on M⁺) along the skeleton; infinite arcs are cut to
    /// `tail` slow units. X starts at 0 at the first sample.
    pub fn sample(&self, s: &ScaledParams, tail: f64, dx: f64) -> Result<Vec<(f64, f64, f64, bool)>> {
        let k = derive_coeffs(s);
        let w0 = s.w_bare();
        let r = s.phi.sqrt();
        let mut out: Vec<(f64, f64, f64, bool)> = Vec::new();
        let mut x0 = 0.0;
        for (idx, seg) in self.segments.iter().enumerate() {
            let SkeletonSegment::Slow { manifold, start, end, length, .. } = *seg else { continue };
            let len = if length.is_finite() { length } else { tail };
            let n = ((len / dx).ceil() as usize).max(2);
            let pts: Vec<(f64, f64, f64)> = match manifold {
                SlowManifold::M0 => {
                    if length.is_finite() {
                        // w = w0 + A cosh(√Φ(X − len/2))
                        let amp = m0_amplitude(start.0, start.1, w0, r);
                        (0..=n)
                            .map(|i| {
                                let x = len * i as f64 / n as f64;
                                let z = r * (x - 0.5 * len);
                                (x, w0 + amp * z.cosh(), amp * r * z.sinh())
                            })
                            .collect()
                    } else if idx == 0 {
                        // leaving P⁰ along ℓ^u, arriving at `end` after `tail`
                        (0..=n)
                            .map(|i| {
                                let x = len * i as f64 / n as f64;
                                let d = (end.0 - w0) * (r * (x - len)).exp();
                                (x, w0 + d, r * d)
                            })
                            .collect()
                    } else {
                        (0..=n)
                            .map(|i| {
                                let x = len * i as f64 / n as f64;
                                let d = (start.0 - w0) * (-r * x).exp();
                                (x, w0 + d, -r * d)
                            })
                            .collect()
                    }
                }
                SlowManifold::Mplus => {
                    let (from, dir) = if !length.is_finite() && idx == 0 { (end, Direction::Backward) } else { (start, Direction::Forward) };
                    let f = slow_plus_field(&k, s.theta, 0.0, 0.0);
                    let t_end = if dir == Direction::Backward { -len } else { len };
                    let opts = OdeOptions { h_max: dx, ..Default::default() };
                    let mut rows: Vec<(f64, f64, f64)> = vec![(0.0, from.0, from.1)];
                    integrate(&f, 0.0, [from.0, from.1], t_end, &opts, |st| {
                        rows.push((st.t1.abs(), st.x1[0], st.x1[1]));
                        Control::Continue
                    })?;
                    if dir == Direction::Backward {
                        rows.reverse();
                        let xm = rows[0].0;
                        for r in rows.iter_mut() {
                            r.0 = xm - r.0;
                        }
                    }
                    resample(&rows, dx)
                }
            };
            let on_plus = manifold == SlowManifold::Mplus;
            for (i, p) in pts.iter().enumerate() {
                if i == 0 && !out.is_empty() {
                    continue;
                }
                out.push((x0 + p.0, p.1, p.2, on_plus));
            }
            x0 += pts.last().map(|p| p.0).unwrap_or(0.0);
        }
        Ok(out)
    }
}

fn resample(rows: &[(f64, f64, f64)], dx: f64) -> Vec<(f64, f64, f64)> {
    let len = rows.last().map(|r| r.0).unwrap_or(0.0);
    let n = ((len / dx).ceil() as usize).max(1);
    let mut out = Vec::with_capacity(n + 1);
    let mut j = 0;
    for i in 0..=n {
        let x = len * i as f64 / n as f64;
        while j + 2 < rows.len() && rows[j + 1].0 < x {
            j += 1;
        }
        let (a, b) = (rows[j], rows[(j + 1).min(rows.len() - 1)]);
        let t = if b.0 > a.0 { ((x - a.0) / (b.0 - a.0)).clamp(0.0, 1.0) } else { 0.0 };
        out.push((x, a.1 + t * (b.1 - a.1), a.2 + t * (b.2 - a.2)));
    }
    out
}

fn hplus(w: f64, q: f64, k: &SlowPlusCoeffs) -> f64 {
    0.5 * q * q + potential(w, k).unwrap_or(f64::NAN)
}

/// Amplitude A of the M⁰ arc w = w0 + A cosh(√Φ X) through (w, q).
fn m0_amplitude(w: f64, q: f64, w0: f64, r: f64) -> f64 {
    let d = w - w0;
    d.signum() * (d * d - q * q / (r * r)).max(0.0).sqrt()
}

/// Turning point reached from `w_start` moving in direction `dir` on level h.
fn turning_point(h: f64, k: &SlowPlusCoeffs, w_start: f64, dir: f64) -> Option<f64> {
    let r = |w: f64| level_radicand(w, h, k);
    let (lo, hi) = (w_fold(k.a), w_top(k.a));
    let mut w = w_start;
    for _ in 0..40000 {
        let next = (w * (1.0 + dir * 1e-3)).clamp(lo, hi);
        if r(next) <= 0.0 {
            return brent(r, w.min(next), w.max(next), 1e-15 * w, 200).ok();
        }
        if next == lo || next == hi {
            return None;
        }
        w = next;
    }
    None
}

/// ∫ dw/√R between a turning point `wt` (simple zero of R) and `w1`.
fn half_time(h: f64, k: &SlowPlusCoeffs, wt: f64, w1: f64) -> f64 {
    let gl = GaussLegendre::new(48);
    let sgn = (w1 - wt).signum();
    let span = (w1 - wt).abs().sqrt();
    gl.integrate_panels(
        |t| {
            let w = wt + sgn * t * t;
            2.0 * t / level_radicand(w, h, k).max(1e-300).sqrt()
        },
        0.0,
        span,
        8,
    )
}

/// Arc on M⁺ from (w1, q1) around its turning point back to (w1, −q1).
/// Returns (level, turning point, X-length).
fn mplus_return_arc(k: &SlowPlusCoeffs, w1: f64, q1: f64) -> Result<(f64, f64, f64)> {
    if q1 == 0.0 {
        return Err(regime("M+ arc: zero q at the jump level leaves no slow excursion"));
    }
    let h = hplus(w1, q1, k);
    let wt = turning_point(h, k, w1, q1.signum()).ok_or_else(|| {
        regime(format!("M+ arc: the level set through ({w1}, {q1}) leaves the vegetated window before turning"))
    })?;
    Ok((h, wt, 2.0 * half_time(h, k, wt, w1)))
}

/// Period of the closed level curve through (w1, q1), if it is closed.
fn closed_period(k: &SlowPlusCoeffs, w1: f64, q1: f64) -> Option<f64> {
    let h = hplus(w1, q1, k);
    let wl = turning_point(h, k, w1, -1.0)?;
    let wr = turning_point(h, k, w1, 1.0)?;
    let mid = 0.5 * (wl + wr);
    Some(2.0 * (half_time(h, k, wl, mid) + half_time(h, k, wr, mid)))
}

/// Slow length of the M⁰ arc from (w1, ρ) to (w1, −ρ), or why it fails.
fn m0_arc_length(s: &ScaledParams, w1: f64, rho: f64) -> Result<f64> {
    let w0 = s.w_bare();
    let r = s.phi.sqrt();
    if !(rho * (w0 - w1) > 0.0) {
        return Err(regime(format!("M0 arc: q = {rho} at w = {w1} moves away from the bare-soil level {w0}")));
    }
    if rho.abs() >= r * (w0 - w1).abs() {
        return Err(regime(format!("M0 arc: |q| = {} reaches the bare-soil saddle (needs < {})", rho.abs(), r * (w0 - w1).abs())));
    }
    let amp = m0_amplitude(w1, rho, w0, r);
    Ok(2.0 * ((w1 - w0) / amp).acosh() / r)
}

/// Stationary spot: ℓ^u, jump up at w = 9/(2+9a), an arc on M⁺ (plus
/// `winding − 1` full circuits), jump down, ℓ^s.
pub fn build_spot_skeleton(s: &ScaledParams, winding: usize) -> Result<OrbitSkeleton> {
    if winding == 0 {
        return Err(domain("winding counts from 1"));
    }
    let k = derive_coeffs(s);
    let w1 = w_stationary(s.a);
    let w0 = s.w_bare();
    let q1 = s.phi.sqrt() * (w1 - w0);
    let (h, _wt, mut len) = mplus_return_arc(&k, w1, q1)?;
    if winding > 1 {
        let t = closed_period(&k, w1, q1).ok_or_else(|| regime("extra windings need a closed level curve on M+"))?;
        len += (winding - 1) as f64 * t;
    }
    let segments = vec![
        SkeletonSegment::Slow { manifold: SlowManifold::M0, h_level: 0.0, start: (w0, 0.0), end: (w1, q1), winding: 0, length: f64::INFINITY },
        SkeletonSegment::Jump { direction: JumpDirection::Up, w: w1, q: q1 },
        SkeletonSegment::Slow { manifold: SlowManifold::Mplus, h_level: h, start: (w1, q1), end: (w1, -q1), winding: winding - 1, length: len },
        SkeletonSegment::Jump { direction: JumpDirection::Down, w: w1, q: -q1 },
        SkeletonSegment::Slow { manifold: SlowManifold::M0, h_level: 0.0, start: (w1, -q1), end: (w0, 0.0), winding: 0, length: f64::INFINITY },
    ];
    Ok(OrbitSkeleton { segments, closed: false, period: None })
}

/// Stationary gap: W^u(P^{+,s}) up to w = 9/(2+9a), jump down, a cosh arc on
/// M⁰, jump up, W^s(P^{+,s}).
pub fn build_gap_skeleton(s: &ScaledParams) -> Result<OrbitSkeleton> {
    let k = derive_coeffs(s);
    let sd = saddle_point(&k).ok_or_else(|| regime("gap skeleton: no saddle on M+"))?;
    let w1 = w_stationary(s.a);
    let r = |w: f64| level_radicand(w, sd.h_value, &k);
    if !(r(w1) > 0.0) {
        return Err(regime("gap skeleton: the saddle level set does not reach w = 9/(2+9a)"));
    }
    for i in 1..400 {
        let w = sd.w + (w1 - sd.w) * i as f64 / 400.0;
        if !(r(w) > 0.0) {
            return Err(regime("gap skeleton: W^u(P+,s) does not connect to w = 9/(2+9a)"));
        }
    }
    let qg = if w1 > sd.w { r(w1).sqrt() } else { -r(w1).sqrt() };
    let len0 = m0_arc_length(s, w1, qg)?;
    let w0 = s.w_bare();
    let segments = vec![
        SkeletonSegment::Slow { manifold: SlowManifold::Mplus, h_level: sd.h_value, start: (sd.w, 0.0), end: (w1, qg), winding: 0, length: f64::INFINITY },
        SkeletonSegment::Jump { direction: JumpDirection::Down, w: w1, q: qg },
        SkeletonSegment::Slow {
            manifold: SlowManifold::M0,
            h_level: 0.5 * qg * qg - 0.5 * s.phi * (w1 - w0).powi(2),
            start: (w1, qg),
            end: (w1, -qg),
            winding: 0,
            length: len0,
        },
        SkeletonSegment::Jump { direction: JumpDirection::Up, w: w1, q: -qg },
        SkeletonSegment::Slow { manifold: SlowManifold::Mplus, h_level: sd.h_value, start: (w1, -qg), end: (sd.w, 0.0), winding: 0, length: f64::INFINITY },
    ];
    Ok(OrbitSkeleton { segments, closed: false, period: None })
}

/// Stationary periodic pattern: M⁰ arc from (w₁, ρ) to (w₁, −ρ), jump up,
/// M⁺ arc back to (w₁, ρ) (plus `winding − 1` circuits), jump down.
pub fn build_periodic_skeleton(s: &ScaledParams, rho: f64, winding: usize) -> Result<OrbitSkeleton> {
    if rho == 0.0 {
        return Err(domain("rho must be nonzero"));
    }
    if winding == 0 {
        return Err(domain("winding counts from 1"));
    }
    let w1 = w_stationary(s.a);
    let w0 = s.w_bare();
    if rho * (w0 - w1) < 0.0 {
        return Ok(build_periodic_skeleton(s, -rho, winding)?.reversed());
    }
    let k = derive_coeffs(s);
    let len0 = m0_arc_length(s, w1, rho)?;
    let (h, _wt, mut len1) = mplus_return_arc(&k, w1, -rho)?;
    if winding > 1 {
        let t = closed_period(&k, w1, -rho).ok_or_else(|| regime("M+ arc: extra windings need a closed level curve"))?;
        len1 += (winding - 1) as f64 * t;
    }
    let segments = vec![
        SkeletonSegment::Slow {
            manifold: SlowManifold::M0,
            h_level: 0.5 * rho * rho - 0.5 * s.phi * (w1 - w0).powi(2),
            start: (w1, rho),
            end: (w1, -rho),
            winding: 0,
            length: len0,
        },
        SkeletonSegment::Jump { direction: JumpDirection::Up, w: w1, q: -rho },
        SkeletonSegment::Slow { manifold: SlowManifold::Mplus, h_level: h, start: (w1, -rho), end: (w1, rho), winding: winding - 1, length: len1 },
        SkeletonSegment::Jump { direction: JumpDirection::Down, w: w1, q: rho },
    ];
    Ok(OrbitSkeleton { segments, closed: true, period: Some(len0 + len1) })
}

/// Largest interval of ρ (same sign as w0 − w₁) on which the periodic
/// skeleton exists, from a scan of `n` points.
pub fn periodic_rho_interval(s: &ScaledParams, n: usize) -> Option<(f64, f64)> {
    let w1 = w_stationary(s.a);
    let d = s.w_bare() - w1;
    let rmax = s.phi.sqrt() * d.abs();
    let ok: Vec<(f64, bool)> = (1..n)
        .map(|i| {
            let rho = d.signum() * rmax * i as f64 / n as f64;
            (rho, build_periodic_skeleton(s, rho, 1).is_ok())
        })
        .collect();
    let mut best: Option<(f64, f64)> = None;
    let mut cur: Option<(f64, f64)> = None;
    for (rho, good) in ok {
        if good {
            cur = Some(match cur {
                Some((a, _)) => (a, rho),
                None => (rho, rho),
            });
            if let Some((a, b)) = cur {
                if best.map(|(x, y)| (b - a).abs() > (y - x).abs()).unwrap_or(true) {
                    best = Some((a, b));
                }
            }
        } else {
            cur = None;
        }
    }
    best
}
