//! Gluing slow arcs and fast jumps into fronts, spots, gaps and periodic
//! skeletons, plus a finite-ε refinement of front speeds.
//!
//! Jumps from bare soil onto M⁺ use the ascending heteroclinic family
//! ([`Branch::Minus`]); its touch-down level is w_h⁻(c).

mod higher;
mod shoot;
mod skeleton;

pub use higher::{all_self_consistent_fronts, count_higher_fronts, ws_crossings, HigherFrontOptions, WsCrossing};
pub use shoot::{refine_spot, shoot_4d, shoot_4d_with, ShootKind, ShootOptions, ShootProfile, SpotRefined};
pub use skeleton::{
    build_gap_skeleton, build_periodic_skeleton, build_spot_skeleton, periodic_rho_interval, JumpDirection, OrbitSkeleton, SlowManifold,
    SkeletonSegment,
};

use crate::error::{domain, regime, Result};
use crate::fast::{c_of_w, c_range, w_fold, w_stationary, w_top, wh_of_c, Branch};
use crate::numerics::roots::brent;
use crate::params::{chi_of, freeze_family, freeze_family_extended, ScaledParams, SlowPlusCoeffs};
use crate::slow::{
    critical_points_mplus, homoclinic_turning_point, level_radicand, periodic_turning_points, potential, saddle_point, slowplus_force,
    CriticalPointMPlus, PointKind,
};
use crate::params::derive_coeffs;

/// Branch of the fast heteroclinic used for bare soil → vegetation jumps.
pub const TOUCHDOWN_BRANCH: Branch = Branch::Minus;

/// Transversality threshold for intersections of the touch-down curve with a level set.
pub const TRANSVERSALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchdownPoint {
    pub c: f64,
    pub w: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrontKind {
    Primary,
    HigherOrder(usize),
    ToPeriodic,
    Stationary,
    ShootingRefined,
}

impl FrontKind {
    pub fn label(&self) -> String {
        match self {
            FrontKind::Primary => "primary".into(),
            FrontKind::HigherOrder(k) => format!("higher_order_{k}"),
            FrontKind::ToPeriodic => "to_periodic".into(),
            FrontKind::Stationary => "stationary".into(),
            FrontKind::ShootingRefined => "shooting_refined".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontResult {
    pub kind: FrontKind,
    pub c: f64,
    pub touchdown: TouchdownPoint,
    pub h_level: f64,
    pub residual: f64,
    /// Intersection is (numerically) tangential.
    pub degenerate: bool,
}

/// Speeds for which the touch-down level lies in the vegetated window.
pub fn idown_c_range(a: f64) -> (f64, f64) {
    c_range(a, TOUCHDOWN_BRANCH)
}

/// Touch-down point of W^u(P⁰) on M⁺ at leading order: w = w_h⁻(c) on the
/// unstable line ℓ^u of the bare-soil state.
pub fn idown_point(c: f64, s: &ScaledParams) -> Result<TouchdownPoint> {
    let w = wh_of_c(c, s.a, TOUCHDOWN_BRANCH)?;
    let q = s.phi.sqrt() * (w - s.w_bare());
    Ok(TouchdownPoint { c, w, q })
}

/// Touch-down point parameterised by its water level instead of its speed.
pub fn idown_point_at_w(w: f64, s: &ScaledParams) -> Result<TouchdownPoint> {
    let c = c_of_w(w, s.a, TOUCHDOWN_BRANCH).ok_or_else(|| domain(format!("w = {w} below the fold")))?;
    Ok(TouchdownPoint { c, w, q: s.phi.sqrt() * (w - s.w_bare()) })
}

fn hamiltonian(w: f64, q: f64, k: &SlowPlusCoeffs) -> f64 {
    0.5 * q * q + potential(w, k).unwrap_or(f64::NAN)
}

/// |sin| of the angle between the touch-down line and the level set through (w, q).
fn transversality(w: f64, q: f64, k: &SlowPlusCoeffs, s: &ScaledParams) -> f64 {
    let f = slowplus_force(w, k);
    let r = s.phi.sqrt();
    (q * r - f).abs() / ((f * f + q * q).sqrt() * (1.0 + r * r).sqrt()).max(1e-300)
}

/// The stable manifold of the M⁺ saddle at ε = 0 as a subset of its level set.
#[derive(Debug, Clone, Copy)]
pub struct StableManifold {
    pub saddle: CriticalPointMPlus,
    /// Inner turning point when the level set closes into a homoclinic loop.
    pub loop_inner: Option<f64>,
}

impl StableManifold {
    pub fn of(k: &SlowPlusCoeffs) -> Result<Self> {
        let saddle = saddle_point(k).ok_or_else(|| regime("no saddle on M+"))?;
        let has_center = critical_points_mplus(k).iter().any(|p| p.kind == PointKind::Center && p.w < saddle.w);
        let loop_inner = if has_center { homoclinic_turning_point(k).ok() } else { None };
        Ok(StableManifold { saddle, loop_inner })
    }

    /// q on W^s over w, per branch: the right branch has q < 0, the left
    /// branch q > 0 (and, on a homoclinic loop, both halves belong to it).
    pub fn q_branch(&self, w: f64, k: &SlowPlusCoeffs) -> f64 {
        let r = level_radicand(w, self.saddle.h_value, k).max(0.0).sqrt();
        if w >= self.saddle.w {
            -r
        } else {
            r
        }
    }

    /// Is a point of the saddle level set on W^s?
    pub fn contains(&self, w: f64, q: f64) -> bool {
        let ws = self.saddle.w;
        if w > ws {
            q <= 0.0
        } else {
            match self.loop_inner {
                Some(lo) => w >= lo * (1.0 - 1e-12),
                None => q >= 0.0,
            }
        }
    }
}

/// Roots in c of ℋ₀⁺(I_down(c)) − h for the touch-down points satisfying `accept`.
fn touchdown_level_roots<A: Fn(f64, f64) -> bool>(s: &ScaledParams, k: &SlowPlusCoeffs, h: f64, w_lo: f64, w_hi: f64, accept: A, kind: FrontKind) -> Vec<FrontResult> {
    let n = 4000;
    let lo = w_lo.max(w_fold(s.a) * (1.0 + 1e-12));
    let hi = w_hi.min(w_top(s.a));
    if !(hi > lo) {
        return Vec::new();
    }
    let g_of_w = |w: f64| {
        let q = s.phi.sqrt() * (w - s.w_bare());
        hamiltonian(w, q, k) - h
    };
    let g_of_c = |c: f64| match idown_point(c, s) {
        Ok(t) => hamiltonian(t.w, t.q, k) - h,
        Err(_) => f64::NAN,
    };
    let scale = 1.0 + h.abs();
    let mut out: Vec<FrontResult> = Vec::new();
    let mut push = |w: f64| {
        let Ok(t) = idown_point_at_w(w, s) else { return };
        let residual = hamiltonian(t.w, t.q, k) - h;
        if !accept(t.w, t.q) || residual.abs() > 1e-8 * scale {
            return;
        }
        let tr = transversality(t.w, t.q, k, s);
        if out.iter().any(|f| (f.c - t.c).abs() < 1e-10 * (1.0 + t.c.abs())) {
            return;
        }
        out.push(FrontResult { kind, c: t.c, touchdown: t, h_level: h, residual, degenerate: tr < TRANSVERSALITY_TOL });
    };
    // the scan runs in w (uniform in the geometry); roots are polished in c
    let ws: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let gs: Vec<f64> = ws.iter().map(|&w| g_of_w(w)).collect();
    for i in 0..n {
        let (g0, g1) = (gs[i], gs[i + 1]);
        if g0 == 0.0 {
            push(ws[i]);
        } else if g0 * g1 < 0.0 {
            let (c0, c1) = (c_of_w(ws[i], s.a, TOUCHDOWN_BRANCH), c_of_w(ws[i + 1], s.a, TOUCHDOWN_BRANCH));
            let w = match (c0, c1) {
                (Some(c0), Some(c1)) => brent(g_of_c, c0.min(c1), c0.max(c1), 1e-15 * (1.0 + c0.abs()), 200)
                    .and_then(|c| wh_of_c(c, s.a, TOUCHDOWN_BRANCH))
                    .or_else(|_| brent(g_of_w, ws[i], ws[i + 1], 1e-15 * ws[i], 200)),
                _ => brent(g_of_w, ws[i], ws[i + 1], 1e-15 * ws[i], 200),
            };
            if let Ok(w) = w {
                push(w);
            }
        } else if i > 0 && (gs[i] - gs[i - 1]) * (g1 - g0) < 0.0 && g0.abs() < 1e-6 * scale {
            // near-tangency: a local extremum of g grazing zero
            push(ws[i]);
        }
    }
    out.sort_by(|a, b| a.c.partial_cmp(&b.c).unwrap());
    out
}

/// Primary fronts P⁰ → P^{+,s}: intersections of the touch-down curve with
/// W^s(P^{+,s}) of the unperturbed flow on M⁺, ordered by speed.
pub fn find_primary_fronts(s: &ScaledParams) -> Result<Vec<FrontResult>> {
    let k = derive_coeffs(s);
    let m = StableManifold::of(&k)?;
    let lo = m.loop_inner.unwrap_or(w_fold(s.a));
    Ok(touchdown_level_roots(s, &k, m.saddle.h_value, lo, w_top(s.a), |w, q| m.contains(w, q), FrontKind::Primary))
}

/// Fronts from P⁰ to the closed orbit on level `h` inside the homoclinic loop.
pub fn find_front_to_periodic(s: &ScaledParams, h: f64) -> Result<Vec<FrontResult>> {
    let k = derive_coeffs(s);
    let (lo, hi) = periodic_turning_points(h, &k)?;
    Ok(touchdown_level_roots(s, &k, h, lo, hi, |_, _| true, FrontKind::ToPeriodic))
}

/// A frozen slow flow on M⁺: (a, 𝒜, 𝒞, 𝒟) fixed while Φ varies.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenFamily {
    pub a: f64,
    pub A: f64,
    pub C: f64,
    pub D: f64,
}

impl FrozenFamily {
    pub fn coeffs(&self) -> SlowPlusCoeffs {
        SlowPlusCoeffs::from_frozen(self.a, self.A, self.C, self.D)
    }

    pub fn chi(&self) -> f64 {
        chi_of(self.a, self.A, self.C, self.D)
    }

    /// Admissible Φ (Ψ, Θ ≥ 0).
    pub fn phi_range(&self) -> (f64, f64) {
        let chi = self.chi();
        ((self.a * chi).max(0.0), self.a * (self.A + chi))
    }

    pub fn params(&self, phi: f64, eps: f64) -> Result<ScaledParams> {
        let (psi, theta, omega) = freeze_family(phi, self.a, self.A, self.C, self.D)?;
        ScaledParams::new(self.a, psi, phi, omega, theta, eps)
    }

    /// Φ range of the continuation past Θ = 0 (Ψ ≥ 0 only).
    pub fn phi_range_extended(&self) -> (f64, f64) {
        ((self.a * self.chi()).max(0.0), f64::INFINITY)
    }

    /// Member of the continued family; Θ may be negative.
    pub fn params_extended(&self, phi: f64, eps: f64) -> Result<ScaledParams> {
        let (psi, theta, omega) = freeze_family_extended(phi, self.a, self.A, self.C, self.D)?;
        ScaledParams::new_signed_theta(self.a, psi, phi, omega, theta, eps)
    }

    /// q-coordinate of the stationary touch-down point, √Φ(χ/Φ − 2/(a(2+9a))).
    pub fn q_stationary(&self, phi: f64) -> f64 {
        phi.sqrt() * (self.chi() / phi - 2.0 / (self.a * (2.0 + 9.0 * self.a)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryResidual {
    pub residual: f64,
    /// Number of stationary-front values of Φ the case analysis predicts.
    pub expected_roots: usize,
}

/// Predicted number of Φ values carrying a stationary front P⁰ → P^{+,s}.
pub fn stationary_expected_roots(fam: &FrozenFamily) -> usize {
    let k = fam.coeffs();
    let Ok(m) = StableManifold::of(&k) else { return 0 };
    let w_sd = w_stationary(fam.a);
    let chi = fam.chi();
    let single = !critical_points_mplus(&k).iter().any(|p| p.kind == PointKind::Center);
    if single {
        if chi > 0.0 {
            return 1;
        }
        if m.saddle.w < w_sd {
            // q_sd is bounded above by its maximum −2√(−χ·2/(a(2+9a))) when χ < 0
            let q_max = -2.0 * (-chi * 2.0 / (fam.a * (2.0 + 9.0 * fam.a))).sqrt();
            let h = hamiltonian(w_sd, q_max, &k);
            if h < m.saddle.h_value {
                return 2;
            }
        }
        0
    } else {
        match m.loop_inner {
            Some(lo) if lo < w_sd && w_sd < m.saddle.w => 2,
            _ if w_sd > m.saddle.w => 1,
            _ => 0,
        }
    }
}

/// ℋ₀⁺(w_sd, q_sd(Φ)) − ℋ₀^{+,s} along a frozen family; zeros (on the right
/// branch of W^s) are the stationary-front values of Φ.
pub fn stationary_front_residual(phi: f64, fam: &FrozenFamily) -> Result<StationaryResidual> {
    let k = fam.coeffs();
    let m = StableManifold::of(&k)?;
    let w_sd = w_stationary(fam.a);
    let residual = hamiltonian(w_sd, fam.q_stationary(phi), &k) - m.saddle.h_value;
    Ok(StationaryResidual { residual, expected_roots: stationary_expected_roots(fam) })
}

/// Values of Φ with a stationary front, restricted to touch-down points on W^s.
pub fn stationary_front_roots(fam: &FrozenFamily, phi_lo: f64, phi_hi: f64, n_scan: usize) -> Result<Vec<f64>> {
    let k = fam.coeffs();
    let m = StableManifold::of(&k)?;
    let w_sd = w_stationary(fam.a);
    let f = |phi: f64| hamiltonian(w_sd, fam.q_stationary(phi), &k) - m.saddle.h_value;
    let mut out = Vec::new();
    // geometric grid: q_sd varies like 1/√Φ near the lower end
    let (l0, l1) = (phi_lo.ln(), phi_hi.ln());
    let grid: Vec<f64> = (0..=n_scan).map(|i| (l0 + (l1 - l0) * i as f64 / n_scan as f64).exp()).collect();
    for win in grid.windows(2) {
        if f(win[0]) * f(win[1]) < 0.0 {
            let r = brent(f, win[0], win[1], 1e-15 * win[1], 200)?;
            if m.contains(w_sd, fam.q_stationary(r)) {
                out.push(r);
            }
        }
    }
    Ok(out)
}
