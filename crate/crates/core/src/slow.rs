//! Slow reduced flows on the bare-soil manifold M⁰ and the vegetated manifold
//! M⁺, the O(ε) friction term on M⁺, and the Melnikov functions deciding
//! which of the integrable orbits persist.

use crate::error::{domain, numerical, regime, Result};
use crate::fast::{b_plus, cal_w, w_fold, w_top};
use crate::numerics::ode::{integrate, locate_in_step, Control, OdeOptions};
use crate::numerics::quad::GaussLegendre;
use crate::numerics::roots::{bisect, brent, scan_brackets, secant};
use crate::params::{ScaledParams, SlowPlusCoeffs};

/// A line q = slope·w + intercept in the (w, q) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn q_at(&self, w: f64) -> f64 {
        self.slope * w + self.intercept
    }
}

/// Unstable and stable manifolds of P⁰ = (Ψ/Φ, 0) for w'' = Φw − Ψ.
pub fn slow0_manifolds(s: &ScaledParams) -> Result<(Line, Line)> {
    if !(s.phi > 0.0) {
        return Err(domain("phi must be positive for the bare-soil saddle"));
    }
    let r = s.phi.sqrt();
    let w0 = s.w_bare();
    Ok((Line { slope: r, intercept: -r * w0 }, Line { slope: -r, intercept: r * w0 }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowPlusState {
    pub w: f64,
    pub q: f64,
}

/// Is w inside the closed window where b₊(w) is real and below 1/a.
pub fn in_window(w: f64, a: f64) -> bool {
    w >= w_fold(a) && w <= w_top(a)
}

fn cal_w_checked(w: f64, a: f64) -> Result<f64> {
    if !in_window(w, a) {
        return Err(domain(format!("w = {w} outside the vegetated window [{}, {}]", w_fold(a), w_top(a))));
    }
    cal_w(w, a).ok_or_else(|| domain(format!("w = {w} below the fold")))
}

/// F(w) = −𝒜 + (ℬ + aΘ)w + 𝒞 w 𝒲(w), without the window check.
pub fn slowplus_force(w: f64, k: &SlowPlusCoeffs) -> f64 {
    let x = cal_w(w, k.a).unwrap_or(0.0);
    -k.A + k.beta * w + k.C * w * x
}

pub fn slowplus_rhs(p: SlowPlusState, k: &SlowPlusCoeffs) -> Result<f64> {
    let x = cal_w_checked(p.w, k.a)?;
    Ok(-k.A + k.beta * p.w + k.C * p.w * x)
}

/// F′(w), valid for 𝒲(w) > 0.
pub fn slowplus_force_dw(w: f64, k: &SlowPlusCoeffs) -> f64 {
    let x = cal_w(w, k.a).unwrap_or(f64::NAN);
    k.beta + k.C * (x + 1.0 / (2.0 * w * x))
}

/// F″(w), valid for 𝒲(w) > 0.
pub fn slowplus_force_dww(w: f64, k: &SlowPlusCoeffs) -> f64 {
    let x = cal_w(w, k.a).unwrap_or(f64::NAN);
    let dx = 1.0 / (2.0 * w * w * x);
    // d/dw [𝒲 + 1/(2w𝒲)]
    k.C * (dx - (x + w * dx) / (2.0 * w * w * x * x))
}

/// 𝒥(w) = ∫ w𝒲(w) dw in closed form.
pub fn cal_j(w: f64, a: f64) -> Result<f64> {
    let at = a + 0.25;
    let r2 = at * w * w - w;
    if r2 < -1e-14 * w * w {
        return Err(domain(format!("w = {w} below the fold in J")));
    }
    let r = r2.max(0.0).sqrt();
    let arg = 0.5 * (2.0 * at * w - 1.0) + at.sqrt() * r;
    if !(arg > 0.0) {
        return Err(domain(format!("nonpositive logarithm argument at w = {w}")));
    }
    Ok((2.0 * at * w - 1.0) * r / (4.0 * at) - arg.ln() / (8.0 * at * at.sqrt()))
}

/// Potential V(w) with ℋ = ½q² + V(w), V′ = −F.
pub fn potential(w: f64, k: &SlowPlusCoeffs) -> Result<f64> {
    Ok(k.A * w - 0.5 * k.beta * w * w - k.C * cal_j(w, k.a)?)
}

pub fn slowplus_hamiltonian(p: SlowPlusState, k: &SlowPlusCoeffs) -> Result<f64> {
    cal_w_checked(p.w, k.a)?;
    Ok(0.5 * p.q * p.q + potential(p.w, k)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointKind {
    Saddle,
    Center,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPointMPlus {
    pub w: f64,
    pub kind: PointKind,
    pub h_value: f64,
}

/// Critical points of the reduced flow on M⁺, ordered by w.
pub fn critical_points_mplus(k: &SlowPlusCoeffs) -> Vec<CriticalPointMPlus> {
    let hi = 0.5;
    let mut roots: Vec<(f64, bool)> = Vec::new();
    if k.A == 0.0 {
        if k.C != 0.0 {
            roots.push((-k.D / k.C, false));
        }
    } else {
        let disc = k.C * k.C - 4.0 * k.A * k.D;
        let scale = (k.C * k.C).max((4.0 * k.A * k.D).abs()).max(1e-300);
        if disc.abs() <= 1e-14 * scale {
            roots.push((-k.C / (2.0 * k.A), true));
        } else if disc > 0.0 {
            let sq = disc.sqrt();
            // stable quadratic roots
            let qq = -0.5 * (k.C + k.C.signum() * sq);
            let (r1, r2) = if qq != 0.0 { (qq / k.A, k.D / qq) } else { (sq / (2.0 * k.A), -sq / (2.0 * k.A)) };
            roots.push((r1, false));
            roots.push((r2, false));
        }
    }
    let mut pts: Vec<CriticalPointMPlus> = roots
        .into_iter()
        .filter(|&(x, _)| x > 0.0 && x < hi)
        .filter_map(|(x, degenerate)| {
            let w = 1.0 / (k.a + 0.25 - x * x);
            if !(w > 0.0 && in_window(w, k.a)) {
                return None;
            }
            let e = k.beta + 0.5 * k.C * (x + (k.a + 0.25) / x);
            let kind = if degenerate || e.abs() < 1e-13 * (1.0 + k.beta.abs()) {
                PointKind::Degenerate
            } else if e > 0.0 {
                PointKind::Saddle
            } else {
                PointKind::Center
            };
            let h_value = potential(w, k).ok()?;
            Some(CriticalPointMPlus { w, kind, h_value })
        })
        .collect();
    pts.sort_by(|p, q| p.w.partial_cmp(&q.w).unwrap());
    pts
}

pub fn saddle_point(k: &SlowPlusCoeffs) -> Option<CriticalPointMPlus> {
    critical_points_mplus(k).into_iter().rev().find(|p| p.kind == PointKind::Saddle)
}

pub fn center_point(k: &SlowPlusCoeffs) -> Option<CriticalPointMPlus> {
    critical_points_mplus(k).into_iter().find(|p| p.kind == PointKind::Center)
}

/// Center and saddle of the two-point case.
pub fn center_and_saddle(k: &SlowPlusCoeffs) -> Result<(CriticalPointMPlus, CriticalPointMPlus)> {
    let pts = critical_points_mplus(k);
    match pts.as_slice() {
        [c, s] if c.kind == PointKind::Center && s.kind == PointKind::Saddle => Ok((*c, *s)),
        _ => Err(regime(format!("need a center and a saddle on M+, found {} point(s)", pts.len()))),
    }
}

/// First-order data of the perturbed manifold M⁺_ε.
pub fn mplus_correction(w: f64, k: &SlowPlusCoeffs, s: &ScaledParams) -> Result<(f64, f64, f64)> {
    let x = cal_w_checked(w, k.a)?;
    if x == 0.0 {
        return Err(domain("the first-order correction is singular at the fold"));
    }
    let bp = 0.5 + x;
    let p1 = 1.0 / (2.0 * w * w * x);
    let b1 = p1 / (2.0 * w * bp * x);
    let rho1 = (k.C + 2.0 * s.theta * x) * w * b1 - 1.0;
    Ok((p1, b1, rho1))
}

/// ρ₁(w), the nonlinear friction coefficient; −∞ at the fold.
pub fn rho1(w: f64, k: &SlowPlusCoeffs, theta: f64) -> f64 {
    match cal_w(w, k.a) {
        Some(x) if x > 0.0 => {
            let bp = 0.5 + x;
            (k.C + 2.0 * theta * x) / (4.0 * w * w * bp * x * x) - 1.0
        }
        _ => f64::NEG_INFINITY,
    }
}

/// ρ₁′(w) by a Richardson-extrapolated central difference.
pub fn rho1_dw(w: f64, k: &SlowPlusCoeffs, theta: f64) -> f64 {
    let h = 1e-4 * w;
    let d = |h: f64| (rho1(w + h, k, theta) - rho1(w - h, k, theta)) / (2.0 * h);
    (4.0 * d(h * 0.5) - d(h)) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelnikovResult {
    pub value: f64,
    pub quadrature_error: f64,
    pub endpoints: (f64, f64),
}

/// Radicand 2(ℋ − V(w)) = q² on the level set ℋ.
pub fn level_radicand(w: f64, h: f64, k: &SlowPlusCoeffs) -> f64 {
    match potential(w, k) {
        Ok(v) => 2.0 * (h - v),
        Err(_) => f64::NAN,
    }
}

const MELNIKOV_NODES: usize = 48;

/// ∫ ρ(w) √(2(ℋ − V(w))) dw over [w_lo, w_hi], where the radicand vanishes
/// at the ends (like a square root at a turning point, or linearly in √ at a
/// saddle). Both halves are mapped by w = end ∓ t² and split at `w_mid`.
fn level_integral<R: Fn(f64) -> f64>(rho: &R, h: f64, k: &SlowPlusCoeffs, w_lo: f64, w_mid: f64, w_hi: f64, panels: usize) -> f64 {
    let gl = GaussLegendre::new(MELNIKOV_NODES);
    let g = |w: f64| rho(w) * level_radicand(w, h, k).max(0.0).sqrt();
    let left = gl.integrate_panels(|t| 2.0 * t * g(w_lo + t * t), 0.0, (w_mid - w_lo).sqrt(), panels);
    let right = gl.integrate_panels(|t| 2.0 * t * g(w_hi - t * t), 0.0, (w_hi - w_mid).sqrt(), panels);
    left + right
}

fn level_integral_checked<R: Fn(f64) -> f64>(rho: &R, h: f64, k: &SlowPlusCoeffs, ends: (f64, f64, f64)) -> MelnikovResult {
    let (lo, mid, hi) = ends;
    let coarse = level_integral(rho, h, k, lo, mid, hi, 2);
    let fine = level_integral(rho, h, k, lo, mid, hi, 4);
    MelnikovResult { value: fine, quadrature_error: (fine - coarse).abs(), endpoints: (lo, hi) }
}

/// Inner turning point w̲_{h,0} of the homoclinic loop to the saddle.
pub fn homoclinic_turning_point(k: &SlowPlusCoeffs) -> Result<f64> {
    let (c, s) = center_and_saddle(k)?;
    let lo = w_fold(k.a) * (1.0 + 1e-9);
    let r = |w: f64| level_radicand(w, s.h_value, k);
    if r(lo) > 0.0 {
        return Err(regime("the homoclinic loop leaves the vegetated window through the fold"));
    }
    brent(r, lo, c.w, 1e-14 * c.w, 300)
}

/// Homoclinic Melnikov integral for an arbitrary friction profile.
pub fn melnikov_homoclinic_with<R: Fn(f64) -> f64>(k: &SlowPlusCoeffs, rho: R) -> Result<MelnikovResult> {
    let (c, s) = center_and_saddle(k)?;
    let lo = homoclinic_turning_point(k)?;
    Ok(level_integral_checked(&rho, s.h_value, k, (lo, c.w, s.w)))
}

pub fn melnikov_homoclinic(k: &SlowPlusCoeffs, s: &ScaledParams) -> Result<MelnikovResult> {
    let theta = s.theta;
    melnikov_homoclinic_with(k, |w| rho1(w, k, theta))
}

/// Θ that puts the zero of ρ₁ at `w_zero` (for the fixed 𝒞 of `k`).
pub fn theta_for_friction_zero(w_zero: f64, k: &SlowPlusCoeffs) -> f64 {
    let x = cal_w(w_zero, k.a).unwrap_or(f64::NAN);
    let bp = 0.5 + x;
    (4.0 * w_zero * w_zero * bp * x * x - k.C) / (2.0 * x)
}

/// Position of the zero of ρ₁ on the boundary where the homoclinic loop
/// persists, found by moving that zero between the center and the saddle
/// (ρ₁ is reshaped through Θ while the reduced flow stays fixed).
/// Returns (w_zero, Θ).
pub fn homoclinic_friction_zero(k: &SlowPlusCoeffs) -> Result<(f64, f64)> {
    let (c, s) = center_and_saddle(k)?;
    let f = |wz: f64| {
        let th = theta_for_friction_zero(wz, k);
        melnikov_homoclinic_with(k, |w| rho1(w, k, th)).map(|m| m.value).unwrap_or(f64::NAN)
    };
    let wz = brent(f, c.w, s.w, 1e-15 * s.w, 300)?;
    Ok((wz, theta_for_friction_zero(wz, k)))
}

/// Turning points w̲ < w̄ of the closed orbit on level `h_p`.
pub fn periodic_turning_points(h_p: f64, k: &SlowPlusCoeffs) -> Result<(f64, f64)> {
    let (c, s) = center_and_saddle(k)?;
    if !(h_p > c.h_value && h_p < s.h_value) {
        return Err(domain(format!("level {h_p} outside ({}, {})", c.h_value, s.h_value)));
    }
    let r = |w: f64| level_radicand(w, h_p, k);
    let w_inner = match homoclinic_turning_point(k) {
        Ok(w) => w,
        Err(_) => w_fold(k.a) * (1.0 + 1e-9),
    };
    let tol = 1e-14 * c.w;
    let lo = if r(w_inner) < 0.0 { brent(r, w_inner, c.w, tol, 300)? } else { return Err(regime("closed orbit reaches the fold")) };
    let hi = brent(r, c.w, s.w, tol, 300)?;
    Ok((lo, hi))
}

pub fn melnikov_periodic_with<R: Fn(f64) -> f64>(h_p: f64, k: &SlowPlusCoeffs, rho: R) -> Result<MelnikovResult> {
    let (c, _) = center_and_saddle(k)?;
    let (lo, hi) = periodic_turning_points(h_p, k)?;
    Ok(level_integral_checked(&rho, h_p, k, (lo, c.w, hi)))
}

pub fn melnikov_periodic(h_p: f64, k: &SlowPlusCoeffs, s: &ScaledParams) -> Result<MelnikovResult> {
    let theta = s.theta;
    melnikov_periodic_with(h_p, k, |w| rho1(w, k, theta))
}

/// Where the parameter point sits relative to the persistence window S_per.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodicPersistence {
    /// A closed orbit on level `h_star` persists.
    Persists { h_star: f64 },
    /// No sign change; the Melnikov function has the sign given near both ends.
    Absent { sign_near_center: f64, sign_near_homoclinic: f64 },
}

/// Levels on which the periodic Melnikov function vanishes, via a uniform
/// scan in ℋ followed by Brent on every bracket.
pub fn periodic_melnikov_roots(k: &SlowPlusCoeffs, s: &ScaledParams, n_scan: usize) -> Result<Vec<f64>> {
    let (c, sd) = center_and_saddle(k)?;
    let span = sd.h_value - c.h_value;
    let (h_lo, h_hi) = (c.h_value + 1e-6 * span, sd.h_value - 1e-6 * span);
    let f = |h: f64| melnikov_periodic(h, k, s).map(|m| m.value).unwrap_or(f64::NAN);
    let mut out = Vec::new();
    for (a, b) in scan_brackets(f, h_lo, h_hi, n_scan) {
        out.push(brent(f, a, b, 1e-14 * (1.0 + sd.h_value.abs()), 200)?);
    }
    Ok(out)
}

pub fn find_persistent_periodic(k: &SlowPlusCoeffs, s: &ScaledParams) -> Result<PeriodicPersistence> {
    let roots = periodic_melnikov_roots(k, s, 40)?;
    if let Some(&h_star) = roots.first() {
        return Ok(PeriodicPersistence::Persists { h_star });
    }
    let (c, sd) = center_and_saddle(k)?;
    let span = sd.h_value - c.h_value;
    let near_c = melnikov_periodic(c.h_value + 1e-6 * span, k, s)?.value.signum();
    let near_s = melnikov_periodic(sd.h_value - 1e-6 * span, k, s)?.value.signum();
    Ok(PeriodicPersistence::Absent { sign_near_center: near_c, sign_near_homoclinic: near_s })
}

/// Root of the periodic Melnikov function on a bracket by bisection and by
/// secant; both are returned so callers can compare routes.
pub fn periodic_root_two_ways(k: &SlowPlusCoeffs, s: &ScaledParams, bracket: (f64, f64)) -> Result<(f64, f64)> {
    let f = |h: f64| melnikov_periodic(h, k, s).map(|m| m.value).unwrap_or(f64::NAN);
    let tol = 1e-15 * (1.0 + bracket.1.abs());
    let r_bis = bisect(f, bracket.0, bracket.1, tol, 200)?;
    let r_sec = secant(f, bracket.0 + 0.3 * (bracket.1 - bracket.0), bracket.0 + 0.7 * (bracket.1 - bracket.0), tol, 200)?;
    Ok((r_bis, r_sec))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlowStop {
    Completed,
    LeftWindow,
    Event,
}

/// Sampled trajectory of the slow flow on M⁺_ε.
#[derive(Debug, Clone)]
pub struct SlowTrajectory {
    /// Rows (X, w, q, ℋ₀⁺).
    pub rows: Vec<[f64; 4]>,
    pub stop: SlowStop,
}

impl SlowTrajectory {
    pub fn last(&self) -> [f64; 4] {
        *self.rows.last().unwrap()
    }
}

/// Right-hand side of the perturbed slow flow, w′ = q, q′ = F(w) + εcqρ₁(w).
pub fn slow_plus_field(k: &SlowPlusCoeffs, theta: f64, c: f64, eps: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    move |_x, y| {
        let fr = if c != 0.0 && eps != 0.0 { eps * c * y[1] * rho1(y[0], k, theta) } else { 0.0 };
        [y[1], slowplus_force(y[0], k) + fr]
    }
}

/// Integrate the slow flow on M⁺_ε from `start` over `x_span`, stopping if w
/// leaves the window. `event` (if any) is a function g(w, q) whose sign
/// changes are located and terminate the run.
pub fn integrate_slow_plus_until<G: Fn(f64, f64) -> f64>(
    k: &SlowPlusCoeffs,
    theta: f64,
    start: SlowPlusState,
    c: f64,
    eps: f64,
    x_span: f64,
    direction: Direction,
    event: Option<G>,
) -> Result<SlowTrajectory> {
    if !in_window(start.w, k.a) {
        return Err(domain(format!("start w = {} outside the vegetated window", start.w)));
    }
    let f = slow_plus_field(k, theta, c, eps);
    let t_end = match direction {
        Direction::Forward => x_span,
        Direction::Backward => -x_span,
    };
    let lo = w_fold(k.a) * (1.0 + 1e-12);
    let hi = w_top(k.a);
    let h = |w: f64, q: f64| slowplus_hamiltonian(SlowPlusState { w, q }, k).unwrap_or(f64::NAN);
    let mut rows = vec![[0.0, start.w, start.q, h(start.w, start.q)]];
    let mut stop = SlowStop::Completed;
    let opts = OdeOptions { h_max: 0.05 * x_span.max(1.0), ..Default::default() };
    let res = integrate(&f, 0.0, [start.w, start.q], t_end, &opts, |st| {
        if st.x1[0] < lo || st.x1[0] > hi {
            let bound = if st.x1[0] < lo { lo } else { hi };
            let (t, x) = locate_in_step(&f, st, |_t, x| x[0] - bound);
            rows.push([t, x[0], x[1], h(x[0], x[1])]);
            stop = SlowStop::LeftWindow;
            return Control::Stop;
        }
        if let Some(g) = &event {
            if g(st.x0[0], st.x0[1]).signum() != g(st.x1[0], st.x1[1]).signum() && g(st.x0[0], st.x0[1]) != 0.0 {
                let (t, x) = locate_in_step(&f, st, |_t, x| g(x[0], x[1]));
                rows.push([t, x[0], x[1], h(x[0], x[1])]);
                stop = SlowStop::Event;
                return Control::Stop;
            }
        }
        rows.push([st.t1, st.x1[0], st.x1[1], h(st.x1[0], st.x1[1])]);
        Control::Continue
    });
    match res {
        Ok(_) => Ok(SlowTrajectory { rows, stop }),
        Err(e) => {
            let last = rows.last().copied().unwrap_or_default();
            Err(numerical(format!("{e}; last valid state X = {}, w = {}, q = {}", last[0], last[1], last[2])))
        }
    }
}

pub fn integrate_slow_plus(
    k: &SlowPlusCoeffs,
    theta: f64,
    start: SlowPlusState,
    c: f64,
    eps: f64,
    x_span: f64,
    direction: Direction,
) -> Result<SlowTrajectory> {
    integrate_slow_plus_until(k, theta, start, c, eps, x_span, direction, None::<fn(f64, f64) -> f64>)
}

/// Bogdanov–Takens normal-form data at the saddle-node point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtNormalForm {
    pub beta1: f64,
    pub beta2: f64,
    pub s_sign: f64,
    pub mu: [f64; 4],
    pub delta: f64,
    /// (β₁, β₂) inside the leading-order periodic-orbit wedge (only meaningful for s = +1).
    pub in_periodic_wedge: bool,
}

pub fn bt_normal_form(k: &SlowPlusCoeffs, s: &ScaledParams, c: f64, eps: f64) -> Result<BtNormalForm> {
    let w = k.w_sn.ok_or_else(|| domain("saddle-node level undefined"))?;
    if !(in_window(w, k.a) && cal_w(w, k.a).map(|x| x > 0.0).unwrap_or(false)) {
        return Err(domain(format!("saddle-node level {w} outside the vegetated window")));
    }
    let mu1 = slowplus_force(w, k);
    let mu2 = slowplus_force_dw(w, k);
    let mu3 = 0.5 * slowplus_force_dww(w, k);
    let delta = eps * c * rho1(w, k, s.theta);
    let mu4 = eps * c * rho1_dw(w, k, s.theta);
    if mu3 * mu4 == 0.0 || !(mu3 * mu4).is_finite() {
        return Err(domain(format!("nondegeneracy fails: mu3 = {mu3}, mu4 = {mu4}")));
    }
    let beta1 = mu4.powi(4) * mu1 / mu3.powi(3);
    let beta2 = (mu4 / mu3).powi(2) * mu2;
    let s_sign = (mu3 * mu4).signum();
    let in_periodic_wedge = s_sign > 0.0 && beta2 < 0.0 && beta1 < 0.0 && beta1 > -6.0 / 25.0 * beta2 * beta2;
    Ok(BtNormalForm { beta1, beta2, s_sign, mu: [mu1, mu2, mu3, mu4], delta, in_periodic_wedge })
}

/// b₊(w) on the vegetated window, for callers that validated w already.
pub fn b_plus_of(w: f64, a: f64) -> f64 {
    b_plus(w, a).unwrap_or(f64::NAN)
}
