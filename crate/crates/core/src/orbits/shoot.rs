//! Finite-ε refinement of fronts and stationary spots of the full
//! four-dimensional travelling-wave system.
//!
//! The connecting orbit is computed as a boundary-value problem on a
//! truncated line: Hermite–Simpson collocation on a graded mesh, projection
//! boundary conditions at both ends, and (for fronts) a phase condition that
//! makes the speed c an unknown. The singular skeleton supplies the initial
//! guess.

use super::{idown_point, FrontKind, FrontResult, TouchdownPoint};
use crate::error::{domain, numerical, regime, Result};
use crate::fast::w_stationary;
use crate::numerics::banded::BandMatrix;
use crate::numerics::linalg::{eigenvalues, left_eigenvector, Mat4};
use crate::params::{derive_coeffs, ScaledParams};
use crate::slow::{
    b_plus_of, integrate_slow_plus_until, rho1, saddle_point, slowplus_force_dw, slowplus_hamiltonian, Direction, SlowPlusState,
};
use crate::spatial::{jac4, rhs4, rhs4_dc, State4};

/// Which way the front connects the two uniform states (in increasing ξ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShootKind {
    /// Bare soil at ξ → −∞, the vegetated saddle state at ξ → +∞.
    BareToVegetated,
    /// The mirror image.
    VegetatedToBare,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    /// Mesh width in the fast layer.
    pub h_fast: f64,
    /// Cap on the slow-scale step εh.
    pub slow_step: f64,
    pub h_max: f64,
    pub growth: f64,
    /// Decay exponents (in units of the relevant rate) used to place the ends.
    pub fast_decay: f64,
    pub slow_decay: f64,
    pub tol: f64,
    pub max_newton: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { h_fast: 0.05, slow_step: 0.03, h_max: 1.0, growth: 1.03, fast_decay: 30.0, slow_decay: 12.0, tol: 1e-10, max_newton: 60 }
    }
}

/// A converged profile on its mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootProfile {
    pub xi: Vec<f64>,
    pub states: Vec<State4>,
    pub c: f64,
    pub newton_steps: usize,
    pub residual: f64,
}

impl ShootProfile {
    /// Linear interpolation of the state at ξ (clamped to the mesh).
    pub fn at(&self, xi: f64) -> State4 {
        let n = self.xi.len();
        if xi <= self.xi[0] {
            return self.states[0];
        }
        if xi >= self.xi[n - 1] {
            return self.states[n - 1];
        }
        let i = self.xi.partition_point(|&x| x <= xi) - 1;
        let t = (xi - self.xi[i]) / (self.xi[i + 1] - self.xi[i]);
        let (a, b) = (self.states[i], self.states[i + 1]);
        [0, 1, 2, 3].map(|j| a[j] + t * (b[j] - a[j]))
    }
}

type Bc<'a> = Box<dyn Fn(&State4, f64) -> [f64; 2] + 'a>;

struct Bvp<'a> {
    s: ScaledParams,
    xi: Vec<f64>,
    left: Bc<'a>,
    right: Bc<'a>,
    /// (node, component, target) of the phase condition; present iff c is free.
    phase: Option<(usize, usize, f64)>,
}

fn mat_vec(m: &Mat4, v: &State4) -> State4 {
    [0, 1, 2, 3].map(|i| (0..4).map(|j| m[i][j] * v[j]).sum())
}

fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn bc_jacobian(bc: &Bc<'_>, x: &State4, c: f64) -> ([[f64; 4]; 2], [f64; 2]) {
    let mut jx = [[0.0; 4]; 2];
    for j in 0..4 {
        let h = 1e-7 * (1.0 + x[j].abs());
        let (mut xp, mut xm) = (*x, *x);
        xp[j] += h;
        xm[j] -= h;
        let (rp, rm) = (bc(&xp, c), bc(&xm, c));
        for r in 0..2 {
            jx[r][j] = (rp[r] - rm[r]) / (2.0 * h);
        }
    }
    let h = 1e-7 * (1.0 + c.abs());
    let (rp, rm) = (bc(x, c + h), bc(x, c - h));
    (jx, [(rp[0] - rm[0]) / (2.0 * h), (rp[1] - rm[1]) / (2.0 * h)])
}

impl Bvp<'_> {
    fn n_nodes(&self) -> usize {
        self.xi.len()
    }

    fn residual(&self, x: &[State4], c: f64) -> Vec<f64> {
        let n = self.n_nodes();
        let mut r = Vec::with_capacity(4 * n + 1);
        r.extend((self.left)(&x[0], c));
        for i in 0..n - 1 {
            let h = self.xi[i + 1] - self.xi[i];
            let (fa, fb) = (rhs4(&self.s, c, &x[i]), rhs4(&self.s, c, &x[i + 1]));
            let xm: State4 = [0, 1, 2, 3].map(|j| 0.5 * (x[i][j] + x[i + 1][j]) + h / 8.0 * (fa[j] - fb[j]));
            let fm = rhs4(&self.s, c, &xm);
            for j in 0..4 {
                r.push(x[i + 1][j] - x[i][j] - h / 6.0 * (fa[j] + 4.0 * fm[j] + fb[j]));
            }
        }
        r.extend((self.right)(&x[n - 1], c));
        if let Some((node, comp, target)) = self.phase {
            r.push(x[node][comp] - target);
        }
        r
    }

    /// Banded Jacobian in the node unknowns and the column ∂r/∂c.
    fn jacobian(&self, x: &[State4], c: f64) -> (BandMatrix, Vec<f64>) {
        let n = self.n_nodes();
        let dim = 4 * n;
        let mut a = BandMatrix::zeros(dim, 5, 5);
        let mut dc = vec![0.0; dim];
        let (jl, cl) = bc_jacobian(&self.left, &x[0], c);
        for r in 0..2 {
            for j in 0..4 {
                a.set(r, j, jl[r][j]);
            }
            dc[r] = cl[r];
        }
        let eye = |s: f64| -> Mat4 {
            let mut m = [[0.0; 4]; 4];
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = s;
            }
            m
        };
        for i in 0..n - 1 {
            let h = self.xi[i + 1] - self.xi[i];
            let (fa, fb) = (rhs4(&self.s, c, &x[i]), rhs4(&self.s, c, &x[i + 1]));
            let (ja, jb) = (jac4(&self.s, c, &x[i]), jac4(&self.s, c, &x[i + 1]));
            let xm: State4 = [0, 1, 2, 3].map(|j| 0.5 * (x[i][j] + x[i + 1][j]) + h / 8.0 * (fa[j] - fb[j]));
            let jm = jac4(&self.s, c, &xm);
            let (ca, cb, cm) = (rhs4_dc(&self.s, &x[i]), rhs4_dc(&self.s, &x[i + 1]), rhs4_dc(&self.s, &xm));
            let mut ma = eye(0.5);
            let mut mb = eye(0.5);
            for p in 0..4 {
                for q in 0..4 {
                    ma[p][q] += h / 8.0 * ja[p][q];
                    mb[p][q] -= h / 8.0 * jb[p][q];
                }
            }
            let (ga, gb) = (mat_mul(&jm, &ma), mat_mul(&jm, &mb));
            let dxm_dc: State4 = [0, 1, 2, 3].map(|j| h / 8.0 * (ca[j] - cb[j]));
            let jdx = mat_vec(&jm, &dxm_dc);
            let row0 = 2 + 4 * i;
            for p in 0..4 {
                for q in 0..4 {
                    let d = if p == q { 1.0 } else { 0.0 };
                    a.set(row0 + p, 4 * i + q, -d - h / 6.0 * (ja[p][q] + 4.0 * ga[p][q]));
                    a.set(row0 + p, 4 * (i + 1) + q, d - h / 6.0 * (jb[p][q] + 4.0 * gb[p][q]));
                }
                dc[row0 + p] = -h / 6.0 * (ca[p] + 4.0 * (cm[p] + jdx[p]) + cb[p]);
            }
        }
        let (jr, cr) = bc_jacobian(&self.right, &x[n - 1], c);
        for r in 0..2 {
            for j in 0..4 {
                a.set(dim - 2 + r, 4 * (n - 1) + j, jr[r][j]);
            }
            dc[dim - 2 + r] = cr[r];
        }
        (a, dc)
    }

    fn solve(&self, mut x: Vec<State4>, mut c: f64, opts: &ShootOptions) -> Result<ShootProfile> {
        let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut r = self.residual(&x, c);
        let mut rn = norm(&r);
        let dim = 4 * self.n_nodes();
        for step in 0..opts.max_newton {
            if !rn.is_finite() {
                break;
            }
            if r.iter().all(|v| v.abs() < opts.tol) {
                return Ok(ShootProfile { xi: self.xi.clone(), states: x, c, newton_steps: step, residual: rn });
            }
            let (a, d) = self.jacobian(&x, c);
            let lu = a.lu()?;
            let rhs: Vec<f64> = r[..dim].iter().map(|v| -v).collect();
            let y = lu.solve(&rhs);
            let (dx, dcv) = match self.phase {
                Some((node, comp, _)) => {
                    let z = lu.solve(&d);
                    let e = 4 * node + comp;
                    if z[e].abs() < 1e-300 {
                        return Err(numerical("phase condition is degenerate"));
                    }
                    let dcv = (y[e] + r[dim]) / z[e];
                    (y.iter().zip(&z).map(|(yi, zi)| yi - zi * dcv).collect::<Vec<f64>>(), dcv)
                }
                None => (y, 0.0),
            };
            let mut lam = 1.0;
            loop {
                let xt: Vec<State4> = x.iter().enumerate().map(|(i, xi)| [0, 1, 2, 3].map(|j| xi[j] + lam * dx[4 * i + j])).collect();
                let ct = c + lam * dcv;
                let rt = self.residual(&xt, ct);
                let rtn = norm(&rt);
                if rtn.is_finite() && (rtn < (1.0 - 0.25 * lam) * rn || lam < 1.0 / 1024.0) {
                    x = xt;
                    c = ct;
                    r = rt;
                    rn = rtn;
                    break;
                }
                lam *= 0.5;
            }
        }
        Err(numerical(format!("collocation Newton did not converge (residual {rn:.3e})")))
    }
}

/// Mesh from `lo` to `hi` with a node at 0: width `h0` on |ξ| < `core`, then
/// geometric growth up to `h_max`.
fn graded_mesh(lo: f64, hi: f64, core: f64, h0: f64, h_max: f64, growth: f64) -> Vec<f64> {
    let side = |end: f64| {
        let mut v = vec![0.0];
        let mut h = h0;
        let mut t = 0.0;
        while t < end {
            if t >= core {
                h = (h * growth).min(h_max);
            }
            t += h;
            v.push(t.min(end));
        }
        v
    };
    let mut neg: Vec<f64> = side(-lo).into_iter().skip(1).map(|t| -t).collect();
    neg.reverse();
    neg.into_iter().chain(side(hi)).collect()
}

/// Rows l with l·(x − x*) = 0 forcing x into the stable (`unstable = false`)
/// or unstable subspace of the linearisation at an equilibrium: l runs over
/// left eigenvectors of the complementary eigenvalues.
fn projection_rows(s: &ScaledParams, c: f64, eq: &State4, unstable: bool) -> Result<[[f64; 4]; 2]> {
    let j = jac4(s, c, eq);
    let ev = eigenvalues(&j);
    let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let pick: Vec<f64> = ev.iter().filter(|z| if unstable { z.re < 0.0 } else { z.re > 0.0 }).map(|z| {
        if z.im.abs() > 1e-10 * scale {
            f64::NAN
        } else {
            z.re
        }
    })
    .collect();
    if pick.len() != 2 || pick.iter().any(|v| v.is_nan()) {
        return Err(regime("end state is not a real saddle with a 2+2 splitting"));
    }
    let mut rows = [[0.0; 4]; 2];
    for (r, &lam) in rows.iter_mut().zip(&pick) {
        let mut l = left_eigenvector(&j, lam);
        let big = (0..4).max_by(|&a, &b| l[a].abs().partial_cmp(&l[b].abs()).unwrap()).unwrap();
        if l[big] < 0.0 {
            l = l.map(|v| -v);
        }
        *r = l;
    }
    Ok(rows)
}

fn project(rows: &[[f64; 4]; 2], x: &State4, eq: &State4) -> [f64; 2] {
    let d: State4 = [0, 1, 2, 3].map(|j| x[j] - eq[j]);
    rows.map(|l| (0..4).map(|j| l[j] * d[j]).sum())
}

/// Fast exponent of b near b = 0 at water level w: root of μ² + cμ − (1 − aw).
fn fast_rate(c: f64, w: f64, a: f64, unstable: bool) -> f64 {
    let d = (c * c + 4.0 * (1.0 - a * w)).max(0.0).sqrt();
    if unstable {
        0.5 * (-c + d)
    } else {
        0.5 * (-c - d)
    }
}

/// Slope q/(w − w₀) of the slow line through the bare-soil state.
fn slow_slope(s: &ScaledParams, c: f64, unstable: bool) -> f64 {
    let e = s.eps;
    let d = (e.powi(4) * c * c + 4.0 * e * e * s.phi).sqrt();
    let lam = if unstable { 0.5 * (-e * e * c + d) } else { 0.5 * (-e * e * c - d) };
    lam / e
}

/// Conditions placing an end on the (un)stable manifold of the bare state:
/// b rides the fast eigendirection of the local water level, (w, q) the slow line.
fn bare_bc<'a>(s: ScaledParams, unstable: bool) -> Bc<'a> {
    let w0 = s.w_bare();
    Box::new(move |x: &State4, c: f64| {
        let mu = fast_rate(c, x[2], s.a, unstable);
        [x[1] - mu * x[0], x[3] - slow_slope(&s, c, unstable) * (x[2] - w0)]
    })
}

fn vegetated_bc<'a>(s: ScaledParams, eq: State4, unstable: bool) -> Bc<'a> {
    Box::new(move |x: &State4, c: f64| match projection_rows(&s, c, &eq, unstable) {
        Ok(rows) => project(&rows, x, &eq),
        Err(_) => [f64::NAN; 2],
    })
}

/// The uniform vegetated equilibrium at the M⁺ slow saddle.
fn vegetated_saddle(s: &ScaledParams) -> Result<State4> {
    let k = derive_coeffs(s);
    let sd = saddle_point(&k).ok_or_else(|| regime("no saddle on M+"))?;
    Ok([b_plus_of(sd.w, s.a), 0.0, sd.w, 0.0])
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Fast front shape onto b₊(w): b = b₊σ(κξ), κ = b₊√(w/2).
fn fast_layer(w: f64, a: f64, xi: f64) -> (f64, f64) {
    let bp = b_plus_of(w, a);
    let kappa = bp * (0.5 * w).sqrt();
    let sg = logistic(kappa * xi);
    (bp * sg, bp * kappa * sg * (1.0 - sg))
}

/// Slow arc on M⁺ as (X, w, q) rows, X measured from the touch-down point.
fn interp_arc(rows: &[[f64; 3]], x: f64) -> (f64, f64) {
    let i = rows.partition_point(|r| r[0] <= x).clamp(1, rows.len() - 1) - 1;
    let (a, b) = (rows[i], rows[i + 1]);
    let t = ((x - a[0]) / (b[0] - a[0]).max(1e-300)).clamp(0.0, 1.0);
    (a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2]))
}

/// Front from bare soil to the vegetated saddle state at finite ε, starting
/// from the leading-order speed `c_guess` (for the mirrored kind pass the
/// mirrored speed; the result then carries the mirrored sign).
pub fn shoot_4d(s: &ScaledParams, eps: f64, c_guess: f64, kind: ShootKind) -> Result<FrontResult> {
    shoot_4d_with(s, eps, c_guess, kind, &ShootOptions::default()).map(|(f, _)| f)
}

pub fn shoot_4d_with(s: &ScaledParams, eps: f64, c_guess: f64, kind: ShootKind, opts: &ShootOptions) -> Result<(FrontResult, ShootProfile)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain("eps must be positive"));
    }
    let s = s.with_eps(eps);
    let k = derive_coeffs(&s);
    let mirror = kind == ShootKind::VegetatedToBare;
    let c0 = if mirror { -c_guess } else { c_guess };
    let td = idown_point(c0, &s)?;
    let veg = vegetated_saddle(&s)?;
    let sd = saddle_point(&k).ok_or_else(|| regime("no saddle on M+"))?;

    // slow arc: W^s of the saddle, integrated backward to the touch-down level
    let fr = eps * c0 * rho1(sd.w, &k, s.theta);
    let lam = 0.5 * (fr - (fr * fr + 4.0 * slowplus_force_dw(sd.w, &k)).sqrt());
    let side = if td.w > sd.w { 1.0 } else { -1.0 };
    let d = side * 1e-5 * (1.0 + sd.w);
    let start = SlowPlusState { w: sd.w + d, q: lam * d };
    let wt = td.w;
    let tr = integrate_slow_plus_until(&k, s.theta, start, c0, eps, 500.0, Direction::Backward, Some(move |w: f64, _q: f64| w - wt))?;
    let x_total = -tr.last()[0];
    let mut arc: Vec<[f64; 3]> = tr.rows.iter().map(|r| [x_total + r[0], r[1], r[2]]).collect();
    arc.reverse();

    let kappa = b_plus_of(td.w, s.a) * (0.5 * td.w).sqrt();
    let mu = fast_rate(c0, td.w, s.a, true);
    let xi_l = -opts.fast_decay / mu.min(kappa);
    let xi_r = x_total / eps;
    let h_max = opts.h_max.min(opts.slow_step / eps);
    let core = 15.0 / kappa;
    let mesh = graded_mesh(xi_l, xi_r, core, opts.h_fast, h_max, opts.growth);
    let pin = mesh.iter().position(|&x| x == 0.0).unwrap();
    let kq = slow_slope(&s, c0, true);
    let w0 = s.w_bare();
    let guess: Vec<State4> = mesh
        .iter()
        .map(|&xi| {
            if xi < 0.0 {
                let w = w0 + (td.w - w0) * (kq * eps * xi).exp();
                let (b, p) = fast_layer(td.w, s.a, xi);
                [b, p, w, kq * (w - w0)]
            } else {
                let (w, q) = interp_arc(&arc, eps * xi);
                let (b, p) = fast_layer(w, s.a, xi);
                [b, p, w, q]
            }
        })
        .collect();
    let target = 0.5 * b_plus_of(td.w, s.a);

    let (mesh, guess, pin, c_start) = if mirror {
        let n = mesh.len();
        let m: Vec<f64> = mesh.iter().rev().map(|x| -x).collect();
        let g: Vec<State4> = guess.iter().rev().map(crate::spatial::mirror).collect();
        (m, g, n - 1 - pin, -c0)
    } else {
        (mesh, guess, pin, c0)
    };
    let (left, right) = if mirror {
        (vegetated_bc(s, veg, true), bare_bc(s, false))
    } else {
        (bare_bc(s, true), vegetated_bc(s, veg, false))
    };
    let bvp = Bvp { s, xi: mesh, left, right, phase: Some((pin, 0, target)) };
    let prof = bvp.solve(guess, c_start, opts)?;
    let at_pin = prof.states[pin];
    let tp = TouchdownPoint { c: prof.c, w: at_pin[2], q: at_pin[3] };
    let h = slowplus_hamiltonian(SlowPlusState { w: tp.w, q: if mirror { -tp.q } else { tp.q } }, &k).unwrap_or(f64::NAN);
    let front = FrontResult { kind: FrontKind::ShootingRefined, c: prof.c, touchdown: tp, h_level: h, residual: prof.residual, degenerate: false };
    Ok((front, prof))
}

/// Symmetric stationary spot at finite ε.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotRefined {
    /// (w, q) where b first reaches half its plateau value.
    pub w_jump: f64,
    pub q_jump: f64,
    /// State at the centre of symmetry.
    pub centre: State4,
    pub profile: ShootProfile,
}

/// Solve for the c = 0 spot on the half line ending at its centre, where
/// reversibility gives p = q = 0. The guess is built from the singular spot.
pub fn refine_spot(s: &ScaledParams, eps: f64, opts: &ShootOptions) -> Result<SpotRefined> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain("eps must be positive"));
    }
    let s = s.with_eps(eps);
    let k = derive_coeffs(&s);
    let w1 = w_stationary(s.a);
    let w0 = s.w_bare();
    let q1 = s.phi.sqrt() * (w1 - w0);
    // M⁺ arc from the touch-down point to its turning point q = 0
    let tr = integrate_slow_plus_until(&k, s.theta, SlowPlusState { w: w1, q: q1 }, 0.0, 0.0, 200.0, Direction::Forward, Some(|_w: f64, q: f64| q))?;
    if tr.stop != crate::slow::SlowStop::Event {
        return Err(regime("the M+ arc from the touch-down point does not turn"));
    }
    let x_half = tr.last()[0];
    let arc: Vec<[f64; 3]> = tr.rows.iter().map(|r| [r[0], r[1], r[2]]).collect();
    let xi_j = -x_half / eps;
    let kappa = b_plus_of(w1, s.a) * (0.5 * w1).sqrt();
    let mu = fast_rate(0.0, w1, s.a, true);
    let xi_l = xi_j - opts.fast_decay / mu.min(kappa);
    let h_max = opts.h_max.min(opts.slow_step / eps);
    let mesh: Vec<f64> = graded_mesh(xi_l - xi_j, -xi_j, 15.0 / kappa, opts.h_fast, h_max, opts.growth).into_iter().map(|x| x + xi_j).collect();
    let kq = slow_slope(&s, 0.0, true);
    let guess: Vec<State4> = mesh
        .iter()
        .map(|&xi| {
            let z = xi - xi_j;
            if z < 0.0 {
                let w = w0 + (w1 - w0) * (kq * eps * z).exp();
                let (b, p) = fast_layer(w1, s.a, z);
                [b, p, w, kq * (w - w0)]
            } else {
                let (w, q) = interp_arc(&arc, eps * z);
                let (b, p) = fast_layer(w, s.a, z);
                [b, p, w, q]
            }
        })
        .collect();
    let right: Bc<'_> = Box::new(|x: &State4, _c: f64| [x[1], x[3]]);
    let bvp = Bvp { s, xi: mesh, left: bare_bc(s, true), right, phase: None };
    let prof = bvp.solve(guess, 0.0, opts)?;
    let centre = *prof.states.last().unwrap();
    // first node where b exceeds half of the local plateau value
    let mut jump = (f64::NAN, f64::NAN);
    for w in prof.states.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ha, hb) = (a[0] - 0.5 * b_plus_of(a[2], s.a), b[0] - 0.5 * b_plus_of(b[2], s.a));
        if ha < 0.0 && hb >= 0.0 {
            let t = ha / (ha - hb);
            jump = (a[2] + t * (b[2] - a[2]), a[3] + t * (b[3] - a[3]));
            break;
        }
    }
    Ok(SpotRefined { w_jump: jump.0, q_jump: jump.1, centre, profile: prof })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::find_primary_fronts;

    fn front_regime() -> ScaledParams {
        ScaledParams::new(0.0008, 1.6248, 0.3, 0.1, 0.2, 0.005f64.sqrt()).unwrap()
    }

    #[test]
    fn graded_mesh_has_origin_and_ends() {
        let m = graded_mesh(-7.0, 40.0, 2.0, 0.1, 1.0, 1.1);
        assert_eq!(m[0], -7.0);
        assert_eq!(*m.last().unwrap(), 40.0);
        assert!(m.contains(&0.0));
        assert!(m.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 1.0 + 1e-12));
    }

    #[test]
    fn collocation_jacobian_matches_differences() {
        let s = front_regime();
        let veg = vegetated_saddle(&s).unwrap();
        let xi: Vec<f64> = (0..6).map(|i| -1.0 + 0.4 * i as f64).collect();
        let x: Vec<State4> = xi.iter().map(|&t| [0.3 + 0.1 * t, 0.05 * t, 4.2 - 0.1 * t, -0.3 + 0.02 * t]).collect();
        let bvp = Bvp { s, xi, left: bare_bc(s, true), right: vegetated_bc(s, veg, false), phase: Some((2, 0, 0.3)) };
        let c = -0.05;
        let (a, d) = bvp.jacobian(&x, c);
        let r0 = bvp.residual(&x, c);
        let dim = 4 * x.len();
        for col in 0..=dim {
            let h = 1e-6;
            let (xp, cp) = if col < dim {
                let mut xp = x.clone();
                xp[col / 4][col % 4] += h;
                (xp, c)
            } else {
                (x.clone(), c + h)
            };
            let r1 = bvp.residual(&xp, cp);
            for row in 0..dim {
                let fd = (r1[row] - r0[row]) / h;
                let an = if col < dim { a.get(row, col) } else { d[row] };
                assert!((fd - an).abs() < 1e-4 * (1.0 + an.abs()), "row {row} col {col}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn refined_speed_is_close_to_leading_order() {
        let s = front_regime();
        let prim = find_primary_fronts(&s).unwrap();
        let c0 = prim[0].c;
        let (f, prof) = shoot_4d_with(&s, 0.05, c0, ShootKind::BareToVegetated, &ShootOptions::default()).unwrap();
        assert_eq!(f.kind, FrontKind::ShootingRefined);
        assert!((f.c - c0).abs() < 0.5 * c0.abs().max(0.05), "c = {} vs {}", f.c, c0);
        // the profile really solves the travelling-wave ODE
        assert!(prof.residual < 1e-9);
        let last = prof.states.last().unwrap();
        let veg = vegetated_saddle(&s).unwrap();
        assert!((last[2] - veg[2]).abs() < 1e-3 * veg[2]);
    }

    #[test]
    fn mirrored_front_has_opposite_speed() {
        let s = front_regime();
        let c0 = find_primary_fronts(&s).unwrap()[0].c;
        let a = shoot_4d(&s, 0.1, c0, ShootKind::BareToVegetated).unwrap();
        let b = shoot_4d(&s, 0.1, -c0, ShootKind::VegetatedToBare).unwrap();
        assert!((a.c + b.c).abs() < 1e-8 * (1.0 + a.c.abs()), "{} vs {}", a.c, b.c);
    }

    #[test]
    fn spot_centre_is_reversible_and_near_skeleton() {
        let s = ScaledParams::new(0.032, 1.3714, 0.3, 0.1, 0.2, 0.005f64.sqrt()).unwrap();
        let w1 = w_stationary(s.a);
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.05] {
            let r = refine_spot(&s, eps, &ShootOptions::default()).unwrap();
            assert!(r.centre[1].abs() < 1e-9 && r.centre[3].abs() < 1e-9);
            let dev = (r.w_jump - w1).abs();
            assert!(dev < 5.0 * eps, "eps {eps}: w_jump {} vs {w1}", r.w_jump);
            assert!(dev < prev);
            prev = dev;
        }
    }
}
