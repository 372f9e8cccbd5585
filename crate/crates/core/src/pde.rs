//! Method-of-lines simulation of the scaled PDE
//!
//!   B_t = (aW − 1)B + WB² − WB³ + B_xx
//!   W_t = Ψ − (Φ + ΩB + ΘB²)W + W_xx/ε²
//!
//! on a cell-centred grid with no-flux ends. Diffusion is implicit (one
//! factored tridiagonal per component and step size), reaction explicit.

use crate::equilibria::{full_equilibria, BackgroundState, Manifold};
use crate::error::{domain, numerical, regime, Result};
use crate::fast::{b_plus, fast_front_profile, w_stationary, Branch};
use crate::numerics::tridiag::Tridiagonal;
use crate::orbits::OrbitSkeleton;
use crate::params::ScaledParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    NoFlux,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub length: f64,
    pub n_points: usize,
    pub dx: f64,
    pub bc: Boundary,
}

impl Grid {
    pub fn new(length: f64, n_points: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(domain("grid length must be positive"));
        }
        if n_points < 64 {
            return Err(domain(format!("grid needs at least 64 points (got {n_points})")));
        }
        let dx = length / n_points as f64;
        if dx > 0.2 {
            return Err(domain(format!("dx = {dx} does not resolve the fast layer (need dx <= 0.2)")));
        }
        Ok(Grid { length, n_points, dx, bc: Boundary::NoFlux })
    }

    /// Default domain 20/ε with dx close to `dx_target`.
    pub fn for_params(s: &ScaledParams, dx_target: f64) -> Result<Self> {
        let length = 20.0 / s.eps;
        let n = ((length / dx_target).ceil() as usize).max(64);
        Grid::new(length, n)
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub b: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
}

impl Field {
    pub fn uniform(n: usize, b: f64, w: f64) -> Self {
        Field { b: vec![b; n], w: vec![w; n], t: 0.0 }
    }

    /// Reflection x ↦ L − x.
    pub fn mirrored(&self) -> Field {
        let mut f = self.clone();
        f.b.reverse();
        f.w.reverse();
        f
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.b.len() != n || self.w.len() != n {
            return Err(domain("field length does not match the grid"));
        }
        if self.b.iter().chain(&self.w).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(domain("field must be finite and nonnegative"));
        }
        Ok(())
    }

    fn norm(&self) -> f64 {
        self.b.iter().chain(&self.w).fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub t_end: f64,
    /// Upper bound on the step; the step is reduced further when the reaction
    /// is stiff.
    pub dt: f64,
    /// Snapshot cadence in time units (the initial field is always stored).
    pub snapshot_every: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub snapshots: Vec<Field>,
    pub steps: usize,
    /// Number of grid values clamped from tiny negative undershoots.
    pub clamped: usize,
    /// max over steps of |Δ∫W − Δt·∫(Ψ − (Φ+ΩB+ΘB²)W)| per unit time.
    pub mass_defect: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("trajectory always holds the initial field")
    }
}

fn diffusion_operator(grid: &Grid, coeff: f64, dt: f64) -> Tridiagonal {
    let n = grid.n_points;
    let r = dt * coeff / (grid.dx * grid.dx);
    let mut lower = vec![-r; n];
    let mut upper = vec![-r; n];
    let mut diag = vec![1.0 + 2.0 * r; n];
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    diag[0] = 1.0 + r;
    diag[n - 1] = 1.0 + r;
    Tridiagonal::factor(&lower, &diag, &upper)
}

#[inline]
fn reaction(s: &ScaledParams, b: f64, w: f64) -> (f64, f64) {
    let fb = (s.a * w - 1.0) * b + w * b * b - w * b * b * b;
    let fw = s.psi - (s.phi + s.omega * b + s.theta * b * b) * w;
    (fb, fw)
}

/// Crude bound on the reaction Jacobian's diagonal, used to cap dt.
fn stiffness(s: &ScaledParams, f: &Field) -> f64 {
    f.b.iter().zip(&f.w).fold(0.0, |m: f64, (&b, &w)| {
        let db = (s.a * w - 1.0 + 2.0 * w * b - 3.0 * w * b * b).abs();
        let dw = (s.phi + s.omega * b + s.theta * b * b).abs();
        m.max(db).max(dw)
    })
}

const CLAMP_TOL: f64 = 1e-12;

fn guard(v: &mut f64, clamped: &mut usize, t: f64) -> Result<()> {
    if *v < 0.0 {
        if *v < -CLAMP_TOL {
            return Err(numerical(format!("negative value {v:e} at t = {t}")));
        }
        *v = 0.0;
        *clamped += 1;
    }
    Ok(())
}

/// Advance `ic` to `t_end`, storing snapshots every `snapshot_every`.
pub fn simulate(s: &ScaledParams, grid: &Grid, ic: &Field, o: &SimOptions) -> Result<Trajectory> {
    ic.check(grid.n_points)?;
    if !(o.dt > 0.0 && o.t_end >= 0.0 && o.snapshot_every > 0.0) {
        return Err(domain("dt and snapshot_every must be positive, t_end nonnegative"));
    }
    let n = grid.n_points;
    let d_w = 1.0 / s.eps2();
    let norm0 = ic.norm().max(1.0);
    let mut f = ic.clone();
    let mut traj = Trajectory { grid: *grid, snapshots: vec![ic.clone()], steps: 0, clamped: 0, mass_defect: 0.0 };
    let t0 = ic.t;
    let t_stop = t0 + o.t_end;
    let tol = 1e-9 * o.dt.min(o.snapshot_every);
    let mut k_snap = 1usize;
    let mut cached: Option<(f64, Tridiagonal, Tridiagonal)> = None;
    let (mut rb, mut rw) = (vec![0.0; n], vec![0.0; n]);

    while f.t < t_stop - tol {
        let cap = 0.5 / stiffness(s, &f).max(1e-12);
        let target = (t0 + k_snap as f64 * o.snapshot_every).min(t_stop);
        // land exactly on snapshot times and on t_end without sliver steps
        let mut dt = o.dt.min(cap);
        let landing = f.t + dt >= target - tol || target - (f.t + dt) < 0.05 * dt;
        if landing {
            dt = target - f.t;
        }
        let ops = match &cached {
            Some((h, ..)) if *h == dt => cached.as_ref().unwrap(),
            _ => {
                cached = Some((dt, diffusion_operator(grid, 1.0, dt), diffusion_operator(grid, d_w, dt)));
                cached.as_ref().unwrap()
            }
        };
        let mut gain = 0.0;
        for i in 0..n {
            let (fb, fw) = reaction(s, f.b[i], f.w[i]);
            rb[i] = f.b[i] + dt * fb;
            rw[i] = f.w[i] + dt * fw;
            gain += fw;
        }
        let before: f64 = f.w.iter().sum();
        ops.1.solve_in_place(&mut rb);
        ops.2.solve_in_place(&mut rw);
        let t_new = if landing { target } else { f.t + dt };
        for i in 0..n {
            guard(&mut rb[i], &mut traj.clamped, t_new)?;
            guard(&mut rw[i], &mut traj.clamped, t_new)?;
        }
        std::mem::swap(&mut f.b, &mut rb);
        std::mem::swap(&mut f.w, &mut rw);
        f.t = t_new;
        traj.steps += 1;
        let after: f64 = f.w.iter().sum();
        let defect = ((after - before) - dt * gain).abs() * grid.dx / dt;
        traj.mass_defect = traj.mass_defect.max(defect);

        let nrm = f.norm();
        if !nrm.is_finite() || nrm > 1e6 * norm0 {
            return Err(numerical(format!("instability: field norm {nrm:e} at t = {} after {} steps (dt = {dt:e})", f.t, traj.steps)));
        }
        if landing {
            traj.snapshots.push(f.clone());
            if target < t_stop {
                k_snap += 1;
            }
        }
    }
    Ok(traj)
}

/// Vegetated uniform state on M⁺ (the spatial saddle), if any.
pub fn vegetated_state(s: &ScaledParams) -> Option<BackgroundState> {
    full_equilibria(s).into_iter().filter(|e| e.manifold == Manifold::Mplus).last()
}

/// Vegetated level used to seed initial data: the M⁺ uniform state, or,
/// when there is none, the slaved plateau b₊(w) at the stationary touch-down
/// value of w.
pub fn vegetated_reference(s: &ScaledParams) -> Option<(f64, f64)> {
    if let Some(v) = vegetated_state(s) {
        return Some((v.b, v.w));
    }
    let w = w_stationary(s.a);
    b_plus(w, s.a).map(|b| (b, w))
}

/// Level used to locate fronts: half the plateau biomass.
pub fn front_level(s: &ScaledParams) -> Option<f64> {
    vegetated_state(s).and_then(|v| b_plus(v.w, s.a)).map(|b| 0.5 * b)
}

/// Interpolated positions where b crosses `level`.
pub fn level_crossings(grid: &Grid, b: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..b.len().saturating_sub(1) {
        let (u, v) = (b[i] - level, b[i + 1] - level);
        if (u < 0.0) != (v < 0.0) {
            let th = u / (u - v);
            out.push(grid.x(i) + th * grid.dx);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedFit {
    pub speed: f64,
    /// RMS deviation of the positions from the fitted line.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares front speed over the final half of the trajectory.
pub fn measure_front_speed(traj: &Trajectory, s: &ScaledParams) -> Result<SpeedFit> {
    let level = front_level(s).ok_or_else(|| regime("no vegetated state to define the front level"))?;
    let t0 = traj.snapshots.first().map(|f| f.t).unwrap_or(0.0);
    let t1 = traj.last().t;
    let mid = 0.5 * (t0 + t1);
    let mut pts = Vec::new();
    for f in traj.snapshots.iter().filter(|f| f.t >= mid) {
        let cr = level_crossings(&traj.grid, &f.b, level);
        if cr.len() != 1 {
            return Err(regime(format!("not a front: {} level crossings at t = {}", cr.len(), f.t)));
        }
        pts.push((f.t, cr[0]));
    }
    if pts.len() < 3 {
        return Err(domain("need at least three snapshots in the final half of the run"));
    }
    let m = pts.len() as f64;
    let (st, sx) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (tm, xm) = (st / m, sx / m);
    let (mut stt, mut stx) = (0.0, 0.0);
    for &(t, x) in &pts {
        stt += (t - tm) * (t - tm);
        stx += (t - tm) * (x - xm);
    }
    let speed = stx / stt;
    let res = pts.iter().map(|&(t, x)| (x - xm - speed * (t - tm)).powi(2)).sum::<f64>() / m;
    Ok(SpeedFit { speed, residual: res.sqrt(), samples: pts.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    UniformBare,
    UniformVeg,
    Front,
    Spot,
    Gap,
    Pulse,
    Periodic,
    Turing,
    Other,
}

impl Pattern {
    pub fn label(self) -> &'static str {
        match self {
            Pattern::UniformBare => "uniform_bare",
            Pattern::UniformVeg => "uniform_veg",
            Pattern::Front => "front",
            Pattern::Spot => "spot",
            Pattern::Gap => "gap",
            Pattern::Pulse => "pulse",
            Pattern::Periodic => "periodic",
            Pattern::Turing => "turing",
            Pattern::Other => "other",
        }
    }
}

/// Longest run (in x) over which B stays within 10% of the slaved value
/// b₊(W) of the local water level, in units of the local fast width.
pub fn plateau_span(grid: &Grid, f: &Field, a: f64) -> f64 {
    let mut best: f64 = 0.0;
    let mut run = 0.0;
    let mut width_sum = 0.0;
    for i in 0..f.b.len() {
        let on = b_plus(f.w[i], a).filter(|bp| (f.b[i] - bp).abs() <= 0.1 * bp);
        match on {
            Some(bp) => {
                run += grid.dx;
                width_sum += grid.dx * (2.0f64).sqrt() / (bp * f.w[i].sqrt());
                best = best.max(run * run / width_sum);
            }
            None => {
                run = 0.0;
                width_sum = 0.0;
            }
        }
    }
    best
}

/// Maximal index runs where `b > level`.
fn runs_above(b: &[f64], level: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &v) in b.iter().enumerate() {
        match (v > level, start) {
            (true, None) => start = Some(i),
            (false, Some(s0)) => {
                out.push((s0, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s0) = start {
        out.push((s0, b.len() - 1));
    }
    out
}

/// Pattern type of a late-time snapshot.
pub fn classify_pattern(grid: &Grid, f: &Field, s: &ScaledParams) -> Pattern {
    let n = f.b.len();
    if n == 0 {
        return Pattern::Other;
    }
    let bmax = f.b.iter().cloned().fold(f64::MIN, f64::max);
    let bmin = f.b.iter().cloned().fold(f64::MAX, f64::min);
    if bmax < 1e-3 {
        return Pattern::UniformBare;
    }
    if bmax - bmin < 1e-3 * (1.0 + bmax) {
        return Pattern::UniformVeg;
    }
    let level = 0.5 * (bmax + bmin);
    let runs = runs_above(&f.b, level);
    let touches_left = runs.first().is_some_and(|r| r.0 == 0);
    let touches_right = runs.last().is_some_and(|r| r.1 == n - 1);
    let interior = runs.iter().filter(|r| r.0 > 0 && r.1 < n - 1).count();
    let plateau = plateau_span(grid, f, s.a) > 5.0;
    let deep = bmin < 0.05 * bmax;

    match (runs.len(), touches_left, touches_right) {
        (1, true, false) | (1, false, true) => return Pattern::Front,
        (1, false, false) => return if plateau { Pattern::Spot } else { Pattern::Pulse },
        (2, true, true) => return Pattern::Gap,
        _ => {}
    }
    if interior >= 2 {
        let centres: Vec<f64> = runs
            .iter()
            .filter(|r| r.0 > 0 && r.1 < n - 1)
            .map(|r| 0.5 * (grid.x(r.0) + grid.x(r.1)))
            .collect();
        let gaps: Vec<f64> = centres.windows(2).map(|p| p[1] - p[0]).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let sd = (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / gaps.len() as f64).sqrt();
        if sd <= 0.3 * mean {
            return if deep { Pattern::Periodic } else { Pattern::Turing };
        }
    }
    Pattern::Other
}

#[derive(Debug, Clone, PartialEq)]
pub enum IcKind {
    /// Vegetation on the left of `at`, bare soil on the right.
    Step { at: f64 },
    /// Vegetated patch of the given width centred at `at`.
    Bump { at: f64, width: f64 },
    /// Bare patch of the given width centred at `at`, vegetated elsewhere.
    Gap { at: f64, width: f64 },
    /// Uniform state (bare if `bare`) with seeded uniform noise.
    RandomPerturbation { bare: bool, amplitude: f64, seed: u64 },
    /// Spatial realisation of a singular skeleton, centred in the domain.
    FromSkeleton { skeleton: OrbitSkeleton, tail: f64 },
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Initial fields. Vegetated pieces use the M⁺ uniform state.
pub fn initial_conditions(kind: &IcKind, s: &ScaledParams, grid: &Grid) -> Result<Field> {
    let xs = grid.xs();
    let w0 = s.w_bare();
    let veg = || vegetated_reference(s).ok_or_else(|| regime("no vegetated level on M+"));
    let mut f = match kind {
        IcKind::Step { at } => {
            let v = veg()?;
            let ind: Vec<f64> = xs.iter().map(|&x| logistic(-(x - at))).collect();
            blend(&ind, v, w0)
        }
        IcKind::Bump { at, width } => {
            let v = veg()?;
            let ind: Vec<f64> = xs.iter().map(|&x| logistic(0.5 * width - (x - at).abs())).collect();
            blend(&ind, v, w0)
        }
        IcKind::Gap { at, width } => {
            let v = veg()?;
            let ind: Vec<f64> = xs.iter().map(|&x| logistic((x - at).abs() - 0.5 * width)).collect();
            blend(&ind, v, w0)
        }
        IcKind::RandomPerturbation { bare, amplitude, seed } => {
            let (b, w) = if *bare { (0.0, w0) } else { veg()? };
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut f = Field::uniform(grid.n_points, b, w);
            for i in 0..grid.n_points {
                f.b[i] = (f.b[i] + amplitude * rng.gen_range(-1.0..1.0)).max(0.0);
                f.w[i] = (f.w[i] + amplitude * rng.gen_range(-1.0..1.0)).max(0.0);
            }
            f
        }
        IcKind::FromSkeleton { skeleton, tail } => from_skeleton(skeleton, *tail, s, grid)?,
    };
    f.t = 0.0;
    Ok(f)
}

fn blend(ind: &[f64], (vb, vw): (f64, f64), w0: f64) -> Field {
    Field {
        b: ind.iter().map(|&h| h * vb).collect(),
        w: ind.iter().map(|&h| h * vw + (1.0 - h) * w0).collect(),
        t: 0.0,
    }
}

fn from_skeleton(sk: &OrbitSkeleton, tail: f64, s: &ScaledParams, grid: &Grid) -> Result<Field> {
    let eps = s.eps;
    let dx_slow = (grid.dx * eps).min(0.05);
    let pts = sk.sample(s, tail, dx_slow)?;
    if pts.len() < 2 {
        return Err(numerical("skeleton sample is empty"));
    }
    let span = (pts.last().unwrap().0 - pts[0].0) / eps;
    if span > grid.length {
        return Err(domain(format!("skeleton spans {span:.3} > domain length {:.3}", grid.length)));
    }
    let shift = 0.5 * (grid.length - span) - pts[0].0 / eps;
    let xk: Vec<f64> = pts.iter().map(|p| p.0 / eps + shift).collect();
    // jumps: consecutive samples switching manifold
    let mut jumps = Vec::new();
    for i in 1..pts.len() {
        if pts[i].3 != pts[i - 1].3 {
            let up = pts[i].3;
            let wj = if up { pts[i].1 } else { pts[i - 1].1 };
            jumps.push((0.5 * (xk[i] + xk[i - 1]), wj, up));
        }
    }
    let w_at = |x: f64| -> (f64, bool) {
        let j = xk.partition_point(|&v| v < x).clamp(1, xk.len() - 1);
        let th = ((x - xk[j - 1]) / (xk[j] - xk[j - 1]).max(1e-300)).clamp(0.0, 1.0);
        let w = pts[j - 1].1 + th * (pts[j].1 - pts[j - 1].1);
        let on = if th < 0.5 { pts[j - 1].3 } else { pts[j].3 };
        (w, on)
    };
    let mut f = Field::uniform(grid.n_points, 0.0, 0.0);
    for i in 0..grid.n_points {
        let x = grid.x(i);
        let (w, on) = w_at(x);
        f.w[i] = w.max(0.0);
        // nearest jump decides the fast profile near it
        let near = jumps.iter().min_by(|p, q| (p.0 - x).abs().partial_cmp(&(q.0 - x).abs()).unwrap());
        f.b[i] = match near {
            Some(&(xj, wj, up)) if (x - xj).abs() < 12.0 => {
                let xi = if up { x - xj } else { xj - x };
                fast_front_profile(wj, s.a, Branch::Minus, &[xi])?[0].0
            }
            _ if on => b_plus(w, s.a).unwrap_or(0.0),
            _ => 0.0,
        };
    }
    Ok(f)
}
