//! Subcommands. Each takes the resolved config and the output directory and
//! returns the files it wrote plus a short key/value summary for stdout.

use std::path::{Path, PathBuf};

use dryland_core::orbits::{
    all_self_consistent_fronts, build_gap_skeleton, build_periodic_skeleton, build_spot_skeleton, find_front_to_periodic,
    find_primary_fronts, periodic_rho_interval, shoot_4d, stationary_front_roots, FrontKind, FrontResult, FrozenFamily,
    HigherFrontOptions, JumpDirection, OrbitSkeleton, ShootKind, SkeletonSegment, SlowManifold,
};
use dryland_core::pde::{classify_pattern, initial_conditions, measure_front_speed, simulate, Grid, IcKind, SimOptions, Trajectory};
use dryland_core::slow::{
    bt_normal_form, center_and_saddle, find_persistent_periodic, homoclinic_friction_zero, melnikov_homoclinic, melnikov_periodic,
    rho1, PeriodicPersistence,
};
use dryland_core::{derive_coeffs, scale_params, ScaledParams, UnscaledParams};
use rayon::prelude::*;

use crate::config::Config;
use crate::output::{num, Table};
use crate::CliError;

pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: Vec<(String, String)>,
}

impl Report {
    fn new() -> Self {
        Report { files: Vec::new(), summary: Vec::new() }
    }

    fn note(&mut self, k: &str, v: impl Into<String>) {
        self.summary.push((k.to_string(), v.into()));
    }

    fn write(&mut self, t: &Table, dir: &Path, name: &str) -> Result<(), CliError> {
        let p = dir.join(name);
        t.write(&p)?;
        self.files.push(p);
        Ok(())
    }
}

const UNSCALED_KEYS: [&str; 10] = [
    "lambda_growth",
    "gamma_uptake",
    "shading_r",
    "max_biomass_k",
    "root_shoot_e",
    "mortality_m",
    "evaporation_n",
    "precipitation_p",
    "diff_b",
    "diff_w",
];

pub fn unscaled_params(cfg: &Config) -> Result<UnscaledParams, CliError> {
    let v: Vec<f64> = UNSCALED_KEYS.iter().map(|k| cfg.f64(k)).collect::<Result<_, _>>()?;
    Ok(UnscaledParams {
        lambda_growth: v[0],
        gamma_uptake: v[1],
        shading_r: v[2],
        max_biomass_k: v[3],
        root_shoot_e: v[4],
        mortality_m: v[5],
        evaporation_n: v[6],
        precipitation_p: v[7],
        diff_b: v[8],
        diff_w: v[9],
    })
}

fn eps_of(cfg: &Config) -> Result<f64, CliError> {
    if cfg.has("eps") {
        cfg.f64("eps")
    } else {
        Ok(cfg.f64("eps2")?.sqrt())
    }
}

/// Frozen family from `a`, `family.A`, `family.C` and `family.D` (or
/// `family.sigma`, with 𝒟 = 𝒞²/(4𝒜) − 𝒜σ²).
#[allow(non_snake_case)]
pub fn frozen_family(cfg: &Config) -> Result<Option<FrozenFamily>, CliError> {
    if !cfg.has("family.A") {
        return Ok(None);
    }
    let (a, A, C) = (cfg.f64("a")?, cfg.f64("family.A")?, cfg.f64("family.C")?);
    let D = if cfg.has("family.D") {
        cfg.f64("family.D")?
    } else {
        let sg = cfg.f64("family.sigma")?;
        C * C / (4.0 * A) - A * sg * sg
    };
    Ok(Some(FrozenFamily { a, A, C, D }))
}

/// Scaled parameters, either given directly or as the member Φ of a frozen
/// family (`family.extended = true` admits Θ < 0).
pub fn scaled_params(cfg: &Config) -> Result<ScaledParams, CliError> {
    let eps = eps_of(cfg)?;
    if let Some(fam) = frozen_family(cfg)? {
        let phi = cfg.f64("phi")?;
        let s = if cfg.bool_or("family.extended", false)? { fam.params_extended(phi, eps) } else { fam.params(phi, eps) };
        return Ok(s?);
    }
    let s = ScaledParams::new(cfg.f64("a")?, cfg.f64("psi")?, cfg.f64("phi")?, cfg.f64("omega")?, cfg.f64("theta")?, eps)?;
    Ok(s)
}

fn param_rows(t: &mut Table, s: &ScaledParams) {
    for (k, v) in s.fields() {
        t.push(vec!["scaled".into(), k.into(), num(v)]);
    }
    t.push(vec!["scaled".into(), "eps2".into(), num(s.eps2())]);
}

pub fn cmd_scale(cfg: &Config, out: &Path) -> Result<Report, CliError> {
    let u = unscaled_params(cfg)?;
    let s = scale_params(&u)?;
    let k = derive_coeffs(&s);
    let mut t = Table::new(&["group", "name", "value"]);
    for (n, v) in u.fields() {
        t.push(vec!["unscaled".into(), n.into(), num(v)]);
    }
    param_rows(&mut t, &s);
    let opt = |x: Option<f64>| x.map(num).unwrap_or_else(|| "nan".into());
    for (n, v) in [("A", num(k.A)), ("B", num(k.Bc)), ("C", num(k.C)), ("D", num(k.D)), ("beta", num(k.beta))] {
        t.push(vec!["derived".into(), n.into(), v]);
    }
    for (n, v) in [("chi", k.chi), ("w_sn", k.w_sn), ("sigma", k.sigma), ("e_saddle", k.e_saddle)] {
        t.push(vec!["derived".into(), n.into(), opt(v)]);
    }
    let mut r = Report::new();
    for (k, v) in s.fields() {
        r.note(k, num(v));
    }
    r.note("eps2", num(s.eps2()));
    r.write(&t, out, "scale.csv")?;
    Ok(r)
}

fn front_row(t: &mut Table, f: &FrontResult, phi: f64) {
    t.push(vec![
        f.kind.label(),
        num(f.c),
        num(f.touchdown.w),
        num(f.touchdown.q),
        num(f.h_level),
        num(f.residual),
        f.degenerate.to_string(),
        num(phi),
    ]);
}

pub fn cmd_fronts(cfg: &Config, out: &Path) -> Result<Report, CliError> {
    let s = scaled_params(cfg)?;
    let k = derive_coeffs(&s);
    let mut t = Table::new(&["kind", "c", "w_touchdown", "q_touchdown", "h_level", "residual", "degenerate", "phi"]);
    let mut r = Report::new();
    let prim = find_primary_fronts(&s)?;
    for f in &prim {
        front_row(&mut t, f, s.phi);
    }
    r.note("primary", prim.len().to_string());

    let loop_exists = center_and_saddle(&k).is_ok();
    let k_max = cfg.usize_or("fronts.k_max", 3)?;
    if loop_exists && k_max > 0 {
        let o = HigherFrontOptions { eps: Some(s.eps), ..Default::default() };
        let all = all_self_consistent_fronts(&s, k_max, &o)?;
        let higher: Vec<_> = all.iter().filter(|f| matches!(f.kind, FrontKind::HigherOrder(_))).collect();
        for f in &higher {
            front_row(&mut t, f, s.phi);
        }
        r.note("higher_order", higher.len().to_string());
    }
    if loop_exists {
        if let Ok(PeriodicPersistence::Persists { h_star }) = find_persistent_periodic(&k, &s) {
            let tp = find_front_to_periodic(&s, h_star)?;
            for f in &tp {
                front_row(&mut t, f, s.phi);
            }
            r.note("to_periodic", tp.len().to_string());
        }
    }
    if cfg.bool_or("fronts.refine", false)? {
        for f in &prim {
            let g = shoot_4d(&s, s.eps, f.c, ShootKind::BareToVegetated)?;
            front_row(&mut t, &g, s.phi);
        }
    }
    if let Some(fam) = frozen_family(cfg)? {
        let (lo, hi) = if cfg.bool_or("family.extended", false)? { fam.phi_range_extended() } else { fam.phi_range() };
        let lo = cfg.f64_or("fronts.phi_lo", lo.max(1e-9) * (1.0 + 1e-9))?;
        let hi = cfg.f64_or("fronts.phi_hi", if hi.is_finite() { hi } else { 1e3 * lo })?;
        let roots = stationary_front_roots(&fam, lo, hi, cfg.usize_or("fronts.n_scan", 400)?)?;
        for phi in &roots {
            let nan = f64::NAN;
            t.push(vec![FrontKind::Stationary.label(), num(0.0), num(nan), num(nan), num(nan), num(0.0), "false".into(), num(*phi)]);
        }
        r.note("stationary_roots", roots.len().to_string());
    }
    r.write(&t, out, "fronts.csv")?;
    Ok(r)
}

fn build_skeleton(cfg: &Config, s: &ScaledParams) -> Result<OrbitSkeleton, CliError> {
    let winding = cfg.usize_or("skeleton.winding", 1)?;
    let sk = match cfg.str_or("skeleton.kind", "spot") {
        "spot" => build_spot_skeleton(s, winding)?,
        "gap" => build_gap_skeleton(s)?,
        "periodic" => {
            let rho = match cfg.get("skeleton.rho") {
                Some(_) => cfg.f64("skeleton.rho")?,
                None => {
                    let (lo, hi) = periodic_rho_interval(s, 200)
                        .ok_or_else(|| CliError::Core(dryland_core::Error::Regime("no periodic skeleton family".into())))?;
                    0.5 * (lo + hi)
                }
            };
            build_periodic_skeleton(s, rho, winding)?
        }
        other => return Err(CliError::Usage(format!("skeleton.kind: unknown kind '{other}'"))),
    };
    Ok(sk)
}

pub fn cmd_skeleton(cfg: &Config, out: &Path) -> Result<Report, CliError> {
    let s = scaled_params(cfg)?;
    let sk = build_skeleton(cfg, &s)?;
    let mut t = Table::new(&["index", "segment", "manifold", "direction", "w_start", "q_start", "w_end", "q_end", "h_level", "length", "winding"]);
    for (i, seg) in sk.segments.iter().enumerate() {
        let row = match *seg {
            SkeletonSegment::Slow { manifold, h_level, start, end, winding, length } => vec![
                i.to_string(),
                "slow".into(),
                match manifold {
                    SlowManifold::M0 => "M0".into(),
                    SlowManifold::Mplus => "M+".into(),
                },
                String::new(),
                num(start.0),
                num(start.1),
                num(end.0),
                num(end.1),
                num(h_level),
                num(length),
                winding.to_string(),
            ],
            SkeletonSegment::Jump { direction, w, q } => vec![
                i.to_string(),
                "jump".into(),
                String::new(),
                match direction {
                    JumpDirection::Up => "up".into(),
                    JumpDirection::Down => "down".into(),
                },
                num(w),
                num(q),
                num(w),
                num(q),
                num(f64::NAN),
                num(0.0),
                "0".into(),
            ],
        };
        t.push(row);
    }
    let mut r = Report::new();
    r.note("segments", sk.segments.len().to_string());
    r.note("closure_defect", num(sk.closure_defect()));
    r.write(&t, out, "skeleton.csv")?;

    let tail = cfg.f64_or("skeleton.tail", 5.0)?;
    let pts = sk.sample(&s, tail, cfg.f64_or("skeleton.dx", 0.01)?)?;
    let mut ts = Table::new(&["X", "w", "q", "on_mplus"]);
    for (x, w, q, on) in pts {
        ts.push(vec![num(x), num(w), num(q), on.to_string()]);
    }
    r.write(&ts, out, "skeleton_sample.csv")?;

    if cfg.bool_or("skeleton.ic", false)? {
        let g = grid(cfg, &s)?;
        let f = initial_conditions(&IcKind::FromSkeleton { skeleton: sk, tail }, &s, &g)?;
        r.write(&field_table(&g, &f.b, &f.w), out, "skeleton_ic.csv")?;
    }
    Ok(r)
}

fn grid(cfg: &Config, s: &ScaledParams) -> Result<Grid, CliError> {
    let length = cfg.f64_or("sim.length", 20.0 / s.eps)?;
    let dx = cfg.f64_or("sim.dx", 0.1)?;
    Ok(Grid::new(length, (length / dx).round().max(1.0) as usize)?)
}

fn field_table(g: &Grid, b: &[f64], w: &[f64]) -> Table {
    let mut t = Table::new(&["x", "B", "W"]);
    for i in 0..g.n_points {
        t.push(vec![num(g.x(i)), num(b[i]), num(w[i])]);
    }
    t
}

pub struct SimOutcome {
    pub grid: Grid,
    pub traj: Trajectory,
    pub pattern: &'static str,
    pub speed: Option<(f64, f64)>,
}

/// Builds the initial condition from `sim.*` keys and runs the simulator.
pub fn run_simulation(cfg: &Config, s: &ScaledParams) -> Result<SimOutcome, CliError> {
    let g = grid(cfg, s)?;
    let l = g.length;
    let kind = match cfg.str_or("sim.ic", "step") {
        "step" => IcKind::Step { at: cfg.f64_or("sim.at", 0.3 * l)? },
        "bump" => IcKind::Bump { at: cfg.f64_or("sim.at", 0.5 * l)?, width: cfg.f64_or("sim.width", 0.2 * l)? },
        "gap" => IcKind::Gap { at: cfg.f64_or("sim.at", 0.5 * l)?, width: cfg.f64_or("sim.width", 0.2 * l)? },
        "random" => IcKind::RandomPerturbation {
            bare: cfg.bool_or("sim.bare", false)?,
            amplitude: cfg.f64_or("sim.amplitude", 1e-3)?,
            seed: cfg.usize_or("sim.seed", 0)? as u64,
        },
        "skeleton" => IcKind::FromSkeleton { skeleton: build_skeleton(cfg, s)?, tail: cfg.f64_or("skeleton.tail", 5.0)? },
        other => return Err(CliError::Usage(format!("sim.ic: unknown kind '{other}'"))),
    };
    let mut ic = initial_conditions(&kind, s, &g)?;
    if cfg.bool_or("sim.mirror", false)? {
        ic = ic.mirrored();
    }
    let t_end = cfg.f64_or("sim.t_end", 500.0)?;
    let o = SimOptions { t_end, dt: cfg.f64_or("sim.dt", 0.02)?, snapshot_every: cfg.f64_or("sim.snapshot_every", t_end / 10.0)? };
    let traj = simulate(s, &g, &ic, &o)?;
    let pattern = classify_pattern(&g, traj.last(), s).label();
    let speed = measure_front_speed(&traj, s).ok().map(|f| (f.speed, f.residual));
    Ok(SimOutcome { grid: g, traj, pattern, speed })
}

pub fn cmd_simulate(cfg: &Config, out: &Path) -> Result<Report, CliError> {
    let s = scaled_params(cfg)?;
    let o = run_simulation(cfg, &s)?;
    let mut r = Report::new();
    if cfg.bool_or("sim.write_snapshots", true)? {
        for (i, f) in o.traj.snapshots.iter().enumerate() {
            r.write(&field_table(&o.grid, &f.b, &f.w), out, &format!("snapshot_{i:05}.csv"))?;
        }
    }
    let mut t = Table::new(&["t_end", "steps", "pattern", "speed", "speed_residual", "mass_defect", "clamped"]);
    let (sp, res) = o.speed.unwrap_or((f64::NAN, f64::NAN));
    t.push(vec![
        num(o.traj.last().t),
        o.traj.steps.to_string(),
        o.pattern.into(),
        num(sp),
        num(res),
        num(o.traj.mass_defect),
        o.traj.clamped.to_string(),
    ]);
    r.write(&t, out, "simulate.csv")?;
    r.note("pattern", o.pattern);
    r.note("speed", num(sp));
    Ok(r)
}

/// Values of the sweep variable: `sweep.steps` points from `sweep.from` to `sweep.to`.
pub fn sweep_values(cfg: &Config) -> Result<(String, Vec<f64>), CliError> {
    let var = cfg.get("sweep.var").ok_or_else(|| CliError::Usage("missing required key 'sweep.var'".into()))?.to_string();
    let (a, b) = (cfg.f64("sweep.from")?, cfg.f64("sweep.to")?);
    let n = cfg.usize_or("sweep.steps", 11)?;
    if n == 0 {
        return Err(CliError::Usage("sweep.steps must be at least 1".into()));
    }
    let vals = (0..n).map(|i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect();
    Ok((var, vals))
}

pub const SWEEP_HEADER: [&str; 15] = [
    "index",
    "value",
    "a",
    "psi",
    "phi",
    "omega",
    "theta",
    "eps",
    "status",
    "n_primary",
    "n_fronts",
    "melnikov_hom",
    "rho1_center",
    "in_s_per",
    "pattern",
];

fn sweep_point(cfg: &Config, var: &str, i: usize, v: f64) -> Vec<String> {
    let mut c = cfg.clone();
    c.insert(var, num(v));
    let mut row = vec![i.to_string(), num(v)];
    let s = match scaled_params(&c) {
        Ok(s) => s,
        Err(e) => {
            row.extend(std::iter::repeat_n(num(f64::NAN), 6));
            row.push(e.code().into());
            row.extend(["0".into(), "0".into(), num(f64::NAN), num(f64::NAN), "false".into(), "na".into()]);
            return row;
        }
    };
    for (_, x) in s.fields() {
        row.push(num(x));
    }
    let k = derive_coeffs(&s);
    let mut status = "ok";
    let n_prim = match find_primary_fronts(&s) {
        Ok(p) => p.len(),
        Err(_) => {
            status = "no_saddle";
            0
        }
    };
    let k_max = c.usize_or("fronts.k_max", 30).unwrap_or(30);
    let cs = center_and_saddle(&k).ok();
    let n_fronts = if cs.is_some() && n_prim > 0 {
        all_self_consistent_fronts(&s, k_max, &HigherFrontOptions::default()).map(|v| v.len()).unwrap_or_else(|_| {
            status = "numerical";
            n_prim
        })
    } else {
        n_prim
    };
    let mel = melnikov_homoclinic(&k, &s).map(|m| m.value).unwrap_or(f64::NAN);
    let rho_c = cs.map(|(c, _)| rho1(c.w, &k, s.theta)).unwrap_or(f64::NAN);
    let per = cs.is_some() && matches!(find_persistent_periodic(&k, &s), Ok(PeriodicPersistence::Persists { .. }));
    let pattern = if c.bool_or("sweep.simulate", false).unwrap_or(false) {
        run_simulation(&c, &s).map(|o| o.pattern).unwrap_or("error")
    } else {
        "na"
    };
    row.extend([status.into(), n_prim.to_string(), n_fronts.to_string(), num(mel), num(rho_c), per.to_string(), pattern.into()]);
    row
}

/// One row per sweep point, computed on `workers` threads and written in
/// sweep order.
pub fn sweep_table(cfg: &Config, workers: usize) -> Result<Table, CliError> {
    let (var, vals) = sweep_values(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("worker pool: {e}")))?;
    let rows: Vec<Vec<String>> = pool.install(|| vals.par_iter().enumerate().map(|(i, &v)| sweep_point(cfg, &var, i, v)).collect());
    let mut t = Table::new(&SWEEP_HEADER);
    for r in rows {
        t.push(r);
    }
    Ok(t)
}

pub fn cmd_sweep(cfg: &Config, out: &Path, workers: usize) -> Result<Report, CliError> {
    let t = sweep_table(cfg, workers)?;
    let mut r = Report::new();
    r.note("points", t.len().to_string());
    r.write(&t, out, "sweep.csv")?;
    Ok(r)
}

pub fn cmd_melnikov(cfg: &Config, out: &Path) -> Result<Report, CliError> {
    let s = scaled_params(cfg)?;
    let k = derive_coeffs(&s);
    let (center, saddle) = center_and_saddle(&k)?;
    let mut t = Table::new(&["name", "value"]);
    let hom = melnikov_homoclinic(&k, &s)?;
    let row = |t: &mut Table, n: &str, v: f64| t.push(vec![n.into(), num(v)]);
    row(&mut t, "w_center", center.w);
    row(&mut t, "w_saddle", saddle.w);
    row(&mut t, "delta_h_hom", hom.value);
    row(&mut t, "delta_h_hom_quad_error", hom.quadrature_error);
    row(&mut t, "r_hopf", rho1(center.w, &k, s.theta));
    row(&mut t, "r_hom", hom.value);
    match homoclinic_friction_zero(&k) {
        Ok((wz, th)) => {
            row(&mut t, "hom_friction_zero_w", wz);
            row(&mut t, "hom_friction_zero_theta", th);
        }
        Err(_) => {
            row(&mut t, "hom_friction_zero_w", f64::NAN);
            row(&mut t, "hom_friction_zero_theta", f64::NAN);
        }
    }
    let per = find_persistent_periodic(&k, &s)?;
    let h_star = match per {
        PeriodicPersistence::Persists { h_star } => h_star,
        PeriodicPersistence::Absent { .. } => f64::NAN,
    };
    row(&mut t, "periodic_h_star", h_star);
    let c = match cfg.get("melnikov.c") {
        Some(_) => cfg.f64("melnikov.c")?,
        None => find_primary_fronts(&s).ok().and_then(|p| p.first().map(|f| f.c)).unwrap_or(-1.0),
    };
    row(&mut t, "bt_c", c);
    match bt_normal_form(&k, &s, c, s.eps) {
        Ok(bt) => {
            row(&mut t, "bt_beta1", bt.beta1);
            row(&mut t, "bt_beta2", bt.beta2);
            row(&mut t, "bt_s", bt.s_sign);
            for (i, m) in bt.mu.iter().enumerate() {
                row(&mut t, &format!("bt_mu{}", i + 1), *m);
            }
            row(&mut t, "bt_delta", bt.delta);
            row(&mut t, "bt_in_periodic_wedge", if bt.in_periodic_wedge { 1.0 } else { 0.0 });
        }
        Err(_) => row(&mut t, "bt_beta1", f64::NAN),
    }
    let mut r = Report::new();
    r.note("delta_h_hom", num(hom.value));
    r.note("periodic_h_star", num(h_star));
    r.write(&t, out, "melnikov.csv")?;

    let n = cfg.usize_or("melnikov.levels", 50)?.max(2);
    let mut curve = Table::new(&["h", "delta_h", "quad_error"]);
    let span = saddle.h_value - center.h_value;
    for i in 0..n {
        let h = center.h_value + span * (1e-4 + (1.0 - 2e-4) * i as f64 / (n - 1) as f64);
        let (v, e) = melnikov_periodic(h, &k, &s).map(|m| (m.value, m.quadrature_error)).unwrap_or((f64::NAN, f64::NAN));
        curve.push(vec![num(h), num(v), num(e)]);
    }
    r.write(&curve, out, "melnikov_curve.csv")?;
    Ok(r)
}
