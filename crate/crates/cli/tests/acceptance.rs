//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Failures are reported, not raised, so the rest of the workspace suite is
//! unaffected. Set `ACCEPTANCE_STRICT=1` to turn any FAIL into a nonzero exit.

use std::time::{Duration, Instant};

use dryland_cli::commands::sweep_table;
use dryland_cli::{run, Command, Config};
use dryland_core::fast::{fast_equilibria, fast_front_profile, fast_hamiltonian, het_speed, w_fold, w_top, wh_of_c, Branch};
use dryland_core::numerics::ode::{integrate, Control, OdeOptions};
use dryland_core::orbits::{find_primary_fronts, shoot_4d, ShootKind};
use dryland_core::pde::{
    classify_pattern, initial_conditions, measure_front_speed, plateau_span, simulate, Field, Grid, IcKind, Pattern, SimOptions,
};
use dryland_core::slow::{homoclinic_friction_zero, integrate_slow_plus, mplus_correction, slowplus_hamiltonian, Direction, SlowPlusState, SlowStop};
use dryland_core::spatial::rhs4;
use dryland_core::{derive_coeffs, scale_params, ScaledParams, SlowPlusCoeffs, UnscaledParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(t: Duration, limit: Duration) -> bool {
    t <= limit
}

fn c1_scaling() -> Outcome {
    let u = UnscaledParams {
        precipitation_p: 180.0,
        lambda_growth: 0.9,
        max_biomass_k: 0.4,
        root_shoot_e: 18.0,
        mortality_m: 15.0,
        evaporation_n: 15.0,
        shading_r: 0.7,
        gamma_uptake: 12.0,
        diff_w: 150.0,
        diff_b: 1.2,
    };
    let t = Instant::now();
    let s = scale_params(&u).unwrap();
    let el = t.elapsed();
    let mut ok = s.eps2() == 0.008 || (s.eps2() - 0.008).abs() <= f64::EPSILON * 0.008;
    let mut worst: f64 = 0.0;
    for (got, want) in [(s.a, 0.187), (s.psi, 3.84), (s.phi, 1.0), (s.omega, 0.235), (s.theta, 1.71)] {
        let r = ((got - want) / want).abs();
        worst = worst.max(r);
        ok &= r < 5e-3;
    }
    ok &= within(el, Duration::from_millis(1));
    outcome(ok, format!("eps2 {:e}, worst rel dev {worst:.2e}, {el:?}", s.eps2()))
}

fn c2_endpoints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a: f64 = rng.gen_range(0.01..1.0);
        let cases = [
            (-1.0 / (2.0 * (1.0 + 4.0 * a)).sqrt(), 4.0 / (1.0 + 4.0 * a)),
            (0.0, 9.0 / (2.0 + 9.0 * a)),
            (1.0 / (2.0 * a).sqrt(), 1.0 / a),
        ];
        for (c, want) in cases {
            let got = wh_of_c(c, a, Branch::Plus).map(|w| ((w - want) / want).abs()).unwrap_or(f64::INFINITY);
            worst = worst.max(got);
        }
    }
    outcome(worst <= 1e-12, format!("worst rel err {worst:.2e} over 100 a"))
}

fn c3_jump_speed() -> Outcome {
    let a = 0.25;
    let w0 = 9.0 / (2.0 + 9.0 * a) + 0.1;
    let t = Instant::now();
    let c = het_speed(w0, a, Branch::Plus).map(|h| h.c).unwrap_or(f64::NAN);
    let el = t.elapsed();
    outcome((0.16..=0.18).contains(&c) && within(el, Duration::from_millis(1)), format!("c+ = {c:.5}, {el:?}"))
}

fn c4_hamiltonians() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_slow, mut worst_fast): (f64, f64) = (0.0, 0.0);
    let mut regimes = 0;
    while regimes < 50 {
        let s = match ScaledParams::new(
            rng.gen_range(0.01..0.5),
            rng.gen_range(0.1..5.0),
            rng.gen_range(0.1..2.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.01..0.3),
        ) {
            Ok(s) => s,
            Err(_) => continue,
        };
        regimes += 1;
        let k = derive_coeffs(&s);
        let (wf, wt) = (w_fold(s.a), w_top(s.a));

        // slow flow on M⁺ at ε = 0
        let w = wf + rng.gen_range(0.05..0.95) * (wt - wf);
        let st = SlowPlusState { w, q: rng.gen_range(-0.3..0.3) };
        let h0 = slowplus_hamiltonian(st, &k).unwrap();
        let tr = integrate_slow_plus(&k, s.theta, st, 0.0, 0.0, 50.0, Direction::Forward).unwrap();
        let n = if tr.stop == SlowStop::LeftWindow { tr.rows.len() - 1 } else { tr.rows.len() };
        for r in &tr.rows[..n] {
            worst_slow = worst_slow.max((r[3] - h0).abs() / (1.0 + h0.abs()));
        }

        // fast layer at c = 0, on a closed orbit around b₋
        let w0 = wf + rng.gen_range(0.05..0.95) * (wt - wf);
        let eq = fast_equilibria(w0, s.a);
        let (bm, bp) = (eq.b_minus.unwrap(), eq.b_plus.unwrap());
        let hl = |b: f64| fast_hamiltonian(b, 0.0, w0, s.a);
        let gap = (hl(0.0) - hl(bm)).abs().min((hl(bp) - hl(bm)).abs());
        let b0 = loop {
            let r: f64 = rng.gen_range(-0.9..0.9);
            let b = bm + r * if r < 0.0 { bm } else { bp - bm };
            if (hl(b) - hl(bm)).abs() < 0.99 * gap {
                break b;
            }
        };
        let a = s.a;
        let f = |_x: f64, y: &[f64; 2]| [y[1], w0 * y[0].powi(3) - w0 * y[0] * y[0] + (1.0 - a * w0) * y[0]];
        let hf0 = hl(b0);
        let o = OdeOptions { rtol: 1e-12, atol: 1e-14, h_max: 0.5, ..Default::default() };
        integrate(f, 0.0, [b0, 0.0], 50.0, &o, |st| {
            worst_fast = worst_fast.max((fast_hamiltonian(st.x1[0], st.x1[1], w0, a) - hf0).abs());
            Control::Continue
        })
        .unwrap();
    }
    let el = t.elapsed();
    let ok = worst_slow < 1e-8 && worst_fast < 1e-8 && within(el, Duration::from_secs(10));
    outcome(ok, format!("slow {worst_slow:.2e} (relative), fast {worst_fast:.2e}, 50 regimes, {el:?}"))
}

fn c5_five_sevenths() -> Outcome {
    let t = Instant::now();
    let (a, big_a, c) = (0.05, 1.2, -0.6);
    let mut mus = Vec::new();
    for sigma in [1e-2, 5e-3, 1e-3] {
        let d = c * c / (4.0 * big_a) - big_a * sigma * sigma;
        let k = SlowPlusCoeffs::from_frozen(a, big_a, c, d);
        let mu = homoclinic_friction_zero(&k).map(|(wz, _)| (wz - k.w_sn.unwrap()) / (sigma * k.w1_sn.unwrap())).unwrap_or(f64::NAN);
        mus.push(mu);
    }
    let el = t.elapsed();
    let rel = (mus[2] / (-5.0 / 7.0) - 1.0).abs();
    outcome(rel < 0.02 && within(el, Duration::from_secs(30)), format!("mu = {:.5} {:.5} {:.5}, rel dev {rel:.2e}, {el:?}", mus[0], mus[1], mus[2]))
}

/// Invariance defect of b = b₊ + εcq b₁, p = εq p₁ under the travelling-wave flow.
fn manifold_residual(s: &ScaledParams, c: f64, w: f64, q: f64) -> f64 {
    let k = derive_coeffs(s);
    let e = s.eps;
    let graph = |w: f64, q: f64| {
        let (p1, b1, _) = mplus_correction(w, &k, s).unwrap();
        let bp = 0.5 + (0.25 - (1.0 - s.a * w) / w).sqrt();
        (bp + e * c * q * b1, e * q * p1)
    };
    let (b, p) = graph(w, q);
    let f = rhs4(s, c, &[b, p, w, q]);
    let h = 1e-6 * w;
    let (bw1, pw1) = graph(w + h, q);
    let (bw0, pw0) = graph(w - h, q);
    let (bq1, pq1) = graph(w, q + 1e-6);
    let (bq0, pq0) = graph(w, q - 1e-6);
    let (bw, pw) = ((bw1 - bw0) / (2.0 * h), (pw1 - pw0) / (2.0 * h));
    let (bq, pq) = ((bq1 - bq0) / 2e-6, (pq1 - pq0) / 2e-6);
    let r1 = bw * f[2] + bq * f[3] - f[0];
    let r2 = pw * f[2] + pq * f[3] - f[1];
    r1.abs().max(r2.abs())
}

fn c6_manifold_order() -> Outcome {
    let t = Instant::now();
    let s = ScaledParams::new(0.2, 1.0, 0.5, 0.3, 0.7, 0.04).unwrap();
    let (wf, wt) = (w_fold(s.a), w_top(s.a));
    let (c, q) = (0.3, 0.4);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..20 {
        let w = wf + (0.05 + 0.9 * i as f64 / 19.0) * (wt - wf);
        let r1 = manifold_residual(&s, c, w, q);
        let r2 = manifold_residual(&s.with_eps(s.eps / 2.0), c, w, q);
        let ratio = r1 / r2;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let el = t.elapsed();
    let ok = lo >= 3.5 && hi <= 4.5 && within(el, Duration::from_secs(1));
    outcome(ok, format!("halving ratios in [{lo:.3}, {hi:.3}] at 20 w, {el:?}"))
}

fn front_regime() -> ScaledParams {
    ScaledParams::with_eps2(0.0008, 1.6248, 0.3, 0.1, 0.2, 0.005).unwrap()
}

fn c7_shooting() -> Outcome {
    let t = Instant::now();
    let s = front_regime();
    let c0 = find_primary_fronts(&s).unwrap()[0].c;
    let mut d = Vec::new();
    for eps in [0.1, 0.05, 0.025] {
        let c = shoot_4d(&s, eps, c0, ShootKind::BareToVegetated).map(|f| f.c).unwrap_or(f64::NAN);
        d.push((c - c0).abs());
    }
    let el = t.elapsed();
    let (r1, r2) = (d[0] / d[1], d[1] / d[2]);
    let ok = (1.6..=2.4).contains(&r1) && (1.6..=2.4).contains(&r2) && within(el, Duration::from_secs(60));
    outcome(ok, format!("c_prim0 {c0:.6}, |dc| {:.3e} {:.3e} {:.3e}, ratios {r1:.3} {r2:.3}, {el:?}", d[0], d[1], d[2]))
}

fn pattern_run(s: &ScaledParams, ic: &str, t_end: f64) -> (Grid, dryland_core::pde::Trajectory) {
    let g = Grid::for_params(s, 0.15).unwrap();
    let l = g.length;
    let kind = match ic {
        "step" => IcKind::Step { at: 0.3 * l },
        "bump" => IcKind::Bump { at: 0.5 * l, width: 0.2 * l },
        _ => IcKind::Gap { at: 0.5 * l, width: 0.2 * l },
    };
    let f0 = initial_conditions(&kind, s, &g).unwrap();
    let tr = simulate(s, &g, &f0, &SimOptions { t_end, dt: 0.02, snapshot_every: t_end / 20.0 }).unwrap();
    (g, tr)
}

fn c8_patterns() -> Outcome {
    let t = Instant::now();
    let sets = [
        (front_regime(), "step", Pattern::Front),
        (ScaledParams::with_eps2(0.032, 1.3714, 0.3, 0.1, 0.2, 0.005).unwrap(), "bump", Pattern::Spot),
        (ScaledParams::with_eps2(0.032, 1.2762, 0.3, 0.1, 0.2, 0.005).unwrap(), "gap", Pattern::Gap),
        (ScaledParams::with_eps2(0.032, 1.619, 0.3, 0.1, 0.5, 0.01).unwrap(), "step", Pattern::Periodic),
    ];
    let mut ok = true;
    let mut got = Vec::new();
    let mut speed_note = String::new();
    for (i, (s, ic, want)) in sets.iter().enumerate() {
        let (g, tr) = pattern_run(s, ic, 1000.0);
        let p = classify_pattern(&g, tr.last(), s);
        ok &= p == *want;
        got.push(p.label());
        if i == 0 {
            let c0 = find_primary_fronts(s).unwrap()[0].c;
            let pde = measure_front_speed(&tr, s).map(|f| f.speed).unwrap_or(f64::NAN);
            let bvp = shoot_4d(s, s.eps, -c0, ShootKind::VegetatedToBare).map(|f| f.c).unwrap_or(f64::NAN);
            let rel = ((pde - bvp) / bvp).abs();
            ok &= rel < 0.05;
            speed_note = format!("front speed {pde:.6} vs {bvp:.6} (rel {rel:.2e})");
        }
    }
    let el = t.elapsed();
    ok &= within(el, Duration::from_secs(300));
    outcome(ok, format!("classified {got:?}, expected [front, spot, gap, periodic]; {speed_note}; {el:?}"))
}

fn c9_spot_pulse() -> Outcome {
    let t = Instant::now();
    let psi0 = 1.3714;
    let step = 0.005;
    let base = ScaledParams::with_eps2(0.032, psi0, 0.3, 0.1, 0.2, 0.005).unwrap();
    let g = Grid::for_params(&base, 0.15).unwrap();
    let mut f: Field = initial_conditions(&IcKind::Bump { at: 0.5 * g.length, width: 30.0 }, &base, &g).unwrap();
    let mut prev: Option<(f64, Pattern)> = None;
    let mut switch = None;
    let mut trail = Vec::new();
    for i in 0..=30 {
        let psi = psi0 - step * i as f64;
        let s = ScaledParams { psi, ..base };
        let tr = match simulate(&s, &g, &f, &SimOptions { t_end: 400.0, dt: 0.02, snapshot_every: 400.0 }) {
            Ok(tr) => tr,
            Err(e) => return outcome(false, format!("simulation failed at psi {psi}: {e}")),
        };
        f = tr.last().clone();
        let p = classify_pattern(&g, &f, &s);
        trail.push(format!("{psi:.4}:{}({:.1})", p.label(), plateau_span(&g, &f, s.a)));
        if let Some((pp, Pattern::Spot)) = prev {
            if p == Pattern::Pulse {
                switch = Some(0.5 * (pp + psi));
                break;
            }
        }
        if p != Pattern::Spot && p != Pattern::Pulse {
            break;
        }
        prev = Some((psi, p));
    }
    let el = t.elapsed();
    let tail = trail[trail.len().saturating_sub(3)..].join(" ");
    match switch {
        Some(ps) => {
            let ok = (ps - 1.2952).abs() <= 0.02 && within(el, Duration::from_secs(600));
            outcome(ok, format!("spot -> pulse at psi {ps:.4} (target 1.2952 +- 0.02); last steps {tail}; {el:?}"))
        }
        None => outcome(false, format!("no spot -> pulse switch; last steps {tail}; {el:?}")),
    }
}

fn phi_sweep_config() -> Config {
    let mut cfg = Config::default();
    for kv in [
        "a=0.1",
        "family.A=1",
        "family.C=-0.5",
        "family.sigma=0.06",
        "family.extended=true",
        "eps=0.01",
        "sweep.var=phi",
        "sweep.from=0.6",
        "sweep.to=1.0",
        "sweep.steps=21",
        "fronts.k_max=30",
    ] {
        cfg.set(kv).unwrap();
    }
    cfg
}

fn c10_phi_sweep() -> Outcome {
    let t = Instant::now();
    let table = match sweep_table(&phi_sweep_config(), 4) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("sweep failed: {e}")),
    };
    let el = t.elapsed();
    let col = |name: &str| {
        let j = table.column(name).unwrap();
        table.rows().iter().map(|r| r[j].clone()).collect::<Vec<String>>()
    };
    let counts: Vec<usize> = col("n_fronts").iter().map(|v| v.parse().unwrap()).collect();
    let sper: Vec<bool> = col("in_s_per").iter().map(|v| v == "true").collect();
    let peak = *counts.iter().max().unwrap();
    let shape = counts[0] == 0 && peak > 4 && *counts.last().unwrap() == 1;
    let peak_in_sper = counts.iter().zip(&sper).any(|(&n, &p)| p && n > 4);
    let n_sper = sper.iter().filter(|&&p| p).count();
    let ok = shape && peak_in_sper && within(el, Duration::from_secs(300));
    outcome(
        ok,
        format!("counts {counts:?}; shape 0 -> >4 -> 1: {shape}; points in S_per window: {n_sper}; peak inside it: {peak_in_sper}; {el:?}"),
    )
}

fn c11_determinism_and_mirror() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // identical configs, different worker counts, byte-identical files
    let mut cfg = phi_sweep_config();
    cfg.set("sweep.steps=6").unwrap();
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (d, workers) in dirs.iter().zip([1, 1, 3]) {
        run(Command::Sweep, &cfg, d.path(), workers).unwrap();
    }
    for name in ["sweep.csv", "manifest.txt"] {
        let first = std::fs::read(dirs[0].path().join(name)).unwrap();
        let same = dirs[1..].iter().all(|d| std::fs::read(d.path().join(name)).unwrap() == first);
        ok &= same;
        notes.push(format!("{name} identical: {same}"));
    }

    // fast layer: the two jump families are mirror images
    let (a, w0) = (0.25, 4.0);
    let (hp, hm) = (het_speed(w0, a, Branch::Plus).unwrap(), het_speed(w0, a, Branch::Minus).unwrap());
    let xi: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.5).collect();
    let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
    let pp = fast_front_profile(w0, a, Branch::Plus, &xi).unwrap();
    let pm = fast_front_profile(w0, a, Branch::Minus, &neg).unwrap();
    let prof = pp.iter().zip(&pm).map(|(x, y)| (x.0 - y.0).abs().max((x.1 + y.1).abs())).fold(0.0, f64::max);
    let fast_ok = (hp.c + hm.c).abs() < 1e-14 && prof < 1e-12;
    notes.push(format!("fast layer mirror: {fast_ok}"));

    // orbit builder: mirrored front has the opposite speed
    let s = front_regime();
    let c0 = find_primary_fronts(&s).unwrap()[0].c;
    let fwd = shoot_4d(&s, 0.1, c0, ShootKind::BareToVegetated).unwrap();
    let bwd = shoot_4d(&s, 0.1, -c0, ShootKind::VegetatedToBare).unwrap();
    let orbit_ok = (fwd.c + bwd.c).abs() < 1e-8 * (1.0 + fwd.c.abs());
    notes.push(format!("front mirror: {orbit_ok}"));

    // PDE: a mirrored front runs backwards at the same speed
    let g = Grid::new(120.0, 800).unwrap();
    let ic = initial_conditions(&IcKind::Step { at: 40.0 }, &s, &g).unwrap();
    let o = SimOptions { t_end: 400.0, dt: 0.05, snapshot_every: 20.0 };
    let vf = measure_front_speed(&simulate(&s, &g, &ic, &o).unwrap(), &s).unwrap().speed;
    let vb = measure_front_speed(&simulate(&s, &g, &ic.mirrored(), &o).unwrap(), &s).unwrap().speed;
    let pde_ok = (vf + vb).abs() < 1e-9;
    notes.push(format!("PDE mirror: {pde_ok}"));

    ok &= fast_ok && orbit_ok && pde_ok;
    outcome(ok, notes.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("scaling reproduction", c1_scaling),
        ("touch-down endpoints", c2_endpoints),
        ("single-jump speed", c3_jump_speed),
        ("Hamiltonian conservation", c4_hamiltonians),
        ("5/7 asymptotics", c5_five_sevenths),
        ("manifold correction order", c6_manifold_order),
        ("shooting consistency", c7_shooting),
        ("pattern reproduction", c8_patterns),
        ("spot vs pulse transition", c9_spot_pulse),
        ("phi-sweep shape", c10_phi_sweep),
        ("determinism and symmetry", c11_determinism_and_mirror),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {n:>2} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{failed} criterion(s) failed");
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
