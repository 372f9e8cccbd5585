use dryland_core::equilibria::{full_equilibria, pde_flags, StabilityFlag};
use dryland_core::pde::{initial_conditions, measure_front_speed, simulate, Field, Grid, IcKind, SimOptions};
use dryland_core::ScaledParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn stable_uniform_states_persist_under_small_noise() {
    let sets = [
        ScaledParams::with_eps2(0.2, 0.5, 0.3, 0.1, 0.2, 0.01).unwrap(),
        ScaledParams::with_eps2(0.0008, 1.6248, 0.3, 0.1, 0.2, 0.005).unwrap(),
        ScaledParams::with_eps2(0.032, 1.619, 0.3, 0.1, 0.5, 0.01).unwrap(),
    ];
    let mut checked = 0;
    for s in sets {
        let g = Grid::new(40.0, 256).unwrap();
        for bs in full_equilibria(&s) {
            if pde_flags(&bs, &s) != StabilityFlag::Stable {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut f = Field::uniform(256, bs.b, bs.w);
            for i in 0..256 {
                if bs.b > 0.0 {
                    f.b[i] += 1e-6 * rng.gen_range(-1.0..1.0);
                }
                f.w[i] += 1e-6 * rng.gen_range(-1.0..1.0);
            }
            let tr = simulate(&s, &g, &f, &SimOptions { t_end: 100.0, dt: 0.02, snapshot_every: 50.0 }).unwrap();
            let last = tr.last();
            assert!(max_diff(&last.b, &vec![bs.b; 256]) < 1e-8, "{bs:?}");
            assert!(max_diff(&last.w, &vec![bs.w; 256]) < 1e-8, "{bs:?}");
            checked += 1;
        }
    }
    assert!(checked >= 3);
}

#[test]
fn translation_shifts_the_solution() {
    let s = ScaledParams::with_eps2(0.0008, 1.6248, 0.3, 0.1, 0.2, 0.005).unwrap();
    let g = Grid::new(400.0, 4000).unwrap();
    let shift = 50; // grid cells
    let a = initial_conditions(&IcKind::Bump { at: 190.0, width: 8.0 }, &s, &g).unwrap();
    let b = initial_conditions(&IcKind::Bump { at: 190.0 + shift as f64 * g.dx, width: 8.0 }, &s, &g).unwrap();
    let o = SimOptions { t_end: 1.0, dt: 0.01, snapshot_every: 1.0 };
    let (ta, tb) = (simulate(&s, &g, &a, &o).unwrap(), simulate(&s, &g, &b, &o).unwrap());
    let (fa, fb) = (ta.last(), tb.last());
    // W spreads over √(t/ε²) ≈ 30 here; the boundaries are ≥ 150 away
    let d = (1000..3000).map(|i| (fa.b[i] - fb.b[i + shift]).abs().max((fa.w[i] - fb.w[i + shift]).abs())).fold(0.0, f64::max);
    assert!(d < 1e-8, "{d}");
}

#[test]
fn mirrored_front_runs_backwards() {
    let s = ScaledParams::with_eps2(0.0008, 1.6248, 0.3, 0.1, 0.2, 0.005).unwrap();
    let g = Grid::new(120.0, 800).unwrap();
    let ic = initial_conditions(&IcKind::Step { at: 40.0 }, &s, &g).unwrap();
    let o = SimOptions { t_end: 400.0, dt: 0.05, snapshot_every: 20.0 };
    let fwd = measure_front_speed(&simulate(&s, &g, &ic, &o).unwrap(), &s).unwrap();
    let bwd = measure_front_speed(&simulate(&s, &g, &ic.mirrored(), &o).unwrap(), &s).unwrap();
    assert!(fwd.speed > 0.0);
    assert!((fwd.speed + bwd.speed).abs() < 1e-9, "{} {}", fwd.speed, bwd.speed);
}

#[test]
fn reversible_spot_stays_symmetric() {
    let s = ScaledParams::with_eps2(0.032, 1.3714, 0.3, 0.1, 0.2, 0.005).unwrap();
    let g = Grid::new(120.0, 800).unwrap();
    let ic = initial_conditions(&IcKind::Bump { at: 60.0, width: 20.0 }, &s, &g).unwrap();
    let tr = simulate(&s, &g, &ic, &SimOptions { t_end: 50.0, dt: 0.02, snapshot_every: 25.0 }).unwrap();
    let f = tr.last();
    let m = f.mirrored();
    assert!(max_diff(&f.b, &m.b) < 1e-9);
    assert!(max_diff(&f.w, &m.w) < 1e-9);
}
