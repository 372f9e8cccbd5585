//! The fast reduced layer: the planar (b, p) system at a frozen water level w₀,
//!
//! ```text
//! b' = p,   p' = w₀b³ − w₀b² + (1 − a w₀) b − c p,
//! ```
//!
//! its equilibria, the explicit logistic heteroclinics between b = 0 and b₊,
//! and the relation between the speed of such a jump and the water level.

use crate::error::{domain, Error, Result};
use crate::numerics::roots::brent;

/// Which of the two mirror-image heteroclinic families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

/// Lower end 4/(1+4a) of the normally hyperbolic window 𝒰_a.
pub fn w_fold(a: f64) -> f64 {
    4.0 / (1.0 + 4.0 * a)
}

/// Upper end 1/a of 𝒰_a (infinite for a = 0).
pub fn w_top(a: f64) -> f64 {
    if a > 0.0 {
        1.0 / a
    } else {
        f64::INFINITY
    }
}

/// Water level 9/(2+9a) at which a stationary jump occurs.
pub fn w_stationary(a: f64) -> f64 {
    9.0 / (2.0 + 9.0 * a)
}

/// 𝒲(w) = √(a + ¼ − 1/w), or `None` below the fold.
pub fn cal_w(w: f64, a: f64) -> Option<f64> {
    let r = a + 0.25 - 1.0 / w;
    // tolerate rounding at the fold itself
    (w > 0.0 && r >= -1e-15).then(|| r.max(0.0).sqrt())
}

/// b₊(w) = ½ + 𝒲(w).
pub fn b_plus(w: f64, a: f64) -> Option<f64> {
    cal_w(w, a).map(|x| 0.5 + x)
}

/// Cubic nonlinearity of the fast layer, w b³ − w b² + (1 − a w) b.
pub fn fast_nonlinearity(b: f64, w: f64, a: f64) -> f64 {
    b * (w * b * b - w * b + 1.0 - a * w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastEquilibria {
    pub b0: f64,
    pub b_minus: Option<f64>,
    pub b_plus: Option<f64>,
    pub w0: f64,
    pub a: f64,
    /// w₀ lies in the open window (4/(1+4a), 1/a).
    pub in_window: bool,
}

pub fn fast_equilibria(w0: f64, a: f64) -> FastEquilibria {
    let (b_minus, b_plus) = match cal_w(w0, a) {
        Some(x) if x > 0.0 => (Some(0.5 - x), Some(0.5 + x)),
        _ => (None, None),
    };
    FastEquilibria { b0: 0.0, b_minus, b_plus, w0, a, in_window: w0 > w_fold(a) && w0 < w_top(a) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastHetero {
    pub w0: f64,
    pub branch: Branch,
    /// Logistic rate: b' = n b (b₊ − b).
    pub n: f64,
    pub c: f64,
    pub b_plus: f64,
}

/// c^±(w₀) = ±√(w₀/2)(3𝒲 − ½).
pub fn c_of_w(w0: f64, a: f64, branch: Branch) -> Option<f64> {
    cal_w(w0, a).map(|x| branch.sign() * (0.5 * w0).sqrt() * (3.0 * x - 0.5))
}

fn check_window(w0: f64, a: f64) -> Result<()> {
    let (lo, hi) = (w_fold(a), w_top(a));
    if !(w0 >= lo && w0 <= hi) {
        return Err(domain(format!("w0 = {w0} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// The explicit heteroclinic between b = 0 and b₊ at level w₀.
///
/// The `Plus` family travels with c = c⁺(w₀). For the cubic written above,
/// the logistic profile with that speed has n = −√(w₀/2), i.e. it descends
/// from b₊ to 0 as ξ increases; the `Minus` family is its mirror image and
/// ascends from 0 to b₊.
pub fn het_speed(w0: f64, a: f64, branch: Branch) -> Result<FastHetero> {
    check_window(w0, a)?;
    let c = c_of_w(w0, a, branch).ok_or_else(|| domain("w0 below the fold"))?;
    let n = -branch.sign() * (0.5 * w0).sqrt();
    Ok(FastHetero { w0, branch, n, c, b_plus: b_plus(w0, a).unwrap() })
}

/// Admissible speeds for `wh_of_c` on the given branch.
pub fn c_range(a: f64, branch: Branch) -> (f64, f64) {
    let lo = -1.0 / (2.0 * (1.0 + 4.0 * a)).sqrt();
    let hi = if a > 0.0 { 1.0 / (2.0 * a).sqrt() } else { f64::INFINITY };
    match branch {
        Branch::Plus => (lo, hi),
        Branch::Minus => (-hi, -lo),
    }
}

fn wh_closed(c: f64, a: f64, branch: Branch) -> f64 {
    let c2 = c * c;
    let num = 4.0 * (9.0 + 2.0 * c2).powi(2);
    let root = (2.0 * c2 * (1.0 + 4.0 * a) + 4.0 * (2.0 + 9.0 * a)).sqrt();
    let den = 3.0 * root - branch.sign() * std::f64::consts::SQRT_2 * c;
    num / (den * den)
}

/// Inverse of `c_of_w`: the water level w_h^±(c) at which a jump of the given
/// family travels with speed c.
pub fn wh_of_c(c: f64, a: f64, branch: Branch) -> Result<f64> {
    let (lo, hi) = c_range(a, branch);
    let tol = 1e-14 * (1.0 + c.abs());
    if !(c >= lo - tol && c <= hi + tol) {
        return Err(Error::Domain(format!("c = {c} outside the admissible interval [{lo}, {hi}]")));
    }
    let w = wh_closed(c, a, branch);
    let near_fold = (w / w_fold(a) - 1.0).abs() < 1e-9;
    let ok = c_of_w(w, a, branch).map(|cw| (cw - c).abs() <= 1e-12 * (1.0 + c.abs())).unwrap_or(false);
    // At the fold dc/dw is unbounded, so the round trip cannot be checked in c.
    if near_fold || ok {
        return Ok(w);
    }
    // Safeguard: bracket c^±(w) − c over the window.
    let (wl, wu) = (w_fold(a), if a > 0.0 { 1.0 / a } else { 1e6 });
    let g = |w: f64| c_of_w(w, a, branch).unwrap_or(f64::NAN) - c;
    let (gl, gu) = (g(wl), g(wu));
    if gl == 0.0 {
        return Ok(wl);
    }
    if gu == 0.0 {
        return Ok(wu);
    }
    brent(g, wl, wu, 1e-15, 200)
}

/// Fast Hamiltonian at c = 0, gauged to vanish at the origin.
pub fn fast_hamiltonian(b: f64, p: f64, w0: f64, a: f64) -> f64 {
    let b2 = b * b;
    0.5 * p * p - w0 * b2 * b2 / 4.0 + w0 * b2 * b / 3.0 - (1.0 - a * w0) * b2 / 2.0
}

/// Closed-form logistic heteroclinic sampled on `xi`, centred at ξ = 0.
pub fn fast_front_profile(w0: f64, a: f64, branch: Branch, xi: &[f64]) -> Result<Vec<(f64, f64)>> {
    let h = het_speed(w0, a, branch)?;
    Ok(xi
        .iter()
        .map(|&x| {
            let bp = h.b_plus;
            let b = bp / (1.0 + (-h.n * bp * x).exp());
            (b, h.n * b * (bp - b))
        })
        .collect())
}

/// Residual p' − (nonlinearity − c p) of a profile point, with p' computed
/// analytically from the logistic law.
pub fn profile_residual(h: &FastHetero, a: f64, b: f64) -> f64 {
    let p = h.n * b * (h.b_plus - b);
    let dp = h.n * (h.b_plus - 2.0 * b) * p;
    dp - (fast_nonlinearity(b, h.w0, a) - h.c * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ode::{integrate, Control, OdeOptions};
    use nalgebra::Matrix3;

    #[test]
    fn quarter_a_stationary_level() {
        let a = 0.25;
        let e = fast_equilibria(w_stationary(a), a);
        assert!((e.b_plus.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.b_minus.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let below = fast_equilibria(w_fold(a) * 0.99, a);
        assert!(below.b_plus.is_none() && below.b_minus.is_none());
    }

    #[test]
    fn equilibria_match_companion_roots() {
        // roots of the monic cubic b³ − b² + (1/w − a) b via its companion matrix
        for &(a, w) in &[(0.1, 4.0), (0.3, 3.0), (0.05, 15.0), (0.0, 7.0)] {
            let e = fast_equilibria(w, a);
            let m = Matrix3::new(0.0, 0.0, 0.0, 1.0, 0.0, -(1.0 - a * w) / w, 0.0, 1.0, 1.0);
            let mut r: Vec<f64> = m.complex_eigenvalues().iter().filter(|z| z.im.abs() < 1e-12).map(|z| z.re).collect();
            r.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let mine = [e.b0, e.b_minus.unwrap(), e.b_plus.unwrap()];
            for (x, y) in r.iter().zip(&mine) {
                assert!((x - y).abs() < 1e-12, "{r:?} vs {mine:?}");
            }
        }
    }

    #[test]
    fn stationary_level_has_zero_speed_both_branches() {
        let a = 0.25;
        for br in [Branch::Plus, Branch::Minus] {
            assert!(het_speed(w_stationary(a), a, br).unwrap().c.abs() < 1e-15);
        }
    }

    #[test]
    fn jump_speed_above_stationary_level() {
        let a = 0.25;
        let c = het_speed(w_stationary(a) + 0.1, a, Branch::Plus).unwrap().c;
        assert!((0.16..=0.18).contains(&c), "c = {c}");
    }

    #[test]
    fn endpoints_of_the_speed_map() {
        let a = 0.2;
        let (lo, hi) = c_range(a, Branch::Plus);
        assert!((wh_of_c(lo, a, Branch::Plus).unwrap() / w_fold(a) - 1.0).abs() < 1e-12);
        assert!((wh_of_c(0.0, a, Branch::Plus).unwrap() / w_stationary(a) - 1.0).abs() < 1e-12);
        assert!((wh_of_c(hi, a, Branch::Plus).unwrap() * a - 1.0).abs() < 1e-12);
        let err = wh_of_c(hi + 0.1, a, Branch::Plus).unwrap_err();
        assert!(format!("{err}").contains("admissible"));
    }

    #[test]
    fn mirrored_branch() {
        let a = 0.1;
        let w = 6.0;
        let p = het_speed(w, a, Branch::Plus).unwrap();
        let m = het_speed(w, a, Branch::Minus).unwrap();
        assert_eq!(p.c, -m.c);
        assert_eq!(p.n, -m.n);
        assert_eq!(wh_of_c(0.3, a, Branch::Plus).unwrap(), wh_of_c(-0.3, a, Branch::Minus).unwrap());
    }

    #[test]
    fn profile_shape_and_residual() {
        let a = 0.1;
        let w = 5.0;
        let xi: Vec<f64> = (-400..=400).map(|k| k as f64 * 0.05).collect();
        for br in [Branch::Plus, Branch::Minus] {
            let h = het_speed(w, a, br).unwrap();
            let prof = fast_front_profile(w, a, br, &xi).unwrap();
            assert!((prof[400].0 - 0.5 * h.b_plus).abs() < 1e-15);
            let (first, last) = (prof[0].0, prof[800].0);
            match br {
                Branch::Minus => assert!(first < 1e-6 && (last - h.b_plus).abs() < 1e-6),
                Branch::Plus => assert!(last < 1e-6 && (first - h.b_plus).abs() < 1e-6),
            }
            for &(b, _) in &prof {
                assert!(profile_residual(&h, a, b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fast_energy_conserved_at_zero_speed() {
        let (a, w) = (0.15, 5.0);
        let f = |_t: f64, x: &[f64; 2]| [x[1], fast_nonlinearity(x[0], w, a)];
        let x0 = [0.06, 0.0];
        let h0 = fast_hamiltonian(x0[0], x0[1], w, a);
        let mut drift = 0.0f64;
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        integrate(f, 0.0, x0, 30.0, &opts, |st| {
            drift = drift.max((fast_hamiltonian(st.x1[0], st.x1[1], w, a) - h0).abs());
            Control::Continue
        })
        .unwrap();
        assert!(drift < 1e-8, "drift {drift}");
        assert_eq!(fast_hamiltonian(0.0, 0.0, w, a), 0.0);
        let ws = w_stationary(a);
        assert!(fast_hamiltonian(b_plus(ws, a).unwrap(), 0.0, ws, a).abs() < 1e-14);
    }
}
