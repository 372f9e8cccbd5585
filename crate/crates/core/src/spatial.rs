//! The four-dimensional travelling-wave system in the co-moving coordinate
//! ξ = x − ct:
//!
//! ```text
//! b' = p
//! p' = w b³ − w b² + (1 − a w) b − c p
//! w' = ε q
//! q' = ε(−Ψ + (Φ + Ω b + Θ b²) w) − ε² c q
//! ```

use crate::numerics::linalg::Mat4;
use crate::params::ScaledParams;

pub type State4 = [f64; 4];

pub fn rhs4(s: &ScaledParams, c: f64, x: &State4) -> State4 {
    let [b, p, w, q] = *x;
    let e = s.eps;
    [
        p,
        w * b * b * b - w * b * b + (1.0 - s.a * w) * b - c * p,
        e * q,
        e * (-s.psi + (s.phi + s.omega * b + s.theta * b * b) * w) - e * e * c * q,
    ]
}

pub fn jac4(s: &ScaledParams, c: f64, x: &State4) -> Mat4 {
    let [b, _p, w, _q] = *x;
    let e = s.eps;
    [
        [0.0, 1.0, 0.0, 0.0],
        [3.0 * w * b * b - 2.0 * w * b + 1.0 - s.a * w, -c, b * b * b - b * b - s.a * b, 0.0],
        [0.0, 0.0, 0.0, e],
        [e * (s.omega + 2.0 * s.theta * b) * w, 0.0, e * (s.phi + s.omega * b + s.theta * b * b), -e * e * c],
    ]
}

/// ∂f/∂c of the right-hand side.
pub fn rhs4_dc(s: &ScaledParams, x: &State4) -> State4 {
    [0.0, -x[1], 0.0, -s.eps * s.eps * x[3]]
}

/// The reflection (ξ, p, q, c) ↦ (−ξ, −p, −q, −c) maps solutions to solutions.
pub fn mirror(x: &State4) -> State4 {
    [x[0], -x[1], x[2], -x[3]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobian_matches_differences() {
        let s = ScaledParams::new(0.1, 1.3, 0.4, 0.2, 0.6, 0.2).unwrap();
        let x = [0.7, -0.2, 4.0, 0.3];
        let c = 0.15;
        let j = jac4(&s, c, &x);
        for col in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[col] += 1e-6;
            xm[col] -= 1e-6;
            let (fp, fm) = (rhs4(&s, c, &xp), rhs4(&s, c, &xm));
            for row in 0..4 {
                let fd = (fp[row] - fm[row]) / 2e-6;
                assert!((fd - j[row][col]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn reversibility() {
        let s = ScaledParams::new(0.1, 1.3, 0.4, 0.2, 0.6, 0.2).unwrap();
        let x = [0.7, -0.2, 4.0, 0.3];
        let f = rhs4(&s, 0.3, &x);
        let g = rhs4(&s, -0.3, &mirror(&x));
        // d/dξ of the mirrored curve at −ξ equals −(mirror of f)
        let m = mirror(&f);
        for i in 0..4 {
            assert!((g[i] + m[i]).abs() < 1e-15);
        }
    }
}
