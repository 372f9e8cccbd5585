//! Small dense eigen-problems for linearisations of the spatial system.

use nalgebra::{Complex, Matrix4, Vector4};

pub type Mat4 = [[f64; 4]; 4];

pub fn to_matrix(j: &Mat4) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| j[r][c])
}

/// Eigenvalues of a real 4x4 matrix, sorted by real part.
///
/// The real Schur form is tried first with a bounded iteration count; if the
/// QR sweep stalls, the characteristic quartic is solved by Durand–Kerner.
pub fn eigenvalues(j: &Mat4) -> Vec<Complex<f64>> {
    let m = to_matrix(j);
    let mut ev: Vec<Complex<f64>> = match m.try_schur(f64::EPSILON, 2000) {
        Some(schur) => schur.complex_eigenvalues().iter().cloned().collect(),
        None => quartic_roots(&char_poly(j)),
    };
    ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Coefficients c₀..c₃ of det(λI − J) = λ⁴ + c₃λ³ + c₂λ² + c₁λ + c₀ (Faddeev–LeVerrier).
fn char_poly(j: &Mat4) -> [f64; 4] {
    let a = to_matrix(j);
    let mut mk = Matrix4::<f64>::zeros();
    let mut c = [0.0; 5];
    c[4] = 1.0;
    for k in 1..=4 {
        mk = a * mk + Matrix4::identity() * c[5 - k];
        c[4 - k] = -(a * mk).trace() / k as f64;
    }
    [c[0], c[1], c[2], c[3]]
}

fn quartic_roots(c: &[f64; 4]) -> Vec<Complex<f64>> {
    let p = |z: Complex<f64>| (((z + c[3]) * z + c[2]) * z + c[1]) * z + c[0];
    let scale = 1.0 + c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let seed = Complex::new(0.4, 0.9);
    let mut r: Vec<Complex<f64>> = (0..4).map(|k| seed.powi(k) * scale).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..4 {
            let mut den = Complex::new(1.0, 0.0);
            for k in 0..4 {
                if k != i {
                    den *= r[i] - r[k];
                }
            }
            let step = p(r[i]) / den;
            r[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * scale {
            break;
        }
    }
    r
}

fn null_vector(m: Matrix4<f64>) -> Vector4<f64> {
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let mut k = 0;
    for i in 1..4 {
        if svd.singular_values[i] < svd.singular_values[k] {
            k = i;
        }
    }
    let v: Vector4<f64> = v_t.row(k).transpose();
    v / v.norm()
}

/// Right eigenvector for a (real, simple) eigenvalue.
pub fn right_eigenvector(j: &Mat4, lambda: f64) -> [f64; 4] {
    let m = to_matrix(j) - Matrix4::identity() * lambda;
    let v = null_vector(m);
    [v[0], v[1], v[2], v[3]]
}

/// Left eigenvector (row vector l with l J = λ l) for a real eigenvalue.
pub fn left_eigenvector(j: &Mat4, lambda: f64) -> [f64; 4] {
    let m = (to_matrix(j) - Matrix4::identity() * lambda).transpose();
    let v = null_vector(m);
    [v[0], v[1], v[2], v[3]]
}
