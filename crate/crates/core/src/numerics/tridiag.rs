//! Factor-once tridiagonal solver (Thomas algorithm).

#[derive(Debug, Clone)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    upper_mod: Vec<f64>,
    inv_diag: Vec<f64>,
}

impl Tridiagonal {
    /// `lower[i]` multiplies `x[i-1]` in row `i` (lower[0] unused),
    /// `upper[i]` multiplies `x[i+1]` (upper[n-1] unused).
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        assert!(lower.len() == n && upper.len() == n && n > 0);
        let mut upper_mod = vec![0.0; n];
        let mut inv_diag = vec![0.0; n];
        let mut d = diag[0];
        inv_diag[0] = 1.0 / d;
        upper_mod[0] = upper[0] * inv_diag[0];
        for i in 1..n {
            d = diag[i] - lower[i] * upper_mod[i - 1];
            inv_diag[i] = 1.0 / d;
            upper_mod[i] = upper[i] * inv_diag[i];
        }
        Tridiagonal { lower: lower.to_vec(), upper_mod, inv_diag }
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] *= self.inv_diag[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_diag[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_mod[i] * rhs[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_known_solution() {
        let n = 50;
        let lower = vec![-1.0; n];
        let upper = vec![-1.0; n];
        let diag = vec![2.5; n];
        let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = diag[i] * x[i];
            if i > 0 {
                b[i] += lower[i] * x[i - 1];
            }
            if i + 1 < n {
                b[i] += upper[i] * x[i + 1];
            }
        }
        let t = Tridiagonal::factor(&lower, &diag, &upper);
        t.solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-12);
        }
    }
}
