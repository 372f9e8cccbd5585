//! Ecological parameters, their scaled images, and the constants of the slow
//! flow on the vegetated manifold.

use crate::error::{Error, Result};

/// Parameters of the dimensional model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnscaledParams {
    pub lambda_growth: f64,
    pub gamma_uptake: f64,
    pub shading_r: f64,
    pub max_biomass_k: f64,
    pub root_shoot_e: f64,
    pub mortality_m: f64,
    pub evaporation_n: f64,
    pub precipitation_p: f64,
    pub diff_b: f64,
    pub diff_w: f64,
}

impl UnscaledParams {
    pub const KEYS: [&'static str; 10] = ["P", "Lambda", "K", "E", "M", "N", "R", "Gamma", "D_W", "D_B"];

    pub fn fields(&self) -> [(&'static str, f64); 10] {
        [
            ("P", self.precipitation_p),
            ("Lambda", self.lambda_growth),
            ("K", self.max_biomass_k),
            ("E", self.root_shoot_e),
            ("M", self.mortality_m),
            ("N", self.evaporation_n),
            ("R", self.shading_r),
            ("Gamma", self.gamma_uptake),
            ("D_W", self.diff_w),
            ("D_B", self.diff_b),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in self.fields() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam(format!("{k} must be positive and finite (got {v})")));
            }
        }
        let ek = self.root_shoot_e * self.max_biomass_k;
        if ek <= 1.0 {
            return Err(Error::NonPositiveAlpha(ek));
        }
        if self.diff_b >= self.diff_w {
            return Err(Error::DiffusionOrder { d_b: self.diff_b, d_w: self.diff_w });
        }
        Ok(())
    }
}

/// Parameters of the scaled system. `eps` is stored; `eps2()` is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParams {
    pub a: f64,
    pub psi: f64,
    pub phi: f64,
    pub omega: f64,
    pub theta: f64,
    pub eps: f64,
}

impl ScaledParams {
    pub fn new(a: f64, psi: f64, phi: f64, omega: f64, theta: f64, eps: f64) -> Result<Self> {
        let s = ScaledParams { a, psi, phi, omega, theta, eps };
        s.validate()?;
        Ok(s)
    }

    /// Convenience constructor taking ε² instead of ε.
    pub fn with_eps2(a: f64, psi: f64, phi: f64, omega: f64, theta: f64, eps2: f64) -> Result<Self> {
        Self::new(a, psi, phi, omega, theta, eps2.sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in [("a", self.a), ("psi", self.psi), ("phi", self.phi), ("theta", self.theta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParam(format!("{k} must be nonnegative and finite (got {v})")));
            }
        }
        if !self.omega.is_finite() {
            return Err(Error::InvalidParam(format!("omega must be finite (got {})", self.omega)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParam(format!("eps must lie in (0, 1) (got {})", self.eps)));
        }
        Ok(())
    }

    /// Like [`ScaledParams::new`] but Θ may be negative; used for frozen
    /// families continued past the ecological domain.
    pub fn new_signed_theta(a: f64, psi: f64, phi: f64, omega: f64, theta: f64, eps: f64) -> Result<Self> {
        let s = ScaledParams { a, psi, phi, omega, theta: theta.abs(), eps };
        s.validate()?;
        if !theta.is_finite() {
            return Err(Error::InvalidParam(format!("theta must be finite (got {theta})")));
        }
        Ok(ScaledParams { theta, ..s })
    }

    pub fn eps2(&self) -> f64 {
        self.eps * self.eps
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    /// Bare-soil water level Ψ/Φ.
    pub fn w_bare(&self) -> f64 {
        self.psi / self.phi
    }

    pub fn fields(&self) -> [(&'static str, f64); 6] {
        [("a", self.a), ("psi", self.psi), ("phi", self.phi), ("omega", self.omega), ("theta", self.theta), ("eps", self.eps)]
    }
}

pub fn scale_params(u: &UnscaledParams) -> Result<ScaledParams> {
    u.validate()?;
    let k = u.max_biomass_k;
    let e = u.root_shoot_e;
    let m = u.mortality_m;
    let alpha = k - 1.0 / e;
    let ke = k * e;
    let a = ke / ((ke - 1.0) * (ke - 1.0));
    let psi = alpha * alpha * u.precipitation_p * u.lambda_growth * e / (m * m * k);
    let phi = u.evaporation_n / m;
    let omega = alpha / m * (u.gamma_uptake - u.shading_r / k);
    let theta = alpha * alpha * u.gamma_uptake * e / m;
    let eps = (u.diff_b / u.diff_w).sqrt();
    ScaledParams::new(a, psi, phi, omega, theta, eps)
}

/// Constants of the slow reduced flow on M⁺ and the saddle-node data.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowPlusCoeffs {
    pub a: f64,
    pub A: f64,
    pub Bc: f64,
    pub C: f64,
    pub D: f64,
    /// ℬ + aΘ, the linear coefficient of the reduced flow.
    pub beta: f64,
    /// ℰ at the positive root of the 𝒲-quadratic when that root is unique.
    pub e_saddle: Option<f64>,
    pub chi: Option<f64>,
    pub w_sn: Option<f64>,
    pub w1_sn: Option<f64>,
    pub sigma: Option<f64>,
}

impl SlowPlusCoeffs {
    /// Coefficients of a flow given directly by (a, 𝒜, 𝒞, 𝒟); used by frozen families.
    #[allow(non_snake_case)]
    pub fn from_frozen(a: f64, A: f64, C: f64, D: f64) -> Self {
        let beta = D + (a + 0.25) * A;
        // ℬ is not determined by (a, 𝒜, 𝒞, 𝒟) alone; only ℬ + aΘ is.
        Self::assemble(a, A, f64::NAN, C, D, beta)
    }

    #[allow(non_snake_case)]
    fn assemble(a: f64, A: f64, Bc: f64, C: f64, D: f64, beta: f64) -> Self {
        let disc = C * C - 4.0 * A * D;
        let e_saddle = if A > 0.0 && D < 0.0 && disc >= 0.0 {
            let w_root = (-C + disc.sqrt()) / (2.0 * A);
            (w_root > 0.0).then(|| beta + 0.5 * C * (w_root + (a + 0.25) / w_root))
        } else {
            None
        };
        let chi = (a > 0.0).then(|| (0.25 * A - 0.5 * C + D) / a);
        let den = (1.0 + 4.0 * a) * A * A - C * C;
        let w_sn = (den != 0.0 && A != 0.0).then(|| 4.0 * A * A / den);
        let w1_sn = w_sn.map(|w| 2.0 * (-C / (2.0 * A)) * w * w);
        let sigma = (A > 0.0 && disc >= 0.0).then(|| (disc / (4.0 * A * A)).sqrt());
        SlowPlusCoeffs { a, A, Bc, C, D, beta, e_saddle, chi, w_sn, w1_sn, sigma }
    }

    /// 𝒟^SN = 𝒞²/(4𝒜).
    pub fn d_sn(&self) -> f64 {
        self.C * self.C / (4.0 * self.A)
    }

    /// 𝒲^SN = −𝒞/(2𝒜).
    pub fn w_cal_sn(&self) -> f64 {
        -self.C / (2.0 * self.A)
    }
}

pub fn derive_coeffs(s: &ScaledParams) -> SlowPlusCoeffs {
    let a = s.a;
    let big_a = s.psi + s.theta;
    let bc = s.phi + 0.5 * s.omega + 0.5 * s.theta;
    let c = s.omega + s.theta;
    let beta = bc + a * s.theta;
    let d = beta - (a + 0.25) * big_a;
    SlowPlusCoeffs::assemble(a, big_a, bc, c, d, beta)
}

/// χ = (¼𝒜 − ½𝒞 + 𝒟)/a.
#[allow(non_snake_case)]
pub fn chi_of(a: f64, A: f64, C: f64, D: f64) -> f64 {
    (0.25 * A - 0.5 * C + D) / a
}

/// Member of the one-parameter family sharing the reduced flow (a, 𝒜, 𝒞, 𝒟):
/// returns (Ψ, Θ, Ω) for the given Φ.
#[allow(non_snake_case)]
pub fn freeze_family(phi: f64, a: f64, A: f64, C: f64, D: f64) -> Result<(f64, f64, f64)> {
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::InvalidParam(format!("phi must be positive (got {phi})")));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParam(format!("frozen families need a > 0 (got {a})")));
    }
    let chi = chi_of(a, A, C, D);
    let psi = phi / a - chi;
    let theta = A - phi / a + chi;
    let omega = C - A + phi / a - chi;
    if psi < 0.0 || theta < 0.0 {
        let lo = a * chi;
        let hi = a * (A + chi);
        return Err(Error::Domain(format!(
            "phi = {phi} gives psi = {psi:.6e}, theta = {theta:.6e}; admissible phi in [{lo:.6e}, {hi:.6e}]"
        )));
    }
    Ok((psi, theta, omega))
}

/// Frozen-family member without the Θ ≥ 0 restriction (Ψ must stay
/// nonnegative). Sweeps of Φ past a(𝒜 + χ) leave the ecological domain but
/// keep the reduced flow on M⁺ fixed.
#[allow(non_snake_case)]
pub fn freeze_family_extended(phi: f64, a: f64, A: f64, C: f64, D: f64) -> Result<(f64, f64, f64)> {
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::InvalidParam(format!("phi must be positive (got {phi})")));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParam(format!("frozen families need a > 0 (got {a})")));
    }
    let chi = chi_of(a, A, C, D);
    let psi = phi / a - chi;
    if psi < 0.0 {
        return Err(Error::Domain(format!("phi = {phi} gives psi = {psi:.6e}; need phi >= {:.6e}", a * chi)));
    }
    Ok((psi, A - phi / a + chi, C - A + phi / a - chi))
}

/// Scaled parameters of a frozen-family member.
#[allow(non_snake_case)]
pub fn frozen_params(phi: f64, a: f64, A: f64, C: f64, D: f64, eps: f64) -> Result<ScaledParams> {
    let (psi, theta, omega) = freeze_family(phi, a, A, C, D)?;
    ScaledParams::new(a, psi, phi, omega, theta, eps)
}

/// w-axis intercept of the leading-order touch-down line, 1/a − χ/Φ (= Ψ/Φ).
pub fn idown_intercept(phi: f64, a: f64, chi: f64) -> f64 {
    1.0 / a - chi / phi
}
