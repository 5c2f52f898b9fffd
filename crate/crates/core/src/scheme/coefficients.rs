use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which diffusion limit the scheme reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Variant {
    #[default]
    #[serde(rename = "explicit")]
    ExplicitDiffusion,
    #[serde(rename = "implicit")]
    ImplicitDiffusion,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Variant::ExplicitDiffusion),
            "implicit" => Ok(Variant::ImplicitDiffusion),
            other => Err(Error::InvalidConfig(format!(
                "unknown variant `{other}` (expected explicit or implicit)"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::ExplicitDiffusion => "explicit",
            Variant::ImplicitDiffusion => "implicit",
        })
    }
}

/// Physical and discretization parameters of one run on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    /// Time scaling `η`.
    pub eta: f64,
    /// Knudsen number `ε`.
    pub epsilon: f64,
    /// Collision frequency `σ`.
    pub sigma: f64,
    pub dt: f64,
    pub dx: f64,
    pub nx: usize,
    pub variant: Variant,
}

impl SchemeParams {
    pub fn new(
        eta: f64,
        epsilon: f64,
        sigma: f64,
        dt: f64,
        nx: usize,
        variant: Variant,
    ) -> Result<Self> {
        let params = SchemeParams {
            eta,
            epsilon,
            sigma,
            dt,
            dx: 1.0 / nx as f64,
            nx,
            variant,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("eta", self.eta),
            ("epsilon", self.epsilon),
            ("sigma", self.sigma),
            ("dt", self.dt),
            ("dx", self.dx),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.nx == 0 || (self.dx * self.nx as f64 - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidConfig(format!(
                "dx = {} inconsistent with nx = {}",
                self.dx, self.nx
            )));
        }
        Ok(())
    }

    /// Stiffness `σΔt/(εη)` of the implicit collision step.
    pub fn collision_factor(&self) -> f64 {
        self.sigma * self.dt / (self.epsilon * self.eta)
    }
}

/// Time-integrated weights of the interface distribution.
///
/// `a_coef` multiplies the upwind trace, `c_coef` the equilibrium trace and
/// `d_coef` the density-gradient term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxCoefficients {
    pub a_coef: f64,
    pub c_coef: f64,
    pub d_coef: f64,
    /// `w = λ⋆σΔt/(ηε)`.
    pub w: f64,
}

const TAYLOR_A: f64 = 1e-6;
const SERIES_CUTOFF: f64 = 0.5;
const UNDERFLOW: f64 = -700.0;

/// `e^w` with hard underflow to zero below −700.
fn exp_clamped(w: f64) -> f64 {
    if w < UNDERFLOW {
        0.0
    } else {
        w.exp()
    }
}

/// `(e^w − 1)/w`.
fn relative_expm1(w: f64) -> f64 {
    if w.abs() <= TAYLOR_A {
        1.0 + w / 2.0 + w * w / 6.0
    } else if w < UNDERFLOW {
        -1.0 / w
    } else {
        w.exp_m1() / w
    }
}

/// Sums `Σ_{k≥k0} coef(k) · w^{k−1}/k!` until the terms stop mattering.
fn series(w: f64, k0: u32, coef: impl Fn(u32) -> f64) -> f64 {
    let mut power_over_fact = 1.0; // w^{k-1}/k!
    for k in 1..k0 {
        power_over_fact *= w / (k + 1) as f64;
    }
    let mut sum = 0.0;
    for k in k0..k0 + 40 {
        let term = coef(k) * power_over_fact;
        sum += term;
        if term.abs() <= f64::EPSILON * 1e-3 * sum.abs() {
            break;
        }
        power_over_fact *= w / (k + 1) as f64;
    }
    sum
}

/// `1 − (e^w − 1)/w`.
fn one_minus_relative_expm1(w: f64) -> f64 {
    if w.abs() < SERIES_CUTOFF {
        -series(w, 2, |_| 1.0)
    } else {
        1.0 - relative_expm1(w)
    }
}

/// `(w + 2 + (w − 2)e^w)/w`.
fn gradient_kernel(w: f64) -> f64 {
    if w.abs() < SERIES_CUTOFF {
        series(w, 3, |k| (k - 2) as f64)
    } else {
        (w + 2.0 + (w - 2.0) * exp_clamped(w)) / w
    }
}

/// Evaluates `A = (e^w − 1)/(ηw)`, `C = 1/η − A` and
/// `D = (ε/(σλ⋆))(C − A) + (ε/(ησλ⋆))e^w` without cancellation for any `w < 0`.
pub fn flux_coefficients(params: &SchemeParams, lambda_star: f64) -> Result<FluxCoefficients> {
    for (name, value) in [
        ("eta", params.eta),
        ("epsilon", params.epsilon),
        ("sigma", params.sigma),
        ("dt", params.dt),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "{name} must be positive and finite, got {value}"
            )));
        }
    }
    if !(lambda_star < 0.0 && lambda_star.is_finite()) {
        return Err(Error::InvalidOperator(format!(
            "pseudo-eigenvalue must be negative, got {lambda_star}"
        )));
    }
    let SchemeParams {
        eta,
        epsilon,
        sigma,
        dt,
        ..
    } = *params;
    let w = lambda_star * sigma * dt / (eta * epsilon);
    let a_coef = relative_expm1(w) / eta;
    let c_coef = one_minus_relative_expm1(w) / eta;
    let d_coef = epsilon / (sigma * lambda_star * eta) * gradient_kernel(w);
    Ok(FluxCoefficients {
        a_coef,
        c_coef,
        d_coef,
        w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eta: f64, epsilon: f64, sigma: f64, dt: f64) -> SchemeParams {
        SchemeParams::new(eta, epsilon, sigma, dt, 10, Variant::ExplicitDiffusion).unwrap()
    }

    /// Direct transcription of the defining formulas, fine away from w = 0.
    fn naive(p: &SchemeParams, ls: f64) -> (f64, f64, f64) {
        let w = ls * p.sigma * p.dt / (p.eta * p.epsilon);
        let a = (w.exp() - 1.0) / (p.eta * w);
        let c = 1.0 / p.eta - a;
        let d = p.epsilon / (p.sigma * ls) * (c - a) + p.epsilon / (p.eta * p.sigma * ls) * w.exp();
        (a, c, d)
    }

    #[test]
    fn matches_naive_formula_at_moderate_w() {
        for (eta, eps, ls) in [(0.1, 0.1, -2.0), (1.0, 0.5, -1.0), (0.3, 0.02, -1.5)] {
            let p = params(eta, eps, 1.0, 1e-2);
            let c = flux_coefficients(&p, ls).unwrap();
            let (a, cc, d) = naive(&p, ls);
            assert!((c.a_coef - a).abs() <= 1e-12 * a.abs());
            assert!((c.c_coef - cc).abs() <= 1e-9 * cc.abs());
            assert!((c.d_coef - d).abs() <= 1e-9 * d.abs());
        }
    }

    #[test]
    fn free_transport_limit() {
        let c = flux_coefficients(&params(1.0, 1e12, 1.0, 1e-3), -1.0).unwrap();
        assert!((c.a_coef - 1.0).abs() < 1e-12);
        assert!(c.c_coef.abs() < 1e-12);
        assert!(c.d_coef.abs() < 1e-12);
    }

    #[test]
    fn diffusion_limit() {
        for ls in [-1.0, -2.0, -1.5] {
            let c = flux_coefficients(&params(1e-10, 1e-10, 1.0, 1.0), ls).unwrap();
            assert!(c.a_coef.abs() < 1e-8);
            assert!((c.d_coef - 1.0 / ls).abs() < 1e-8);
        }
    }

    #[test]
    fn series_and_direct_branches_meet() {
        for w in [-0.4999999, -0.5000001] {
            let s = series(w, 3, |k| (k - 2) as f64);
            let d = (w + 2.0 + (w - 2.0) * w.exp()) / w;
            assert!((s - d).abs() <= 1e-13 * d.abs());
            let s = -series(w, 2, |_| 1.0);
            let d = 1.0 - w.exp_m1() / w;
            assert!((s - d).abs() <= 1e-14 * d.abs());
        }
    }

    #[test]
    fn identities_and_signs() {
        for eta in [1e-6, 1e-3, 0.1, 1.0, 10.0] {
            for eps in [1e-6, 1e-2, 1.0, 1e4] {
                for dt in [1e-7, 1e-5, 1e-2] {
                    let c = flux_coefficients(&params(eta, eps, 1.0, dt), -1.5).unwrap();
                    assert!(((c.a_coef + c.c_coef) - 1.0 / eta).abs() <= 1e-12 / eta);
                    assert!(c.a_coef > 0.0 && c.a_coef <= 1.0 / eta);
                    assert!(c.c_coef >= 0.0 && c.c_coef < 1.0 / eta);
                    assert!(c.d_coef <= 0.0);
                    assert!(c.w < 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params(1.0, 1.0, 1.0, 1e-3);
        assert!(flux_coefficients(&p, 0.0).is_err());
        assert!(flux_coefficients(&p, 1.0).is_err());
        let mut bad = p;
        bad.sigma = -1.0;
        assert!(flux_coefficients(&bad, -1.0).is_err());
        assert!(SchemeParams::new(0.0, 1.0, 1.0, 1e-3, 10, Variant::ExplicitDiffusion).is_err());
    }
}
