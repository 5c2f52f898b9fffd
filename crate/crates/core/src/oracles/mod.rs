//! Reference solutions used for validation. None of this runs inside the
//! time stepper.

pub mod quadrature;
pub mod spectral;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scheme::{KineticState, SchemeParams};
use crate::velocity::{CollisionOperator, VelocityGrid};

pub use quadrature::{gauss_kronrod, gauss_kronrod_breaks, layer_breaks, simpson};
pub use spectral::{
    assemble_m, assemble_s, dense_spectral, interface_value_closed_form, interface_value_dense,
    m_inverse, relaxation_exponent, script_c, SpectralDecomposition,
};

/// Panels of the composite Simpson rule used by the closed-form references.
pub const SIMPSON_PANELS: usize = 2000;

/// Initial distribution `f₀(x, v) = exp(−(x − ½)² − 10(1 − v)²)` and its
/// density `ρ₀(x) = C·exp(−(x − ½)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialData {
    /// `C = ½∫₋₁¹ exp(−10(1 − v)²) dv`.
    pub c: f64,
}

impl Default for InitialData {
    fn default() -> Self {
        Self::new()
    }
}

impl InitialData {
    pub fn new() -> Self {
        let c = 0.5 * simpson(|v| (-10.0 * (1.0 - v) * (1.0 - v)).exp(), -1.0, 1.0, SIMPSON_PANELS);
        InitialData { c }
    }

    pub fn f0(&self, x: f64, v: f64) -> f64 {
        (-(x - 0.5) * (x - 0.5) - 10.0 * (1.0 - v) * (1.0 - v)).exp()
    }

    pub fn rho0(&self, x: f64) -> f64 {
        self.c * (-(x - 0.5) * (x - 0.5)).exp()
    }
}

/// Free-transport solution `f₀((x − vt/η) mod 1, v)`.
pub fn exact_transport(init: &InitialData, t: f64, x: f64, v: f64, eta: f64) -> f64 {
    init.f0((x - v * t / eta).rem_euclid(1.0), v)
}

/// Number of periodic images kept in the heat kernel.
pub fn image_cutoff(kappa_t: f64) -> i64 {
    10.max((6.0 * (2.0 * kappa_t).sqrt()).ceil() as i64)
}

/// Density of the periodic heat equation `∂ₜρ = κ∂ₓ²ρ` from `ρ₀`.
pub fn exact_diffusion_density(init: &InitialData, t: f64, x: f64, kappa: f64) -> Result<f64> {
    if !(t > 0.0) || !(kappa > 0.0) {
        return Err(Error::InvalidInput(format!(
            "diffusion reference needs t > 0 and kappa > 0, got t = {t}, kappa = {kappa}"
        )));
    }
    let four_kt = 4.0 * kappa * t;
    let norm = 1.0 / (PI * four_kt).sqrt();
    let images = image_cutoff(kappa * t);
    let kernel = |y: f64| {
        let mut sum = 0.0;
        for j in -images..=images {
            let d = x - y + j as f64;
            sum += (-d * d / four_kt).exp();
        }
        norm * sum * init.rho0(y)
    };
    Ok(simpson(kernel, 0.0, 1.0, SIMPSON_PANELS))
}

/// `κ = ⟨V,V⟩/(2Nσ|λ⋆|)` of the discrete limit scheme.
pub fn discrete_diffusion_coefficient(grid: &VelocityGrid, sigma: f64, lambda_star: f64) -> f64 {
    grid.second_moment() / (sigma * lambda_star.abs())
}

/// One explicit step of the periodic three-point heat scheme.
pub fn limit_diffusion_step(rho: &[f64], dt: f64, dx: f64, kappa_d: f64) -> Vec<f64> {
    let n = rho.len();
    let r = dt * kappa_d / (dx * dx);
    (0..n)
        .map(|i| {
            let (l, c, rr) = (rho[(i + n - 1) % n], rho[i], rho[(i + 1) % n]);
            c + r * (rr - 2.0 * c + l)
        })
        .collect()
}

/// One first-order upwind step of `η∂ₜf + v∂ₓf = 0` on a periodic mesh.
/// `f` is row-major `nx × 2N`.
pub fn upwind_transport_step(
    f: &[f64],
    dt: f64,
    dx: f64,
    eta: f64,
    grid: &VelocityGrid,
) -> Result<Vec<f64>> {
    let nv = grid.len();
    if !f.len().is_multiple_of(nv) {
        return Err(Error::InvalidInput(
            "distribution is not a whole number of velocity rows".into(),
        ));
    }
    let vmax = grid.velocities().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cfl = vmax * dt / (eta * dx);
    if cfl > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "upwind CFL number {cfl} exceeds 1"
        )));
    }
    let nx = f.len() / nv;
    let mut out = vec![0.0; f.len()];
    for i in 0..nx {
        let (l, r) = ((i + nx - 1) % nx, (i + 1) % nx);
        for (j, &v) in grid.velocities().iter().enumerate() {
            let nu = v * dt / (eta * dx);
            let here = f[i * nv + j];
            out[i * nv + j] = if v > 0.0 {
                here - nu * (here - f[l * nv + j])
            } else {
                here - nu * (f[r * nv + j] - here)
            };
        }
    }
    Ok(out)
}

/// `max_i ‖F_i − ρ_i𝟙 − (ε/σ)(∂ₓρ)_i U‖∞` with centred periodic differences.
pub fn chapman_enskog_residual(
    state: &KineticState,
    op: &CollisionOperator,
    params: &SchemeParams,
) -> f64 {
    let nx = state.nx();
    let scale = params.epsilon / params.sigma;
    let mut worst = 0.0f64;
    for (i, row) in state.rows().enumerate() {
        let grad = (state.rho[(i + 1) % nx] - state.rho[(i + nx - 1) % nx]) / (2.0 * params.dx);
        for (f, u) in row.iter().zip(&op.u_vector) {
            worst = worst.max((f - state.rho[i] - scale * grad * u).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::Variant;
    use crate::velocity::{build_grid, OperatorKind};

    #[test]
    fn normalisation_constant_in_range() {
        let c = InitialData::new().c;
        assert!((0.13..=0.15).contains(&c), "{c}");
    }

    #[test]
    fn transport_examples() {
        let init = InitialData::new();
        assert_eq!(exact_transport(&init, 0.0, 0.3, 0.2, 1.0), init.f0(0.3, 0.2));
        let full = exact_transport(&init, 2.0, 0.3, 0.5, 1.0);
        assert!((full - init.f0(0.3, 0.5)).abs() < 1e-15);
        let v = 1.0 - 1e-9;
        let back = exact_transport(&init, 0.05, 0.5, v, 1.0);
        assert!((back - init.f0(0.45, v)).abs() < 1e-9);
    }

    #[test]
    fn diffusion_conserves_mass_and_equilibrates() {
        let init = InitialData::new();
        let m0 = simpson(|x| init.rho0(x), 0.0, 1.0, SIMPSON_PANELS);
        let m = simpson(
            |x| exact_diffusion_density(&init, 0.05, x, 1.0 / 3.0).unwrap(),
            0.0,
            1.0,
            200,
        );
        assert!((m - m0).abs() < 1e-9);
        let hi = exact_diffusion_density(&init, 10.0, 0.5, 1.0).unwrap();
        let lo = exact_diffusion_density(&init, 10.0, 0.0, 1.0).unwrap();
        assert!((hi - lo).abs() < 1e-6);
        assert!((hi - m0).abs() < 1e-6);
        assert!(exact_diffusion_density(&init, 0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn diffusion_satisfies_heat_equation() {
        let init = InitialData::new();
        let k = 0.3;
        let (t, x) = (0.02, 0.37);
        let rho = |t: f64, x: f64| exact_diffusion_density(&init, t, x, k).unwrap();
        let d = 1e-5;
        let h = 1e-3;
        let dt = (rho(t + d, x) - rho(t - d, x)) / (2.0 * d);
        let dxx = (rho(t, x + h) - 2.0 * rho(t, x) + rho(t, x - h)) / (h * h);
        assert!((dt - k * dxx).abs() < 1e-4, "{dt} {}", k * dxx);
    }

    #[test]
    fn limit_step_single_mode_decay() {
        let n = 32;
        let dx = 1.0 / n as f64;
        let rho: Vec<f64> = (0..n).map(|i| (2.0 * PI * (i as f64 + 0.5) * dx).cos()).collect();
        let (dt, k) = (1e-4, 0.4);
        let next = limit_diffusion_step(&rho, dt, dx, k);
        let factor = 1.0 - dt * k / (dx * dx) * 2.0 * (1.0 - (2.0 * PI * dx).cos());
        for (a, b) in next.iter().zip(&rho) {
            assert!((a - factor * b).abs() < 1e-14);
        }
        assert_eq!(limit_diffusion_step(&[2.0; 5], 1.0, 0.1, 1.0), vec![2.0; 5]);
    }

    #[test]
    fn upwind_unit_cfl_shifts_one_cell() {
        let g = build_grid(1).unwrap();
        // v = ±1/2, Δx = 0.5 and Δt = 1 give unit Courant number.
        let f = vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0];
        let next = upwind_transport_step(&f, 1.0, 0.5, 1.0, &g).unwrap();
        assert_eq!(next, vec![2.0, 40.0, 3.0, 10.0, 4.0, 20.0, 1.0, 30.0]);
        assert!(upwind_transport_step(&f, 1.1, 0.5, 1.0, &g).is_err());
    }

    #[test]
    fn chapman_enskog_zero_on_equilibrium() {
        let g = build_grid(5).unwrap();
        let op = OperatorKind::Bgk.build(&g).unwrap();
        let p = SchemeParams::new(0.1, 0.1, 1.0, 1e-3, 8, Variant::ExplicitDiffusion).unwrap();
        let s = KineticState::uniform(8, 10, 0.4);
        assert!(chapman_enskog_residual(&s, &op, &p) <= 1e-12);
    }
}
