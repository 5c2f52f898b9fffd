//! Interface fluxes built from the time-integrated interface distribution.

use crate::linalg;
use crate::velocity::{CollisionOperator, VelocityGrid};

use super::coefficients::FluxCoefficients;

/// Velocity moments of one cell restricted to `v < 0` and `v > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HalfMoments {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub j_minus: f64,
    pub j_plus: f64,
}

impl HalfMoments {
    pub fn density(&self) -> f64 {
        self.rho_minus + self.rho_plus
    }
}

pub fn half_moments(row: &[f64], grid: &VelocityGrid) -> HalfMoments {
    let n = grid.half_count();
    let w = 1.0 / grid.len() as f64;
    let v = grid.velocities();
    let (neg, pos) = row.split_at(n);
    HalfMoments {
        rho_minus: w * neg.iter().sum::<f64>(),
        rho_plus: w * pos.iter().sum::<f64>(),
        j_minus: w * linalg::dot(neg, &v[..n]),
        j_plus: w * linalg::dot(pos, &v[n..]),
    }
}

/// Fills `phi` with the micro flux at the interface between `left` and
/// `right`, given the density gradient `(ρ_{i+1} − ρ_i)/Δx`.
pub(crate) fn fill_micro_flux(
    phi: &mut [f64],
    left: &[f64],
    right: &[f64],
    left_moments: &HalfMoments,
    right_moments: &HalfMoments,
    gradient: f64,
    coeffs: &FluxCoefficients,
    op: &CollisionOperator,
    grid: &VelocityGrid,
) {
    let n = grid.half_count();
    let equilibrium = coeffs.c_coef * (left_moments.rho_plus + right_moments.rho_minus);
    let grad = coeffs.d_coef * gradient * op.lambda_star;
    for (j, ((p, v), u)) in phi
        .iter_mut()
        .zip(grid.velocities())
        .zip(&op.u_vector)
        .enumerate()
    {
        let upwind = if j < n { right[j] } else { left[j] };
        *p = v * (coeffs.a_coef * upwind + equilibrium + grad * u);
    }
}

/// Micro flux `φ_{i+1/2}` for the cell pair `(left, right)` with spacing `dx`.
pub fn micro_flux(
    left: &[f64],
    right: &[f64],
    coeffs: &FluxCoefficients,
    op: &CollisionOperator,
    grid: &VelocityGrid,
    dx: f64,
) -> Vec<f64> {
    let (ml, mr) = (half_moments(left, grid), half_moments(right, grid));
    let gradient = (mr.density() - ml.density()) / dx;
    let mut phi = vec![0.0; grid.len()];
    fill_micro_flux(&mut phi, left, right, &ml, &mr, gradient, coeffs, op, grid);
    phi
}

pub(crate) fn macro_flux_from_moments(
    left_moments: &HalfMoments,
    right_moments: &HalfMoments,
    gradient: f64,
    coeffs: &FluxCoefficients,
    grid: &VelocityGrid,
) -> f64 {
    coeffs.a_coef * (left_moments.j_plus + right_moments.j_minus)
        + coeffs.d_coef * gradient * grid.second_moment()
}

/// Macro flux `Φ_{i+1/2} = A(J⁺_i + J⁻_{i+1}) + D·⟨V,V⟩/(2N)·(ρ_{i+1} − ρ_i)/Δx`,
/// the velocity average of [`micro_flux`].
pub fn macro_flux(
    left: &[f64],
    right: &[f64],
    coeffs: &FluxCoefficients,
    grid: &VelocityGrid,
    dx: f64,
) -> f64 {
    let (ml, mr) = (half_moments(left, grid), half_moments(right, grid));
    let gradient = (mr.density() - ml.density()) / dx;
    macro_flux_from_moments(&ml, &mr, gradient, coeffs, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{flux_coefficients, SchemeParams, Variant};
    use crate::velocity::{build_bgk, build_grid, OperatorKind};

    #[test]
    fn half_moment_examples() {
        let g = build_grid(2).unwrap();
        let m = half_moments(&[1.0, 2.0, 3.0, 4.0], &g);
        assert_eq!(m.rho_minus, 0.75);
        assert_eq!(m.rho_plus, 1.75);
        assert_eq!(half_moments(&[0.0; 4], &g), HalfMoments::default());
        let m = half_moments(&[1.0; 4], &g);
        assert_eq!((m.rho_minus, m.rho_plus), (0.5, 0.5));
        assert_eq!(m.j_plus, -m.j_minus);
        assert!(m.j_minus <= 0.0 && m.j_plus >= 0.0);
    }

    #[test]
    fn free_transport_flux_is_upwind() {
        let g = build_grid(4).unwrap();
        let op = build_bgk(&g);
        let coeffs = FluxCoefficients {
            a_coef: 2.0,
            c_coef: 0.0,
            d_coef: 0.0,
            w: -1e-300,
        };
        let left: Vec<f64> = (0..8).map(|j| 1.0 + j as f64).collect();
        let right: Vec<f64> = (0..8).map(|j| 10.0 - j as f64).collect();
        let phi = micro_flux(&left, &right, &coeffs, &op, &g, 0.1);
        for j in 0..8 {
            let v = g.velocities()[j];
            let up = if v > 0.0 { left[j] } else { right[j] };
            assert_eq!(phi[j], 2.0 * v * up);
        }
    }

    #[test]
    fn uniform_equilibrium_has_zero_macro_flux() {
        let g = build_grid(10).unwrap();
        let p = SchemeParams::new(0.1, 0.1, 1.0, 1e-3, 10, Variant::ExplicitDiffusion).unwrap();
        for kind in OperatorKind::ALL {
            let op = kind.build(&g).unwrap();
            let coeffs = flux_coefficients(&p, op.lambda_star).unwrap();
            let f = vec![0.7; g.len()];
            let big = macro_flux(&f, &f, &coeffs, &g, p.dx);
            assert!(big.abs() < 1e-15);
            let phi = micro_flux(&f, &f, &coeffs, &op, &g, p.dx);
            assert!((phi.iter().sum::<f64>() / g.len() as f64).abs() < 1e-14);
        }
    }
}
