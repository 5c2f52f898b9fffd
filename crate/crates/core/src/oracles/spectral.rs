//! Dense eigen-machinery and the unapproximated interface value `M(t)⁻¹S(t)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scheme::{half_moments, SchemeParams};
use crate::velocity::{CollisionOperator, VelocityGrid};

/// `D = Σ_k λ_k P_k` with distinct eigenvalues, `λ₀ = 0` first and the rest
/// in decreasing order.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<DMatrix<f64>>,
}

const MAX_DENSE: usize = 512;

pub fn dense_spectral(op: &CollisionOperator) -> Result<SpectralDecomposition> {
    let d = op.to_dense();
    let n = d.nrows();
    if n > MAX_DENSE {
        return Err(Error::InvalidInput(format!(
            "dense spectral decomposition limited to {MAX_DENSE} velocities, got {n}"
        )));
    }
    let eig = nalgebra::SymmetricEigen::new(d.clone());
    let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let tol = 1e-9 * scale;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut eigenvalues: Vec<f64> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &k in &order {
        let lam = eig.eigenvalues[k];
        match groups.last_mut() {
            Some(g) if (eig.eigenvalues[g[0]] - lam).abs() <= tol => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    let mut projectors = Vec::with_capacity(groups.len());
    for g in &groups {
        let mean = g.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / g.len() as f64;
        eigenvalues.push(mean);
        let mut p = DMatrix::zeros(n, n);
        for &k in g {
            let q = eig.eigenvectors.column(k);
            p += q * q.transpose();
        }
        projectors.push(p);
    }
    if eigenvalues.first().is_none_or(|l| l.abs() > tol) {
        return Err(Error::InvalidOperator(
            "operator has no zero eigenvalue".into(),
        ));
    }
    eigenvalues[0] = 0.0;
    Ok(SpectralDecomposition {
        eigenvalues,
        projectors,
    })
}

impl SpectralDecomposition {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    fn size(&self) -> usize {
        self.projectors[0].nrows()
    }

    /// `max |ΣP_k − I|`.
    pub fn partition_defect(&self) -> f64 {
        let n = self.size();
        let sum = self
            .projectors
            .iter()
            .fold(DMatrix::zeros(n, n), |acc, p| acc + p);
        (sum - DMatrix::identity(n, n)).amax()
    }

    /// `max |Σλ_k P_k − D|`.
    pub fn reconstruction_defect(&self, d: &DMatrix<f64>) -> f64 {
        let n = self.size();
        let sum = self
            .eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(DMatrix::zeros(n, n), |acc, (l, p)| acc + p * *l);
        (sum - d).amax()
    }

    /// `max_{k≠j} max |P_k P_j|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, pk) in self.projectors.iter().enumerate() {
            for pj in &self.projectors[k + 1..] {
                worst = worst.max((pk * pj).amax());
            }
        }
        worst
    }

    /// `Σ_{k≥1} λ_k⁻¹ P_k`.
    pub fn pseudo_inverse(&self) -> DMatrix<f64> {
        let n = self.size();
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .skip(1)
            .fold(DMatrix::zeros(n, n), |acc, (l, p)| acc + p / *l)
    }
}

/// Exponent `λ⋆σ t_rel/(ηε)` of the penalized relaxation.
pub fn relaxation_exponent(t_rel: f64, params: &SchemeParams, lambda_star: f64) -> f64 {
    lambda_star * params.sigma * t_rel / (params.eta * params.epsilon)
}

/// `𝒞 = λ⋆ ∫₀^{s/λ⋆} e^{λ⋆u} u du = (1 + (s − 1)e^s)/λ⋆` at exponent `s`.
pub fn script_c(s: f64, lambda_star: f64) -> f64 {
    let value = if s.abs() < 0.5 {
        // Σ_{k≥2} (k − 1) s^k / k!
        let mut term = s * s / 2.0;
        let mut sum = 0.0;
        for k in 2..60u32 {
            let add = (k - 1) as f64 * term;
            sum += add;
            if add.abs() <= 1e-18 * sum.abs() {
                break;
            }
            term *= s / (k + 1) as f64;
        }
        sum
    } else if s < -700.0 {
        1.0
    } else {
        1.0 + (s - 1.0) * s.exp()
    };
    value / lambda_star
}

/// `M(t) = e^s I + (1 − e^s) D/λ⋆`.
pub fn assemble_m(t_rel: f64, params: &SchemeParams, op: &CollisionOperator) -> DMatrix<f64> {
    let s = relaxation_exponent(t_rel, params, op.lambda_star);
    let e = s.exp();
    let n = op.size();
    DMatrix::identity(n, n) * e + op.to_dense() * ((1.0 - e) / op.lambda_star)
}

/// `M(t)⁻¹ = Σ_k 𝒜_k⁻¹ P_k`, `𝒜_k = e^s + (1 − e^s)λ_k/λ⋆`.
pub fn m_inverse(
    t_rel: f64,
    params: &SchemeParams,
    op: &CollisionOperator,
    spectral: &SpectralDecomposition,
) -> DMatrix<f64> {
    let s = relaxation_exponent(t_rel, params, op.lambda_star);
    let e = s.exp();
    let n = op.size();
    spectral
        .eigenvalues
        .iter()
        .zip(&spectral.projectors)
        .fold(DMatrix::zeros(n, n), |acc, (l, p)| {
            acc + p / (e + (1.0 - e) * l / op.lambda_star)
        })
}

fn upwind_trace(left: &[f64], right: &[f64], grid: &VelocityGrid) -> Vec<f64> {
    let n = grid.half_count();
    (0..grid.len())
        .map(|j| if j < n { right[j] } else { left[j] })
        .collect()
}

/// Right-hand side `S(t) = e^s·F_upwind + (ε/σ)(Δρ/Δx)𝒞(t)·V` of `M(t)F = S(t)`
/// for the gradient reconstruction.
pub fn assemble_s(
    t_rel: f64,
    left: &[f64],
    right: &[f64],
    params: &SchemeParams,
    op: &CollisionOperator,
    grid: &VelocityGrid,
) -> Vec<f64> {
    let s = relaxation_exponent(t_rel, params, op.lambda_star);
    let e = s.exp();
    let gradient = density_gradient(left, right, grid, params.dx);
    let g = params.epsilon / params.sigma * gradient * script_c(s, op.lambda_star);
    upwind_trace(left, right, grid)
        .into_iter()
        .zip(grid.velocities())
        .map(|(u, v)| e * u + g * v)
        .collect()
}

fn density_gradient(left: &[f64], right: &[f64], grid: &VelocityGrid, dx: f64) -> f64 {
    (half_moments(right, grid).density() - half_moments(left, grid).density()) / dx
}

/// Closed-form interface value
/// `e^s·F_upwind + (1 − e^s)(ρ⁺_i + ρ⁻_{i+1})𝟙 + λ⋆𝒞(t)(ε/σ)(Δρ/Δx)U`.
pub fn interface_value_closed_form(
    t_rel: f64,
    left: &[f64],
    right: &[f64],
    params: &SchemeParams,
    op: &CollisionOperator,
    grid: &VelocityGrid,
) -> Vec<f64> {
    let s = relaxation_exponent(t_rel, params, op.lambda_star);
    let e = s.exp();
    let rho_star = half_moments(left, grid).rho_plus + half_moments(right, grid).rho_minus;
    let gradient = density_gradient(left, right, grid, params.dx);
    let g = op.lambda_star * script_c(s, op.lambda_star) * params.epsilon / params.sigma * gradient;
    upwind_trace(left, right, grid)
        .into_iter()
        .zip(&op.u_vector)
        .map(|(f, u)| e * f + (1.0 - e) * rho_star + g * u)
        .collect()
}

/// Unapproximated interface value `M(t)⁻¹S(t)`.
pub fn interface_value_dense(
    t_rel: f64,
    left: &[f64],
    right: &[f64],
    params: &SchemeParams,
    op: &CollisionOperator,
    grid: &VelocityGrid,
    spectral: &SpectralDecomposition,
) -> Vec<f64> {
    let m_inv = m_inverse(t_rel, params, op, spectral);
    let s = DVector::from_vec(assemble_s(t_rel, left, right, params, op, grid));
    (m_inv * s).iter().copied().collect()
}
