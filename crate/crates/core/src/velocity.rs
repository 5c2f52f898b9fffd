//! Discrete velocity grids and collision operators.
//!
//! Every operator `D` here is symmetric and negative semidefinite, with zero
//! row sums, nonnegative off-diagonal entries, and a kernel spanned by the constant
//! vector `𝟙`. The inner product is the plain sum `⟨U, W⟩ = Σ U_k W_k`.
//! Velocity averages use the weight `1/(2N)`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, TridiagonalSystem};

/// Symmetric velocity grid on `(−1, 1)` with `2N` cells of width `Δv = 1/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    half_count: usize,
    delta_v: f64,
    velocities: Vec<f64>,
}

impl VelocityGrid {
    pub fn new(half_count: usize) -> Result<Self> {
        if half_count == 0 {
            return Err(Error::InvalidConfig(
                "velocity grid needs at least one cell per half".into(),
            ));
        }
        let delta_v = 1.0 / half_count as f64;
        let negative: Vec<f64> = (0..half_count)
            .map(|j| -1.0 + delta_v / 2.0 + j as f64 * delta_v)
            .collect();
        // Mirror the negative half so that v_j = −v_{2N+1−j} holds bitwise.
        let velocities = negative
            .iter()
            .copied()
            .chain(negative.iter().rev().map(|v| -v))
            .collect();
        Ok(VelocityGrid {
            half_count,
            delta_v,
            velocities,
        })
    }

    pub fn half_count(&self) -> usize {
        self.half_count
    }

    /// Total number of velocities `2N`.
    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    pub fn delta_v(&self) -> f64 {
        self.delta_v
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    /// `⟨V, V⟩ / (2N)`, the discrete second moment (close to 1/3).
    pub fn second_moment(&self) -> f64 {
        linalg::dot(&self.velocities, &self.velocities) / self.len() as f64
    }

    /// Cell edges `v_{j+1/2}`, `j = 0..=2N`, from −1 to 1.
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.len())
            .map(|j| -1.0 + j as f64 * self.delta_v)
            .collect()
    }
}

pub fn build_grid(half_count: usize) -> Result<VelocityGrid> {
    VelocityGrid::new(half_count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    #[serde(rename = "bgk")]
    Bgk,
    #[serde(rename = "fp")]
    FokkerPlanck,
    #[serde(rename = "sc")]
    Scattering,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 3] = [
        OperatorKind::Bgk,
        OperatorKind::FokkerPlanck,
        OperatorKind::Scattering,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            OperatorKind::Bgk => "bgk",
            OperatorKind::FokkerPlanck => "fp",
            OperatorKind::Scattering => "sc",
        }
    }

    /// Pseudo-eigenvalue of the continuous-velocity operator.
    pub fn continuum_lambda_star(self) -> f64 {
        match self {
            OperatorKind::Bgk => -1.0,
            OperatorKind::FokkerPlanck => -2.0,
            OperatorKind::Scattering => -1.5,
        }
    }

    pub fn build(self, grid: &VelocityGrid) -> Result<CollisionOperator> {
        match self {
            OperatorKind::Bgk => Ok(build_bgk(grid)),
            OperatorKind::FokkerPlanck => Ok(build_fokker_planck(grid)),
            OperatorKind::Scattering => build_scattering(grid, SCATTERING_SCALE),
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bgk" => Ok(OperatorKind::Bgk),
            "fp" => Ok(OperatorKind::FokkerPlanck),
            "sc" => Ok(OperatorKind::Scattering),
            other => Err(Error::InvalidConfig(format!(
                "unknown operator `{other}` (expected bgk, fp or sc)"
            ))),
        }
    }
}

/// How the per-cell implicit collision system `(I − cD)F = b` is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverHint {
    /// BGK: with the new density known the system is diagonal.
    DiagonalTrick,
    /// Thomas elimination on the (possibly cyclic) tridiagonal matrix.
    Tridiagonal,
    /// Conjugate gradient on the symmetric positive definite `I − cD`.
    GenericSpd,
}

/// Storage for the collision matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorMatrix {
    /// `P₀ − I`: entries `1/(2N) − δ_ij`.
    Relaxation { size: usize },
    /// Tridiagonal, cyclic when corner entries are present.
    Banded(TridiagonalSystem),
    /// Tridiagonal with zero row sums. Applied in difference form
    /// `Σ_k D_jk (x_k − x_j)`, so constants are mapped to exactly zero; the
    /// diagonal is only used for dense export and shifted solves.
    Conservative(TridiagonalSystem),
    /// Row-major dense matrix.
    Dense { size: usize, entries: Vec<f64> },
}

impl OperatorMatrix {
    pub fn size(&self) -> usize {
        match self {
            OperatorMatrix::Relaxation { size } | OperatorMatrix::Dense { size, .. } => *size,
            OperatorMatrix::Banded(sys) | OperatorMatrix::Conservative(sys) => sys.len(),
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            OperatorMatrix::Relaxation { .. } => {
                let m = linalg::mean(x);
                out.iter_mut().zip(x).for_each(|(o, xi)| *o = m - xi);
            }
            OperatorMatrix::Banded(sys) => sys.apply(x, out),
            OperatorMatrix::Conservative(sys) => {
                let n = sys.len();
                for j in 0..n {
                    let mut acc = 0.0;
                    if j > 0 {
                        acc += sys.sub[j - 1] * (x[j - 1] - x[j]);
                    }
                    if j + 1 < n {
                        acc += sys.sup[j] * (x[j + 1] - x[j]);
                    }
                    out[j] = acc;
                }
                if let Some((tr, bl)) = sys.corners {
                    out[0] += tr * (x[n - 1] - x[0]);
                    out[n - 1] += bl * (x[0] - x[n - 1]);
                }
            }
            OperatorMatrix::Dense { size, entries } => {
                for (o, row) in out.iter_mut().zip(entries.chunks_exact(*size)) {
                    *o = linalg::dot(row, x);
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        match self {
            OperatorMatrix::Relaxation { .. } => {
                DMatrix::from_fn(n, n, |i, j| 1.0 / n as f64 - if i == j { 1.0 } else { 0.0 })
            }
            OperatorMatrix::Banded(sys) | OperatorMatrix::Conservative(sys) => {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    m[(i, i)] = sys.diag[i];
                    if i + 1 < n {
                        m[(i, i + 1)] = sys.sup[i];
                        m[(i + 1, i)] = sys.sub[i];
                    }
                }
                if let Some((tr, bl)) = sys.corners {
                    m[(0, n - 1)] += tr;
                    m[(n - 1, 0)] += bl;
                }
                m
            }
            OperatorMatrix::Dense { entries, .. } => DMatrix::from_row_slice(n, n, entries),
        }
    }

    /// The matrix `I − c·D` in the same storage class, for `c ≥ 0`.
    pub fn shifted_identity(&self, c: f64) -> OperatorMatrix {
        match self {
            OperatorMatrix::Relaxation { size } => {
                let n = *size;
                let entries = (0..n * n)
                    .map(|k| {
                        let (i, j) = (k / n, k % n);
                        let d = 1.0 / n as f64 - if i == j { 1.0 } else { 0.0 };
                        if i == j {
                            1.0 - c * d
                        } else {
                            -c * d
                        }
                    })
                    .collect();
                OperatorMatrix::Dense { size: n, entries }
            }
            OperatorMatrix::Banded(sys) | OperatorMatrix::Conservative(sys) => OperatorMatrix::Banded(TridiagonalSystem {
                sub: sys.sub.iter().map(|v| -c * v).collect(),
                diag: sys.diag.iter().map(|v| 1.0 - c * v).collect(),
                sup: sys.sup.iter().map(|v| -c * v).collect(),
                corners: sys.corners.map(|(tr, bl)| (-c * tr, -c * bl)),
            }),
            OperatorMatrix::Dense { size, entries } => {
                let n = *size;
                let entries = entries
                    .iter()
                    .enumerate()
                    .map(|(k, d)| if k / n == k % n { 1.0 - c * d } else { -c * d })
                    .collect();
                OperatorMatrix::Dense { size: n, entries }
            }
        }
    }
}

/// A discrete collision operator together with its pseudo-eigenvalue data.
///
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionOperator {
    pub kind: OperatorKind,
    pub matrix: OperatorMatrix,
    /// `λ⋆ = ⟨V,V⟩ / ⟨U,V⟩ < 0`.
    pub lambda_star: f64,
    /// The mean-zero solution `U` of `DU = V`.
    pub u_vector: Vec<f64>,
    pub solver_hint: SolverHint,
}

impl CollisionOperator {
    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.apply(x, out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.matrix.to_dense()
    }

    /// Same operator, different per-cell solve strategy.
    pub fn with_solver_hint(mut self, hint: SolverHint) -> Result<Self> {
        let ok = match hint {
            SolverHint::DiagonalTrick => self.kind == OperatorKind::Bgk,
            SolverHint::Tridiagonal => matches!(
                self.matrix,
                OperatorMatrix::Banded(_) | OperatorMatrix::Conservative(_)
            ),
            SolverHint::GenericSpd => true,
        };
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "solver hint {hint:?} does not apply to the {} operator",
                self.kind
            )));
        }
        self.solver_hint = hint;
        Ok(self)
    }
}

/// BGK relaxation `D = P₀ − I`.
pub fn build_bgk(grid: &VelocityGrid) -> CollisionOperator {
    CollisionOperator {
        kind: OperatorKind::Bgk,
        matrix: OperatorMatrix::Relaxation { size: grid.len() },
        lambda_star: -1.0,
        u_vector: grid.velocities().iter().map(|v| -v).collect(),
        solver_hint: SolverHint::DiagonalTrick,
    }
}

/// Conservative three-point discretization of `∂_v((1 − v²)∂_v f)`.
///
/// Edge diffusivities `1 − v²_{j±1/2}` vanish at `v = ±1`, which makes
/// `D𝟙 = 0` and `DV = −2V` hold exactly.
pub fn build_fokker_planck(grid: &VelocityGrid) -> CollisionOperator {
    let n = grid.len();
    let inv_dv2 = 1.0 / (grid.delta_v() * grid.delta_v());
    let weights: Vec<f64> = grid
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            if k == 0 || k == n {
                0.0
            } else {
                (1.0 - e * e) * inv_dv2
            }
        })
        .collect();
    let off: Vec<f64> = weights[1..n].to_vec();
    let diag = (0..n).map(|j| -(weights[j] + weights[j + 1])).collect();
    let sys = TridiagonalSystem::new(off.clone(), diag, off).expect("bands sized from grid");
    CollisionOperator {
        kind: OperatorKind::FokkerPlanck,
        matrix: OperatorMatrix::Conservative(sys),
        lambda_star: -2.0,
        u_vector: grid.velocities().iter().map(|v| -v / 2.0).collect(),
        solver_hint: SolverHint::Tridiagonal,
    }
}

/// Default scale of the periodic-Laplacian scattering operator.
pub const SCATTERING_SCALE: f64 = 0.1;

/// `scale · D₁` with `D₁` the periodic second-difference matrix over velocity.
pub fn build_scattering(grid: &VelocityGrid, scale: f64) -> Result<CollisionOperator> {
    let n = grid.len();
    if n < 3 {
        return Err(Error::InvalidConfig(format!(
            "scattering operator needs at least 3 velocities, got {n}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "scattering scale must be positive, got {scale}"
        )));
    }
    let a = scale / (grid.delta_v() * grid.delta_v());
    let sys = TridiagonalSystem::cyclic(vec![a; n - 1], vec![-2.0 * a; n], vec![a; n - 1], a, a)?;
    let matrix = OperatorMatrix::Conservative(sys);
    let (u_vector, lambda_star) = compute_u_and_lambda(&matrix, grid.velocities())?;
    Ok(CollisionOperator {
        kind: OperatorKind::Scattering,
        matrix,
        lambda_star,
        u_vector,
        solver_hint: SolverHint::GenericSpd,
    })
}

/// Solves `DU = V` on the mean-zero subspace and returns `(U, λ⋆)`.
pub fn compute_u_and_lambda(matrix: &OperatorMatrix, velocities: &[f64]) -> Result<(Vec<f64>, f64)> {
    if matrix.size() != velocities.len() {
        return Err(Error::InvalidInput(format!(
            "operator of size {} with {} velocities",
            matrix.size(),
            velocities.len()
        )));
    }
    let u = linalg::projected_solve_mean_zero(|x, o| matrix.apply(x, o), velocities, linalg::SCHEME_TOL)
        .map_err(|e| match e {
            Error::Singular(msg) => Error::InvalidOperator(format!("kernel larger than constants: {msg}")),
            other => other,
        })?;
    let uv = linalg::dot(&u, velocities);
    let lambda_star = linalg::dot(velocities, velocities) / uv;
    if !(lambda_star < 0.0) {
        return Err(Error::InvalidOperator(format!(
            "pseudo-eigenvalue {lambda_star} is not negative"
        )));
    }
    Ok((u, lambda_star))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub size: usize,
    pub max_asymmetry: f64,
    pub max_row_sum: f64,
    pub min_off_diagonal: f64,
    pub max_eigenvalue: f64,
    pub kernel_dimension: usize,
    /// Number of connected components of the graph `{(i, j) : D_ij > 0, i ≠ j}`.
    pub components: usize,
    /// Largest `δ` for which `I + δD` has a nonnegative diagonal.
    pub delta_max: f64,
}

impl ValidationReport {
    pub fn symmetric(&self) -> bool {
        self.max_asymmetry <= 1e-14 * self.scale()
    }

    pub fn zero_row_sums(&self) -> bool {
        self.max_row_sum <= 1e-13 * self.scale()
    }

    pub fn nonnegative_off_diagonal(&self) -> bool {
        self.min_off_diagonal >= 0.0
    }

    pub fn negative_semidefinite(&self) -> bool {
        self.max_eigenvalue <= 1e-12 * self.scale()
    }

    pub fn kernel_is_constants(&self) -> bool {
        self.kernel_dimension == 1 && self.zero_row_sums()
    }

    pub fn irreducible(&self) -> bool {
        self.components == 1
    }

    pub fn passed(&self) -> bool {
        self.symmetric()
            && self.zero_row_sums()
            && self.nonnegative_off_diagonal()
            && self.negative_semidefinite()
            && self.kernel_is_constants()
            && self.irreducible()
    }

    /// Entry magnitude used to make the tolerances scale-free.
    fn scale(&self) -> f64 {
        if self.delta_max.is_finite() {
            (1.0 / self.delta_max).max(1.0)
        } else {
            1.0
        }
    }

    pub fn checks(&self) -> [(&'static str, bool); 6] {
        [
            ("symmetric", self.symmetric()),
            ("zero_row_sums", self.zero_row_sums()),
            ("nonnegative_off_diagonal", self.nonnegative_off_diagonal()),
            ("negative_semidefinite", self.negative_semidefinite()),
            ("kernel_is_constants", self.kernel_is_constants()),
            ("irreducible", self.irreducible()),
        ]
    }
}

/// Structural and spectral checks of a candidate collision matrix.
///
/// The bistochastic condition on `I + δD` is checked structurally: nonnegative
/// off-diagonals, zero row sums, and a connected off-diagonal graph.
pub fn validate_operator(d: &DMatrix<f64>) -> Result<ValidationReport> {
    let n = d.nrows();
    if n == 0 || d.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "operator must be square, got {}x{}",
            d.nrows(),
            d.ncols()
        )));
    }
    let mut max_asymmetry = 0.0_f64;
    let mut min_off_diagonal = f64::INFINITY;
    let mut max_diag = 0.0_f64;
    for i in 0..n {
        max_diag = max_diag.max(d[(i, i)].abs());
        for j in 0..n {
            max_asymmetry = max_asymmetry.max((d[(i, j)] - d[(j, i)]).abs());
            if i != j {
                min_off_diagonal = min_off_diagonal.min(d[(i, j)]);
            }
        }
    }
    if n == 1 {
        min_off_diagonal = 0.0;
    }
    let max_row_sum = d
        .row_iter()
        .map(|r| r.iter().sum::<f64>().abs())
        .fold(0.0, f64::max);

    let sym = (d + d.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let spread = eig.iter().fold(0.0_f64, |m, e| m.max(e.abs())).max(f64::MIN_POSITIVE);
    let max_eigenvalue = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kernel_dimension = eig.iter().filter(|e| e.abs() <= 1e-10 * spread).count();

    Ok(ValidationReport {
        size: n,
        max_asymmetry,
        max_row_sum,
        min_off_diagonal,
        max_eigenvalue,
        kernel_dimension,
        components: connected_components(d),
        delta_max: if max_diag > 0.0 { 1.0 / max_diag } else { f64::INFINITY },
    })
}

fn connected_components(d: &DMatrix<f64>) -> usize {
    let n = d.nrows();
    let mut seen = vec![false; n];
    let mut components = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if i != j && !seen[j] && (d[(i, j)] > 0.0 || d[(j, i)] > 0.0) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    components
}

/// Orthogonal projection onto `span(𝟙)`: `m𝟙` with `m` the arithmetic mean.
pub fn mean_projection(f: &[f64]) -> Vec<f64> {
    if f.is_empty() {
        return Vec::new();
    }
    vec![linalg::mean(f); f.len()]
}

/// `D⁺φ`: the mean-zero solution of `Dψ = φ`.
pub fn pseudo_inverse_apply(op: &CollisionOperator, phi: &[f64]) -> Result<Vec<f64>> {
    let n = op.size();
    if phi.len() != n {
        return Err(Error::InvalidInput(format!(
            "vector of length {} for operator of size {n}",
            phi.len()
        )));
    }
    let scale = linalg::norm2(phi);
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let m = linalg::mean(phi);
    if m.abs() * (n as f64).sqrt() > 1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "pseudo-inverse input has nonzero mean {m:e}"
        )));
    }
    match op.matrix {
        OperatorMatrix::Relaxation { .. } => {
            let mut psi: Vec<f64> = phi.iter().map(|v| -v).collect();
            linalg::remove_mean(&mut psi);
            Ok(psi)
        }
        _ => linalg::projected_solve_mean_zero(|x, o| op.apply(x, o), phi, linalg::SCHEME_TOL),
    }
}

/// `⟨DF, ln F⟩`, which is nonpositive and vanishes only on constant `F`.
pub fn entropy_dissipation(op: &CollisionOperator, f: &[f64]) -> Result<f64> {
    if f.len() != op.size() {
        return Err(Error::InvalidInput(format!(
            "vector of length {} for operator of size {}",
            f.len(),
            op.size()
        )));
    }
    if let Some(bad) = f.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "entropy needs a strictly positive distribution, found {bad}"
        )));
    }
    let mut df = vec![0.0; f.len()];
    op.apply(f, &mut df);
    Ok(df.iter().zip(f).map(|(d, fi)| d * fi.ln()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let g = build_grid(1).unwrap();
        assert_eq!(g.velocities(), &[-0.5, 0.5]);
        assert_eq!(g.delta_v(), 1.0);

        let g = build_grid(2).unwrap();
        assert_eq!(g.velocities(), &[-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(g.velocities().iter().sum::<f64>(), 0.0);

        let g = build_grid(50).unwrap();
        assert_eq!(g.len(), 100);
        assert!((g.velocities()[0] + 0.99).abs() < 1e-15);
        assert!((g.velocities()[99] - 0.99).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_zero() {
        assert!(matches!(build_grid(0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn grid_invariants() {
        for n in [1, 3, 7, 50, 200] {
            let g = build_grid(n).unwrap();
            let v = g.velocities();
            for j in 0..v.len() {
                assert_eq!(v[j], -v[v.len() - 1 - j]);
                assert!(v[j] != 0.0 && v[j].abs() < 1.0);
            }
            assert!(v.iter().sum::<f64>().abs() <= 1e-14 * v.len() as f64);
        }
    }

    #[test]
    fn bgk_two_velocities() {
        let op = build_bgk(&build_grid(1).unwrap());
        let d = op.to_dense();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[-0.5, 0.5, 0.5, -0.5]));
        assert_eq!(op.lambda_star, -1.0);
        assert_eq!(op.solver_hint, SolverHint::DiagonalTrick);
    }

    #[test]
    fn bgk_kernel_and_velocity_eigenvector() {
        let g = build_grid(5).unwrap();
        let op = build_bgk(&g);
        let mut out = vec![0.0; g.len()];
        op.apply(&vec![1.0; g.len()], &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-15));
        op.apply(g.velocities(), &mut out);
        for (o, v) in out.iter().zip(g.velocities()) {
            assert!((o + v).abs() < 1e-15);
        }
    }

    #[test]
    fn fokker_planck_two_velocities() {
        let g = build_grid(1).unwrap();
        let op = build_fokker_planck(&g);
        assert_eq!(
            op.to_dense(),
            DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0])
        );
        let mut out = vec![0.0; 2];
        op.apply(g.velocities(), &mut out);
        assert_eq!(out, vec![1.0, -1.0]);
    }

    #[test]
    fn fokker_planck_exact_identities() {
        for n in [2, 5, 50, 64, 200, 256] {
            let g = build_grid(n).unwrap();
            let op = build_fokker_planck(&g);
            let mut out = vec![0.0; g.len()];
            op.apply(&vec![1.0; g.len()], &mut out);
            assert!(out.iter().all(|v| *v == 0.0), "{out:?}");
            op.apply(g.velocities(), &mut out);
            // Exact on dyadic grids; otherwise limited by the rounding of v_j.
            let tol = if n.is_power_of_two() {
                0.0
            } else {
                1e-13 * op.to_dense().amax()
            };
            for (o, v) in out.iter().zip(g.velocities()) {
                assert!((o + 2.0 * v).abs() <= tol, "{n}");
            }
        }
    }

    #[test]
    fn scattering_rejects_tiny_grid() {
        assert!(build_scattering(&build_grid(1).unwrap(), 0.1).is_err());
    }

    #[test]
    fn compute_u_recovers_closed_forms() {
        let g = build_grid(10).unwrap();
        let bgk = build_bgk(&g);
        let (u, l) = compute_u_and_lambda(&bgk.matrix, g.velocities()).unwrap();
        assert!((l + 1.0).abs() < 1e-12);
        for (ui, vi) in u.iter().zip(g.velocities()) {
            assert!((ui + vi).abs() < 1e-12);
        }
        let fp = build_fokker_planck(&g);
        let (u, l) = compute_u_and_lambda(&fp.matrix, g.velocities()).unwrap();
        assert!((l + 2.0).abs() < 1e-12);
        for (ui, vi) in u.iter().zip(g.velocities()) {
            assert!((ui + vi / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn compute_u_flags_disconnected_operator() {
        // Two decoupled 2x2 BGK blocks: kernel of dimension 2.
        let mut e = vec![0.0; 16];
        for (i, j, v) in [(0, 0, -0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, -0.5)] {
            e[i * 4 + j] = v;
            e[(i + 2) * 4 + j + 2] = v;
        }
        let m = OperatorMatrix::Dense { size: 4, entries: e };
        // V restricted to each block is not mean zero there, so DU = V has no solution.
        let v = [-0.75, -0.25, 0.25, 0.75];
        assert!(compute_u_and_lambda(&m, &v).is_err());
        let rep = validate_operator(&m.to_dense()).unwrap();
        assert_eq!(rep.kernel_dimension, 2);
        assert!(!rep.irreducible() && !rep.kernel_is_constants() && !rep.passed());
    }

    #[test]
    fn builders_pass_validation() {
        let g = build_grid(10).unwrap();
        for kind in OperatorKind::ALL {
            let rep = validate_operator(&kind.build(&g).unwrap().to_dense()).unwrap();
            assert!(rep.passed(), "{kind}: {rep:?}");
        }
    }

    #[test]
    fn negative_off_diagonal_fails_positivity() {
        let mut d = build_bgk(&build_grid(3).unwrap()).to_dense();
        d[(0, 1)] = -0.1;
        d[(1, 0)] = -0.1;
        let rep = validate_operator(&d).unwrap();
        assert!(!rep.nonnegative_off_diagonal());
        assert!(!rep.passed());
    }

    #[test]
    fn mean_projection_examples() {
        assert_eq!(mean_projection(&[1.0; 4]), vec![1.0; 4]);
        assert_eq!(mean_projection(&[1.0, 2.0, 3.0, 4.0]), vec![2.5; 4]);
        let g = build_grid(3).unwrap();
        assert!(mean_projection(g.velocities()).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn pseudo_inverse_examples() {
        let g = build_grid(8).unwrap();
        for kind in OperatorKind::ALL {
            let op = kind.build(&g).unwrap();
            let psi = pseudo_inverse_apply(&op, g.velocities()).unwrap();
            for (p, u) in psi.iter().zip(&op.u_vector) {
                assert!((p - u).abs() < 1e-10, "{kind}");
            }
            assert_eq!(pseudo_inverse_apply(&op, &vec![0.0; g.len()]).unwrap(), vec![0.0; g.len()]);
        }
        let fp = build_fokker_planck(&g);
        let psi = pseudo_inverse_apply(&fp, g.velocities()).unwrap();
        let mut back = vec![0.0; g.len()];
        fp.apply(&psi, &mut back);
        for (b, v) in back.iter().zip(g.velocities()) {
            assert!((b - v).abs() < 1e-10);
        }
    }

    #[test]
    fn pseudo_inverse_rejects_mean() {
        let op = build_bgk(&build_grid(2).unwrap());
        assert!(matches!(
            pseudo_inverse_apply(&op, &[1.0, 0.0, 0.0, 0.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn entropy_examples() {
        let g = build_grid(10).unwrap();
        let bgk = build_bgk(&g);
        assert_eq!(entropy_dissipation(&bgk, &vec![3.0; g.len()]).unwrap().abs(), 0.0);
        let f: Vec<f64> = g.velocities().iter().map(|v| 1.0 + 0.1 * v).collect();
        assert!(entropy_dissipation(&bgk, &f).unwrap() < 0.0);

        let fp = build_fokker_planck(&g);
        let at = |amp: f64| {
            let f: Vec<f64> = g.velocities().iter().map(|v| (amp * v).exp()).collect();
            entropy_dissipation(&fp, &f).unwrap()
        };
        let (big, small) = (at(1.0), at(0.5));
        assert!(big < 0.0 && small < 0.0);
        let ratio = big / small;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn entropy_rejects_nonpositive() {
        let op = build_bgk(&build_grid(1).unwrap());
        assert!(entropy_dissipation(&op, &[1.0, 0.0]).is_err());
    }
}
