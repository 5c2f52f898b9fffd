use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::{self, TridiagonalSystem};
use crate::velocity::{CollisionOperator, OperatorMatrix, SolverHint, VelocityGrid};

use super::coefficients::{flux_coefficients, FluxCoefficients, SchemeParams, Variant};
use super::flux::{fill_micro_flux, half_moments, macro_flux_from_moments, HalfMoments};

/// Cell-averaged distribution `F` (row-major, `nx × nv`) and density `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    pub nv: usize,
    pub f: Vec<f64>,
    pub rho: Vec<f64>,
    pub t: f64,
}

impl KineticState {
    /// Builds a state whose density is the `1/(2N)` velocity average of `f`.
    pub fn from_distribution(f: Vec<f64>, nv: usize, t: f64) -> Result<Self> {
        if nv == 0 || f.is_empty() || !f.len().is_multiple_of(nv) {
            return Err(Error::InvalidInput(format!(
                "distribution of length {} is not a whole number of rows of {nv}",
                f.len()
            )));
        }
        let rho = f.chunks_exact(nv).map(linalg::mean).collect();
        Ok(KineticState { nv, f, rho, t })
    }

    /// Spatially uniform equilibrium `F = value·𝟙`.
    pub fn uniform(nx: usize, nv: usize, value: f64) -> Self {
        KineticState {
            nv,
            f: vec![value; nx * nv],
            rho: vec![value; nx],
            t: 0.0,
        }
    }

    pub fn nx(&self) -> usize {
        self.rho.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.f[i * self.nv..(i + 1) * self.nv]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.f.chunks_exact(self.nv)
    }

    /// `Σ_i ρ_i`, summed in cell order.
    pub fn total_density(&self) -> f64 {
        self.rho.iter().sum()
    }

    /// `max_i |ρ_i − (1/2N)Σ_j F_ij|`.
    pub fn micro_macro_defect(&self) -> f64 {
        self.rows()
            .zip(&self.rho)
            .map(|(row, r)| (r - linalg::mean(row)).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub requested_time: f64,
    pub steps: usize,
    pub state: KineticState,
    pub total_density: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: KineticState,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub elapsed: Duration,
}

/// Per-cell solver for `(I − cD)F = b`.
#[derive(Debug, Clone)]
enum CollisionSolve {
    Diagonal,
    Thomas(TridiagonalSystem),
    Cg(OperatorMatrix),
}

/// The time stepper for one grid, operator and parameter set.
#[derive(Debug, Clone)]
pub struct Ugks {
    grid: VelocityGrid,
    op: CollisionOperator,
    params: SchemeParams,
    coeffs: FluxCoefficients,
    collision: CollisionSolve,
    exec: Execution,
}

impl Ugks {
    pub fn new(grid: VelocityGrid, op: CollisionOperator, params: SchemeParams) -> Result<Self> {
        params.validate()?;
        if op.size() != grid.len() {
            return Err(Error::InvalidConfig(format!(
                "operator of size {} on a grid of {} velocities",
                op.size(),
                grid.len()
            )));
        }
        if params.variant == Variant::ImplicitDiffusion && params.nx < 3 {
            return Err(Error::InvalidConfig(
                "implicit diffusion needs at least 3 cells".into(),
            ));
        }
        let coeffs = flux_coefficients(&params, op.lambda_star)?;
        let c = params.collision_factor();
        let collision = match (op.solver_hint, op.matrix.shifted_identity(c)) {
            (SolverHint::DiagonalTrick, _) => CollisionSolve::Diagonal,
            (SolverHint::Tridiagonal, OperatorMatrix::Banded(sys)) => CollisionSolve::Thomas(sys),
            (SolverHint::Tridiagonal, _) => {
                return Err(Error::InvalidConfig(
                    "tridiagonal solve requested for a non-banded operator".into(),
                ))
            }
            (SolverHint::GenericSpd, m) => CollisionSolve::Cg(m),
        };
        Ok(Ugks {
            grid,
            op,
            params,
            coeffs,
            collision,
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn operator(&self) -> &CollisionOperator {
        &self.op
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn coefficients(&self) -> &FluxCoefficients {
        &self.coeffs
    }

    fn check_state(&self, state: &KineticState) -> Result<()> {
        if state.nv != self.grid.len() || state.nx() != self.params.nx {
            return Err(Error::InvalidInput(format!(
                "state of shape {}x{} for a scheme of shape {}x{}",
                state.nx(),
                state.nv,
                self.params.nx,
                self.grid.len()
            )));
        }
        Ok(())
    }

    /// One step of the variant selected in the parameters.
    pub fn step(&self, state: &KineticState) -> Result<KineticState> {
        match self.params.variant {
            Variant::ExplicitDiffusion => self.step_explicit(state),
            Variant::ImplicitDiffusion => self.step_implicit_diffusion(state),
        }
    }

    /// Explicit macro update followed by the implicit per-cell collision solve.
    pub fn step_explicit(&self, state: &KineticState) -> Result<KineticState> {
        self.check_state(state)?;
        let nx = state.nx();
        let dx = self.params.dx;
        let moments = self.moments(state);
        let gradients: Vec<f64> = (0..nx)
            .map(|i| (state.rho[(i + 1) % nx] - state.rho[i]) / dx)
            .collect();
        let macro_fluxes: Vec<f64> = (0..nx)
            .map(|i| {
                macro_flux_from_moments(
                    &moments[i],
                    &moments[(i + 1) % nx],
                    gradients[i],
                    &self.coeffs,
                    &self.grid,
                )
            })
            .collect();
        let ratio = self.params.dt / dx;
        let rho_new: Vec<f64> = (0..nx)
            .map(|i| state.rho[i] - ratio * (macro_fluxes[i] - macro_fluxes[(i + nx - 1) % nx]))
            .collect();
        self.kinetic_update(state, &moments, &gradients, rho_new)
    }

    /// Implicit treatment of the limiting diffusion: solves the periodic
    /// macro system for `ρ^{n+1}` first, then the kinetic update.
    pub fn step_implicit_diffusion(&self, state: &KineticState) -> Result<KineticState> {
        self.check_state(state)?;
        let nx = state.nx();
        if nx < 3 {
            return Err(Error::InvalidConfig(
                "implicit diffusion needs at least 3 cells".into(),
            ));
        }
        let dx = self.params.dx;
        let dt = self.params.dt;
        let moments = self.moments(state);
        let currents: Vec<f64> = (0..nx)
            .map(|i| moments[i].j_plus + moments[(i + 1) % nx].j_minus)
            .collect();
        let rhs: Vec<f64> = (0..nx)
            .map(|i| {
                state.rho[i]
                    - dt / dx * self.coeffs.a_coef * (currents[i] - currents[(i + nx - 1) % nx])
            })
            .collect();
        let gamma = dt * self.grid.second_moment() * self.coeffs.d_coef / (dx * dx);
        let sys = TridiagonalSystem::cyclic(
            vec![gamma; nx - 1],
            vec![1.0 - 2.0 * gamma; nx],
            vec![gamma; nx - 1],
            gamma,
            gamma,
        )?;
        let solved = linalg::cyclic_thomas_solve(&sys, &rhs)?;
        let gradients: Vec<f64> = (0..nx)
            .map(|i| (solved[(i + 1) % nx] - solved[i]) / dx)
            .collect();
        // Re-apply in flux form so that rounding in the solve cannot leak mass.
        let m2d = self.grid.second_moment() * self.coeffs.d_coef;
        let fluxes: Vec<f64> = (0..nx)
            .map(|i| self.coeffs.a_coef * currents[i] + m2d * gradients[i])
            .collect();
        let rho_new: Vec<f64> = (0..nx)
            .map(|i| state.rho[i] - dt / dx * (fluxes[i] - fluxes[(i + nx - 1) % nx]))
            .collect();
        self.kinetic_update(state, &moments, &gradients, rho_new)
    }

    fn moments(&self, state: &KineticState) -> Vec<HalfMoments> {
        exec::map_indices(self.exec, state.nx(), |i| half_moments(state.row(i), &self.grid))
    }

    fn kinetic_update(
        &self,
        state: &KineticState,
        moments: &[HalfMoments],
        gradients: &[f64],
        rho_new: Vec<f64>,
    ) -> Result<KineticState> {
        let nx = state.nx();
        let nv = state.nv;
        let mut phi = vec![0.0; nx * nv];
        exec::for_each_row(self.exec, &mut phi, nv, |i, out| {
            let r = (i + 1) % nx;
            fill_micro_flux(
                out,
                state.row(i),
                state.row(r),
                &moments[i],
                &moments[r],
                gradients[i],
                &self.coeffs,
                &self.op,
                &self.grid,
            );
        });

        let ratio = self.params.dt / self.params.dx;
        let mut f = vec![0.0; nx * nv];
        exec::try_for_each_row(self.exec, &mut f, nv, |i, out| {
            let right = &phi[i * nv..(i + 1) * nv];
            let l = (i + nx - 1) % nx;
            let left = &phi[l * nv..(l + 1) * nv];
            for (j, o) in out.iter_mut().enumerate() {
                *o = state.f[i * nv + j] - ratio * (right[j] - left[j]);
            }
            self.solve_collision(out, state.row(i), rho_new[i])
                .map_err(|e| Error::CellSolve {
                    cell: i,
                    source: Box::new(e),
                })
        })?;

        Ok(KineticState {
            nv,
            f,
            rho: rho_new,
            t: state.t + self.params.dt,
        })
    }

    /// Overwrites `rhs` with the solution of `(I − cD)F = rhs`, then shifts it
    /// along the kernel so that its velocity average equals `rho_new`.
    fn solve_collision(&self, rhs: &mut [f64], previous: &[f64], rho_new: f64) -> Result<()> {
        let c = self.params.collision_factor();
        match &self.collision {
            CollisionSolve::Diagonal => {
                let inv = 1.0 / (1.0 + c);
                rhs.iter_mut()
                    .for_each(|b| *b = (*b + c * rho_new) * inv);
            }
            CollisionSolve::Thomas(sys) => {
                let x = if sys.corners.is_some() {
                    linalg::cyclic_thomas_solve(sys, rhs)?
                } else {
                    linalg::thomas_solve(sys, rhs)?
                };
                rhs.copy_from_slice(&x);
            }
            CollisionSolve::Cg(m) => {
                // I − cD maps constants to themselves, so only the mean-zero part needs CG.
                let mean = linalg::mean(rhs);
                rhs.iter_mut().for_each(|b| *b -= mean);
                let mut guess = previous.to_vec();
                linalg::remove_mean(&mut guess);
                let out = linalg::conjugate_gradient_from(
                    |x, o| m.apply(x, o),
                    rhs,
                    Some(&guess),
                    linalg::SCHEME_TOL,
                    10 * rhs.len(),
                )?;
                rhs.iter_mut()
                    .zip(&out.x)
                    .for_each(|(b, x)| *b = x + mean);
            }
        }
        let shift = rho_new - linalg::mean(rhs);
        rhs.iter_mut().for_each(|b| *b += shift);
        Ok(())
    }

    /// Advances `n` steps.
    pub fn advance(&self, state: &KineticState, n: usize) -> Result<KineticState> {
        let mut s = state.clone();
        for _ in 0..n {
            s = self.step(&s)?;
        }
        Ok(s)
    }

    /// Steps until the last requested time, recording a snapshot at the first
    /// step with `t ≥ t_k` for each requested `t_k`.
    pub fn run(&self, initial: KineticState, snapshot_times: &[f64]) -> Result<RunOutput> {
        self.check_state(&initial)?;
        if snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig(
                "snapshot times must be sorted ascending".into(),
            ));
        }
        let t0 = initial.t;
        let dt = self.params.dt;
        let targets: Vec<usize> = snapshot_times
            .iter()
            .map(|&t| {
                let n = (t - t0) / dt;
                // Tolerate rounding in t/Δt so that Δt dividing t lands exactly.
                let rounded = n.round();
                if (n - rounded).abs() <= 1e-9 * n.abs().max(1.0) {
                    rounded.max(0.0) as usize
                } else {
                    n.ceil().max(0.0) as usize
                }
            })
            .collect();

        let start = Instant::now();
        let mut state = initial;
        let mut steps = 0;
        let mut snapshots = Vec::with_capacity(targets.len());
        for (&requested_time, &target) in snapshot_times.iter().zip(&targets) {
            while steps < target {
                state = self.step(&state)?;
                steps += 1;
            }
            snapshots.push(Snapshot {
                requested_time,
                steps,
                total_density: state.total_density(),
                state: state.clone(),
            });
        }
        Ok(RunOutput {
            final_state: state,
            snapshots,
            steps,
            elapsed: start.elapsed(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::{build_grid, OperatorKind};

    fn solver(kind: OperatorKind, eta: f64, eps: f64, dt: f64, nx: usize, variant: Variant) -> Ugks {
        let grid = build_grid(8).unwrap();
        let op = kind.build(&grid).unwrap();
        let p = SchemeParams::new(eta, eps, 1.0, dt, nx, variant).unwrap();
        Ugks::new(grid, op, p).unwrap()
    }

    fn bump(nx: usize, nv: usize) -> KineticState {
        let f = (0..nx * nv)
            .map(|k| {
                let x = ((k / nv) as f64 + 0.5) / nx as f64;
                let j = (k % nv) as f64;
                (-(x - 0.5f64).powi(2) * 20.0).exp() * (1.0 + 0.05 * j)
            })
            .collect();
        KineticState::from_distribution(f, nv, 0.0).unwrap()
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        for kind in OperatorKind::ALL {
            for variant in [Variant::ExplicitDiffusion, Variant::ImplicitDiffusion] {
                let s = solver(kind, 0.1, 0.1, 1e-4, 12, variant);
                let state = KineticState::uniform(12, 16, 0.37);
                let next = s.step(&state).unwrap();
                for (a, b) in next.f.iter().zip(&state.f) {
                    assert!((a - b).abs() <= 1e-13, "{kind} {variant}");
                }
            }
        }
    }

    #[test]
    fn conserves_mass_and_consistency() {
        for kind in OperatorKind::ALL {
            for variant in [Variant::ExplicitDiffusion, Variant::ImplicitDiffusion] {
                for (eta, eps) in [(1.0, 100.0), (0.1, 0.1), (1e-4, 1e-4)] {
                    let s = solver(kind, eta, eps, 1e-4, 16, variant);
                    let init = bump(16, 16);
                    let m0 = init.total_density();
                    let end = s.advance(&init, 50).unwrap();
                    assert!((end.total_density() - m0).abs() <= 1e-13 * m0);
                    assert!(end.micro_macro_defect() <= 1e-11 * 1.0);
                    assert!((end.t - 50.0 * 1e-4).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        for kind in OperatorKind::ALL {
            let s = solver(kind, 0.1, 0.1, 1e-4, 16, Variant::ExplicitDiffusion);
            let init = bump(16, 16);
            let a = s.clone().with_execution(Execution::Sequential).advance(&init, 5).unwrap();
            let b = s.with_execution(Execution::Parallel).advance(&init, 5).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_mismatched_state() {
        let s = solver(OperatorKind::Bgk, 1.0, 1.0, 1e-3, 8, Variant::ExplicitDiffusion);
        assert!(s.step(&KineticState::uniform(9, 16, 1.0)).is_err());
    }

    #[test]
    fn run_with_zero_steps_returns_initial_state() {
        let s = solver(OperatorKind::Bgk, 1.0, 1.0, 1e-3, 8, Variant::ExplicitDiffusion);
        let init = bump(8, 16);
        let out = s.run(init.clone(), &[0.0]).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.final_state, init);
        assert_eq!(out.snapshots[0].state, init);
    }

    #[test]
    fn run_hits_snapshot_times() {
        let s = solver(OperatorKind::Bgk, 1.0, 1.0, 1e-5, 8, Variant::ExplicitDiffusion);
        let out = s.run(bump(8, 16), &[1e-4, 5e-4]).unwrap();
        assert_eq!(out.snapshots[0].steps, 10);
        assert_eq!(out.snapshots[1].steps, 50);
        assert!(s.run(bump(8, 16), &[5e-4, 1e-4]).is_err());
    }
}
