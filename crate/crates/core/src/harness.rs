//! Parameter sweeps built on the solver and the reference solutions.

use serde::Serialize;

use crate::error::Result;
use crate::exec::{self, Execution};
use crate::oracles;
use crate::report::{reference_density, Norms};
use crate::scenario::{initialize_state, Reference, Scenario, TimeStep};
use crate::scheme::{SchemeParams, Ugks, Variant};
use crate::velocity::{build_grid, OperatorKind};

#[derive(Debug, Clone, Serialize)]
pub struct LambdaStarRow {
    pub operator: String,
    pub nv: usize,
    pub lambda_star: f64,
    pub continuum: f64,
}

/// `λ⋆` for each velocity count in `nvs` (each must be even).
pub fn lambda_star_report(kind: OperatorKind, nvs: &[usize]) -> Result<Vec<LambdaStarRow>> {
    nvs.iter()
        .map(|&nv| {
            if nv % 2 != 0 {
                return Err(crate::Error::InvalidConfig(format!(
                    "velocity count must be even, got {nv}"
                )));
            }
            let op = kind.build(&build_grid(nv / 2)?)?;
            Ok(LambdaStarRow {
                operator: kind.tag().to_owned(),
                nv,
                lambda_star: op.lambda_star,
                continuum: kind.continuum_lambda_star(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub eta: f64,
    pub dt: f64,
    pub steps: usize,
    pub time: f64,
    pub reference: Reference,
    /// Error of `ρ` against the reference solution.
    pub error: Norms,
    pub relative_l2: f64,
    /// Same norms for the first-order upwind scheme, on the transport branch.
    pub upwind_error: Option<Norms>,
    pub max_density: f64,
    pub finite: bool,
}

/// Scenario used by [`ap_sweep`] for one `ε`: `η = 1` against the transport
/// solution when `ε ≥ 1`, `η = ε` against the heat kernel otherwise, with the
/// automatic time step.
pub fn sweep_scenario(kind: OperatorKind, epsilon: f64, t_final: f64) -> Result<Scenario> {
    let transport = epsilon >= 1.0;
    let mut s = Scenario::preset(if transport { "transport" } else { "diffusive" })?;
    s.name = format!("sweep_{epsilon:e}");
    s.operator = kind;
    s.epsilon = epsilon;
    s.eta = if transport { 1.0 } else { epsilon };
    s.dt = TimeStep::AUTO;
    s.t_snapshots = vec![t_final];
    s.validate()?;
    Ok(s)
}

pub fn ap_sweep(
    kind: OperatorKind,
    epsilons: &[f64],
    t_final: f64,
    execution: Execution,
) -> Result<Vec<SweepRow>> {
    let rows = exec::map_indices(execution, epsilons.len(), |k| {
        sweep_one(kind, epsilons[k], t_final, execution)
    });
    rows.into_iter().collect()
}

fn sweep_one(kind: OperatorKind, epsilon: f64, t_final: f64, execution: Execution) -> Result<SweepRow> {
    let s = sweep_scenario(kind, epsilon, t_final)?;
    let grid = s.grid()?;
    let op = kind.build(&grid)?;
    let params = s.scheme_params()?;
    let solver = Ugks::new(grid.clone(), op.clone(), params)?.with_execution(execution);
    let initial = initialize_state(&s)?;
    let out = solver.run(initial.clone(), &s.t_snapshots)?;
    let state = out.final_state;
    let reference = reference_density(&s, &grid, &op, &initial, state.t)?
        .expect("sweep scenarios always carry a reference");
    let error = Norms::of_difference(&state.rho, &reference);
    let upwind_error = if s.reference == Reference::ExactTransport {
        let mut f = initial.f.clone();
        for _ in 0..out.steps {
            f = oracles::upwind_transport_step(&f, params.dt, params.dx, s.eta, &grid)?;
        }
        let rho: Vec<f64> = f.chunks_exact(grid.len()).map(|r| r.iter().sum::<f64>() / grid.len() as f64).collect();
        Some(Norms::of_difference(&rho, &reference))
    } else {
        None
    };
    Ok(SweepRow {
        epsilon,
        eta: s.eta,
        dt: params.dt,
        steps: out.steps,
        time: state.t,
        reference: s.reference,
        error,
        relative_l2: error.l2 / Norms::of(&reference).l2,
        upwind_error,
        max_density: state.rho.iter().cloned().fold(f64::MIN, f64::max),
        finite: state.f.iter().all(|v| v.is_finite()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantRow {
    pub dt: f64,
    pub steps: usize,
    /// `ρ_explicit − ρ_implicit` at the final time.
    pub difference: Norms,
}

/// Runs both diffusion variants of `base` to `t_final` for every time step
/// in `dts` and reports how far apart their densities end up.
pub fn compare_variants(
    base: &Scenario,
    dts: &[f64],
    t_final: f64,
    execution: Execution,
) -> Result<Vec<VariantRow>> {
    let grid = base.grid()?;
    let op = base.operator.build(&grid)?;
    let initial = initialize_state(base)?;
    dts.iter()
        .map(|&dt| {
            let run = |variant| -> Result<(Vec<f64>, usize)> {
                let p = SchemeParams::new(base.eta, base.epsilon, base.sigma, dt, base.nx, variant)?;
                let solver = Ugks::new(grid.clone(), op.clone(), p)?.with_execution(execution);
                let out = solver.run(initial.clone(), &[t_final])?;
                Ok((out.final_state.rho, out.steps))
            };
            let (explicit, steps) = run(Variant::ExplicitDiffusion)?;
            let (implicit, _) = run(Variant::ImplicitDiffusion)?;
            Ok(VariantRow {
                dt,
                steps,
                difference: Norms::of_difference(&explicit, &implicit),
            })
        })
        .collect()
}
