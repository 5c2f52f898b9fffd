//! Snapshot CSV files and error norms.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::oracles::{self, InitialData};
use crate::scenario::{initialize_state, Reference, Scenario};
use crate::scheme::{KineticState, Ugks};
use crate::velocity::{CollisionOperator, VelocityGrid};

/// Discrete norms with the `1/N_x` cell measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl Norms {
    pub fn of(values: &[f64]) -> Self {
        let w = 1.0 / values.len().max(1) as f64;
        Norms {
            l1: w * values.iter().map(|v| v.abs()).sum::<f64>(),
            l2: (w * values.iter().map(|v| v * v).sum::<f64>()).sqrt(),
            linf: values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn of_difference(a: &[f64], b: &[f64]) -> Self {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        Norms::of(&d)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotReport {
    pub requested_time: f64,
    pub time: f64,
    pub steps: usize,
    pub csv: PathBuf,
    /// Norms of `ρ − ρ_ref` when a reference is configured.
    pub error: Option<Norms>,
    /// `‖ρ − ρ_ref‖₂ / ‖ρ_ref‖₂`.
    pub relative_l2: Option<f64>,
    /// `(Σρ − Σρ⁰)/Σρ⁰`.
    pub mass_drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub scenario: String,
    pub operator: String,
    pub variant: String,
    pub dt: f64,
    pub lambda_star: f64,
    pub snapshots: Vec<SnapshotReport>,
    pub seconds_per_step: f64,
}

/// Contents of a snapshot CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotCsv {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_ref: Option<Vec<f64>>,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Parse {
            path: path.to_owned(),
            line: 0,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Writes `x,rho[,rho_ref,abs_err]` with 17 significant digits.
pub fn write_snapshot_csv(path: &Path, data: &SnapshotCsv) -> Result<()> {
    if data.x.len() != data.rho.len()
        || data.rho_ref.as_ref().is_some_and(|r| r.len() != data.rho.len())
    {
        return Err(Error::InvalidInput("snapshot columns differ in length".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: &[&str] = if data.rho_ref.is_some() {
        &["x", "rho", "rho_ref", "abs_err"]
    } else {
        &["x", "rho"]
    };
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for i in 0..data.x.len() {
        let mut rec = vec![fmt(data.x[i]), fmt(data.rho[i])];
        if let Some(r) = &data.rho_ref {
            rec.push(fmt(r[i]));
            rec.push(fmt((data.rho[i] - r[i]).abs()));
        }
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_snapshot_csv(path: &Path) -> Result<SnapshotCsv> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let with_ref = match header.iter().collect::<Vec<_>>().as_slice() {
        ["x", "rho"] => false,
        ["x", "rho", "rho_ref", "abs_err"] => true,
        other => {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: 1,
                column: 1,
                message: format!("unexpected header {other:?}"),
            })
        }
    };
    let mut out = SnapshotCsv {
        x: Vec::new(),
        rho: Vec::new(),
        rho_ref: with_ref.then(Vec::new),
    };
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let field = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse {
                    path: path.to_owned(),
                    line: k + 2,
                    column: c + 1,
                    message: "expected a number".into(),
                })
        };
        out.x.push(field(0)?);
        out.rho.push(field(1)?);
        if let Some(r) = out.rho_ref.as_mut() {
            r.push(field(2)?);
        }
    }
    Ok(out)
}

/// `<name>_<operator>_t<time>.csv`.
pub fn snapshot_file_name(scenario: &Scenario, time: f64) -> String {
    format!("{}_{}_t{}.csv", scenario.name, scenario.operator.tag(), time)
}

/// Reference density at time `t` on the cell centres, if one is configured.
pub fn reference_density(
    scenario: &Scenario,
    grid: &VelocityGrid,
    op: &CollisionOperator,
    initial: &KineticState,
    t: f64,
) -> Result<Option<Vec<f64>>> {
    let init = InitialData::new();
    let xs = scenario.cell_centres();
    let out = match scenario.reference {
        Reference::None => None,
        Reference::ExactTransport => Some(
            xs.iter()
                .map(|&x| {
                    grid.velocities()
                        .iter()
                        .map(|&v| oracles::exact_transport(&init, t, x, v, scenario.eta))
                        .sum::<f64>()
                        / grid.len() as f64
                })
                .collect(),
        ),
        Reference::ExactDiffusion => {
            if t == 0.0 {
                Some(xs.iter().map(|&x| init.rho0(x)).collect())
            } else {
                let kappa = 1.0 / (3.0 * scenario.sigma * op.lambda_star.abs());
                Some(
                    xs.iter()
                        .map(|&x| oracles::exact_diffusion_density(&init, t, x, kappa))
                        .collect::<Result<_>>()?,
                )
            }
        }
        Reference::LimitFd => {
            let dt = scenario.time_step();
            let kappa = oracles::discrete_diffusion_coefficient(grid, scenario.sigma, op.lambda_star);
            let steps = (t / dt).round() as usize;
            let mut rho = initial.rho.clone();
            for _ in 0..steps {
                rho = oracles::limit_diffusion_step(&rho, dt, scenario.dx(), kappa);
            }
            Some(rho)
        }
    };
    Ok(out)
}

/// Runs a scenario, writes one CSV per snapshot into its output directory and
/// returns the error report.
pub fn run_and_report(scenario: &Scenario, exec: Execution) -> Result<ErrorReport> {
    scenario.validate()?;
    let grid = scenario.grid()?;
    let op = scenario.operator.build(&grid)?;
    let params = scenario.scheme_params()?;
    let solver = Ugks::new(grid.clone(), op.clone(), params)?.with_execution(exec);
    let initial = initialize_state(scenario)?;
    let m0 = initial.total_density();
    let out = solver.run(initial.clone(), &scenario.t_snapshots)?;

    std::fs::create_dir_all(&scenario.output_dir)
        .map_err(|e| Error::io(&scenario.output_dir, e))?;
    let xs = scenario.cell_centres();
    let mut snapshots = Vec::with_capacity(out.snapshots.len());
    for snap in &out.snapshots {
        let reference = reference_density(scenario, &grid, &op, &initial, snap.state.t)?;
        let (error, relative_l2) = match &reference {
            Some(r) => {
                let n = Norms::of_difference(&snap.state.rho, r);
                (Some(n), Some(n.l2 / Norms::of(r).l2))
            }
            None => (None, None),
        };
        let csv = scenario
            .output_dir
            .join(snapshot_file_name(scenario, snap.requested_time));
        write_snapshot_csv(
            &csv,
            &SnapshotCsv {
                x: xs.clone(),
                rho: snap.state.rho.clone(),
                rho_ref: reference,
            },
        )?;
        snapshots.push(SnapshotReport {
            requested_time: snap.requested_time,
            time: snap.state.t,
            steps: snap.steps,
            csv,
            error,
            relative_l2,
            mass_drift: (snap.total_density - m0) / m0,
        });
    }
    Ok(ErrorReport {
        scenario: scenario.name.clone(),
        operator: scenario.operator.tag().to_owned(),
        variant: scenario.variant.to_string(),
        dt: params.dt,
        lambda_star: op.lambda_star,
        snapshots,
        seconds_per_step: per_step(out.elapsed, out.steps),
    })
}

fn per_step(elapsed: Duration, steps: usize) -> f64 {
    if steps == 0 {
        0.0
    } else {
        elapsed.as_secs_f64() / steps as f64
    }
}
