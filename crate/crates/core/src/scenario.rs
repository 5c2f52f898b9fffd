//! Run configuration: regime presets and JSON overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::InitialData;
use crate::scheme::{KineticState, SchemeParams, Variant};
use crate::velocity::{build_grid, OperatorKind, VelocityGrid};

/// Preset names accepted by [`load_scenario`].
pub const PRESETS: [&str; 3] = ["transport", "intermediate", "diffusive"];

/// Time step: fixed, or `C₁Δx² + C₂ηΔx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeStep {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoTag {
    #[serde(rename = "auto")]
    Auto,
}

impl TimeStep {
    pub const AUTO: TimeStep = TimeStep::Auto(AutoTag::Auto);
}

/// Reference solution compared against in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Reference {
    #[default]
    #[serde(rename = "none")]
    None,
    /// Velocity average of the free-transport solution.
    #[serde(rename = "exact-transport")]
    ExactTransport,
    /// Periodic heat kernel with `κ = 1/(3σ|λ⋆|)`.
    #[serde(rename = "exact-diffusion")]
    ExactDiffusion,
    /// Three-point limit scheme with `κ = ⟨V,V⟩/(2Nσ|λ⋆|)`.
    #[serde(rename = "limit-fd")]
    LimitFd,
}

impl std::str::FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| {
            Error::InvalidConfig(format!(
                "unknown reference `{s}` (expected none, exact-transport, exact-diffusion or limit-fd)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub operator: OperatorKind,
    pub eta: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub nx: usize,
    pub nv: usize,
    pub dt: TimeStep,
    pub cfl_c1: f64,
    pub cfl_c2: f64,
    pub t_snapshots: Vec<f64>,
    pub variant: Variant,
    pub output_dir: PathBuf,
    pub reference: Reference,
}

/// Optional fields of a JSON scenario file, laid over a preset.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    preset: Option<String>,
    name: Option<String>,
    operator: Option<OperatorKind>,
    eta: Option<f64>,
    epsilon: Option<f64>,
    sigma: Option<f64>,
    nx: Option<usize>,
    nv: Option<usize>,
    dt: Option<TimeStep>,
    cfl_c1: Option<f64>,
    cfl_c2: Option<f64>,
    t_snapshots: Option<Vec<f64>>,
    variant: Option<Variant>,
    output_dir: Option<PathBuf>,
    reference: Option<Reference>,
}

impl Scenario {
    pub fn preset(name: &str) -> Result<Self> {
        let (eta, epsilon, snapshots, reference) = match name {
            "transport" => (1.0, 100.0, vec![0.05, 0.1], Reference::ExactTransport),
            "intermediate" => (0.1, 0.1, vec![0.05, 0.1], Reference::None),
            "diffusive" => (1e-4, 1e-4, vec![0.05, 0.075, 0.1], Reference::ExactDiffusion),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown preset `{other}` (expected one of {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(Scenario {
            name: name.to_owned(),
            operator: OperatorKind::Bgk,
            eta,
            epsilon,
            sigma: 1.0,
            nx: 100,
            nv: 100,
            dt: TimeStep::Fixed(1e-5),
            cfl_c1: 0.5,
            cfl_c2: 0.5,
            t_snapshots: snapshots,
            variant: Variant::ExplicitDiffusion,
            output_dir: PathBuf::from("out"),
            reference,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("eta", self.eta),
            ("epsilon", self.epsilon),
            ("sigma", self.sigma),
            ("cfl_c1", self.cfl_c1),
            ("cfl_c2", self.cfl_c2),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "field `{field}` must be positive and finite, got {value}"
                )));
            }
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "field `dt` must be positive, got {dt}"
                )));
            }
        }
        if self.nx == 0 {
            return Err(Error::InvalidConfig("field `nx` must be positive".into()));
        }
        if self.nv == 0 || !self.nv.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "field `nv` must be positive and even, got {}",
                self.nv
            )));
        }
        if self.t_snapshots.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidConfig(
                "field `t_snapshots` must hold nonnegative times".into(),
            ));
        }
        if self.t_snapshots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig(
                "field `t_snapshots` must be sorted ascending".into(),
            ));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::InvalidConfig(format!(
                "field `name` must be a plain file-name stem, got `{}`",
                self.name
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    /// The fixed time step, or `C₁Δx² + C₂ηΔx` for `"auto"`.
    pub fn time_step(&self) -> f64 {
        match self.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto(_) => {
                let dx = self.dx();
                self.cfl_c1 * dx * dx + self.cfl_c2 * self.eta * dx
            }
        }
    }

    pub fn grid(&self) -> Result<VelocityGrid> {
        build_grid(self.nv / 2)
    }

    pub fn scheme_params(&self) -> Result<SchemeParams> {
        SchemeParams::new(
            self.eta,
            self.epsilon,
            self.sigma,
            self.time_step(),
            self.nx,
            self.variant,
        )
    }

    /// Cell centres `(i + ½)Δx`.
    pub fn cell_centres(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.nx).map(|i| (i as f64 + 0.5) * dx).collect()
    }

    fn apply(&mut self, file: ScenarioFile) {
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = file.$f { self.$f = v; })* };
        }
        take!(name, operator, eta, epsilon, sigma, nx, nv, dt, cfl_c1, cfl_c2, t_snapshots, variant, output_dir, reference);
    }
}

fn parse_error(path: &Path, err: serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

/// Parses a JSON scenario. Fields left out come from `"preset"` when given,
/// otherwise from the intermediate preset.
pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| parse_error(path, e))?;
    let base = file.preset.clone();
    let mut scenario = match &base {
        Some(name) => Scenario::preset(name)?,
        None => {
            let mut s = Scenario::preset("intermediate")?;
            s.name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("scenario")
                .to_owned();
            s
        }
    };
    scenario.apply(file);
    scenario.validate()?;
    Ok(scenario)
}

/// Resolves a preset name, or reads a JSON file when `spec` is not one.
pub fn load_scenario(spec: &str) -> Result<Scenario> {
    if PRESETS.contains(&spec) {
        return Scenario::preset(spec);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::InvalidConfig(format!(
            "`{spec}` is neither a preset ({}) nor an existing file",
            PRESETS.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, path)
}

/// Samples `f₀` at cell centres and grid velocities.
pub fn initialize_state(scenario: &Scenario) -> Result<KineticState> {
    scenario.validate()?;
    let grid = scenario.grid()?;
    let init = InitialData::new();
    let mut f = Vec::with_capacity(scenario.nx * scenario.nv);
    for x in scenario.cell_centres() {
        f.extend(grid.velocities().iter().map(|&v| init.f0(x, v)));
    }
    KineticState::from_distribution(f, scenario.nv, 0.0)
}
