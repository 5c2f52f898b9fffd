use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ugks::harness::{ap_sweep, compare_variants, lambda_star_report};
use ugks::report::run_and_report;
use ugks::velocity::{build_grid, entropy_dissipation, pseudo_inverse_apply, validate_operator};
use ugks::{load_scenario, Error, Execution, OperatorKind, Result, Scenario, Variant};

#[derive(Parser)]
#[command(name = "ugks", version, about = "Asymptotic-preserving kinetic solver")]
struct Cli {
    /// Run cell loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write snapshot CSVs.
    Run(RunArgs),
    /// Check the structural assumptions on a collision operator.
    ValidateOperator(ValidateArgs),
    /// Tabulate the pseudo-eigenvalue against the velocity count.
    LambdaStar(LambdaArgs),
    /// Sweep the Knudsen number and compare against the limit solutions.
    ApSweep(SweepArgs),
    /// Compare the explicit and implicit diffusion variants.
    CompareVariants(CompareArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// transport, intermediate or diffusive.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// bgk, fp or sc.
    #[arg(long)]
    operator: Option<OperatorKind>,
    /// explicit or implicit.
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self, default: &str) -> Result<Scenario> {
        let mut s = match (&self.preset, &self.config) {
            (_, Some(path)) => load_scenario(&path.to_string_lossy())?,
            (Some(name), None) => Scenario::preset(name)?,
            (None, None) => Scenario::preset(default)?,
        };
        if let Some(op) = self.operator {
            s.operator = op;
        }
        if let Some(v) = self.variant {
            s.variant = v;
        }
        if let Some(dir) = &self.out_dir {
            s.output_dir = dir.clone();
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value = "bgk", conflicts_with = "matrix")]
    operator: OperatorKind,
    #[arg(long, default_value_t = 100)]
    nv: usize,
    /// JSON file holding the matrix as an array of rows.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Seed for the random probe vectors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LambdaArgs {
    #[arg(long, default_value = "sc")]
    operator: OperatorKind,
    #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200, 400])]
    nv: Vec<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "bgk")]
    operator: OperatorKind,
    #[arg(long, value_delimiter = ',', default_values_t = [1e8, 1.0, 1e-2, 1e-3, 1e-4, 1e-5])]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    t: f64,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-5, 5e-6])]
    dt: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    t: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = match cli.command {
        Command::Run(a) => run(a, exec),
        Command::ValidateOperator(a) => validate(a),
        Command::LambdaStar(a) => lambda_star(a),
        Command::ApSweep(a) => sweep(a, exec),
        Command::CompareVariants(a) => compare(a, exec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::InvalidInput(e.to_string())
}

fn run(args: RunArgs, exec: Execution) -> Result<()> {
    let scenario = args.scenario.load("intermediate")?;
    let report = run_and_report(&scenario, exec)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(json_error)?);
        return Ok(());
    }
    println!(
        "scenario {} operator {} variant {} dt {:e} lambda* {:.6}",
        report.scenario, report.operator, report.variant, report.dt, report.lambda_star
    );
    println!("{:>8} {:>8} {:>12} {:>12} {:>12} {:>12}  file", "t", "steps", "L1", "L2", "Linf", "mass drift");
    for s in &report.snapshots {
        let (l1, l2, li) = s
            .error
            .map(|n| (format!("{:.4e}", n.l1), format!("{:.4e}", n.l2), format!("{:.4e}", n.linf)))
            .unwrap_or_else(|| ("-".into(), "-".into(), "-".into()));
        println!(
            "{:>8} {:>8} {:>12} {:>12} {:>12} {:>12.3e}  {}",
            s.requested_time,
            s.steps,
            l1,
            l2,
            li,
            s.mass_drift,
            s.csv.display()
        );
    }
    println!("{:.3e} s per step", report.seconds_per_step);
    Ok(())
}

fn read_matrix(path: &PathBuf) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput(format!(
            "{}: matrix must be square and nonempty",
            path.display()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn validate(args: ValidateArgs) -> Result<()> {
    let (label, dense, op) = match &args.matrix {
        Some(path) => (path.display().to_string(), read_matrix(path)?, None),
        None => {
            if !args.nv.is_multiple_of(2) {
                return Err(Error::InvalidConfig(format!("--nv must be even, got {}", args.nv)));
            }
            let op = args.operator.build(&build_grid(args.nv / 2)?)?;
            (format!("{} nv={}", args.operator, args.nv), op.to_dense(), Some(op))
        }
    };
    let report = validate_operator(&dense)?;
    println!("operator {label}");
    let mut ok = report.passed();
    for (name, pass) in report.checks() {
        println!("  {:<24} {}", name, if pass { "PASS" } else { "FAIL" });
    }
    if let Some(op) = op {
        println!("  lambda*                  {:.12}", op.lambda_star);
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let n = op.size();
        let mut worst_roundtrip = 0.0f64;
        let mut worst_entropy = f64::MIN;
        for _ in 0..20 {
            let mut phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let m = phi.iter().sum::<f64>() / n as f64;
            phi.iter_mut().for_each(|p| *p -= m);
            let psi = pseudo_inverse_apply(&op, &phi)?;
            let mut back = vec![0.0; n];
            op.apply(&psi, &mut back);
            let norm = phi.iter().map(|p| p * p).sum::<f64>().sqrt();
            let err = back.iter().zip(&phi).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            worst_roundtrip = worst_roundtrip.max(err / norm);
            let f: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
            let fnorm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            worst_entropy = worst_entropy.max(entropy_dissipation(&op, &f)? / fnorm);
        }
        let rt = worst_roundtrip <= 1e-9;
        let en = worst_entropy <= 1e-12;
        println!("  {:<24} {} ({worst_roundtrip:.2e})", "pseudo-inverse probe", if rt { "PASS" } else { "FAIL" });
        println!("  {:<24} {} ({worst_entropy:.2e})", "entropy probe", if en { "PASS" } else { "FAIL" });
        ok &= rt && en;
    }
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidOperator(format!("{label} fails validation")))
    }
}

fn lambda_star(args: LambdaArgs) -> Result<()> {
    println!("{:>6} {:>18} {:>10}", "nv", "lambda*", "limit");
    for row in lambda_star_report(args.operator, &args.nv)? {
        println!("{:>6} {:>18.12} {:>10}", row.nv, row.lambda_star, row.continuum);
    }
    Ok(())
}

fn sweep(args: SweepArgs, exec: Execution) -> Result<()> {
    let rows = ap_sweep(args.operator, &args.eps, args.t, exec)?;
    println!(
        "{:>10} {:>10} {:>10} {:>7} {:>16} {:>12} {:>12} {:>12}",
        "epsilon", "eta", "dt", "steps", "reference", "L2 rel", "Linf", "upwind Linf"
    );
    for r in rows {
        let reference = serde_json::to_value(r.reference).map_err(json_error)?;
        println!(
            "{:>10.1e} {:>10.1e} {:>10.3e} {:>7} {:>16} {:>12.4e} {:>12.4e} {:>12}",
            r.epsilon,
            r.eta,
            r.dt,
            r.steps,
            reference.as_str().unwrap_or("?"),
            r.relative_l2,
            r.error.linf,
            r.upwind_error
                .map(|n| format!("{:.4e}", n.linf))
                .unwrap_or_else(|| "-".into())
        );
    }
    Ok(())
}

fn compare(args: CompareArgs, exec: Execution) -> Result<()> {
    let scenario = args.scenario.load("diffusive")?;
    let rows = compare_variants(&scenario, &args.dt, args.t, exec)?;
    println!("{:>10} {:>8} {:>12} {:>12} {:>8}", "dt", "steps", "L2", "Linf", "ratio");
    let mut prev: Option<f64> = None;
    for r in rows {
        let ratio = prev
            .map(|p| format!("{:.3}", p / r.difference.linf))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:>10.3e} {:>8} {:>12.4e} {:>12.4e} {:>8}",
            r.dt, r.steps, r.difference.l2, r.difference.linf, ratio
        );
        prev = Some(r.difference.linf);
    }
    Ok(())
}
