mod args;
mod format;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use qps_core::identities::{odd_layer_residual, sine_formula_residual, MAX_IDENTITY_EXPONENT};
use qps_core::poisson::random_rhs;
use qps_core::qps::MAX_BUILD_EXPONENT;
use qps_core::verify::{max_inversion_error, run_verification, VerifyOptions, MAX_VERIFY_EXPONENT};
use qps_core::{
    build_inversion, build_qps, count_resources, solve, CostModel, Mode, Preset, QpsConfig, QpsError, QpsLayout,
    QpsSolution, ResourceReport, RyConstruction,
};
use serde::{Deserialize, Serialize};

use args::{Cli, Command, DemoArgs, IdentitiesArgs, OutputFormat, ReportArgs, SolveArgs, VerifyArgs};
use format::{sig6, sig6_list};

const COST_MODEL_ENV: &str = "QPS_COST_MODEL";

const DEMO_RHS: [f64; 3] = [std::f64::consts::FRAC_1_SQRT_2, 0.5, 0.5];
const DEMO_EXPECTED: [f64; 3] = [0.552987, 0.674065, 0.489736];
const DEMO_TOLERANCE: f64 = 1e-6;

#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<QpsError> for CliError {
    fn from(e: QpsError) -> Self {
        match e {
            QpsError::ZeroRightHandSide => CliError::Config("zero right-hand side".into()),
            other => CliError::Config(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Demo(a) => cmd_demo(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Identities(a) => cmd_identities(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qps: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn cost_model() -> CliResult<CostModel> {
    let Some(path) = std::env::var_os(COST_MODEL_ENV) else {
        return Ok(CostModel::default());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("{COST_MODEL_ENV}={}: {e}", Path::new(&path).display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{COST_MODEL_ENV}: {e}")))
}

fn check_sim_range(config: &QpsConfig) -> CliResult<()> {
    let range = match config.mode {
        Mode::Serial => 2..=MAX_VERIFY_EXPONENT,
        Mode::Parallel => 3..=5,
    };
    if !range.contains(&config.n) {
        return Err(CliError::Config(format!(
            "{} simulation needs n in {}..={}, got {}",
            config.mode,
            range.start(),
            range.end(),
            config.n
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct DemoRecord {
    n: usize,
    solution: Vec<f64>,
    reference: Vec<f64>,
    max_abs_diff: f64,
    fidelity: f64,
    success_probability: f64,
    resources: ResourceReport,
}

fn cmd_demo(a: &DemoArgs) -> CliResult<()> {
    let config = QpsConfig::new(2)
        .with_mode(a.circuit.mode.into())
        .with_ry(a.circuit.ry.into())
        .with_cost_model(cost_model()?);
    config.validate()?;
    let s = solve(&config, &DEMO_RHS)?;
    let max_abs_diff = s
        .solution
        .iter()
        .zip(DEMO_EXPECTED)
        .map(|(x, e)| (x - e).abs())
        .fold(0.0, f64::max);
    let record = DemoRecord {
        n: 2,
        solution: s.solution,
        reference: DEMO_EXPECTED.to_vec(),
        max_abs_diff,
        fidelity: s.fidelity,
        success_probability: s.success_probability,
        resources: s.resources,
    };
    match a.output {
        OutputFormat::Json => print_json(&record)?,
        OutputFormat::Csv => {
            println!("index,solution,reference");
            for (i, (x, r)) in record.solution.iter().zip(&record.reference).enumerate() {
                println!("{},{x},{r}", i + 1);
            }
        }
        OutputFormat::Human => {
            println!("b            = [{}]", sig6_list(&DEMO_RHS));
            println!("solution     = [{}]", sig6_list(&record.solution));
            println!("expected     = [{}]", sig6_list(&record.reference));
            println!("max |diff|   = {}", sig6(record.max_abs_diff));
            println!("fidelity     = {}", sig6(record.fidelity));
            println!("P(Anc = 1)   = {}", sig6(record.success_probability));
            println!(
                "resources    = {} qubits, {} gates, depth {}",
                record.resources.qubits, record.resources.elementary_gates, record.resources.depth_serial
            );
        }
    }
    if max_abs_diff > DEMO_TOLERANCE {
        return Err(CliError::Verification(format!(
            "demo solution differs by {max_abs_diff:e} (tolerance {DEMO_TOLERANCE:e})"
        )));
    }
    Ok(())
}

/// Everything needed to re-run a solve; echoed in JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SolveEcho {
    n: usize,
    mode: Mode,
    ry_construction: RyConstruction,
    cost_model: CostModel,
    source: String,
    b: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct SolveRecord<'a> {
    config: &'a SolveEcho,
    #[serde(flatten)]
    result: &'a QpsSolution,
}

fn parse_values(text: &str, separator: char, what: &str) -> CliResult<Vec<f64>> {
    text.split(separator)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, s)| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("{what}: entry {} ({s:?}) is not a number", i + 1)))
        })
        .collect()
}

fn load_echo(path: &Path) -> CliResult<SolveEcho> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let echo = value.get("config").cloned().unwrap_or(value);
    serde_json::from_value(echo).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn solve_echo(a: &SolveArgs) -> CliResult<SolveEcho> {
    if let Some(path) = &a.config {
        return load_echo(path);
    }
    let dim = (1usize << a.n.min(MAX_BUILD_EXPONENT)) - 1;
    let (source, b) = if let Some(p) = a.preset {
        let preset = Preset::from(p);
        (format!("preset:{preset}"), preset.samples(a.n.min(MAX_BUILD_EXPONENT)))
    } else if let Some(path) = &a.file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let b = parse_values(&text, '\n', &path.display().to_string())?;
        (format!("file:{}", path.display()), b)
    } else if let Some(list) = &a.b {
        ("inline".to_string(), parse_values(list, ',', "--b")?)
    } else {
        (
            format!("random:{}", a.seed),
            random_rhs(a.n.min(MAX_BUILD_EXPONENT), a.seed),
        )
    };
    if b.len() != dim {
        return Err(CliError::Config(format!(
            "right-hand side has {} values, n = {} needs {dim}",
            b.len(),
            a.n
        )));
    }
    Ok(SolveEcho {
        n: a.n,
        mode: a.circuit.mode.into(),
        ry_construction: a.circuit.ry.into(),
        cost_model: cost_model()?,
        source,
        b,
    })
}

fn cmd_solve(a: &SolveArgs) -> CliResult<()> {
    let echo = solve_echo(a)?;
    let config = QpsConfig {
        n: echo.n,
        mode: echo.mode,
        ry_construction: echo.ry_construction,
        cost_model: echo.cost_model,
    };
    config.validate()?;
    check_sim_range(&config)?;
    let s = solve(&config, &echo.b)?;
    match a.output {
        OutputFormat::Json => print_json(&SolveRecord {
            config: &echo,
            result: &s,
        })?,
        OutputFormat::Csv => {
            for x in &s.solution {
                println!("{x}");
            }
        }
        OutputFormat::Human => {
            println!(
                "n = {}, {} mode, {} rotations, source {}",
                echo.n, echo.mode, echo.ry_construction, echo.source
            );
            println!("{:>5}  {:>12}  {:>12}", "i", "quantum", "classical");
            for (i, (q, c)) in s.solution.iter().zip(&s.classical_reference).enumerate() {
                println!("{:>5}  {:>12}  {:>12}", i + 1, sig6(*q), sig6(*c));
            }
            println!("fidelity   = {}", sig6(s.fidelity));
            println!("P(Anc = 1) = {}", sig6(s.success_probability));
            println!(
                "resources  = {} qubits, {} gates, depth {}",
                s.resources.qubits, s.resources.elementary_gates, s.resources.depth_serial
            );
        }
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> CliResult<()> {
    let opts = VerifyOptions {
        n_min: a.n_min,
        n_max: a.n_max,
        seed: a.seed,
        samples: a.samples,
        inject_fault: a.inject_fault,
    };
    let report = run_verification(&opts)?;
    match a.output {
        OutputFormat::Json => print_json(&report)?,
        OutputFormat::Csv => {
            println!("check,n,passed,worst,tolerance");
            for c in &report.checks {
                println!("{},{},{},{:e},{:e}", c.check, c.n, c.passed, c.worst, c.tolerance);
            }
        }
        OutputFormat::Human => {
            for c in &report.checks {
                println!("{c}");
            }
        }
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Verification(format!(
            "{failed} of {} checks",
            report.checks.len()
        )));
    }
    Ok(())
}

const IDENTITY_TOLERANCE: f64 = 1e-9;
const INVERSION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Serialize)]
struct IdentityRow {
    n: usize,
    sine_formula_residual: f64,
    odd_layer_residual: f64,
    /// Absent for n = 1, which has no eigenvalue inversion.
    inversion_max_relative_error: Option<f64>,
    passed: bool,
}

fn cmd_identities(a: &IdentitiesArgs) -> CliResult<()> {
    if !(1..=MAX_IDENTITY_EXPONENT).contains(&a.n_max) {
        return Err(CliError::Config(format!(
            "--n-max must be in 1..={MAX_IDENTITY_EXPONENT}"
        )));
    }
    let rows = (1..=a.n_max)
        .map(|n| {
            let sine = sine_formula_residual(n)?;
            let odd = odd_layer_residual(n)?;
            let inv = if n >= 2 { Some(max_inversion_error(n)?) } else { None };
            Ok(IdentityRow {
                n,
                sine_formula_residual: sine,
                odd_layer_residual: odd,
                inversion_max_relative_error: inv,
                passed: sine <= IDENTITY_TOLERANCE
                    && odd <= IDENTITY_TOLERANCE
                    && inv.is_none_or(|e| e <= INVERSION_TOLERANCE),
            })
        })
        .collect::<Result<Vec<_>, QpsError>>()?;
    match a.output {
        OutputFormat::Json => print_json(&rows)?,
        OutputFormat::Csv => {
            println!("n,sine_formula_residual,odd_layer_residual,inversion_max_relative_error,passed");
            for r in &rows {
                let inv = r
                    .inversion_max_relative_error
                    .map_or(String::new(), |e| format!("{e:e}"));
                println!(
                    "{},{:e},{:e},{inv},{}",
                    r.n, r.sine_formula_residual, r.odd_layer_residual, r.passed
                );
            }
        }
        OutputFormat::Human => {
            println!("{:>3}  {:>12}  {:>12}  {:>12}", "n", "sine", "odd-layer", "inversion");
            for r in &rows {
                let inv = r.inversion_max_relative_error.map_or("-".to_string(), sig6);
                println!(
                    "{:>3}  {:>12}  {:>12}  {:>12}{}",
                    r.n,
                    sig6(r.sine_formula_residual),
                    sig6(r.odd_layer_residual),
                    inv,
                    if r.passed { "" } else { "  FAIL" }
                );
            }
        }
    }
    if rows.iter().any(|r| !r.passed) {
        return Err(CliError::Verification("identity residual above tolerance".into()));
    }
    Ok(())
}

/// Closed-form scaling estimates printed next to the measured counts.
#[derive(Debug, Serialize)]
struct Estimates {
    qubits_3n: usize,
    qubits_3n_plus_1: usize,
    gates_five_thirds_n_cubed: f64,
    depth_ten_n_squared: f64,
}

#[derive(Debug, Serialize)]
struct ReportRecord {
    n: usize,
    mode: Mode,
    ry_construction: RyConstruction,
    #[serde(flatten)]
    total: ResourceReport,
    inversion: ResourceReport,
    estimates: Estimates,
    /// Reference inversion-stage depth at n = 15 and whether the measured
    /// inversion depth is within a factor of two of it.
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_depth: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    within_factor_two: Option<bool>,
}

fn cmd_report(a: &ReportArgs) -> CliResult<()> {
    let config = QpsConfig::new(a.n)
        .with_mode(a.circuit.mode.into())
        .with_ry(a.circuit.ry.into())
        .with_cost_model(cost_model()?);
    if a.n > 15 {
        return Err(CliError::Config(format!("report supports n up to 15, got {}", a.n)));
    }
    config.validate()?;
    let layout = QpsLayout::new(config.n, config.mode)?;
    let total = count_resources(&build_qps(&config)?, &config.cost_model);
    let inversion = count_resources(&build_inversion(&config, &layout)?, &config.cost_model);
    let n = a.n;
    let reference_depth = (n == 15).then_some(match config.mode {
        Mode::Serial => 8000,
        Mode::Parallel => 1800,
    });
    let within = reference_depth.map(|r| {
        let d = inversion.depth_serial as f64;
        d <= 2.0 * r as f64 && d >= r as f64 / 2.0
    });
    let record = ReportRecord {
        n,
        mode: config.mode,
        ry_construction: config.ry_construction,
        total,
        inversion,
        estimates: Estimates {
            qubits_3n: 3 * n,
            qubits_3n_plus_1: 3 * n + 1,
            gates_five_thirds_n_cubed: 5.0 / 3.0 * (n as f64).powi(3),
            depth_ten_n_squared: 10.0 * (n as f64).powi(2),
        },
        reference_depth,
        within_factor_two: within,
    };
    match a.output {
        OutputFormat::Json => print_json(&record)?,
        OutputFormat::Csv => {
            println!("stage,qubits,ir_gates,elementary_gates,depth_serial,depth_native");
            for (stage, r) in [("total", &record.total), ("inversion", &record.inversion)] {
                println!(
                    "{stage},{},{},{},{},{}",
                    r.qubits, r.ir_gates, r.elementary_gates, r.depth_serial, r.depth_native
                );
            }
        }
        OutputFormat::Human => {
            let e = &record.estimates;
            println!("n = {n}, {} mode", record.mode);
            println!(
                "qubits     {:>8}   (3n = {}, 3n+1 = {})",
                record.total.qubits, e.qubits_3n, e.qubits_3n_plus_1
            );
            println!(
                "gates      {:>8}   (5/3 n^3 = {}); inversion {}",
                record.total.elementary_gates,
                sig6(e.gates_five_thirds_n_cubed),
                record.inversion.elementary_gates
            );
            println!(
                "depth      {:>8}   (10 n^2 = {}); inversion {}",
                record.total.depth_serial,
                sig6(e.depth_ten_n_squared),
                record.inversion.depth_serial
            );
            println!("ir depth   {:>8}", record.total.depth_native);
            if let (Some(r), Some(ok)) = (record.reference_depth, record.within_factor_two) {
                println!("reference  {r:>8}   inversion depth within factor 2: {ok}");
            }
        }
    }
    Ok(())
}
