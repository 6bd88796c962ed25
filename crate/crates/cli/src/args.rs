use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qps_core::{Mode, Preset, RyConstruction};

#[derive(Debug, Parser)]
#[command(name = "qps", version, about = "Amplitude-based quantum Poisson solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the built-in n = 2 example and compare with the expected vector.
    Demo(DemoArgs),
    /// Simulate the solver on one right-hand side.
    Solve(SolveArgs),
    /// Run the self-check suites.
    Verify(VerifyArgs),
    /// Tabulate the sine-product identities.
    Identities(IdentitiesArgs),
    /// Count qubits, gates and depth without simulating.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Human,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Serial,
    Parallel,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Serial => Mode::Serial,
            ModeArg::Parallel => Mode::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RyArg {
    Semantic,
    Bitwise,
}

impl From<RyArg> for RyConstruction {
    fn from(r: RyArg) -> Self {
        match r {
            RyArg::Semantic => RyConstruction::Semantic,
            RyArg::Bitwise => RyConstruction::Bitwise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Sin,
    Const,
    Ramp,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Sin => Preset::Sin,
            PresetArg::Const => Preset::Const,
            PresetArg::Ramp => Preset::Ramp,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CircuitArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Serial)]
    pub mode: ModeArg,
    /// Rotation construction for serial mode.
    #[arg(long, value_enum, default_value_t = RyArg::Bitwise)]
    pub ry: RyArg,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Human)]
    pub output: OutputFormat,
}

#[derive(Debug, Clone, Args)]
#[command(group = clap::ArgGroup::new("source").args(["preset", "file", "b", "config"]))]
pub struct SolveArgs {
    /// Grid exponent: the grid has 2^n cells and 2^n - 1 unknowns.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// CSV file with one value per line.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Re-run the configuration echoed by an earlier `--output json` run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for a random right-hand side when no source is given.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Human)]
    pub output: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 4)]
    pub n_max: usize,
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random right-hand sides per n.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// Negate one rotation angle in every circuit under test.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Human)]
    pub output: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct IdentitiesArgs {
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Human)]
    pub output: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
}
