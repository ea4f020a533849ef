use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trimer_core::exec::{threads_from_env, Execution};
use trimer_core::model::InputState;
use trimer_core::scan::{
    material_scan, phase_diagram, run_grid, run_point, threshold_temperatures, AxisName, AxisSpec, ContourTarget, Mode,
    Observable, ScanSpec, ScanTable, ThresholdSearch,
};
use trimer_core::verify::{self, Level, VerifyOptions};
use trimer_core::Error;

const EXIT_INVALID: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const EXIT_IO: u8 = 4;

/// Teleportation through the Heisenberg dimers of the spin-1/2
/// Ising-Heisenberg trimer chain.
#[derive(Parser)]
#[command(name = "trimer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every observable at one parameter point.
    Point(Common),
    /// 1D or 2D grid scan, or the 2/3 threshold contour with --contour.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Trace the temperature where this fidelity crosses 2/3.
        #[arg(long, value_enum)]
        contour: Option<Contour>,
    },
    /// Scan in Kelvin and Tesla for a material preset.
    Material(Common),
    /// Ground-state phases over J1/J and h.
    PhaseDiagram(Common),
    /// Run the oracle suite.
    Verify {
        #[arg(value_enum, default_value_t = VerifyLevel::Quick)]
        level: VerifyLevel,
        #[arg(long = "mu-b-over-kb", hide = true)]
        mu_b_over_k_b: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Contour {
    #[value(name = "F")]
    F,
    #[value(name = "F_av")]
    FAv,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// JSON spec file; flags override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long = "J", allow_negative_numbers = true)]
    j: Option<f64>,
    #[arg(long = "J1", allow_negative_numbers = true)]
    j1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    #[arg(long = "T", allow_negative_numbers = true)]
    temperature: Option<f64>,
    /// Input-state mixing angle; repeat for several input states.
    #[arg(long, allow_negative_numbers = true)]
    theta: Vec<f64>,
    /// Input-state phase, one per --theta or a single shared value.
    #[arg(long, allow_negative_numbers = true)]
    phi: Vec<f64>,
    #[arg(long)]
    preset: Option<String>,
    /// Field in Tesla (material mode).
    #[arg(long = "B", allow_negative_numbers = true)]
    b_tesla: Option<f64>,
    /// Axis as name:min:max[:steps] with name in h, T, B, J1_over_J.
    #[arg(long, allow_negative_numbers = true)]
    axis1: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    axis2: Option<String>,
    /// Default number of points per axis.
    #[arg(long)]
    steps: Option<usize>,
    /// Comma-separated observables, e.g. C_ch,F,F_av.
    #[arg(long, value_delimiter = ',')]
    outputs: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[arg(long = "mu-b-over-kb", hide = true)]
    mu_b_over_k_b: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Verify(String),
    Io { path: String, source: io::Error },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BoundViolation { .. } => Failure::Verify(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl Common {
    fn resolve(&self) -> Result<ScanSpec, Failure> {
        let mut spec = match &self.spec {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Failure::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| Failure::Invalid(format!("spec file {}: {e}", path.display())))?
            }
            None => ScanSpec::default(),
        };
        if let Some(v) = self.j {
            spec.j = v;
        }
        if let Some(v) = self.j1 {
            spec.j1 = v;
        }
        if self.h.is_some() {
            spec.h = self.h;
        }
        if self.temperature.is_some() {
            spec.temperature = self.temperature;
        }
        if self.preset.is_some() {
            spec.preset = self.preset.clone();
            spec.mode = Mode::Material;
        }
        if self.b_tesla.is_some() {
            spec.b_tesla = self.b_tesla;
            spec.mode = Mode::Material;
        }
        if let Some(a) = &self.axis1 {
            spec.axis1 = Some(AxisSpec::parse(a)?);
        }
        if let Some(a) = &self.axis2 {
            spec.axis2 = Some(AxisSpec::parse(a)?);
        }
        if self.steps.is_some() {
            spec.steps = self.steps;
        }
        if !self.outputs.is_empty() {
            let parsed: Result<Vec<Observable>, Error> = self.outputs.iter().map(|s| s.trim().parse()).collect();
            spec.outputs = Some(parsed?);
        }
        if self.mu_b_over_k_b.is_some() {
            spec.mu_b_over_k_b = self.mu_b_over_k_b;
        }
        if !self.theta.is_empty() || !self.phi.is_empty() {
            spec.angles = self.angles()?;
        }
        Ok(spec)
    }

    fn angles(&self) -> Result<Vec<InputState>, Failure> {
        let thetas = if self.theta.is_empty() {
            vec![std::f64::consts::FRAC_PI_2]
        } else {
            self.theta.clone()
        };
        let phis = match self.phi.len() {
            0 => vec![0.0; thetas.len()],
            1 => vec![self.phi[0]; thetas.len()],
            n if n == thetas.len() => self.phi.clone(),
            n => {
                return Err(Failure::Invalid(format!(
                    "invalid parameter `phi`: got {n} values for {} input states",
                    thetas.len()
                )))
            }
        };
        thetas
            .iter()
            .zip(&phis)
            .map(|(&t, &p)| InputState::new(t, p).map_err(Failure::from))
            .collect()
    }

    fn emit(&self, table: &ScanTable) -> Result<(), Failure> {
        match &self.out {
            Some(path) => {
                let io_err = |source| Failure::Io {
                    path: path.display().to_string(),
                    source,
                };
                let file = File::create(path).map_err(io_err)?;
                write_table(table, self.format, BufWriter::new(file)).map_err(io_err)
            }
            None => {
                write_table(table, self.format, BufWriter::new(io::stdout().lock())).map_err(|source| Failure::Io {
                    path: "<stdout>".into(),
                    source,
                })
            }
        }
    }
}

fn write_table<W: Write>(table: &ScanTable, format: Format, w: W) -> io::Result<()> {
    match format {
        Format::Csv => table.write_csv(w),
        Format::Json => table.write_json(w),
    }
}

fn contour(spec: &ScanSpec, which: Contour, exec: Execution) -> Result<ScanTable, Failure> {
    if spec.mode != Mode::Dimensionless {
        return Err(Failure::Invalid("contour extraction is dimensionless".into()));
    }
    let target = match which {
        Contour::FAv => ContourTarget::AverageFidelity,
        Contour::F => match spec.angles.as_slice() {
            [a] => ContourTarget::Fidelity { theta: a.theta },
            _ => {
                return Err(Failure::Invalid(
                    "invalid parameter `theta`: the F contour takes one angle".into(),
                ))
            }
        },
    };
    let mut search = ThresholdSearch::new(spec.j1, target);
    search.j = spec.j;
    if let Some(axis) = spec.axis1 {
        if axis.name != AxisName::H || spec.axis2.is_some() {
            return Err(Failure::Invalid(
                "invalid parameter `axis1`: the contour takes a single h axis".into(),
            ));
        }
        search.h_min = axis.min;
        search.h_max = axis.max;
        search.h_steps = axis.steps_or(spec.steps.unwrap_or(search.h_steps));
    }
    let result = threshold_temperatures(&search, exec)?;
    if let (Some(t), Some(h)) = (result.t_star, result.h_at_max) {
        eprintln!("T* = {t:.6} at h = {h}");
    } else {
        eprintln!("{} stays below 2/3 over the whole field range", target.label());
    }
    Ok(result.to_table(&search))
}

fn run(cli: Cli) -> Result<(), Failure> {
    threads_from_env()?;
    let exec = Execution::Parallel;
    match cli.command {
        Command::Point(common) => {
            let spec = common.resolve()?;
            common.emit(&run_point(&spec)?)
        }
        Command::Scan { common, contour: which } => {
            let spec = common.resolve()?;
            let table = match which {
                Some(w) => contour(&spec, w, exec)?,
                None => run_grid(&spec, exec)?,
            };
            common.emit(&table)
        }
        Command::Material(common) => {
            let mut spec = common.resolve()?;
            spec.mode = Mode::Material;
            common.emit(&material_scan(&spec, exec)?)
        }
        Command::PhaseDiagram(common) => {
            let spec = common.resolve()?;
            common.emit(&phase_diagram(&spec, exec)?)
        }
        Command::Verify { level, mu_b_over_k_b } => {
            let mut options = VerifyOptions::new(match level {
                VerifyLevel::Quick => Level::Quick,
                VerifyLevel::Full => Level::Full,
            });
            if let Some(mu) = mu_b_over_k_b {
                if !(mu.is_finite() && mu > 0.0) {
                    return Err(Failure::Invalid(format!(
                        "invalid parameter `mu_b_over_k_b`: must be positive, got {mu}"
                    )));
                }
                options.mu_b_over_k_b = mu;
            }
            let report = verify::run(&options);
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                let names: Vec<&str> = report.failures().map(|c| c.name).collect();
                Err(Failure::Verify(format!("failed checks: {}", names.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(Failure::Io { path, source }) => {
            if source.kind() == io::ErrorKind::BrokenPipe && path == "<stdout>" {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {}: {source}", Path::new(&path).display());
            ExitCode::from(EXIT_IO)
        }
    }
}
