use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fim_core::experiments::{
    run_convergence, run_element_landscape, run_gain_vs_dmax, run_gain_vs_paths,
    run_hyperparameter_sweep, with_threads, ConfigFile, ExperimentSetup, MethodKind,
    OutputFormat, SweepParameter, SweepSpec, Table,
};
use fim_core::miso::ConvergenceMetric;
use fim_core::FimError;

const AFTER_HELP: &str = "\
Settings are taken from the built-in defaults, then the --config file, then flags.

The alternating optimizer used for multi-antenna links stops once the gain
increase of one outer iteration falls below --threshold. With the default
`--convergence relative` the increase is divided by the previous gain; with
`absolute` it is compared in linear gain units directly. Channel gains are
typically around 1e-10, so an absolute threshold must be scaled accordingly.

Exit codes: 0 success, 1 invalid configuration, 2 degenerate scenario under --strict.";

#[derive(Parser, Debug)]
#[command(name = "fimsim", version, about = "Flexible intelligent metasurface link simulator")]
#[command(after_help = AFTER_HELP)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Base seed; trial t uses seed + t.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials [default: 500].
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Elements along the y axis.
    #[arg(long, global = true)]
    ny: Option<usize>,
    /// Elements along the z axis.
    #[arg(long, global = true)]
    nz: Option<usize>,
    /// BS to surface paths.
    #[arg(long, global = true)]
    paths_in: Option<usize>,
    /// Surface to UE paths.
    #[arg(long, global = true)]
    paths_out: Option<usize>,
    /// BS antennas; 1 runs the single-antenna link only.
    #[arg(long, global = true)]
    antennas: Option<usize>,
    /// Morphing bound in wavelengths.
    #[arg(long, global = true)]
    dmax_wavelengths: Option<f64>,
    /// Deformation solver [default: pso].
    #[arg(long, global = true, value_enum)]
    method: Option<Method>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    output: Format,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out_file: Option<PathBuf>,
    /// TOML file with `seed`, `trials`, `method`, `[scenario]` and `[solver]` entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Abort on a degenerate trial instead of skipping it.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads; 1 runs serially. Output does not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Stopping threshold of the alternating optimizer.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// How the threshold is compared with the per-iteration gain increase.
    #[arg(long, global = true, value_enum)]
    convergence: Option<Convergence>,
    /// Outer-iteration cap of the alternating optimizer.
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-element gain curves with the optimum found by each solver.
    Landscape {
        /// Curve samples per element.
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Mean gain versus morphing bound; the rigid surface is always included.
    GainVsDmax {
        /// Morphing bounds in wavelengths.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,1.5,2,2.5,3")]
        grid: Vec<f64>,
        /// Solvers to compare; defaults to --method.
        #[arg(long, value_delimiter = ',', value_enum)]
        methods: Vec<Method>,
    },
    /// Mean gain versus the number of BS to surface paths.
    GainVsPaths {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        grid: Vec<usize>,
    },
    /// Success rate of solver hyperparameters against a grid oracle.
    Hyperparam {
        #[arg(long, value_enum, default_value = "migd-intervals")]
        parameter: Parameter,
        /// Values of the swept hyperparameter.
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,30,40,50,75,100")]
        values: Vec<usize>,
        /// Morphing bounds in wavelengths.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,1.5,2,2.5,3")]
        dmax_grid: Vec<f64>,
        /// Allowed relative shortfall against the oracle.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        /// Fraction of samples that must be solved.
        #[arg(long, default_value_t = 0.95)]
        target_rate: f64,
        #[arg(long, default_value_t = 100_000)]
        oracle_points: usize,
    },
    /// Gain traces of the alternating optimizer, one row per outer iteration.
    Converge,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Pso,
    Migd,
    Grid,
}

impl From<Method> for MethodKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Pso => MethodKind::Pso,
            Method::Migd => MethodKind::Migd,
            Method::Grid => MethodKind::Grid,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Parameter {
    MigdIntervals,
    PsoParticles,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Convergence {
    Relative,
    Absolute,
}

struct Resolved {
    setup: ExperimentSetup,
    method: MethodKind,
}

fn resolve(g: &Global) -> Result<Resolved, FimError> {
    let file = match &g.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut scenario = file.scenario;
    if let Some(v) = g.ny {
        scenario.n_y = v;
    }
    if let Some(v) = g.nz {
        scenario.n_z = v;
    }
    if let Some(v) = g.paths_in {
        scenario.paths_in = v;
    }
    if let Some(v) = g.paths_out {
        scenario.paths_out = v;
    }
    if let Some(v) = g.antennas {
        scenario.antennas = v;
    }
    if let Some(v) = g.dmax_wavelengths {
        scenario.dmax_wavelengths = v;
    }
    let mut solver = file.solver;
    if let Some(v) = g.threshold {
        solver.threshold = v;
    }
    if let Some(v) = g.max_iterations {
        solver.max_iterations = v;
    }
    if let Some(c) = g.convergence {
        solver.convergence = match c {
            Convergence::Relative => ConvergenceMetric::Relative,
            Convergence::Absolute => ConvergenceMetric::Absolute,
        };
    }
    let seed = g.seed.or(file.seed).unwrap_or(0);
    let trials = g.trials.or(file.trials).unwrap_or(500);
    let method = g.method.map(MethodKind::from).or(file.method).unwrap_or(MethodKind::Pso);
    if g.threads == Some(0) {
        return Err(FimError::InvalidConfig("--threads must be at least 1".into()));
    }
    let mut setup = ExperimentSetup::new(scenario.resolve()?, solver, seed, trials)?;
    setup.strict = g.strict;
    Ok(Resolved { setup, method })
}

fn run(cli: &Cli) -> Result<Table, FimError> {
    let Resolved { setup, method } = resolve(&cli.global)?;
    let job = || -> Result<Table, FimError> {
        Ok(match &cli.command {
            Command::Landscape { points } => {
                run_element_landscape(&setup, setup.base_seed, *points)?.table().clone()
            }
            Command::GainVsDmax { grid, methods } => {
                let methods: Vec<MethodKind> = if methods.is_empty() {
                    vec![method]
                } else {
                    methods.iter().map(|&m| m.into()).collect()
                };
                run_gain_vs_dmax(&setup, grid, &methods)?.table().clone()
            }
            Command::GainVsPaths { grid } => run_gain_vs_paths(&setup, grid, method)?.table().clone(),
            Command::Hyperparam {
                parameter,
                values,
                dmax_grid,
                tolerance,
                target_rate,
                oracle_points,
            } => {
                let spec = SweepSpec {
                    parameter: match parameter {
                        Parameter::MigdIntervals => SweepParameter::MigdIntervals,
                        Parameter::PsoParticles => SweepParameter::PsoParticles,
                    },
                    values: values.clone(),
                    dmax_wavelengths: dmax_grid.clone(),
                    tolerance: *tolerance,
                    target_rate: *target_rate,
                    oracle_points: *oracle_points,
                };
                run_hyperparameter_sweep(&setup, &spec)?.table().clone()
            }
            Command::Converge => run_convergence(&setup, method)?.table().clone(),
        })
    };
    match cli.global.threads {
        Some(n) => with_threads(n, job)?,
        None => job(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let format = match cli.global.output {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let table = match run(&cli) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                FimError::Degenerate(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            };
        }
    };
    let written = match &cli.global.out_file {
        Some(path) => table.write(path, format),
        None => std::io::stdout().lock().write_all(table.render(format).as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
