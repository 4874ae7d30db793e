use std::fs::File;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use normgeo::commands::{
    self, CommandError, CommandResult, CompareOptions, Context, DefectOptions, DistanceMethod,
    GeodesicOptions, MetricKind, PairFamily, RunReport,
};
use normgeo::verify::{Level, ToleranceProfile};

#[derive(Parser)]
#[command(
    name = "normgeo",
    version,
    about = "Fisher and Killing geometry of multivariate normal distributions"
)]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = ProfileArg::Default)]
    tolerance_profile: ProfileArg,

    /// Input document; read from stdin when absent.
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Write the command's table here as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Multiplies every verify tolerance.
    #[arg(long, global = true, default_value_t = 1.0, hide = true)]
    tolerance_scale: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Default,
    Strict,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Fisher,
    Killing,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Fisher => MetricKind::Fisher,
            MetricArg::Killing => MetricKind::Killing,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Leaf,
    Bvp,
    Killing,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Generic,
    Leaf,
    Transversal,
}

#[derive(Subcommand)]
enum Command {
    /// Fisher and Killing inner products of two tangent vectors.
    Metric {
        #[arg(long, value_enum, default_value_t = MetricArg::Fisher)]
        metric: MetricArg,
    },
    /// Distance between two normal distributions.
    Distance {
        #[arg(long, value_enum, default_value_t = MethodArg::Leaf)]
        method: MethodArg,
    },
    /// Sample a geodesic from initial data.
    Geodesic {
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = MetricArg::Fisher)]
        metric: MetricArg,
    },
    /// Fisher defect of a leaf-orthogonal Killing geodesic.
    Defect {
        #[arg(long, default_value_t = 50.0)]
        t_max: f64,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Fast)]
        level: LevelArg,
    },
    /// Fisher against Killing distances on random pairs.
    Compare {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Killing separation range as `lo,hi`.
        #[arg(long, value_name = "LO,HI", value_delimiter = ',', default_values_t = [0.1, 2.0])]
        separation_range: Vec<f64>,
        #[arg(long, value_enum, default_value_t = FamilyArg::Generic)]
        family: FamilyArg,
    },
}

fn read_input(path: &Option<PathBuf>) -> CommandResult<String> {
    let mut text = String::new();
    let res = match path {
        Some(p) => File::open(p).and_then(|mut f| f.read_to_string(&mut text)),
        None => std::io::stdin().read_to_string(&mut text),
    };
    res.map_err(|e| CommandError::parse(format!("cannot read input: {e}")))?;
    Ok(text)
}

fn run(cli: &Cli) -> CommandResult<RunReport> {
    let ctx = Context {
        seed: cli.seed,
        profile: match cli.tolerance_profile {
            ProfileArg::Default => ToleranceProfile::Default,
            ProfileArg::Strict => ToleranceProfile::Strict,
        },
    };
    match &cli.command {
        Command::Metric { metric } => {
            let input = commands::parse_input(&read_input(&cli.input)?)?;
            commands::metric(&input, &ctx, (*metric).into())
        }
        Command::Distance { method } => {
            let input = commands::parse_input(&read_input(&cli.input)?)?;
            let method = match method {
                MethodArg::Leaf => DistanceMethod::Leaf,
                MethodArg::Bvp => DistanceMethod::Bvp,
                MethodArg::Killing => DistanceMethod::Killing,
            };
            commands::distance(&input, &ctx, method)
        }
        Command::Geodesic {
            t_end,
            steps,
            metric,
        } => {
            let input = commands::parse_input(&read_input(&cli.input)?)?;
            let opts = GeodesicOptions {
                t_end: *t_end,
                steps: *steps,
                metric: (*metric).into(),
            };
            commands::geodesic(&input, &ctx, opts)
        }
        Command::Defect { t_max } => {
            let input = commands::parse_input(&read_input(&cli.input)?)?;
            commands::defect_table(&input, &ctx, DefectOptions { t_max: *t_max })
        }
        Command::Verify { level } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            Ok(commands::verify(&ctx, level, cli.tolerance_scale))
        }
        Command::Compare {
            dim,
            count,
            separation_range,
            family,
        } => {
            let [lo, hi] = separation_range[..] else {
                return Err(CommandError::parse(
                    "--separation-range takes exactly two values",
                ));
            };
            let opts = CompareOptions {
                dim: *dim,
                count: *count,
                separation: (lo, hi),
                family: match family {
                    FamilyArg::Generic => PairFamily::Generic,
                    FamilyArg::Leaf => PairFamily::Leaf,
                    FamilyArg::Transversal => PairFamily::Transversal,
                },
            };
            commands::compare(&ctx, opts)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let (Some(path), Some(table)) = (&cli.csv, &report.table) {
        let written = File::create(path)
            .map_err(csv::Error::from)
            .and_then(|f| table.write_csv(f));
        if let Err(e) = written {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    println!("{}", report.to_json());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
