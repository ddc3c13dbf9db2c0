use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use acv_core::io::{parse_matrix, parse_problem, parse_rational, ChartSpec};
use acv_core::pipeline::{emit_curve_samples, run_pipeline, Command};
use acv_core::Error;
use clap::{Args, Parser, Subcommand};

/// Bad faces, candidate asymptotic critical values and verified witness
/// curves of a polynomial.
#[derive(Parser)]
#[command(name = "acv", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bad faces with classification and volumes.
    Badfaces(RunArgs),
    /// Critical values of the face polynomials and the candidate set.
    Values(RunArgs),
    /// Witness curves with symbolic and numeric verification.
    Witness(RunArgs),
    /// Volume bound on the number of atypical values at infinity.
    Bound(RunArgs),
    /// CSV samples of one witness curve.
    EmitCurve {
        #[command(flatten)]
        run: RunArgs,
        /// 1-based index of the witness to sample.
        #[arg(long, default_value_t = 1)]
        witness: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    problem: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Chart matrix file, rows of integers or `W = [[..]]`.
    #[arg(long, value_name = "W-file")]
    chart: Option<PathBuf>,
    /// Base point in the torus coordinates of the face, e.g. `--ustar=-1/3,2/3`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1..)]
    ustar: Option<Vec<String>>,
    #[arg(long)]
    nondegenerate: bool,
    #[arg(long)]
    tmin: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("acv: [{}] {e}", e.module());
    ExitCode::from(e.exit_code() as u8)
}

fn load(args: &RunArgs) -> Result<acv_core::io::ProblemSpec, Error> {
    let read = |p: &PathBuf| fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())));
    let mut spec = parse_problem(&read(&args.problem)?)?;
    if let Ok(s) = std::env::var("ACV_SEED") {
        spec.seed = s.trim().parse().map_err(|_| Error::Parse(format!("ACV_SEED: '{s}' is not an unsigned integer")))?;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let ustar = match &args.ustar {
        Some(v) => Some(v.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>()?),
        None => None,
    };
    match &args.chart {
        Some(p) => spec.charts.insert(0, ChartSpec { w: parse_matrix(&read(p)?)?, ustar }),
        None if ustar.is_some() => spec.ustar = ustar,
        None => {}
    }
    spec.nondegenerate |= args.nondegenerate;
    spec.grid.tmin = args.tmin.unwrap_or(spec.grid.tmin);
    spec.grid.tmax = args.tmax.unwrap_or(spec.grid.tmax);
    spec.grid.points = args.points.unwrap_or(spec.grid.points);
    spec.grid.validate()?;
    Ok(spec)
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, command, pick) = match &cli.command {
        Cmd::Badfaces(a) => (a, Command::Badfaces, 0),
        Cmd::Values(a) => (a, Command::Values, 0),
        Cmd::Witness(a) => (a, Command::Witness, 0),
        Cmd::Bound(a) => (a, Command::Bound, 0),
        Cmd::EmitCurve { run, witness } => (run, Command::EmitCurve, *witness),
    };
    let spec = match load(args) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let report = match run_pipeline(&spec, command) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    for e in &report.errors {
        eprintln!("acv: [{}] {}", e.module, e.message);
    }
    let text = if command == Command::EmitCurve {
        let Some(curve) = pick.checked_sub(1).and_then(|i| report.curves.get(i)) else {
            return fail(&Error::VerificationFailed(format!("no witness curve with index {pick}")));
        };
        emit_curve_samples(&spec.polynomial(), curve, &spec.grid)
    } else {
        report.to_json()
    };
    if let Err(e) = write_out(&args.out, &text) {
        return fail(&e);
    }
    ExitCode::from(report.exit_code() as u8)
}
