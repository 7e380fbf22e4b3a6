//! Command-line front end: loads problem files, dispatches computations,
//! emits CSV/JSON, and runs the verification suites.
//!
//! Exit codes: 0 on success, 1 on numeric or check failure, 2 on usage and
//! configuration errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ncproxavg::error::Error;
use ncproxavg::example::{run_discontinuity_demo, DemoConfig, ExampleParams};
use ncproxavg::funcspace::{simplex_path, GridSpec, MaxQuadFunction, SimplexWeight};
use ncproxavg::io::{
    parse_grid_spec, parse_lambda, write_argmin_path_csv, write_curves_csv, write_envelope_csv,
    write_pa_csv, ProblemFile,
};
use ncproxavg::util::fmt_g17;
use ncproxavg::{minpath, moreau, proxavg, suite};

#[derive(Parser)]
#[command(
    name = "ncproxavg",
    version,
    about = "Proximal averages of nonconvex functions: envelopes, weight sweeps, argmin paths, and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Problem definition file (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Output path; '-' writes to standard output.
    #[arg(long, default_value = "-")]
    out: String,
    /// Override the prox-parameter from the problem file.
    #[arg(long)]
    r: Option<f64>,
    /// Grid override, one lo:hi:n per axis (repeatable).
    #[arg(long = "grid", allow_hyphen_values = true)]
    grid: Vec<String>,
    /// Seed for sampled checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tie tolerance for argmin sets (default: relative to the best value).
    #[arg(long = "tie-tol")]
    tie_tol: Option<f64>,
    /// Suppress the summary line on standard error.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Emit one function's envelope curve as x,value,grad rows
    Envelope {
        #[command(flatten)]
        common: CommonOpts,
        /// 1-based index of the function in the problem file
        #[arg(long)]
        function: usize,
    },
    /// Emit average values over the grid for one or more weight vectors
    Pa {
        #[command(flatten)]
        common: CommonOpts,
        /// Weight vector w1,w2,... (repeatable)
        #[arg(long = "lambda")]
        lambda: Vec<String>,
        /// Sweep the edge between two 1-based vertices
        #[arg(long, num_args = 2, value_names = ["I", "J"])]
        edge: Option<Vec<usize>>,
        /// Number of sweep steps for --edge
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Track the argmin along a weight path and report jumps
    #[command(name = "argmin-path")]
    ArgminPath {
        #[command(flatten)]
        common: CommonOpts,
        /// Edge between two 1-based vertices (default: 1 2)
        #[arg(long, num_args = 2, value_names = ["I", "J"])]
        edge: Option<Vec<usize>>,
        /// Path resolution
        #[arg(long, default_value_t = 101)]
        steps: usize,
        /// Hausdorff distance that counts as a jump
        #[arg(long = "jump-threshold")]
        jump_threshold: Option<f64>,
        /// Output path for the JSON jump report; '-' is standard output
        #[arg(long = "jumps-out", default_value = "-")]
        jumps_out: String,
    },
    /// Run the verification suite; exit 0 only if every check passes
    Verify {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the reference discontinuity demo and emit figure data
    Example {
        /// Output path for figure data; '-' writes to standard output
        #[arg(long, default_value = "-")]
        out: String,
        /// Hump offset of the reference pair
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Path resolution of the weight sweep
        #[arg(long, default_value_t = 101)]
        steps: usize,
        /// Suppress the summary line on standard error
        #[arg(long)]
        quiet: bool,
    },
}

enum CliError {
    Usage(String),
    Numeric(String),
    ChecksFailed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::ChecksFailed(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) | CliError::ChecksFailed(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(_) | Error::Io(_) | Error::Json(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

/// Buffers output and flushes it in one shot so files are written atomically
/// enough for byte-comparison in tests.
fn emit(out: &str, bytes: &[u8]) -> Result<(), CliError> {
    if out == "-" {
        std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}")))
    } else {
        std::fs::write(out, bytes).map_err(|e| CliError::Usage(format!("cannot write {out}: {e}")))
    }
}

fn load_file(common: &CommonOpts) -> Result<ProblemFile, CliError> {
    Ok(ProblemFile::load(&common.problem)?)
}

fn grid_override(common: &CommonOpts) -> Result<Option<GridSpec>, CliError> {
    if common.grid.is_empty() {
        Ok(None)
    } else {
        Ok(Some(parse_grid_spec(&common.grid)?))
    }
}

fn summary(common_quiet: bool, text: &str) {
    if !common_quiet {
        eprintln!("{text}");
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Envelope { common, function } => cmd_envelope(common, function),
        Command::Pa {
            common,
            lambda,
            edge,
            steps,
        } => cmd_pa(common, lambda, edge, steps),
        Command::ArgminPath {
            common,
            edge,
            steps,
            jump_threshold,
            jumps_out,
        } => cmd_argmin_path(common, edge, steps, jump_threshold, jumps_out),
        Command::Verify { common } => cmd_verify(common),
        Command::Example {
            out,
            eps,
            steps,
            quiet,
        } => cmd_example(out, eps, steps, quiet),
    }
}

fn cmd_envelope(common: CommonOpts, function: usize) -> Result<(), CliError> {
    let file = load_file(&common)?;
    let functions: Vec<MaxQuadFunction> = file.build_functions()?;
    if function == 0 || function > functions.len() {
        return Err(CliError::Usage(format!(
            "--function must be between 1 and {}",
            functions.len()
        )));
    }
    let f = &functions[function - 1];
    if f.dimension() != 1 {
        return Err(CliError::Usage(
            "envelope curves are emitted for one-dimensional problems only".into(),
        ));
    }
    let r = common.r.unwrap_or(file.r);
    let grid = match grid_override(&common)? {
        Some(g) => g,
        None => file.build_grid()?,
    };
    let oracle_grid = grid.expanded(0.25);
    let mut rows = Vec::with_capacity(grid.len());
    for x in grid.axis_values(0) {
        let value = moreau::envelope(f, r, &[x], &oracle_grid)?;
        let grad = match moreau::envelope_gradient(f, r, &[x], &oracle_grid) {
            Ok(g) => Some(g[0]),
            Err(Error::MultivaluedProx { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        rows.push((x, value, grad));
    }
    let mut buf = Vec::new();
    write_envelope_csv(&mut buf, &rows).map_err(Error::from)?;
    emit(&common.out, &buf)?;
    summary(
        common.quiet,
        &format!("envelope: {} rows written", rows.len()),
    );
    Ok(())
}

fn collect_weights(
    m: usize,
    lambda: &[String],
    edge: Option<Vec<usize>>,
    steps: Option<usize>,
) -> Result<Vec<SimplexWeight>, CliError> {
    let mut weights = Vec::new();
    for spec in lambda {
        let w = parse_lambda(spec)?;
        if w.m() != m {
            return Err(CliError::Usage(format!(
                "--lambda {spec} has {} entries for {m} functions",
                w.m()
            )));
        }
        weights.push(w);
    }
    if let Some(edge) = edge {
        let (i, j) = (edge[0], edge[1]);
        if i == 0 || j == 0 || i > m || j > m || i == j {
            return Err(CliError::Usage(format!(
                "--edge wants two distinct 1-based vertices within 1..={m}"
            )));
        }
        let sweep = simplex_path(
            &SimplexWeight::vertex(m, i - 1),
            &SimplexWeight::vertex(m, j - 1),
            steps.unwrap_or(11),
        )?;
        weights.extend(sweep);
    }
    if weights.is_empty() {
        return Err(CliError::Usage(
            "no weight vectors given: use --lambda and/or --edge".into(),
        ));
    }
    Ok(weights)
}

fn cmd_pa(
    common: CommonOpts,
    lambda: Vec<String>,
    edge: Option<Vec<usize>>,
    steps: Option<usize>,
) -> Result<(), CliError> {
    let file = load_file(&common)?;
    let problem = file.build_problem(common.r, grid_override(&common)?)?;
    let weights = collect_weights(problem.m(), &lambda, edge, steps)?;
    let grid = problem.inner_grid().clone();
    let mut rows = Vec::new();
    for w in &weights {
        let curve = proxavg::pa_curve(&problem, w, &grid)?;
        for (flat, value) in curve.values().iter().enumerate() {
            rows.push((w.weights().to_vec(), grid.point(flat), *value));
        }
    }
    let mut buf = Vec::new();
    write_pa_csv(&mut buf, problem.m(), problem.dimension(), &rows).map_err(Error::from)?;
    emit(&common.out, &buf)?;
    summary(
        common.quiet,
        &format!(
            "pa: {} weight vectors x {} grid points",
            weights.len(),
            grid.len()
        ),
    );
    Ok(())
}

fn jump_report_json(path: &minpath::ArgminPath) -> String {
    let jumps: Vec<serde_json::Value> = path
        .jumps
        .iter()
        .map(|j| {
            serde_json::json!({
                "index": j.index,
                "lambda_star": j.lambda_star.weights(),
                "left": j.left,
                "right": j.right,
                "magnitude": j.magnitude,
            })
        })
        .collect();
    serde_json::json!({ "jump_count": path.jumps.len(), "jumps": jumps }).to_string()
}

fn cmd_argmin_path(
    common: CommonOpts,
    edge: Option<Vec<usize>>,
    steps: usize,
    jump_threshold: Option<f64>,
    jumps_out: String,
) -> Result<(), CliError> {
    let file = load_file(&common)?;
    let problem = file.build_problem(common.r, grid_override(&common)?)?;
    let m = problem.m();
    let path: Vec<SimplexWeight> = if m == 1 {
        vec![SimplexWeight::vertex(1, 0); steps]
    } else {
        let edge = edge.unwrap_or_else(|| vec![1, 2]);
        let (i, j) = (edge[0], edge[1]);
        if i == 0 || j == 0 || i > m || j > m || i == j {
            return Err(CliError::Usage(format!(
                "--edge wants two distinct 1-based vertices within 1..={m}"
            )));
        }
        simplex_path(
            &SimplexWeight::vertex(m, i - 1),
            &SimplexWeight::vertex(m, j - 1),
            steps,
        )?
    };
    let grid = problem.inner_grid().clone();
    let tracked = minpath::track_argmin(&problem, &path, &grid, common.tie_tol, jump_threshold)?;

    let mut buf = Vec::new();
    write_argmin_path_csv(&mut buf, &tracked).map_err(Error::from)?;
    emit(&common.out, &buf)?;
    let report = jump_report_json(&tracked);
    emit(&jumps_out, format!("{report}\n").as_bytes())?;
    summary(
        common.quiet,
        &format!(
            "argmin-path: {} records, {} jump(s)",
            tracked.records.len(),
            tracked.jumps.len()
        ),
    );
    Ok(())
}

fn cmd_verify(common: CommonOpts) -> Result<(), CliError> {
    let file = load_file(&common)?;
    let problem = file.build_problem(common.r, grid_override(&common)?)?;
    let reports = suite::standard_suite(&problem, common.seed)?;
    let mut buf = Vec::new();
    for rep in &reports {
        buf.extend_from_slice(rep.to_json().as_bytes());
        buf.push(b'\n');
    }
    emit(&common.out, &buf)?;
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    if failed.is_empty() {
        summary(
            common.quiet,
            &format!("verify: all {} checks passed", reports.len()),
        );
        Ok(())
    } else {
        Err(CliError::ChecksFailed(format!(
            "verification failed: {}",
            failed.join(", ")
        )))
    }
}

fn cmd_example(out: String, eps: f64, steps: usize, quiet: bool) -> Result<(), CliError> {
    ExampleParams::new(eps)?;
    let (report, _tracked) = run_discontinuity_demo(&DemoConfig { eps, steps })?;

    // Figure data: the two functions, then the weighted envelope sums for a
    // handful of weights.
    let problem = ncproxavg::example::example_problem(eps)?;
    let grid = GridSpec::line(-1.0, 3.0, 401)?;
    let xs: Vec<f64> = grid.axis_values(0).collect();
    let mut curves = Vec::new();
    for (i, name) in [(0usize, "g0"), (1usize, "g1")] {
        let f = &problem.functions()[i];
        curves.push((
            name.to_string(),
            xs.iter().map(|&x| (x, f.eval_1d(x))).collect::<Vec<_>>(),
        ));
    }
    for w0 in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let lambda = SimplexWeight::new(vec![w0, 1.0 - w0])?;
        curves.push((
            format!("avg_w{}", fmt_g17(w0)),
            xs.iter()
                .map(|&x| (x, problem.weighted_envelope(&lambda, &[x])))
                .collect::<Vec<_>>(),
        ));
    }
    let mut buf = Vec::new();
    write_curves_csv(&mut buf, &curves).map_err(Error::from)?;
    emit(&out, &buf)?;

    eprintln!("{}", serde_json::to_string(&report).map_err(Error::from)?);
    summary(
        quiet,
        &format!(
            "example: {} jump(s), demo {}",
            report.jump_count,
            if report.passed { "passed" } else { "FAILED" }
        ),
    );
    if report.passed {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(format!(
            "demo failed: {}",
            report.failures.join("; ")
        )))
    }
}
