//! The `snn` command line.
//!
//! Exit codes: 0 on success, 1 when arguments, parameters or files are
//! invalid, 2 when a build report or verification suite is not satisfied.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{MnnError, Result};
use crate::gadgets::{factory, GadgetSpec};
use crate::inversion::{build_inv, InversionSpec};
use crate::io::{load_matrix, load_network, save_network, write_matrix};
use crate::mnn::{Activation, Mnn};
use crate::oracles::{Seed, DEFAULT_SEED};
use crate::report::{
    gadget_report, gadget_sweep, inverse_bounds, inverse_report, pow2_report, rect_report,
    square_bounds, square_report, strassen_bounds, strassen_growth, write_csv, BoundReport,
};
use crate::strassen::{
    build_str_pow2, build_str_rect, build_str_square, pack_ab, pack_atb, RectShape,
};
use crate::verify::{run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_UNSATISFIED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "snn",
    version,
    about = "Build, evaluate and verify matrix product and inversion networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a network, write it as JSON and report its size.
    Build(BuildArgs),
    /// Evaluate a network on a matrix.
    Eval(EvalArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Write a size table as CSV.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BuildKind {
    StrassenPow2,
    StrassenRect,
    StrassenSquare,
    Inverse,
    Gadget,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    pub kind: BuildKind,
    /// Recursion depth for strassen-pow2 (matrices of side 2^k).
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Entry bound of the operands.
    #[arg(long = "K", default_value_t = 1.0)]
    pub range: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_parser = parse_activation, default_value = "relu")]
    pub activation: Activation,
    /// Network JSON destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report JSON destination; printed to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    /// `(A | B)`, for square networks.
    Ab,
    /// `(A^T | B)`, for rectangular networks.
    Atb,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub net: PathBuf,
    /// Input matrix CSV, already in the network's input layout.
    #[arg(long, conflicts_with_all = ["lhs", "rhs"], required_unless_present = "lhs")]
    pub input: Option<PathBuf>,
    /// Left factor CSV; packed with --rhs according to --layout.
    #[arg(long, requires = "rhs")]
    pub lhs: Option<PathBuf>,
    #[arg(long, requires = "lhs")]
    pub rhs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ab")]
    pub layout: Layout,
    /// Output CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite to run: gadgets, strassen, inversion or identities. All when absent.
    #[arg(long, value_parser = parse_suite)]
    pub suite: Option<Suite>,
    #[arg(long, env = "SNN_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Report JSON destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Growth,
    Bounds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GrowthOf {
    /// Power-of-two product networks for k = 0..=max-k.
    Strassen,
    /// The ReLU product gadget for eps = 2^-2 .. 2^-16.
    Gadget,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub kind: ReportKind,
    #[arg(long, value_enum, default_value = "strassen")]
    pub of: GrowthOf,
    #[arg(long, value_parser = parse_activation, default_value = "relu2")]
    pub activation: Activation,
    #[arg(long, default_value_t = 4)]
    pub max_k: u32,
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    #[arg(long = "K", default_value_t = 1.0)]
    pub range: f64,
    /// CSV destination; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_activation(s: &str) -> std::result::Result<Activation, String> {
    s.parse().map_err(|e: MnnError| e.to_string())
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: MnnError| e.to_string())
}

/// Parses `args` (program name first) and runs the command, writing
/// regular output to `stdout` and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INVALID
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Build(args) => build(args, stdout),
        Command::Eval(args) => eval(args, stdout),
        Command::Verify(args) => verify(args, stdout),
        Command::Report(args) => report(args, stdout),
    }
}

fn need<T>(value: Option<T>, kind: &str, flag: &str) -> Result<T> {
    value.ok_or_else(|| MnnError::param(format!("{kind} needs --{flag}")))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn build(args: BuildArgs, stdout: &mut dyn Write) -> Result<i32> {
    let f = factory(args.activation);
    let (net, report): (Mnn, BoundReport) = match args.kind {
        BuildKind::Gadget => {
            let spec = GadgetSpec::new(args.eps.unwrap_or(1.0), args.range)?;
            let net = f.build(spec)?;
            let report = gadget_report(&net, spec, f)?;
            (net, report)
        }
        BuildKind::StrassenPow2 => {
            let k = need(args.k, "strassen-pow2", "k")?;
            let eps = need(args.eps, "strassen-pow2", "eps")?;
            let net = build_str_pow2(k, eps, args.range, f)?;
            let report = pow2_report(&net, k, eps, args.range, f)?;
            (net, report)
        }
        BuildKind::StrassenRect => {
            let kind = "strassen-rect";
            let shape = RectShape::new(
                need(args.m, kind, "m")?,
                need(args.n, kind, "n")?,
                need(args.p, kind, "p")?,
            )?;
            let eps = need(args.eps, kind, "eps")?;
            let net = build_str_rect(shape, eps, args.range, f)?;
            let report = rect_report(&net, shape, eps, args.range, f)?;
            (net, report)
        }
        BuildKind::StrassenSquare => {
            let n = need(args.n, "strassen-square", "n")?;
            let eps = need(args.eps, "strassen-square", "eps")?;
            let net = build_str_square(n, eps, args.range, f)?;
            let report = square_report(&net, n, eps, args.range, f)?;
            (net, report)
        }
        BuildKind::Inverse => {
            let kind = "inverse";
            let spec = InversionSpec::new(
                need(args.n, kind, "n")?,
                need(args.alpha, kind, "alpha")?,
                need(args.eps, kind, "eps")?,
                need(args.delta, kind, "delta")?,
            )?;
            let net = build_inv(spec, f)?;
            let report = inverse_report(&net, spec, f)?;
            (net, report)
        }
    };
    if let Some(path) = &args.out {
        save_network(&net, path)?;
    }
    match &args.report {
        Some(path) => {
            let mut w = create(path)?;
            report.write_json(&mut w)?;
            w.flush()?;
        }
        None => {
            report.write_json(&mut *stdout)?;
            writeln!(stdout)?;
        }
    }
    Ok(if report.satisfied {
        EXIT_OK
    } else {
        EXIT_UNSATISFIED
    })
}

fn eval(args: EvalArgs, stdout: &mut dyn Write) -> Result<i32> {
    let net = load_network(&args.net)?;
    let input = match (&args.input, &args.lhs, &args.rhs) {
        (Some(path), _, _) => load_matrix(path)?,
        (None, Some(lhs), Some(rhs)) => {
            let (a, b) = (load_matrix(lhs)?, load_matrix(rhs)?);
            match args.layout {
                Layout::Ab => pack_ab(&a, &b)?,
                Layout::Atb => pack_atb(&a, &b)?,
            }
        }
        _ => {
            return Err(MnnError::param(
                "eval needs --input or both --lhs and --rhs",
            ))
        }
    };
    let output = net.realize(&input)?;
    match &args.out {
        Some(path) => write_matrix(&output, create(path)?)?,
        None => write_matrix(&output, &mut *stdout)?,
    }
    Ok(EXIT_OK)
}

fn verify(args: VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let suites = match args.suite {
        Some(suite) => vec![suite],
        None => Suite::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    for suite in suites {
        let report = run_suite(suite, Seed(args.seed))?;
        for check in &report.checks {
            writeln!(stdout, "{check}")?;
        }
        reports.push(report);
    }
    let passed = reports.iter().all(|r| r.passed);
    writeln!(
        stdout,
        "{}",
        if passed {
            "all hard checks passed"
        } else {
            "hard checks failed"
        }
    )?;
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        if let [single] = reports.as_slice() {
            serde_json::to_writer_pretty(&mut w, single)?;
        } else {
            serde_json::to_writer_pretty(&mut w, &reports)?;
        }
        w.flush()?;
    }
    Ok(if passed { EXIT_OK } else { EXIT_UNSATISFIED })
}

fn report(args: ReportArgs, stdout: &mut dyn Write) -> Result<i32> {
    let mut sink: Box<dyn Write + '_> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(&mut *stdout),
    };
    match (args.kind, args.of) {
        (ReportKind::Growth, GrowthOf::Strassen) => {
            let rows = strassen_growth(args.max_k, args.eps, args.range, factory(args.activation))?;
            write_csv(&rows, &mut sink)?;
        }
        (ReportKind::Growth, GrowthOf::Gadget) => {
            let sweep = gadget_sweep(2..=16, args.range, factory(Activation::Relu))?;
            write_csv(&sweep.rows, &mut sink)?;
        }
        (ReportKind::Bounds, _) => {
            let mut rows = Vec::new();
            for activation in [Activation::Relu, Activation::Relu2] {
                let f = factory(activation);
                rows.extend(strassen_bounds(
                    &[(2, 3, 2), (3, 3, 3), (5, 6, 4)],
                    args.eps,
                    args.range,
                    f,
                )?);
                rows.extend(square_bounds(&[3, 5, 6], args.eps, args.range, f)?);
                rows.extend(inverse_bounds(
                    &[2, 4, 8],
                    &[1.0, 2.0],
                    &[0.1, 0.01],
                    0.5,
                    f,
                )?);
            }
            write_csv(&rows, &mut sink)?;
        }
    }
    sink.flush()?;
    Ok(EXIT_OK)
}
