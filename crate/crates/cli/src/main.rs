//! `ripgap` command-line driver.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 bad input,
//! 3 an enumeration or size budget was exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ripgap::construction::{build_reduction_matrix, build_scaled_matrix};
use ripgap::gadget::reduce;
use ripgap::generate::{generate_3sat5, generate_bounded_cnf, generate_e13};
use ripgap::matrix::{parse_matrix, write_float_matrix, write_rational_matrix};
use ripgap::pipeline::{run_pipeline, PipelineInput, PipelineOptions};
use ripgap::rational::{format_rational, parse_rational, to_f64};
use ripgap::report::{emit, ReportFormat};
use ripgap::rip::{gap_decide, restricted_extremes, RipReport, DEFAULT_BUDGET};
use ripgap::sat::{
    max_val_cnf_with_guard, max_val_with_guard, parse_dimacs, parse_e13, write_dimacs, write_e13,
    Assignment, Cnf3Instance, E13Instance, DEFAULT_MAX_ENUM_VARS,
};
use ripgap::transforms::{
    block_diag, shift_delta_down, shift_delta_up, squarify, widen_rectangular,
};
use ripgap::{Error, OracleOptions, Rational, ReductionParams, Result};

#[derive(Parser)]
#[command(
    name = "ripgap",
    version,
    about = "SAT to RIP-gap reductions and exact RIP oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for generators and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        /// Clause count (e13 and cnf kinds).
        #[arg(long)]
        m: Option<usize>,
        /// Plant a satisfying assignment (e13 only).
        #[arg(long)]
        planted: bool,
        /// Occurrence cap per variable (cnf only).
        #[arg(long, default_value_t = 5)]
        max_occ: usize,
    },
    /// Reduce a DIMACS 3-CNF to positive 1-in-3 SAT.
    Reduce {
        #[arg(long)]
        input: PathBuf,
        /// Witness map sidecar; defaults to `<out>.map.json` when --out is set.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Build the reduction matrix of a positive 1-in-3 instance.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Divide by c1 so that the operator norm is at most 1.
        #[arg(long)]
        scaled: bool,
        /// Write doubles instead of exact rationals.
        #[arg(long)]
        float: bool,
    },
    /// Restricted eigenvalue extremes and the RIP constant at sparsity k.
    Rip {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        /// Also report whether the matrix is in RIP(k, delta).
        #[arg(long)]
        delta: Option<String>,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Decide RIP(k, delta) against not RIP(k/lambda1, lambda2 delta).
    Gap {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        delta: String,
        #[arg(long)]
        lambda1: String,
        #[arg(long)]
        lambda2: String,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Apply a shape or delta transform to a matrix.
    Transform {
        #[arg(long, value_enum)]
        op: Op,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        matrix2: Option<PathBuf>,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        delta_prime: Option<String>,
        #[arg(long)]
        lambda2: Option<String>,
        #[arg(long)]
        tau: Option<String>,
        /// Sparsity for widen.
        #[arg(long)]
        k: Option<usize>,
        /// RIP report for the second matrix (widen).
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Evaluate an assignment, or brute-force the best one.
    Val {
        #[arg(long)]
        input: PathBuf,
        /// Assignment as a T/F (or 1/0) string; omit to maximize.
        #[arg(long)]
        assignment: Option<String>,
        /// Refuse brute force above this many variables.
        #[arg(long, default_value_t = DEFAULT_MAX_ENUM_VARS)]
        max_n: usize,
    },
    /// Run the full reduction and verification pipeline.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        oracle: OracleArgs,
        /// Largest 1-in-3 instance to build a matrix for.
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        /// Also write the reduction matrix here.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    #[value(name = "3sat5")]
    ThreeSat5,
    E13,
    /// 3-CNF with bounded occurrences.
    Cnf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    ShiftDown,
    ShiftUp,
    Square,
    Blockdiag,
    Widen,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// eps = 1/5, xi = 1/200.
    Demo,
    /// eps = 1/5, xi = 1/ceil(1e5/alpha), which makes rho positive.
    Gap,
}

#[derive(Args)]
struct ParamArgs {
    /// Parameter preset; explicit --epsilon/--xi override it.
    #[arg(long, value_enum, default_value_t = Preset::Demo)]
    preset: Preset,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    xi: Option<String>,
    #[arg(long, default_value = "1/100")]
    alpha: String,
}

impl ParamArgs {
    fn resolve(&self) -> Result<ReductionParams> {
        let alpha = parse_rational(&self.alpha)?;
        let base = match self.preset {
            Preset::Demo => ReductionParams::demo(alpha.clone())?,
            Preset::Gap => ReductionParams::gap_preserving(alpha.clone())?,
        };
        if self.epsilon.is_none() && self.xi.is_none() {
            return Ok(base);
        }
        let epsilon = match &self.epsilon {
            Some(s) => parse_rational(s)?,
            None => base.epsilon,
        };
        let xi = match &self.xi {
            Some(s) => parse_rational(s)?,
            None => base.xi,
        };
        ReductionParams::new(epsilon, xi, alpha)
    }
}

#[derive(Args)]
struct OracleArgs {
    /// Maximum number of supports one query may enumerate.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    #[arg(long)]
    workers: Option<usize>,
}

impl OracleArgs {
    fn options(&self) -> OracleOptions {
        OracleOptions {
            budget: self.budget,
            workers: self.workers,
            ..Default::default()
        }
    }
}

enum Instance {
    Cnf(Cnf3Instance),
    E13(E13Instance),
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = read(path)?;
    let header = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('c'))
        .unwrap_or("");
    if header.starts_with("p e13") {
        Ok(Instance::E13(parse_e13(&text)?))
    } else {
        Ok(Instance::Cnf(parse_dimacs(&text)?))
    }
}

fn read_e13(path: &Path) -> Result<E13Instance> {
    match read_instance(path)? {
        Instance::E13(phi) => Ok(phi),
        Instance::Cnf(_) => Err(Error::input(format!(
            "{} is a CNF file; reduce it first",
            path.display()
        ))),
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => Ok(fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn rat(name: &str, value: &Option<String>) -> Result<Rational> {
    let s = value
        .as_ref()
        .ok_or_else(|| Error::input(format!("--{name} is required for this operation")))?;
    parse_rational(s)
}

#[derive(Serialize)]
struct RipOutput<'a> {
    report: &'a RipReport,
    delta: String,
    is_rip: bool,
}

fn rip_text(r: &RipReport) -> String {
    format!(
        "k: {}\nmin_restricted_eig: {:?}\nmax_restricted_eig: {:?}\nwitness_support_min: {:?}\nwitness_support_max: {:?}\ndelta_star: {:?}\n",
        r.k, r.min_restricted_eig, r.max_restricted_eig, r.witness_support_min, r.witness_support_max, r.delta_star
    )
}

/// Runs a command; `Ok(false)` means a check failed.
fn run(cli: Cli) -> Result<bool> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Gen {
            kind,
            n,
            m,
            planted,
            max_occ,
        } => {
            let text = match kind {
                Kind::ThreeSat5 => write_dimacs(&generate_3sat5(n, cli.seed)?),
                Kind::E13 => write_e13(&generate_e13(n, m, planted, cli.seed)?),
                Kind::Cnf => {
                    let m = m.ok_or_else(|| Error::input("--m is required for --kind cnf"))?;
                    write_dimacs(&generate_bounded_cnf(n, m, max_occ, cli.seed)?)
                }
            };
            write_out(out, &text)?;
        }
        Command::Reduce { input, map } => {
            let psi = parse_dimacs(&read(&input)?)?;
            let (phi, witness) = reduce(&psi)?;
            write_out(out, &write_e13(&phi))?;
            let map = map.or_else(|| {
                out.map(|p| {
                    let mut s = p.as_os_str().to_owned();
                    s.push(".map.json");
                    PathBuf::from(s)
                })
            });
            if let Some(path) = map {
                fs::write(path, to_json(&witness)?)?;
            }
        }
        Command::Build {
            input,
            params,
            scaled,
            float,
        } => {
            let phi = read_e13(&input)?;
            let params = params.resolve()?;
            let x = if scaled {
                build_scaled_matrix(&phi, &params)?
            } else {
                build_reduction_matrix(&phi, &params)?
            };
            let text = if float {
                let mut f = x.to_float();
                for b in x.blocks() {
                    f.add_block(b.name.clone(), b.start, b.end)?;
                }
                write_float_matrix(&f)
            } else {
                write_rational_matrix(&x)
            };
            write_out(out, &text)?;
        }
        Command::Rip {
            matrix,
            k,
            delta,
            oracle,
        } => {
            let x = parse_matrix(&read(&matrix)?)?.to_float();
            let report = restricted_extremes(&x, k, &oracle.options())?;
            let text = match (cli.format, &delta) {
                (Format::Json, None) => to_json(&report)?,
                (Format::Text, None) => rip_text(&report),
                (fmt, Some(d)) => {
                    let d = parse_rational(d)?;
                    let is_rip = report.delta_star <= to_f64(&d) + report.tolerance;
                    match fmt {
                        Format::Json => to_json(&RipOutput {
                            report: &report,
                            delta: format_rational(&d),
                            is_rip,
                        })?,
                        Format::Text => format!("{}is_rip: {is_rip}\n", rip_text(&report)),
                    }
                }
            };
            write_out(out, &text)?;
        }
        Command::Gap {
            matrix,
            k,
            delta,
            lambda1,
            lambda2,
            oracle,
        } => {
            let x = parse_matrix(&read(&matrix)?)?.to_float();
            let decision = gap_decide(
                &x,
                k,
                to_f64(&parse_rational(&delta)?),
                &parse_rational(&lambda1)?,
                to_f64(&parse_rational(&lambda2)?),
                &oracle.options(),
            )?;
            let text = match cli.format {
                Format::Json => to_json(&decision)?,
                Format::Text => format!("{}\n", decision.verdict),
            };
            write_out(out, &text)?;
        }
        Command::Transform {
            op,
            matrix,
            matrix2,
            delta,
            delta_prime,
            lambda2,
            tau,
            k,
            certificate,
        } => {
            let out = out.ok_or_else(|| Error::input("transform needs --out"))?;
            let a = parse_matrix(&read(&matrix)?)?;
            let second = || -> Result<_> {
                let path = matrix2
                    .as_ref()
                    .ok_or_else(|| Error::input("--matrix2 is required for this operation"))?;
                parse_matrix(&read(path)?)
            };
            let summary = match op {
                Op::ShiftDown => {
                    let tau = tau.as_deref().map(parse_rational).transpose()?;
                    let (x, p) = shift_delta_down(
                        &a.to_rational()?,
                        &rat("delta", &delta)?,
                        &rat("delta-prime", &delta_prime)?,
                        &rat("lambda2", &lambda2)?,
                        tau,
                    )?;
                    fs::write(out, write_rational_matrix(&x))?;
                    to_json(&p)?
                }
                Op::ShiftUp => {
                    let (x, p) = shift_delta_up(
                        &a.to_rational()?,
                        &rat("delta", &delta)?,
                        &rat("delta-prime", &delta_prime)?,
                        &rat("lambda2", &lambda2)?,
                    )?;
                    fs::write(out, write_rational_matrix(&x))?;
                    to_json(&p)?
                }
                Op::Square => {
                    let tau = to_f64(&rat("tau", &tau)?);
                    let r = squarify(&a.to_float(), tau)?;
                    fs::write(out, write_float_matrix(&r.matrix))?;
                    to_json(&serde_json::json!({
                        "factorization_residual": r.factorization_residual,
                        "sampled_deviation": r.sampled_deviation,
                        "samples": r.samples,
                    }))?
                }
                Op::Blockdiag => {
                    let b = second()?;
                    match (a.to_rational(), b.to_rational()) {
                        (Ok(ra), Ok(rb)) => {
                            fs::write(out, write_rational_matrix(&block_diag(&ra, &rb)))?
                        }
                        _ => fs::write(
                            out,
                            write_float_matrix(&block_diag(&a.to_float(), &b.to_float())),
                        )?,
                    }
                    String::new()
                }
                Op::Widen => {
                    let b = second()?.to_float();
                    let path = certificate
                        .as_ref()
                        .ok_or_else(|| Error::input("widen needs --certificate"))?;
                    let cert: RipReport = serde_json::from_str(&read(path)?)
                        .map_err(|e| Error::input(format!("bad certificate: {e}")))?;
                    let k = k.ok_or_else(|| Error::input("widen needs --k"))?;
                    let d = to_f64(&rat("delta", &delta)?);
                    let w = widen_rectangular(&a.to_float(), &b, &cert, k, d)?;
                    fs::write(out, write_float_matrix(&w.matrix))?;
                    to_json(&serde_json::json!({ "aspect_ratio": w.aspect_ratio }))?
                }
            };
            print!("{summary}");
        }
        Command::Val {
            input,
            assignment,
            max_n,
        } => {
            let (value, witness) = match (read_instance(&input)?, assignment) {
                (Instance::E13(phi), Some(a)) => {
                    let a = Assignment::parse(&a)?;
                    (ripgap::sat::val(&phi, &a)?, a)
                }
                (Instance::Cnf(psi), Some(a)) => {
                    let a = Assignment::parse(&a)?;
                    (psi.val(&a)?, a)
                }
                (Instance::E13(phi), None) => max_val_with_guard(&phi, max_n)?,
                (Instance::Cnf(psi), None) => max_val_cnf_with_guard(&psi, max_n)?,
            };
            let text = match cli.format {
                Format::Json => to_json(&serde_json::json!({
                    "val": format_rational(&value),
                    "assignment": witness.to_string(),
                }))?,
                Format::Text => format!("{} {}\n", format_rational(&value), witness),
            };
            write_out(out, &text)?;
        }
        Command::Verify {
            input,
            params,
            oracle,
            max_n,
            matrix_out,
        } => {
            let params = params.resolve()?;
            let input = match read_instance(&input)? {
                Instance::Cnf(psi) => PipelineInput::Cnf(psi),
                Instance::E13(phi) => PipelineInput::E13(phi),
            };
            let opts = PipelineOptions {
                oracle: oracle.options(),
                max_n,
                seed: cli.seed,
                ..Default::default()
            };
            let mut report = run_pipeline(&input, &params, &opts)?;
            if let Some(path) = &matrix_out {
                let phi = match &input {
                    PipelineInput::E13(phi) => phi.clone(),
                    PipelineInput::Cnf(psi) => reduce(psi)?.0,
                };
                fs::write(
                    path,
                    write_rational_matrix(&build_reduction_matrix(&phi, &params)?),
                )?;
                report.artifacts.matrix_path = Some(path.display().to_string());
            }
            let format = match cli.format {
                Format::Json => ReportFormat::Json,
                Format::Text => ReportFormat::Text,
            };
            write_out(out, &emit(&report, format)?)?;
            return Ok(report.all_passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_capacity() { 3 } else { 2 })
        }
    }
}
