use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tbe::error::{exit, write_file, CliError, CliResult};
use tbe::formats;
use tbe::pipeline::{
    self, AssignmentChoice, EncodeOptions, EnsembleConfig, Outputs, PipelineConfig, SolveConfig, VerifyConfig,
    VerifyInput,
};
use tbe_core::solve::{AnnealParams, Method};
use tbe_core::truncate::NoiseFloorThresholds;
use tbe_core::UnusedPolicy;

#[derive(Parser)]
#[command(name = "tbe", version, about = "Compile cost function networks to truncated Ising HUBOs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode, certify, truncate and optionally quadratize and solve.
    Compile(CompileArgs),
    /// Enumerate both landscapes and check the preservation claims.
    Verify(VerifyArgs),
    /// Minimize a HUBO file.
    Solve(SolveArgs),
    /// Monte-Carlo checks of a random-coupling ensemble.
    Ensemble(EnsembleArgs),
    /// Per-degree Walsh power of an encoded network.
    Spectrum(SpectrumArgs),
    /// Write a random two-variable network.
    Demo(DemoArgs),
}

fn parse_assignment(s: &str) -> Result<AssignmentChoice, String> {
    match s {
        "binary" => Ok(AssignmentChoice::Binary),
        "gray" => Ok(AssignmentChoice::Gray),
        _ => match s.strip_prefix("custom:") {
            Some(p) if !p.is_empty() => Ok(AssignmentChoice::Custom(PathBuf::from(p))),
            _ => Err(format!("expected binary, gray or custom:FILE, got `{s}`")),
        },
    }
}

fn parse_unused(s: &str) -> Result<UnusedPolicy, String> {
    let (kind, value) = match s.split_once(':') {
        Some((k, v)) => (k, Some(v)),
        None => (s, None),
    };
    match (kind, value) {
        ("fallback", None) => Ok(UnusedPolicy::Fallback(None)),
        ("fallback", Some(c)) => c
            .parse()
            .map(|c| UnusedPolicy::Fallback(Some(c)))
            .map_err(|_| format!("fallback choice `{c}` is not a positive integer")),
        ("penalty", None) => Ok(UnusedPolicy::Penalty(None)),
        ("penalty", Some(l)) => match l.parse::<f64>() {
            Ok(l) if l.is_finite() && l >= 0.0 => Ok(UnusedPolicy::Penalty(Some(l))),
            _ => Err(format!("penalty weight `{l}` is not a finite nonnegative number")),
        },
        _ => Err(format!("expected fallback[:C] or penalty[:L], got `{s}`")),
    }
}

#[derive(Args)]
struct EncodeArgs {
    /// binary, gray or custom:FILE
    #[arg(long, default_value = "binary", value_parser = parse_assignment)]
    assignment: AssignmentChoice,
    /// fallback[:C] (1-based choice, default the last) or penalty[:L]
    #[arg(long, default_value = "fallback", value_parser = parse_unused)]
    unused: UnusedPolicy,
    /// Keep pairwise marginals in the pairwise tables.
    #[arg(long)]
    no_center: bool,
}

impl EncodeArgs {
    fn options(&self) -> EncodeOptions {
        EncodeOptions {
            assignment: self.assignment.clone(),
            unused: self.unused,
            center: !self.no_center,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Exhaustive,
    Anneal,
}

#[derive(Args)]
struct AnnealArgs {
    /// Annealing restarts.
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    /// Proposals per restart [default: 10 * n * 1000]
    #[arg(long)]
    proposals: Option<usize>,
    /// Temperature factor per sweep of n proposals.
    #[arg(long, default_value_t = 0.999)]
    cooling: f64,
    /// Starting temperature [default: epsilon, or twice the mean coupling]
    #[arg(long)]
    t0: Option<f64>,
}

impl AnnealArgs {
    fn method(&self, m: SolveMethod) -> Method {
        match m {
            SolveMethod::Exhaustive => Method::Exhaustive,
            SolveMethod::Anneal => Method::Anneal(AnnealParams {
                restarts: self.restarts,
                proposals: self.proposals,
                cooling: self.cooling,
                initial_temperature: self.t0,
            }),
        }
    }
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "kmax")]
    k_max: usize,
    #[command(flatten)]
    encode: EncodeArgs,
    #[arg(long)]
    quadratize: bool,
    #[arg(long, value_enum)]
    solve: Option<SolveMethod>,
    #[command(flatten)]
    anneal: AnnealArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Descend on the full HUBO from the solver's answer.
    #[arg(long)]
    refine: bool,
    /// Exit with status 2 when the noise floor is not met.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 0.1)]
    weak_threshold: f64,
    #[arg(long, default_value_t = 0.1)]
    strong_threshold: f64,
    /// Exact HUBO (JSON).
    #[arg(long)]
    out_hubo: Option<PathBuf>,
    /// Truncated HUBO (JSON).
    #[arg(long)]
    out_truncated: Option<PathBuf>,
    #[arg(long)]
    out_spectrum: Option<PathBuf>,
    #[arg(long)]
    out_cert: Option<PathBuf>,
    #[arg(long)]
    out_qubo: Option<PathBuf>,
    /// Pipeline report; printed to stdout when absent.
    #[arg(long)]
    out_report: Option<PathBuf>,
    #[arg(long, env = "TBE_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// CFN-JSON input.
    #[arg(long, required_unless_present = "hubo", conflicts_with = "hubo")]
    input: Option<PathBuf>,
    /// HUBO-JSON input, in place of a network.
    #[arg(long)]
    hubo: Option<PathBuf>,
    #[arg(long = "kmax")]
    k_max: usize,
    #[command(flatten)]
    encode: EncodeArgs,
    /// Random starts for the descent-agreement estimate.
    #[arg(long, default_value_t = 256)]
    basin_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    hubo: PathBuf,
    /// Truncate before solving.
    #[arg(long = "kmax")]
    k_max: Option<usize>,
    #[arg(long)]
    quadratize: bool,
    #[arg(long, value_enum, default_value = "exhaustive")]
    solve: SolveMethod,
    #[command(flatten)]
    anneal: AnnealArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "TBE_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "TBE_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    encode: EncodeArgs,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-table derivative and tail-bound report (JSON).
    #[arg(long)]
    out_smoothness: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 32)]
    cardinality: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Compile(a) => {
            let cfg = PipelineConfig {
                input: a.input,
                k_max: a.k_max,
                encode: a.encode.options(),
                quadratize: a.quadratize,
                solve: a.solve.map(|m| a.anneal.method(m)),
                seed: a.seed,
                refine: a.refine,
                thresholds: NoiseFloorThresholds {
                    weak: a.weak_threshold,
                    strong: a.strong_threshold,
                },
                strict: a.strict,
                outputs: Outputs {
                    hubo: a.out_hubo,
                    truncated: a.out_truncated,
                    spectrum: a.out_spectrum,
                    certificate: a.out_cert,
                    qubo: a.out_qubo,
                    report: a.out_report,
                },
                threads: a.threads,
            };
            let outcome = pipeline::run_pipeline(&cfg)?;
            for w in &outcome.report.warnings {
                eprintln!("tbe: warning: {w}");
            }
            if cfg.outputs.report.is_none() {
                print!("{}", formats::to_json(&outcome.report));
            }
            Ok(outcome.exit_code)
        }
        Command::Verify(a) => {
            let input = match (a.input, a.hubo) {
                (Some(p), None) => VerifyInput::Cfn(p, a.encode.options()),
                (None, Some(p)) => VerifyInput::Hubo(p),
                _ => return Err(CliError::Usage("give exactly one of --input and --hubo".into())),
            };
            let cfg = VerifyConfig {
                input,
                k_max: a.k_max,
                basin_samples: a.basin_samples,
                seed: a.seed,
                out: a.out_report.clone(),
            };
            let (report, code) = pipeline::run_verify(&cfg)?;
            if a.out_report.is_none() {
                print!("{}", formats::to_json(&report));
            }
            for c in report.checks.iter().filter(|c| !c.ok()) {
                eprintln!("tbe: claim failed: {}", c.summary());
            }
            Ok(code)
        }
        Command::Solve(a) => {
            let cfg = SolveConfig {
                hubo: a.hubo,
                k_max: a.k_max,
                quadratize: a.quadratize,
                method: a.anneal.method(a.solve),
                seed: a.seed,
                threads: a.threads,
            };
            let r = pipeline::run_solve(&cfg)?;
            emit(&a.out, &formats::solve_to_json(&r))?;
            Ok(exit::OK)
        }
        Command::Ensemble(a) => {
            let cfg = EnsembleConfig {
                profile: a.profile,
                trials: a.trials,
                seed: a.seed,
                threads: a.threads,
            };
            let r = pipeline::run_ensemble(&cfg)?;
            emit(&a.out, &formats::to_json(&r))?;
            Ok(if r.passed { exit::OK } else { exit::FAILURE })
        }
        Command::Spectrum(a) => {
            let (csv, tables) = pipeline::run_spectrum(&a.input, &a.encode.options())?;
            emit(&a.out, &csv)?;
            if let Some(p) = &a.out_smoothness {
                write_file(p, &formats::to_json(&tables))?;
            }
            Ok(exit::OK)
        }
        Command::Demo(a) => {
            let cfn = pipeline::demo_cfn(a.cardinality, a.seed)?;
            emit(&a.out, &formats::cfn_to_json(&cfn))?;
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("tbe: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
