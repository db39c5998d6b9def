//! `cphom` command line: decompose tensors from files, synthesize noisy
//! test problems, verify factorizations, and run noise-sweep experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cphom::pipeline::{
    decompose, match_components, synthesize, DecomposeRequest, RankSpec,
};
use cphom::tensor::cp_evaluate_matrices;
use cphom::{FactorSet, TrackerConfig};
use cphom_cli::experiment::{parse_shape, render_csv, run_sweep, SweepSpec};
use cphom_cli::formats;
use cphom_cli::report;
use cphom_cli::{exit_code_for, exit_codes};

#[derive(Parser)]
#[command(
    name = "cphom",
    version,
    about = "CP decomposition of unbalanced tensors by homotopy continuation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a tensor file into factor matrices
    Decompose {
        /// Input tensor file
        #[arg(long)]
        input: PathBuf,
        /// Target rank, or `auto` to detect it from the singular spectrum
        #[arg(long, default_value = "auto")]
        rank: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative singular-value threshold for auto rank detection
        #[arg(long, default_value_t = 1e-6)]
        trunc_tol: f64,
        /// Output factor file
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        report: ReportFormat,
        #[arg(long, default_value_t = 0.05)]
        initial_step: f64,
        #[arg(long, default_value_t = 1e-7)]
        min_step: f64,
        #[arg(long, default_value_t = 0.2)]
        max_step: f64,
        #[arg(long, default_value_t = 1e-10)]
        newton_tol: f64,
        #[arg(long, default_value_t = 5)]
        newton_max_iters: usize,
        #[arg(long, default_value_t = 1e8)]
        divergence_norm: f64,
        /// Residual target of the endpoint polish at t = 1
        #[arg(long, default_value_t = 1e-12)]
        refine_tol: f64,
        /// Imaginary-part tolerance for classifying real solutions
        #[arg(long, default_value_t = 1e-8)]
        reality_tol: f64,
        /// Distance below which two solutions are considered identical
        #[arg(long, default_value_t = 1e-6)]
        cluster_tol: f64,
    },
    /// Generate a noisy rank-R tensor and its ground-truth factors
    Synthesize {
        /// Mode dimensions, e.g. --dims 3 3 6
        #[arg(long, num_args = 2..=4, required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        rank: usize,
        /// Noise level theta; the noise tensor has Frobenius norm theta
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output_tensor: PathBuf,
        #[arg(long)]
        output_factors: PathBuf,
        /// Permit ranks beyond the solvable regime (for experiments)
        #[arg(long, default_value_t = false)]
        allow_out_of_regime: bool,
    },
    /// Report the relative error of a factor file against a tensor file
    Verify {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        factors: PathBuf,
        /// Optional ground-truth factor file for component matching
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Noise sweep over seeded synthetic tensors, written as CSV
    Experiment {
        /// Problem shape such as 3x3x6r4 or 3x3x4x30r28
        #[arg(long)]
        shape: String,
        /// Comma-separated noise levels
        #[arg(long, value_delimiter = ',', required = true)]
        noise_levels: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Decompose {
            input,
            rank,
            seed,
            trunc_tol,
            output,
            report,
            initial_step,
            min_step,
            max_step,
            newton_tol,
            newton_max_iters,
            divergence_norm,
            refine_tol,
            reality_tol,
            cluster_tol,
        } => {
            let tracker = TrackerConfig {
                initial_step,
                min_step,
                max_step,
                newton_tol,
                newton_max_iters,
                divergence_norm,
                t_end_refine_tol: refine_tol,
                ..TrackerConfig::from_seed(seed)
            };
            cmd_decompose(
                &input, &rank, seed, trunc_tol, tracker, reality_tol, cluster_tol, &output,
                report,
            )
        }
        Command::Synthesize {
            dims,
            rank,
            noise,
            seed,
            output_tensor,
            output_factors,
            allow_out_of_regime,
        } => cmd_synthesize(
            &dims,
            rank,
            noise,
            seed,
            &output_tensor,
            &output_factors,
            allow_out_of_regime,
        ),
        Command::Verify {
            tensor,
            factors,
            truth,
            tol,
        } => cmd_verify(&tensor, &factors, truth.as_deref(), tol),
        Command::Experiment {
            shape,
            noise_levels,
            trials,
            seed,
            output,
        } => cmd_experiment(&shape, &noise_levels, trials, seed, &output),
    };
    ExitCode::from(code)
}

#[allow(clippy::too_many_arguments)]
fn cmd_decompose(
    input: &Path,
    rank: &str,
    seed: u64,
    trunc_tol: f64,
    tracker: TrackerConfig,
    reality_tol: f64,
    cluster_tol: f64,
    output: &Path,
    format: ReportFormat,
) -> u8 {
    let rank_spec = match rank {
        "auto" => RankSpec::Auto,
        other => match other.parse::<usize>() {
            Ok(r) => RankSpec::Fixed(r),
            Err(_) => {
                eprintln!("error: --rank must be `auto` or a positive integer, got `{other}`");
                return exit_codes::INVALID_INPUT;
            }
        },
    };
    let tensor = match formats::read_tensor(input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error reading {}: {e}", input.display());
            return exit_codes::INVALID_INPUT;
        }
    };
    let req = DecomposeRequest {
        tensor,
        rank: rank_spec,
        seed,
        trunc_tol,
        tracker,
        reality_tol,
        cluster_tol,
    };
    let rep = match decompose(&req) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    if let Err(e) = formats::write_factors(output, &rep.factors) {
        eprintln!("error writing {}: {e}", output.display());
        return exit_codes::INVALID_INPUT;
    }
    match format {
        ReportFormat::Text => print!("{}", report::render_text(&rep)),
        ReportFormat::Json => println!("{}", report::render_json(&rep)),
    }
    exit_codes::OK
}

fn cmd_synthesize(
    dims: &[usize],
    rank: usize,
    noise: f64,
    seed: u64,
    output_tensor: &Path,
    output_factors: &Path,
    allow_out_of_regime: bool,
) -> u8 {
    let (tensor, truth) = match synthesize(dims, rank, noise, seed, allow_out_of_regime) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    if let Err(e) = formats::write_tensor(output_tensor, &tensor) {
        eprintln!("error writing {}: {e}", output_tensor.display());
        return exit_codes::INVALID_INPUT;
    }
    if let Err(e) = formats::write_factors(output_factors, &truth) {
        eprintln!("error writing {}: {e}", output_factors.display());
        return exit_codes::INVALID_INPUT;
    }
    exit_codes::OK
}

fn cmd_verify(tensor: &Path, factors: &Path, truth: Option<&Path>, tol: f64) -> u8 {
    let t = match formats::read_tensor(tensor) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error reading {}: {e}", tensor.display());
            return exit_codes::INVALID_INPUT;
        }
    };
    // Raw matrices here: verify must also diagnose degenerate factor files
    // (zero columns) that the strict FactorSet type rejects.
    let raw = match formats::read_factor_matrices(factors) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error reading {}: {e}", factors.display());
            return exit_codes::INVALID_INPUT;
        }
    };
    let err = match cp_evaluate_matrices(&raw) {
        Ok(rebuilt) => {
            if raw.iter().map(|m| m.nrows()).collect::<Vec<_>>() != t.dims() {
                eprintln!("error: factor dims do not match tensor dims");
                return exit_codes::INVALID_INPUT;
            }
            let denom = t.frobenius_norm();
            if denom == 0.0 {
                eprintln!("error: tensor is identically zero");
                return exit_codes::INVALID_INPUT;
            }
            t.sub(&rebuilt).expect("dims checked").frobenius_norm() / denom
        }
        Err(e) => {
            eprintln!("error: {e}");
            return exit_codes::INVALID_INPUT;
        }
    };
    println!("relative_error {err:.14e}");

    if let Some(truth_path) = truth {
        let f = match FactorSet::new(raw) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_codes::INVALID_INPUT;
            }
        };
        let truth_factors = match formats::read_factors(truth_path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error reading {}: {e}", truth_path.display());
                return exit_codes::INVALID_INPUT;
            }
        };
        let m = match match_components(&f, &truth_factors) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_codes::INVALID_INPUT;
            }
        };
        println!("component matched_truth error");
        for (i, (&p, &e)) in m.permutation.iter().zip(&m.component_errors).enumerate() {
            println!("{i:<9} {p:<13} {e:.6e}");
        }
        println!("max_component_error {:.6e}", m.max_error);
    }

    if err <= tol {
        exit_codes::OK
    } else {
        exit_codes::VERIFY_FAILED
    }
}

fn cmd_experiment(shape: &str, noise_levels: &[f64], trials: u64, seed: u64, output: &Path) -> u8 {
    let (dims, rank) = match parse_shape(shape) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("error: {msg}");
            return exit_codes::INVALID_INPUT;
        }
    };
    let spec = SweepSpec {
        dims,
        rank,
        noise_levels: noise_levels.to_vec(),
        trials,
        seed,
    };
    let result = run_sweep(&spec);
    let csv = render_csv(&result);
    if let Err(e) = std::fs::write(output, csv) {
        eprintln!("error writing {}: {e}", output.display());
        return exit_codes::INVALID_INPUT;
    }
    for s in &result.summaries {
        let med = s
            .median_error
            .map_or("n/a".to_string(), |v| format!("{v:.3e}"));
        println!(
            "theta {:e}: median relative error {med}, failures {}",
            s.theta, s.failures
        );
    }
    exit_codes::OK
}
