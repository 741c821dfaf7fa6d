//! `entest`: runs the paired estimator-vs-oracle experiments, bound
//! diagnostics and dataset export.
//!
//!   entest mean --setting 1 --n 500,1000,2000 --trials 50 --seed 7 --out s1.csv
//!   entest regression --d 20 --n 1000,2000 --trials 20 --out reg.csv
//!   entest diagnose --setting 1 --n 1000 --trials 2000 --out diag.json
//!   entest export --setting 1 --n 10 --out s1_n10.csv
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 I/O failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use entest::cli::{
    export_dataset, run_diagnose, run_mean_experiment, run_regression_experiment, write_csv,
    write_dataset_csv, write_json, ExperimentConfig, ExportKind, PsiConfig, DEFAULT_N_LIST,
    DEFAULT_REGRESSION_DIM,
};
use entest::datagen::{RngSeed, SettingKind};
use entest::diagnostics::DEFAULT_ENVELOPE;
use entest::TrimConfig;

#[derive(Parser, Debug)]
#[command(name = "entest", version, about = "Iterative trimming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// ITM vs Oracle Mean on a mean-estimation setting.
    Mean(MeanArgs),
    /// ITSM vs Oracle Least Squares on Gaussian designs.
    Regression(RegressionArgs),
    /// Monte-Carlo bound checks for a mean-estimation setting (JSON).
    Diagnose(DiagnoseArgs),
    /// Write one generated dataset as CSV plus a JSON metadata sidecar.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Comma-separated, strictly increasing sample sizes.
    #[arg(long = "n", value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.8)]
    alpha: f64,
    #[arg(long = "iters", default_value_t = 20)]
    iterations: usize,
    /// Repetitions per sample size.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "ENTEST_SEED", default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct MeanArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    setting: u8,
    /// Dimension for settings 3 and 4 (default 10).
    #[arg(long)]
    d: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Record wall-clock runtimes (output is then no longer reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct RegressionArgs {
    #[arg(long, default_value_t = DEFAULT_REGRESSION_DIM)]
    d: usize,
    /// Rescale rows to unit norm before fitting.
    #[arg(long)]
    normalize: bool,
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    setting: u8,
    #[arg(long)]
    d: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
    /// Envelope constant for the final-error check.
    #[arg(long, default_value_t = DEFAULT_ENVELOPE)]
    envelope: f64,
    #[arg(long, default_value_t = 10)]
    psi_n: usize,
    #[arg(long, default_value_t = 2)]
    psi_d: usize,
    #[arg(long, default_value_t = 45)]
    psi_trials: usize,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// 1-4 for the mean settings, or "regression".
    #[arg(long)]
    setting: String,
    #[arg(long)]
    d: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<entest::Error> for CliError {
    fn from(e: entest::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

fn io_err(path: Option<&Path>, e: io::Error) -> CliError {
    match path {
        Some(p) => CliError::Io(format!("{}: {e}", p.display())),
        None => CliError::Io(e.to_string()),
    }
}

fn with_output(
    path: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_err(Some(p), e))?;
            let mut w = BufWriter::new(file);
            write(&mut w).map_err(|e| io_err(Some(p), e))?;
            w.flush().map_err(|e| io_err(Some(p), e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w).map_err(|e| io_err(None, e))?;
            w.flush().map_err(|e| io_err(None, e))
        }
    }
}

fn experiment_config(
    common: &CommonArgs,
    default_trials: usize,
    timing: bool,
) -> Result<ExperimentConfig, CliError> {
    let config = ExperimentConfig {
        n_list: common
            .n_list
            .clone()
            .unwrap_or_else(|| DEFAULT_N_LIST.to_vec()),
        alpha: common.alpha,
        iterations: common.iterations,
        trials: common.trials.unwrap_or(default_trials),
        seed: RngSeed(common.seed),
        timing,
    };
    config.validate()?;
    let trim = config.trim_config()?;
    if trim.mean_regime().is_warning() {
        eprintln!(
            "warning: alpha = {} is below 4/5; the error guarantee does not cover it",
            config.alpha
        );
    }
    Ok(config)
}

fn setting_kind(index: u8) -> Result<SettingKind, CliError> {
    SettingKind::from_index(index).ok_or_else(|| CliError::Config(format!("unknown setting {index}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Mean(args) => {
            let kind = setting_kind(args.setting)?;
            let default_trials = match kind {
                SettingKind::S1 | SettingKind::S2 => 200,
                SettingKind::S3 | SettingKind::S4 => 20,
            };
            let config = experiment_config(&args.common, default_trials, args.timing)?;
            let rows = run_mean_experiment(kind, args.d, &config)?;
            with_output(args.common.out.as_deref(), |w| match args.format {
                Format::Csv => write_csv(&rows, w),
                Format::Json => write_json(&rows, w),
            })
        }
        Command::Regression(args) => {
            let config = experiment_config(&args.common, 20, args.timing)?;
            let rows = run_regression_experiment(args.d, args.normalize, &config)?;
            with_output(args.common.out.as_deref(), |w| match args.format {
                Format::Csv => write_csv(&rows, w),
                Format::Json => write_json(&rows, w),
            })
        }
        Command::Diagnose(args) => {
            let kind = setting_kind(args.setting)?;
            let mut common = args.common;
            if common.n_list.is_none() {
                common.n_list = Some(vec![1000]);
            }
            let config = experiment_config(&common, 2000, false)?;
            let psi = PsiConfig {
                n: args.psi_n,
                d: args.psi_d,
                trials: args.psi_trials,
            };
            let report = run_diagnose(kind, args.d, &config, args.envelope, &psi)?;
            with_output(common.out.as_deref(), |w| write_json(&report, w))
        }
        Command::Export(args) => {
            let kind = match args.setting.as_str() {
                "regression" => ExportKind::Regression,
                s => {
                    let idx: u8 = s
                        .parse()
                        .map_err(|_| CliError::Config(format!("unknown setting {s:?}")))?;
                    ExportKind::Mean(setting_kind(idx)?)
                }
            };
            let n = match args.common.n_list.as_deref() {
                Some([n]) => *n,
                _ => return Err(CliError::Config("export needs exactly one --n".into())),
            };
            TrimConfig::new(args.common.alpha, 1)?;
            let (data, meta) =
                export_dataset(kind, n, args.d, args.common.alpha, RngSeed(args.common.seed))?;
            let out = args.common.out.as_deref();
            with_output(out, |w| write_dataset_csv(&data, w))?;
            match out {
                Some(p) => {
                    let mut sidecar = p.as_os_str().to_owned();
                    sidecar.push(".meta.json");
                    let sidecar = PathBuf::from(sidecar);
                    with_output(Some(&sidecar), |w| write_json(&meta, w))
                }
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Config(msg) => eprintln!("error: {msg}"),
                CliError::Io(msg) => eprintln!("error: I/O failure: {msg}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
