mod commands;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qoz::{CodecId, ErrorBound, MetricTarget, Precision};

#[derive(Parser, Debug)]
#[command(
    name = "qoz",
    version,
    about = "Error-bounded lossy compression for raw floating-point fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compress one or more raw fields.
    Compress(CompressArgs),
    /// Decompress a stream back to a raw field.
    Decompress(DecompressArgs),
    /// Compare a field with its reconstruction.
    Eval(EvalArgs),
    /// Rate-distortion sweep over a list of error bounds.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct FieldArgs {
    /// Raw little-endian input file (repeatable).
    #[arg(short = 'i', long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Extents, slowest-varying first.
    #[arg(short = 'd', long = "dims", num_args = 1..=3, required = true)]
    pub dims: Vec<usize>,
    #[arg(short = 't', long = "type", value_enum, default_value = "f32")]
    pub precision: PrecisionArg,
}

#[derive(Args, Debug, Clone)]
pub struct TuningArgs {
    #[arg(short = 'm', long = "mode", value_enum, default_value = "rel")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "psnr")]
    pub target: TargetArg,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub anchor_stride: Option<usize>,
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long)]
    pub sample_rate: Option<f64>,
    /// 0 = Huffman only, 1 = Huffman followed by deflate.
    #[arg(long, default_value_t = 1)]
    pub codec: u8,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(short = 'e', long = "error-bound", required = true)]
    pub bound: f64,
    /// Output stream; defaults to `<input>.qoz`.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
    /// Also write the compressor-side reconstruction as raw data.
    #[arg(long)]
    pub dump_recon: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecompressArgs {
    #[arg(short = 'i', long = "input")]
    pub input: PathBuf,
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(short = 'i', long = "input")]
    pub original: PathBuf,
    #[arg(short = 'r', long = "recon")]
    pub recon: PathBuf,
    /// Extents of the original, slowest-varying first.
    #[arg(short = 'd', long = "dims", num_args = 1..=3, required = true)]
    pub dims: Vec<usize>,
    /// Extents of the reconstruction when they differ from `-d`.
    #[arg(long = "recon-dims", num_args = 1..=3)]
    pub recon_dims: Option<Vec<usize>>,
    #[arg(short = 't', long = "type", value_enum, default_value = "f32")]
    pub precision: PrecisionArg,
    #[arg(short = 'm', long = "mode", value_enum, default_value = "rel")]
    pub mode: ModeArg,
    /// Fail unless the maximum error is within this bound.
    #[arg(long)]
    pub check_eb: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(short = 'e', long = "error-bound", required = true)]
    pub bounds: Vec<f64>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum PrecisionArg {
    F32,
    F64,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::F32 => Precision::Single,
            PrecisionArg::F64 => Precision::Double,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ModeArg {
    Abs,
    Rel,
}

impl ModeArg {
    pub fn bound(self, value: f64) -> ErrorBound {
        match self {
            ModeArg::Abs => ErrorBound::Absolute(value),
            ModeArg::Rel => ErrorBound::Relative(value),
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum TargetArg {
    Cr,
    Psnr,
    Ssim,
    Ac,
}

impl From<TargetArg> for MetricTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Cr => MetricTarget::MaxCr,
            TargetArg::Psnr => MetricTarget::Psnr,
            TargetArg::Ssim => MetricTarget::Ssim,
            TargetArg::Ac => MetricTarget::Autocorrelation,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Corrupt(String),
    Invariant(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Corrupt(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Corrupt(m) if m.starts_with("corrupt stream") => write!(f, "{m}"),
            CliError::Corrupt(m) => write!(f, "corrupt stream: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

impl From<qoz::Error> for CliError {
    fn from(e: qoz::Error) -> Self {
        if e.is_corruption() {
            CliError::Corrupt(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

pub fn codec_from(id: u8) -> Result<CodecId, CliError> {
    CodecId::from_code(id).map_err(|_| CliError::Usage(format!("unknown codec id {id}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QOZ_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compress(a) => commands::compress(&a),
        Command::Decompress(a) => commands::decompress(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Sweep(a) => sweep::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qoz: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
