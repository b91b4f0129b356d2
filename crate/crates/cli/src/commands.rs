use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use qoz::tuner::resolve_config_with_report;
use qoz::{
    compress_with_recon, decompress_bytes, load_grid, max_abs_error, metrics, CompressorConfig,
    DataGrid, Precision, UserSettings,
};

use crate::{codec_from, CliError, CompressArgs, DecompressArgs, EvalArgs, ModeArg, TuningArgs};

pub fn read_grid(path: &Path, dims: &[usize], precision: Precision) -> Result<DataGrid, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    load_grid(&bytes, dims, precision)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn settings(tuning: &TuningArgs, bound: f64) -> Result<UserSettings, CliError> {
    let mut user = UserSettings::new(tuning.mode.bound(bound), tuning.target.into());
    user.alpha = tuning.alpha;
    user.beta = tuning.beta;
    user.anchor_stride = tuning.anchor_stride;
    user.block_size = tuning.block_size;
    user.sample_rate = tuning.sample_rate;
    user.codec = codec_from(tuning.codec)?;
    Ok(user)
}

/// Tunes and compresses, checking the bound on the compressor-side
/// reconstruction. Returns the stream bytes, the reconstruction, the resolved
/// config and the absolute bound.
pub fn compress_field(
    grid: &DataGrid,
    user: &UserSettings,
) -> Result<(Vec<u8>, DataGrid, CompressorConfig, f64), CliError> {
    let (config, report) = resolve_config_with_report(grid, user)?;
    let (stream, recon) = compress_with_recon(grid, &config)?;
    let err = max_abs_error(grid, &recon)?;
    if err > report.error_bound {
        return Err(CliError::Invariant(format!(
            "max error {err:e} exceeds bound {:e}",
            report.error_bound
        )));
    }
    Ok((stream.to_bytes(), recon, config, report.error_bound))
}

fn default_output(input: &Path) -> PathBuf {
    let mut name = input.as_os_str().to_owned();
    name.push(".qoz");
    PathBuf::from(name)
}

pub fn compress(args: &CompressArgs) -> Result<(), CliError> {
    let inputs = &args.field.inputs;
    if inputs.len() > 1 && (args.output.is_some() || args.dump_recon.is_some()) {
        return Err(CliError::Usage(
            "-o and --dump-recon take a single input; outputs default to <input>.qoz".into(),
        ));
    }
    let user = settings(&args.tuning, args.bound)?;
    for input in inputs {
        let grid = read_grid(input, &args.field.dims, args.field.precision.into())?;
        let start = Instant::now();
        let (bytes, recon, config, e) = compress_field(&grid, &user)?;
        let elapsed = start.elapsed().as_secs_f64();
        let output = args.output.clone().unwrap_or_else(|| default_output(input));
        write_file(&output, &bytes)?;
        if let Some(path) = &args.dump_recon {
            write_file(path, &recon.to_le_bytes())?;
        }
        let (cr, bit_rate) =
            metrics::rate_stats_raw(grid.len(), grid.precision().bytes(), bytes.len());
        info!("{} -> {}", input.display(), output.display());
        println!("field:             {}", input.display());
        println!("mode:              {}", config.target.describe());
        println!("error bound:       {e:e}");
        println!("compression ratio: {cr:.3}");
        println!("bit rate:          {bit_rate:.4}");
        println!("alpha, beta:       {}, {}", config.alpha, config.beta);
        let interps: Vec<String> = config
            .interpolators
            .iter()
            .enumerate()
            .map(|(l, i)| format!("L{}={}", l + 1, i.normalized(grid.ndims())))
            .collect();
        println!("interpolators:     {}", interps.join(" "));
        println!("elapsed:           {elapsed:.3} s");
        println!("output:            {}", output.display());
    }
    Ok(())
}

pub fn decompress(args: &DecompressArgs) -> Result<(), CliError> {
    let bytes = fs::read(&args.input)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.input.display())))?;
    let start = Instant::now();
    let grid = decompress_bytes(&bytes)?;
    write_file(&args.output, &grid.to_le_bytes())?;
    println!(
        "decompressed {:?} {} points in {:.3} s",
        grid.dims(),
        grid.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn fmt_metric(v: Result<f64, qoz::Error>) -> String {
    match v {
        Ok(v) if v.is_infinite() => "inf".into(),
        Ok(v) => format!("{v:.6}"),
        Err(_) => "undefined".into(),
    }
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let precision = args.precision.into();
    let x = read_grid(&args.original, &args.dims, precision)?;
    let y = read_grid(
        &args.recon,
        args.recon_dims.as_deref().unwrap_or(&args.dims),
        precision,
    )?;
    let err = max_abs_error(&x, &y)?;
    println!("max abs error: {err:e}");
    println!("psnr:          {}", fmt_metric(qoz::psnr(&x, &y)));
    println!("ssim:          {}", fmt_metric(qoz::ssim(&x, &y)));
    let ac = if x.len() > 1 {
        fmt_metric(qoz::error_autocorrelation(&x, &y, 1))
    } else {
        "undefined".into()
    };
    println!("ac lag 1:      {ac}");
    if let Some(bound) = args.check_eb {
        let abs = match args.mode {
            ModeArg::Abs => bound,
            ModeArg::Rel => bound * x.value_range().range,
        };
        if err <= abs {
            println!("bound check:   PASS ({err:e} <= {abs:e})");
        } else {
            println!("bound check:   FAIL ({err:e} > {abs:e})");
            return Err(CliError::Invariant(format!(
                "max error {err:e} exceeds {abs:e}"
            )));
        }
    }
    Ok(())
}
