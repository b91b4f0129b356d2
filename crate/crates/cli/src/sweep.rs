use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::warn;
use qoz::{decompress_bytes, metrics, DataGrid};

use crate::commands::{compress_field, read_grid, settings};
use crate::{CliError, SweepArgs};

pub const HEADER: [&str; 10] = [
    "field",
    "eb",
    "bit_rate",
    "compression_ratio",
    "psnr",
    "ssim",
    "ac_lag1",
    "compress_seconds",
    "decompress_seconds",
    "status",
];

struct Row {
    eb: f64,
    bit_rate: f64,
    cr: f64,
    psnr: f64,
    ssim: f64,
    ac: f64,
    compress_s: f64,
    decompress_s: f64,
    status: String,
}

impl Row {
    fn failed(eb: f64, msg: String) -> Self {
        Row {
            eb,
            bit_rate: f64::NAN,
            cr: f64::NAN,
            psnr: f64::NAN,
            ssim: f64::NAN,
            ac: f64::NAN,
            compress_s: 0.0,
            decompress_s: 0.0,
            status: format!("error: {msg}"),
        }
    }

    fn record(&self, field: &str) -> Vec<String> {
        vec![
            field.to_string(),
            self.eb.to_string(),
            self.bit_rate.to_string(),
            self.cr.to_string(),
            self.psnr.to_string(),
            self.ssim.to_string(),
            self.ac.to_string(),
            format!("{:.6}", self.compress_s),
            format!("{:.6}", self.decompress_s),
            self.status.clone(),
        ]
    }
}

fn measure(grid: &DataGrid, args: &SweepArgs, eb: f64) -> Result<Row, CliError> {
    let user = settings(&args.tuning, eb)?;
    let start = Instant::now();
    let (bytes, _, _, _) = compress_field(grid, &user)?;
    let compress_s = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let back = decompress_bytes(&bytes)?;
    let decompress_s = start.elapsed().as_secs_f64();
    let report = metrics::report(grid, &back, bytes.len())?;
    Ok(Row {
        eb,
        bit_rate: report.bit_rate,
        cr: report.compression_ratio,
        psnr: report.psnr,
        ssim: report.ssim,
        ac: report.ac_lag1,
        compress_s,
        decompress_s,
        status: "ok".into(),
    })
}

fn sweep_field(grid: &DataGrid, args: &SweepArgs, bounds: &[f64]) -> Vec<Row> {
    let mut rows: Vec<Row> = bounds
        .iter()
        .map(|&eb| measure(grid, args, eb).unwrap_or_else(|e| Row::failed(eb, e.to_string())))
        .collect();
    // Rows run from the loosest bound to the tightest; bit rate should not drop.
    let mut prev: Option<f64> = None;
    for row in &mut rows {
        if row.bit_rate.is_nan() {
            continue;
        }
        if prev.is_some_and(|p| row.bit_rate < p) {
            row.status = "non-monotonic".into();
        }
        prev = Some(row.bit_rate);
    }
    rows
}

pub fn run(args: &SweepArgs) -> Result<(), CliError> {
    let mut bounds = args.bounds.clone();
    if bounds.iter().any(|b| !b.is_finite()) {
        return Err(CliError::Usage("error bounds must be finite".into()));
    }
    bounds.sort_by(|a, b| b.total_cmp(a));
    bounds.dedup();

    let out: Box<dyn Write> = match &args.csv {
        Some(path) => Box::new(
            std::fs::File::create(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    let mut csv = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Usage(format!("writing csv: {e}"));
    csv.write_record(HEADER).map_err(io)?;
    for input in &args.field.inputs {
        let grid = read_grid(input, &args.field.dims, args.field.precision.into())?;
        let name = Path::new(input).display().to_string();
        for row in sweep_field(&grid, args, &bounds) {
            if row.status != "ok" {
                warn!("{name} eb {}: {}", row.eb, row.status);
            }
            csv.write_record(row.record(&name)).map_err(io)?;
        }
    }
    csv.flush()
        .map_err(|e| CliError::Usage(format!("writing csv: {e}")))?;
    Ok(())
}
