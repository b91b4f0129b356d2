//! Distortion and rate metrics for a grid and its reconstruction.

use crate::error::{Error, Result};
use crate::grid::{DataGrid, Shape3, ValueRange};
use crate::stream::CompressedStream;

/// Edge length of the non-overlapping SSIM windows.
pub const SSIM_WINDOW: usize = 8;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricTarget {
    /// Maximize compression ratio.
    MaxCr,
    Psnr,
    Ssim,
    /// Minimize |lag-1 autocorrelation| of the errors.
    Autocorrelation,
}

impl MetricTarget {
    pub fn describe(self) -> &'static str {
        match self {
            MetricTarget::MaxCr => "maximizing compression ratio",
            MetricTarget::Psnr => "PSNR preferred",
            MetricTarget::Ssim => "SSIM preferred",
            MetricTarget::Autocorrelation => "autocorrelation preferred",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub max_abs_error: f64,
    pub mse: f64,
    /// `+inf` when the reconstruction is exact; NaN when undefined.
    pub psnr: f64,
    /// NaN when undefined.
    pub ssim: f64,
    pub ac_lag1: f64,
    pub compression_ratio: f64,
    pub bit_rate: f64,
}

fn check_dims(x: &DataGrid, y: &DataGrid) -> Result<()> {
    if x.dims() != y.dims() {
        return Err(Error::DimMismatch {
            left: x.dims().to_vec(),
            right: y.dims().to_vec(),
        });
    }
    Ok(())
}

pub fn max_abs_error(x: &DataGrid, y: &DataGrid) -> Result<f64> {
    check_dims(x, y)?;
    Ok(x.values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

pub fn mse(x: &DataGrid, y: &DataGrid) -> Result<f64> {
    check_dims(x, y)?;
    Ok(mse_slices(x.values(), y.values()))
}

pub(crate) fn mse_slices(x: &[f64], y: &[f64]) -> f64 {
    let sum: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    sum / x.len() as f64
}

/// PSNR from a value range and an MSE; `+inf` for zero MSE.
pub fn psnr_from_mse(vrange: f64, mse: f64) -> Result<f64> {
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    if vrange == 0.0 {
        return Err(Error::Undefined("PSNR of a constant field"));
    }
    Ok(20.0 * (vrange / mse.sqrt()).log10())
}

pub fn psnr(x: &DataGrid, y: &DataGrid) -> Result<f64> {
    let m = mse(x, y)?;
    psnr_from_mse(x.value_range().range, m)
}

/// SSIM with stabilizers scaled by the value range of `x`.
pub fn ssim(x: &DataGrid, y: &DataGrid) -> Result<f64> {
    check_dims(x, y)?;
    let vrange = x.value_range().range;
    if vrange == 0.0 {
        return if x.values() == y.values() {
            Ok(1.0)
        } else {
            Err(Error::Undefined("SSIM against a constant field"))
        };
    }
    Ok(ssim_with_range(x, y, vrange)?.0)
}

/// SSIM with stabilizers scaled by a caller-chosen range. Returns the mean
/// and the number of windows averaged.
pub fn ssim_with_range(x: &DataGrid, y: &DataGrid, vrange: f64) -> Result<(f64, usize)> {
    check_dims(x, y)?;
    let c1 = (SSIM_K1 * vrange).powi(2);
    let c2 = (SSIM_K2 * vrange).powi(2);
    let shape = Shape3::new(x.dims());
    let [n0, n1, n2] = shape.extents;
    let (xv, yv) = (x.values(), y.values());
    let mut total = 0.0;
    let mut windows = 0usize;
    for w0 in (0..n0).step_by(SSIM_WINDOW) {
        for w1 in (0..n1).step_by(SSIM_WINDOW) {
            for w2 in (0..n2).step_by(SSIM_WINDOW) {
                let e0 = (w0 + SSIM_WINDOW).min(n0);
                let e1 = (w1 + SSIM_WINDOW).min(n1);
                let e2 = (w2 + SSIM_WINDOW).min(n2);
                let window = Window {
                    lo: [w0, w1, w2],
                    hi: [e0, e1, e2],
                };
                total += window.ssim(&shape, xv, yv, c1, c2);
                windows += 1;
            }
        }
    }
    Ok((total / windows as f64, windows))
}

struct Window {
    lo: [usize; 3],
    hi: [usize; 3],
}

impl Window {
    fn for_each(&self, shape: &Shape3, mut f: impl FnMut(usize)) {
        for i in self.lo[0]..self.hi[0] {
            for j in self.lo[1]..self.hi[1] {
                let row = shape.flat([i, j, 0]);
                for k in self.lo[2]..self.hi[2] {
                    f(row + k);
                }
            }
        }
    }

    /// Two-pass window statistics (population variance and covariance).
    fn ssim(&self, shape: &Shape3, x: &[f64], y: &[f64], c1: f64, c2: f64) -> f64 {
        let (mut n, mut sx, mut sy) = (0.0, 0.0, 0.0);
        self.for_each(shape, |p| {
            n += 1.0;
            sx += x[p];
            sy += y[p];
        });
        let (mx, my) = (sx / n, sy / n);
        let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
        self.for_each(shape, |p| {
            let (dx, dy) = (x[p] - mx, y[p] - my);
            vx += dx * dx;
            vy += dy * dy;
            cov += dx * dy;
        });
        let (vx, vy, cov) = (vx / n, vy / n, cov / n);
        ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
    }
}

/// Lag-`lag` autocorrelation of the error series `x - y` in flat order.
pub fn error_autocorrelation(x: &DataGrid, y: &DataGrid, lag: usize) -> Result<f64> {
    check_dims(x, y)?;
    let errors: Vec<f64> = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| a - b)
        .collect();
    autocorrelation(&errors, lag)
}

/// Stationary-mean autocorrelation estimator; zero for a constant series.
pub fn autocorrelation(series: &[f64], lag: usize) -> Result<f64> {
    let n = series.len();
    if lag == 0 || lag >= n {
        return Err(Error::LagTooLarge { lag, points: n });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return Ok(0.0);
    }
    let cov = series
        .iter()
        .zip(&series[lag..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum::<f64>()
        / (n - lag) as f64;
    Ok(cov / var)
}

/// Compression ratio and bit rate for a stream of `stream_bytes` bytes.
pub fn rate_stats_raw(points: usize, precision_bytes: usize, stream_bytes: usize) -> (f64, f64) {
    let cr = (points * precision_bytes) as f64 / stream_bytes as f64;
    let bit_rate = 8.0 * stream_bytes as f64 / points as f64;
    (cr, bit_rate)
}

pub fn rate_stats(stream: &CompressedStream, grid: &DataGrid) -> (f64, f64) {
    rate_stats_raw(grid.len(), grid.precision().bytes(), stream.byte_len())
}

/// Full report; undefined metrics come back as NaN.
pub fn report(x: &DataGrid, y: &DataGrid, stream_bytes: usize) -> Result<MetricReport> {
    check_dims(x, y)?;
    let m = mse(x, y)?;
    let vr: ValueRange = x.value_range();
    let (compression_ratio, bit_rate) =
        rate_stats_raw(x.len(), x.precision().bytes(), stream_bytes.max(1));
    let ac_lag1 = if x.len() > 1 {
        error_autocorrelation(x, y, 1)?
    } else {
        0.0
    };
    Ok(MetricReport {
        max_abs_error: max_abs_error(x, y)?,
        mse: m,
        psnr: psnr_from_mse(vr.range, m).unwrap_or(f64::NAN),
        ssim: ssim(x, y).unwrap_or(f64::NAN),
        ac_lag1,
        compression_ratio,
        bit_rate,
    })
}
