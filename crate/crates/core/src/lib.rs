//! Error-bounded lossy compression for regular floating-point grids.
//!
//! Values are predicted by multilevel spline interpolation, the prediction
//! residuals are quantized against a per-level error bound and entropy
//! coded. Interpolators and level bounds are tuned online on sampled blocks
//! for a chosen quality target.
//!
//! ```
//! use qoz::{compress_grid, decompress_bytes, CompressorConfig, DataGrid, ErrorBound, Precision};
//!
//! let grid = DataGrid::from_fn(&[32, 32], Precision::Single, |i| (i[0] as f64 * 0.2).sin() + i[1] as f64)
//!     .unwrap();
//! let config = CompressorConfig::fixed(ErrorBound::Absolute(1e-3), 2);
//! let bytes = compress_grid(&grid, &config).unwrap().to_bytes();
//! let back = decompress_bytes(&bytes).unwrap();
//! assert!(qoz::max_abs_error(&grid, &back).unwrap() <= 1e-3);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codec;
pub mod error;
pub mod grid;
pub mod huffman;
pub mod metrics;
pub mod plan;
pub mod predictor;
pub mod quantizer;
pub mod sampler;
pub mod stream;
pub mod tuner;

pub use codec::{decode_indices, encode_indices, CodecId};
pub use error::{Error, Result};
pub use grid::{extract_block, load_grid, value_range, DataGrid, Precision, ValueRange};
pub use metrics::{
    error_autocorrelation, max_abs_error, mse, psnr, rate_stats, report, ssim, MetricReport,
    MetricTarget,
};
pub use plan::{level_decompose, level_traversal, LevelPlan};
pub use predictor::{
    compress_grid, compress_with_recon, decompress_bytes, decompress_grid, interp_cubic,
    interp_linear, predict_level, DimOrder, InterpKind, Interpolator, PredictionWorkspace,
};
pub use quantizer::{dequantize, quantize, Quantized, Quantizer};
pub use sampler::{plan_sampling, sample_blocks, SampleSet, SampleSpec};
pub use stream::{deserialize_stream, serialize_stream, CompressedStream, StreamHeader};
pub use tuner::{
    compare_solutions, level_error_bound, resolve_config, resolve_config_with_report,
    select_interpolators, trial_compress, tune_parameters, CompressorConfig, ErrorBound,
    TrialResult, UserSettings, Winner,
};
