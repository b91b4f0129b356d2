//! Level-adapted multi-level interpolation predictor.
//!
//! Compression walks the levels of a [`LevelPlan`] from the top down. Every
//! point is predicted from already reconstructed neighbours along one axis,
//! quantized against the bound of its level and immediately overwritten with
//! its reconstruction, so the decoder can replay the exact same sequence.

use std::collections::HashMap;

use crate::codec::{decode_indices, encode_indices};
use crate::error::{Error, Result};
use crate::grid::{DataGrid, Precision, Shape3};
use crate::plan::{anchor_indices, check_stride, for_each_level_point, LevelPlan, LevelPoint};
use crate::quantizer::{dequantize, Quantized, Quantizer};
use crate::stream::{CompressedStream, StreamHeader};
use crate::tuner::{level_error_bound, CompressorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InterpKind {
    Linear,
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DimOrder {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interpolator {
    pub kind: InterpKind,
    pub dim_order: DimOrder,
}

impl Default for Interpolator {
    fn default() -> Self {
        Interpolator::CANDIDATES[2]
    }
}

impl Interpolator {
    /// Candidates in selection order; earlier entries win ties.
    pub const CANDIDATES: [Interpolator; 4] = [
        Interpolator::new(InterpKind::Linear, DimOrder::Ascending),
        Interpolator::new(InterpKind::Linear, DimOrder::Descending),
        Interpolator::new(InterpKind::Cubic, DimOrder::Ascending),
        Interpolator::new(InterpKind::Cubic, DimOrder::Descending),
    ];

    pub const fn new(kind: InterpKind, dim_order: DimOrder) -> Self {
        Interpolator { kind, dim_order }
    }

    /// Distinct candidates for a grid of the given rank.
    pub fn candidates(ndims: usize) -> Vec<Interpolator> {
        Self::CANDIDATES
            .iter()
            .map(|i| i.normalized(ndims))
            .fold(Vec::new(), |mut acc, i| {
                if !acc.contains(&i) {
                    acc.push(i);
                }
                acc
            })
    }

    /// Dimension order carries no meaning in 1D; it is pinned to ascending.
    pub fn normalized(self, ndims: usize) -> Self {
        if ndims <= 1 {
            Interpolator::new(self.kind, DimOrder::Ascending)
        } else {
            self
        }
    }

    /// Stream code: bit 0 is the kind, bit 1 the dimension order.
    pub fn code(self) -> u8 {
        let kind = matches!(self.kind, InterpKind::Cubic) as u8;
        let order = matches!(self.dim_order, DimOrder::Descending) as u8;
        kind | (order << 1)
    }

    pub fn from_code(code: u8) -> Option<Self> {
        if code > 3 {
            return None;
        }
        let kind = if code & 1 == 0 {
            InterpKind::Linear
        } else {
            InterpKind::Cubic
        };
        let order = if code & 2 == 0 {
            DimOrder::Ascending
        } else {
            DimOrder::Descending
        };
        Some(Interpolator::new(kind, order))
    }
}

impl std::fmt::Display for Interpolator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            InterpKind::Linear => "linear",
            InterpKind::Cubic => "cubic",
        };
        let order = match self.dim_order {
            DimOrder::Ascending => "asc",
            DimOrder::Descending => "desc",
        };
        write!(f, "{kind}/{order}")
    }
}

/// Interpolator used at `level` (1-based); levels beyond the list reuse its
/// last entry.
pub fn interpolator_for_level(interps: &[Interpolator], level: u32) -> Interpolator {
    let i = (level as usize).min(interps.len()).saturating_sub(1);
    interps.get(i).copied().unwrap_or_default()
}

#[inline]
pub fn interp_linear(a: f64, b: f64) -> f64 {
    (a + b) * 0.5
}

/// Midpoint of samples at offsets -3h, -h, +h, +3h.
#[inline]
pub fn interp_cubic(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (-a + 9.0 * b + 9.0 * c - d) / 16.0
}

#[inline]
fn predict(recon: &[f64], shape: &Shape3, h: usize, p: LevelPoint, kind: InterpKind) -> f64 {
    let n = shape.extents[p.axis];
    let step = shape.strides[p.axis] * h;
    let left = recon[p.flat - step];
    if p.coord + h >= n {
        return left;
    }
    let right = recon[p.flat + step];
    if kind == InterpKind::Cubic && p.coord >= 3 * h && p.coord + 3 * h < n {
        interp_cubic(
            recon[p.flat - 3 * step],
            left,
            right,
            recon[p.flat + 3 * step],
        )
    } else {
        interp_linear(left, right)
    }
}

/// Walks one level, storing whatever `visit(flat, prediction)` returns as
/// the reconstruction of each point.
pub(crate) fn traverse_level(
    recon: &mut [f64],
    shape: &Shape3,
    level: u32,
    interp: Interpolator,
    mut visit: impl FnMut(usize, f64) -> f64,
) {
    let h = 1usize << (level - 1);
    for_each_level_point(shape, level, interp.dim_order, |p| {
        let pred = predict(recon, shape, h, p, interp.kind);
        recon[p.flat] = visit(p.flat, pred);
    });
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionWorkspace {
    pub recon: Vec<f64>,
    pub quant_indices: Vec<i32>,
    pub unpredictables: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LevelStats {
    pub points: usize,
    pub coded: usize,
    pub unpredictable: usize,
    /// Sum of |original - prediction| over the level.
    pub abs_error_sum: f64,
}

impl LevelStats {
    pub fn mean_abs_error(&self) -> f64 {
        if self.points == 0 {
            0.0
        } else {
            self.abs_error_sum / self.points as f64
        }
    }

    fn merge(&mut self, other: LevelStats) {
        self.points += other.points;
        self.coded += other.coded;
        self.unpredictable += other.unpredictable;
        self.abs_error_sum += other.abs_error_sum;
    }
}

impl PredictionWorkspace {
    /// Fresh workspace holding only the anchor values of `grid`.
    pub fn new(grid: &DataGrid, anchor_stride: usize) -> Self {
        let shape = Shape3::new(grid.dims());
        let mut recon = vec![0.0; grid.len()];
        for a in anchor_indices(&shape, anchor_stride) {
            recon[a] = grid.values()[a];
        }
        PredictionWorkspace {
            recon,
            quant_indices: Vec::new(),
            unpredictables: Vec::new(),
        }
    }
}

/// Predicts, quantizes and reconstructs every point of `level`.
pub fn predict_level(
    ws: &mut PredictionWorkspace,
    original: &DataGrid,
    plan: &LevelPlan,
    level: u32,
    interp: Interpolator,
    quantizer: &Quantizer,
) -> LevelStats {
    assert_eq!(plan.dims(), original.dims(), "plan and grid disagree");
    assert!(
        level >= 1 && level <= plan.max_level(),
        "level out of range"
    );
    let shape = Shape3::new(original.dims());
    predict_level_raw(
        ws,
        original.values(),
        original.precision(),
        &shape,
        level,
        interp,
        quantizer,
    )
}

pub(crate) fn predict_level_raw(
    ws: &mut PredictionWorkspace,
    original: &[f64],
    precision: Precision,
    shape: &Shape3,
    level: u32,
    interp: Interpolator,
    quantizer: &Quantizer,
) -> LevelStats {
    let mut stats = LevelStats::default();
    let PredictionWorkspace {
        recon,
        quant_indices,
        unpredictables,
    } = ws;
    traverse_level(recon, shape, level, interp, |flat, pred| {
        let value = original[flat];
        stats.points += 1;
        stats.abs_error_sum += (value - pred).abs();
        match quantizer.quantize_at(value, pred, precision) {
            Quantized::Code {
                index,
                reconstructed,
            } => {
                stats.coded += 1;
                quant_indices.push(index);
                reconstructed
            }
            Quantized::Unpredictable => {
                stats.unpredictable += 1;
                unpredictables.push((flat as u64, value));
                value
            }
        }
    });
    stats
}

/// Resolved parameters for one compression pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodeParams {
    pub anchor_stride: usize,
    pub error_bound: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Interpolators for levels 1, 2, ...
    pub interpolators: Vec<Interpolator>,
    pub radius: u32,
}

/// Output of the prediction stage for a whole grid.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub workspace: PredictionWorkspace,
    pub anchors: Vec<f64>,
    pub level_stats: Vec<(u32, LevelStats)>,
}

/// Runs the prediction stage over all levels of `grid`.
pub fn encode_grid(grid: &DataGrid, params: &EncodeParams) -> Result<Encoded> {
    let max_level = check_stride(params.anchor_stride)?;
    if !(params.error_bound > 0.0) || !params.error_bound.is_finite() {
        return Err(Error::InvalidParam(format!(
            "error bound must be positive, got {}",
            params.error_bound
        )));
    }
    let shape = Shape3::new(grid.dims());
    let anchor_idx = anchor_indices(&shape, params.anchor_stride);
    let anchors: Vec<f64> = anchor_idx.iter().map(|&a| grid.values()[a]).collect();
    let mut ws = PredictionWorkspace::new(grid, params.anchor_stride);
    ws.quant_indices.reserve(grid.len() - anchors.len());
    let mut level_stats = Vec::with_capacity(max_level as usize);
    for level in (1..=max_level).rev() {
        let eb = level_error_bound(params.error_bound, params.alpha, params.beta, level)?;
        let quantizer = Quantizer::with_radius(eb, params.radius);
        let interp = interpolator_for_level(&params.interpolators, level).normalized(grid.ndims());
        let stats = predict_level_raw(
            &mut ws,
            grid.values(),
            grid.precision(),
            &shape,
            level,
            interp,
            &quantizer,
        );
        level_stats.push((level, stats));
    }
    Ok(Encoded {
        workspace: ws,
        anchors,
        level_stats,
    })
}

/// Aggregated stats over all levels.
pub fn total_stats(stats: &[(u32, LevelStats)]) -> LevelStats {
    let mut total = LevelStats::default();
    for (_, s) in stats {
        total.merge(*s);
    }
    total
}

/// Compresses `grid` and also returns the compressor-side reconstruction.
pub fn compress_with_recon(
    grid: &DataGrid,
    config: &CompressorConfig,
) -> Result<(CompressedStream, DataGrid)> {
    let params = config.encode_params(grid)?;
    let max_level = check_stride(params.anchor_stride)?;
    let encoded = encode_grid(grid, &params)?;
    let interpolators = (1..=max_level)
        .map(|l| interpolator_for_level(&params.interpolators, l).normalized(grid.ndims()))
        .collect();
    let stream = CompressedStream {
        header: StreamHeader {
            precision: grid.precision(),
            dims: grid.dims().to_vec(),
            error_bound: params.error_bound,
            alpha: params.alpha,
            beta: params.beta,
            anchor_stride: params.anchor_stride,
            interpolators,
            codec: config.codec,
        },
        anchors: encoded.anchors,
        unpredictables: encoded.workspace.unpredictables,
        index_payload: encode_indices(&encoded.workspace.quant_indices, config.codec),
    };
    let recon = DataGrid::new(grid.dims(), grid.precision(), encoded.workspace.recon)?;
    Ok((stream, recon))
}

pub fn compress_grid(grid: &DataGrid, config: &CompressorConfig) -> Result<CompressedStream> {
    compress_with_recon(grid, config).map(|(s, _)| s)
}

pub fn decompress_grid(stream: &CompressedStream) -> Result<DataGrid> {
    let h = &stream.header;
    let max_level =
        check_stride(h.anchor_stride).map_err(|_| Error::corrupt("bad anchor stride"))?;
    let shape = Shape3::new(&h.dims);
    let n = shape.len();
    let anchor_idx = anchor_indices(&shape, h.anchor_stride);
    if anchor_idx.len() != stream.anchors.len() {
        return Err(Error::corrupt("anchor count does not match dims"));
    }
    let mut recon = vec![0.0; n];
    for (&a, &v) in anchor_idx.iter().zip(&stream.anchors) {
        recon[a] = v;
    }
    let mut unpred: HashMap<usize, f64> = HashMap::with_capacity(stream.unpredictables.len());
    for &(i, v) in &stream.unpredictables {
        if i >= n as u64 {
            return Err(Error::corrupt("unpredictable index out of range"));
        }
        unpred.insert(i as usize, v);
    }
    let indices = decode_indices(&stream.index_payload, n - anchor_idx.len())?;
    let mut next = indices.iter();
    let mut exhausted = false;
    for level in (1..=max_level).rev() {
        let eb = level_error_bound(h.error_bound, h.alpha, h.beta, level)
            .map_err(|_| Error::corrupt("bad level bound parameters"))?;
        let interp = interpolator_for_level(&h.interpolators, level).normalized(h.dims.len());
        traverse_level(&mut recon, &shape, level, interp, |flat, pred| {
            if let Some(&v) = unpred.get(&flat) {
                return v;
            }
            match next.next() {
                Some(&q) => h.precision.round(dequantize(q, pred, eb)),
                None => {
                    exhausted = true;
                    0.0
                }
            }
        });
        if exhausted {
            return Err(Error::corrupt("index codestream too short"));
        }
    }
    if next.next().is_some() {
        return Err(Error::corrupt("index codestream too long"));
    }
    DataGrid::new(&h.dims, h.precision, recon).map_err(|e| Error::corrupt(e.to_string()))
}

/// Parses and decompresses a serialized stream.
pub fn decompress_bytes(bytes: &[u8]) -> Result<DataGrid> {
    decompress_grid(&CompressedStream::from_bytes(bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::level_decompose;

    #[test]
    fn linear_midpoints() {
        assert_eq!(interp_linear(0.0, 2.0), 1.0);
        assert_eq!(interp_linear(5.0, 5.0), 5.0);
        assert_eq!(interp_linear(-1.0, 3.0), 1.0);
    }

    #[test]
    fn cubic_weights() {
        assert_eq!(interp_cubic(-3.0, -1.0, 1.0, 3.0), 0.0);
        assert_eq!(interp_cubic(-27.0, -1.0, 1.0, 27.0), 0.0);
        // (-1 + 18 + 36 - 8) / 16
        assert_eq!(interp_cubic(1.0, 2.0, 4.0, 8.0), 45.0 / 16.0);
    }

    #[test]
    fn cubic_exact_on_cubic_polynomials() {
        let f = |t: f64| 0.3 * t * t * t - 1.7 * t * t + 2.0 * t - 5.0;
        for &x in &[-4.0, 0.0, 2.5, 11.0] {
            for &h in &[0.5, 1.0, 4.0] {
                let p = interp_cubic(f(x - 3.0 * h), f(x - h), f(x + h), f(x + 3.0 * h));
                assert!(
                    (p - f(x)).abs() <= 1e-10 * f(x).abs().max(1.0),
                    "x={x} h={h}"
                );
            }
        }
    }

    #[test]
    fn interpolator_codes_round_trip() {
        for i in Interpolator::CANDIDATES {
            assert_eq!(Interpolator::from_code(i.code()), Some(i));
        }
        assert_eq!(Interpolator::from_code(4), None);
        assert_eq!(Interpolator::candidates(1).len(), 2);
        assert_eq!(Interpolator::candidates(3).len(), 4);
    }

    fn three_point(mid: f64) -> (DataGrid, LevelPlan, PredictionWorkspace) {
        let grid = DataGrid::new(&[3], Precision::Double, vec![0.0, mid, 2.0]).unwrap();
        let plan = level_decompose(&[3], 2).unwrap();
        let ws = PredictionWorkspace::new(&grid, 2);
        (grid, plan, ws)
    }

    #[test]
    fn exact_prediction_codes_zero() {
        let (grid, plan, mut ws) = three_point(1.0);
        let lin = Interpolator::CANDIDATES[0];
        let stats = predict_level(&mut ws, &grid, &plan, 1, lin, &Quantizer::new(0.5));
        assert_eq!(stats.coded, 1);
        assert_eq!(ws.quant_indices, vec![0]);
        assert_eq!(ws.recon[1], 1.0);
    }

    #[test]
    fn off_center_value_is_quantized() {
        let (grid, plan, mut ws) = three_point(1.6);
        let lin = Interpolator::CANDIDATES[0];
        predict_level(&mut ws, &grid, &plan, 1, lin, &Quantizer::new(0.5));
        // round(0.6 / 1.0) = 1, reconstruction 1.0 + 1.0 * 1
        assert_eq!(ws.quant_indices, vec![1]);
        assert_eq!(ws.recon[1], 2.0);
        assert!((ws.recon[1] - 1.6f64).abs() <= 0.5);
    }

    #[test]
    fn cubic_falls_back_near_boundary() {
        // [0, ?, 2]: only two neighbours, so cubic degrades to the midpoint.
        let (grid, plan, mut ws) = three_point(1.0);
        let cubic = Interpolator::CANDIDATES[2];
        predict_level(&mut ws, &grid, &plan, 1, cubic, &Quantizer::new(0.5));
        assert_eq!(ws.quant_indices, vec![0]);
    }

    #[test]
    fn single_neighbour_copies() {
        // dims [4], stride 2: index 3 has only index 2 to its left.
        let grid = DataGrid::new(&[4], Precision::Double, vec![0.0, 1.0, 2.0, 2.0]).unwrap();
        let plan = level_decompose(&[4], 2).unwrap();
        let mut ws = PredictionWorkspace::new(&grid, 2);
        let stats = predict_level(
            &mut ws,
            &grid,
            &plan,
            1,
            Interpolator::CANDIDATES[2],
            &Quantizer::new(0.1),
        );
        assert_eq!(stats.abs_error_sum, 0.0);
        assert_eq!(ws.quant_indices, vec![0, 0]);
    }

    #[test]
    fn workspace_predictions_only_read_reconstructed_points() {
        // Poison every non-anchor recon slot; a read of an unvisited point
        // would spread NaN into later predictions.
        let grid =
            DataGrid::from_fn(&[17, 9], Precision::Double, |i| (i[0] * i[1]) as f64).unwrap();
        let plan = level_decompose(&[17, 9], 8).unwrap();
        let mut ws = PredictionWorkspace::new(&grid, 8);
        let anchors: std::collections::HashSet<usize> = plan.anchors().iter().copied().collect();
        for (i, r) in ws.recon.iter_mut().enumerate() {
            if !anchors.contains(&i) {
                *r = f64::NAN;
            }
        }
        for interp in Interpolator::CANDIDATES {
            let mut w = ws.clone();
            for level in (1..=3).rev() {
                let s = predict_level(&mut w, &grid, &plan, level, interp, &Quantizer::new(0.01));
                assert!(s.abs_error_sum.is_finite(), "{interp} level {level}");
            }
            assert!(w.recon.iter().all(|v| v.is_finite()));
        }
    }
}
