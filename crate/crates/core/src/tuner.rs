//! Online parameter tuning on sampled blocks.
//!
//! Tuning runs in two stages. First a best-fit interpolator is chosen per
//! level by mean absolute prediction error. Then every `(alpha, beta)` pair
//! of a fixed candidate grid is trial-compressed and the pairs are reduced
//! by a sequential tournament that compares `(bit rate, metric)` points.

use std::collections::HashMap;

use log::debug;

use crate::codec::{encode_indices, CodecId};
use crate::error::{Error, Result};
use crate::grid::{DataGrid, Shape3, ValueRange};
use crate::metrics::{autocorrelation, psnr_from_mse, ssim_with_range, MetricTarget};
use crate::predictor::{
    encode_grid, predict_level_raw, EncodeParams, Interpolator, PredictionWorkspace,
};
use crate::quantizer::{Quantizer, DEFAULT_RADIUS};
use crate::sampler::{plan_sampling, sample_blocks, SampleSet, SampleSpec};

pub const ALPHA_CANDIDATES: [f64; 5] = [1.0, 1.25, 1.5, 1.75, 2.0];
pub const BETA_CANDIDATES: [f64; 4] = [1.5, 2.0, 3.0, 4.0];

/// Bound factors for the extra trial in the two ambiguous comparison cases.
pub const RETRIAL_TIGHTER: f64 = 0.8;
pub const RETRIAL_LOOSER: f64 = 1.2;

/// Finite stand-in for an infinite PSNR during comparisons.
pub const PSNR_CAP: f64 = 1000.0;

/// Absolute bound used for a range-relative request on a constant grid. It
/// is small enough that any inexact prediction is stored verbatim.
pub const CONSTANT_FIELD_BOUND: f64 = f64::MIN_POSITIVE;

/// All `(alpha, beta)` pairs, alpha-major, both ascending.
pub fn candidate_pairs() -> Vec<(f64, f64)> {
    ALPHA_CANDIDATES
        .iter()
        .flat_map(|&a| BETA_CANDIDATES.iter().map(move |&b| (a, b)))
        .collect()
}

/// Error bound of interpolation level `level`: `e / min(alpha^(level-1), beta)`.
pub fn level_error_bound(e: f64, alpha: f64, beta: f64, level: u32) -> Result<f64> {
    if !(alpha >= 1.0) || !(beta >= 1.0) {
        return Err(Error::InvalidParam(format!(
            "alpha and beta must be >= 1 (got {alpha}, {beta})"
        )));
    }
    if level == 0 {
        return Err(Error::InvalidParam("levels start at 1".into()));
    }
    Ok(e / alpha.powi(level as i32 - 1).min(beta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorBound {
    Absolute(f64),
    /// Fraction of the value range.
    Relative(f64),
}

impl ErrorBound {
    /// Absolute bound for a grid with the given range. A relative bound on a
    /// constant grid is a [`Error::ZeroRange`].
    pub fn absolute(&self, range: &ValueRange) -> Result<f64> {
        let e = match *self {
            ErrorBound::Absolute(e) => e,
            ErrorBound::Relative(eps) => {
                if !(eps > 0.0) || !eps.is_finite() {
                    return Err(Error::InvalidParam(format!("relative bound {eps}")));
                }
                if range.is_constant() {
                    return Err(Error::ZeroRange);
                }
                eps * range.range
            }
        };
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::InvalidParam(format!(
                "error bound {e} must be positive"
            )));
        }
        Ok(e)
    }

    /// Like [`ErrorBound::absolute`] but total: constant grids get
    /// [`CONSTANT_FIELD_BOUND`].
    pub fn resolve(&self, range: &ValueRange) -> Result<f64> {
        match self.absolute(range) {
            Err(Error::ZeroRange) => Ok(CONSTANT_FIELD_BOUND),
            other => other,
        }
    }
}

/// Per-rank defaults for stride and sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defaults {
    pub anchor_stride: usize,
    pub block_size: usize,
    pub sample_rate: f64,
}

pub fn defaults_for(ndims: usize) -> Defaults {
    match ndims {
        1 => Defaults {
            anchor_stride: 256,
            block_size: 256,
            sample_rate: 0.01,
        },
        2 => Defaults {
            anchor_stride: 64,
            block_size: 64,
            sample_rate: 0.01,
        },
        _ => Defaults {
            anchor_stride: 32,
            block_size: 16,
            sample_rate: 0.005,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressorConfig {
    pub error_bound: ErrorBound,
    pub alpha: f64,
    pub beta: f64,
    /// Interpolators for levels 1, 2, ...; higher levels reuse the last.
    pub interpolators: Vec<Interpolator>,
    pub anchor_stride: usize,
    pub target: MetricTarget,
    /// `None` when the whole grid served as the sample.
    pub sampling: Option<SampleSpec>,
    pub codec: CodecId,
    pub radius: u32,
}

impl CompressorConfig {
    /// Untuned configuration with default stride and cubic interpolation.
    pub fn fixed(error_bound: ErrorBound, ndims: usize) -> Self {
        CompressorConfig {
            error_bound,
            alpha: 1.0,
            beta: 1.5,
            interpolators: vec![Interpolator::default()],
            anchor_stride: defaults_for(ndims).anchor_stride,
            target: MetricTarget::Psnr,
            sampling: None,
            codec: CodecId::default(),
            radius: DEFAULT_RADIUS,
        }
    }

    pub fn encode_params(&self, grid: &DataGrid) -> Result<EncodeParams> {
        self.encode_params_with_bound(self.error_bound.resolve(&grid.value_range())?)
    }

    fn encode_params_with_bound(&self, e: f64) -> Result<EncodeParams> {
        level_error_bound(e, self.alpha, self.beta, 1)?;
        Ok(EncodeParams {
            anchor_stride: self.anchor_stride,
            error_bound: e,
            alpha: self.alpha,
            beta: self.beta,
            interpolators: self.interpolators.clone(),
            radius: self.radius,
        })
    }
}

/// One sampled trial compression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    /// Bits per sampled point.
    pub bit_rate: f64,
    /// Higher-is-better score for the target.
    pub metric: f64,
    pub eb_used: f64,
}

/// Anchor stride used inside sample blocks: the largest power of two not
/// above the block edge, capped by the grid stride.
pub fn sample_anchor_stride(samples: &SampleSet, anchor_stride: usize) -> usize {
    let edge = samples
        .blocks
        .iter()
        .flat_map(|b| b.grid.dims().iter().copied())
        .max()
        .unwrap_or(2)
        .max(2);
    let pow = 1usize << (usize::BITS - 1 - edge.leading_zeros());
    pow.min(anchor_stride).max(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Winners for levels 1..=L.
    pub interpolators: Vec<Interpolator>,
    /// Mean absolute prediction error per level (index `l - 1`) and candidate.
    pub level_errors: Vec<Vec<(Interpolator, f64)>>,
    pub points_visited: usize,
}

/// Picks the interpolator with the lowest mean absolute prediction error on
/// each level, from the top level down.
pub fn select_interpolators(
    samples: &SampleSet,
    e: f64,
    anchor_stride: usize,
) -> Vec<Interpolator> {
    select_interpolators_detailed(samples, e, anchor_stride, DEFAULT_RADIUS).interpolators
}

pub fn select_interpolators_detailed(
    samples: &SampleSet,
    e: f64,
    anchor_stride: usize,
    radius: u32,
) -> Selection {
    let stride = sample_anchor_stride(samples, anchor_stride);
    let max_level = stride.trailing_zeros();
    let ndims = samples.blocks.first().map_or(1, |b| b.grid.ndims());
    let candidates = Interpolator::candidates(ndims);
    let quantizer = Quantizer::with_radius(e, radius);
    let shapes: Vec<Shape3> = samples
        .blocks
        .iter()
        .map(|b| Shape3::new(b.grid.dims()))
        .collect();
    let mut states: Vec<PredictionWorkspace> = samples
        .blocks
        .iter()
        .map(|b| PredictionWorkspace::new(&b.grid, stride))
        .collect();

    let mut winners = vec![candidates[0]; max_level as usize];
    let mut level_errors = vec![Vec::new(); max_level as usize];
    let mut points_visited = 0;
    for level in (1..=max_level).rev() {
        let mut best: Option<(Interpolator, Vec<PredictionWorkspace>)> = None;
        let mut best_error = f64::INFINITY;
        for &cand in &candidates {
            let mut trial = states.clone();
            let (mut sum, mut points) = (0.0, 0usize);
            for ((ws, block), shape) in trial.iter_mut().zip(&samples.blocks).zip(&shapes) {
                let s = predict_level_raw(
                    ws,
                    block.grid.values(),
                    block.grid.precision(),
                    shape,
                    level,
                    cand,
                    &quantizer,
                );
                ws.quant_indices.clear();
                ws.unpredictables.clear();
                sum += s.abs_error_sum;
                points += s.points;
            }
            points_visited += points;
            let mean = if points == 0 {
                0.0
            } else {
                sum / points as f64
            };
            level_errors[level as usize - 1].push((cand, mean));
            if mean < best_error {
                best_error = mean;
                best = Some((cand, trial));
            }
        }
        let (winner, next) = match best {
            Some(b) => b,
            // Only reachable with NaN errors; keep the first candidate.
            None => (candidates[0], {
                let mut t = states.clone();
                for ((ws, block), shape) in t.iter_mut().zip(&samples.blocks).zip(&shapes) {
                    predict_level_raw(
                        ws,
                        block.grid.values(),
                        block.grid.precision(),
                        shape,
                        level,
                        candidates[0],
                        &quantizer,
                    );
                }
                t
            }),
        };
        debug!("level {level}: {winner} (mean abs error {best_error:.6e})");
        winners[level as usize - 1] = winner;
        states = next;
    }
    Selection {
        interpolators: winners,
        level_errors,
        points_visited,
    }
}

/// Compresses every block independently with the level bounds of `config`
/// at global bound `e`, codes all quantization indices in one pass and
/// scores the result for `target`.
pub fn trial_compress(
    samples: &SampleSet,
    config: &CompressorConfig,
    e: f64,
    target: MetricTarget,
) -> Result<TrialResult> {
    let mut params = config.encode_params_with_bound(e)?;
    params.anchor_stride = sample_anchor_stride(samples, config.anchor_stride);
    let mut indices = Vec::with_capacity(samples.point_count);
    let mut unpredictable_bytes = 0usize;
    let mut originals = Vec::with_capacity(samples.point_count);
    let mut recons = Vec::with_capacity(samples.point_count);
    let mut recon_blocks = Vec::with_capacity(samples.blocks.len());
    for block in &samples.blocks {
        let enc = encode_grid(&block.grid, &params)?;
        let ws = enc.workspace;
        indices.extend_from_slice(&ws.quant_indices);
        unpredictable_bytes += ws.unpredictables.len() * (8 + block.grid.precision().bytes());
        originals.extend_from_slice(block.grid.values());
        recons.extend_from_slice(&ws.recon);
        if target == MetricTarget::Ssim {
            recon_blocks.push(ws.recon);
        }
    }
    let payload = encode_indices(&indices, config.codec).len();
    let points = samples.point_count.max(1);
    let bit_rate = 8.0 * (payload + unpredictable_bytes) as f64 / points as f64;
    let vrange = ValueRange::of(&originals).map_or(0.0, |r| r.range);

    let metric = match target {
        MetricTarget::MaxCr | MetricTarget::Psnr => {
            let mse = crate::metrics::mse_slices(&originals, &recons);
            match psnr_from_mse(vrange, mse) {
                Ok(p) => p.min(PSNR_CAP),
                Err(_) => -PSNR_CAP,
            }
        }
        MetricTarget::Ssim => {
            if vrange == 0.0 {
                if originals == recons {
                    1.0
                } else {
                    0.0
                }
            } else {
                let (mut total, mut windows) = (0.0, 0usize);
                for (block, recon) in samples.blocks.iter().zip(recon_blocks) {
                    let r = DataGrid::new(block.grid.dims(), block.grid.precision(), recon)?;
                    let (s, w) = ssim_with_range(&block.grid, &r, vrange)?;
                    total += s * w as f64;
                    windows += w;
                }
                total / windows as f64
            }
        }
        MetricTarget::Autocorrelation => {
            let errors: Vec<f64> = originals.iter().zip(&recons).map(|(a, b)| a - b).collect();
            if errors.len() < 2 {
                0.0
            } else {
                -autocorrelation(&errors, 1)?.abs()
            }
        }
    };
    Ok(TrialResult {
        bit_rate,
        metric,
        eb_used: e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub winner: Winner,
    /// Comparison case 1-4, or 0 for an exact tie.
    pub case: u8,
    pub retrial: Option<TrialResult>,
}

/// Decides between result I (`first`) and result II (`second`).
///
/// Dominance decides directly. Otherwise II is re-run at a shifted bound and
/// I wins only if its point lies strictly above the line through II's two
/// points. Exact ties go to II.
pub fn compare_solutions(
    first: &TrialResult,
    second: &TrialResult,
    retrial: impl FnOnce(f64) -> TrialResult,
) -> Comparison {
    let (bi, mi) = (first.bit_rate, first.metric);
    let (bii, mii) = (second.bit_rate, second.metric);
    let direct = |winner, case| Comparison {
        winner,
        case,
        retrial: None,
    };
    if bi == bii && mi == mii {
        return direct(Winner::Second, 0);
    }
    if bi <= bii && mi >= mii {
        return direct(Winner::First, 1);
    }
    if bi >= bii && mi <= mii {
        return direct(Winner::Second, 2);
    }
    let (case, factor) = if mi > mii {
        (3, RETRIAL_TIGHTER)
    } else {
        (4, RETRIAL_LOOSER)
    };
    let shifted = retrial(second.eb_used * factor);
    let winner = if above_line(first, second, &shifted) {
        Winner::First
    } else {
        Winner::Second
    };
    Comparison {
        winner,
        case,
        retrial: Some(shifted),
    }
}

/// Whether `p` lies strictly above the line through `a` and `b` in the
/// (bit rate, metric) plane. A vertical line falls back to the larger of
/// its two metric values.
pub fn above_line(p: &TrialResult, a: &TrialResult, b: &TrialResult) -> bool {
    if a.bit_rate == b.bit_rate {
        return p.metric > a.metric.max(b.metric);
    }
    let slope = (b.metric - a.metric) / (b.bit_rate - a.bit_rate);
    let at = a.metric + slope * (p.bit_rate - a.bit_rate);
    p.metric > at
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub alpha: f64,
    pub beta: f64,
    /// Trial result for every candidate, in enumeration order.
    pub trials: Vec<((f64, f64), TrialResult)>,
    pub retrials: usize,
    /// Trial compressions actually run; repeated configurations are reused.
    pub trial_runs: usize,
    /// Sampled points compressed across all trials and retrials.
    pub points_compressed: usize,
}

/// Index of the first result with the lowest bit rate.
pub fn lowest_bit_rate(results: &[TrialResult]) -> usize {
    (1..results.len()).fold(0, |best, i| {
        if results[i].bit_rate < results[best].bit_rate {
            i
        } else {
            best
        }
    })
}

/// Sequential tournament: each result in turn challenges the incumbent
/// (role II). `retrial(incumbent, eb)` re-runs the incumbent at a shifted
/// bound. Returns the survivor and the number of retrials.
pub fn run_tournament(
    results: &[TrialResult],
    mut retrial: impl FnMut(usize, f64) -> Result<TrialResult>,
) -> Result<(usize, usize)> {
    let mut incumbent = 0;
    let mut retrials = 0;
    for challenger in 1..results.len() {
        let mut failure = None;
        let cmp = compare_solutions(&results[challenger], &results[incumbent], |eb| {
            retrial(incumbent, eb).unwrap_or_else(|err| {
                failure = Some(err);
                results[incumbent]
            })
        });
        if let Some(err) = failure {
            return Err(err);
        }
        if cmp.retrial.is_some() {
            retrials += 1;
        }
        if cmp.winner == Winner::First {
            incumbent = challenger;
        }
    }
    Ok((incumbent, retrials))
}

/// Memoizes trials by the exact per-level bounds they quantize with. Pairs
/// whose bounds coincide on every sampled level produce identical trials.
struct TrialCache<'a> {
    samples: &'a SampleSet,
    target: MetricTarget,
    max_level: u32,
    results: HashMap<Vec<u64>, TrialResult>,
    runs: usize,
}

impl<'a> TrialCache<'a> {
    fn new(samples: &'a SampleSet, base: &CompressorConfig, target: MetricTarget) -> Self {
        TrialCache {
            samples,
            target,
            max_level: sample_anchor_stride(samples, base.anchor_stride).trailing_zeros(),
            results: HashMap::new(),
            runs: 0,
        }
    }

    fn get(&mut self, config: &CompressorConfig, e: f64) -> Result<TrialResult> {
        let mut key = vec![e.to_bits()];
        for l in 1..=self.max_level {
            key.push(level_error_bound(e, config.alpha, config.beta, l)?.to_bits());
        }
        if let Some(r) = self.results.get(&key) {
            return Ok(*r);
        }
        let r = trial_compress(self.samples, config, e, self.target)?;
        self.runs += 1;
        self.results.insert(key, r);
        Ok(r)
    }
}

/// Runs the `(alpha, beta)` tournament over `pairs`.
pub fn tune_over(
    samples: &SampleSet,
    base: &CompressorConfig,
    e: f64,
    target: MetricTarget,
    pairs: &[(f64, f64)],
) -> Result<TuneOutcome> {
    assert!(!pairs.is_empty(), "no candidate pairs");
    let with_pair = |&(alpha, beta): &(f64, f64)| CompressorConfig {
        alpha,
        beta,
        ..base.clone()
    };
    let mut cache = TrialCache::new(samples, base, target);
    let mut trials = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let r = cache.get(&with_pair(pair), e)?;
        debug!(
            "alpha {} beta {}: B {:.4} M {:.6}",
            pair.0, pair.1, r.bit_rate, r.metric
        );
        trials.push((*pair, r));
    }
    let results: Vec<TrialResult> = trials.iter().map(|(_, r)| *r).collect();
    let (best, retrials) = if target == MetricTarget::MaxCr {
        (lowest_bit_rate(&results), 0)
    } else {
        run_tournament(&results, |incumbent, eb| {
            cache.get(&with_pair(&pairs[incumbent]), eb)
        })?
    };
    let (alpha, beta) = trials[best].0;
    Ok(TuneOutcome {
        alpha,
        beta,
        trials,
        retrials,
        trial_runs: cache.runs,
        points_compressed: cache.runs * samples.point_count,
    })
}

/// Picks `(alpha, beta)` from the full candidate grid.
pub fn tune_parameters(
    samples: &SampleSet,
    e: f64,
    target: MetricTarget,
    base: &CompressorConfig,
) -> Result<(f64, f64)> {
    tune_over(samples, base, e, target, &candidate_pairs()).map(|o| (o.alpha, o.beta))
}

/// User-facing settings; every `None` is tuned or defaulted.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSettings {
    pub error_bound: ErrorBound,
    pub target: MetricTarget,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub interpolators: Option<Vec<Interpolator>>,
    pub anchor_stride: Option<usize>,
    pub block_size: Option<usize>,
    pub sample_rate: Option<f64>,
    pub codec: CodecId,
    pub radius: u32,
}

impl UserSettings {
    pub fn new(error_bound: ErrorBound, target: MetricTarget) -> Self {
        UserSettings {
            error_bound,
            target,
            alpha: None,
            beta: None,
            interpolators: None,
            anchor_stride: None,
            block_size: None,
            sample_rate: None,
            codec: CodecId::default(),
            radius: DEFAULT_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport {
    pub error_bound: f64,
    pub sample_points: usize,
    pub selection: Option<Selection>,
    pub tuning: Option<TuneOutcome>,
}

pub fn resolve_config(grid: &DataGrid, user: &UserSettings) -> Result<CompressorConfig> {
    resolve_config_with_report(grid, user).map(|(c, _)| c)
}

pub fn resolve_config_with_report(
    grid: &DataGrid,
    user: &UserSettings,
) -> Result<(CompressorConfig, TuningReport)> {
    let defaults = defaults_for(grid.ndims());
    let e = user.error_bound.resolve(&grid.value_range())?;
    let anchor_stride = user.anchor_stride.unwrap_or(defaults.anchor_stride);
    crate::plan::check_stride(anchor_stride)?;
    for v in [user.alpha, user.beta].into_iter().flatten() {
        if !(v >= 1.0) {
            return Err(Error::InvalidParam(format!("alpha/beta {v} must be >= 1")));
        }
    }
    if user.radius < 2 || user.radius > (1 << 30) {
        return Err(Error::InvalidParam(format!("radius {}", user.radius)));
    }

    let mut config = CompressorConfig {
        error_bound: user.error_bound,
        alpha: user.alpha.unwrap_or(1.0),
        beta: user.beta.unwrap_or(1.5),
        interpolators: user.interpolators.clone().unwrap_or_default(),
        anchor_stride,
        target: user.target,
        sampling: None,
        codec: user.codec,
        radius: user.radius,
    };
    let mut report = TuningReport {
        error_bound: e,
        sample_points: 0,
        selection: None,
        tuning: None,
    };
    let needs_selection = user.interpolators.is_none();
    let needs_tuning = user.alpha.is_none() || user.beta.is_none();
    if !needs_selection && !needs_tuning {
        if config.interpolators.is_empty() {
            config.interpolators.push(Interpolator::default());
        }
        return Ok((config, report));
    }

    let block_size = user.block_size.unwrap_or(defaults.block_size);
    let rate = user.sample_rate.unwrap_or(defaults.sample_rate);
    let samples = match plan_sampling(grid.dims(), block_size, rate) {
        Ok(spec) => {
            config.sampling = Some(spec);
            sample_blocks(grid, &spec)
        }
        Err(Error::BlockTooLarge { .. }) => SampleSet::whole(grid),
        Err(err) => return Err(err),
    };
    report.sample_points = samples.point_count;
    debug!(
        "sampled {} blocks, {} points ({:.3}%)",
        samples.blocks.len(),
        samples.point_count,
        100.0 * samples.rate(grid.len())
    );

    if needs_selection {
        let sel = select_interpolators_detailed(&samples, e, anchor_stride, user.radius);
        config.interpolators = sel.interpolators.clone();
        report.selection = Some(sel);
    }
    if needs_tuning {
        let pairs: Vec<(f64, f64)> = candidate_pairs()
            .into_iter()
            .filter(|&(a, b)| user.alpha.is_none_or(|x| x == a) && user.beta.is_none_or(|x| x == b))
            .collect();
        let pairs = if pairs.is_empty() {
            // A pinned value outside the candidate grid.
            let alphas: Vec<f64> = user.alpha.map_or(ALPHA_CANDIDATES.to_vec(), |a| vec![a]);
            let betas: Vec<f64> = user.beta.map_or(BETA_CANDIDATES.to_vec(), |b| vec![b]);
            alphas
                .iter()
                .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
                .collect()
        } else {
            pairs
        };
        let outcome = tune_over(&samples, &config, e, user.target, &pairs)?;
        config.alpha = outcome.alpha;
        config.beta = outcome.beta;
        report.tuning = Some(outcome);
    }
    Ok((config, report))
}
