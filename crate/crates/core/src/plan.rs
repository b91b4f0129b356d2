//! Decomposition of grid indices into anchor points and interpolation levels.
//!
//! Anchors sit on the lattice of multiples of the anchor stride `s = 2^L` in
//! every dimension. A non-anchor index belongs to level `l` (1 <= l <= L)
//! when every coordinate is a multiple of `2^(l-1)` but not every coordinate
//! is a multiple of `2^l`. Levels are traversed from `L` down to `1`; inside
//! a level, one 1D pass runs per dimension in the interpolator's dimension
//! order. The pass along axis `a` visits points whose `a` coordinate is an
//! odd multiple of `h = 2^(l-1)`, whose coordinates along axes handled
//! earlier in the level are multiples of `h`, and whose remaining
//! coordinates are multiples of `2h`.
//!
//! Extents need not be multiples of the stride: points past the last anchor
//! plane are still visited at their natural level and the predictor falls
//! back to one-sided neighbours there.

use crate::error::{Error, Result};
use crate::grid::{validate_dims, Shape3};
use crate::predictor::DimOrder;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelPlan {
    dims: Vec<usize>,
    anchor_stride: usize,
    max_level: u32,
    anchors: Vec<usize>,
    /// Flat indices per level, ordered from level `max_level` down to 1.
    levels: Vec<Vec<usize>>,
}

pub(crate) fn check_stride(anchor_stride: usize) -> Result<u32> {
    if anchor_stride < 2 || !anchor_stride.is_power_of_two() {
        return Err(Error::InvalidStride(anchor_stride));
    }
    Ok(anchor_stride.trailing_zeros())
}

/// Builds the full level plan with ascending dimension order inside each
/// level.
pub fn level_decompose(dims: &[usize], anchor_stride: usize) -> Result<LevelPlan> {
    LevelPlan::new(dims, anchor_stride)
}

impl LevelPlan {
    pub fn new(dims: &[usize], anchor_stride: usize) -> Result<Self> {
        validate_dims(dims)?;
        let max_level = check_stride(anchor_stride)?;
        let shape = Shape3::new(dims);
        let anchors = anchor_indices(&shape, anchor_stride);
        let levels = (1..=max_level)
            .rev()
            .map(|level| {
                let mut pts = Vec::new();
                for_each_level_point(&shape, level, DimOrder::Ascending, |p| pts.push(p.flat));
                pts
            })
            .collect();
        Ok(LevelPlan {
            dims: dims.to_vec(),
            anchor_stride,
            max_level,
            anchors,
            levels,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn anchor_stride(&self) -> usize {
        self.anchor_stride
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    /// Flat indices predicted at `level`, in traversal order.
    pub fn level(&self, level: u32) -> &[usize] {
        assert!(level >= 1 && level <= self.max_level, "level out of range");
        &self.levels[(self.max_level - level) as usize]
    }

    /// Levels from the top (`max_level`) down to 1, paired with their index.
    pub fn levels(&self) -> impl Iterator<Item = (u32, &[usize])> {
        (1..=self.max_level)
            .rev()
            .zip(self.levels.iter().map(Vec::as_slice))
    }

    pub fn point_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Level of an index tuple by direct arithmetic; `None` for anchors.
    pub fn level_of(&self, idx: &[usize]) -> Option<u32> {
        level_of(idx, self.max_level)
    }
}

pub fn level_of(idx: &[usize], max_level: u32) -> Option<u32> {
    // The lowest set bit over all coordinates decides the level.
    let combined = idx.iter().fold(0usize, |acc, &c| acc | c);
    let tz = if combined == 0 {
        u32::MAX
    } else {
        combined.trailing_zeros()
    };
    if tz >= max_level {
        None
    } else {
        Some(tz + 1)
    }
}

/// Number of anchors for the given dims and stride.
pub fn anchor_count(dims: &[usize], anchor_stride: usize) -> usize {
    dims.iter().map(|&n| (n - 1) / anchor_stride + 1).product()
}

pub(crate) fn anchor_indices(shape: &Shape3, stride: usize) -> Vec<usize> {
    let [n0, n1, n2] = shape.extents;
    let mut out = Vec::new();
    for i in (0..n0).step_by(stride) {
        for j in (0..n1).step_by(stride) {
            for k in (0..n2).step_by(stride) {
                out.push(shape.flat([i, j, k]));
            }
        }
    }
    out
}

/// One point visited by a level pass.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LevelPoint {
    pub flat: usize,
    /// Interpolation axis, in padded (3D) numbering.
    pub axis: usize,
    /// Coordinate along `axis`.
    pub coord: usize,
}

pub(crate) fn axis_order(order: DimOrder) -> [usize; 3] {
    match order {
        DimOrder::Ascending => [0, 1, 2],
        DimOrder::Descending => [2, 1, 0],
    }
}

pub(crate) fn for_each_level_point(
    shape: &Shape3,
    level: u32,
    order: DimOrder,
    mut f: impl FnMut(LevelPoint),
) {
    let h = 1usize << (level - 1);
    let axes = axis_order(order);
    let n = shape.extents;
    for (pass, &axis) in axes.iter().enumerate() {
        if n[axis] <= h {
            continue;
        }
        let mut step = [2 * h; 3];
        for &done in &axes[..pass] {
            step[done] = h;
        }
        let mut start = [0usize; 3];
        start[axis] = h;
        for i in (start[0]..n[0]).step_by(step[0]) {
            for j in (start[1]..n[1]).step_by(step[1]) {
                let row = i * shape.strides[0] + j * shape.strides[1];
                for k in (start[2]..n[2]).step_by(step[2]) {
                    let coord = [i, j, k][axis];
                    f(LevelPoint {
                        flat: row + k,
                        axis,
                        coord,
                    });
                }
            }
        }
    }
}

/// Points of `level` in the order they are predicted and coded, with the
/// axis each one is interpolated along.
pub fn level_traversal(dims: &[usize], level: u32, order: DimOrder) -> Result<Vec<(usize, usize)>> {
    validate_dims(dims)?;
    if level == 0 {
        return Err(Error::InvalidParam("levels start at 1".into()));
    }
    let shape = Shape3::new(dims);
    let pad = 3 - dims.len();
    let mut out = Vec::new();
    for_each_level_point(&shape, level, order, |p| out.push((p.flat, p.axis - pad)));
    Ok(out)
}
