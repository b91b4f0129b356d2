//! Uniform block sampling for trial compressions.
//!
//! Blocks of edge `b` are taken at every origin of a lattice with a fixed
//! stride, in lexicographic order. Only blocks that fit entirely inside the
//! grid are taken; along a dimension shorter than `b` the block spans the
//! whole extent.

use crate::error::{Error, Result};
use crate::grid::{validate_dims, DataGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub block_size: usize,
    pub stride: usize,
    pub requested_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    pub origin: Vec<usize>,
    pub grid: DataGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub blocks: Vec<SampleBlock>,
    pub point_count: usize,
}

impl SampleSet {
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Fraction of the source grid covered by the blocks.
    pub fn rate(&self, source_len: usize) -> f64 {
        self.point_count as f64 / source_len as f64
    }

    /// A single block covering the whole grid.
    pub fn whole(grid: &DataGrid) -> Self {
        SampleSet {
            point_count: grid.len(),
            blocks: vec![SampleBlock {
                origin: vec![0; grid.ndims()],
                grid: grid.clone(),
            }],
        }
    }
}

/// Lattice stride for a block size and target rate:
/// `round(b / r^(1/ndims))`, never smaller than `b`.
pub fn plan_sampling(dims: &[usize], block_size: usize, rate: f64) -> Result<SampleSpec> {
    validate_dims(dims)?;
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "sample rate {rate} not in (0, 1]"
        )));
    }
    if block_size < 2 {
        return Err(Error::InvalidParam(format!("block size {block_size} < 2")));
    }
    if dims.iter().all(|&n| block_size > n) {
        return Err(Error::BlockTooLarge {
            block: block_size,
            dims: dims.to_vec(),
        });
    }
    let stride = (block_size as f64 / rate.powf(1.0 / dims.len() as f64)).round() as usize;
    Ok(SampleSpec {
        block_size,
        stride: stride.max(block_size),
        requested_rate: rate,
    })
}

impl SampleSpec {
    fn block_extents(&self, dims: &[usize]) -> Vec<usize> {
        dims.iter().map(|&n| self.block_size.min(n)).collect()
    }

    fn origins_along(&self, n: usize, edge: usize) -> impl Iterator<Item = usize> {
        (0..=n - edge).step_by(self.stride)
    }

    pub fn block_count(&self, dims: &[usize]) -> usize {
        let edges = self.block_extents(dims);
        dims.iter()
            .zip(&edges)
            .map(|(&n, &e)| self.origins_along(n, e).count())
            .product()
    }

    /// Sampled fraction actually realized on a grid of `dims`.
    pub fn realized_rate(&self, dims: &[usize]) -> f64 {
        let block_points: usize = self.block_extents(dims).iter().product();
        let total: usize = dims.iter().product();
        (self.block_count(dims) * block_points) as f64 / total as f64
    }
}

pub fn sample_blocks(grid: &DataGrid, spec: &SampleSpec) -> SampleSet {
    let dims = grid.dims();
    let edges = spec.block_extents(dims);
    let axes: Vec<Vec<usize>> = dims
        .iter()
        .zip(&edges)
        .map(|(&n, &e)| spec.origins_along(n, e).collect())
        .collect();
    let mut blocks = Vec::new();
    let mut cursor = vec![0usize; dims.len()];
    'outer: loop {
        let origin: Vec<usize> = cursor.iter().zip(&axes).map(|(&c, a)| a[c]).collect();
        let block = grid
            .extract_block(&origin, &edges)
            .expect("lattice origins lie inside the grid");
        blocks.push(SampleBlock {
            origin,
            grid: block,
        });
        for d in (0..dims.len()).rev() {
            cursor[d] += 1;
            if cursor[d] < axes[d].len() {
                continue 'outer;
            }
            cursor[d] = 0;
        }
        break;
    }
    let point_count = blocks.iter().map(|b| b.grid.len()).sum();
    SampleSet {
        blocks,
        point_count,
    }
}
