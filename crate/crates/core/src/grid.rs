//! Dense n-dimensional grids (n <= 3) of floating-point samples.
//!
//! Dimensions are listed slowest-varying first and the sample buffer is
//! row-major, the layout used by raw binary dumps of simulation fields.
//! Samples are held as `f64` regardless of the on-disk precision; single
//! precision grids only ever hold values exactly representable as `f32`.

use crate::error::{Error, Result};

/// Maximum number of dimensions supported.
pub const MAX_DIMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub fn bytes(self) -> usize {
        match self {
            Precision::Single => 4,
            Precision::Double => 8,
        }
    }

    pub fn from_bytes(width: u8) -> Option<Self> {
        match width {
            4 => Some(Precision::Single),
            8 => Some(Precision::Double),
            _ => None,
        }
    }

    /// Rounds `value` to the nearest value representable at this precision.
    #[inline]
    pub fn round(self, value: f64) -> f64 {
        match self {
            Precision::Single => value as f32 as f64,
            Precision::Double => value,
        }
    }

    pub(crate) fn write_le(self, value: f64, out: &mut Vec<u8>) {
        match self {
            Precision::Single => out.extend_from_slice(&(value as f32).to_le_bytes()),
            Precision::Double => out.extend_from_slice(&value.to_le_bytes()),
        }
    }

    pub(crate) fn read_le(self, bytes: &[u8]) -> f64 {
        match self {
            Precision::Single => f32::from_le_bytes(bytes.try_into().expect("4 bytes")) as f64,
            Precision::Double => f64::from_le_bytes(bytes.try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
    pub range: f64,
}

impl ValueRange {
    pub fn is_constant(&self) -> bool {
        self.range == 0.0
    }

    pub fn of(values: &[f64]) -> Option<Self> {
        let (&first, rest) = values.split_first()?;
        let (min, max) = rest
            .iter()
            .fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Some(ValueRange {
            min,
            max,
            range: max - min,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataGrid {
    dims: Vec<usize>,
    precision: Precision,
    values: Vec<f64>,
}

pub(crate) fn validate_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.len() > MAX_DIMS || dims.contains(&0) {
        return Err(Error::InvalidDims(dims.to_vec()));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::InvalidDims(dims.to_vec()))
}

impl DataGrid {
    /// Builds a grid from samples, rounding them to `precision`.
    pub fn new(dims: &[usize], precision: Precision, values: Vec<f64>) -> Result<Self> {
        let len = validate_dims(dims)?;
        if values.len() != len {
            return Err(Error::SizeMismatch {
                expected: len,
                actual: values.len(),
            });
        }
        let mut values = values;
        for (index, v) in values.iter_mut().enumerate() {
            *v = precision.round(*v);
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { index });
            }
        }
        Ok(DataGrid {
            dims: dims.to_vec(),
            precision,
            values,
        })
    }

    /// Convenience constructor that fills a grid from a function of the
    /// index tuple.
    pub fn from_fn(
        dims: &[usize],
        precision: Precision,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let len = validate_dims(dims)?;
        let mut values = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            values.push(f(&idx));
            for d in (0..dims.len()).rev() {
                idx[d] += 1;
                if idx[d] < dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        DataGrid::new(dims, precision, values)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndims(&self) -> usize {
        self.dims.len()
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Size in bytes of the raw little-endian representation.
    pub fn byte_len(&self) -> usize {
        self.values.len() * self.precision.bytes()
    }

    pub fn value_range(&self) -> ValueRange {
        ValueRange::of(&self.values).expect("grids are never empty")
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    /// Serializes the samples as raw little-endian scalars.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        for &v in &self.values {
            self.precision.write_le(v, &mut out);
        }
        out
    }

    /// Copies a sub-grid. The block is clamped at the far grid edges, so a
    /// block that extends past the boundary comes back smaller than `size`.
    pub fn extract_block(&self, origin: &[usize], size: &[usize]) -> Result<DataGrid> {
        if origin.len() != self.ndims() || size.len() != self.ndims() {
            return Err(Error::DimMismatch {
                left: self.dims.clone(),
                right: origin.to_vec(),
            });
        }
        if origin.iter().zip(&self.dims).any(|(&o, &n)| o >= n) {
            return Err(Error::OutOfBounds {
                origin: origin.to_vec(),
                dims: self.dims.clone(),
            });
        }
        let extent: Vec<usize> = origin
            .iter()
            .zip(size)
            .zip(&self.dims)
            .map(|((&o, &s), &n)| s.min(n - o))
            .collect();
        validate_dims(&extent)?;

        let shape = Shape3::new(&self.dims);
        let (o, e) = (pad3(origin, 0), pad3(&extent, 1));
        let mut values = Vec::with_capacity(extent.iter().product());
        for i in 0..e[0] {
            for j in 0..e[1] {
                let row = shape.flat([o[0] + i, o[1] + j, o[2]]);
                values.extend_from_slice(&self.values[row..row + e[2]]);
            }
        }
        Ok(DataGrid {
            dims: extent,
            precision: self.precision,
            values,
        })
    }

    /// Writes `block` back into this grid at `origin`.
    pub fn embed_block(&mut self, origin: &[usize], block: &DataGrid) -> Result<()> {
        if origin.len() != self.ndims()
            || block.ndims() != self.ndims()
            || origin
                .iter()
                .zip(block.dims())
                .zip(&self.dims)
                .any(|((&o, &b), &n)| o + b > n)
        {
            return Err(Error::OutOfBounds {
                origin: origin.to_vec(),
                dims: self.dims.clone(),
            });
        }
        let shape = Shape3::new(&self.dims);
        let (o, e) = (pad3(origin, 0), pad3(block.dims(), 1));
        let mut src = block.values().chunks_exact(e[2]);
        for i in 0..e[0] {
            for j in 0..e[1] {
                let row = shape.flat([o[0] + i, o[1] + j, o[2]]);
                let chunk = src.next().expect("block rows");
                self.values[row..row + e[2]].copy_from_slice(chunk);
            }
        }
        Ok(())
    }
}

/// Parses raw little-endian IEEE scalars into a validated grid.
pub fn load_grid(bytes: &[u8], dims: &[usize], precision: Precision) -> Result<DataGrid> {
    let len = validate_dims(dims)?;
    let width = precision.bytes();
    let expected = len
        .checked_mul(width)
        .ok_or_else(|| Error::InvalidDims(dims.to_vec()))?;
    if bytes.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let mut values = Vec::with_capacity(len);
    for (index, chunk) in bytes.chunks_exact(width).enumerate() {
        let v = precision.read_le(chunk);
        if !v.is_finite() {
            return Err(Error::NonFiniteValue { index });
        }
        values.push(v);
    }
    Ok(DataGrid {
        dims: dims.to_vec(),
        precision,
        values,
    })
}

pub fn value_range(grid: &DataGrid) -> ValueRange {
    grid.value_range()
}

pub fn extract_block(grid: &DataGrid, origin: &[usize], size: &[usize]) -> Result<DataGrid> {
    grid.extract_block(origin, size)
}

/// Pads an index tuple to three entries by prepending `fill`.
pub(crate) fn pad3(v: &[usize], fill: usize) -> [usize; 3] {
    let mut out = [fill; 3];
    out[3 - v.len()..].copy_from_slice(v);
    out
}

/// Row-major extents padded to three dimensions with leading unit extents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Shape3 {
    pub extents: [usize; 3],
    pub strides: [usize; 3],
    pub ndims: usize,
}

impl Shape3 {
    pub fn new(dims: &[usize]) -> Self {
        let extents = pad3(dims, 1);
        Shape3 {
            extents,
            strides: [extents[1] * extents[2], extents[2], 1],
            ndims: dims.len(),
        }
    }

    #[inline]
    pub fn flat(&self, idx: [usize; 3]) -> usize {
        idx[0] * self.strides[0] + idx[1] * self.strides[1] + idx[2]
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    /// Unpads a flat index back into a tuple of the original rank.
    #[cfg(test)]
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = [0usize; 3];
        for d in (0..3).rev() {
            idx[d] = flat % self.extents[d];
            flat /= self.extents[d];
        }
        idx[3 - self.ndims..].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f32_bytes(values: &[f32]) -> Vec<u8> {
        values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn loads_single_precision_grid() {
        let bytes = f32_bytes(&[0., 1., 2., 3., 4., 5., 6., 7.]);
        assert_eq!(bytes.len(), 32);
        let grid = load_grid(&bytes, &[2, 4], Precision::Single).unwrap();
        assert_eq!(grid.dims(), &[2, 4]);
        assert_eq!(grid.len(), 8);
        assert_eq!(grid.get(&[1, 2]), 6.0);
    }

    #[test]
    fn rejects_wrong_length() {
        let mut bytes = f32_bytes(&[0.; 8]);
        bytes.push(0);
        assert_eq!(
            load_grid(&bytes, &[2, 4], Precision::Single),
            Err(Error::SizeMismatch {
                expected: 32,
                actual: 33
            })
        );
    }

    #[test]
    fn rejects_nan_and_inf() {
        let bytes = f32_bytes(&[0., 1., f32::NAN, 3.]);
        assert_eq!(
            load_grid(&bytes, &[4], Precision::Single),
            Err(Error::NonFiniteValue { index: 2 })
        );
        let bytes: Vec<u8> = [1.0f64, f64::INFINITY]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        assert!(matches!(
            load_grid(&bytes, &[2], Precision::Double),
            Err(Error::NonFiniteValue { index: 1 })
        ));
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(matches!(
            load_grid(&[], &[], Precision::Single),
            Err(Error::InvalidDims(_))
        ));
        assert!(matches!(
            load_grid(&[0; 4], &[1, 1, 1, 1], Precision::Single),
            Err(Error::InvalidDims(_))
        ));
        assert!(matches!(
            load_grid(&[], &[3, 0], Precision::Single),
            Err(Error::InvalidDims(_))
        ));
    }

    #[test]
    fn value_range_cases() {
        let g = DataGrid::new(&[4], Precision::Double, vec![5.0; 4]).unwrap();
        let r = value_range(&g);
        assert_eq!((r.min, r.max, r.range), (5.0, 5.0, 0.0));
        assert!(r.is_constant());

        let g = DataGrid::new(&[3], Precision::Double, vec![-1.0, 0.0, 3.0]).unwrap();
        assert_eq!(value_range(&g).range, 4.0);

        let g = DataGrid::from_fn(&[256], Precision::Single, |i| i[0] as f64).unwrap();
        assert_eq!(value_range(&g).range, 255.0);
    }

    #[test]
    fn extract_top_left_block() {
        let g =
            DataGrid::from_fn(&[8, 8], Precision::Double, |i| (i[0] * 8 + i[1]) as f64).unwrap();
        let b = g.extract_block(&[0, 0], &[4, 4]).unwrap();
        assert_eq!(b.dims(), &[4, 4]);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(b.get(&[i, j]), g.get(&[i, j]));
            }
        }
    }

    #[test]
    fn extract_clamps_at_edge() {
        let g = DataGrid::from_fn(&[10], Precision::Double, |i| i[0] as f64).unwrap();
        let b = g.extract_block(&[8], &[4]).unwrap();
        assert_eq!(b.values(), &[8.0, 9.0]);
    }

    #[test]
    fn extract_out_of_bounds() {
        let g = DataGrid::from_fn(&[8, 8], Precision::Double, |_| 0.0).unwrap();
        assert!(matches!(
            g.extract_block(&[12, 0], &[4, 4]),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn extract_then_embed_is_identity() {
        let g = DataGrid::from_fn(&[5, 6, 7], Precision::Double, |i| {
            (i[0] * 100 + i[1] * 10 + i[2]) as f64
        })
        .unwrap();
        let block = g.extract_block(&[1, 2, 3], &[3, 3, 9]).unwrap();
        assert_eq!(block.dims(), &[3, 3, 4]);
        let mut blank = DataGrid::from_fn(&[5, 6, 7], Precision::Double, |_| -1.0).unwrap();
        blank.embed_block(&[1, 2, 3], &block).unwrap();
        for i in 1..4 {
            for j in 2..5 {
                for k in 3..7 {
                    assert_eq!(blank.get(&[i, j, k]), g.get(&[i, j, k]));
                }
            }
        }
    }

    #[test]
    fn single_precision_rounds_on_construction() {
        let g = DataGrid::new(&[1], Precision::Single, vec![0.1]).unwrap();
        assert_eq!(g.values()[0], 0.1f32 as f64);
        assert_eq!(g.to_le_bytes(), 0.1f32.to_le_bytes());
    }
}
