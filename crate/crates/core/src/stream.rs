//! Self-describing container for a compressed grid.
//!
//! ```text
//! magic "QOZ1" | version u8 | precision u8 (4 or 8) | ndims u8
//! dims u64 x ndims | error bound f64 | alpha f64 | beta f64
//! anchor stride u32 | level count u8 | interpolator code u8 x levels (level 1 first)
//! codec id u8
//! anchor count u64 | anchor values (raw, precision width)
//! unpredictable count u64 | (index u64, value raw) pairs
//! index payload length u64 | index payload
//! ```
//!
//! All multi-byte fields are little-endian.

use crate::codec::CodecId;
use crate::error::{Error, Result};
use crate::grid::{validate_dims, Precision, MAX_DIMS};
use crate::huffman::ByteReader;
use crate::plan::{anchor_count, check_stride};
use crate::predictor::Interpolator;

pub const MAGIC: [u8; 4] = *b"QOZ1";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamHeader {
    pub precision: Precision,
    pub dims: Vec<usize>,
    pub error_bound: f64,
    pub alpha: f64,
    pub beta: f64,
    pub anchor_stride: usize,
    /// One interpolator per level, level 1 first.
    pub interpolators: Vec<Interpolator>,
    pub codec: CodecId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedStream {
    pub header: StreamHeader,
    pub anchors: Vec<f64>,
    pub unpredictables: Vec<(u64, f64)>,
    /// Output of [`crate::codec::encode_indices`].
    pub index_payload: Vec<u8>,
}

impl CompressedStream {
    pub fn point_count(&self) -> usize {
        self.header.dims.iter().product()
    }

    /// Exact serialized size in bytes.
    pub fn byte_len(&self) -> usize {
        let h = &self.header;
        let w = h.precision.bytes();
        4 + 3
            + 8 * h.dims.len()
            + 24
            + 4
            + 1
            + h.interpolators.len()
            + 1
            + 8
            + w * self.anchors.len()
            + 8
            + (8 + w) * self.unpredictables.len()
            + 8
            + self.index_payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let p = h.precision;
        let mut out = Vec::with_capacity(self.byte_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(p.bytes() as u8);
        out.push(h.dims.len() as u8);
        for &d in &h.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        out.extend_from_slice(&h.error_bound.to_le_bytes());
        out.extend_from_slice(&h.alpha.to_le_bytes());
        out.extend_from_slice(&h.beta.to_le_bytes());
        out.extend_from_slice(&(h.anchor_stride as u32).to_le_bytes());
        out.push(h.interpolators.len() as u8);
        out.extend(h.interpolators.iter().map(|i| i.code()));
        out.push(h.codec.code());
        out.extend_from_slice(&(self.anchors.len() as u64).to_le_bytes());
        for &a in &self.anchors {
            p.write_le(a, &mut out);
        }
        out.extend_from_slice(&(self.unpredictables.len() as u64).to_le_bytes());
        for &(i, v) in &self.unpredictables {
            out.extend_from_slice(&i.to_le_bytes());
            p.write_le(v, &mut out);
        }
        out.extend_from_slice(&(self.index_payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.index_payload);
        debug_assert_eq!(out.len(), self.byte_len());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(Error::corrupt("bad magic"));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let precision =
            Precision::from_bytes(r.u8()?).ok_or_else(|| Error::corrupt("bad precision"))?;
        let ndims = r.u8()? as usize;
        if ndims == 0 || ndims > MAX_DIMS {
            return Err(Error::corrupt("bad dimension count"));
        }
        let mut dims = Vec::with_capacity(ndims);
        for _ in 0..ndims {
            let d = usize::try_from(r.u64()?).map_err(|_| Error::corrupt("bad extent"))?;
            dims.push(d);
        }
        let n = validate_dims(&dims).map_err(|_| Error::corrupt("bad extents"))?;
        let error_bound = r.f64()?;
        let alpha = r.f64()?;
        let beta = r.f64()?;
        if !(error_bound > 0.0 && error_bound.is_finite()) {
            return Err(Error::corrupt("bad error bound"));
        }
        if !(alpha >= 1.0 && beta >= 1.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::corrupt("bad level bound parameters"));
        }
        let anchor_stride = r.u32()? as usize;
        let max_level =
            check_stride(anchor_stride).map_err(|_| Error::corrupt("bad anchor stride"))?;
        let levels = r.u8()? as u32;
        if levels != max_level {
            return Err(Error::corrupt("level count does not match anchor stride"));
        }
        let interpolators = r
            .take(levels as usize)?
            .iter()
            .map(|&c| Interpolator::from_code(c).ok_or_else(|| Error::corrupt("bad interpolator")))
            .collect::<Result<Vec<_>>>()?;
        let codec = CodecId::from_code(r.u8()?)?;

        let w = precision.bytes();
        let count = r.len_field(w)?;
        if count != anchor_count(&dims, anchor_stride) {
            return Err(Error::corrupt("anchor count does not match dims"));
        }
        let anchors = read_values(&mut r, precision, count)?;

        let count = r.len_field(8 + w)?;
        let mut unpredictables = Vec::with_capacity(count);
        for _ in 0..count {
            let i = r.u64()?;
            if i >= n as u64 {
                return Err(Error::corrupt("unpredictable index out of range"));
            }
            let v = precision.read_le(r.take(w)?);
            if !v.is_finite() {
                return Err(Error::corrupt("non-finite unpredictable value"));
            }
            unpredictables.push((i, v));
        }

        let len = r.len_field(1)?;
        let index_payload = r.take(len)?.to_vec();
        if r.remaining() != 0 {
            return Err(Error::corrupt("trailing bytes"));
        }
        if index_payload.first() != Some(&codec.code()) {
            return Err(Error::corrupt("codec id mismatch"));
        }
        Ok(CompressedStream {
            header: StreamHeader {
                precision,
                dims,
                error_bound,
                alpha,
                beta,
                anchor_stride,
                interpolators,
                codec,
            },
            anchors,
            unpredictables,
            index_payload,
        })
    }
}

fn read_values(r: &mut ByteReader<'_>, precision: Precision, count: usize) -> Result<Vec<f64>> {
    let raw = r.take(count * precision.bytes())?;
    raw.chunks_exact(precision.bytes())
        .map(|c| {
            let v = precision.read_le(c);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::corrupt("non-finite anchor value"))
            }
        })
        .collect()
}

pub fn serialize_stream(stream: &CompressedStream) -> Vec<u8> {
    stream.to_bytes()
}

pub fn deserialize_stream(bytes: &[u8]) -> Result<CompressedStream> {
    CompressedStream::from_bytes(bytes)
}
