//! Lossless coding of quantization indices: canonical Huffman followed by an
//! optional dictionary stage, tagged with a one-byte codec id.

use crate::error::{Error, Result};
use crate::huffman;

/// Upper bound on the inflated size of a dictionary-stage payload.
const MAX_INFLATED: usize = 1 << 34;

/// Identifies the dictionary stage applied after Huffman coding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CodecId {
    /// Huffman only.
    HuffmanOnly,
    /// Huffman followed by an LZ77 (deflate) byte compressor.
    #[default]
    HuffmanLz,
}

impl CodecId {
    pub fn code(self) -> u8 {
        match self {
            CodecId::HuffmanOnly => 0,
            CodecId::HuffmanLz => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(CodecId::HuffmanOnly),
            1 => Ok(CodecId::HuffmanLz),
            other => Err(Error::corrupt(format!("unsupported codec id {other}"))),
        }
    }
}

/// Encodes an index sequence as `[codec id][body]`.
pub fn encode_indices(indices: &[i32], codec: CodecId) -> Vec<u8> {
    let huff = huffman::encode(indices);
    let mut out = Vec::with_capacity(huff.len() / 2 + 1);
    out.push(codec.code());
    match codec {
        CodecId::HuffmanOnly => out.extend_from_slice(&huff),
        CodecId::HuffmanLz => {
            out.extend_from_slice(&miniz_oxide::deflate::compress_to_vec(&huff, 6))
        }
    }
    out
}

/// Decodes an index sequence, rejecting streams that claim more than
/// `max_count` symbols.
pub fn decode_indices(bytes: &[u8], max_count: usize) -> Result<Vec<i32>> {
    let (&id, body) = bytes
        .split_first()
        .ok_or_else(|| Error::corrupt("empty index payload"))?;
    let inflated;
    let huff = match CodecId::from_code(id)? {
        CodecId::HuffmanOnly => body,
        CodecId::HuffmanLz => {
            inflated = miniz_oxide::inflate::decompress_to_vec_with_limit(body, MAX_INFLATED)
                .map_err(|e| Error::corrupt(format!("dictionary stage: {e:?}")))?;
            &inflated
        }
    };
    let (symbols, used) = huffman::decode(huff, max_count)?;
    if used != huff.len() {
        return Err(Error::corrupt("trailing bytes after index codestream"));
    }
    Ok(symbols)
}
