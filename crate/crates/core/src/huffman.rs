//! Canonical Huffman coding of `i32` symbols.
//!
//! Layout of an encoded block (all integers little-endian):
//!
//! ```text
//! count u64
//! if count > 0:
//!   alphabet size        varint
//!   first symbol         zigzag varint
//!   symbol deltas        varint each (strictly increasing alphabet)
//!   code lengths         u8 each, 0 only for a single-symbol alphabet
//!   payload byte length  u64
//!   payload              MSB-first code bits, zero padded
//! ```

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};

/// Longest code emitted by the encoder.
pub const MAX_CODE_LEN: u8 = 32;

/// Dense symbol tables are used when the alphabet spans at most this many
/// values.
const DENSE_SPAN: i64 = 1 << 20;

pub(crate) fn write_varint(mut v: u64, out: &mut Vec<u8>) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn zigzag(v: i32) -> u64 {
    ((v << 1) ^ (v >> 31)) as u32 as u64
}

fn unzigzag(v: u32) -> i32 {
    ((v >> 1) as i32) ^ -((v & 1) as i32)
}

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::corrupt("truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn varint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.u8()?;
            v |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(Error::corrupt("varint overflow"))
    }

    /// Reads a u64 length field and checks it against the bytes left.
    pub fn len_field(&mut self, elem_size: usize) -> Result<usize> {
        let n = self.u64()?;
        let n = usize::try_from(n).map_err(|_| Error::corrupt("length overflow"))?;
        if n.checked_mul(elem_size)
            .is_none_or(|b| b > self.remaining())
        {
            return Err(Error::corrupt("truncated"));
        }
        Ok(n)
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    fn with_capacity(bytes: usize) -> Self {
        BitWriter {
            out: Vec::with_capacity(bytes),
            acc: 0,
            nbits: 0,
        }
    }

    #[inline]
    fn put(&mut self, code: u32, len: u8) {
        self.acc = (self.acc << len) | code as u64;
        self.nbits += len as u32;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.out.push((self.acc >> self.nbits) as u8);
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.out.push((self.acc << (8 - self.nbits)) as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    acc: u64,
    nbits: u32,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader {
            bytes,
            pos: 0,
            acc: 0,
            nbits: 0,
        }
    }

    #[inline]
    fn bit(&mut self) -> Option<u32> {
        if self.nbits == 0 {
            let b = *self.bytes.get(self.pos)?;
            self.pos += 1;
            self.acc = b as u64;
            self.nbits = 8;
        }
        self.nbits -= 1;
        Some(((self.acc >> self.nbits) & 1) as u32)
    }
}

/// Huffman code lengths for the given frequencies (all non-zero), limited
/// to [`MAX_CODE_LEN`] by repeatedly flattening the distribution.
fn code_lengths(freqs: &[u64]) -> Vec<u8> {
    let n = freqs.len();
    if n == 1 {
        return vec![0];
    }
    let mut freqs = freqs.to_vec();
    loop {
        let lens = unbounded_lengths(&freqs);
        if lens.iter().all(|&l| l <= MAX_CODE_LEN as u32) {
            return lens.into_iter().map(|l| l as u8).collect();
        }
        for f in &mut freqs {
            *f = (*f >> 1).max(1);
        }
    }
}

fn unbounded_lengths(freqs: &[u64]) -> Vec<u32> {
    let n = freqs.len();
    // Nodes 0..n are leaves; internal nodes are appended. Ties break on node
    // id, which keeps the code deterministic.
    let mut parent = vec![usize::MAX; 2 * n - 1];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = freqs
        .iter()
        .enumerate()
        .map(|(i, &f)| Reverse((f, i)))
        .collect();
    let mut next = n;
    while heap.len() > 1 {
        let Reverse((fa, a)) = heap.pop().unwrap();
        let Reverse((fb, b)) = heap.pop().unwrap();
        parent[a] = next;
        parent[b] = next;
        heap.push(Reverse((fa + fb, next)));
        next += 1;
    }
    let root = next - 1;
    let mut depth = vec![0u32; 2 * n - 1];
    for node in (0..root).rev() {
        depth[node] = depth[parent[node]] + 1;
    }
    depth.truncate(n);
    depth
}

/// Assigns canonical codes: shorter codes first, ties by symbol order.
fn canonical_codes(lens: &[u8]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..lens.len()).collect();
    order.sort_by_key(|&i| (lens[i], i));
    let mut codes = vec![0u32; lens.len()];
    let mut code = 0u64;
    let mut prev = 0u8;
    for (rank, &i) in order.iter().enumerate() {
        if rank > 0 {
            code += 1;
        }
        code <<= lens[i] - prev;
        prev = lens[i];
        codes[i] = code as u32;
    }
    codes
}

enum SymbolLookup {
    Dense { min: i32, slots: Vec<u32> },
    Sparse(HashMap<i32, u32>),
}

impl SymbolLookup {
    fn new(alphabet: &[i32]) -> Self {
        let (min, max) = (alphabet[0], *alphabet.last().unwrap());
        if (max as i64 - min as i64) < DENSE_SPAN {
            let mut slots = vec![u32::MAX; (max as i64 - min as i64 + 1) as usize];
            for (i, &s) in alphabet.iter().enumerate() {
                slots[(s as i64 - min as i64) as usize] = i as u32;
            }
            SymbolLookup::Dense { min, slots }
        } else {
            SymbolLookup::Sparse(
                alphabet
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| (s, i as u32))
                    .collect(),
            )
        }
    }

    #[inline]
    fn get(&self, s: i32) -> usize {
        match self {
            SymbolLookup::Dense { min, slots } => slots[(s as i64 - *min as i64) as usize] as usize,
            SymbolLookup::Sparse(map) => map[&s] as usize,
        }
    }
}

fn histogram(symbols: &[i32]) -> (Vec<i32>, Vec<u64>) {
    let min = *symbols.iter().min().unwrap();
    let max = *symbols.iter().max().unwrap();
    if (max as i64 - min as i64) < DENSE_SPAN {
        let mut counts = vec![0u64; (max as i64 - min as i64 + 1) as usize];
        for &s in symbols {
            counts[(s as i64 - min as i64) as usize] += 1;
        }
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| ((i as i64 + min as i64) as i32, c))
            .unzip()
    } else {
        let mut map: HashMap<i32, u64> = HashMap::new();
        for &s in symbols {
            *map.entry(s).or_default() += 1;
        }
        let mut pairs: Vec<(i32, u64)> = map.into_iter().collect();
        pairs.sort_unstable();
        pairs.into_iter().unzip()
    }
}

pub fn encode(symbols: &[i32]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(symbols.len() as u64).to_le_bytes());
    if symbols.is_empty() {
        return out;
    }
    let (alphabet, freqs) = histogram(symbols);
    let lens = code_lengths(&freqs);
    let codes = canonical_codes(&lens);

    write_varint(alphabet.len() as u64, &mut out);
    write_varint(zigzag(alphabet[0]), &mut out);
    for w in alphabet.windows(2) {
        write_varint((w[1] as i64 - w[0] as i64) as u64, &mut out);
    }
    out.extend_from_slice(&lens);

    let total_bits: u64 = freqs.iter().zip(&lens).map(|(&f, &l)| f * l as u64).sum();
    let mut bits = BitWriter::with_capacity((total_bits / 8 + 1) as usize);
    if alphabet.len() > 1 {
        let lookup = SymbolLookup::new(&alphabet);
        for &s in symbols {
            let i = lookup.get(s);
            bits.put(codes[i], lens[i]);
        }
    }
    let payload = bits.finish();
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

/// Decodes one block, returning the symbols and the bytes consumed.
pub fn decode(bytes: &[u8], max_count: usize) -> Result<(Vec<i32>, usize)> {
    let mut r = ByteReader::new(bytes);
    let count = r.u64()?;
    if count > max_count as u64 {
        return Err(Error::corrupt("symbol count exceeds limit"));
    }
    if count == 0 {
        return Ok((Vec::new(), r.pos));
    }
    let nsym = r.varint()?;
    if nsym == 0 || nsym > (1 << 32) || nsym as usize > r.remaining() {
        return Err(Error::corrupt("bad alphabet size"));
    }
    let nsym = nsym as usize;
    let first = r.varint()?;
    let first = u32::try_from(first).map_err(|_| Error::corrupt("bad symbol"))?;
    let mut alphabet = Vec::with_capacity(nsym);
    alphabet.push(unzigzag(first));
    for _ in 1..nsym {
        let delta = r.varint()?;
        let next = *alphabet.last().unwrap() as i64 + delta as i64;
        if delta == 0 || next > i32::MAX as i64 {
            return Err(Error::corrupt("bad symbol table"));
        }
        alphabet.push(next as i32);
    }
    let lens = r.take(nsym)?.to_vec();
    let payload_len = r.len_field(1)?;
    let payload = r.take(payload_len)?;
    let consumed = r.pos;

    if nsym == 1 {
        if lens[0] != 0 {
            return Err(Error::corrupt("bad code length"));
        }
        return Ok((vec![alphabet[0]; count as usize], consumed));
    }
    if count > payload.len() as u64 * 8 {
        return Err(Error::corrupt("symbol count exceeds payload"));
    }

    // Canonical decoding tables.
    let mut bl_count = [0u64; MAX_CODE_LEN as usize + 1];
    for &l in &lens {
        if l == 0 || l > MAX_CODE_LEN {
            return Err(Error::corrupt("bad code length"));
        }
        bl_count[l as usize] += 1;
    }
    let kraft: f64 = lens.iter().map(|&l| (0.5f64).powi(l as i32)).sum();
    if kraft > 1.0 + 1e-12 {
        return Err(Error::corrupt("oversubscribed code"));
    }
    let mut sorted: Vec<usize> = (0..nsym).collect();
    sorted.sort_by_key(|&i| (lens[i], i));
    let sorted_syms: Vec<i32> = sorted.iter().map(|&i| alphabet[i]).collect();
    let mut first_code = [0i64; MAX_CODE_LEN as usize + 1];
    let mut offset = [0usize; MAX_CODE_LEN as usize + 1];
    let mut code = 0i64;
    let mut idx = 0usize;
    for len in 1..=MAX_CODE_LEN as usize {
        code = (code + bl_count[len - 1] as i64) << 1;
        first_code[len] = code;
        offset[len] = idx;
        idx += bl_count[len] as usize;
    }

    let mut bits = BitReader::new(payload);
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut code = 0i64;
        let mut len = 0usize;
        loop {
            let b = bits
                .bit()
                .ok_or_else(|| Error::corrupt("truncated payload"))?;
            code = (code << 1) | b as i64;
            len += 1;
            if len > MAX_CODE_LEN as usize {
                return Err(Error::corrupt("invalid code"));
            }
            let delta = code - first_code[len];
            if delta >= 0 && (delta as u64) < bl_count[len] {
                out.push(sorted_syms[offset[len] + delta as usize]);
                break;
            }
        }
    }
    Ok((out, consumed))
}
