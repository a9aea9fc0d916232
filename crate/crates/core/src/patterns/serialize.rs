//! Descriptor files.
//!
//! CSV: a single row `name,R,P,mapping,bin0,bin1,...` terminated by LF.
//!
//! Binary: `b"AGLB"`, a version byte, the block count as `u32` LE, each
//! block's bin count as `u32` LE, then every bin as an `f64` LE.

use super::descriptor::Descriptor;
use super::mapping::MappingKind;
use super::DescriptorKind;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"AGLB";
pub const BINARY_VERSION: u8 = 1;

/// Header fields and values of a descriptor CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorRecord {
    pub kind: DescriptorKind,
    pub radius: f64,
    pub points: usize,
    pub mapping: MappingKind,
    pub values: Vec<f64>,
}

pub fn to_csv_row(d: &Descriptor) -> String {
    let mut row = format!("{},{},{},{}", d.kind, d.radius, d.points, d.mapping);
    for v in d.values() {
        row.push(',');
        row.push_str(&v.to_string());
    }
    row.push('\n');
    row
}

pub fn parse_csv_row(line: &str) -> Result<DescriptorRecord> {
    let bad = |what: &str| Error::Format(format!("descriptor CSV: {what}"));
    let mut fields = line.trim_end_matches(['\n', '\r']).split(',');
    let kind = fields.next().ok_or_else(|| bad("missing name"))?.parse()?;
    let radius = fields
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad radius"))?;
    let points = fields
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad point count"))?;
    let mapping = fields.next().ok_or_else(|| bad("missing mapping"))?.parse()?;
    let values = fields
        .map(|s| s.parse::<f64>().map_err(|_| bad(&format!("bad bin value {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(DescriptorRecord {
        kind,
        radius,
        points,
        mapping,
        values,
    })
}

pub fn to_binary(d: &Descriptor) -> Vec<u8> {
    encode_blocks(&d.blocks.iter().map(|b| b.bins.as_slice()).collect::<Vec<_>>())
}

pub fn encode_blocks(blocks: &[&[f64]]) -> Vec<u8> {
    let total: usize = blocks.iter().map(|b| b.len()).sum();
    let mut out = Vec::with_capacity(9 + 4 * blocks.len() + 8 * total);
    out.extend_from_slice(BINARY_MAGIC);
    out.push(BINARY_VERSION);
    out.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
    for b in blocks {
        out.extend_from_slice(&(b.len() as u32).to_le_bytes());
    }
    for v in blocks.iter().flat_map(|b| b.iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes the binary format into per-block bins.
pub fn decode_blocks(bytes: &[u8]) -> Result<Vec<Vec<f64>>> {
    let bad = |what: &str| Error::Format(format!("binary descriptor: {what}"));
    let mut rest = bytes
        .strip_prefix(BINARY_MAGIC.as_slice())
        .ok_or_else(|| bad("missing AGLB magic"))?;
    let (&version, tail) = rest.split_first().ok_or_else(|| bad("truncated header"))?;
    if version != BINARY_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    rest = tail;
    let read_u32 = |rest: &mut &[u8]| -> Result<usize> {
        if rest.len() < 4 {
            return Err(bad("truncated header"));
        }
        let (head, tail) = rest.split_at(4);
        *rest = tail;
        Ok(u32::from_le_bytes(head.try_into().unwrap()) as usize)
    };
    let count = read_u32(&mut rest)?;
    let lengths = (0..count).map(|_| read_u32(&mut rest)).collect::<Result<Vec<_>>>()?;
    let total: usize = lengths.iter().sum();
    if rest.len() != total * 8 {
        return Err(bad(&format!(
            "expected {} payload bytes, found {}",
            total * 8,
            rest.len()
        )));
    }
    let mut values = rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    Ok(lengths.iter().map(|&n| values.by_ref().take(n).collect()).collect())
}
