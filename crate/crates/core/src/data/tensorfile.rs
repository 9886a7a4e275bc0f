// SPDX-License-Identifier: Apache-2.0

//! Named-tensor container file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        4 bytes  "ULRE"
//! version      u16      = 1
//! count        u16      number of records
//! per record:
//!   name_len   u16
//!   name       name_len bytes of UTF-8
//!   dtype      u8       0 = f64 LE, 1 = u8
//!   rank       u8
//!   dims       rank × u64
//!   payload    element size × Π dims bytes, row-major
//! ```
//!
//! Trailing bytes after the last record are rejected.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkernel::Tensor;

pub const MAGIC: &[u8; 4] = b"ULRE";
pub const FORMAT_VERSION: u16 = 1;

const DTYPE_F64: u8 = 0;
const DTYPE_U8: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum RecordData {
    F64(Tensor<f64>),
    U8(Tensor<u8>),
}

impl RecordData {
    pub fn shape(&self) -> &[usize] {
        match self {
            RecordData::F64(t) => t.shape(),
            RecordData::U8(t) => t.shape(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub name: String,
    pub data: RecordData,
}

impl Record {
    pub fn f64(name: impl Into<String>, tensor: Tensor<f64>) -> Self {
        Record {
            name: name.into(),
            data: RecordData::F64(tensor),
        }
    }

    pub fn u8(name: impl Into<String>, tensor: Tensor<u8>) -> Self {
        Record {
            name: name.into(),
            data: RecordData::U8(tensor),
        }
    }
}

/// Looks up a record by name.
pub fn find<'a>(records: &'a [Record], name: &str) -> Option<&'a Record> {
    records.iter().find(|r| r.name == name)
}

pub fn find_f64<'a>(records: &'a [Record], name: &str) -> Result<&'a Tensor<f64>> {
    match find(records, name).map(|r| &r.data) {
        Some(RecordData::F64(t)) => Ok(t),
        Some(RecordData::U8(_)) => Err(Error::shape(format!("record {name:?} is u8, expected f64"))),
        None => Err(Error::shape(format!("missing record {name:?}"))),
    }
}

pub fn find_u8<'a>(records: &'a [Record], name: &str) -> Result<&'a Tensor<u8>> {
    match find(records, name).map(|r| &r.data) {
        Some(RecordData::U8(t)) => Ok(t),
        Some(RecordData::F64(_)) => Err(Error::shape(format!("record {name:?} is f64, expected u8"))),
        None => Err(Error::shape(format!("missing record {name:?}"))),
    }
}

pub fn encode(records: &[Record]) -> Result<Vec<u8>> {
    let count =
        u16::try_from(records.len()).map_err(|_| Error::domain(format!("too many records: {}", records.len())))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for rec in records {
        let name = rec.name.as_bytes();
        let name_len = u16::try_from(name.len())
            .map_err(|_| Error::domain(format!("record name too long: {} bytes", name.len())))?;
        let shape = rec.data.shape();
        let rank = u8::try_from(shape.len()).map_err(|_| Error::domain(format!("rank {} too large", shape.len())))?;
        out.extend_from_slice(&name_len.to_le_bytes());
        out.extend_from_slice(name);
        out.push(match rec.data {
            RecordData::F64(_) => DTYPE_F64,
            RecordData::U8(_) => DTYPE_U8,
        });
        out.push(rank);
        for &d in shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &rec.data {
            RecordData::F64(t) => {
                out.reserve(t.len() * 8);
                for v in t.data() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            RecordData::U8(t) => out.extend_from_slice(t.data()),
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    record: Option<String>,
}

impl<'a> Cursor<'a> {
    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            offset: self.pos as u64,
            record: self.record.clone(),
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let remaining = self.bytes.len() - self.pos;
        if n > remaining {
            return Err(self.fail(format!("truncated {what}: need {n} bytes, {remaining} left")));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Vec<Record>> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        record: None,
    };
    if cur.take(4, "magic")? != MAGIC {
        cur.pos = 0;
        return Err(cur.fail("bad magic, not a ULRE tensor file"));
    }
    let version = cur.u16("version")?;
    if version != FORMAT_VERSION {
        cur.pos -= 2;
        return Err(cur.fail(format!("unsupported format version {version}")));
    }
    let count = cur.u16("record count")?;
    let mut records = Vec::with_capacity(count as usize);
    for index in 0..count {
        cur.record = Some(format!("#{index}"));
        let name_len = cur.u16("name length")? as usize;
        let name_bytes = cur.take(name_len, "name")?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| cur.fail("record name is not UTF-8"))?
            .to_owned();
        cur.record = Some(name.clone());
        let dtype = cur.u8("dtype")?;
        let elem_size = match dtype {
            DTYPE_F64 => 8,
            DTYPE_U8 => 1,
            other => {
                cur.pos -= 1;
                return Err(cur.fail(format!("unknown dtype code {other}")));
            }
        };
        let rank = cur.u8("rank")?;
        let mut shape = Vec::with_capacity(rank as usize);
        let mut elems: usize = 1;
        for _ in 0..rank {
            let d = cur.u64("dimension")?;
            let d = usize::try_from(d).map_err(|_| cur.fail(format!("dimension {d} overflows")))?;
            elems = elems
                .checked_mul(d)
                .ok_or_else(|| cur.fail("element count overflows"))?;
            shape.push(d);
        }
        let payload_len = elems
            .checked_mul(elem_size)
            .ok_or_else(|| cur.fail("payload size overflows"))?;
        let payload = cur.take(payload_len, "payload")?;
        let data = match dtype {
            DTYPE_F64 => RecordData::F64(Tensor::new(
                shape,
                payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect(),
            )?),
            _ => RecordData::U8(Tensor::new(shape, payload.to_vec())?),
        };
        records.push(Record { name, data });
    }
    cur.record = None;
    if cur.pos != bytes.len() {
        return Err(cur.fail(format!("{} trailing bytes after last record", bytes.len() - cur.pos)));
    }
    Ok(records)
}

pub fn write_tensor_file(path: impl AsRef<Path>, records: &[Record]) -> Result<()> {
    fs::write(path, encode(records)?)?;
    Ok(())
}

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<Vec<Record>> {
    decode(&fs::read(path)?)
}
