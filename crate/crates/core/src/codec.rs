//! On-disk object format.
//!
//! ```text
//! SIMSTUDY 1
//! kind: <model|draws|output|evals|timing>
//! <key>: <value>            (one line per descriptive field)
//! payload: <byte count>
//! checksum: sha256:<hex>    (over everything above this line plus the payload)
//!
//! <binary payload>
//! ```
//!
//! Header values are single-line text (`\` and newlines escaped). The payload
//! is a tagged little-endian binary encoding: floats are stored as raw
//! IEEE-754 bits, so round trips are bit-exact.

use std::path::Path;

use indexmap::IndexMap;
use sha2::{Digest, Sha256};

use crate::component::EvalValue;
use crate::error::{Error, Result};
use crate::param::{Matrix, ParamMap, ParamValue};

pub const MAGIC: &str = "SIMSTUDY 1";

const TAG_NUMBER: u8 = 0;
const TAG_INTEGER: u8 = 1;
const TAG_BOOLEAN: u8 = 2;
const TAG_STR: u8 = 3;
const TAG_VECTOR: u8 = 4;
const TAG_MATRIX: u8 = 5;
const TAG_LIST: u8 = 6;

#[derive(Default)]
pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    pub fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.f64(x);
        }
    }

    pub fn value(&mut self, v: &ParamValue) {
        match v {
            ParamValue::Number(x) => {
                self.u8(TAG_NUMBER);
                self.f64(*x);
            }
            ParamValue::Integer(i) => {
                self.u8(TAG_INTEGER);
                self.u64(*i as u64);
            }
            ParamValue::Boolean(b) => {
                self.u8(TAG_BOOLEAN);
                self.u8(u8::from(*b));
            }
            ParamValue::Str(s) => {
                self.u8(TAG_STR);
                self.str(s);
            }
            ParamValue::Vector(v) => {
                self.u8(TAG_VECTOR);
                self.f64s(v);
            }
            ParamValue::Matrix(m) => {
                self.u8(TAG_MATRIX);
                self.u64(m.rows() as u64);
                self.u64(m.cols() as u64);
                for &x in m.data() {
                    self.f64(x);
                }
            }
            ParamValue::List(items) => {
                self.u8(TAG_LIST);
                self.u64(items.len() as u64);
                for item in items {
                    self.value(item);
                }
            }
        }
    }

    pub fn map(&mut self, m: &ParamMap) {
        self.u64(m.len() as u64);
        for (k, v) in m {
            self.str(k);
            self.value(v);
        }
    }

    pub fn eval(&mut self, v: &EvalValue) {
        match v {
            EvalValue::Scalar(x) => {
                self.u8(0);
                self.f64(*x);
            }
            EvalValue::Vector(xs) => {
                self.u8(1);
                self.f64s(xs);
            }
        }
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

type DecodeResult<T> = std::result::Result<T, String>;

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn finish(&self) -> DecodeResult<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(format!(
                "{} trailing payload bytes",
                self.buf.len() - self.pos
            ))
        }
    }

    fn take(&mut self, n: usize) -> DecodeResult<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| "payload truncated".to_string())?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> DecodeResult<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> DecodeResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self, elem: usize) -> DecodeResult<usize> {
        let n = self.u64()? as usize;
        if n.saturating_mul(elem) > self.buf.len() - self.pos {
            return Err("length prefix exceeds payload".into());
        }
        Ok(n)
    }

    pub fn f64(&mut self) -> DecodeResult<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn str(&mut self) -> DecodeResult<String> {
        let n = self.len(1)?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| e.to_string())
    }

    pub fn f64s(&mut self) -> DecodeResult<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn value(&mut self) -> DecodeResult<ParamValue> {
        Ok(match self.u8()? {
            TAG_NUMBER => ParamValue::Number(self.f64()?),
            TAG_INTEGER => ParamValue::Integer(self.u64()? as i64),
            TAG_BOOLEAN => ParamValue::Boolean(self.u8()? != 0),
            TAG_STR => ParamValue::Str(self.str()?),
            TAG_VECTOR => ParamValue::Vector(self.f64s()?),
            TAG_MATRIX => {
                let rows = self.u64()? as usize;
                let cols = self.u64()? as usize;
                let n = rows
                    .checked_mul(cols)
                    .filter(|n| n.saturating_mul(8) <= self.buf.len() - self.pos)
                    .ok_or("matrix dimensions exceed payload")?;
                let data = (0..n).map(|_| self.f64()).collect::<DecodeResult<_>>()?;
                ParamValue::Matrix(Matrix::new(rows, cols, data))
            }
            TAG_LIST => {
                let n = self.len(1)?;
                ParamValue::List((0..n).map(|_| self.value()).collect::<DecodeResult<_>>()?)
            }
            t => return Err(format!("unknown value tag {t}")),
        })
    }

    pub fn map(&mut self) -> DecodeResult<ParamMap> {
        let n = self.len(1)?;
        let mut m = ParamMap::with_capacity(n);
        for _ in 0..n {
            let k = self.str()?;
            let v = self.value()?;
            m.insert(k, v);
        }
        Ok(m)
    }

    pub fn eval(&mut self) -> DecodeResult<EvalValue> {
        match self.u8()? {
            0 => Ok(EvalValue::Scalar(self.f64()?)),
            1 => Ok(EvalValue::Vector(self.f64s()?)),
            t => Err(format!("unknown eval tag {t}")),
        }
    }
}

/// Canonical serialization of a value, used for content digests.
pub fn canonical_bytes(v: &ParamValue) -> Vec<u8> {
    let mut w = Writer::new();
    w.value(v);
    w.into_bytes()
}

/// First 8 hex digits of the SHA-256 of the canonical serialization.
pub fn digest8(v: &ParamValue) -> String {
    let d = Sha256::digest(canonical_bytes(v));
    hex::encode(&d[..4])
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn escape(v: &str) -> String {
    v.replace('\\', "\\\\")
        .replace('\n', "\\n")
        .replace('\r', "\\r")
}

fn unescape(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    let mut chars = v.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Parsed object file: descriptive header fields plus the binary payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub header: IndexMap<String, String>,
    pub payload: Vec<u8>,
}

impl Container {
    pub fn new(kind: &str) -> Self {
        Container {
            kind: kind.to_string(),
            header: IndexMap::new(),
            payload: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.header.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.header.get(key).map(String::as_str)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut head = format!("{MAGIC}\nkind: {}\n", escape(&self.kind));
        for (k, v) in &self.header {
            head.push_str(&format!("{k}: {}\n", escape(v)));
        }
        head.push_str(&format!("payload: {}\n", self.payload.len()));
        let mut h = Sha256::new();
        h.update(head.as_bytes());
        h.update(&self.payload);
        let sum = hex::encode(h.finalize());
        let mut out = head.into_bytes();
        out.extend_from_slice(format!("checksum: sha256:{sum}\n\n").as_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses and verifies a file's bytes.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Container> {
        let bad = |reason: &str| Error::Format {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut pos = 0;
        let next_line = |pos: &mut usize| -> Result<&[u8]> {
            let rest = &bytes[*pos..];
            let nl = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| bad("header not terminated"))?;
            *pos += nl + 1;
            Ok(&rest[..nl])
        };
        if next_line(&mut pos)? != MAGIC.as_bytes() {
            return Err(bad("missing SIMSTUDY 1 magic line"));
        }
        let mut header = IndexMap::new();
        let mut kind = None;
        let mut payload_len = None;
        let mut head_end = 0;
        let mut checksum = None;
        loop {
            let line_start = pos;
            let line = std::str::from_utf8(next_line(&mut pos)?)
                .map_err(|_| bad("header is not utf-8"))?;
            if line.is_empty() {
                break;
            }
            let (k, v) = line
                .split_once(": ")
                .ok_or_else(|| bad("header line without ': '"))?;
            match k {
                "kind" => kind = Some(unescape(v)),
                "payload" => {
                    payload_len = Some(v.parse::<usize>().map_err(|_| bad("bad payload length"))?)
                }
                "checksum" => {
                    head_end = line_start;
                    checksum = Some(
                        v.strip_prefix("sha256:")
                            .ok_or_else(|| bad("unsupported checksum"))?
                            .to_string(),
                    );
                }
                _ => {
                    header.insert(k.to_string(), unescape(v));
                }
            }
        }
        let (kind, payload_len, checksum) = match (kind, payload_len, checksum) {
            (Some(k), Some(p), Some(c)) => (k, p, c),
            _ => return Err(bad("header missing kind, payload or checksum")),
        };
        let payload = &bytes[pos..];
        if payload.len() != payload_len {
            return Err(Error::Checksum {
                path: path.to_path_buf(),
            });
        }
        let mut h = Sha256::new();
        h.update(&bytes[..head_end]);
        h.update(payload);
        if hex::encode(h.finalize()) != checksum {
            return Err(Error::Checksum {
                path: path.to_path_buf(),
            });
        }
        Ok(Container {
            kind,
            header,
            payload: payload.to_vec(),
        })
    }
}
