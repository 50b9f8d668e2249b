//! Level-5 MAT-file reader (and a matching writer) restricted to real,
//! non-sparse double matrices.
//!
//! Layout handled:
//!
//! ```text
//! header   116 bytes text ("MATLAB 5.0 ...") | 8 bytes subsystem offset
//!          | u16 version | 2 bytes endian indicator ("IM" little, "MI" big)
//! element  u32 type | u32 byte count | data, padded to 8 bytes
//!          (small form: u16 count | u16 type | 4 bytes data)
//! ```
//!
//! Top-level elements must be `miMATRIX` (14) or `miCOMPRESSED` (15, a zlib
//! stream wrapping one `miMATRIX`). MATLAB may store the real part of a
//! double array in a narrower integer type; those are widened to `f64`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;

use crate::error::{Error, Result};

const MI_INT8: u32 = 1;
const MI_UINT8: u32 = 2;
const MI_INT16: u32 = 3;
const MI_UINT16: u32 = 4;
const MI_INT32: u32 = 5;
const MI_UINT32: u32 = 6;
const MI_SINGLE: u32 = 7;
const MI_DOUBLE: u32 = 9;
const MI_INT64: u32 = 12;
const MI_UINT64: u32 = 13;
const MI_MATRIX: u32 = 14;
const MI_COMPRESSED: u32 = 15;

const MX_DOUBLE_CLASS: u8 = 6;
const FLAG_COMPLEX: u32 = 0x0800;

const HEADER_LEN: usize = 128;
const MAGIC: &[u8] = b"MATLAB 5.0";

/// A 2-D real matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix with {} values",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn column(values: Vec<f64>) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// The samples of a row or column vector.
    pub fn into_vector(self) -> Result<Vec<f64>> {
        if self.rows == 1 || self.cols == 1 {
            Ok(self.data)
        } else {
            Err(Error::ShapeMismatch(format!(
                "expected a vector, found a {}x{} matrix",
                self.rows, self.cols
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endianness {
    Little,
    Big,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    big: bool,
}

struct Tag<'a> {
    dtype: u32,
    data: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn u32_at(&self, at: usize) -> Result<u32> {
        let b: [u8; 4] = self
            .bytes
            .get(at..at + 4)
            .ok_or_else(|| Error::TruncatedFile(format!("tag at offset {at}")))?
            .try_into()
            .expect("slice of length 4");
        Ok(if self.big {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn next_tag(&mut self) -> Result<Tag<'a>> {
        let start = self.pos;
        let first = self.u32_at(start)?;
        if first >> 16 != 0 {
            let dtype = first & 0xFFFF;
            let n = (first >> 16) as usize;
            if n > 4 {
                return Err(Error::TruncatedFile(format!(
                    "small element at offset {start} claims {n} bytes"
                )));
            }
            let data = self
                .bytes
                .get(start + 4..start + 4 + n)
                .ok_or_else(|| Error::TruncatedFile(format!("element at offset {start}")))?;
            self.pos = (start + 8).min(self.bytes.len());
            return Ok(Tag { dtype, data });
        }
        let dtype = first;
        let n = self.u32_at(start + 4)? as usize;
        let data = self
            .bytes
            .get(start + 8..start + 8 + n)
            .ok_or_else(|| Error::TruncatedFile(format!("element at offset {start} needs {n} bytes")))?;
        let advance = if dtype == MI_COMPRESSED { n } else { pad8(n) };
        // the final element's padding may be missing
        self.pos = (start + 8 + advance).min(self.bytes.len());
        Ok(Tag { dtype, data })
    }
}

fn pad8(n: usize) -> usize {
    n.div_ceil(8) * 8
}

/// Parses every named double matrix in a Level-5 MAT-file.
pub fn parse_mat5(bytes: &[u8]) -> Result<BTreeMap<String, MatMatrix>> {
    if !bytes.starts_with(MAGIC) {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile("header shorter than 128 bytes".into()));
    }
    let big = match &bytes[126..128] {
        b"IM" => false,
        b"MI" => true,
        _ => return Err(Error::BadMagic),
    };
    let mut out = BTreeMap::new();
    parse_elements(&bytes[HEADER_LEN..], big, &mut out)?;
    Ok(out)
}

fn parse_elements(bytes: &[u8], big: bool, out: &mut BTreeMap<String, MatMatrix>) -> Result<()> {
    let mut cur = Cursor { bytes, pos: 0, big };
    while !cur.at_end() {
        let tag = cur.next_tag()?;
        match tag.dtype {
            MI_MATRIX => {
                let (name, m) = parse_matrix(tag.data, big)?;
                out.insert(name, m);
            }
            MI_COMPRESSED => {
                let mut inflated = Vec::new();
                ZlibDecoder::new(tag.data)
                    .read_to_end(&mut inflated)
                    .map_err(|e| Error::TruncatedFile(format!("compressed element: {e}")))?;
                parse_elements(&inflated, big, out)?;
            }
            other => {
                return Err(Error::UnsupportedElement {
                    name: "<top level>".into(),
                    reason: format!("data element type {other}"),
                })
            }
        }
    }
    Ok(())
}

fn class_name(class: u8) -> &'static str {
    match class {
        1 => "cell array",
        2 => "struct",
        3 => "object",
        4 => "char array",
        5 => "sparse array",
        6 => "double",
        7 => "single",
        8 => "int8",
        9 => "uint8",
        10 => "int16",
        11 => "uint16",
        12 => "int32",
        13 => "uint32",
        14 => "int64",
        15 => "uint64",
        _ => "unknown class",
    }
}

fn parse_matrix(content: &[u8], big: bool) -> Result<(String, MatMatrix)> {
    let mut cur = Cursor {
        bytes: content,
        pos: 0,
        big,
    };
    let flags = cur.next_tag()?;
    if flags.dtype != MI_UINT32 || flags.data.len() < 8 {
        return Err(Error::TruncatedFile("array flags subelement".into()));
    }
    let word = read_u32(&flags.data[..4], big);
    let class = (word & 0xFF) as u8;
    let dims_tag = cur.next_tag()?;
    let dims = numeric_values(dims_tag.dtype, dims_tag.data, big)
        .ok_or_else(|| Error::TruncatedFile("dimensions subelement".into()))?;
    let name_tag = cur.next_tag()?;
    let name = String::from_utf8_lossy(name_tag.data).into_owned();

    let unsupported = |reason: String| Error::UnsupportedElement {
        name: name.clone(),
        reason,
    };
    if class != MX_DOUBLE_CLASS {
        return Err(unsupported(class_name(class).into()));
    }
    if word & FLAG_COMPLEX != 0 {
        return Err(unsupported("complex values".into()));
    }
    if dims.len() != 2 {
        return Err(unsupported(format!("{}-dimensional array", dims.len())));
    }
    let (rows, cols) = (dims[0] as usize, dims[1] as usize);

    let real = cur.next_tag()?;
    let col_major = numeric_values(real.dtype, real.data, big)
        .ok_or_else(|| unsupported(format!("real part stored as type {}", real.dtype)))?;
    if col_major.len() != rows * cols {
        return Err(Error::TruncatedFile(format!(
            "`{name}` declares {rows}x{cols} but holds {} values",
            col_major.len()
        )));
    }
    let mut data = vec![0.0; rows * cols];
    for c in 0..cols {
        for r in 0..rows {
            data[r * cols + c] = col_major[c * rows + r];
        }
    }
    Ok((name, MatMatrix { rows, cols, data }))
}

fn read_u32(b: &[u8], big: bool) -> u32 {
    let a: [u8; 4] = b[..4].try_into().expect("4 bytes");
    if big {
        u32::from_be_bytes(a)
    } else {
        u32::from_le_bytes(a)
    }
}

fn numeric_values(dtype: u32, data: &[u8], big: bool) -> Option<Vec<f64>> {
    macro_rules! decode {
        ($t:ty) => {{
            const W: usize = std::mem::size_of::<$t>();
            if !data.len().is_multiple_of(W) {
                return None;
            }
            data.chunks_exact(W)
                .map(|c| {
                    let a: [u8; W] = c.try_into().unwrap();
                    (if big {
                        <$t>::from_be_bytes(a)
                    } else {
                        <$t>::from_le_bytes(a)
                    }) as f64
                })
                .collect()
        }};
    }
    Some(match dtype {
        MI_INT8 => decode!(i8),
        MI_UINT8 => decode!(u8),
        MI_INT16 => decode!(i16),
        MI_UINT16 => decode!(u16),
        MI_INT32 => decode!(i32),
        MI_UINT32 => decode!(u32),
        MI_SINGLE => decode!(f32),
        MI_DOUBLE => decode!(f64),
        MI_INT64 => decode!(i64),
        MI_UINT64 => decode!(u64),
        _ => return None,
    })
}

// ---------------------------------------------------------------------------
// writer

struct Sink {
    buf: Vec<u8>,
    big: bool,
}

impl Sink {
    fn u16(&mut self, v: u16) {
        let b = if self.big { v.to_be_bytes() } else { v.to_le_bytes() };
        self.buf.extend_from_slice(&b);
    }

    fn u32(&mut self, v: u32) {
        let b = if self.big { v.to_be_bytes() } else { v.to_le_bytes() };
        self.buf.extend_from_slice(&b);
    }

    fn pad(&mut self) {
        while !self.buf.len().is_multiple_of(8) {
            self.buf.push(0);
        }
    }

    fn element(&mut self, dtype: u32, payload: &[u8]) {
        if payload.len() <= 4 && dtype != MI_MATRIX {
            self.u32(((payload.len() as u32) << 16) | dtype);
            self.buf.extend_from_slice(payload);
            self.buf.resize(self.buf.len() + 4 - payload.len(), 0);
        } else {
            self.u32(dtype);
            self.u32(payload.len() as u32);
            self.buf.extend_from_slice(payload);
            self.pad();
        }
    }
}

fn encode_matrix(name: &str, m: &MatMatrix, big: bool) -> Vec<u8> {
    let mut body = Sink { buf: Vec::new(), big };
    let words = |vals: &[u32]| -> Vec<u8> {
        vals.iter()
            .flat_map(|v| if big { v.to_be_bytes() } else { v.to_le_bytes() })
            .collect()
    };
    body.element(MI_UINT32, &words(&[MX_DOUBLE_CLASS as u32, 0]));
    body.element(MI_INT32, &words(&[m.rows as u32, m.cols as u32]));
    body.element(MI_INT8, name.as_bytes());
    let mut real = Vec::with_capacity(m.data.len() * 8);
    for c in 0..m.cols {
        for r in 0..m.rows {
            let v = m.get(r, c);
            real.extend_from_slice(&if big { v.to_be_bytes() } else { v.to_le_bytes() });
        }
    }
    body.element(MI_DOUBLE, &real);

    let mut el = Sink { buf: Vec::new(), big };
    el.element(MI_MATRIX, &body.buf);
    el.buf
}

/// Serializes matrices as a Level-5 MAT-file, optionally wrapping each
/// `miMATRIX` element in a zlib-compressed `miCOMPRESSED` element.
pub fn write_mat5(vars: &[(&str, &MatMatrix)], endian: Endianness, compress: bool) -> Vec<u8> {
    let big = endian == Endianness::Big;
    let mut out = Sink { buf: Vec::new(), big };
    let mut text = b"MATLAB 5.0 MAT-file, Platform: faultlab, Created by: faultlab".to_vec();
    text.resize(116, b' ');
    out.buf.extend_from_slice(&text);
    out.buf.extend_from_slice(&[0u8; 8]);
    out.u16(0x0100);
    out.u16(u16::from_be_bytes(*b"MI"));
    for (name, m) in vars {
        let el = encode_matrix(name, m, big);
        if compress {
            let mut enc = ZlibEncoder::new(Vec::new(), Compression::default());
            enc.write_all(&el).expect("in-memory zlib write");
            let z = enc.finish().expect("in-memory zlib finish");
            out.u32(MI_COMPRESSED);
            out.u32(z.len() as u32);
            out.buf.extend_from_slice(&z);
        } else {
            out.buf.extend_from_slice(&el);
        }
    }
    out.buf
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> MatMatrix {
        MatMatrix::column(vec![1.0, 2.0, 3.0])
    }

    #[test]
    fn zero_header_is_bad_magic() {
        assert!(matches!(parse_mat5(&[0u8; 128]), Err(Error::BadMagic)));
    }

    #[test]
    fn golden_little_endian_bytes() {
        let bytes = write_mat5(&[("X_DE_time", &fixture())], Endianness::Little, false);
        assert_eq!(&bytes[126..128], b"IM");
        assert_eq!(&bytes[124..126], &[0x00, 0x01]);
        // miMATRIX tag: type 14, 88 bytes = flags 16 + dims 16 + name 8+16 + real 8+24
        assert_eq!(&bytes[128..136], &[14, 0, 0, 0, 88, 0, 0, 0]);
        // array flags: miUINT32, 8 bytes, class double
        assert_eq!(&bytes[136..148], &[6, 0, 0, 0, 8, 0, 0, 0, 6, 0, 0, 0]);
        assert_eq!(bytes.len(), 128 + 8 + 88);
        let first_value = &bytes[bytes.len() - 24..bytes.len() - 16];
        assert_eq!(first_value, &1.0f64.to_le_bytes());
    }

    #[test]
    fn round_trip_all_variants() {
        let wide = MatMatrix::from_row_major(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        for endian in [Endianness::Little, Endianness::Big] {
            for compress in [false, true] {
                let bytes = write_mat5(&[("X_DE_time", &fixture()), ("ab", &wide)], endian, compress);
                let map = parse_mat5(&bytes).unwrap();
                assert_eq!(map.len(), 2);
                assert_eq!(map["X_DE_time"], fixture());
                assert_eq!(map["ab"], wide);
                assert_eq!(map["ab"].get(1, 0), 4.0);
            }
        }
    }

    #[test]
    fn truncated_element() {
        let bytes = write_mat5(&[("x", &fixture())], Endianness::Little, false);
        assert!(matches!(
            parse_mat5(&bytes[..bytes.len() - 20]),
            Err(Error::TruncatedFile(_))
        ));
        assert!(matches!(parse_mat5(&bytes[..60]), Err(Error::TruncatedFile(_))));
    }

    #[test]
    fn non_double_class_names_variable() {
        let mut bytes = write_mat5(&[("sig", &fixture())], Endianness::Little, false);
        // class byte lives in the first word of the array-flags payload
        bytes[144] = 7;
        match parse_mat5(&bytes) {
            Err(Error::UnsupportedElement { name, reason }) => {
                assert_eq!(name, "sig");
                assert_eq!(reason, "single");
            }
            other => panic!("unexpected {other:?}"),
        }
        bytes[144] = 6;
        bytes[145] = 0x08; // complex flag
        assert!(matches!(parse_mat5(&bytes), Err(Error::UnsupportedElement { .. })));
    }

    #[test]
    fn narrow_storage_is_widened() {
        // hand-built miMATRIX storing a double 2x1 array as miUINT8
        let mut s = Sink {
            buf: Vec::new(),
            big: false,
        };
        s.element(MI_UINT32, &[6, 0, 0, 0, 0, 0, 0, 0]);
        s.element(MI_INT32, &[2, 0, 0, 0, 1, 0, 0, 0]);
        s.element(MI_INT8, b"u");
        s.element(MI_UINT8, &[7, 250]);
        let mut el = Sink {
            buf: Vec::new(),
            big: false,
        };
        el.element(MI_MATRIX, &s.buf);
        let mut bytes = write_mat5(&[], Endianness::Little, false);
        bytes.extend_from_slice(&el.buf);
        let map = parse_mat5(&bytes).unwrap();
        assert_eq!(map["u"].data, vec![7.0, 250.0]);
    }
}
