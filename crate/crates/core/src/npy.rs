//! Reading and writing tensors in the numpy npy v1.0 format.
//!
//! Only little-endian binary32 (`'<f4'`) in C order is supported. Fortran
//! order, other dtypes, and other format versions are rejected. See
//! <https://numpy.org/neps/nep-0001-npy-format.html> for the layout.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// The npy magic number.
pub const MAGIC: [u8; 6] = *b"\x93NUMPY";

const PREAMBLE_LEN: usize = 10;
const ALIGN: usize = 64;
const DESCR: &str = "<f4";

/// Load an `'<f4'` npy file.
pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Write `tensor` as an npy v1.0 file.
pub fn save_tensor(tensor: &Tensor<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(tensor)).map_err(|e| Error::io(path, e))
}

/// Header dictionary text, without padding.
fn header_dict(shape: &[usize]) -> String {
    let dims = match shape {
        [d] => format!("({d},)"),
        _ => {
            let parts: Vec<String> = shape.iter().map(usize::to_string).collect();
            format!("({})", parts.join(", "))
        }
    };
    format!("{{'descr': '{DESCR}', 'fortran_order': False, 'shape': {dims}, }}")
}

/// Serialize a tensor to npy bytes.
pub fn encode(tensor: &Tensor<f32>) -> Vec<u8> {
    let mut header = header_dict(tensor.shape());
    // dict + padding + '\n' must end on a 64-byte boundary
    let unpadded = PREAMBLE_LEN + header.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    header.extend(std::iter::repeat_n(' ', pad));
    header.push('\n');

    let mut out = Vec::with_capacity(PREAMBLE_LEN + header.len() + 4 * tensor.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in tensor.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parse npy bytes into a tensor.
pub fn decode(bytes: &[u8]) -> Result<Tensor<f32>> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        let offset = bytes
            .iter()
            .zip(&MAGIC)
            .position(|(a, b)| a != b)
            .unwrap_or(bytes.len().min(MAGIC.len()));
        return Err(Error::format(offset, "missing npy magic"));
    }
    if bytes.len() < PREAMBLE_LEN {
        return Err(Error::format(bytes.len(), "truncated preamble"));
    }
    if bytes[6..8] != [1, 0] {
        return Err(Error::format(
            6,
            format!("unsupported npy version {}.{}", bytes[6], bytes[7]),
        ));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = PREAMBLE_LEN + header_len;
    if bytes.len() < data_start {
        return Err(Error::format(
            bytes.len(),
            format!("header declares {header_len} bytes but file ends early"),
        ));
    }
    if !data_start.is_multiple_of(ALIGN) {
        return Err(Error::format(
            8,
            "header length does not align data to 64 bytes",
        ));
    }
    let header = &bytes[PREAMBLE_LEN..data_start];
    let dict = HeaderParser::new(header, PREAMBLE_LEN).parse()?;

    if dict.fortran_order {
        return Err(Error::format(
            PREAMBLE_LEN,
            "fortran_order arrays are not supported",
        ));
    }
    if dict.descr != DESCR {
        return Err(Error::UnsupportedDtype { descr: dict.descr });
    }
    let count = dict
        .shape
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))
        .ok_or_else(|| Error::format(PREAMBLE_LEN, "shape overflows"))?;
    let payload = &bytes[data_start..];
    let expected = count
        .checked_mul(4)
        .ok_or_else(|| Error::format(PREAMBLE_LEN, "shape overflows"))?;
    if payload.len() != expected {
        return Err(Error::format(
            data_start,
            format!(
                "shape {:?} needs {expected} payload bytes, found {}",
                dict.shape,
                payload.len()
            ),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Tensor::new(dict.shape, data)
}

#[derive(Debug)]
struct HeaderDict {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

enum Value {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

/// Parser for the python dict literal subset npy headers use.
struct HeaderParser<'a> {
    src: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> HeaderParser<'a> {
    fn new(src: &'a [u8], base: usize) -> Self {
        HeaderParser { src, pos: 0, base }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::format(self.base + self.pos, message)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    /// Consume `c` if it is the next non-blank byte.
    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse(mut self) -> Result<HeaderDict> {
        if self.src.last() != Some(&b'\n') {
            self.pos = self.src.len().saturating_sub(1);
            return Err(self.err("header not terminated by newline"));
        }
        if !self.src.is_ascii() {
            let bad = self.src.iter().position(|b| !b.is_ascii()).unwrap_or(0);
            self.pos = bad;
            return Err(self.err("header is not ASCII"));
        }

        let mut descr = None;
        let mut fortran_order = None;
        let mut shape = None;

        self.expect(b'{')?;
        loop {
            if self.eat(b'}') {
                break;
            }
            let key_pos = self.pos;
            let key = self.string()?;
            self.expect(b':')?;
            let value = self.value()?;
            let slot_ok = match (key.as_str(), value) {
                ("descr", Value::Str(s)) => descr.replace(s).is_none(),
                ("fortran_order", Value::Bool(b)) => fortran_order.replace(b).is_none(),
                ("shape", Value::Tuple(t)) => shape.replace(t).is_none(),
                ("descr" | "fortran_order" | "shape", _) => {
                    self.pos = key_pos;
                    return Err(self.err(format!("wrong value type for key '{key}'")));
                }
                _ => {
                    self.pos = key_pos;
                    return Err(self.err(format!("unexpected key '{key}'")));
                }
            };
            if !slot_ok {
                self.pos = key_pos;
                return Err(self.err(format!("duplicate key '{key}'")));
            }
            if !self.eat(b',') {
                self.expect(b'}')?;
                break;
            }
        }
        self.skip_ws();
        if self.pos != self.src.len() - 1 {
            return Err(self.err("trailing characters after header dict"));
        }

        let (Some(descr), Some(fortran_order), Some(shape)) = (descr, fortran_order, shape) else {
            return Err(self.err("header dict lacks descr, fortran_order or shape"));
        };
        Ok(HeaderDict {
            descr,
            fortran_order,
            shape,
        })
    }

    fn string(&mut self) -> Result<String> {
        self.skip_ws();
        let quote = match self.peek() {
            Some(q @ (b'\'' | b'"')) => q,
            _ => return Err(self.err("expected string")),
        };
        self.pos += 1;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == quote {
                let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                self.pos += 1;
                return Ok(s);
            }
            if c == b'\\' || c == b'\n' {
                break;
            }
            self.pos += 1;
        }
        Err(self.err("unterminated string"))
    }

    fn value(&mut self) -> Result<Value> {
        self.skip_ws();
        match self.peek() {
            Some(b'\'' | b'"') => self.string().map(Value::Str),
            Some(b'(') => self.tuple().map(Value::Tuple),
            _ if self.src[self.pos..].starts_with(b"True") => {
                self.pos += 4;
                Ok(Value::Bool(true))
            }
            _ if self.src[self.pos..].starts_with(b"False") => {
                self.pos += 5;
                Ok(Value::Bool(false))
            }
            _ => Err(self.err("expected string, boolean or tuple")),
        }
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.expect(b'(')?;
        let mut items = Vec::new();
        loop {
            if self.eat(b')') {
                return Ok(items);
            }
            items.push(self.integer()?);
            if !self.eat(b',') {
                self.expect(b')')?;
                return Ok(items);
            }
        }
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        // python 2 era writers append 'L' to longs
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        if self.peek() == Some(b'L') {
            self.pos += 1;
        }
        digits.parse().map_err(|_| {
            self.pos = start;
            self.err("expected non-negative integer")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: Vec<usize>, data: Vec<f32>) -> Tensor<f32> {
        Tensor::new(shape, data).unwrap()
    }

    #[test]
    fn header_is_padded_to_alignment() {
        for shape in [vec![1], vec![3, 3], vec![2048, 7, 7]] {
            let n = shape.iter().product();
            let bytes = encode(&t(shape, vec![0.0; n]));
            let hlen = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
            assert_eq!((PREAMBLE_LEN + hlen) % 64, 0);
            assert_eq!(bytes[PREAMBLE_LEN + hlen - 1], b'\n');
        }
        let one = encode(&t(vec![5], vec![0.0; 5]));
        assert!(String::from_utf8_lossy(&one[10..128]).contains("'shape': (5,), }"));
    }

    #[test]
    fn round_trips_single_value() {
        let x = t(vec![1], vec![0.0]);
        assert_eq!(decode(&encode(&x)).unwrap(), x);
    }

    #[test]
    fn rejects_bad_magic_with_offset() {
        let mut bytes = encode(&t(vec![2], vec![1.0, 2.0]));
        bytes[3] = b'X';
        match decode(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            decode(b"\x93NU"),
            Err(Error::Format { offset: 3, .. })
        ));
    }

    #[test]
    fn rejects_length_mismatch() {
        let mut bytes = encode(&t(vec![2, 2], vec![1.0; 4]));
        bytes.truncate(bytes.len() - 4);
        match decode(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 128),
            other => panic!("unexpected {other:?}"),
        }
        let mut long = encode(&t(vec![2], vec![1.0; 2]));
        long.extend_from_slice(&[0; 4]);
        assert!(matches!(decode(&long), Err(Error::Format { .. })));
    }

    fn with_header(dict: &str, payload: &[u8]) -> Vec<u8> {
        let mut header = dict.to_string();
        let pad = (64 - (10 + header.len() + 1) % 64) % 64;
        header.push_str(&" ".repeat(pad));
        header.push('\n');
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(header.len() as u16).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(payload);
        out
    }

    #[test]
    fn rejects_other_dtypes_and_layouts() {
        let f8 = with_header(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (1,), }",
            &[0; 8],
        );
        assert!(matches!(decode(&f8), Err(Error::UnsupportedDtype { descr }) if descr == "<f8"));
        let be = with_header(
            "{'descr': '>f4', 'fortran_order': False, 'shape': (1,), }",
            &[0; 4],
        );
        assert!(matches!(decode(&be), Err(Error::UnsupportedDtype { .. })));
        let fo = with_header(
            "{'descr': '<f4', 'fortran_order': True, 'shape': (1,), }",
            &[0; 4],
        );
        assert!(matches!(decode(&fo), Err(Error::Format { .. })));
    }

    #[test]
    fn accepts_key_order_and_spacing_variants() {
        let bytes = with_header(
            "{\"shape\":(2 , 1),'fortran_order':False,'descr':'<f4'}",
            &[0, 0, 128, 63, 0, 0, 0, 64],
        );
        let x = decode(&bytes).unwrap();
        assert_eq!(x.shape(), &[2, 1]);
        assert_eq!(x.data(), &[1.0, 2.0]);
    }

    #[test]
    fn malformed_headers_report_offsets() {
        for dict in [
            "{'descr': '<f4', 'fortran_order': False}",
            "{'descr': '<f4', 'fortran_order': False, 'shape': (1,), 'extra': 1, }",
            "{'descr': '<f4', 'fortran_order': Maybe, 'shape': (1,), }",
            "{'descr': '<f4', 'fortran_order': False, 'shape': (-1,), }",
            "{'descr': '<f4', 'fortran_order': False, 'shape': (1,), } junk",
            "['descr', '<f4']",
        ] {
            match decode(&with_header(dict, &[0; 4])) {
                Err(Error::Format { offset, .. }) => {
                    assert!((10..128).contains(&offset), "{dict}: {offset}")
                }
                other => panic!("{dict}: unexpected {other:?}"),
            }
        }
        let mut v2 = encode(&t(vec![1], vec![0.0]));
        v2[6] = 2;
        assert!(matches!(decode(&v2), Err(Error::Format { offset: 6, .. })));
    }

    #[test]
    fn rejects_non_finite_payload() {
        let mut payload = Vec::new();
        for v in [1.0f32, f32::NAN, f32::INFINITY] {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        let bytes = with_header(
            "{'descr': '<f4', 'fortran_order': False, 'shape': (3,), }",
            &payload,
        );
        assert!(matches!(decode(&bytes), Err(Error::NonFinite { index: 1 })));
    }

    #[test]
    fn rejects_scalar_and_rank_four() {
        let scalar = with_header(
            "{'descr': '<f4', 'fortran_order': False, 'shape': (), }",
            &[0; 4],
        );
        assert!(matches!(decode(&scalar), Err(Error::InvalidTensor(_))));
        let r4 = with_header(
            "{'descr': '<f4', 'fortran_order': False, 'shape': (1, 1, 1, 1), }",
            &[0; 4],
        );
        assert!(matches!(decode(&r4), Err(Error::InvalidTensor(_))));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("x.npy");
        let err = save_tensor(&t(vec![1], vec![0.0]), &path).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("x.npy"));
    }
}
