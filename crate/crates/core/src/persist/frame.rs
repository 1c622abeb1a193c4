//! Little-endian section framing shared by the level blobs.
//!
//! A blob is an 8-byte magic followed by sections, each an 8-byte ASCII tag,
//! a u64 payload length and the payload. Arrays inside payloads are a u64
//! element count followed by the elements.

use crate::error::{HumapError, Result};

#[derive(Default)]
pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 8]) -> Self {
        Writer { buf: magic.to_vec() }
    }

    pub fn section(&mut self, tag: &[u8; 8], body: Writer) {
        self.buf.extend_from_slice(tag);
        self.u64(body.buf.len() as u64);
        self.buf.extend_from_slice(&body.buf);
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn usizes(&mut self, v: &[usize]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.u64(x as u64);
        }
    }

    pub fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.buf.extend_from_slice(&x.to_bits().to_le_bytes());
        }
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.u64(v.len() as u64);
        self.buf.extend_from_slice(v);
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn with_magic(buf: &'a [u8], magic: &[u8; 8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        if r.take(8)? != magic {
            return Err(HumapError::format(format!(
                "bad magic, expected {}",
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(r)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(HumapError::format("unexpected end of data"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| HumapError::format("value exceeds usize"))
    }

    /// Element count checked against the bytes actually available, so a
    /// corrupt length can never trigger a huge allocation.
    fn count(&mut self, elem_size: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.checked_mul(elem_size).is_none_or(|b| b > self.remaining()) {
            return Err(HumapError::format("array length exceeds available data"));
        }
        Ok(n)
    }

    pub fn usizes(&mut self) -> Result<Vec<usize>> {
        let n = self.count(8)?;
        (0..n).map(|_| self.usize()).collect()
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.count(8)?;
        (0..n).map(|_| self.u64().map(f64::from_bits)).collect()
    }

    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.count(1)?;
        self.take(n)
    }

    /// Next `(tag, body)` section.
    pub fn section(&mut self) -> Result<([u8; 8], Reader<'a>)> {
        let tag: [u8; 8] = self.take(8)?.try_into().unwrap();
        let len = self.usize()?;
        Ok((tag, Reader::new(self.take(len)?)))
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(HumapError::format(format!("{} trailing bytes", self.remaining())))
        }
    }
}
