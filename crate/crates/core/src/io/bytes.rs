//! Little-endian encoding helpers with truncation-aware reads.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Default)]
pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn scalar<T: Scalar>(&mut self, v: T) {
        v.write_le(&mut self.buf);
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    /// Writes `tag`, a length placeholder, the section body and then
    /// patches the length.
    pub fn section(&mut self, tag: u32, body: impl FnOnce(&mut Writer)) {
        self.u32(tag);
        let at = self.buf.len();
        self.u64(0);
        let start = self.buf.len();
        body(self);
        let len = (self.buf.len() - start) as u64;
        self.buf[at..at + 8].copy_from_slice(&len.to_le_bytes());
    }
}

#[derive(Debug)]
pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8], what: &'static str) -> Self {
        Self { data, pos: 0, what }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated(format!(
                "{}: needed {n} bytes at offset {}, {} left",
                self.what,
                self.pos,
                self.remaining()
            )));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    /// A count or size that must fit in memory; guards against absurd
    /// values from corrupt headers.
    pub fn len_value(&mut self) -> Result<usize> {
        let v = self.u64()?;
        if v > self.data.len() as u64 + (1 << 20) {
            return Err(Error::Malformed(format!(
                "{}: implausible length {v}",
                self.what
            )));
        }
        Ok(v as usize)
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub fn scalar<T: Scalar>(&mut self) -> Result<T> {
        Ok(T::read_le(self.take(T::WIDTH)?))
    }

    /// Opens the next section, checking its tag, and returns a reader over
    /// exactly its body.
    pub fn section(&mut self, tag: u32, what: &'static str) -> Result<Reader<'a>> {
        let found = self.u32()?;
        if found != tag {
            return Err(Error::Malformed(format!(
                "expected {what} section (tag {tag}), found tag {found}"
            )));
        }
        let len = self.u64()?;
        if len > self.remaining() as u64 {
            return Err(Error::Truncated(format!(
                "{what} section claims {len} bytes, {} left",
                self.remaining()
            )));
        }
        Ok(Reader::new(self.take(len as usize)?, what))
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Malformed(format!(
                "{}: {} trailing bytes",
                self.what,
                self.remaining()
            )));
        }
        Ok(())
    }
}
