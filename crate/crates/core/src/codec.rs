//! Little-endian primitives shared by the on-disk index formats.
//!
//! Every file is `magic (8 bytes) | version u32 | body ... | crc32 of everything before it`.
//! Readers never trust a declared length beyond the bytes actually present, so
//! arbitrary input yields an error rather than a panic or a huge allocation.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Default)]
pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn varint(&mut self, mut v: u64) {
        while v >= 0x80 {
            self.buf.push((v as u8) | 0x80);
            v >>= 7;
        }
        self.buf.push(v as u8);
    }

    pub fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.bytes(s.as_bytes());
    }

    /// Writes a u64 length prefix followed by the section produced by `f`.
    pub fn section(&mut self, f: impl FnOnce(&mut ByteWriter)) {
        let mut inner = ByteWriter::new();
        f(&mut inner);
        self.u64(inner.buf.len() as u64);
        self.buf.extend_from_slice(&inner.buf);
    }

    /// Appends the trailing checksum and returns the finished file image.
    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.u32(crc);
        self.buf
    }
}

pub(crate) struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn rest(self) -> &'a [u8] {
        &self.data[self.pos..]
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Truncated);
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    pub fn varint(&mut self) -> Result<u64> {
        let mut out = 0u64;
        for shift in (0..64).step_by(7) {
            let byte = self.u8()?;
            out |= u64::from(byte & 0x7f) << shift;
            if byte & 0x80 == 0 {
                return Ok(out);
            }
        }
        Err(Error::Corrupt("varint longer than 10 bytes".into()))
    }

    pub fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Corrupt("invalid utf-8 string".into()))
    }

    /// Reads a u64 length prefix and returns a reader over exactly that section.
    pub fn section(&mut self) -> Result<ByteReader<'a>> {
        let len = self.u64()?;
        let len = usize::try_from(len).map_err(|_| Error::Truncated)?;
        Ok(ByteReader::new(self.take(len)?))
    }

    /// A declared element count can never exceed the bytes left when each element
    /// occupies at least `min_size` bytes.
    pub fn count(&mut self, min_size: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_size.max(1)) > self.remaining() {
            return Err(Error::Truncated);
        }
        Ok(n)
    }

    pub fn expect_end(&self, what: &str) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Corrupt(format!("{} trailing bytes in {what}", self.remaining())));
        }
        Ok(())
    }
}

/// Validates header and trailer, returning a reader positioned after the version.
///
/// Check order: truncation of the header, magic, version. The checksum is verified
/// by [`verify_checksum`] once the body has been parsed, so that a short body reports
/// truncation rather than a checksum failure.
pub(crate) fn open<'a>(
    data: &'a [u8],
    magic: &[u8; 8],
    version: u32,
    wrong_magic: fn() -> Error,
) -> Result<ByteReader<'a>> {
    let mut r = ByteReader::new(data);
    let head = r.take(8).map_err(|_| {
        if data.is_empty() || magic.starts_with(data) {
            Error::Truncated
        } else {
            wrong_magic()
        }
    })?;
    if head != magic {
        return Err(wrong_magic());
    }
    let found = r.u32()?;
    if found != version {
        return Err(Error::UnsupportedVersion {
            found,
            expected: version,
        });
    }
    Ok(r)
}

/// Called with the reader positioned just after the body.
pub(crate) fn verify_checksum(data: &[u8], r: &mut ByteReader<'_>) -> Result<()> {
    let body_end = r.position();
    let stored = r.u32()?;
    r.expect_end("index file")?;
    let computed = crc32fast::hash(&data[..body_end]);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    Ok(())
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    Ok(fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn varint_round_trip_edges() {
        let values = [0u64, 1, 127, 128, 300, u32::MAX as u64, u64::MAX];
        let mut w = ByteWriter::new();
        for v in values {
            w.varint(v);
        }
        let buf = w.buf;
        let mut r = ByteReader::new(&buf);
        for v in values {
            assert_eq!(r.varint().unwrap(), v);
        }
        assert_eq!(r.remaining(), 0);
    }

    #[test]
    fn reader_reports_truncation() {
        let mut r = ByteReader::new(&[1, 2]);
        assert!(matches!(r.u32(), Err(Error::Truncated)));
        let mut r = ByteReader::new(&[0xff, 0xff, 0xff, 0xff]);
        assert!(matches!(r.count(1), Err(Error::Truncated)));
    }
}
