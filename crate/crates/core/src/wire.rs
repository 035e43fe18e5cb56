//! Little-endian binary section format shared by dataset and checkpoint files.
//!
//! Both on-disk formats use the same skeleton:
//!
//! ```text
//! magic      4 bytes  (format discriminator)
//! version    u32 LE
//! section*   repeated:
//!     tag        4 bytes ASCII
//!     length     u64 LE  (payload byte count)
//!     payload    length bytes
//!     crc32      u32 LE  (IEEE CRC-32 of the payload)
//! ```
//!
//! Sections appear in a fixed, format-defined order. All multi-byte
//! integers and floats are little-endian. Readers report three distinct
//! failures: wrong magic, unsupported version, truncation (file ends
//! inside a record), and checksum mismatch (payload bytes corrupted).

use crate::error::{Error, Result};
use std::io::{Read, Write};

/// Serialize primitives into a growing little-endian buffer.
#[derive(Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    pub fn put_f32_slice(&mut self, v: &[f32]) {
        for &x in v {
            self.put_f32(x);
        }
    }

    pub fn put_f64_slice(&mut self, v: &[f64]) {
        for &x in v {
            self.put_f64(x);
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

/// Deserialize primitives from a byte slice, reporting truncation by name.
pub struct Decoder<'a> {
    buf: &'a [u8],
    /// Section name used in truncation errors.
    what: &'static str,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8], what: &'static str) -> Self {
        Self { buf, what }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Truncated(self.what));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn get_u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn get_u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn get_f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn get_f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn get_bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        self.take(n)
    }

    pub fn get_f32_vec(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn get_f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn remaining(&self) -> usize {
        self.buf.len()
    }
}

/// Write the file preamble.
pub fn write_magic<W: Write>(w: &mut W, magic: &[u8; 4], version: u32) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&version.to_le_bytes())?;
    Ok(())
}

/// Read and validate the file preamble.
pub fn read_magic<R: Read>(r: &mut R, magic: &[u8; 4], version: u32) -> Result<()> {
    let mut head = [0u8; 8];
    r.read_exact(&mut head).map_err(|_| Error::Truncated("file header"))?;
    if &head[0..4] != magic {
        return Err(Error::BadMagic);
    }
    let found = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if found != version {
        return Err(Error::FormatVersion {
            found,
            expected: version,
        });
    }
    Ok(())
}

/// Write one checksummed section.
pub fn write_section<W: Write>(w: &mut W, tag: &[u8; 4], payload: &[u8]) -> Result<()> {
    w.write_all(tag)?;
    w.write_all(&(payload.len() as u64).to_le_bytes())?;
    w.write_all(payload)?;
    w.write_all(&crc32fast::hash(payload).to_le_bytes())?;
    Ok(())
}

/// Read one section, enforcing the expected tag and checksum.
pub fn read_section<R: Read>(r: &mut R, tag: &[u8; 4]) -> Result<Vec<u8>> {
    let mut head = [0u8; 12];
    r.read_exact(&mut head).map_err(|_| Error::Truncated("section header"))?;
    if &head[0..4] != tag {
        return Err(Error::Verification(format!(
            "expected section `{}`, found `{}`",
            String::from_utf8_lossy(tag),
            String::from_utf8_lossy(&head[0..4]),
        )));
    }
    let len = u64::from_le_bytes(head[4..12].try_into().unwrap()) as usize;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload).map_err(|_| Error::Truncated("section payload"))?;
    let mut crc = [0u8; 4];
    r.read_exact(&mut crc).map_err(|_| Error::Truncated("section checksum"))?;
    if u32::from_le_bytes(crc) != crc32fast::hash(&payload) {
        return Err(Error::ChecksumMismatch(
            String::from_utf8_lossy(tag).into_owned(),
        ));
    }
    Ok(payload)
}

/// SHA-256 digest of a byte slice.
pub fn sha256(bytes: &[u8]) -> [u8; 32] {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().into()
}

/// SHA-256 digest of a file's contents.
pub fn sha256_file(path: &std::path::Path) -> Result<[u8; 32]> {
    Ok(sha256(&std::fs::read(path)?))
}

/// Lowercase hex rendering of a digest.
pub fn to_hex(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn section_round_trip() {
        let mut buf = Vec::new();
        write_magic(&mut buf, b"TEST", 3).unwrap();
        write_section(&mut buf, b"DATA", &[1, 2, 3, 4, 5]).unwrap();

        let mut r = &buf[..];
        read_magic(&mut r, b"TEST", 3).unwrap();
        assert_eq!(read_section(&mut r, b"DATA").unwrap(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn version_mismatch_is_distinct() {
        let mut buf = Vec::new();
        write_magic(&mut buf, b"TEST", 2).unwrap();
        match read_magic(&mut &buf[..], b"TEST", 3) {
            Err(Error::FormatVersion { found: 2, expected: 3 }) => {}
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn truncation_is_distinct() {
        let mut buf = Vec::new();
        write_magic(&mut buf, b"TEST", 1).unwrap();
        write_section(&mut buf, b"DATA", &[9; 100]).unwrap();
        buf.truncate(buf.len() - 30);

        let mut r = &buf[..];
        read_magic(&mut r, b"TEST", 1).unwrap();
        match read_section(&mut r, b"DATA") {
            Err(Error::Truncated(_)) => {}
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn corruption_is_distinct() {
        let mut buf = Vec::new();
        write_magic(&mut buf, b"TEST", 1).unwrap();
        write_section(&mut buf, b"DATA", &[9; 100]).unwrap();
        let n = buf.len();
        buf[n - 20] ^= 0xff; // flip a payload byte

        let mut r = &buf[..];
        read_magic(&mut r, b"TEST", 1).unwrap();
        match read_section(&mut r, b"DATA") {
            Err(Error::ChecksumMismatch(tag)) => assert_eq!(tag, "DATA"),
            other => panic!("expected checksum error, got {other:?}"),
        }
    }

    #[test]
    fn decoder_reports_truncation() {
        let enc = {
            let mut e = Encoder::new();
            e.put_u32(7);
            e.into_bytes()
        };
        let mut d = Decoder::new(&enc, "meta");
        assert_eq!(d.get_u32().unwrap(), 7);
        assert!(matches!(d.get_u64(), Err(Error::Truncated("meta"))));
    }
}
