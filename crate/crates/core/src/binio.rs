//! Length-prefixed binary encoding shared by the corpus cache, topic model,
//! and trained model file formats. All integers and floats are little-endian;
//! every file ends with a CRC-32 trailer over the preceding bytes.

use std::io::{self, Read, Write};

use crc32fast::Hasher;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BinError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported version: file is {found:?}, this build reads {expected:?}")]
    Version { expected: String, found: String },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x} (file truncated or corrupted)")]
    Checksum { stored: u32, computed: u32 },
    #[error("invalid utf-8 in string field")]
    Utf8,
    #[error("string length {0} exceeds limit")]
    Oversize(u64),
}

/// Writer that accumulates a CRC-32 of everything written through it.
pub struct CrcWriter<W: Write> {
    inner: W,
    hasher: Hasher,
}

impl<W: Write> CrcWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner, hasher: Hasher::new() }
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) -> Result<(), BinError> {
        self.hasher.update(bytes);
        self.inner.write_all(bytes)?;
        Ok(())
    }

    pub fn write_u32(&mut self, v: u32) -> Result<(), BinError> {
        self.write_bytes(&v.to_le_bytes())
    }

    pub fn write_u64(&mut self, v: u64) -> Result<(), BinError> {
        self.write_bytes(&v.to_le_bytes())
    }

    pub fn write_i64(&mut self, v: i64) -> Result<(), BinError> {
        self.write_bytes(&v.to_le_bytes())
    }

    pub fn write_f64(&mut self, v: f64) -> Result<(), BinError> {
        self.write_bytes(&v.to_le_bytes())
    }

    pub fn write_str(&mut self, s: &str) -> Result<(), BinError> {
        self.write_u64(s.len() as u64)?;
        self.write_bytes(s.as_bytes())
    }

    pub fn write_f64_slice(&mut self, vs: &[f64]) -> Result<(), BinError> {
        self.write_u64(vs.len() as u64)?;
        for &v in vs {
            self.write_f64(v)?;
        }
        Ok(())
    }

    /// Writes the CRC-32 trailer and returns the inner writer.
    pub fn finish(mut self) -> Result<W, BinError> {
        let crc = self.hasher.clone().finalize();
        self.inner.write_all(&crc.to_le_bytes())?;
        Ok(self.inner)
    }
}

/// Reader over an in-memory buffer whose CRC-32 trailer has already been
/// verified by [`CrcReader::new`].
pub struct CrcReader {
    buf: Vec<u8>,
    pos: usize,
}

impl CrcReader {
    /// Reads the whole stream, verifies the trailing CRC-32, and exposes the
    /// payload for decoding. Rejects the file before any field is parsed.
    pub fn new<R: Read>(mut inner: R) -> Result<Self, BinError> {
        let mut buf = Vec::new();
        inner.read_to_end(&mut buf)?;
        if buf.len() < 4 {
            return Err(BinError::Checksum { stored: 0, computed: 0 });
        }
        let body = buf.len() - 4;
        let stored = u32::from_le_bytes(buf[body..].try_into().unwrap());
        let mut hasher = Hasher::new();
        hasher.update(&buf[..body]);
        let computed = hasher.finalize();
        if stored != computed {
            return Err(BinError::Checksum { stored, computed });
        }
        buf.truncate(body);
        Ok(Self { buf, pos: 0 })
    }

    fn take(&mut self, n: usize) -> Result<&[u8], BinError> {
        if self.pos + n > self.buf.len() {
            return Err(BinError::Io(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "payload shorter than declared",
            )));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub fn read_u32(&mut self) -> Result<u32, BinError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn read_u64(&mut self) -> Result<u64, BinError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn read_i64(&mut self) -> Result<i64, BinError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn read_f64(&mut self) -> Result<f64, BinError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn read_str(&mut self) -> Result<String, BinError> {
        let len = self.read_u64()?;
        if len > 1 << 32 {
            return Err(BinError::Oversize(len));
        }
        let bytes = self.take(len as usize)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| BinError::Utf8)
    }

    pub fn read_bytes(&mut self, n: usize) -> Result<Vec<u8>, BinError> {
        Ok(self.take(n)?.to_vec())
    }

    pub fn read_f64_vec(&mut self) -> Result<Vec<f64>, BinError> {
        let len = self.read_u64()? as usize;
        let mut out = Vec::with_capacity(len.min(1 << 20));
        for _ in 0..len {
            out.push(self.read_f64()?);
        }
        Ok(out)
    }

    /// Reads the magic string and checks it against `expected` (e.g.
    /// "BDMODEL/1"). A matching prefix with a different version number is
    /// reported as a version error naming both.
    pub fn expect_magic(&mut self, expected: &str) -> Result<(), BinError> {
        let found = match self.read_str() {
            Ok(s) => s,
            Err(_) => {
                return Err(BinError::BadMagic { expected: expected.to_string(), found: String::new() })
            }
        };
        if found == expected {
            return Ok(());
        }
        let prefix = expected.split('/').next().unwrap_or(expected);
        if found.starts_with(prefix) {
            Err(BinError::Version { expected: expected.to_string(), found })
        } else {
            Err(BinError::BadMagic { expected: expected.to_string(), found })
        }
    }
}

pub fn write_magic<W: Write>(w: &mut CrcWriter<W>, magic: &str) -> Result<(), BinError> {
    w.write_str(magic)
}
