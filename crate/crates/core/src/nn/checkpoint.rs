//! Versioned little-endian binary dump used for network checkpoints and
//! replay snapshots. Floats are stored as raw IEEE-754 bits, so a
//! save/load round trip is bit-exact.

use std::path::Path;

use super::{NnError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"RLCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub trait Persist: Sized {
    fn encode(&self, enc: &mut Encoder);
    fn decode(dec: &mut Decoder<'_>) -> Result<Self>;
}

#[derive(Debug, Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    /// Starts a document with the magic, version and a payload tag.
    pub fn new(kind: &str) -> Self {
        let mut enc = Self { buf: Vec::new() };
        enc.buf.extend_from_slice(CHECKPOINT_MAGIC);
        enc.put_u32(CHECKPOINT_VERSION);
        enc.put_str(kind);
        enc
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    pub fn put_f64s(&mut self, values: &[f64]) {
        self.put_u64(values.len() as u64);
        for v in values {
            self.put_f64(*v);
        }
    }

    pub fn put_str(&mut self, s: &str) {
        self.put_u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn put<T: Persist>(&mut self, value: &T) {
        value.encode(self);
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn write_to(self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.buf)
    }
}

pub struct Decoder<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    /// Validates the header and the payload tag.
    pub fn new(data: &'a [u8], kind: &str) -> Result<Self> {
        let mut dec = Self { data, pos: 0 };
        let magic = dec.take(4)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(NnError::Checkpoint("bad magic".into()));
        }
        let version = dec.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!("unsupported version {version}")));
        }
        let found = dec.string()?;
        if found != kind {
            return Err(NnError::Checkpoint(format!("expected payload '{kind}', found '{found}'")));
        }
        Ok(dec)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(NnError::Checkpoint("truncated data".into()));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        if n.saturating_mul(8) > self.data.len() - self.pos {
            return Err(NnError::Checkpoint("truncated data".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| NnError::Checkpoint("invalid utf-8".into()))
    }

    pub fn get<T: Persist>(&mut self) -> Result<T> {
        T::decode(self)
    }

    pub fn finish(self) -> Result<()> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(NnError::Checkpoint(format!("{} trailing bytes", self.data.len() - self.pos)))
        }
    }
}
