use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PcsftError, Result};
use crate::hilbert::FieldState;

pub const BATCH_MAGIC: [u8; 8] = *b"PCSFTBAT";
pub const BATCH_VERSION: u32 = 1;
pub const BATCH_HEADER_LEN: usize = 32;

/// Seed and generator a batch was drawn with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub rng: String,
    pub seed: u64,
}

/// `N` field samples of a common dimension, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    dim: usize,
    data: Vec<Complex64>,
    provenance: Option<Provenance>,
}

impl SampleBatch {
    pub fn from_flat(dim: usize, data: Vec<Complex64>, provenance: Option<Provenance>) -> Result<Self> {
        if dim == 0 {
            return Err(PcsftError::InvalidArgument("batch dimension 0".into()));
        }
        if data.is_empty() {
            return Err(PcsftError::EmptyBatch);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(PcsftError::Dimension {
                expected: dim,
                found: data.len() % dim,
            });
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(PcsftError::NonFinite("sample batch"));
        }
        Ok(Self { dim, data, provenance })
    }

    pub fn from_states(states: &[FieldState]) -> Result<Self> {
        let dim = states.first().ok_or(PcsftError::EmptyBatch)?.dim();
        let mut data = Vec::with_capacity(dim * states.len());
        for s in states {
            if s.dim() != dim {
                return Err(PcsftError::Dimension { expected: dim, found: s.dim() });
            }
            data.extend_from_slice(s.amplitudes());
        }
        Self::from_flat(dim, data, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn sample(&self, n: usize) -> &[Complex64] {
        &self.data[n * self.dim..(n + 1) * self.dim]
    }

    pub fn state(&self, n: usize) -> FieldState {
        FieldState::from_vec_unchecked(self.sample(n).to_vec())
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[Complex64] {
        &self.data
    }

    /// Little-endian layout: 32-byte header (magic, version, reserved, dim, N)
    /// followed by interleaved `[re, im]` doubles.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BATCH_HEADER_LEN + 16 * self.data.len());
        out.extend_from_slice(&BATCH_MAGIC);
        out.extend_from_slice(&BATCH_VERSION.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for z in &self.data {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    /// Decodes a whole buffer; trailing bytes are an error.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (batch, used) = Self::decode_prefix(bytes)?;
        if used != bytes.len() {
            return Err(PcsftError::Decode(format!("{} trailing bytes", bytes.len() - used)));
        }
        Ok(batch)
    }

    /// Decodes a batch at the start of `bytes`, returning it and the bytes consumed.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Self, usize)> {
        let mut r = Reader::new(bytes);
        if r.take(8)? != BATCH_MAGIC {
            return Err(PcsftError::Decode("bad batch magic".into()));
        }
        let version = r.u32()?;
        if version != BATCH_VERSION {
            return Err(PcsftError::Decode(format!("unsupported batch version {version}")));
        }
        if r.u32()? != 0 {
            return Err(PcsftError::Decode("reserved header field is not zero".into()));
        }
        let dim = usize::try_from(r.u64()?).map_err(|_| PcsftError::Decode("dim overflow".into()))?;
        let count = usize::try_from(r.u64()?).map_err(|_| PcsftError::Decode("count overflow".into()))?;
        if dim == 0 {
            return Err(PcsftError::Decode("dim is zero".into()));
        }
        if count == 0 {
            return Err(PcsftError::EmptyBatch);
        }
        let values = dim
            .checked_mul(count)
            .filter(|v| v.checked_mul(16).is_some_and(|b| b <= r.remaining()))
            .ok_or_else(|| PcsftError::Decode("payload shorter than header claims".into()))?;
        let mut data = Vec::with_capacity(values);
        for _ in 0..values {
            let re = r.f64()?;
            let im = r.f64()?;
            data.push(Complex64::new(re, im));
        }
        Ok((Self::from_flat(dim, data, None)?, r.pos))
    }
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(PcsftError::Decode("unexpected end of input".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
