//! SATD activation dumps: one layer per file, little-endian throughout.
//!
//! ```text
//! magic     4 bytes  "SATD"
//! version   u16      1
//! name_len  u16      ≤ 256
//! name      name_len bytes, UTF-8
//! ndim      u8       2 or 4
//! dims      ndim × u32
//! dtype     u8       0 = f32
//! payload   product(dims) × f32, row-major
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::activation::{ActivationBatch, Layout};

use super::FormatError;

pub const DUMP_MAGIC: [u8; 4] = *b"SATD";
pub const DUMP_VERSION: u16 = 1;
pub const MAX_NAME_LEN: usize = 256;
pub const DTYPE_F32: u8 = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpHeader {
    pub layer_name: String,
    pub layout: Layout,
}

impl DumpHeader {
    /// Bytes occupied by the header on disk.
    pub fn encoded_len(&self) -> usize {
        4 + 2 + 2 + self.layer_name.len() + 1 + 4 * self.layout.dims().len() + 1
    }

    pub fn payload_len(&self) -> usize {
        self.layout.len() * 4
    }

    fn validate(&self) -> Result<(), FormatError> {
        if self.layer_name.len() > MAX_NAME_LEN {
            return Err(FormatError::OversizedName(self.layer_name.len()));
        }
        for d in self.layout.dims() {
            if d > u32::MAX as usize {
                return Err(FormatError::BadDims(format!("dimension {d} does not fit in u32")));
            }
        }
        Ok(())
    }
}

pub fn write_dump_to<W: Write>(w: &mut W, layer_name: &str, batch: &ActivationBatch<f32>) -> Result<(), FormatError> {
    let header = DumpHeader {
        layer_name: layer_name.to_string(),
        layout: batch.layout(),
    };
    header.validate()?;
    let dims = header.layout.dims();
    w.write_all(&DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&(layer_name.len() as u16).to_le_bytes())?;
    w.write_all(layer_name.as_bytes())?;
    w.write_all(&[dims.len() as u8])?;
    for d in dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&[DTYPE_F32])?;
    let mut buf = Vec::with_capacity(batch.data().len().min(1 << 16) * 4);
    for chunk in batch.data().chunks(1 << 16) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn write_dump(path: impl AsRef<Path>, layer_name: &str, batch: &ActivationBatch<f32>) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dump_to(&mut w, layer_name, batch)?;
    w.flush()?;
    Ok(())
}

/// Streaming reader: parses the header up front and hands out the payload in
/// sample-aligned chunks, each byte read exactly once.
pub struct DumpReader<R> {
    inner: R,
    header: DumpHeader,
    remaining_samples: usize,
}

impl DumpReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> DumpReader<R> {
    pub fn new(mut inner: R) -> Result<Self, FormatError> {
        let header = read_header(&mut inner)?;
        let remaining_samples = header.layout.samples();
        Ok(Self {
            inner,
            header,
            remaining_samples,
        })
    }

    pub fn header(&self) -> &DumpHeader {
        &self.header
    }

    /// Next batch of at most `max_samples` samples, or `None` once the payload
    /// is exhausted.
    pub fn next_batch(&mut self, max_samples: usize) -> Result<Option<ActivationBatch<f32>>, FormatError> {
        if self.remaining_samples == 0 {
            return Ok(None);
        }
        let take = max_samples.max(1).min(self.remaining_samples);
        let layout = with_samples(self.header.layout, take);
        let mut bytes = vec![0u8; layout.len() * 4];
        read_exact_or(&mut self.inner, &mut bytes, || FormatError::TruncatedPayload {
            expected: self.header.payload_len(),
        })?;
        self.remaining_samples -= take;
        let values = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        if self.remaining_samples == 0 {
            let mut probe = [0u8; 1];
            if self.inner.read(&mut probe)? != 0 {
                return Err(FormatError::TrailingBytes);
            }
        }
        Ok(Some(ActivationBatch::new(layout, values)?))
    }

    /// Reads the whole remaining payload as one batch.
    pub fn read_all(mut self) -> Result<(DumpHeader, ActivationBatch<f32>), FormatError> {
        let header = self.header.clone();
        let batch = match self.next_batch(usize::MAX)? {
            Some(b) => b,
            None => ActivationBatch::new(header.layout, Vec::new())?,
        };
        Ok((header, batch))
    }
}

pub fn read_dump_from<R: Read>(r: R) -> Result<(DumpHeader, ActivationBatch<f32>), FormatError> {
    DumpReader::new(r)?.read_all()
}

pub fn read_dump(path: impl AsRef<Path>) -> Result<(DumpHeader, ActivationBatch<f32>), FormatError> {
    DumpReader::open(path)?.read_all()
}

fn with_samples(layout: Layout, samples: usize) -> Layout {
    match layout {
        Layout::Flat { features, .. } => Layout::Flat { samples, features },
        Layout::Spatial {
            channels,
            height,
            width,
            ..
        } => Layout::Spatial {
            samples,
            channels,
            height,
            width,
        },
    }
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], err: impl FnOnce() -> FormatError) -> Result<(), FormatError> {
    match r.read_exact(buf) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Err(err()),
        Err(e) => Err(e.into()),
    }
}

fn read_header<R: Read>(r: &mut R) -> Result<DumpHeader, FormatError> {
    let truncated = || FormatError::TruncatedHeader;
    let mut magic = [0u8; 4];
    read_exact_or(r, &mut magic, truncated)?;
    if magic != DUMP_MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let mut two = [0u8; 2];
    read_exact_or(r, &mut two, truncated)?;
    let version = u16::from_le_bytes(two);
    if version != DUMP_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    read_exact_or(r, &mut two, truncated)?;
    let name_len = u16::from_le_bytes(two) as usize;
    if name_len > MAX_NAME_LEN {
        return Err(FormatError::OversizedName(name_len));
    }
    let mut name = vec![0u8; name_len];
    read_exact_or(r, &mut name, truncated)?;
    let layer_name = String::from_utf8(name).map_err(|_| FormatError::InvalidName)?;
    let mut one = [0u8; 1];
    read_exact_or(r, &mut one, truncated)?;
    let ndim = one[0] as usize;
    if ndim != 2 && ndim != 4 {
        return Err(FormatError::BadDims(format!("ndim must be 2 or 4, got {ndim}")));
    }
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let mut four = [0u8; 4];
        read_exact_or(r, &mut four, truncated)?;
        dims.push(u32::from_le_bytes(four) as usize);
    }
    read_exact_or(r, &mut one, truncated)?;
    if one[0] != DTYPE_F32 {
        return Err(FormatError::UnsupportedDtype(one[0]));
    }
    Ok(DumpHeader {
        layer_name,
        layout: Layout::from_dims(&dims)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn encode(name: &str, batch: &ActivationBatch<f32>) -> Vec<u8> {
        let mut out = Vec::new();
        write_dump_to(&mut out, name, batch).unwrap();
        out
    }

    #[test]
    fn single_value_file_size() {
        let batch = ActivationBatch::flat(1, 1, vec![0.5f32]).unwrap();
        let bytes = encode("fc1", &batch);
        // magic, version, name_len, name, ndim, 2 dims, dtype, one f32
        assert_eq!(bytes.len(), 4 + 2 + 2 + 3 + 1 + 2 * 4 + 1 + 4);
        let (header, back) = read_dump_from(bytes.as_slice()).unwrap();
        assert_eq!(header.layer_name, "fc1");
        assert_eq!(header.encoded_len() + header.payload_len(), bytes.len());
        assert_eq!(back, batch);
    }

    #[test]
    fn golden_bytes() {
        let batch = ActivationBatch::flat(1, 2, vec![1.0f32, -2.0]).unwrap();
        let bytes = encode("a", &batch);
        let expected: Vec<u8> = [
            &b"SATD"[..],
            &[1, 0],
            &[1, 0],
            b"a",
            &[2],
            &[1, 0, 0, 0],
            &[2, 0, 0, 0],
            &[0],
            &[0x00, 0x00, 0x80, 0x3f],
            &[0x00, 0x00, 0x00, 0xc0],
        ]
        .concat();
        assert_eq!(bytes, expected);
    }

    #[test]
    fn truncated_payload() {
        let batch = ActivationBatch::flat(2, 2, vec![1.0f32; 4]).unwrap();
        let mut bytes = encode("x", &batch);
        bytes.pop();
        assert!(matches!(
            read_dump_from(bytes.as_slice()),
            Err(FormatError::TruncatedPayload { .. })
        ));
    }

    #[test]
    fn header_errors() {
        let batch = ActivationBatch::flat(1, 1, vec![1.0f32]).unwrap();
        let good = encode("x", &batch);

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(read_dump_from(bad_magic.as_slice()), Err(FormatError::BadMagic(_))));

        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert!(matches!(
            read_dump_from(bad_version.as_slice()),
            Err(FormatError::UnsupportedVersion(2))
        ));

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(matches!(read_dump_from(trailing.as_slice()), Err(FormatError::TrailingBytes)));

        assert!(matches!(read_dump_from(&good[..6]), Err(FormatError::TruncatedHeader)));

        let long = "n".repeat(MAX_NAME_LEN + 1);
        let mut sink = Vec::new();
        assert!(matches!(
            write_dump_to(&mut sink, &long, &batch),
            Err(FormatError::OversizedName(257))
        ));
    }

    #[test]
    fn streaming_chunks_cover_payload() {
        let data: Vec<f32> = (0..7 * 3).map(|i| i as f32).collect();
        let batch = ActivationBatch::flat(7, 3, data.clone()).unwrap();
        let bytes = encode("s", &batch);
        let mut reader = DumpReader::new(bytes.as_slice()).unwrap();
        let mut seen = Vec::new();
        let mut sizes = Vec::new();
        while let Some(chunk) = reader.next_batch(3).unwrap() {
            sizes.push(chunk.samples());
            seen.extend_from_slice(chunk.data());
        }
        assert_eq!(sizes, vec![3, 3, 1]);
        assert_eq!(seen, data);
    }

    proptest! {
        #[test]
        fn spatial_round_trip_is_bitwise(
            n in 0usize..4, c in 1usize..4, h in 1usize..5, w in 1usize..5,
            seed in any::<u64>(),
        ) {
            let data: Vec<f32> = (0..n * c * h * w)
                .map(|i| f32::from_bits((seed as u32).wrapping_mul(2654435761).wrapping_add(i as u32 * 40503) & 0x7f7f_ffff))
                .collect();
            let batch = ActivationBatch::spatial(n, c, h, w, data).unwrap();
            let bytes = encode("conv", &batch);
            let (_, back) = read_dump_from(bytes.as_slice()).unwrap();
            let a: Vec<u32> = batch.data().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = back.data().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!(back.layout(), batch.layout());
        }
    }
}
