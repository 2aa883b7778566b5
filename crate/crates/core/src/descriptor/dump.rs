//! Descriptor dump files.
//!
//! Layout (little-endian):
//!
//! ```text
//! 0   [u8; 4]  magic "QICD"
//! 4   u8       resolution
//! 5   u8       delta threshold
//! 6   [u8; 2]  reserved, zero
//! 8   f32      support radius
//! 12  u32      descriptor count
//! 16  count x words_for(resolution) x u64   row-major packed bits
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{words_for, BitDescriptor, DescriptorParams};
use crate::error::{truncated, Error, Result};

pub const DUMP_MAGIC: [u8; 4] = *b"QICD";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub resolution: u8,
    pub delta_threshold: u8,
    pub support_radius: f32,
    pub count: u32,
}

impl DumpHeader {
    pub fn params(&self) -> Result<DescriptorParams> {
        DescriptorParams::new(
            self.resolution,
            self.support_radius as f64,
            self.delta_threshold,
        )
    }
}

pub fn write_descriptor_dump(
    mut out: impl Write,
    params: &DescriptorParams,
    descriptors: &[BitDescriptor],
) -> Result<()> {
    if let Some(bad) = descriptors
        .iter()
        .find(|d| d.resolution() != params.resolution())
    {
        return Err(Error::ResolutionMismatch {
            expected: params.resolution(),
            actual: bad.resolution(),
        });
    }
    let count = u32::try_from(descriptors.len())
        .map_err(|_| Error::InvalidParameter("too many descriptors for a dump".into()))?;
    out.write_all(&DUMP_MAGIC)?;
    out.write_u8(params.resolution())?;
    out.write_u8(params.delta_threshold())?;
    out.write_all(&[0, 0])?;
    out.write_f32::<LittleEndian>(params.support_radius() as f32)?;
    out.write_u32::<LittleEndian>(count)?;
    for d in descriptors {
        for &w in d.words() {
            out.write_u64::<LittleEndian>(w)?;
        }
    }
    Ok(())
}

pub fn read_descriptor_dump(mut input: impl Read) -> Result<(DumpHeader, Vec<BitDescriptor>)> {
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|e| truncated(e, "dump header"))?;
    if magic != DUMP_MAGIC {
        return Err(Error::BadMagic {
            expected: DUMP_MAGIC,
            found: magic,
        });
    }
    let mut rest = [0u8; 12];
    input
        .read_exact(&mut rest)
        .map_err(|e| truncated(e, "dump header"))?;
    let mut r = &rest[..];
    let resolution = r.read_u8()?;
    let delta_threshold = r.read_u8()?;
    let _reserved = r.read_u16::<LittleEndian>()?;
    let support_radius = r.read_f32::<LittleEndian>()?;
    let count = r.read_u32::<LittleEndian>()?;
    let header = DumpHeader {
        resolution,
        delta_threshold,
        support_radius,
        count,
    };
    header.params()?;

    let words = words_for(resolution);
    let mut descriptors = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let mut ws = vec![0u64; words];
        input
            .read_u64_into::<LittleEndian>(&mut ws)
            .map_err(|e| truncated(e, "dump descriptors"))?;
        descriptors.push(BitDescriptor::from_words(resolution, ws)?);
    }
    Ok((header, descriptors))
}
