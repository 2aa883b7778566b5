//! QUICCI bit images.
//!
//! A descriptor of resolution `N` is an `N x N` bit grid stored row-major in
//! 64-bit words. Row `r` is the circle layer (row 0 is the lowest layer) and
//! column `c` the circle index within the layer (column 0 is the innermost
//! circle). Bit `r * N + c` lives in word `(r * N + c) / 64` at position
//! `(r * N + c) % 64`. Padding bits past `N * N` are always zero.

mod dump;
mod quicci;

pub use dump::{read_descriptor_dump, write_descriptor_dump, DumpHeader, DUMP_MAGIC};
pub use quicci::{
    circle_radius, compute_descriptor, compute_intersection_counts, compute_modified_quicci,
    compute_quicci, counts_to_descriptor, descriptors_for_object, layer_circles, layer_height,
    DescriptorGenerator, IntersectionCounts,
};

use std::fmt;

use crate::error::{Error, Result};

pub const MAX_RESOLUTION: u8 = 64;

/// Number of 64-bit words holding an `N x N` descriptor.
pub const fn words_for(resolution: u8) -> usize {
    let bits = resolution as usize * resolution as usize;
    bits.div_ceil(64)
}

fn check_resolution(resolution: u8) -> Result<()> {
    if resolution == 0 || resolution > MAX_RESOLUTION {
        return Err(Error::InvalidParameter(format!(
            "resolution must be in 1..={MAX_RESOLUTION}, got {resolution}"
        )));
    }
    Ok(())
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitDescriptor {
    resolution: u8,
    words: Vec<u64>,
}

impl BitDescriptor {
    /// # Panics
    /// If `resolution` is 0 or above [`MAX_RESOLUTION`].
    pub fn zeros(resolution: u8) -> Self {
        check_resolution(resolution).expect("invalid resolution");
        BitDescriptor {
            resolution,
            words: vec![0; words_for(resolution)],
        }
    }

    pub fn ones(resolution: u8) -> Self {
        let mut d = Self::zeros(resolution);
        for i in 0..d.total_bits() {
            d.set_bit(i, true);
        }
        d
    }

    /// Builds a descriptor from row-major bit indices.
    pub fn from_bit_indices(resolution: u8, bits: impl IntoIterator<Item = usize>) -> Result<Self> {
        check_resolution(resolution)?;
        let mut d = Self::zeros(resolution);
        for i in bits {
            if i >= d.total_bits() {
                return Err(Error::InvalidParameter(format!(
                    "bit index {i} out of range for resolution {resolution}"
                )));
            }
            d.set_bit(i, true);
        }
        Ok(d)
    }

    pub fn from_words(resolution: u8, words: Vec<u64>) -> Result<Self> {
        check_resolution(resolution)?;
        if words.len() != words_for(resolution) {
            return Err(Error::Corrupt(format!(
                "expected {} words for resolution {resolution}, got {}",
                words_for(resolution),
                words.len()
            )));
        }
        let d = BitDescriptor { resolution, words };
        if d.words.last().copied().unwrap_or(0) & !d.last_word_mask() != 0 {
            return Err(Error::Corrupt("padding bits set".into()));
        }
        Ok(d)
    }

    fn last_word_mask(&self) -> u64 {
        match self.total_bits() % 64 {
            0 => u64::MAX,
            used => (1u64 << used) - 1,
        }
    }

    pub fn resolution(&self) -> u8 {
        self.resolution
    }

    pub fn total_bits(&self) -> usize {
        self.resolution as usize * self.resolution as usize
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, index: usize) -> bool {
        debug_assert!(index < self.total_bits());
        self.words[index / 64] >> (index % 64) & 1 == 1
    }

    pub fn set_bit(&mut self, index: usize, value: bool) {
        assert!(index < self.total_bits(), "bit index out of range");
        let mask = 1u64 << (index % 64);
        if value {
            self.words[index / 64] |= mask;
        } else {
            self.words[index / 64] &= !mask;
        }
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        let n = self.resolution as usize;
        assert!(row < n && col < n);
        self.bit(row * n + col)
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        let n = self.resolution as usize;
        assert!(row < n && col < n);
        self.set_bit(row * n + col, value)
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Row-major indices of set bits, ascending.
    pub fn ones_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub(crate) fn check_same_resolution(&self, other: &BitDescriptor) -> Result<()> {
        if self.resolution != other.resolution {
            return Err(Error::ResolutionMismatch {
                expected: self.resolution,
                actual: other.resolution,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &BitDescriptor, f: impl Fn(u64, u64) -> u64) -> Result<Self> {
        self.check_same_resolution(other)?;
        Ok(BitDescriptor {
            resolution: self.resolution,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn or(&self, other: &BitDescriptor) -> Result<Self> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn and(&self, other: &BitDescriptor) -> Result<Self> {
        self.zip_with(other, |a, b| a & b)
    }

    /// Bits set in `self` but not in `other`.
    pub fn and_not(&self, other: &BitDescriptor) -> Result<Self> {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn is_subset_of(&self, other: &BitDescriptor) -> Result<bool> {
        self.check_same_resolution(other)?;
        Ok(self.words.iter().zip(&other.words).all(|(&a, &b)| a & !b == 0))
    }
}

impl fmt::Debug for BitDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitDescriptor({}x{}, ", self.resolution, self.resolution)?;
        for i in self.ones_indices() {
            write!(f, "{i} ")?;
        }
        write!(f, ")")
    }
}

/// Renders the grid as an image: top line is the highest layer, `1` is a set bit.
impl fmt::Display for BitDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.resolution as usize;
        for row in (0..n).rev() {
            for col in 0..n {
                f.write_str(if self.get(row, col) { "1" } else { "0" })?;
            }
            if row > 0 {
                f.write_str("\n")?;
            }
        }
        Ok(())
    }
}

/// Parameters of descriptor generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorParams {
    resolution: u8,
    support_radius: f64,
    delta_threshold: u8,
}

impl Default for DescriptorParams {
    fn default() -> Self {
        DescriptorParams {
            resolution: 64,
            support_radius: 100.0,
            delta_threshold: 1,
        }
    }
}

impl DescriptorParams {
    pub fn new(resolution: u8, support_radius: f64, delta_threshold: u8) -> Result<Self> {
        check_resolution(resolution)?;
        if !(support_radius.is_finite() && support_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "support radius must be positive, got {support_radius}"
            )));
        }
        if !(delta_threshold == 1 || delta_threshold == 2) {
            return Err(Error::InvalidParameter(format!(
                "delta threshold must be 1 or 2, got {delta_threshold}"
            )));
        }
        Ok(DescriptorParams {
            resolution,
            support_radius,
            delta_threshold,
        })
    }

    pub fn resolution(&self) -> u8 {
        self.resolution
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn delta_threshold(&self) -> u8 {
        self.delta_threshold
    }

    pub fn with_delta_threshold(self, delta_threshold: u8) -> Result<Self> {
        Self::new(self.resolution, self.support_radius, delta_threshold)
    }

    /// Geometric tolerance for tangencies and edge hits.
    pub fn tolerance(&self) -> f64 {
        1e-6 * self.support_radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_counts() {
        assert_eq!(words_for(2), 1);
        assert_eq!(words_for(8), 1);
        assert_eq!(words_for(16), 4);
        assert_eq!(words_for(32), 16);
        assert_eq!(words_for(64), 64);
    }

    #[test]
    fn bit_addressing_is_row_major() {
        let mut d = BitDescriptor::zeros(16);
        d.set(1, 3, true);
        assert!(d.bit(19));
        assert_eq!(d.words()[0], 1 << 19);
        assert_eq!(d.ones_indices().collect::<Vec<_>>(), vec![19]);
    }

    #[test]
    fn padding_rejected() {
        assert!(BitDescriptor::from_words(2, vec![0b1111]).is_ok());
        assert!(BitDescriptor::from_words(2, vec![0b10000]).is_err());
        assert!(BitDescriptor::from_words(16, vec![0; 3]).is_err());
    }

    #[test]
    fn ones_has_exact_count() {
        for n in [1, 2, 5, 16, 64] {
            assert_eq!(BitDescriptor::ones(n).count_ones() as usize, n as usize * n as usize);
        }
    }

    #[test]
    fn set_algebra() {
        let a = BitDescriptor::from_bit_indices(4, [0, 1, 5]).unwrap();
        let b = BitDescriptor::from_bit_indices(4, [1, 5, 9]).unwrap();
        assert_eq!(a.and(&b).unwrap().ones_indices().collect::<Vec<_>>(), [1, 5]);
        assert_eq!(a.or(&b).unwrap().count_ones(), 4);
        assert_eq!(a.and_not(&b).unwrap().ones_indices().collect::<Vec<_>>(), [0]);
        assert!(a.and(&b).unwrap().is_subset_of(&a).unwrap());
        assert!(!a.is_subset_of(&b).unwrap());
        assert!(matches!(
            a.or(&BitDescriptor::zeros(8)),
            Err(Error::ResolutionMismatch { .. })
        ));
    }

    #[test]
    fn display_puts_bottom_row_last() {
        let d = BitDescriptor::from_bit_indices(2, [0]).unwrap();
        assert_eq!(d.to_string(), "00\n10");
    }

    #[test]
    fn params_validation() {
        assert!(DescriptorParams::new(64, 100.0, 1).is_ok());
        assert!(DescriptorParams::new(0, 100.0, 1).is_err());
        assert!(DescriptorParams::new(65, 100.0, 1).is_err());
        assert!(DescriptorParams::new(16, 0.0, 1).is_err());
        assert!(DescriptorParams::new(16, f64::NAN, 1).is_err());
        assert!(DescriptorParams::new(16, 100.0, 3).is_err());
        assert_eq!(DescriptorParams::default().support_radius(), 100.0);
    }
}
