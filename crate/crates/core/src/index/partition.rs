use crate::descriptor::BitDescriptor;
use crate::error::{Error, Result};

/// Per-bit count of descriptors with that bit set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitPopularityGrid {
    resolution: u8,
    set_size: usize,
    counts: Vec<u32>,
}

impl BitPopularityGrid {
    pub fn resolution(&self) -> u8 {
        self.resolution
    }

    pub fn set_size(&self) -> usize {
        self.set_size
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.counts[row * self.resolution as usize + col]
    }

    /// Row-major counts.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
}

pub fn bit_popularity(descriptors: &[BitDescriptor]) -> Result<BitPopularityGrid> {
    let first = descriptors
        .first()
        .ok_or(Error::EmptyInput("bit popularity needs descriptors"))?;
    let mut counts = vec![0u32; first.total_bits()];
    for d in descriptors {
        first.check_same_resolution(d)?;
        for bit in d.ones_indices() {
            counts[bit] += 1;
        }
    }
    Ok(BitPopularityGrid {
        resolution: first.resolution(),
        set_size: descriptors.len(),
        counts,
    })
}

/// Splits `descriptors` into (similar, dissimilar) index lists, both in
/// input order.
pub fn partition_indices(descriptors: &[BitDescriptor]) -> Result<(Vec<usize>, Vec<usize>)> {
    let first = descriptors
        .first()
        .ok_or(Error::EmptyInput("partition needs descriptors"))?;
    for d in descriptors {
        first.check_same_resolution(d)?;
    }
    let ids: Vec<u32> = (0..descriptors.len() as u32).collect();
    let (s, d) = split(&ids, first.total_bits(), |i| descriptors[i as usize].words());
    Ok((
        s.into_iter().map(|i| i as usize).collect(),
        d.into_iter().map(|i| i as usize).collect(),
    ))
}

pub fn partition(descriptors: &[BitDescriptor]) -> Result<(Vec<BitDescriptor>, Vec<BitDescriptor>)> {
    let (s, d) = partition_indices(descriptors)?;
    Ok((
        s.into_iter().map(|i| descriptors[i].clone()).collect(),
        d.into_iter().map(|i| descriptors[i].clone()).collect(),
    ))
}

/// Core of the split on an id list.
///
/// Bits are visited by ascending popularity (ties by bit index); every
/// similar descriptor setting the current bit moves to the dissimilar side.
/// A bit whose move would empty the similar side is skipped, and the loop
/// stops as soon as the dissimilar side holds at least half (rounded up).
/// If nothing moved, the ids are split in half by position.
pub(crate) fn split<'a>(
    ids: &[u32],
    total_bits: usize,
    words_of: impl Fn(u32) -> &'a [u64],
) -> (Vec<u32>, Vec<u32>) {
    let n = ids.len();
    // Inverted lists: for each bit, the positions (into `ids`) that set it.
    let mut holders: Vec<Vec<u32>> = vec![Vec::new(); total_bits];
    for (pos, &id) in ids.iter().enumerate() {
        for (wi, &w) in words_of(id).iter().enumerate() {
            let mut rest = w;
            while rest != 0 {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                holders[wi * 64 + b].push(pos as u32);
            }
        }
    }
    let mut order: Vec<usize> = (0..total_bits).filter(|&b| !holders[b].is_empty()).collect();
    order.sort_by_key(|&b| holders[b].len());

    let target = n.div_ceil(2);
    let mut similar = vec![true; n];
    let mut similar_count = n;
    let mut moved = 0;
    for b in order {
        let movers = holders[b].iter().filter(|&&p| similar[p as usize]).count();
        if movers == 0 || movers == similar_count {
            continue;
        }
        for &p in &holders[b] {
            similar[p as usize] = false;
        }
        similar_count -= movers;
        moved += movers;
        if moved >= target {
            break;
        }
    }

    if moved == 0 {
        let half = n.div_ceil(2);
        return (ids[..half].to_vec(), ids[half..].to_vec());
    }
    let mut sim = Vec::with_capacity(similar_count);
    let mut dis = Vec::with_capacity(moved);
    for (pos, &id) in ids.iter().enumerate() {
        if similar[pos] {
            sim.push(id);
        } else {
            dis.push(id);
        }
    }
    (sim, dis)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 4-bit descriptors on a 2x2 grid; `"1100"` sets bits 0 and 1.
    fn bits(s: &str) -> BitDescriptor {
        BitDescriptor::from_bit_indices(2, s.char_indices().filter(|(_, c)| *c == '1').map(|(i, _)| i))
            .unwrap()
    }

    fn strings(ds: &[BitDescriptor]) -> Vec<String> {
        ds.iter()
            .map(|d| (0..4).map(|i| if d.bit(i) { '1' } else { '0' }).collect())
            .collect()
    }

    #[test]
    fn popularity_counts() {
        let one = bits("1010");
        let grid = bit_popularity(std::slice::from_ref(&one)).unwrap();
        assert_eq!(grid.counts(), &[1, 0, 1, 0]);
        let grid = bit_popularity(&[bits("1010"), bits("0101")]).unwrap();
        assert_eq!(grid.counts(), &[1, 1, 1, 1]);
        assert_eq!(grid.set_size(), 2);
        let grid = bit_popularity(&[bits("1000"), bits("1100")]).unwrap();
        assert_eq!(grid.get(1, 1), 0);
        assert!(bit_popularity(&[]).is_err());
        assert!(bit_popularity(&[bits("1000"), BitDescriptor::zeros(4)]).is_err());
    }

    #[test]
    fn skips_bits_that_would_empty_similar() {
        let (s, d) = partition(&[bits("1100"), bits("1100"), bits("0011")]).unwrap();
        assert_eq!(strings(&s), ["1100", "1100"]);
        assert_eq!(strings(&d), ["0011"]);
    }

    #[test]
    fn stops_at_half() {
        let (s, d) = partition(&[bits("1000"), bits("0100"), bits("0010"), bits("0001")]).unwrap();
        assert_eq!(strings(&s), ["0010", "0001"]);
        assert_eq!(strings(&d), ["1000", "0100"]);
    }

    #[test]
    fn identical_descriptors_split_evenly() {
        let (s, d) = partition_indices(&vec![bits("0110"); 5]).unwrap();
        assert_eq!(s, [0, 1, 2]);
        assert_eq!(d, [3, 4]);
    }

    #[test]
    fn preserves_input_order() {
        let input = [bits("0001"), bits("1000"), bits("0001"), bits("0110"), bits("1000")];
        let (s, d) = partition_indices(&input).unwrap();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(d.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.len() + d.len(), input.len());
        assert!(!s.is_empty() && !d.is_empty());
    }
}
