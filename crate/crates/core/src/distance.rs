//! Hamming and Weighted Hamming distances, plus the lower bound used to
//! prune Dissimilarity Tree subtrees.
//!
//! Weighted Hamming splits mismatches into two groups and normalises each
//! by how many such mismatches the query admits:
//!
//! ```text
//! WH(q, t) = |q & !t| / max(|q|, 1) + |!q & t| / max(T - |q|, 1)
//! ```
//!
//! with `T = N * N`. It is asymmetric and lies in `[0, 2]`.

use crate::descriptor::BitDescriptor;
use crate::error::Result;

/// Query-side constants shared by every distance and bound evaluation.
#[derive(Debug, Clone, Copy)]
pub struct QueryWeights {
    ones: f64,
    zeros: f64,
}

impl QueryWeights {
    pub fn new(query_ones: u32, total_bits: usize) -> Self {
        let q1 = query_ones as usize;
        QueryWeights {
            ones: q1.max(1) as f64,
            zeros: total_bits.saturating_sub(q1).max(1) as f64,
        }
    }

    pub fn for_query(query: &BitDescriptor) -> Self {
        Self::new(query.count_ones(), query.total_bits())
    }

    /// Combines the two mismatch counts. Distances and bounds both go
    /// through here, which keeps the bound `<=` the distance in floating
    /// point too: IEEE division and addition are monotone.
    #[inline]
    pub fn combine(&self, missing: u32, extra: u32) -> f64 {
        missing as f64 / self.ones + extra as f64 / self.zeros
    }
}

/// `(|q & !t|, |!q & t|)` over packed words with zeroed padding.
#[inline]
pub fn mismatch_counts(query: &[u64], target: &[u64]) -> (u32, u32) {
    let mut missing = 0;
    let mut extra = 0;
    for (&q, &t) in query.iter().zip(target) {
        missing += (q & !t).count_ones();
        extra += (!q & t).count_ones();
    }
    (missing, extra)
}

#[inline]
pub fn weighted_hamming_words(query: &[u64], weights: &QueryWeights, target: &[u64]) -> f64 {
    let (missing, extra) = mismatch_counts(query, target);
    weights.combine(missing, extra)
}

/// Bits that are 1 in the query but 0 across a whole subtree, and bits that
/// are 0 in the query but 1 across it.
#[inline]
pub fn bound_words(query: &[u64], weights: &QueryWeights, sum: &[u64], product: Option<&[u64]>) -> f64 {
    let forced_missing: u32 = query.iter().zip(sum).map(|(&q, &s)| (q & !s).count_ones()).sum();
    let forced_extra: u32 = match product {
        Some(p) => query.iter().zip(p).map(|(&q, &p)| (!q & p).count_ones()).sum(),
        None => 0,
    };
    weights.combine(forced_missing, forced_extra)
}

pub fn hamming(a: &BitDescriptor, b: &BitDescriptor) -> Result<u32> {
    a.check_same_resolution(b)?;
    Ok(a.words()
        .iter()
        .zip(b.words())
        .map(|(&x, &y)| (x ^ y).count_ones())
        .sum())
}

pub fn weighted_hamming(query: &BitDescriptor, target: &BitDescriptor) -> Result<f64> {
    query.check_same_resolution(target)?;
    Ok(weighted_hamming_words(
        query.words(),
        &QueryWeights::for_query(query),
        target.words(),
    ))
}

/// Smallest Weighted Hamming distance any descriptor `t` with
/// `product ⊆ t ⊆ sum` can have from `query`. A missing product image
/// is treated as all zeros.
pub fn min_weighted_hamming_bound(
    query: &BitDescriptor,
    sum_image: &BitDescriptor,
    product_image: Option<&BitDescriptor>,
) -> Result<f64> {
    query.check_same_resolution(sum_image)?;
    if let Some(p) = product_image {
        query.check_same_resolution(p)?;
    }
    Ok(bound_words(
        query.words(),
        &QueryWeights::for_query(query),
        sum_image.words(),
        product_image.map(BitDescriptor::words),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    fn desc(n: u8, bits: &[usize]) -> BitDescriptor {
        BitDescriptor::from_bit_indices(n, bits.iter().copied()).unwrap()
    }

    #[test]
    fn hamming_values() {
        let a = desc(4, &[0, 1]);
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(hamming(&BitDescriptor::ones(4), &BitDescriptor::zeros(4)).unwrap(), 16);
        assert_eq!(hamming(&a, &desc(4, &[1, 2])).unwrap(), 2);
    }

    #[test]
    fn weighted_hamming_values() {
        let q = desc(4, &[3, 7]);
        assert_eq!(weighted_hamming(&q, &q).unwrap(), 0.0);
        assert_eq!(
            weighted_hamming(&BitDescriptor::ones(4), &BitDescriptor::zeros(4)).unwrap(),
            1.0
        );
        // 1/2 + 1/2 on a 2x2 grid; 1/2 + 1/14 on 4x4.
        assert!((weighted_hamming(&desc(2, &[0, 1]), &desc(2, &[1, 2])).unwrap() - 1.0).abs() < 1e-12);
        assert!(
            (weighted_hamming(&desc(4, &[0, 1]), &desc(4, &[1, 2])).unwrap() - (0.5 + 1.0 / 14.0)).abs()
                < 1e-12
        );
    }

    #[test]
    fn weighted_hamming_is_asymmetric() {
        let q = desc(4, &[0]);
        let t = desc(4, &[0, 1, 2]);
        // Forward: no missing bits, 2 extra over 15 zeros. Reverse: 2 of 3 bits missing.
        assert!((weighted_hamming(&q, &t).unwrap() - 2.0 / 15.0).abs() < 1e-12);
        assert!((weighted_hamming(&t, &q).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn resolution_mismatch_is_error() {
        let a = BitDescriptor::zeros(4);
        let b = BitDescriptor::zeros(8);
        assert!(matches!(hamming(&a, &b), Err(Error::ResolutionMismatch { .. })));
        assert!(matches!(weighted_hamming(&a, &b), Err(Error::ResolutionMismatch { .. })));
        assert!(min_weighted_hamming_bound(&a, &b, None).is_err());
        assert!(min_weighted_hamming_bound(&a, &a, Some(&b)).is_err());
    }

    #[test]
    fn bound_values() {
        let q = desc(4, &[5, 9]);
        assert_eq!(min_weighted_hamming_bound(&q, &BitDescriptor::ones(4), None).unwrap(), 0.0);
        let q = desc(4, &[5]);
        assert_eq!(min_weighted_hamming_bound(&q, &desc(4, &[1, 2]), None).unwrap(), 1.0);
    }

    fn descriptor_strategy(n: u8) -> impl Strategy<Value = BitDescriptor> {
        let bits = n as usize * n as usize;
        proptest::collection::vec(any::<bool>(), bits).prop_map(move |v| {
            BitDescriptor::from_bit_indices(n, v.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i))
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn weighted_hamming_range_and_identity(q in descriptor_strategy(8), t in descriptor_strategy(8)) {
            let d = weighted_hamming(&q, &t).unwrap();
            prop_assert!((0.0..=2.0).contains(&d));
            prop_assert_eq!(d == 0.0, q == t);
        }

        #[test]
        fn hamming_is_symmetric(a in descriptor_strategy(8), b in descriptor_strategy(8)) {
            prop_assert_eq!(hamming(&a, &b).unwrap(), hamming(&b, &a).unwrap());
        }

        #[test]
        fn bound_is_admissible(
            q in descriptor_strategy(8),
            t in descriptor_strategy(8),
            grow in descriptor_strategy(8),
            shrink in descriptor_strategy(8),
        ) {
            let sum = t.or(&grow).unwrap();
            let product = t.and(&shrink).unwrap();
            let d = weighted_hamming(&q, &t).unwrap();
            prop_assert!(min_weighted_hamming_bound(&q, &sum, Some(&product)).unwrap() <= d);
            prop_assert!(min_weighted_hamming_bound(&q, &sum, None).unwrap() <= d);
        }

        #[test]
        fn bound_monotonicity(
            q in descriptor_strategy(8),
            sum in descriptor_strategy(8),
            product in descriptor_strategy(8),
            extra in descriptor_strategy(8),
        ) {
            let base = min_weighted_hamming_bound(&q, &sum, Some(&product)).unwrap();
            let wider = min_weighted_hamming_bound(&q, &sum.or(&extra).unwrap(), Some(&product)).unwrap();
            let denser = min_weighted_hamming_bound(&q, &sum, Some(&product.or(&extra).unwrap())).unwrap();
            prop_assert!(wider <= base);
            prop_assert!(denser >= base);
        }
    }
}
