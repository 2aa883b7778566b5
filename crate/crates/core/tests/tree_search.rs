use proptest::prelude::*;
use quicci_core::descriptor::BitDescriptor;
use quicci_core::distance::weighted_hamming;
use quicci_core::index::{build_tree, deserialize_index, serialize_index, DescriptorRef, SearchResult};

/// Descriptors scattered around a few random centers, so subtrees prune.
fn clustered(resolution: u8, seeds: &[(u64, u32)]) -> Vec<(DescriptorRef, BitDescriptor)> {
    let bits = resolution as usize * resolution as usize;
    let centers: Vec<Vec<usize>> = (0..4u64)
        .map(|c| (0..bits).filter(|b| (b.wrapping_mul(2654435761) + c as usize * 97) % 11 < 2).collect())
        .collect();
    seeds
        .iter()
        .enumerate()
        .map(|(i, &(noise, obj))| {
            let center = &centers[i % centers.len()];
            let mut d = BitDescriptor::from_bit_indices(resolution, center.iter().copied()).unwrap();
            for k in 0..6 {
                let b = (((noise >> (k * 8)) & 0xff) as usize * 31 + k) % bits;
                d.set_bit(b, !d.bit(b));
            }
            (DescriptorRef::new(obj, i as u32), d)
        })
        .collect()
}

fn oracle(entries: &[(DescriptorRef, BitDescriptor)], q: &BitDescriptor, k: usize) -> Vec<SearchResult> {
    let mut all: Vec<SearchResult> = entries
        .iter()
        .map(|(r, d)| SearchResult {
            reference: *r,
            distance: weighted_hamming(q, d).unwrap(),
        })
        .collect();
    all.sort_by(|a, b| a.cmp_key(b));
    all.truncate(k);
    all
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tree_matches_linear_oracle(
        seeds in prop::collection::vec((any::<u64>(), 0u32..5), 1..300),
        queries in prop::collection::vec(any::<u64>(), 1..6),
        k in 1usize..20,
        leaf in 1usize..40,
        products: bool,
    ) {
        let entries = clustered(8, &seeds);
        let tree = build_tree(entries.clone(), leaf, products).unwrap();
        let probe = clustered(8, &queries.iter().map(|&q| (q, 0)).collect::<Vec<_>>());
        for (_, q) in &probe {
            prop_assert_eq!(tree.query(q, k).unwrap(), oracle(&entries, q, k));
        }
    }

    #[test]
    fn round_trip_answers_identically(
        seeds in prop::collection::vec((any::<u64>(), 0u32..3), 1..150),
        products: bool,
    ) {
        let tree = build_tree(clustered(16, &seeds), 8, products).unwrap();
        let mut buf = Vec::new();
        serialize_index(&tree, &mut buf).unwrap();
        let back = deserialize_index(&mut buf.as_slice()).unwrap();
        for (_, q) in clustered(16, &[(7, 0), (99, 0), (12345, 0)]) {
            prop_assert_eq!(back.query(&q, 5).unwrap(), tree.query(&q, 5).unwrap());
        }
    }
}

#[test]
fn indexed_query_finds_itself_at_distance_zero() {
    let seeds: Vec<(u64, u32)> = (0..500u64).map(|i| (i.wrapping_mul(0x9e3779b97f4a7c15), (i % 7) as u32)).collect();
    let entries = clustered(16, &seeds);
    let tree = build_tree(entries.clone(), 32, false).unwrap();
    for (r, d) in entries.iter().step_by(13) {
        let hit = tree.query(d, 1).unwrap()[0];
        assert_eq!(hit.distance, 0.0);
        assert!(hit.reference <= *r);
    }
}

#[test]
fn k_larger_than_index_returns_everything_sorted() {
    let entries = clustered(8, &[(1, 0), (2, 1), (3, 2)]);
    let tree = build_tree(entries.clone(), 32, false).unwrap();
    let q = &entries[1].1;
    let out = tree.query(q, 10).unwrap();
    assert_eq!(out, oracle(&entries, q, 10));
    assert_eq!(out.len(), 3);
}
