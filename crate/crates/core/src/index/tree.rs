use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::partition::split;
use super::{DescriptorRef, SearchResult};
use crate::descriptor::{words_for, BitDescriptor};
use crate::distance::{bound_words, weighted_hamming_words, QueryWeights};
use crate::error::{Error, Result};

pub const DEFAULT_LEAF_THRESHOLD: usize = 32;

/// Subtrees larger than this are built on separate rayon tasks.
const PARALLEL_BUILD_MIN: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NodeKind {
    Internal { similar: u32, dissimilar: u32 },
    /// Range into the leaf-ordered entry arrays.
    Leaf { start: u32, len: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Node {
    pub(crate) kind: NodeKind,
    /// Smallest reference in the subtree; lets equal-bound subtrees be
    /// pruned under the (distance, reference) result order.
    pub(crate) min_ref: DescriptorRef,
}

/// An immutable Dissimilarity Tree. Nodes are stored in preorder and the
/// descriptors of each leaf are contiguous, so a leaf scan is one linear
/// pass over packed words.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityTree {
    pub(crate) resolution: u8,
    pub(crate) words: usize,
    pub(crate) leaf_threshold: usize,
    pub(crate) product_images: bool,
    pub(crate) nodes: Vec<Node>,
    /// One sum image per node.
    pub(crate) sums: Vec<u64>,
    /// One product image per node, or empty.
    pub(crate) products: Vec<u64>,
    pub(crate) refs: Vec<DescriptorRef>,
    pub(crate) bits: Vec<u64>,
}

/// Work counters for one query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    /// Nodes taken off the queue and expanded or scanned.
    pub nodes_visited: u64,
    pub leaves_visited: u64,
    /// Indexed descriptors whose distance was computed.
    pub entries_evaluated: u64,
    pub bounds_computed: u64,
}

enum Draft {
    Leaf(Vec<u32>),
    Internal(Box<Draft>, Box<Draft>),
}

struct FlatStore {
    words: usize,
    total_bits: usize,
    bits: Vec<u64>,
}

impl FlatStore {
    fn get(&self, id: u32) -> &[u64] {
        let start = id as usize * self.words;
        &self.bits[start..start + self.words]
    }
}

fn draft(store: &FlatStore, ids: Vec<u32>, leaf_threshold: usize) -> Draft {
    if ids.len() <= leaf_threshold {
        return Draft::Leaf(ids);
    }
    let (similar, dissimilar) = split(&ids, store.total_bits, |id| store.get(id));
    drop(ids);
    let (s, d) = if similar.len() + dissimilar.len() >= PARALLEL_BUILD_MIN {
        rayon::join(
            || draft(store, similar, leaf_threshold),
            || draft(store, dissimilar, leaf_threshold),
        )
    } else {
        (
            draft(store, similar, leaf_threshold),
            draft(store, dissimilar, leaf_threshold),
        )
    };
    Draft::Internal(Box::new(s), Box::new(d))
}

/// Builds a tree over `entries`. Leaves hold at most `leaf_threshold`
/// descriptors; product images are kept only when `store_product_images`
/// is set (they rarely help for sparse descriptors).
pub fn build_tree(
    entries: Vec<(DescriptorRef, BitDescriptor)>,
    leaf_threshold: usize,
    store_product_images: bool,
) -> Result<DissimilarityTree> {
    let resolution = entries
        .first()
        .ok_or(Error::EmptyInput("cannot index an empty descriptor set"))?
        .1
        .resolution();
    if leaf_threshold == 0 {
        return Err(Error::InvalidParameter("leaf threshold must be at least 1".into()));
    }
    if u32::try_from(entries.len()).is_err() {
        return Err(Error::InvalidParameter("too many descriptors".into()));
    }
    let words = words_for(resolution);
    let mut refs = Vec::with_capacity(entries.len());
    let mut bits = Vec::with_capacity(entries.len() * words);
    for (r, d) in &entries {
        if d.resolution() != resolution {
            return Err(Error::ResolutionMismatch {
                expected: resolution,
                actual: d.resolution(),
            });
        }
        refs.push(*r);
        bits.extend_from_slice(d.words());
    }
    drop(entries);
    let store = FlatStore {
        words,
        total_bits: resolution as usize * resolution as usize,
        bits,
    };
    let ids = (0..refs.len() as u32).collect();
    let root = draft(&store, ids, leaf_threshold);

    let mut tree = DissimilarityTree {
        resolution,
        words,
        leaf_threshold,
        product_images: store_product_images,
        nodes: Vec::new(),
        sums: Vec::new(),
        products: Vec::new(),
        refs: Vec::with_capacity(refs.len()),
        bits: Vec::with_capacity(store.bits.len()),
    };
    tree.flatten(&root, &refs, &store);
    Ok(tree)
}

impl DissimilarityTree {
    /// Appends `draft` in preorder, returning its node index.
    fn flatten(&mut self, draft: &Draft, refs: &[DescriptorRef], store: &FlatStore) -> u32 {
        let index = self.nodes.len() as u32;
        match draft {
            Draft::Leaf(ids) => {
                let start = self.refs.len() as u32;
                for &id in ids {
                    self.refs.push(refs[id as usize]);
                    self.bits.extend_from_slice(store.get(id));
                }
                let kind = NodeKind::Leaf {
                    start,
                    len: ids.len() as u32,
                };
                self.push_leaf_node(kind);
            }
            Draft::Internal(s, d) => {
                self.nodes.push(Node {
                    kind: NodeKind::Internal {
                        similar: 0,
                        dissimilar: 0,
                    },
                    min_ref: DescriptorRef::new(0, 0),
                });
                self.sums.resize(self.sums.len() + self.words, 0);
                if self.product_images {
                    self.products.resize(self.products.len() + self.words, 0);
                }
                let similar = self.flatten(s, refs, store);
                let dissimilar = self.flatten(d, refs, store);
                self.finish_internal(index, similar, dissimilar);
            }
        }
        index
    }

    /// Pushes a leaf node and derives its images and minimum reference from
    /// its entries, which must already be stored.
    pub(crate) fn push_leaf_node(&mut self, kind: NodeKind) {
        let NodeKind::Leaf { start, len } = kind else {
            unreachable!()
        };
        let (start, len) = (start as usize, len as usize);
        let w = self.words;
        let mut sum = vec![0u64; w];
        let mut product = vec![u64::MAX; w];
        for e in start..start + len {
            for (i, &word) in self.bits[e * w..(e + 1) * w].iter().enumerate() {
                sum[i] |= word;
                product[i] &= word;
            }
        }
        let min_ref = self.refs[start..start + len]
            .iter()
            .copied()
            .min()
            .expect("leaves are never empty");
        self.nodes.push(Node { kind, min_ref });
        self.sums.extend_from_slice(&sum);
        if self.product_images {
            self.products.extend_from_slice(&product);
        }
    }

    /// Fills an internal node's children, images and minimum reference
    /// from its already-built children.
    pub(crate) fn finish_internal(&mut self, index: u32, similar: u32, dissimilar: u32) {
        let w = self.words;
        let (i, s, d) = (index as usize, similar as usize, dissimilar as usize);
        for k in 0..w {
            self.sums[i * w + k] = self.sums[s * w + k] | self.sums[d * w + k];
            if self.product_images {
                self.products[i * w + k] = self.products[s * w + k] & self.products[d * w + k];
            }
        }
        self.nodes[i] = Node {
            kind: NodeKind::Internal {
                similar,
                dissimilar,
            },
            min_ref: self.nodes[s].min_ref.min(self.nodes[d].min_ref),
        };
    }

    pub fn resolution(&self) -> u8 {
        self.resolution
    }

    pub fn leaf_threshold(&self) -> usize {
        self.leaf_threshold
    }

    pub fn has_product_images(&self) -> bool {
        self.product_images
    }

    /// Number of indexed descriptors.
    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> Option<NodeView<'_>> {
        (!self.nodes.is_empty()).then_some(NodeView { tree: self, index: 0 })
    }

    /// Every indexed entry in leaf order.
    pub fn entries(&self) -> impl Iterator<Item = (DescriptorRef, BitDescriptor)> + '_ {
        (0..self.refs.len()).map(move |i| (self.refs[i], self.entry_descriptor(i)))
    }

    fn entry_descriptor(&self, i: usize) -> BitDescriptor {
        BitDescriptor::from_words(self.resolution, self.bits[i * self.words..(i + 1) * self.words].to_vec())
            .expect("stored descriptors are valid")
    }

    fn sum_words(&self, node: usize) -> &[u64] {
        &self.sums[node * self.words..(node + 1) * self.words]
    }

    fn product_words(&self, node: usize) -> Option<&[u64]> {
        self.product_images
            .then(|| &self.products[node * self.words..(node + 1) * self.words])
    }

    fn check_query(&self, query: &BitDescriptor) -> Result<()> {
        if query.resolution() != self.resolution {
            return Err(Error::ResolutionMismatch {
                expected: self.resolution,
                actual: query.resolution(),
            });
        }
        Ok(())
    }

    pub fn query(&self, query: &BitDescriptor, k: usize) -> Result<Vec<SearchResult>> {
        self.query_with_stats(query, k).map(|(r, _)| r)
    }

    /// Exact k nearest neighbours under Weighted Hamming distance, ordered
    /// by (distance, object id, vertex index).
    pub fn query_with_stats(&self, query: &BitDescriptor, k: usize) -> Result<(Vec<SearchResult>, QueryStats)> {
        self.check_query(query)?;
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let mut stats = QueryStats::default();
        let mut results = Results::new(k);
        if self.nodes.is_empty() {
            return Ok((results.items, stats));
        }
        let q = query.words();
        let weights = QueryWeights::for_query(query);
        let mut open = BinaryHeap::new();
        let mut seq = 0u64;
        open.push(Reverse(Open {
            bound: bound_words(q, &weights, self.sum_words(0), self.product_words(0)),
            seq,
            node: 0,
        }));
        stats.bounds_computed += 1;

        while let Some(Reverse(head)) = open.pop() {
            let node = &self.nodes[head.node as usize];
            if let Some(worst) = results.worst() {
                if head.bound > worst.distance {
                    // Every remaining bound is at least this large.
                    break;
                }
                if !can_improve(head.bound, node.min_ref, worst) {
                    continue;
                }
            }
            stats.nodes_visited += 1;
            match node.kind {
                NodeKind::Leaf { start, len } => {
                    stats.leaves_visited += 1;
                    stats.entries_evaluated += len as u64;
                    let w = self.words;
                    for e in start as usize..(start + len) as usize {
                        let distance = weighted_hamming_words(q, &weights, &self.bits[e * w..(e + 1) * w]);
                        results.offer(SearchResult {
                            reference: self.refs[e],
                            distance,
                        });
                    }
                }
                NodeKind::Internal {
                    similar,
                    dissimilar,
                } => {
                    for child in [similar, dissimilar] {
                        let c = child as usize;
                        let bound = bound_words(q, &weights, self.sum_words(c), self.product_words(c));
                        stats.bounds_computed += 1;
                        let admit = match results.worst() {
                            Some(worst) => can_improve(bound, self.nodes[c].min_ref, worst),
                            None => true,
                        };
                        if admit {
                            seq += 1;
                            open.push(Reverse(Open {
                                bound,
                                seq,
                                node: child,
                            }));
                        }
                    }
                }
            }
        }
        Ok((results.items, stats))
    }

    /// Linear scan over every entry; the baseline the tree is measured against.
    pub fn sequential_scan(&self, query: &BitDescriptor, k: usize) -> Result<Vec<SearchResult>> {
        self.check_query(query)?;
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let q = query.words();
        let weights = QueryWeights::for_query(query);
        let mut results = Results::new(k);
        let w = self.words;
        for (e, reference) in self.refs.iter().enumerate() {
            results.offer(SearchResult {
                reference: *reference,
                distance: weighted_hamming_words(q, &weights, &self.bits[e * w..(e + 1) * w]),
            });
        }
        Ok(results.items)
    }
}

/// Whether a subtree with lower bound `bound` and smallest reference
/// `min_ref` could hold a result ordered before `worst`.
fn can_improve(bound: f64, min_ref: DescriptorRef, worst: &SearchResult) -> bool {
    match bound.total_cmp(&worst.distance) {
        Ordering::Less => true,
        Ordering::Equal => min_ref < worst.reference,
        Ordering::Greater => false,
    }
}

#[derive(Debug, Clone, Copy)]
struct Open {
    bound: f64,
    seq: u64,
    node: u32,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Bounded sorted result list.
struct Results {
    k: usize,
    items: Vec<SearchResult>,
}

impl Results {
    fn new(k: usize) -> Self {
        Results {
            k,
            items: Vec::with_capacity(k.min(1024) + 1),
        }
    }

    /// The current k-th best, once k results are held.
    fn worst(&self) -> Option<&SearchResult> {
        if self.items.len() < self.k {
            None
        } else {
            self.items.last()
        }
    }

    fn offer(&mut self, r: SearchResult) {
        if let Some(worst) = self.worst() {
            if r.cmp_key(worst) != Ordering::Less {
                return;
            }
        }
        let pos = self.items.partition_point(|x| x.cmp_key(&r) == Ordering::Less);
        self.items.insert(pos, r);
        self.items.truncate(self.k);
    }
}

/// Read-only view of one tree node.
#[derive(Clone, Copy)]
pub struct NodeView<'a> {
    tree: &'a DissimilarityTree,
    index: usize,
}

impl<'a> NodeView<'a> {
    pub fn sum_image(&self) -> BitDescriptor {
        BitDescriptor::from_words(self.tree.resolution, self.tree.sum_words(self.index).to_vec())
            .expect("valid image")
    }

    pub fn product_image(&self) -> Option<BitDescriptor> {
        self.tree.product_words(self.index).map(|w| {
            BitDescriptor::from_words(self.tree.resolution, w.to_vec()).expect("valid image")
        })
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.tree.nodes[self.index].kind, NodeKind::Leaf { .. })
    }

    /// `(similar, dissimilar)` for internal nodes.
    pub fn children(&self) -> Option<(NodeView<'a>, NodeView<'a>)> {
        match self.tree.nodes[self.index].kind {
            NodeKind::Internal {
                similar,
                dissimilar,
            } => Some((
                NodeView {
                    tree: self.tree,
                    index: similar as usize,
                },
                NodeView {
                    tree: self.tree,
                    index: dissimilar as usize,
                },
            )),
            NodeKind::Leaf { .. } => None,
        }
    }

    /// Entries of a leaf node.
    pub fn leaf_entries(&self) -> Option<Vec<(DescriptorRef, BitDescriptor)>> {
        match self.tree.nodes[self.index].kind {
            NodeKind::Leaf { start, len } => Some(
                (start as usize..(start + len) as usize)
                    .map(|e| (self.tree.refs[e], self.tree.entry_descriptor(e)))
                    .collect(),
            ),
            NodeKind::Internal { .. } => None,
        }
    }

    /// All descriptors beneath this node.
    pub fn subtree_entries(&self) -> Vec<(DescriptorRef, BitDescriptor)> {
        match self.children() {
            None => self.leaf_entries().unwrap(),
            Some((s, d)) => {
                let mut all = s.subtree_entries();
                all.extend(d.subtree_entries());
                all
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_entries(n: usize, resolution: u8, density: f64, seed: u64) -> Vec<(DescriptorRef, BitDescriptor)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = resolution as usize * resolution as usize;
        (0..n)
            .map(|i| {
                let d = BitDescriptor::from_bit_indices(resolution, (0..bits).filter(|_| rng.gen_bool(density)))
                    .unwrap();
                (DescriptorRef::new((i % 7) as u32, i as u32), d)
            })
            .collect()
    }

    fn scan_oracle(entries: &[(DescriptorRef, BitDescriptor)], q: &BitDescriptor, k: usize) -> Vec<SearchResult> {
        let mut all: Vec<SearchResult> = entries
            .iter()
            .map(|(r, d)| SearchResult {
                reference: *r,
                distance: crate::distance::weighted_hamming(q, d).unwrap(),
            })
            .collect();
        all.sort_by(|a, b| a.cmp_key(b));
        all.truncate(k);
        all
    }

    #[test]
    fn structure_invariants() {
        let entries = random_entries(100, 16, 0.1, 1);
        let tree = build_tree(entries.clone(), 32, true).unwrap();
        let mut seen = Vec::new();
        let mut stack = vec![tree.root().unwrap()];
        while let Some(node) = stack.pop() {
            let below = node.subtree_entries();
            let or = below.iter().fold(BitDescriptor::zeros(16), |acc, (_, d)| acc.or(d).unwrap());
            let and = below.iter().fold(BitDescriptor::ones(16), |acc, (_, d)| acc.and(d).unwrap());
            assert_eq!(node.sum_image(), or);
            assert_eq!(node.product_image().unwrap(), and);
            match node.children() {
                Some((s, d)) => {
                    assert_eq!(node.sum_image(), s.sum_image().or(&d.sum_image()).unwrap());
                    stack.push(s);
                    stack.push(d);
                }
                None => {
                    let leaf = node.leaf_entries().unwrap();
                    assert!(!leaf.is_empty() && leaf.len() <= 32);
                    seen.extend(leaf.into_iter().map(|(r, _)| r));
                }
            }
        }
        seen.sort();
        let mut expected: Vec<_> = entries.iter().map(|(r, _)| *r).collect();
        expected.sort();
        assert_eq!(seen, expected);
    }

    #[test]
    fn single_descriptor_is_one_leaf() {
        let tree = build_tree(random_entries(1, 16, 0.2, 2), 32, false).unwrap();
        assert_eq!(tree.node_count(), 1);
        assert!(tree.root().unwrap().is_leaf());
        assert!(tree.root().unwrap().product_image().is_none());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(build_tree(Vec::new(), 32, false), Err(Error::EmptyInput(_))));
        let mut entries = random_entries(3, 16, 0.2, 3);
        entries.push((DescriptorRef::new(9, 9), BitDescriptor::zeros(8)));
        assert!(matches!(build_tree(entries, 32, false), Err(Error::ResolutionMismatch { .. })));
        assert!(build_tree(random_entries(3, 16, 0.2, 3), 0, false).is_err());
    }

    #[test]
    fn query_matches_scan_with_and_without_products() {
        let entries = random_entries(600, 16, 0.15, 4);
        let queries = random_entries(40, 16, 0.15, 5);
        for products in [false, true] {
            let tree = build_tree(entries.clone(), 8, products).unwrap();
            for (_, q) in &queries {
                for k in [1, 3, 17] {
                    assert_eq!(tree.query(q, k).unwrap(), scan_oracle(&entries, q, k));
                    assert_eq!(tree.sequential_scan(q, k).unwrap(), scan_oracle(&entries, q, k));
                }
            }
        }
    }

    #[test]
    fn present_query_is_found_at_zero() {
        let entries = random_entries(300, 16, 0.1, 6);
        let tree = build_tree(entries.clone(), 32, false).unwrap();
        let (r, d) = &entries[123];
        let hit = tree.query(d, 1).unwrap();
        assert_eq!(hit[0].distance, 0.0);
        assert_eq!(hit[0].reference, *r);
    }

    #[test]
    fn k_equal_to_size_returns_everything_sorted() {
        let entries = random_entries(90, 16, 0.1, 7);
        let tree = build_tree(entries.clone(), 4, false).unwrap();
        let q = &random_entries(1, 16, 0.1, 8)[0].1;
        let all = tree.query(q, 90).unwrap();
        assert_eq!(all.len(), 90);
        assert!(all.windows(2).all(|w| w[0].cmp_key(&w[1]) == Ordering::Less));
        assert_eq!(tree.query(q, 500).unwrap().len(), 90);
    }

    #[test]
    fn duplicates_resolve_to_lowest_reference() {
        let base = random_entries(50, 16, 0.1, 9);
        let mut entries = Vec::new();
        for copy in (0..3u32).rev() {
            for (r, d) in &base {
                entries.push((DescriptorRef::new(copy, r.vertex_index), d.clone()));
            }
        }
        let tree = build_tree(entries, 4, false).unwrap();
        for (r, d) in &base {
            let hits = tree.query(d, 3).unwrap();
            let refs: Vec<u32> = hits.iter().map(|h| h.reference.object_id).collect();
            assert_eq!(refs, [0, 1, 2]);
            assert!(hits.iter().all(|h| h.distance == 0.0 && h.reference.vertex_index == r.vertex_index));
        }
    }

    #[test]
    fn bad_queries() {
        let tree = build_tree(random_entries(10, 16, 0.1, 10), 4, false).unwrap();
        assert!(tree.query(&BitDescriptor::zeros(8), 1).is_err());
        assert!(tree.query(&BitDescriptor::zeros(16), 0).is_err());
    }
}
