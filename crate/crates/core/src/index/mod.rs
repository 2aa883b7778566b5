//! The Dissimilarity Tree: a binary tree over binary descriptors whose
//! nodes carry the bitwise OR (sum image) and optionally the bitwise AND
//! (product image) of everything beneath them.
//!
//! Each split moves descriptors that set rarely-used bits into a
//! "dissimilar" child so the "similar" child's sum image has large regions
//! of zeros. Querying is best-first over a priority queue of subtrees keyed
//! by the Weighted Hamming lower bound those images imply, and returns the
//! exact k nearest neighbours.

mod format;
mod partition;
mod tree;

pub use format::{deserialize_index, serialize_index, INDEX_MAGIC, INDEX_VERSION};
pub use partition::{bit_popularity, partition, partition_indices, BitPopularityGrid};
pub use tree::{build_tree, DissimilarityTree, NodeView, QueryStats, DEFAULT_LEAF_THRESHOLD};

use std::cmp::Ordering;

/// Provenance of an indexed descriptor. Ordered by object, then vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DescriptorRef {
    pub object_id: u32,
    pub vertex_index: u32,
}

impl DescriptorRef {
    pub fn new(object_id: u32, vertex_index: u32) -> Self {
        DescriptorRef {
            object_id,
            vertex_index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    pub reference: DescriptorRef,
    pub distance: f64,
}

impl SearchResult {
    /// Result order: distance, then object id, then vertex index.
    pub fn cmp_key(&self, other: &SearchResult) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.reference.cmp(&other.reference))
    }
}
