//! Index file format (all integers little-endian).
//!
//! ```text
//! [u8; 4]  magic "DTRE"
//! u32      version = 1
//! u8       resolution
//! u8       flags, bit 0 = product images present
//! u32      leaf threshold
//! u64      descriptor count
//! nodes, preorder:
//!   u8 kind = 0 (internal): sum image words [, product image words],
//!                           u64 similar offset, u64 dissimilar offset
//!   u8 kind = 1 (leaf):     u32 entry count,
//!                           entries of (u32 object id, u32 vertex index, descriptor words)
//! ```
//!
//! Child offsets are byte offsets from the start of the node section.
//! Leaf images are not stored; they are recomputed on load, and every
//! stored internal image is checked against its children.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::tree::{DissimilarityTree, Node, NodeKind};
use super::DescriptorRef;
use crate::descriptor::words_for;
use crate::error::{Error, Result};

pub const INDEX_MAGIC: [u8; 4] = *b"DTRE";
pub const INDEX_VERSION: u32 = 1;

const KIND_INTERNAL: u8 = 0;
const KIND_LEAF: u8 = 1;
const FLAG_PRODUCT: u8 = 1;

pub fn serialize_index(tree: &DissimilarityTree, mut out: impl Write) -> Result<()> {
    if tree.is_empty() {
        return Err(Error::EmptyInput("cannot serialize an empty index"));
    }
    let mut buf = Vec::with_capacity(64 + tree.bits.len() * 8 + tree.sums.len() * 8);
    buf.extend_from_slice(&INDEX_MAGIC);
    buf.write_u32::<LittleEndian>(INDEX_VERSION)?;
    buf.write_u8(tree.resolution)?;
    buf.write_u8(if tree.product_images { FLAG_PRODUCT } else { 0 })?;
    buf.write_u32::<LittleEndian>(
        u32::try_from(tree.leaf_threshold)
            .map_err(|_| Error::InvalidParameter("leaf threshold too large".into()))?,
    )?;
    buf.write_u64::<LittleEndian>(tree.refs.len() as u64)?;
    let section_start = buf.len();

    // Iterative preorder with offset patching.
    let w = tree.words;
    let mut stack: Vec<(usize, Option<usize>)> = vec![(0, None)];
    while let Some((node, patch_at)) = stack.pop() {
        let offset = (buf.len() - section_start) as u64;
        if let Some(at) = patch_at {
            buf[at..at + 8].copy_from_slice(&offset.to_le_bytes());
        }
        match tree.nodes[node].kind {
            NodeKind::Internal {
                similar,
                dissimilar,
            } => {
                buf.write_u8(KIND_INTERNAL)?;
                for &word in &tree.sums[node * w..(node + 1) * w] {
                    buf.write_u64::<LittleEndian>(word)?;
                }
                if tree.product_images {
                    for &word in &tree.products[node * w..(node + 1) * w] {
                        buf.write_u64::<LittleEndian>(word)?;
                    }
                }
                let similar_at = buf.len();
                buf.write_u64::<LittleEndian>(0)?;
                let dissimilar_at = buf.len();
                buf.write_u64::<LittleEndian>(0)?;
                stack.push((dissimilar as usize, Some(dissimilar_at)));
                stack.push((similar as usize, Some(similar_at)));
            }
            NodeKind::Leaf { start, len } => {
                buf.write_u8(KIND_LEAF)?;
                buf.write_u32::<LittleEndian>(len)?;
                for e in start as usize..(start + len) as usize {
                    buf.write_u32::<LittleEndian>(tree.refs[e].object_id)?;
                    buf.write_u32::<LittleEndian>(tree.refs[e].vertex_index)?;
                    for &word in &tree.bits[e * w..(e + 1) * w] {
                        buf.write_u64::<LittleEndian>(word)?;
                    }
                }
            }
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.data.len() - self.pos < n {
            return Err(Error::Corrupt(format!("truncated while reading {what}")));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn words(&mut self, n: usize, what: &str) -> Result<Vec<u64>> {
        let mut out = vec![0u64; n];
        self.take(n * 8, what)?
            .read_u64_into::<LittleEndian>(&mut out)
            .expect("length checked");
        Ok(out)
    }
}

pub fn deserialize_index(mut input: impl Read) -> Result<DissimilarityTree> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let mut r = Reader { data: &data, pos: 0 };

    let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if magic != INDEX_MAGIC {
        return Err(Error::BadMagic {
            expected: INDEX_MAGIC,
            found: magic,
        });
    }
    let version = r.u32("version")?;
    if version != INDEX_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let resolution = r.u8("resolution")?;
    if resolution == 0 || resolution > crate::descriptor::MAX_RESOLUTION {
        return Err(Error::Corrupt(format!("resolution {resolution}")));
    }
    let flags = r.u8("flags")?;
    if flags & !FLAG_PRODUCT != 0 {
        return Err(Error::Corrupt(format!("unknown flags {flags:#x}")));
    }
    let leaf_threshold = r.u32("leaf threshold")? as usize;
    let count = r.u64("descriptor count")?;
    if count == 0 {
        return Err(Error::EmptyInput("index holds no descriptors"));
    }
    if leaf_threshold == 0 {
        return Err(Error::Corrupt("leaf threshold 0".into()));
    }
    let section_start = r.pos;
    let w = words_for(resolution);
    let mut tree = DissimilarityTree {
        resolution,
        words: w,
        leaf_threshold,
        product_images: flags & FLAG_PRODUCT != 0,
        nodes: Vec::new(),
        sums: Vec::new(),
        products: Vec::new(),
        refs: Vec::new(),
        bits: Vec::new(),
    };

    enum Step {
        Visit { offset: u64, parent: Option<(u32, bool)> },
        Finish { index: u32, stored_sum: Vec<u64>, stored_product: Option<Vec<u64>> },
    }
    // (similar, dissimilar) indices for internal nodes, filled as children appear.
    let mut children: Vec<[u32; 2]> = Vec::new();
    let mut stack = vec![Step::Visit {
        offset: 0,
        parent: None,
    }];
    let mut last_offset: Option<u64> = None;
    while let Some(step) = stack.pop() {
        match step {
            Step::Visit { offset, parent } => {
                // Preorder offsets strictly increase; this rules out cycles and sharing.
                if last_offset.is_some_and(|l| offset <= l) {
                    return Err(Error::Corrupt(format!("node offset {offset} out of order")));
                }
                last_offset = Some(offset);
                let pos = section_start as u64 + offset;
                if pos != r.pos as u64 {
                    return Err(Error::Corrupt(format!(
                        "node offset {offset} does not follow its predecessor"
                    )));
                }
                let index = tree.nodes.len() as u32;
                if let Some((p, is_dissimilar)) = parent {
                    children[p as usize][is_dissimilar as usize] = index;
                }
                children.push([0, 0]);
                match r.u8("node kind")? {
                    KIND_INTERNAL => {
                        let stored_sum = r.words(w, "sum image")?;
                        let stored_product = if tree.product_images {
                            Some(r.words(w, "product image")?)
                        } else {
                            None
                        };
                        let similar = r.u64("child offset")?;
                        let dissimilar = r.u64("child offset")?;
                        tree.nodes.push(Node {
                            kind: NodeKind::Internal {
                                similar: 0,
                                dissimilar: 0,
                            },
                            min_ref: DescriptorRef::new(0, 0),
                        });
                        tree.sums.resize(tree.sums.len() + w, 0);
                        if tree.product_images {
                            tree.products.resize(tree.products.len() + w, 0);
                        }
                        stack.push(Step::Finish {
                            index,
                            stored_sum,
                            stored_product,
                        });
                        stack.push(Step::Visit {
                            offset: dissimilar,
                            parent: Some((index, true)),
                        });
                        stack.push(Step::Visit {
                            offset: similar,
                            parent: Some((index, false)),
                        });
                    }
                    KIND_LEAF => {
                        let len = r.u32("leaf size")?;
                        if len == 0 || len as usize > leaf_threshold {
                            return Err(Error::Corrupt(format!("leaf with {len} entries")));
                        }
                        if tree.refs.len() as u64 + len as u64 > count {
                            return Err(Error::Corrupt("more entries than declared".into()));
                        }
                        let start = tree.refs.len() as u32;
                        for _ in 0..len {
                            let object_id = r.u32("entry")?;
                            let vertex_index = r.u32("entry")?;
                            let words = r.words(w, "entry descriptor")?;
                            crate::descriptor::BitDescriptor::from_words(resolution, words.clone())?;
                            tree.refs.push(DescriptorRef::new(object_id, vertex_index));
                            tree.bits.extend_from_slice(&words);
                        }
                        tree.push_leaf_node(NodeKind::Leaf { start, len });
                    }
                    other => return Err(Error::Corrupt(format!("unknown node kind {other}"))),
                }
            }
            Step::Finish {
                index,
                stored_sum,
                stored_product,
            } => {
                let [similar, dissimilar] = children[index as usize];
                tree.finish_internal(index, similar, dissimilar);
                let i = index as usize;
                if tree.sums[i * w..(i + 1) * w] != stored_sum[..] {
                    return Err(Error::Corrupt(format!("sum image of node {index} is inconsistent")));
                }
                if let Some(p) = stored_product {
                    if tree.products[i * w..(i + 1) * w] != p[..] {
                        return Err(Error::Corrupt(format!(
                            "product image of node {index} is inconsistent"
                        )));
                    }
                }
            }
        }
    }
    if tree.refs.len() as u64 != count {
        return Err(Error::Corrupt(format!(
            "declared {count} descriptors, found {}",
            tree.refs.len()
        )));
    }
    if r.pos != data.len() {
        return Err(Error::Corrupt("trailing bytes after node section".into()));
    }
    Ok(tree)
}
