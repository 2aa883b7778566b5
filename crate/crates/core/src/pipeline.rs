//! Indexing complete objects and retrieving them from partial queries.
//!
//! Complete objects are described with the original descriptor rule and
//! indexed in one tree. A query mesh is described with the boundary-filtered
//! rule; its descriptors are sampled in random order without replacement,
//! each sample's nearest neighbour votes for its object, and the loop ends
//! once enough objects have reached the vote threshold.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::descriptor::{descriptors_for_object, BitDescriptor, DescriptorParams};
use crate::distance::{weighted_hamming_words, QueryWeights};
use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;
use crate::index::{build_tree, DescriptorRef, DissimilarityTree, DEFAULT_LEAF_THRESHOLD};

pub const DEFAULT_VOTE_THRESHOLD: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectInfo {
    pub id: u32,
    pub name: String,
    pub vertex_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexOptions {
    pub leaf_threshold: usize,
    pub product_images: bool,
}

impl Default for IndexOptions {
    fn default() -> Self {
        IndexOptions {
            leaf_threshold: DEFAULT_LEAF_THRESHOLD,
            product_images: false,
        }
    }
}

/// A tree over the descriptors of a set of complete objects.
#[derive(Debug, Clone)]
pub struct IndexedCollection {
    tree: DissimilarityTree,
    objects: Vec<ObjectInfo>,
    params: DescriptorParams,
}

impl IndexedCollection {
    /// Reassembles a collection, e.g. after loading the tree from disk.
    pub fn from_parts(tree: DissimilarityTree, objects: Vec<ObjectInfo>, params: DescriptorParams) -> Result<Self> {
        if tree.resolution() != params.resolution() {
            return Err(Error::ResolutionMismatch {
                expected: params.resolution(),
                actual: tree.resolution(),
            });
        }
        if let Some((i, o)) = objects.iter().enumerate().find(|(i, o)| o.id as usize != *i) {
            return Err(Error::InvalidParameter(format!("object at position {i} has id {}", o.id)));
        }
        if let Some((r, _)) = tree.entries().find(|(r, _)| r.object_id as usize >= objects.len()) {
            return Err(Error::Corrupt(format!("index refers to unknown object {}", r.object_id)));
        }
        Ok(IndexedCollection {
            tree,
            objects,
            params: params.with_delta_threshold(1)?,
        })
    }

    pub fn tree(&self) -> &DissimilarityTree {
        &self.tree
    }

    pub fn objects(&self) -> &[ObjectInfo] {
        &self.objects
    }

    /// Parameters of the indexed descriptors (delta threshold is always 1).
    pub fn params(&self) -> &DescriptorParams {
        &self.params
    }

    /// Descriptors of each object, in object id then vertex order.
    pub fn descriptors_by_object(&self) -> Vec<Vec<BitDescriptor>> {
        let mut entries: Vec<(DescriptorRef, BitDescriptor)> = self.tree.entries().collect();
        entries.sort_by_key(|(r, _)| *r);
        let mut out = vec![Vec::new(); self.objects.len()];
        for (r, d) in entries {
            out[r.object_id as usize].push(d);
        }
        out
    }
}

pub fn build_index(meshes: &[(String, TriangleMesh)], params: &DescriptorParams) -> Result<IndexedCollection> {
    build_index_with(meshes, params, IndexOptions::default())
}

/// Object ids follow input order. Complete objects always use delta 1,
/// whatever `params` says.
pub fn build_index_with(
    meshes: &[(String, TriangleMesh)],
    params: &DescriptorParams,
    options: IndexOptions,
) -> Result<IndexedCollection> {
    if meshes.is_empty() {
        return Err(Error::EmptyInput("no meshes to index"));
    }
    if let Some((name, _)) = meshes.iter().find(|(_, m)| m.is_empty()) {
        return Err(Error::InvalidMesh(format!("mesh {name:?} is empty")));
    }
    let params = params.with_delta_threshold(1)?;
    let per_object: Vec<Vec<(u32, BitDescriptor)>> = meshes
        .par_iter()
        .map(|(_, mesh)| descriptors_for_object(mesh, &params))
        .collect();
    let entries: Vec<(DescriptorRef, BitDescriptor)> = per_object
        .into_iter()
        .enumerate()
        .flat_map(|(obj, ds)| {
            ds.into_iter()
                .map(move |(v, d)| (DescriptorRef::new(obj as u32, v), d))
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::NoUsableVertices);
    }
    let tree = build_tree(entries, options.leaf_threshold, options.product_images)?;
    let objects = meshes
        .iter()
        .enumerate()
        .map(|(i, (name, mesh))| ObjectInfo {
            id: i as u32,
            name: name.clone(),
            vertex_count: mesh.vertex_count() as u32,
        })
        .collect();
    Ok(IndexedCollection { tree, objects, params })
}

/// Per-vertex query descriptors with the given delta threshold.
pub fn query_descriptors(
    mesh: &TriangleMesh,
    params: &DescriptorParams,
    delta_threshold: u8,
) -> Result<Vec<(u32, BitDescriptor)>> {
    let ds = descriptors_for_object(mesh, &params.with_delta_threshold(delta_threshold)?);
    if ds.is_empty() {
        return Err(Error::NoUsableVertices);
    }
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetrievalOptions {
    pub vote_threshold: u32,
    pub seed: u64,
    /// Number of objects that must reach the threshold before stopping.
    pub max_matches: usize,
}

impl RetrievalOptions {
    pub fn new(seed: u64) -> Self {
        RetrievalOptions {
            vote_threshold: DEFAULT_VOTE_THRESHOLD,
            seed,
            max_matches: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ThresholdReached,
    VerticesExhausted,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ThresholdReached => "ThresholdReached",
            Termination::VerticesExhausted => "VerticesExhausted",
        }
    }
}

/// One processed query descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vote {
    pub query_vertex: u32,
    pub object_id: u32,
    pub distance: f64,
    /// Votes of `object_id` after this one.
    pub cumulative_votes: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VoteTally {
    votes: BTreeMap<u32, u32>,
    cast: u32,
    log: Vec<Vote>,
}

impl VoteTally {
    pub fn cast(&mut self, query_vertex: u32, object_id: u32, distance: f64) -> u32 {
        let n = self.votes.entry(object_id).or_default();
        *n += 1;
        self.cast += 1;
        self.log.push(Vote {
            query_vertex,
            object_id,
            distance,
            cumulative_votes: *n,
        });
        *n
    }

    pub fn votes(&self, object_id: u32) -> u32 {
        self.votes.get(&object_id).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u32 {
        self.cast
    }

    pub fn log(&self) -> &[Vote] {
        &self.log
    }

    /// `(object id, votes)` by votes descending, then object id.
    pub fn ranked(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = self.votes.iter().map(|(&o, &v)| (o, v)).collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub ranked: Vec<(u32, u32)>,
    pub terminated: Termination,
    pub queries_processed: usize,
    pub log: Vec<Vote>,
}

impl RetrievalResult {
    pub fn best(&self) -> Option<u32> {
        self.ranked.first().map(|&(o, _)| o)
    }
}

/// Describes `query` with the boundary-filtered rule and runs the vote loop.
pub fn retrieve(
    collection: &IndexedCollection,
    query: &TriangleMesh,
    options: &RetrievalOptions,
) -> Result<RetrievalResult> {
    let descriptors = query_descriptors(query, collection.params(), 2)?;
    retrieve_descriptors(collection, &descriptors, options)
}

/// The vote loop over precomputed `(vertex, descriptor)` pairs.
pub fn retrieve_descriptors(
    collection: &IndexedCollection,
    descriptors: &[(u32, BitDescriptor)],
    options: &RetrievalOptions,
) -> Result<RetrievalResult> {
    if options.vote_threshold == 0 || options.max_matches == 0 {
        return Err(Error::InvalidParameter(
            "vote threshold and max matches must be at least 1".into(),
        ));
    }
    if descriptors.is_empty() {
        return Err(Error::NoUsableVertices);
    }
    let resolution = collection.params().resolution();
    if let Some((_, d)) = descriptors.iter().find(|(_, d)| d.resolution() != resolution) {
        return Err(Error::ResolutionMismatch {
            expected: resolution,
            actual: d.resolution(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut order: Vec<usize> = (0..descriptors.len()).collect();
    let n = order.len() as u64;
    let mut tally = VoteTally::default();
    let mut matched = 0;
    let mut terminated = Termination::VerticesExhausted;
    for i in 0..order.len() {
        let j = rng.gen_range(i as u64..n) as usize;
        order.swap(i, j);
        let (vertex, descriptor) = &descriptors[order[i]];
        let nearest = collection.tree().query(descriptor, 1)?;
        let hit = nearest.first().ok_or(Error::EmptyInput("index is empty"))?;
        let votes = tally.cast(*vertex, hit.reference.object_id, hit.distance);
        if votes == options.vote_threshold {
            matched += 1;
            if matched >= options.max_matches {
                terminated = Termination::ThresholdReached;
                break;
            }
        }
    }
    Ok(RetrievalResult {
        ranked: tally.ranked(),
        terminated,
        queries_processed: tally.total() as usize,
        log: tally.log,
    })
}

/// For each object, the sum over `queries` of the Weighted Hamming distance
/// to that object's closest descriptor. Returns `(object id, sum)` ascending
/// by sum, then id. Objects without descriptors sum to infinity.
pub fn object_distance_ranking(
    objects: &[Vec<BitDescriptor>],
    queries: &[BitDescriptor],
) -> Result<Vec<(u32, f64)>> {
    let mut sums = object_distance_sums(objects, queries)?
        .into_iter()
        .enumerate()
        .map(|(i, s)| (i as u32, s))
        .collect::<Vec<_>>();
    sums.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(sums)
}

/// The per-object sums of [`object_distance_ranking`], in object order.
pub fn object_distance_sums(objects: &[Vec<BitDescriptor>], queries: &[BitDescriptor]) -> Result<Vec<f64>> {
    let first = queries.first().ok_or(Error::NoUsableVertices)?;
    for d in queries.iter().chain(objects.iter().flatten()) {
        first.check_same_resolution(d)?;
    }
    let weights: Vec<QueryWeights> = queries.iter().map(QueryWeights::for_query).collect();
    Ok(objects
        .par_iter()
        .map(|targets| {
            if targets.is_empty() {
                return f64::INFINITY;
            }
            queries
                .iter()
                .zip(&weights)
                .map(|(q, w)| {
                    targets
                        .iter()
                        .map(|t| weighted_hamming_words(q.words(), w, t.words()))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{box_mesh, uv_sphere};
    use crate::geometry::Point;

    fn params() -> DescriptorParams {
        DescriptorParams::new(16, 4.0, 1).unwrap()
    }

    fn small_set() -> Vec<(String, TriangleMesh)> {
        vec![
            ("sphere".into(), uv_sphere(Point::origin(), 3.0, 10, 12)),
            ("box".into(), box_mesh(Point::new(-2., -1., -3.), Point::new(2., 1., 3.))),
        ]
    }

    #[test]
    fn index_holds_every_vertex() {
        let set = small_set();
        let c = build_index(&set, &params()).unwrap();
        let total: usize = set.iter().map(|(_, m)| m.vertex_count()).sum();
        assert_eq!(c.tree().len(), total);
        assert_eq!(c.objects()[1].name, "box");
        assert_eq!(c.params().delta_threshold(), 1);
        assert_eq!(c.descriptors_by_object()[1].len(), 8);
    }

    #[test]
    fn isolated_vertices_are_not_indexed() {
        let mut vertices = box_mesh(Point::origin(), Point::new(1., 1., 1.)).vertices().to_vec();
        vertices.push(Point::new(5., 5., 5.));
        let triangles = box_mesh(Point::origin(), Point::new(1., 1., 1.)).triangles().to_vec();
        let mesh = TriangleMesh::new(vertices, triangles).unwrap();
        let c = build_index(&[("b".into(), mesh)], &params()).unwrap();
        assert_eq!(c.tree().len(), 8);
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(build_index(&[], &params()).is_err());
        assert!(build_index(&[("e".into(), TriangleMesh::empty())], &params()).is_err());
    }

    #[test]
    fn duplicate_objects_tie_to_lower_id() {
        let mesh = uv_sphere(Point::origin(), 3.0, 8, 10);
        let set = vec![("a".into(), mesh.clone()), ("b".into(), mesh.clone())];
        let c = build_index(&set, &params()).unwrap();
        for (_, d) in query_descriptors(&mesh, c.params(), 1).unwrap() {
            let hit = c.tree().query(&d, 1).unwrap()[0];
            assert_eq!(hit.distance, 0.0);
            assert_eq!(hit.reference.object_id, 0);
        }
    }

    #[test]
    fn threshold_one_stops_after_first_vote() {
        let c = build_index(&small_set(), &params()).unwrap();
        let opts = RetrievalOptions {
            vote_threshold: 1,
            ..RetrievalOptions::new(5)
        };
        let r = retrieve(&c, &small_set()[1].1, &opts).unwrap();
        assert_eq!(r.queries_processed, 1);
        assert_eq!(r.terminated, Termination::ThresholdReached);
        assert_eq!(r.ranked, vec![(r.log[0].object_id, 1)]);
    }

    #[test]
    fn exhaustion_when_threshold_unreachable() {
        let c = build_index(&small_set(), &params()).unwrap();
        let query = box_mesh(Point::new(-2., -1., -3.), Point::new(2., 1., 3.));
        let r = retrieve(&c, &query, &RetrievalOptions::new(1)).unwrap();
        assert_eq!(r.terminated, Termination::VerticesExhausted);
        assert_eq!(r.queries_processed, 8);
        let mut seen: Vec<u32> = r.log.iter().map(|v| v.query_vertex).collect();
        seen.sort();
        assert_eq!(seen, (0..8).collect::<Vec<_>>());
        assert_eq!(r.ranked.iter().map(|x| x.1).sum::<u32>(), 8);
    }

    #[test]
    fn retrieval_is_seeded() {
        let c = build_index(&small_set(), &params()).unwrap();
        let q = &small_set()[0].1;
        let a = retrieve(&c, q, &RetrievalOptions::new(9)).unwrap();
        let b = retrieve(&c, q, &RetrievalOptions::new(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.best(), Some(0));
        assert_eq!(a.terminated, Termination::ThresholdReached);
        assert!(a.queries_processed >= 10);
    }

    #[test]
    fn tally_ranking_and_log() {
        let mut t = VoteTally::default();
        t.cast(4, 2, 0.1);
        t.cast(5, 1, 0.2);
        t.cast(6, 2, 0.3);
        t.cast(7, 0, 0.3);
        assert_eq!(t.ranked(), vec![(2, 2), (0, 1), (1, 1)]);
        assert_eq!(t.total(), 4);
        assert_eq!(t.log()[2].cumulative_votes, 2);
    }

    #[test]
    fn resolution_mismatch_rejected() {
        let c = build_index(&small_set(), &params()).unwrap();
        let d = vec![(0, BitDescriptor::zeros(32))];
        assert!(matches!(
            retrieve_descriptors(&c, &d, &RetrievalOptions::new(0)),
            Err(Error::ResolutionMismatch { .. })
        ));
    }

    #[test]
    fn identical_query_sums_to_zero() {
        let c = build_index(&small_set(), &params()).unwrap();
        let objects = c.descriptors_by_object();
        let ranking = object_distance_ranking(&objects, &objects[1]).unwrap();
        assert_eq!(ranking[0], (1, 0.0));
        assert!(ranking[1].1 > 0.0);
    }
}
