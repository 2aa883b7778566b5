use quicci_core::datagen::{generate_partial_view, synthetic_object_set, ViewSpec, DEFAULT_VIEW_DISTANCE};
use quicci_core::descriptor::DescriptorParams;
use quicci_core::geometry::compute_vertex_normals;
use quicci_core::pipeline::{
    build_index, object_distance_ranking, query_descriptors, retrieve, retrieve_descriptors, RetrievalOptions,
    Termination,
};

fn collection_and_views() -> (quicci_core::pipeline::IndexedCollection, Vec<quicci_core::geometry::TriangleMesh>) {
    let set: Vec<_> = synthetic_object_set(4, 21)
        .into_iter()
        .map(|(n, m)| (n, compute_vertex_normals(&m)))
        .collect();
    let params = DescriptorParams::new(16, 100.0, 1).unwrap();
    let collection = build_index(&set, &params).unwrap();
    let views = set
        .iter()
        .enumerate()
        .map(|(i, (_, m))| {
            let view = ViewSpec::random(m, 50 + i as u64, DEFAULT_VIEW_DISTANCE).unwrap();
            generate_partial_view(m, &view).unwrap().mesh
        })
        .collect();
    (collection, views)
}

#[test]
fn partial_views_retrieve_their_source() {
    let (collection, views) = collection_and_views();
    let objects = collection.descriptors_by_object();
    for (i, view) in views.iter().enumerate() {
        let result = retrieve(&collection, view, &RetrievalOptions::new(3)).unwrap();
        assert_eq!(result.best(), Some(i as u32));
        assert_eq!(result.terminated, Termination::ThresholdReached);
        assert!(result.queries_processed >= 10);

        let queries: Vec<_> = query_descriptors(view, collection.params(), 2)
            .unwrap()
            .into_iter()
            .map(|(_, d)| d)
            .collect();
        assert_eq!(object_distance_ranking(&objects, &queries).unwrap()[0].0, i as u32);
    }
}

#[test]
fn exhausting_every_descriptor_matches_a_full_tally() {
    let (collection, views) = collection_and_views();
    let descriptors = query_descriptors(&views[2], collection.params(), 2).unwrap();
    let opts = RetrievalOptions {
        vote_threshold: u32::MAX,
        ..RetrievalOptions::new(8)
    };
    let result = retrieve_descriptors(&collection, &descriptors, &opts).unwrap();
    assert_eq!(result.terminated, Termination::VerticesExhausted);
    assert_eq!(result.queries_processed, descriptors.len());

    let mut counts = std::collections::BTreeMap::<u32, u32>::new();
    for (_, d) in &descriptors {
        let hit = collection.tree().query(d, 1).unwrap()[0];
        *counts.entry(hit.reference.object_id).or_default() += 1;
    }
    let mut expected: Vec<(u32, u32)> = counts.into_iter().collect();
    expected.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    assert_eq!(result.ranked, expected);

    let mut seen: Vec<u32> = result.log.iter().map(|v| v.query_vertex).collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), descriptors.len());
}

#[test]
fn max_matches_waits_for_more_objects() {
    let (collection, views) = collection_and_views();
    let opts = RetrievalOptions {
        vote_threshold: 2,
        max_matches: 2,
        ..RetrievalOptions::new(4)
    };
    let result = retrieve(&collection, &views[0], &opts).unwrap();
    if result.terminated == Termination::ThresholdReached {
        assert!(result.ranked.iter().filter(|r| r.1 >= 2).count() >= 2);
    }
    assert_eq!(result.ranked.iter().map(|r| r.1 as usize).sum::<usize>(), result.queries_processed);
}
