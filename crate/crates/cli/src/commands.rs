use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{io_err, CliError, Result};
use crate::files::{
    create_dir, create_file, csv_writer, list_meshes, load, manifest_path_for, read_json, stem, write_json,
    write_mesh, IndexedObject, Manifest,
};
use crate::{Command, DescriptorArgs, EvalMode};
use quicci_core::datagen::{
    generate_partial_view, histogram, synthetic_object_set, undesirable_bit_report, write_correspondence,
    read_correspondence, BitReportRow, ViewSpec,
};
use quicci_core::descriptor::{descriptors_for_object, read_descriptor_dump, write_descriptor_dump, DescriptorParams};
use quicci_core::geometry::compute_vertex_normals;
use quicci_core::index::{bit_popularity, deserialize_index, serialize_index};
use quicci_core::pipeline::{
    build_index_with, object_distance_sums, query_descriptors, retrieve_descriptors, IndexOptions,
    IndexedCollection, ObjectInfo, RetrievalOptions,
};

pub const VOTE_LOG_HEADER: [&str; 3] = ["queryIndex", "objectId", "cumulativeVotes"];

pub fn dispatch(command: Command, threads: usize, out: &mut dyn Write) -> Result<()> {
    let report = |out: &mut dyn Write, line: String| -> Result<()> {
        writeln!(out, "{line}").map_err(io_err("<stdout>"))
    };
    match command {
        Command::GenSynthetic { count, seed, out: dir } => {
            let lines = gen_synthetic(count, seed, &dir)?;
            report(out, lines)
        }
        Command::Augment {
            input,
            seed,
            out: dir,
            view_distance,
        } => report(out, augment(&input, seed, &dir, view_distance)?),
        Command::BuildIndex {
            input,
            out: file,
            descriptor,
            leaf_threshold,
            product_images,
        } => report(
            out,
            build_index(&input, &file, &descriptor, leaf_threshold, product_images, threads)?,
        ),
        Command::Query {
            index,
            query: mesh,
            vote_threshold,
            seed,
            max_matches,
            json_out,
            log_out,
        } => {
            let opts = RetrievalOptions {
                vote_threshold,
                seed,
                max_matches,
            };
            report(out, query(&index, &mesh, &opts, &json_out, &log_out)?)
        }
        Command::EvalNn {
            index,
            queries,
            mode,
            delta_threshold,
            vote_threshold,
            seed,
            csv_out,
        } => {
            let opts = RetrievalOptions {
                vote_threshold,
                seed,
                max_matches: 1,
            };
            let lines = eval_nn(&index, &queries, mode, delta_threshold, &opts, &csv_out)?;
            lines.into_iter().try_for_each(|l| report(out, l))
        }
        Command::BenchIndex { index, queries, k, out: dir } => report(out, bench_index(&index, &queries, k, &dir)?),
        Command::Heatmap { dump, pgm_out, csv_out } => report(out, heatmap(&dump, &pgm_out, &csv_out)?),
        Command::BitReport {
            complete,
            partial,
            descriptor,
            out: dir,
        } => report(out, bit_report(&complete, &partial, &descriptor, &dir)?),
        Command::DumpDescriptors {
            input,
            descriptor,
            delta_threshold,
            out: file,
        } => report(out, dump_descriptors(&input, &descriptor, delta_threshold, &file)?),
    }
}

fn descriptor_manifest(m: Manifest, params: &DescriptorParams) -> Manifest {
    m.param("resolution", params.resolution())
        .param("supportRadius", params.support_radius())
        .param("deltaThreshold", params.delta_threshold())
}

pub fn gen_synthetic(count: usize, seed: u64, dir: &Path) -> Result<String> {
    if count < 2 {
        return Err(CliError::Usage(format!("count must be at least 2, got {count}")));
    }
    create_dir(dir)?;
    let mut manifest = Manifest::new("gen-synthetic").param("count", count).param("seed", seed);
    for (name, mesh) in synthetic_object_set(count, seed) {
        let path = dir.join(format!("{name}.obj"));
        write_mesh(&path, &mesh)?;
        manifest.output(&path);
    }
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(format!("meshes={count} out={}", dir.display()))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ViewRecord {
    name: String,
    view_seed: u64,
    viewpoint: [f64; 3],
    triangles: usize,
    source_triangles: usize,
}

/// View seed of the `i`-th input mesh.
pub fn view_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

pub fn augment(input: &Path, seed: u64, dir: &Path, view_distance: f64) -> Result<String> {
    let meshes = list_meshes(input)?;
    create_dir(dir)?;
    let mut manifest = Manifest::new("augment")
        .param("seed", seed)
        .param("viewDistance", view_distance);
    let mut records = Vec::new();
    for (i, path) in meshes.iter().enumerate() {
        manifest.input(path)?;
        let mesh = load(path)?;
        let mesh = if mesh.normals().is_some() { mesh } else { compute_vertex_normals(&mesh) };
        let view = ViewSpec::random(&mesh, view_seed(seed, i), view_distance)?;
        let pv = generate_partial_view(&mesh, &view)?;
        let name = stem(path);
        let mesh_out = dir.join(format!("{name}.obj"));
        let corr_out = dir.join(format!("{name}.corr.csv"));
        write_mesh(&mesh_out, &pv.mesh)?;
        let mut corr = create_file(&corr_out)?;
        write_correspondence(&pv.correspondence, &mut corr).map_err(io_err(&corr_out))?;
        corr.flush().map_err(io_err(&corr_out))?;
        manifest.output(&mesh_out);
        manifest.output(&corr_out);
        let vp = view.viewpoint;
        records.push(ViewRecord {
            name,
            view_seed: view.seed,
            viewpoint: [vp.x, vp.y, vp.z],
            triangles: pv.mesh.triangle_count(),
            source_triangles: mesh.triangle_count(),
        });
    }
    let manifest = manifest.param("views", &records);
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(format!("views={} out={}", records.len(), dir.display()))
}

pub fn build_index(
    input: &Path,
    file: &Path,
    descriptor: &DescriptorArgs,
    leaf_threshold: usize,
    product_images: bool,
    threads: usize,
) -> Result<String> {
    let params = descriptor.params(1)?;
    let paths = list_meshes(input)?;
    let mut manifest = descriptor_manifest(Manifest::new("build-index"), &params)
        .param("leafThreshold", leaf_threshold)
        .param("productImages", product_images);
    let mut meshes = Vec::with_capacity(paths.len());
    for path in &paths {
        manifest.input(path)?;
        meshes.push((stem(path), load(path)?));
    }
    let started = Instant::now();
    let options = IndexOptions {
        leaf_threshold,
        product_images,
    };
    let collection = build_index_with(&meshes, &params, options)?;
    let seconds = started.elapsed().as_secs_f64();

    let mut w = create_file(file)?;
    serialize_index(collection.tree(), &mut w)?;
    w.flush().map_err(io_err(file))?;
    manifest.output(file);
    manifest.objects = Some(
        collection
            .objects()
            .iter()
            .map(|o| IndexedObject {
                id: o.id,
                name: o.name.clone(),
                vertex_count: o.vertex_count,
            })
            .collect(),
    );
    write_json(&manifest_path_for(file), &manifest)?;
    Ok(format!(
        "descriptors={} objects={} nodes={} build_seconds={seconds:.3} threads={threads}",
        collection.tree().len(),
        collection.objects().len(),
        collection.tree().node_count()
    ))
}

fn param<T: serde::de::DeserializeOwned>(m: &Manifest, key: &str, path: &Path) -> Result<T> {
    let v = m
        .parameters
        .get(key)
        .ok_or_else(|| CliError::Input(format!("{}: missing parameter {key}", path.display())))?;
    serde_json::from_value(v.clone()).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads an index file and its sidecar manifest.
pub fn load_collection(index: &Path) -> Result<IndexedCollection> {
    let sidecar = manifest_path_for(index);
    let manifest: Manifest = read_json(&sidecar)?;
    let params = DescriptorParams::new(
        param(&manifest, "resolution", &sidecar)?,
        param(&manifest, "supportRadius", &sidecar)?,
        1,
    )?;
    let objects = manifest
        .objects
        .ok_or_else(|| CliError::Input(format!("{}: no object list", sidecar.display())))?
        .into_iter()
        .map(|o| ObjectInfo {
            id: o.id,
            name: o.name,
            vertex_count: o.vertex_count,
        })
        .collect();
    let file = fs::File::open(index).map_err(io_err(index))?;
    let tree = deserialize_index(&mut BufReader::new(file))?;
    Ok(IndexedCollection::from_parts(tree, objects, params)?)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RankedObject {
    object_id: u32,
    name: String,
    votes: u32,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct QueryRecord {
    query: String,
    query_sha256: String,
    seed: u64,
    threshold: u32,
    max_matches: usize,
    ranked: Vec<RankedObject>,
    queries_processed: usize,
    terminated: &'static str,
}

pub fn query(index: &Path, mesh_path: &Path, opts: &RetrievalOptions, json_out: &Path, log_out: &Path) -> Result<String> {
    let collection = load_collection(index)?;
    let mesh = load(mesh_path)?;
    let descriptors = query_descriptors(&mesh, collection.params(), 2)?;
    let result = retrieve_descriptors(&collection, &descriptors, opts)?;

    let mut manifest = descriptor_manifest(Manifest::new("query"), &collection.params().with_delta_threshold(2)?)
        .param("voteThreshold", opts.vote_threshold)
        .param("seed", opts.seed)
        .param("maxMatches", opts.max_matches);
    manifest.input(index)?;
    manifest.input(mesh_path)?;
    let record = QueryRecord {
        query: mesh_path.display().to_string(),
        query_sha256: manifest.inputs[1].sha256.clone(),
        seed: opts.seed,
        threshold: opts.vote_threshold,
        max_matches: opts.max_matches,
        ranked: result
            .ranked
            .iter()
            .map(|&(id, votes)| RankedObject {
                object_id: id,
                name: collection.objects()[id as usize].name.clone(),
                votes,
            })
            .collect(),
        queries_processed: result.queries_processed,
        terminated: result.terminated.as_str(),
    };
    write_json(json_out, &record)?;

    let mut log = csv_writer(log_out)?;
    log.write_record(VOTE_LOG_HEADER)?;
    for v in &result.log {
        log.write_record([
            v.query_vertex.to_string(),
            v.object_id.to_string(),
            v.cumulative_votes.to_string(),
        ])?;
    }
    log.flush().map_err(io_err(log_out))?;
    manifest.output(json_out);
    manifest.output(log_out);
    write_json(&manifest_path_for(json_out), &manifest)?;

    let best = result.best().expect("at least one vote");
    Ok(format!(
        "best={best} name={} votes={} queries_processed={} terminated={}",
        collection.objects()[best as usize].name,
        result.ranked[0].1,
        result.queries_processed,
        result.terminated.as_str()
    ))
}

pub fn eval_nn(
    index: &Path,
    queries_dir: &Path,
    mode: EvalMode,
    delta_threshold: u8,
    opts: &RetrievalOptions,
    csv_out: &Path,
) -> Result<Vec<String>> {
    let collection = load_collection(index)?;
    let names: BTreeMap<&str, u32> = collection
        .objects()
        .iter()
        .map(|o| (o.name.as_str(), o.id))
        .collect();
    let objects = match mode {
        EvalMode::Exhaustive => collection.descriptors_by_object(),
        EvalMode::Voting => Vec::new(),
    };
    let mode_name = match mode {
        EvalMode::Voting => "voting",
        EvalMode::Exhaustive => "exhaustive",
    };
    let mut manifest = descriptor_manifest(
        Manifest::new("eval-nn"),
        &collection.params().with_delta_threshold(delta_threshold)?,
    )
    .param("mode", mode_name)
    .param("voteThreshold", opts.vote_threshold)
    .param("seed", opts.seed);
    manifest.input(index)?;

    let mut csv = csv_writer(csv_out)?;
    let mut header = vec!["query".to_string(), "truth".to_string(), "predicted".to_string()];
    header.extend(collection.objects().iter().map(|o| o.name.clone()));
    csv.write_record(&header)?;

    let mut lines = Vec::new();
    let mut correct = 0;
    let paths = list_meshes(queries_dir)?;
    for path in &paths {
        manifest.input(path)?;
        let name = stem(path);
        let truth = *names
            .get(name.as_str())
            .ok_or_else(|| CliError::Input(format!("query {name} does not name an indexed object")))?;
        let descriptors = query_descriptors(&load(path)?, collection.params(), delta_threshold)?;
        let (predicted, row) = match mode {
            EvalMode::Exhaustive => {
                let qs: Vec<_> = descriptors.into_iter().map(|(_, d)| d).collect();
                let sums = object_distance_sums(&objects, &qs)?;
                let best = (0..sums.len())
                    .min_by(|&a, &b| sums[a].total_cmp(&sums[b]).then(a.cmp(&b)))
                    .expect("collection has objects");
                let max = sums.iter().copied().filter(|s| s.is_finite()).fold(0.0, f64::max);
                let row: Vec<f64> = sums.iter().map(|s| if max > 0.0 { s / max } else { 0.0 }).collect();
                (best as u32, row)
            }
            EvalMode::Voting => {
                let result = retrieve_descriptors(&collection, &descriptors, opts)?;
                let total: u32 = result.ranked.iter().map(|r| r.1).sum();
                let mut row = vec![0.0; collection.objects().len()];
                for &(id, votes) in &result.ranked {
                    row[id as usize] = votes as f64 / total.max(1) as f64;
                }
                (result.best().expect("at least one vote"), row)
            }
        };
        correct += usize::from(predicted == truth);
        let mut record = vec![name.clone(), truth.to_string(), predicted.to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        csv.write_record(&record)?;
        lines.push(format!("query={name} truth={truth} predicted={predicted}"));
    }
    csv.flush().map_err(io_err(csv_out))?;
    manifest.output(csv_out);
    write_json(&manifest_path_for(csv_out), &manifest)?;
    lines.push(format!(
        "nn_fraction={:.6} correct={correct} total={}",
        correct as f64 / paths.len() as f64,
        paths.len()
    ));
    Ok(lines)
}

pub fn bench_index(index: &Path, queries: &Path, k: usize, dir: &Path) -> Result<String> {
    let collection = load_collection(index)?;
    let tree = collection.tree();
    let file = fs::File::open(queries).map_err(io_err(queries))?;
    let (_, descriptors) = read_descriptor_dump(&mut BufReader::new(file))?;
    if descriptors.is_empty() {
        return Err(CliError::Input(format!("{}: no query descriptors", queries.display())));
    }
    create_dir(dir)?;
    let mut manifest = Manifest::new("bench-index").param("k", k);
    manifest.input(index)?;
    manifest.input(queries)?;

    struct Row {
        tree_s: f64,
        scan_s: f64,
        nodes: u64,
    }
    let per_query_path = dir.join("per_query.csv");
    let mut per_query = csv_writer(&per_query_path)?;
    per_query.write_record([
        "queryIndex",
        "treeSeconds",
        "scanSeconds",
        "nodesVisited",
        "leavesVisited",
        "entriesEvaluated",
        "indexedDescriptors",
        "nnObjectId",
        "nnVertexIndex",
        "nnDistance",
    ])?;
    let mut rows = Vec::with_capacity(descriptors.len());
    for (i, q) in descriptors.iter().enumerate() {
        let t = Instant::now();
        let (found, stats) = tree.query_with_stats(q, k)?;
        let tree_s = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let scanned = tree.sequential_scan(q, k)?;
        let scan_s = t.elapsed().as_secs_f64();
        if found != scanned {
            return Err(CliError::Input(format!("query {i}: tree and scan disagree")));
        }
        let nn = found[0];
        per_query.write_record([
            i.to_string(),
            tree_s.to_string(),
            scan_s.to_string(),
            stats.nodes_visited.to_string(),
            stats.leaves_visited.to_string(),
            stats.entries_evaluated.to_string(),
            tree.len().to_string(),
            nn.reference.object_id.to_string(),
            nn.reference.vertex_index.to_string(),
            nn.distance.to_string(),
        ])?;
        rows.push(Row {
            tree_s,
            scan_s,
            nodes: stats.nodes_visited,
        });
    }
    per_query.flush().map_err(io_err(&per_query_path))?;

    let hist_path = dir.join("histogram.csv");
    let mut hist = csv_writer(&hist_path)?;
    hist.write_record(["binStartSeconds", "binEndSeconds", "treeQueries", "scanQueries"])?;
    let bin = 0.1;
    let bins = rows
        .iter()
        .map(|r| (r.tree_s.max(r.scan_s) / bin).floor() as usize + 1)
        .max()
        .unwrap_or(1);
    let mut tree_counts = vec![0u64; bins];
    let mut scan_counts = vec![0u64; bins];
    for r in &rows {
        tree_counts[(r.tree_s / bin).floor() as usize] += 1;
        scan_counts[(r.scan_s / bin).floor() as usize] += 1;
    }
    for b in 0..bins {
        hist.write_record([
            format!("{:.1}", b as f64 * bin),
            format!("{:.1}", (b + 1) as f64 * bin),
            tree_counts[b].to_string(),
            scan_counts[b].to_string(),
        ])?;
    }
    hist.flush().map_err(io_err(&hist_path))?;

    // Twenty equal-width buckets of visited-node counts.
    let table_path = dir.join("time_vs_nodes.csv");
    let mut table = csv_writer(&table_path)?;
    table.write_record(["nodesVisitedFrom", "nodesVisitedTo", "queries", "meanTreeSeconds"])?;
    let max_nodes = rows.iter().map(|r| r.nodes).max().unwrap_or(0);
    let width = (max_nodes / 20 + 1).max(1);
    let mut buckets: BTreeMap<u64, (u64, f64)> = BTreeMap::new();
    for r in &rows {
        let e = buckets.entry(r.nodes / width).or_default();
        e.0 += 1;
        e.1 += r.tree_s;
    }
    for (b, (n, sum)) in buckets {
        table.write_record([
            (b * width).to_string(),
            ((b + 1) * width - 1).to_string(),
            n.to_string(),
            (sum / n as f64).to_string(),
        ])?;
    }
    table.flush().map_err(io_err(&table_path))?;

    for p in [&per_query_path, &hist_path, &table_path] {
        manifest.output(p);
    }
    write_json(&dir.join("manifest.json"), &manifest)?;
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    Ok(format!(
        "queries={} median_tree_seconds={:.6} median_scan_seconds={:.6}",
        rows.len(),
        median(rows.iter().map(|r| r.tree_s).collect()),
        median(rows.iter().map(|r| r.scan_s).collect())
    ))
}

/// Writes the bit-popularity grid as PGM (top row first, max value = set
/// size) and as `row,col,count` CSV.
pub fn heatmap(dump: &Path, pgm_out: &Path, csv_out: &Path) -> Result<String> {
    let file = fs::File::open(dump).map_err(io_err(dump))?;
    let (_, descriptors) = read_descriptor_dump(&mut BufReader::new(file))?;
    let grid = bit_popularity(&descriptors)?;
    let n = grid.resolution() as usize;

    let mut pgm = create_file(pgm_out)?;
    let mut text = format!("P2\n{n} {n}\n{}\n", grid.set_size());
    for row in (0..n).rev() {
        let line: Vec<String> = (0..n).map(|c| grid.get(row, c).to_string()).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    pgm.write_all(text.as_bytes()).map_err(io_err(pgm_out))?;
    pgm.flush().map_err(io_err(pgm_out))?;

    let mut csv = csv_writer(csv_out)?;
    csv.write_record(["row", "col", "count"])?;
    for row in 0..n {
        for col in 0..n {
            csv.write_record([row.to_string(), col.to_string(), grid.get(row, col).to_string()])?;
        }
    }
    csv.flush().map_err(io_err(csv_out))?;

    let mut manifest = Manifest::new("heatmap");
    manifest.input(dump)?;
    manifest.output(pgm_out);
    manifest.output(csv_out);
    write_json(&manifest_path_for(pgm_out), &manifest)?;
    Ok(format!("descriptors={} resolution={n}", grid.set_size()))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BitReportSummary {
    descriptors: usize,
    with_undesirable_bits: usize,
    fraction_ratio_below_tenth: f64,
    mean_undesirable_original: f64,
    mean_undesirable_modified: f64,
    mean_overlap_original: f64,
    mean_overlap_modified: f64,
}

pub fn bit_report(complete_dir: &Path, partial_dir: &Path, descriptor: &DescriptorArgs, dir: &Path) -> Result<String> {
    let params = descriptor.params(1)?;
    let complete: BTreeMap<String, PathBuf> = list_meshes(complete_dir)?
        .into_iter()
        .map(|p| (stem(&p), p))
        .collect();
    create_dir(dir)?;
    let mut manifest = descriptor_manifest(Manifest::new("bit-report"), &params);

    let rows_path = dir.join("rows.csv");
    let mut rows_csv = csv_writer(&rows_path)?;
    rows_csv.write_record([
        "object",
        "partialVertex",
        "completeVertex",
        "completeBits",
        "originalBits",
        "modifiedBits",
        "undesirableOriginal",
        "undesirableModified",
        "overlapOriginal",
        "overlapModified",
    ])?;
    let mut all: Vec<BitReportRow> = Vec::new();
    for partial_path in list_meshes(partial_dir)? {
        let name = stem(&partial_path);
        let complete_path = complete
            .get(&name)
            .ok_or_else(|| CliError::Input(format!("no complete mesh for partial view {name}")))?;
        let corr_path = partial_dir.join(format!("{name}.corr.csv"));
        manifest.input(complete_path)?;
        manifest.input(&partial_path)?;
        manifest.input(&corr_path)?;
        let text = fs::read_to_string(&corr_path).map_err(io_err(&corr_path))?;
        let correspondence = read_correspondence(&text)?;
        let complete_mesh = load(complete_path)?;
        let partial_mesh = load(&partial_path)?;
        let rows = undesirable_bit_report(&complete_mesh, &partial_mesh, &correspondence, &params)?;
        for r in &rows {
            rows_csv.write_record([
                name.clone(),
                r.partial_vertex.to_string(),
                r.complete_vertex.to_string(),
                r.complete_bits.to_string(),
                r.original_bits.to_string(),
                r.modified_bits.to_string(),
                r.undesirable_original.to_string(),
                r.undesirable_modified.to_string(),
                r.overlap_original.to_string(),
                r.overlap_modified.to_string(),
            ])?;
        }
        all.extend(rows);
    }
    rows_csv.flush().map_err(io_err(&rows_path))?;

    let ratios: Vec<f64> = all.iter().filter_map(BitReportRow::undesirable_ratio).collect();
    let ratio_hist = histogram(ratios.iter().copied(), 0.01);
    let ratio_path = dir.join("ratio_histogram.csv");
    let mut csv = csv_writer(&ratio_path)?;
    csv.write_record(["binStart", "binEnd", "descriptors"])?;
    for (b, count) in ratio_hist.iter().enumerate() {
        csv.write_record([format!("{:.2}", b as f64 * 0.01), format!("{:.2}", (b + 1) as f64 * 0.01), count.to_string()])?;
    }
    csv.flush().map_err(io_err(&ratio_path))?;

    let overlap_original = histogram(all.iter().map(|r| r.overlap_original), 0.01);
    let overlap_modified = histogram(all.iter().map(|r| r.overlap_modified), 0.01);
    let overlap_path = dir.join("overlap_histogram.csv");
    let mut csv = csv_writer(&overlap_path)?;
    csv.write_record(["binStart", "binEnd", "original", "modified"])?;
    for b in 0..overlap_original.len() {
        csv.write_record([
            format!("{:.2}", b as f64 * 0.01),
            format!("{:.2}", (b + 1) as f64 * 0.01),
            overlap_original[b].to_string(),
            overlap_modified[b].to_string(),
        ])?;
    }
    csv.flush().map_err(io_err(&overlap_path))?;

    let affected: Vec<&BitReportRow> = all.iter().filter(|r| r.undesirable_original > 0).collect();
    let mean = |it: &mut dyn Iterator<Item = f64>, n: usize| it.sum::<f64>() / n.max(1) as f64;
    let summary = BitReportSummary {
        descriptors: all.len(),
        with_undesirable_bits: affected.len(),
        fraction_ratio_below_tenth: ratios.iter().filter(|&&r| r < 0.1).count() as f64 / ratios.len().max(1) as f64,
        mean_undesirable_original: mean(&mut affected.iter().map(|r| r.undesirable_original as f64), affected.len()),
        mean_undesirable_modified: mean(&mut affected.iter().map(|r| r.undesirable_modified as f64), affected.len()),
        mean_overlap_original: mean(&mut all.iter().map(|r| r.overlap_original), all.len()),
        mean_overlap_modified: mean(&mut all.iter().map(|r| r.overlap_modified), all.len()),
    };
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summary)?;
    for p in [&rows_path, &ratio_path, &overlap_path, &summary_path] {
        manifest.output(p);
    }
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(format!(
        "descriptors={} fraction_ratio_below_0_1={:.4} mean_undesirable_original={:.3} mean_undesirable_modified={:.3}",
        summary.descriptors,
        summary.fraction_ratio_below_tenth,
        summary.mean_undesirable_original,
        summary.mean_undesirable_modified
    ))
}

pub fn dump_descriptors(input: &Path, descriptor: &DescriptorArgs, delta_threshold: u8, file: &Path) -> Result<String> {
    let params = descriptor.params(delta_threshold)?;
    let paths = if input.is_dir() { list_meshes(input)? } else { vec![input.to_path_buf()] };
    let mut manifest = descriptor_manifest(Manifest::new("dump-descriptors"), &params);
    let mut descriptors = Vec::new();
    for path in &paths {
        manifest.input(path)?;
        descriptors.extend(descriptors_for_object(&load(path)?, &params).into_iter().map(|(_, d)| d));
    }
    let mut w = create_file(file)?;
    write_descriptor_dump(&mut w, &params, &descriptors)?;
    w.flush().map_err(io_err(file))?;
    manifest.output(file);
    write_json(&manifest_path_for(file), &manifest)?;
    Ok(format!("descriptors={} out={}", descriptors.len(), file.display()))
}
