//! Per-vertex comparison of partial-view descriptors against the matching
//! descriptors of the complete object.

use rayon::prelude::*;

use crate::descriptor::{counts_to_descriptor, BitDescriptor, DescriptorGenerator, DescriptorParams};
use crate::error::{Error, Result};
use crate::geometry::{compute_vertex_normals, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitReportRow {
    pub partial_vertex: u32,
    pub complete_vertex: u32,
    /// Bits set in the complete object's descriptor.
    pub complete_bits: u32,
    pub original_bits: u32,
    pub modified_bits: u32,
    /// Bits set in the original query descriptor but not in the complete one.
    pub undesirable_original: u32,
    pub undesirable_modified: u32,
    pub overlap_original: f64,
    pub overlap_modified: f64,
}

impl BitReportRow {
    /// Modified over original undesirable count; `None` when the original
    /// query descriptor has no undesirable bits.
    pub fn undesirable_ratio(&self) -> Option<f64> {
        (self.undesirable_original > 0)
            .then(|| self.undesirable_modified as f64 / self.undesirable_original as f64)
    }
}

fn with_normals(mesh: &TriangleMesh) -> std::borrow::Cow<'_, TriangleMesh> {
    if mesh.normals().is_some() {
        std::borrow::Cow::Borrowed(mesh)
    } else {
        std::borrow::Cow::Owned(compute_vertex_normals(mesh))
    }
}

/// One row per partial vertex with a normal. The complete descriptor uses
/// the original rule; the query side is computed with both rules.
pub fn undesirable_bit_report(
    complete: &TriangleMesh,
    partial: &TriangleMesh,
    correspondence: &[u32],
    params: &DescriptorParams,
) -> Result<Vec<BitReportRow>> {
    if correspondence.len() != partial.vertex_count() {
        return Err(Error::MissingCorrespondence(format!(
            "{} entries for {} partial vertices",
            correspondence.len(),
            partial.vertex_count()
        )));
    }
    if let Some(&bad) = correspondence.iter().find(|&&c| c as usize >= complete.vertex_count()) {
        return Err(Error::MissingCorrespondence(format!(
            "complete vertex {bad} out of range ({} vertices)",
            complete.vertex_count()
        )));
    }
    let complete = with_normals(complete);
    let partial = with_normals(partial);
    let complete_gen = DescriptorGenerator::new(&complete, *params);
    let partial_gen = DescriptorGenerator::new(&partial, *params);

    let rows = (0..partial.vertex_count())
        .into_par_iter()
        .filter_map(|v| {
            let c = correspondence[v];
            let query_point = partial.oriented_point(v)?;
            let complete_point = complete.oriented_point(c as usize)?;
            let reference = counts_to_descriptor(&complete_gen.counts(&complete_point), 1);
            let counts = partial_gen.counts(&query_point);
            let original = counts_to_descriptor(&counts, 1);
            let modified = counts_to_descriptor(&counts, 2);
            Some(row(v as u32, c, &reference, &original, &modified))
        })
        .collect();
    Ok(rows)
}

fn row(
    partial_vertex: u32,
    complete_vertex: u32,
    reference: &BitDescriptor,
    original: &BitDescriptor,
    modified: &BitDescriptor,
) -> BitReportRow {
    let undesirable = |q: &BitDescriptor| -> u32 {
        q.words()
            .iter()
            .zip(reference.words())
            .map(|(a, b)| (a & !b).count_ones())
            .sum()
    };
    let complete_bits = reference.count_ones();
    let overlap = |q: &BitDescriptor| -> f64 {
        let shared: u32 = q
            .words()
            .iter()
            .zip(reference.words())
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        shared as f64 / complete_bits.max(1) as f64
    };
    BitReportRow {
        partial_vertex,
        complete_vertex,
        complete_bits,
        original_bits: original.count_ones(),
        modified_bits: modified.count_ones(),
        undesirable_original: undesirable(original),
        undesirable_modified: undesirable(modified),
        overlap_original: overlap(original),
        overlap_modified: overlap(modified),
    }
}

/// Counts of `values` in bins of `bin_width` over `[0, 1]`. Values outside
/// the range are clamped into the first or last bin; exactly 1.0 lands in
/// the last bin.
pub fn histogram(values: impl IntoIterator<Item = f64>, bin_width: f64) -> Vec<u64> {
    let bins = (1.0 / bin_width).round().max(1.0) as usize;
    let mut out = vec![0u64; bins];
    for v in values {
        let b = ((v / bin_width).floor().max(0.0) as usize).min(bins - 1);
        out[b] += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::shapes::uv_sphere;
    use crate::datagen::view::{generate_partial_view, ViewSpec};
    use crate::geometry::Point;

    fn params() -> DescriptorParams {
        DescriptorParams::new(16, 6.0, 1).unwrap()
    }

    #[test]
    fn identical_view_has_no_undesirable_bits() {
        let mesh = uv_sphere(Point::origin(), 10.0, 12, 16);
        let identity: Vec<u32> = (0..mesh.vertex_count() as u32).collect();
        let rows = undesirable_bit_report(&mesh, &mesh, &identity, &params()).unwrap();
        assert_eq!(rows.len(), mesh.vertex_count());
        for r in rows {
            assert_eq!(r.undesirable_original, 0);
            assert_eq!(r.undesirable_modified, 0);
            assert_eq!(r.overlap_original, 1.0);
            assert_eq!(r.undesirable_ratio(), None);
        }
    }

    #[test]
    fn cut_reduces_undesirable_bits() {
        let (_, mesh) = crate::datagen::synthetic_object_set(1, 3).remove(0);
        let mesh = compute_vertex_normals(&mesh);
        let view = ViewSpec::new(&mesh, Point::new(3000., 500., 200.), 0).unwrap();
        let pv = generate_partial_view(&mesh, &view).unwrap();
        let params = DescriptorParams::new(16, 100.0, 1).unwrap();
        let rows = undesirable_bit_report(&mesh, &pv.mesh, &pv.correspondence, &params).unwrap();
        let affected: Vec<_> = rows.iter().filter(|r| r.undesirable_original > 0).collect();
        assert!(!affected.is_empty());
        let orig: u32 = affected.iter().map(|r| r.undesirable_original).sum();
        let modi: u32 = affected.iter().map(|r| r.undesirable_modified).sum();
        assert!(modi * 5 < orig, "modified {modi} vs original {orig}");
        for r in &rows {
            assert!(r.modified_bits <= r.original_bits);
            assert!(r.undesirable_modified <= r.undesirable_original);
        }
    }

    #[test]
    fn missing_correspondence_is_an_error() {
        let mesh = uv_sphere(Point::origin(), 10.0, 6, 8);
        assert!(undesirable_bit_report(&mesh, &mesh, &[0, 1], &params()).is_err());
        let mut bad: Vec<u32> = (0..mesh.vertex_count() as u32).collect();
        bad[0] = 10_000;
        assert!(undesirable_bit_report(&mesh, &mesh, &bad, &params()).is_err());
    }

    #[test]
    fn histogram_binning() {
        let h = histogram([0.0, 0.005, 0.01, 0.5, 0.999, 1.0, 1.5, -0.1], 0.01);
        assert_eq!(h.len(), 100);
        assert_eq!(h[0], 3);
        assert_eq!(h[1], 1);
        assert_eq!(h[50], 1);
        assert_eq!(h[99], 3);
        assert_eq!(h.iter().sum::<u64>(), 8);
    }
}
