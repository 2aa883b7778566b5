//! Synthetic objects, partial views and the undesirable-bit report.

mod report;
mod shapes;
mod view;

pub use report::{histogram, undesirable_bit_report, BitReportRow};
pub use shapes::{box_mesh, synthetic_object_set, uv_sphere};
pub use view::{
    generate_partial_view, is_occluded, read_correspondence, write_correspondence, PartialView, ViewSpec, DEFAULT_VIEW_DISTANCE,
    CORRESPONDENCE_HEADER,
};
