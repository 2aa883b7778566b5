//! Partial 3D object retrieval with QUICCI binary descriptors.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: meshes, oriented points, circle/triangle intersection.
//! - [`descriptor`]: QUICCI bit images (original and boundary-filtered).
//! - [`distance`]: Hamming, Weighted Hamming and the subtree lower bound.
//! - [`index`]: the Dissimilarity Tree, exact k-NN search and its file format.
//! - [`pipeline`]: offline indexing of complete objects and vote-based retrieval.
//! - [`datagen`]: synthetic objects, partial views and bit-level reports.

pub mod error;
pub mod descriptor;
pub mod distance;
pub mod geometry;
pub mod index;
pub mod pipeline;
pub mod datagen;

pub use error::{Error, Result};
