//! Discrete laboratory for pinned dot-product sets.
//!
//! Everything operates on finite dyadic-lattice point clouds standing in for
//! compact sets in `R^n`. The library provides:
//!
//! * [`pointcloud`] — Cantor-type generators, products, slab constructions,
//!   and the normative JSON cloud format;
//! * [`geometry`] — orthogonal and radial projections, pinned dot-product
//!   sets, hyperplane families, sphere curves, and the exact scaling identity
//!   between dot-product sets and projections;
//! * [`dimension`] — multiscale covering counts, box-counting slope fits, and
//!   the measure / interior proxies;
//! * [`exceptional`] — direction-sphere scans classifying exceptional
//!   projections and checking the classical upper bounds;
//! * [`pins`] — pin-selection pipelines (translation-invariant,
//!   translation-dependent, restricted to a non-degenerate curve);
//! * [`trees`] — tree dot-product configurations and their measure
//!   estimates, with the parallel-slab witness construction.
//!
//! Exact rational arithmetic is used wherever an identity can be checked
//! bit-exactly; floating point only enters through unit directions and slope
//! fits.

pub mod dimension;
pub mod error;
pub mod exact;
pub mod exceptional;
pub mod geometry;
pub mod pins;
pub mod pointcloud;
pub mod sphere;
pub mod trees;

pub use error::{DotlabError, Result};
pub use exact::{Point, Rational};
pub use pointcloud::{CantorSpec, PointCloud};
