//! Level-set image segmentation driven by distribution tracking.
//!
//! The contour evolves so that the empirical densities of photometric
//! features inside it, and of the curvature along it, match densities
//! learned from training masks. Edge attraction enters through a geodesic
//! term solved implicitly.
//!
//! Modules, bottom-up:
//!
//! * [`grid`]: raster fields, finite differences, smoothing, PGM/PPM I/O
//! * [`levelset`]: masks, signed distance functions, fast marching
//! * [`density`]: kernel density estimates, model learning, Bhattacharyya
//! * [`curvature`]: level-set curvature and tangential pre-smoothing
//! * [`forces`]: photometric, curvature-prior and geodesic terms
//! * [`solver`]: the iteration driver
//! * [`metrics`]: boundary and area agreement scores
//! * [`datagen`]: synthetic shapes and corruption
//! * [`cli`]: command-line subcommands

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aos;
pub mod cli;
pub mod curvature;
pub mod datagen;
pub mod density;
pub mod error;
pub mod forces;
pub mod grid;
pub mod levelset;
pub mod metrics;
pub mod par;
pub mod solver;

pub use density::{Density1D, Grid1D, ShapeModel};
pub use error::{Error, Result};
pub use grid::{ScalarField, VectorField};
pub use levelset::{BinaryMask, LevelSet};
