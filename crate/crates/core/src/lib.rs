//! Fast k-means seeding by rejection sampling.
//!
//! The seeder draws proposals from a cheap norm-based distribution, corrects
//! them toward the D² distribution with a rejection step, and evaluates the
//! acceptance ratio against an approximate nearest-center index. Alongside it
//! live the exact k-means++ and uniform baselines, and the analysis tools used
//! to study how clustering cost scales with `k` on low-dimensional data
//! (power-law fits, intrinsic-dimension estimation, geometric parameters).
//!
//! Data-parallel loops (distance updates, assignment, nearest-neighbor scans,
//! Monte-Carlo batches) run on rayon when the `parallel` feature is enabled and
//! fall back to plain iteration otherwise. See [`par`].

// argument guards are written `!(x > 0.0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod ann;
pub mod dataset;
pub mod error;
pub mod par;
pub mod rng;
pub mod sampler_tree;
pub mod seeding;
pub mod validate;

pub(crate) mod linalg;

pub use error::{Error, Result};
