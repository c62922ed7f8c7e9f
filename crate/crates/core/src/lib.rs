//! Dimension exponents of finite point clouds in `ℓ_p`.
//!
//! The crate estimates the box-counting dimension, brackets the thickness
//! exponent, bounds the dual-thickness machinery (`σ_α` families), and builds
//! explicit linear embeddings with Hölder-continuous inverses: weighted
//! block maps into Hilbert space and randomly sampled maps into `ℝᵏ`.
//!
//! Sequence-space and covering primitives are generic over [`Scalar`]
//! (`f32`/`f64`); the linear-algebra heavy parts run in `f64`. The aliases at
//! the crate root name the common concrete instantiations.

pub mod auerbach;
pub mod cloud;
pub mod covering;
pub mod distance;
pub mod embeddings;
pub mod ensemble;
pub mod io;
pub mod lp_examples;
pub mod report;
mod linalg;
pub mod error;
pub mod scalar;
pub mod sequence_space;
pub mod simplex;
pub mod thickness;

pub use cloud::PointCloud;
pub use covering::{
    box_dim_estimate, difference_set, exact_min_cover, greedy_net, packing_number, Bracket,
    DimensionEstimate, EpsilonLadder,
};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use sequence_space::{
    apply_functional, kuratowski_embed, lp_norm, norming_functional, DistanceMatrix, Exponent,
    Functional, SparseVector,
};

pub type Vector = SparseVector<f64>;
pub type Vector32 = SparseVector<f32>;
pub type Cloud = PointCloud<f64>;
pub type Cloud32 = PointCloud<f32>;
pub type DualVector = Functional<f64>;
