// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod datagen;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod mtx;
pub mod rng;
pub mod samplers;
pub mod solvers;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/solving.md")]
    struct Solving;
    #[doc = include_str!("../../../book/src/sketches.md")]
    struct Sketches;
    #[doc = include_str!("../../../book/src/rates.md")]
    struct Rates;
    #[doc = include_str!("../../../book/src/problems.md")]
    struct Problems;
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    struct Benchmarks;
    #[doc = include_str!("../../../book/src/verification.md")]
    struct Verification;
}
