//! Compressed products of matrix product operators and matrix product states.
//!
//! [`src::src_multiply`] implements successive randomized compression.
//! [`baselines`] holds the reference methods it is compared against, and
//! [`estimators`] the error estimates behind adaptive bond selection.
//!
//! ```
//! use mpomps::random::{random_mpo, random_mps};
//! use mpomps::src::{src_multiply, TruncationPolicy};
//!
//! let h = random_mpo(10, 2, 3, -0.5, 1)?;
//! let psi = random_mps(10, 2, 4, -0.5, 2)?;
//! let eta = src_multiply(&h, &psi, &TruncationPolicy::FixedBond { chi_bar: 8 }, 0)?.into_mps();
//! assert!(eta.max_bond() <= 8);
//! # Ok::<(), mpomps::Error>(())
//! ```

pub mod baselines;
pub mod error;
pub mod estimators;
pub mod flops;
pub mod io;
pub mod linalg;
pub mod mpo;
pub mod mps;
pub mod random;
pub mod sketch;
pub mod src;
pub mod tensor;

pub type C64 = num_complex::Complex64;

pub use error::{Error, Result};
pub use linalg::Truncation;
pub use mpo::Mpo;
pub use mps::{Canonical, Direction, Mps};
pub use tensor::DenseTensor;

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states-and-operators.md")]
    mod states_and_operators {}
    #[doc = include_str!("../../../book/src/sketching.md")]
    mod sketching {}
    #[doc = include_str!("../../../book/src/src.md")]
    mod src {}
    #[doc = include_str!("../../../book/src/adaptive.md")]
    mod adaptive {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/file-format.md")]
    mod file_format {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
