//! Equilateral sets in finite-dimensional normed spaces.
//!
//! The crate builds pairwise-equidistant point sets for several classes of
//! norms (permutation-invariant norms, Musielak-Orlicz spaces, hyperplane
//! subspaces of `ℓ∞ⁿ`), solves the fixed-point systems that produce
//! equilateral sets in nearby norms, and certifies every output by direct
//! evaluation of all pairwise distances.
//!
//! ```
//! use eqk::{construct, norms::NormSpec, verify};
//!
//! let spec = NormSpec::lp(3, 2.0).unwrap();
//! let built = construct::perm_invariant_equilateral(&spec).unwrap();
//! assert_eq!(built.set.len(), 4);
//! let cert = verify::certify_equilateral(&built.set, &spec, 1e-12).unwrap();
//! assert!(cert.passed());
//! ```

pub mod construct;
pub mod error;
pub mod json;
pub mod norms;
pub mod oracle;
pub mod perturbed;
pub mod sampling;
pub mod solve1d;
pub mod verify;
pub mod young;

pub use error::{Error, Result};
