//! Exact tools for subspace Ramsey colorings, sum-free sets and
//! density-increment arguments over `F_p^n`.
//!
//! The crate is organised bottom-up:
//!
//! * [`group`] and [`subspace`]: the ambient group `F_p^n`, canonical
//!   (RREF) subspaces, cosets, enumeration and uniform sampling.
//! * [`set`]: dense subsets with exact densities, sumsets, sum-free and
//!   solution-free predicates, and the explicit extremal constructions.
//! * [`spectral`]: exact difference convolutions through integer
//!   Walsh–Hadamard / character transforms, popular-difference sets.
//! * [`search`]: subspace finders (avoidance, containment) with
//!   budgets that separate "proved none" from "gave up".
//! * [`increment`]: the sparsity/expansion dichotomy engine.
//! * [`ramsey`] and [`extremal`]: geometric Ramsey numbers, reductions
//!   to sum-free sets, bound calculators, and the extremal function `f(n, α)`.
//! * [`io`]: the JSON artifact formats shared with the CLI.
//!
//! Group elements are plain `u64` indices: the digit vector
//! `(x_0, …, x_{n-1})` is encoded as `Σ x_i p^{n-1-i}`, so coordinate 0 is
//! the most significant digit and integer order equals lexicographic
//! digit order. For `p = 2` the index is the bit mask and addition is XOR.

pub mod coloring;
pub mod error;
pub mod extremal;
pub mod group;
pub mod increment;
pub mod io;
pub mod ramsey;
pub mod rational;
pub mod search;
pub mod set;
pub mod spectral;
pub mod subspace;

pub use coloring::{Coloring, ColoringDomain};
pub use error::{Error, Result};
pub use group::{ell, gaussian_binomial, GroupSpec, Lvalue, Point};
pub use rational::Rational;
pub use search::{Outcome, SearchBudget};
pub use set::GroupSet;
pub use subspace::{Coset, InducedCoordinates, Subspace};
