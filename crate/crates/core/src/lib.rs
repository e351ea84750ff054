//! Perron–Frobenius theory of completely positive maps, certified paths
//! between maps, and parent Hamiltonians of translation-invariant matrix
//! product states.
//!
//! Conventions used throughout:
//!
//! * `vec` stacks columns, so `vec(X)[i + D·j] = X[(i, j)]`.
//! * The transfer matrix of `X ↦ Σ A_i X A_i†` is `Σ conj(A_i) ⊗ A_i`.
//! * Product basis states `|i_1 … i_N⟩` are indexed with `i_1` most significant.

pub mod channel;
pub mod cli;
pub mod constructions;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mps;
pub mod parent_hamiltonian;
pub mod paths;
pub mod perron_frobenius;
pub mod selftest;
pub mod spectrum;

pub use channel::{ChoiMatrix, KrausMap};
pub use error::{Error, Result};
pub use perron_frobenius::{Certificate, Classifier, FrobeniusForm, MultiplicityIndex, Tolerances};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/channels.md")]
    pub struct Channels;
    #[doc = include_str!("../../../book/src/primitivity.md")]
    pub struct Primitivity;
    #[doc = include_str!("../../../book/src/frobenius.md")]
    pub struct Frobenius;
    #[doc = include_str!("../../../book/src/paths.md")]
    pub struct Paths;
    #[doc = include_str!("../../../book/src/mps.md")]
    pub struct Mps;
    #[doc = include_str!("../../../book/src/hamiltonians.md")]
    pub struct Hamiltonians;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
