//! Measure-theoretic entropy of one-dimensional linear cellular automata over `Z_m`.
//!
//! A linear cellular automaton applies `(Tx)_n = Σ_{i=-l}^{r} λ_i x_{n+i} mod m` to every
//! coordinate of a doubly infinite sequence. For a bipermutative rule (both `λ_{-l}` and
//! `λ_r` units mod `m`) and a Markov measure `μ_{πP}`, the entropy of `T` is
//!
//! ```text
//! h(T) = -(l + r) Σ_{i,j} π_i p_ij log p_ij
//! ```
//!
//! This crate computes that closed form and, independently, the exact entropies of the
//! finite joins `∨_{k<n} T^{-k} α` by enumerating every word on the join's dependency
//! window. Both routes should agree; the difference `H_n - H_{n-1}` is constant from
//! `n = 2` for the default window partition.
//!
//! ```
//! use lca_entropy::{entropy, measure::MarkovMeasure, rule::LocalRule};
//!
//! let rule = LocalRule::rule90();
//! let mu = MarkovMeasure::uniform(2).unwrap();
//! let base = entropy::PartitionSpec::default_for(&rule);
//! let seq = entropy::entropy_sequence(&rule, &mu, &base, 4, 1 << 20).unwrap();
//! let h = entropy::closed_form_entropy(&rule, &mu, Default::default()).unwrap();
//! assert!((seq.last_diff().unwrap() - h).abs() < 1e-12);
//! ```

pub mod ca;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod measure;
pub mod rule;

pub use ca::Word;
pub use entropy::{EntropySequence, PartitionSpec};
pub use error::{Error, Result};
pub use measure::{LogBase, MarkovMeasure, StochasticMatrix};
pub use rule::{LaurentPoly, LocalRule, PermutativityClass};

/// Default bound on the number of words any single enumeration may visit.
pub const DEFAULT_CAP: u128 = 1 << 24;
