//! Laboratory for the combinatorics and spectra of sparse non-Hermitian
//! random matrices.
//!
//! The library builds sparse Bernoulli-masked random matrices, encodes them
//! as two-relation bipartite digraphs, and exposes the machinery needed to
//! probe their invertibility at desk scale:
//!
//! * [`sampling`] — seeded matrix generation, shifts `sigma A - z Id`, and
//!   the hybrid frozen-Gaussian comparison matrix;
//! * [`graph`] — the associated digraph (`->` edges mark nonzero entries,
//!   `<-` edges mark entries of modulus at least `1/alpha`) and its
//!   structural event reports: expansion, degree tails, l1 tails;
//! * [`types_chains`] — vertex-type layers `T_{K,l}`, zig-zag chains, and
//!   self-balancing chain censuses;
//! * [`compression`] — admissible row-gluing maps, compressed matrices and
//!   graphs, phi-chains;
//! * [`shells`] — layered witness structures extracted from almost-null
//!   vectors, with growth checks;
//! * [`spectra`] — singular values, hermitization, Stieltjes transforms, log
//!   potentials, column distances;
//! * [`restricted_inv`] — spread orthonormal bases and randomized restricted
//!   invertibility trials;
//! * [`experiments`] — the Monte Carlo harness behind the `lab` binary.
//!
//! Determinism is a design contract: every randomized routine takes an
//! explicit seed, per-trial streams are derived with
//! [`sampling::derive_trial_seed`], and reports are reproducible
//! byte-for-byte at any thread count.

pub mod compression;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod restricted_inv;
pub mod sampling;
pub mod shells;
pub mod spectra;
pub mod textio;
pub mod types_chains;

pub use error::{LabError, Result};
