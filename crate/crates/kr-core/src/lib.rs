//! Exact-arithmetic sl(n) link cohomology for matched (bipartite) link
//! diagrams: filtered complexes over the Frobenius algebra k[x]/∂w, all
//! spectral-sequence pages, and the derived slice-genus/concordance
//! invariants.

pub mod brute;
pub mod cobordism;
pub mod complex;
pub mod diagram;
pub mod error;
pub mod field;
pub mod invariants;
pub mod linalg;
pub mod parse;
pub mod poly;
pub mod potential;
pub mod spectral;

pub use error::KrError;
