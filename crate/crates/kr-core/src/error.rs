use thiserror::Error;

#[derive(Debug, Error)]
pub enum KrError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no even continued fraction: {0}/{1} has both numerator and denominator odd")]
    OddFraction(i64, i64),
    #[error("not bipartite: {0}")]
    NotBipartite(String),
    #[error("diagram inconsistent: {0}")]
    InconsistentDiagram(String),
    #[error("diagram has no marked edge")]
    NoMarkedEdge,
    #[error("{0} is not a root of the potential")]
    NotARoot(String),
    #[error("diagram too large: {0} slots exceeds the limit {1}")]
    TooLarge(usize, usize),
    #[error("odd quantum drop {0} encountered (conventions bug)")]
    OddDrop(i64),
    #[error("unexpected E-infinity shape: {0}")]
    UnexpectedEinf(String),
    #[error("inconsistent invariant extraction: {0}")]
    Inconsistent(String),
    #[error("illegal cobordism site: {0}")]
    IllegalSite(String),
    #[error("pivot entry is not invertible")]
    NotInvertible,
    #[error("boundary mismatch when gluing")]
    BoundaryMismatch,
}

impl KrError {
    /// Stable CLI exit code per category.
    pub fn exit_code(&self) -> i32 {
        match self {
            KrError::Parse(_) => 2,
            KrError::OddFraction(..) => 3,
            KrError::NotBipartite(_) => 4,
            KrError::NotARoot(_) => 5,
            KrError::TooLarge(..) => 6,
            KrError::OddDrop(_) => 7,
            KrError::UnexpectedEinf(_) => 8,
            KrError::InconsistentDiagram(_) => 9,
            KrError::NoMarkedEdge => 10,
            KrError::Inconsistent(_) => 11,
            KrError::IllegalSite(_) => 12,
            KrError::NotInvertible => 13,
            KrError::BoundaryMismatch => 14,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            KrError::Parse(_) => "ParseError",
            KrError::OddFraction(..) => "OddFraction",
            KrError::NotBipartite(_) => "NotBipartiteCertificate",
            KrError::NotARoot(_) => "NotARoot",
            KrError::TooLarge(..) => "TooLarge",
            KrError::OddDrop(_) => "OddDrop",
            KrError::UnexpectedEinf(_) => "UnexpectedEinf",
            KrError::InconsistentDiagram(_) => "InconsistentDiagram",
            KrError::NoMarkedEdge => "NoMarkedEdge",
            KrError::Inconsistent(_) => "Inconsistent",
            KrError::IllegalSite(_) => "IllegalSite",
            KrError::NotInvertible => "NotInvertible",
            KrError::BoundaryMismatch => "BoundaryMismatch",
        }
    }
}
