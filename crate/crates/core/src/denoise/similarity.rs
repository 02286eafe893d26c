use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Where a similarity matrix came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    SimNet,
    Euclidean,
    Cosine,
    Oracle,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::SimNet => "simnet",
            Provenance::Euclidean => "euclidean",
            Provenance::Cosine => "cosine",
            Provenance::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simnet" => Ok(Provenance::SimNet),
            "euclidean" => Ok(Provenance::Euclidean),
            "cosine" => Ok(Provenance::Cosine),
            "oracle" => Ok(Provenance::Oracle),
            _ => Err(Error::Config(format!("unknown similarity type {s:?}"))),
        }
    }
}

/// Square matrix of non-negative pairwise similarities.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    entries: Matrix,
    provenance: Provenance,
}

impl SimilarityMatrix {
    pub fn new(entries: Matrix, provenance: Provenance) -> Result<Self> {
        if entries.rows() != entries.cols() {
            return Err(Error::shape("SimilarityMatrix::new", "square matrix", format!("{:?}", entries.shape())));
        }
        if !entries.is_finite() {
            return Err(Error::Numeric("SimilarityMatrix::new"));
        }
        if entries.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::Config("similarity entries must be non-negative".into()));
        }
        Ok(SimilarityMatrix { entries, provenance })
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn transpose(&self) -> SimilarityMatrix {
        SimilarityMatrix {
            entries: self.entries.transpose(),
            provenance: self.provenance,
        }
    }

    pub fn into_matrix(self) -> Matrix {
        self.entries
    }
}
