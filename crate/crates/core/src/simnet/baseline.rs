use std::fmt;
use std::str::FromStr;

use crate::denoise::{Provenance, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Offset keeping the reciprocal distance finite for identical embeddings.
pub const EUCLIDEAN_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    /// `1 / (‖e_i − e_j‖ + ε)`
    Euclidean,
    /// `max(0, cos(e_i, e_j))`
    Cosine,
}

impl BaselineKind {
    pub fn provenance(self) -> Provenance {
        match self {
            BaselineKind::Euclidean => Provenance::Euclidean,
            BaselineKind::Cosine => Provenance::Cosine,
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.provenance().as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(BaselineKind::Euclidean),
            "cosine" => Ok(BaselineKind::Cosine),
            _ => Err(Error::Config(format!("unknown baseline similarity {s:?}"))),
        }
    }
}

/// Hand-crafted similarity between embedding rows.
pub fn baseline_similarity(embeddings: &Matrix, kind: BaselineKind) -> Result<SimilarityMatrix> {
    let n = embeddings.rows();
    if n == 0 {
        return Err(Error::Config("baseline similarity needs at least one embedding".into()));
    }
    let mut s = Matrix::zeros(n, n);
    match kind {
        BaselineKind::Euclidean => {
            for i in 0..n {
                for j in 0..n {
                    let d2: f64 = embeddings
                        .row(i)
                        .iter()
                        .zip(embeddings.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    s[(i, j)] = 1.0 / (d2.sqrt() + EUCLIDEAN_EPS);
                }
            }
        }
        BaselineKind::Cosine => {
            let norms: Vec<f64> = (0..n)
                .map(|i| embeddings.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect();
            if let Some(i) = norms.iter().position(|&v| v == 0.0) {
                return Err(Error::Config(format!("embedding {i} has zero norm; cosine undefined")));
            }
            for i in 0..n {
                for j in 0..n {
                    let dot: f64 = embeddings.row(i).iter().zip(embeddings.row(j)).map(|(a, b)| a * b).sum();
                    s[(i, j)] = (dot / (norms[i] * norms[j])).clamp(0.0, 1.0);
                }
            }
        }
    }
    SimilarityMatrix::new(s, kind.provenance())
}
