use std::path::Path;

use super::{SimilarityMatrix, SimilaritySource};
use crate::error::{Error, Result};
use crate::synthdata::LabeledView;

/// Per-image weights of one category, in row order of its similarity matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleWeights {
    /// `w_i = (1/N) Σ_j (s_ij + s_ji) / 2`, including `j = i`.
    pub raw: Vec<f64>,
    /// `raw / mean(raw)`: unit mean within the category.
    pub normalized: Vec<f64>,
}

pub fn compute_sample_weights(s: &SimilarityMatrix) -> Result<SampleWeights> {
    let n = s.n();
    if n == 0 {
        return Err(Error::Config("no images to weight".into()));
    }
    let inv = 1.0 / n as f64;
    let raw: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| (s.get(i, j) + s.get(j, i)) / 2.0).sum::<f64>() * inv)
        .collect();
    let mean = raw.iter().sum::<f64>() * inv;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::DegenerateWeights);
    }
    let normalized = raw.iter().map(|w| w / mean).collect();
    Ok(SampleWeights { raw, normalized })
}

/// One row of the weights file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightEntry {
    pub category: usize,
    /// Position of the image within its category, in view order.
    pub index: usize,
    pub raw: f64,
    pub normalized: f64,
}

/// Sample weights for every row of a training view.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewWeights {
    /// Normalized weight of each view row.
    pub per_row: Vec<f64>,
    pub entries: Vec<WeightEntry>,
    /// Row indices of each entry in the view.
    pub rows: Vec<usize>,
}

/// Builds `S_c` per category with `source` and turns each into unit-mean weights.
pub fn view_sample_weights<S: SimilaritySource + ?Sized>(source: &S, view: &LabeledView) -> Result<ViewWeights> {
    let mut per_row = vec![0.0; view.len()];
    let mut entries = Vec::with_capacity(view.len());
    let mut rows = Vec::with_capacity(view.len());
    for (category, members) in view.indices_by_category() {
        let s = source.similarity(&view.features().select_rows(&members), &members)?;
        let w = compute_sample_weights(&s)?;
        for (index, &row) in members.iter().enumerate() {
            per_row[row] = w.normalized[index];
            entries.push(WeightEntry {
                category,
                index,
                raw: w.raw[index],
                normalized: w.normalized[index],
            });
            rows.push(row);
        }
    }
    Ok(ViewWeights { per_row, entries, rows })
}

pub const WEIGHTS_HEADER: &str = "category_id,index,raw_weight,normalized_weight";

pub fn write_weights(entries: &[WeightEntry]) -> String {
    let mut out = String::from(WEIGHTS_HEADER);
    out.push('\n');
    for e in entries {
        out.push_str(&format!("{},{},{},{}\n", e.category, e.index, e.raw, e.normalized));
    }
    out
}

pub fn parse_weights(text: &str) -> Result<Vec<WeightEntry>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == WEIGHTS_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `{WEIGHTS_HEADER}`"),
            })
        }
    }
    let mut entries = Vec::new();
    for (k, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: k + 1, msg };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad(format!("expected 4 columns, got {}", cols.len())));
        }
        let int = |s: &str| s.trim().parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
        let float = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        entries.push(WeightEntry {
            category: int(cols[0])?,
            index: int(cols[1])?,
            raw: float(cols[2])?,
            normalized: float(cols[3])?,
        });
    }
    Ok(entries)
}

pub fn save_weights(path: &Path, entries: &[WeightEntry]) -> Result<()> {
    std::fs::write(path, write_weights(entries)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: &Path) -> Result<Vec<WeightEntry>> {
    parse_weights(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// One comma-separated line per matrix row.
pub fn write_similarity(s: &SimilarityMatrix) -> String {
    let mut out = String::new();
    for i in 0..s.n() {
        let row: Vec<String> = (0..s.n()).map(|j| s.get(i, j).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoise::{oracle_similarity, OracleSimilarity, Provenance};
    use crate::numcore::Matrix;

    fn sim(rows: &[&[f64]]) -> SimilarityMatrix {
        let n = rows.len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        SimilarityMatrix::new(Matrix::from_vec(n, n, data).unwrap(), Provenance::SimNet).unwrap()
    }

    #[test]
    fn all_ones_gives_unit_weights() {
        let w = compute_sample_weights(&sim(&[&[1.0; 3], &[1.0; 3], &[1.0; 3]])).unwrap();
        assert_eq!(w.raw, vec![1.0; 3]);
        assert_eq!(w.normalized, vec![1.0; 3]);
    }

    #[test]
    fn identity_gives_unit_weights() {
        let n = 4;
        let s = SimilarityMatrix::new(Matrix::identity(n), Provenance::Oracle).unwrap();
        let w = compute_sample_weights(&s).unwrap();
        assert!(w.raw.iter().all(|&r| (r - 0.25).abs() < 1e-15));
        assert!(w.normalized.iter().all(|&r| (r - 1.0).abs() < 1e-15));
    }

    #[test]
    fn oracle_three_plus_one() {
        let s = oracle_similarity(&[Some(0), Some(0), Some(0), None]);
        let w = compute_sample_weights(&s).unwrap();
        assert_eq!(w.raw, vec![0.75, 0.75, 0.75, 0.25]);
        let expect = [1.2, 1.2, 1.2, 0.4];
        for (a, b) in w.normalized.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn three_by_three_hand_example() {
        let w = compute_sample_weights(&sim(&[&[1.0, 0.8, 0.0], &[0.8, 1.0, 0.2], &[0.0, 0.2, 1.0]])).unwrap();
        let raw = [0.6, 2.0 / 3.0, 0.4];
        let normalized = [1.08, 1.2, 0.72];
        for i in 0..3 {
            assert!((w.raw[i] - raw[i]).abs() < 1e-12);
            assert!((w.normalized[i] - normalized[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn asymmetric_hand_example() {
        let w = compute_sample_weights(&sim(&[&[1.0, 0.0], &[1.0, 1.0]])).unwrap();
        assert_eq!(w.raw, vec![0.75, 0.75]);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let r = compute_sample_weights(&sim(&[&[0.0, 0.0], &[0.0, 0.0]]));
        assert!(matches!(r, Err(Error::DegenerateWeights)));
    }

    #[test]
    fn single_image_weight_is_one() {
        let w = compute_sample_weights(&sim(&[&[0.3]])).unwrap();
        assert_eq!(w.normalized, vec![1.0]);
    }

    #[test]
    fn view_weights_follow_rows() {
        let feats = Matrix::zeros(5, 2);
        let view = LabeledView::new(feats, vec![3, 1, 3, 3, 1]).unwrap();
        let oracle = OracleSimilarity {
            identities: vec![Some(3), Some(1), Some(3), None, Some(1)],
        };
        let vw = view_sample_weights(&oracle, &view).unwrap();
        assert_eq!(vw.rows, vec![1, 4, 0, 2, 3]);
        assert_eq!(vw.per_row[1], 1.0);
        assert!((vw.per_row[3] - 0.6).abs() < 1e-12);
        assert!((vw.per_row[0] - 1.2).abs() < 1e-12);
        assert_eq!(vw.entries[3].category, 3);
        assert_eq!(vw.entries[3].index, 1);
    }

    #[test]
    fn weights_file_round_trip() {
        let entries = vec![
            WeightEntry { category: 2, index: 0, raw: 0.1 + 0.2, normalized: 1.0 / 3.0 },
            WeightEntry { category: 7, index: 5, raw: 1e-300, normalized: 2.5 },
        ];
        let text = write_weights(&entries);
        assert!(text.starts_with("category_id,index,raw_weight,normalized_weight\n"));
        assert_eq!(parse_weights(&text).unwrap(), entries);
        assert!(matches!(parse_weights("x\n"), Err(Error::Parse { line: 1, .. })));
        let bad = format!("{WEIGHTS_HEADER}\n1,2,3\n");
        assert!(matches!(parse_weights(&bad), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn similarity_dump_rows() {
        let text = write_similarity(&sim(&[&[1.0, 0.25], &[0.5, 1.0]]));
        assert_eq!(text, "1,0.25\n0.5,1\n");
    }
}
