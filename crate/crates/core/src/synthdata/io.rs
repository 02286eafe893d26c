use std::fmt::Write as _;
use std::path::Path;

use super::{Dataset, Record};
use crate::error::{Error, Result};

/// Serializes a dataset: `dim=<D>` then one
/// `split,category_id,true_category_id,noise_kind,<D floats>` line per record.
pub fn write_dataset(dataset: &Dataset) -> String {
    let mut s = format!("dim={}\n", dataset.dim());
    for r in dataset.records() {
        write!(s, "{},{},{},{}", r.split, r.label, r.true_label, r.noise_kind.as_str()).unwrap();
        for v in &r.feature {
            write!(s, ",{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let dim: usize = header
        .strip_prefix("dim=")
        .and_then(|d| d.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("expected `dim=<D>`, got {header:?}"),
        })?;
    let mut records = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 + dim {
            return Err(err(format!("expected {} columns, found {}", 4 + dim, cols.len())));
        }
        let split = cols[0].parse().map_err(err)?;
        let label = cols[1]
            .parse()
            .map_err(|_| err(format!("bad category id {:?}", cols[1])))?;
        let true_label = cols[2]
            .parse()
            .map_err(|_| err(format!("bad true category id {:?}", cols[2])))?;
        let noise_kind = cols[3].parse().map_err(err)?;
        let feature = cols[4..]
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("bad feature value {c:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        records.push(Record {
            feature,
            label,
            true_label,
            split,
            noise_kind,
        });
    }
    Dataset::new(dim, records)
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_dataset(dataset)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}
