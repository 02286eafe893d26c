use std::path::{Path, PathBuf};

use super::pipeline::{weight_stats, CategoryWeightStats};
use super::table::{line_chart, num, opt_num, Series, Table};
use crate::denoise::{load_weights, WeightEntry};
use crate::error::{Error, Result};
use crate::synthdata::{load_dataset, Dataset, Split};

/// One image among the highest or lowest weighted of its category.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedImage {
    pub index: usize,
    pub weight: f64,
    pub noisy: bool,
    pub noise_kind: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CategoryDiagnostics {
    pub stats: CategoryWeightStats,
    /// Three highest weights, descending.
    pub top: Vec<RankedImage>,
    /// Three lowest weights, ascending.
    pub bottom: Vec<RankedImage>,
}

/// Joins a weights file with the ground truth of the dataset it was computed on.
pub fn weight_diagnostics(entries: &[WeightEntry], dataset: &Dataset) -> Result<Vec<CategoryDiagnostics>> {
    let view = dataset.view(Split::NovelTrain);
    let truth = dataset.ground_truth(Split::NovelTrain);
    let groups = view.indices_by_category();
    let mut per_row = vec![f64::NAN; view.len()];
    for e in entries {
        let row = groups
            .get(&e.category)
            .and_then(|m| m.get(e.index))
            .ok_or_else(|| Error::Config(format!("weight entry {}/{} not in dataset", e.category, e.index)))?;
        per_row[*row] = e.normalized;
    }
    if per_row.iter().any(|w| w.is_nan()) {
        return Err(Error::Config("weights file does not cover every novel training image".into()));
    }
    let weights = crate::denoise::ViewWeights {
        per_row,
        entries: entries.to_vec(),
        rows: Vec::new(),
    };
    let stats = weight_stats(&weights, &view, &truth);
    let mut out = Vec::new();
    for (s, (_, members)) in stats.into_iter().zip(&groups) {
        let mut ranked: Vec<RankedImage> = members
            .iter()
            .enumerate()
            .map(|(index, &r)| RankedImage {
                index,
                weight: weights.per_row[r],
                noisy: truth[r].is_noisy(view.labels()[r]),
                noise_kind: truth[r].noise_kind.as_str(),
            })
            .collect();
        ranked.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.index.cmp(&b.index)));
        let top = ranked.iter().take(3).cloned().collect();
        let bottom = ranked.iter().rev().take(3).cloned().collect();
        out.push(CategoryDiagnostics { stats: s, top, bottom });
    }
    Ok(out)
}

/// What `cmd_report` wrote.
#[derive(Clone, Debug)]
pub struct Report {
    pub dir: PathBuf,
    /// Every artifact found in the run directory, relative to it.
    pub index: Table,
    /// Per run and category: mean weight of clean and noisy images.
    pub weight_summary: Table,
    /// Top-3 and bottom-3 weighted images per run and category.
    pub weight_ranks: Table,
}

fn walk(dir: &Path, skip: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p == skip {
            continue;
        }
        if p.is_dir() {
            walk(&p, skip, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

fn relative(base: &Path, p: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).to_string_lossy().into_owned()
}

/// The `seed_<s>` directory enclosing `p`, if any.
fn seed_ancestor(p: &Path) -> Option<&Path> {
    p.ancestors()
        .find(|a| a.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("seed_")))
}

fn log_series(files: &[PathBuf], base: &Path, name: &str, column: &str) -> Result<Vec<Series>> {
    let mut series = Vec::new();
    for f in files.iter().filter(|f| f.file_name().and_then(|n| n.to_str()) == Some(name)) {
        let t = Table::load(f)?;
        let epochs = t.numbers("epoch")?;
        let values = t.numbers(column)?;
        let label = relative(base, f.parent().unwrap_or(base));
        series.push(Series {
            name: label,
            points: epochs.into_iter().zip(values).collect(),
        });
    }
    Ok(series)
}

/// Consolidates a run directory into `<run_dir>/report/`: an index of all
/// artifacts, loss curves and weight diagnostics. Needs `metrics.csv`; weights
/// files additionally need the dataset of their seed.
pub fn cmd_report(run_dir: &Path) -> Result<Report> {
    let metrics = run_dir.join("metrics.csv");
    if !metrics.is_file() {
        return Err(Error::MissingFiles {
            dir: run_dir.to_path_buf(),
            missing: vec!["metrics.csv".into()],
        });
    }
    let out = run_dir.join("report");
    let mut files = Vec::new();
    walk(run_dir, &out, &mut files)?;

    let mut missing = Vec::new();
    let mut weight_summary = Table::new(&[
        "run",
        "category",
        "n_clean",
        "n_noisy",
        "clean_weight_mean",
        "noisy_weight_mean",
        "noisy_down_weighted",
    ]);
    let mut weight_ranks = Table::new(&["run", "category", "rank", "position", "index", "normalized_weight", "noisy", "noise_kind"]);
    for w in files.iter().filter(|f| f.file_name().and_then(|n| n.to_str()) == Some("weights.csv")) {
        let Some(dataset_path) = seed_ancestor(w).map(|s| s.join("dataset.csv")).filter(|p| p.is_file()) else {
            missing.push(format!("dataset.csv for {}", relative(run_dir, w)));
            continue;
        };
        let run = relative(run_dir, w.parent().unwrap_or(run_dir));
        let diagnostics = weight_diagnostics(&load_weights(w)?, &load_dataset(&dataset_path)?)?;
        for d in diagnostics {
            let s = d.stats;
            weight_summary.push(vec![
                run.clone(),
                s.category.to_string(),
                s.n_clean.to_string(),
                s.n_noisy.to_string(),
                num(s.clean_mean),
                opt_num(s.noisy_mean),
                s.noisy_down_weighted().to_string(),
            ]);
            for (rank, list) in [("top", &d.top), ("bottom", &d.bottom)] {
                for (k, img) in list.iter().enumerate() {
                    weight_ranks.push(vec![
                        run.clone(),
                        s.category.to_string(),
                        rank.to_string(),
                        (k + 1).to_string(),
                        img.index.to_string(),
                        num(img.weight),
                        img.noisy.to_string(),
                        img.noise_kind.to_string(),
                    ]);
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingFiles {
            dir: run_dir.to_path_buf(),
            missing,
        });
    }

    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let mut index = Table::new(&["path", "kind", "rows"]);
    for f in &files {
        let kind = f.extension().and_then(|e| e.to_str()).unwrap_or("").to_string();
        let rows = if kind == "csv" {
            std::fs::read_to_string(f)
                .map_err(|e| Error::io(f, e))?
                .lines()
                .count()
                .saturating_sub(1)
                .to_string()
        } else {
            String::new()
        };
        index.push(vec![relative(run_dir, f), kind, rows]);
    }
    let mut write = |name: &str, text: String| -> Result<()> {
        let p = out.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        index.push(vec![format!("report/{name}"), name.rsplit('.').next().unwrap_or("").into(), String::new()]);
        Ok(())
    };
    write("weight_summary.csv", weight_summary.to_csv())?;
    write("weight_ranks.csv", weight_ranks.to_csv())?;
    let cls = log_series(&files, run_dir, "classifier_log.csv", "L_full")?;
    if !cls.is_empty() {
        write("classifier_loss.svg", line_chart("Classifier objective", "epoch", "L_full", &cls))?;
    }
    let sim = log_series(&files, run_dir, "simnet_log.csv", "relation_ce")?;
    if !sim.is_empty() {
        write("simnet_loss.svg", line_chart("Similarity network loss", "epoch", "relation CE", &sim))?;
    }
    index.save(&out.join("index.csv"))?;
    Ok(Report {
        dir: out,
        index,
        weight_summary,
        weight_ranks,
    })
}
