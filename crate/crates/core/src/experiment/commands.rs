//! Study commands: each writes `config.txt`, a per-run `metrics.csv`, an
//! aggregated `summary.csv` and study-specific tables under `config.out`.

use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::pipeline::{prepare_data, run_rows, transfer_metrics, Prepared, RunOutcome};
use super::studies::{self, runs_table, scale_charts, summarize, ABLATION_ROWS};
use super::table::{num, Table};
use crate::classifier::write_training_log;
use crate::denoise::write_weights;
use crate::error::{Error, Result};
use crate::simnet::write_simnet_log;
use crate::synthdata::{load_dataset, save_dataset};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

fn start(config: &ExperimentConfig) -> Result<()> {
    config.validate()?;
    create_dir(&config.out)?;
    config.save(&config.out.join("config.txt"))
}

/// Writes `seed_<s>/dataset.csv` for every seed.
pub fn cmd_gen_data(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    start(config)?;
    let mut paths = Vec::new();
    for &seed in &config.seeds {
        let dir = seed_dir(&config.out, seed);
        create_dir(&dir)?;
        let path = dir.join("dataset.csv");
        save_dataset(&prepare_data(config, seed)?.dataset, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Loads `seed_<s>/dataset.csv` when present, otherwise generates and saves it.
fn dataset_for(config: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    let dir = seed_dir(&config.out, seed);
    let path = dir.join("dataset.csv");
    if path.exists() {
        return Ok(Prepared::from_dataset(load_dataset(&path)?));
    }
    create_dir(&dir)?;
    let data = prepare_data(config, seed)?;
    save_dataset(&data.dataset, &path)?;
    Ok(data)
}

/// Logs, weights and checkpoints of one run.
fn write_artifacts(dir: &Path, run: &RunOutcome) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join("classifier_log.csv"), &write_training_log(&run.classifier.log))?;
    run.classifier.model.to_checkpoint().save(dir.join("classifier.ckpt"))?;
    if let Some(model) = &run.simnet {
        write(&dir.join("simnet_log.csv"), &write_simnet_log(&run.simnet_log))?;
        model.to_checkpoint().save(dir.join("simnet.ckpt"))?;
    }
    if let Some(w) = &run.weights {
        write(&dir.join("weights.csv"), &write_weights(&w.entries))?;
    }
    Ok(())
}

const RUN_EXTRA: [&str; 2] = ["base_test_f1", "novel_test_f1"];

/// One pipeline per seed with the configured toggles.
pub fn cmd_run(config: &ExperimentConfig) -> Result<Table> {
    start(config)?;
    let mut metrics = runs_table(&[]);
    metrics.header.extend(RUN_EXTRA.iter().map(|s| s.to_string()));
    for &seed in &config.seeds {
        let data = dataset_for(config, seed)?;
        let run = run_rows(config, &data, seed, &[config.toggles()])?.remove(0);
        let mut row = studies::run_row(&run);
        match &run.simnet {
            Some(m) => {
                let (b, n) = transfer_metrics(config, m, &data, seed)?;
                row.extend([num(b.similar.f1), num(n.similar.f1)]);
            }
            None => row.extend([String::new(), String::new()]),
        }
        metrics.push(row);
        write_artifacts(&seed_dir(&config.out, seed), &run)?;
    }
    finish(config, &metrics, &["method"], &["accuracy", "base_test_f1", "novel_test_f1"])?;
    Ok(metrics)
}

fn finish(config: &ExperimentConfig, metrics: &Table, keys: &[&str], values: &[&str]) -> Result<Table> {
    metrics.save(&config.out.join("metrics.csv"))?;
    let summary = summarize(metrics, keys, values)?;
    summary.save(&config.out.join("summary.csv"))?;
    Ok(summary)
}

/// All seven module combinations per seed; artifacts under `seed_<s>/<row>/`.
pub fn cmd_ablation(config: &ExperimentConfig) -> Result<Table> {
    start(config)?;
    let mut metrics = runs_table(&[]);
    for &seed in &config.seeds {
        let data = dataset_for(config, seed)?;
        for run in run_rows(config, &data, seed, &ABLATION_ROWS)? {
            metrics.push(studies::run_row(&run));
            write_artifacts(&seed_dir(&config.out, seed).join(run.toggles.label()), &run)?;
        }
    }
    finish(config, &metrics, &["method"], &["accuracy", "noisy_weight_mean", "clean_weight_mean"])
}

/// Pair metrics per source (`metrics.csv`, `summary.csv`) and classifier
/// accuracy per source and similarity type (`sources.csv`, `sources_summary.csv`).
pub fn cmd_transfer_study(config: &ExperimentConfig) -> Result<studies::TransferStudy> {
    start(config)?;
    let study = studies::transfer_study(config)?;
    finish(
        config,
        &study.pairs,
        &["source", "split"],
        &["similar_precision", "similar_recall", "similar_f1", "dissimilar_f1"],
    )?;
    study.sources.save(&config.out.join("sources.csv"))?;
    summarize(&study.sources, &["source", "similarity"], &["accuracy"])?.save(&config.out.join("sources_summary.csv"))?;
    Ok(study)
}

pub fn cmd_scale_study(config: &ExperimentConfig) -> Result<Table> {
    start(config)?;
    let table = studies::scale_study(config)?;
    let summary = finish(
        config,
        &table,
        &["base_categories", "images_per_category"],
        &["base_f1", "novel_f1", "accuracy"],
    )?;
    for (name, svg) in scale_charts(&summary)? {
        write(&config.out.join(name), &svg)?;
    }
    Ok(summary)
}

/// Accuracy per ratio and method, plus `gaps.csv` with the SimTrans − Cls gap per ratio.
pub fn cmd_noise_study(config: &ExperimentConfig) -> Result<Table> {
    start(config)?;
    let table = studies::noise_study(config)?;
    finish(config, &table, &["noise_ratio", "method"], &["accuracy"])?;
    let gaps = studies::noise_gaps(&table)?;
    gaps.save(&config.out.join("gaps.csv"))?;
    Ok(gaps)
}
