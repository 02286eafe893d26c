use std::collections::BTreeMap;

use super::config::{ExperimentConfig, Toggles};
use super::pipeline::{
    classify_with, prepare_data, run_rows, transfer_metrics, weight_stats, CategoryWeightStats, Prepared, RunOutcome,
};
use super::table::{line_chart, mean_std, num, opt_num, Series, Table};
use crate::denoise::{EmbeddingSimilarity, SimilaritySource};
use crate::error::Result;
use crate::rng::{substream, Stream};
use crate::simnet::{
    pretrain_backbone, random_guess_metrics, train_simnet, BaselineKind, PairMetrics, SimNetConfig, SimNetModel,
};
use crate::synthdata::LabeledView;

const fn toggles(w: bool, r: bool, ad: bool) -> Toggles {
    Toggles {
        use_weights: w,
        use_reg: r,
        use_adversarial: ad,
    }
}

/// The seven module combinations of the ablation table, in row order.
pub const ABLATION_ROWS: [Toggles; 7] = [
    toggles(false, false, false),
    toggles(true, false, false),
    toggles(false, true, false),
    toggles(true, true, false),
    toggles(true, false, true),
    toggles(false, true, true),
    toggles(true, true, true),
];

pub const RUN_HEADER: [&str; 11] = [
    "config_hash",
    "seed",
    "method",
    "use_weights",
    "use_reg",
    "use_adversarial",
    "accuracy",
    "clean_weight_mean",
    "noisy_weight_mean",
    "categories_down_weighted",
    "categories_with_noise",
];

/// Mean weight of clean and of noisy images over all categories, and how many
/// categories weigh their noisy images below their clean ones.
pub fn pooled_weight_stats(stats: &[CategoryWeightStats]) -> (Option<f64>, Option<f64>, usize, usize) {
    let (mut clean, mut nc, mut noisy, mut nn) = (0.0, 0, 0.0, 0);
    for s in stats {
        if s.n_clean > 0 {
            clean += s.clean_mean * s.n_clean as f64;
            nc += s.n_clean;
        }
        if let Some(m) = s.noisy_mean {
            noisy += m * s.n_noisy as f64;
            nn += s.n_noisy;
        }
    }
    let down = stats.iter().filter(|s| s.noisy_down_weighted()).count();
    let with_noise = stats.iter().filter(|s| s.n_noisy > 0).count();
    (
        (nc > 0).then(|| clean / nc as f64),
        (nn > 0).then(|| noisy / nn as f64),
        down,
        with_noise,
    )
}

pub fn run_row(run: &RunOutcome) -> Vec<String> {
    let (clean, noisy, down, with_noise) = pooled_weight_stats(&run.weight_stats);
    let t = run.toggles;
    vec![
        run.config_hash.clone(),
        run.seed.to_string(),
        t.label(),
        t.use_weights.to_string(),
        t.use_reg.to_string(),
        t.use_adversarial.to_string(),
        num(run.accuracy),
        opt_num(clean),
        opt_num(noisy),
        down.to_string(),
        with_noise.to_string(),
    ]
}

pub fn runs_table(runs: &[RunOutcome]) -> Table {
    let mut t = Table::new(&RUN_HEADER);
    for r in runs {
        t.push(run_row(r));
    }
    t
}

/// Mean and sample std of `values` per group of `keys`, groups in first-seen order.
/// Output columns: the keys, `n`, then `<value>_mean`, `<value>_std` per value column.
pub fn summarize(table: &Table, keys: &[&str], values: &[&str]) -> Result<Table> {
    let key_idx: Vec<usize> = keys
        .iter()
        .map(|k| table.column(k).ok_or_else(|| crate::Error::Config(format!("no column `{k}`"))))
        .collect::<Result<_>>()?;
    let val_idx: Vec<usize> = values
        .iter()
        .map(|k| table.column(k).ok_or_else(|| crate::Error::Config(format!("no column `{k}`"))))
        .collect::<Result<_>>()?;
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut groups: BTreeMap<Vec<String>, Vec<Vec<f64>>> = BTreeMap::new();
    for row in &table.rows {
        let key: Vec<String> = key_idx.iter().map(|&i| row[i].clone()).collect();
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            vec![Vec::new(); val_idx.len()]
        });
        for (slot, &i) in entry.iter_mut().zip(&val_idx) {
            if let Ok(v) = row[i].parse::<f64>() {
                slot.push(v);
            }
        }
    }
    let mut header: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
    header.push("n".into());
    for v in values {
        header.push(format!("{v}_mean"));
        header.push(format!("{v}_std"));
    }
    let mut out = Table {
        header,
        rows: Vec::new(),
    };
    for key in order {
        let cols = &groups[&key];
        let mut row = key.clone();
        row.push(cols.first().map_or(0, Vec::len).to_string());
        for c in cols {
            let (m, s) = mean_std(c);
            row.push(if c.is_empty() { String::new() } else { num(m) });
            row.push(if c.is_empty() { String::new() } else { num(s) });
        }
        out.push(row);
    }
    Ok(out)
}

/// Runs every ablation row for every seed. The returned runs are seed-major.
pub fn ablation(config: &ExperimentConfig) -> Result<Vec<RunOutcome>> {
    let mut runs = Vec::new();
    for &seed in &config.seeds {
        let data = prepare_data(config, seed)?;
        runs.extend(run_rows(config, &data, seed, &ABLATION_ROWS)?);
    }
    Ok(runs)
}

/// Mean accuracy per method label.
pub fn mean_accuracy_by_method(runs: &[RunOutcome]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in runs {
        acc.entry(r.toggles.label()).or_default().push(r.accuracy);
    }
    acc.into_iter().map(|(k, v)| (k, mean_std(&v).0)).collect()
}

/// Training data of a similarity source.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// Noisy novel training set, web labels taken at face value.
    Novel,
    NovelBase,
    /// Clean base training set.
    Base,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Novel, Source::NovelBase, Source::Base];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Novel => "Novel",
            Source::NovelBase => "Novel+Base",
            Source::Base => "Base",
        }
    }

    pub fn view(self, data: &Prepared) -> Result<LabeledView> {
        match self {
            Source::Novel => Ok(data.novel_train.clone()),
            Source::NovelBase => data.novel_train.concat(&data.base_train),
            Source::Base => Ok(data.base_train.clone()),
        }
    }
}

pub const PAIR_HEADER: [&str; 10] = [
    "config_hash",
    "seed",
    "source",
    "split",
    "similar_precision",
    "similar_recall",
    "similar_f1",
    "dissimilar_precision",
    "dissimilar_recall",
    "dissimilar_f1",
];

pub const SOURCE_HEADER: [&str; 7] = [
    "config_hash",
    "seed",
    "source",
    "similarity",
    "accuracy",
    "categories_down_weighted",
    "categories_with_noise",
];

fn pair_row(hash: &str, seed: u64, source: &str, split: &str, m: &PairMetrics) -> Vec<String> {
    vec![
        hash.to_string(),
        seed.to_string(),
        source.to_string(),
        split.to_string(),
        num(m.similar.precision),
        num(m.similar.recall),
        num(m.similar.f1),
        num(m.dissimilar.precision),
        num(m.dissimilar.recall),
        num(m.dissimilar.f1),
    ]
}

/// Pair metrics per source and split, and classifier accuracy per source and similarity type.
#[derive(Clone, Debug, Default)]
pub struct TransferStudy {
    /// Analytic random guess plus each source's similarity network on base and novel test.
    pub pairs: Table,
    /// Classifier with weights and regularization from each source × similarity type, plus the oracle.
    pub sources: Table,
}

/// Similarity network trained on `source`, always without the adversarial term
/// so that sources differ only in their training data.
pub fn train_on_source(config: &ExperimentConfig, data: &Prepared, source: Source, seed: u64) -> Result<SimNetModel> {
    let simnet = SimNetConfig {
        adversarial: false,
        ..config.simnet.clone()
    };
    Ok(train_simnet(&source.view(data)?, Some(&data.novel_train), &simnet, seed)?.model)
}

/// Backbone trained as a plain classifier on `source`, for distance baselines.
pub fn feature_extractor(config: &ExperimentConfig, data: &Prepared, source: Source, seed: u64) -> Result<EmbeddingSimilarity> {
    let arch = config.simnet.arch(data.dataset.dim());
    let init = SimNetModel::new(&arch, &mut substream(seed, Stream::SimnetInit))?.backbone;
    Ok(EmbeddingSimilarity {
        backbone: pretrain_backbone(init, &source.view(data)?, &config.simnet, seed)?,
        kind: BaselineKind::Euclidean,
    })
}

pub fn transfer_study(config: &ExperimentConfig) -> Result<TransferStudy> {
    let cfg = config.with_toggles(toggles(true, true, false));
    let hash = cfg.hash();
    let mut out = TransferStudy {
        pairs: Table::new(&PAIR_HEADER),
        sources: Table::new(&SOURCE_HEADER),
    };
    for &seed in &config.seeds {
        let data = prepare_data(&cfg, seed)?;
        let shape = super::pipeline::common_shape(&cfg, &data.base_test, &data.novel_test)?;
        let rand = random_guess_metrics(shape.similar_fraction_off_diagonal());
        for split in ["base_test", "novel_test"] {
            out.pairs.push(pair_row(&hash, seed, "Rand", split, &rand));
        }
        let mut classify = |source: &str, similarity: &str, s: &dyn SimilaritySource| -> Result<()> {
            let (_, weights, accuracy) = classify_with(&cfg, &data, Some(s), seed)?;
            let stats = weights
                .as_ref()
                .map(|w| weight_stats(w, &data.novel_train, &data.novel_truth))
                .unwrap_or_default();
            let (_, _, down, with_noise) = pooled_weight_stats(&stats);
            out.sources.push(vec![
                hash.clone(),
                seed.to_string(),
                source.to_string(),
                similarity.to_string(),
                num(accuracy),
                down.to_string(),
                with_noise.to_string(),
            ]);
            Ok(())
        };
        for source in Source::ALL {
            let mut extractor = feature_extractor(&cfg, &data, source, seed)?;
            for (kind, name) in [(BaselineKind::Euclidean, "Euclidean"), (BaselineKind::Cosine, "Cosine")] {
                extractor.kind = kind;
                classify(source.as_str(), name, &extractor)?;
            }
            let simnet = train_on_source(&cfg, &data, source, seed)?;
            classify(source.as_str(), "SimNet", &simnet)?;
            let (b, n) = transfer_metrics(&cfg, &simnet, &data, seed)?;
            out.pairs.push(pair_row(&hash, seed, source.as_str(), "base_test", &b));
            out.pairs.push(pair_row(&hash, seed, source.as_str(), "novel_test", &n));
        }
        classify("Oracle", "Oracle", &data.oracle())?;
    }
    Ok(out)
}

pub const SCALE_HEADER: [&str; 7] = [
    "config_hash",
    "seed",
    "base_categories",
    "images_per_category",
    "base_f1",
    "novel_f1",
    "accuracy",
];

/// Similarity network and classifier (weights + regularization) trained with
/// the first `C` base categories and the first `N` images of each, over the grid.
pub fn scale_study(config: &ExperimentConfig) -> Result<Table> {
    let cfg = config.with_toggles(toggles(true, true, config.use_adversarial));
    let hash = cfg.hash();
    let mut table = Table::new(&SCALE_HEADER);
    for &seed in &config.seeds {
        let full = prepare_data(&cfg, seed)?;
        for &c in &config.scale_categories {
            for &n in &config.scale_images {
                let keep: Vec<usize> = (0..c.min(cfg.dataset.n_base_categories)).collect();
                let data = Prepared::from_dataset(full.dataset.restrict_base(&keep, Some(n)));
                let run = run_rows(&cfg, &data, seed, &[cfg.toggles()])?.remove(0);
                let model = run.simnet.as_ref().expect("weights need a similarity network");
                let (b, nv) = transfer_metrics(&cfg, model, &data, seed)?;
                table.push(vec![
                    hash.clone(),
                    seed.to_string(),
                    c.to_string(),
                    n.to_string(),
                    num(b.similar.f1),
                    num(nv.similar.f1),
                    num(run.accuracy),
                ]);
            }
        }
    }
    Ok(table)
}

/// One curve per value of `series_key`, plotting the mean of `value` against `x_key`.
pub fn summary_curves(summary: &Table, series_key: &str, x_key: &str, value: &str) -> Result<Vec<Series>> {
    let (sk, xk) = (
        summary.column(series_key).ok_or_else(|| crate::Error::Config(format!("no column `{series_key}`")))?,
        summary.column(x_key).ok_or_else(|| crate::Error::Config(format!("no column `{x_key}`")))?,
    );
    let vk = summary
        .column(&format!("{value}_mean"))
        .ok_or_else(|| crate::Error::Config(format!("no column `{value}_mean`")))?;
    let mut series: Vec<Series> = Vec::new();
    for row in &summary.rows {
        let name = format!("{series_key}={}", row[sk]);
        let (Ok(x), Ok(y)) = (row[xk].parse::<f64>(), row[vk].parse::<f64>()) else {
            continue;
        };
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((x, y)),
            None => series.push(Series {
                name,
                points: vec![(x, y)],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

/// The scale study's two line charts: accuracy vs images per category, and novel F1 vs category count.
pub fn scale_charts(summary: &Table) -> Result<[(String, String); 2]> {
    let acc = summary_curves(summary, "base_categories", "images_per_category", "accuracy")?;
    let f1 = summary_curves(summary, "images_per_category", "base_categories", "novel_f1")?;
    Ok([
        (
            "scale_accuracy.svg".into(),
            line_chart("Classifier accuracy", "images per base category", "accuracy (%)", &acc),
        ),
        (
            "scale_novel_f1.svg".into(),
            line_chart("Similar-pair F1 on novel test", "base categories", "F1 (%)", &f1),
        ),
    ])
}

pub const NOISE_HEADER: [&str; 5] = ["config_hash", "seed", "noise_ratio", "method", "accuracy"];

/// `Cls` against full SimTrans (weights + regularization, adversarial as configured) per noise ratio.
pub fn noise_study(config: &ExperimentConfig) -> Result<Table> {
    let rows = [Toggles::ALL_OFF, toggles(true, true, config.use_adversarial)];
    let mut table = Table::new(&NOISE_HEADER);
    for &ratio in &config.noise_ratios {
        let mut cfg = config.clone();
        cfg.noise.ratio = ratio;
        cfg.validate()?;
        for &seed in &config.seeds {
            let data = prepare_data(&cfg, seed)?;
            for run in run_rows(&cfg, &data, seed, &rows)? {
                let method = if run.toggles.needs_simnet() { "SimTrans" } else { "Cls" };
                table.push(vec![
                    run.config_hash.clone(),
                    seed.to_string(),
                    num(ratio),
                    method.to_string(),
                    num(run.accuracy),
                ]);
            }
        }
    }
    Ok(table)
}

/// Per noise ratio: mean accuracy of both methods and the SimTrans − Cls gap.
pub fn noise_gaps(table: &Table) -> Result<Table> {
    let summary = summarize(table, &["noise_ratio", "method"], &["accuracy"])?;
    let mut by_ratio: Vec<(String, Option<f64>, Option<f64>)> = Vec::new();
    for row in &summary.rows {
        let v = row[3].parse::<f64>().ok();
        let slot = match by_ratio.iter_mut().position(|r| r.0 == row[0]) {
            Some(i) => &mut by_ratio[i],
            None => {
                by_ratio.push((row[0].clone(), None, None));
                by_ratio.last_mut().expect("just pushed")
            }
        };
        if row[1] == "Cls" {
            slot.1 = v;
        } else {
            slot.2 = v;
        }
    }
    let mut out = Table::new(&["noise_ratio", "cls_mean", "simtrans_mean", "gap"]);
    for (ratio, cls, sim) in by_ratio {
        let gap = cls.zip(sim).map(|(c, s)| s - c);
        out.push(vec![ratio, opt_num(cls), opt_num(sim), opt_num(gap)]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_rows_are_distinct() {
        let labels: Vec<String> = ABLATION_ROWS.iter().map(Toggles::label).collect();
        assert_eq!(labels, ["Cls", "W", "R", "W+R", "Ad+W", "Ad+R", "Ad+W+R"]);
    }

    #[test]
    fn summarize_groups_in_order() {
        let mut t = Table::new(&["m", "x"]);
        for (m, x) in [("b", "1"), ("a", "2"), ("b", "3"), ("a", "")] {
            t.push(vec![m.into(), x.into()]);
        }
        let s = summarize(&t, &["m"], &["x"]).unwrap();
        assert_eq!(s.header, ["m", "n", "x_mean", "x_std"]);
        assert_eq!(s.rows[0], ["b", "2", "2", &num(2f64.sqrt())]);
        assert_eq!(s.rows[1], ["a", "1", "2", "0"]);
    }

    #[test]
    fn gaps_per_ratio() {
        let mut t = Table::new(&NOISE_HEADER);
        for (r, m, a) in [("0.1", "Cls", "90"), ("0.1", "SimTrans", "95"), ("0.4", "Cls", "80"), ("0.4", "SimTrans", "79")] {
            t.push(vec!["h".into(), "0".into(), r.into(), m.into(), a.into()]);
        }
        let g = noise_gaps(&t).unwrap();
        assert_eq!(g.numbers("gap").unwrap(), vec![5.0, -1.0]);
    }

    #[test]
    fn pooled_stats_weight_by_count() {
        let stats = [
            CategoryWeightStats { category: 0, clean_mean: 1.2, noisy_mean: Some(0.4), n_clean: 3, n_noisy: 1 },
            CategoryWeightStats { category: 1, clean_mean: 1.0, noisy_mean: None, n_clean: 4, n_noisy: 0 },
        ];
        let (clean, noisy, down, with_noise) = pooled_weight_stats(&stats);
        assert!((clean.unwrap() - 7.6 / 7.0).abs() < 1e-15);
        assert_eq!(noisy, Some(0.4));
        assert_eq!((down, with_noise), (1, 1));
    }
}
