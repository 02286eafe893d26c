use rand::seq::index::sample;
use rand::Rng;

use super::generate::sample_image;
use super::{Dataset, NoiseKind, Split};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Fraction of each novel category's training images that get corrupted.
    pub ratio: f64,
    /// Share of corrupted images that are label flips; the rest are outliers.
    pub flip_fraction: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            ratio: 0.3,
            flip_fraction: 0.5,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.ratio) {
            return Err(Error::Config(format!("noise ratio {} must be in [0,1)", self.ratio)));
        }
        if !(0.0..=1.0).contains(&self.flip_fraction) {
            return Err(Error::Config(format!(
                "flip fraction {} must be in [0,1]",
                self.flip_fraction
            )));
        }
        Ok(())
    }
}

/// Corrupts exactly `round(ratio·N)` novel-train images per category.
///
/// A flipped image keeps its label `c` but its feature is redrawn from the next
/// novel category (circular order over novel ids). An outlier's feature is drawn
/// uniformly from the inflated prototype bounding box. Base and test splits are
/// left untouched.
pub fn inject_web_noise(dataset: &Dataset, noise: &NoiseSpec) -> Result<Dataset> {
    noise.validate()?;
    let novel = dataset.categories(Split::NovelTrain);
    if novel.len() < 2 && noise.flip_fraction > 0.0 && noise.ratio > 0.0 {
        return Err(Error::Config(
            "label-flip noise needs at least two novel categories".into(),
        ));
    }
    let mut out = dataset.clone();
    if noise.ratio == 0.0 {
        return Ok(out);
    }
    let geometry = dataset.geometry().ok_or_else(|| {
        Error::Config("noise injection needs generator geometry (dataset was not generated in-process)".into())
    })?;
    let bounds = geometry.outlier_box();
    let mut rng = substream(noise.seed, Stream::Noise);

    for (pos, &c) in novel.iter().enumerate() {
        let members: Vec<usize> = out
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.split == Split::NovelTrain && r.label == c)
            .map(|(i, _)| i)
            .collect();
        let n = members.len();
        let n_noisy = (noise.ratio * n as f64).round() as usize;
        let n_flip = (noise.flip_fraction * n_noisy as f64).round() as usize;
        let chosen = sample(&mut rng, n, n_noisy);
        let target = novel[(pos + 1) % novel.len()];
        for (k, local) in chosen.into_iter().enumerate() {
            let rec = &mut out.records[members[local]];
            if k < n_flip {
                rec.feature = sample_image(&mut rng, &geometry.prototypes[target], geometry.intra_category_std);
                rec.true_label = target;
                rec.noise_kind = NoiseKind::Flip;
            } else {
                rec.feature = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
                rec.true_label = c;
                rec.noise_kind = NoiseKind::Outlier;
            }
        }
    }
    Ok(out)
}
