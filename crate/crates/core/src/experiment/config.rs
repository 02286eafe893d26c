use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::classifier::{ClassifierConfig, Mode};
use crate::error::{Error, Result};
use crate::simnet::SimNetConfig;
use crate::synthdata::{DatasetSpec, NoiseSpec};

/// Which module combination a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Toggles {
    pub use_weights: bool,
    pub use_reg: bool,
    pub use_adversarial: bool,
}

impl Toggles {
    pub const ALL_OFF: Toggles = Toggles {
        use_weights: false,
        use_reg: false,
        use_adversarial: false,
    };
    pub const ALL_ON: Toggles = Toggles {
        use_weights: true,
        use_reg: true,
        use_adversarial: true,
    };

    /// Whether the pipeline needs a similarity network at all.
    pub fn needs_simnet(&self) -> bool {
        self.use_weights || self.use_reg
    }

    /// Row name in the ablation table: `Cls`, `W`, `R`, `W+R`, `Ad+W`, ...
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.use_adversarial && self.needs_simnet() {
            parts.push("Ad");
        }
        if self.use_weights {
            parts.push("W");
        }
        if self.use_reg {
            parts.push("R");
        }
        if parts.is_empty() {
            "Cls".to_string()
        } else {
            parts.join("+")
        }
    }
}

/// Everything a study needs; serializes to flat `key = value` text.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub noise: NoiseSpec,
    pub simnet: SimNetConfig,
    pub classifier: ClassifierConfig,
    pub use_adversarial: bool,
    /// Pair-level evaluation batches per split.
    pub eval_batches: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// Base category counts and images per base category for the scale study.
    pub scale_categories: Vec<usize>,
    pub scale_images: Vec<usize>,
    pub noise_ratios: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSpec::default(),
            noise: NoiseSpec::default(),
            simnet: SimNetConfig::default(),
            classifier: ClassifierConfig::default(),
            use_adversarial: true,
            eval_batches: 50,
            seeds: vec![0, 1, 2, 3, 4],
            out: PathBuf::from("out"),
            scale_categories: vec![5, 10, 15],
            scale_images: vec![5, 15, 30],
            noise_ratios: vec![0.1, 0.2, 0.3, 0.4],
        }
    }
}

fn list<T: Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

impl ExperimentConfig {
    pub fn toggles(&self) -> Toggles {
        Toggles {
            use_weights: self.classifier.use_weights,
            use_reg: self.classifier.use_reg,
            use_adversarial: self.use_adversarial,
        }
    }

    pub fn with_toggles(&self, t: Toggles) -> ExperimentConfig {
        let mut c = self.clone();
        c.classifier.use_weights = t.use_weights;
        c.classifier.use_reg = t.use_reg;
        c.use_adversarial = t.use_adversarial;
        c
    }

    /// Every key with its current value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let d = &self.dataset;
        let s = &self.simnet;
        let c = &self.classifier;
        vec![
            ("n_base_categories", d.n_base_categories.to_string()),
            ("n_novel_categories", d.n_novel_categories.to_string()),
            ("dim", d.dim.to_string()),
            ("base_train_per_category", d.per_category.base_train.to_string()),
            ("base_test_per_category", d.per_category.base_test.to_string()),
            ("novel_train_per_category", d.per_category.novel_train.to_string()),
            ("novel_test_per_category", d.per_category.novel_test.to_string()),
            ("n_superclusters", d.n_superclusters.to_string()),
            ("intra_category_std", d.intra_category_std.to_string()),
            ("inter_category_std", d.inter_category_std.to_string()),
            ("supercluster_std", d.supercluster_std.to_string()),
            ("noise_ratio", self.noise.ratio.to_string()),
            ("flip_fraction", self.noise.flip_fraction.to_string()),
            ("simnet_hidden", s.hidden.to_string()),
            ("simnet_embed", s.embed.to_string()),
            ("relation_dim", s.relation.to_string()),
            ("disc_hidden", s.disc_hidden.to_string()),
            ("batch_categories", s.batch_categories.to_string()),
            ("batch_size", s.batch_size.to_string()),
            ("simnet_lr", s.sgd.learning_rate.to_string()),
            ("simnet_momentum", s.sgd.momentum.to_string()),
            ("simnet_weight_decay", s.sgd.weight_decay.to_string()),
            ("simnet_epochs", s.epochs.to_string()),
            ("beta", s.beta.to_string()),
            ("pretrain_backbone", s.pretrain_backbone.to_string()),
            ("pretrain_epochs", s.pretrain_epochs.to_string()),
            ("pretrain_lr", s.pretrain_sgd.learning_rate.to_string()),
            ("pretrain_batch_size", s.pretrain_batch_size.to_string()),
            ("classifier_hidden", c.hidden.to_string()),
            ("classifier_embed", c.embed.to_string()),
            ("alpha", c.alpha.to_string()),
            ("classifier_lr", c.sgd.learning_rate.to_string()),
            ("classifier_momentum", c.sgd.momentum.to_string()),
            ("classifier_weight_decay", c.sgd.weight_decay.to_string()),
            ("classifier_batch_size", c.batch_size.to_string()),
            ("classifier_epochs", c.epochs.to_string()),
            ("mode", c.mode.to_string()),
            ("use_weights", c.use_weights.to_string()),
            ("use_reg", c.use_reg.to_string()),
            ("use_adversarial", self.use_adversarial.to_string()),
            ("eval_batches", self.eval_batches.to_string()),
            ("seeds", list(&self.seeds)),
            ("out", self.out.display().to_string()),
            ("scale_categories", list(&self.scale_categories)),
            ("scale_images", list(&self.scale_images)),
            ("noise_ratios", list(&self.noise_ratios)),
        ]
    }

    /// Sets one key. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let d = &mut self.dataset;
        let s = &mut self.simnet;
        let c = &mut self.classifier;
        match key {
            "n_base_categories" => d.n_base_categories = parse(key, v)?,
            "n_novel_categories" => d.n_novel_categories = parse(key, v)?,
            "dim" => d.dim = parse(key, v)?,
            "base_train_per_category" => d.per_category.base_train = parse(key, v)?,
            "base_test_per_category" => d.per_category.base_test = parse(key, v)?,
            "novel_train_per_category" => d.per_category.novel_train = parse(key, v)?,
            "novel_test_per_category" => d.per_category.novel_test = parse(key, v)?,
            "n_superclusters" => d.n_superclusters = parse(key, v)?,
            "intra_category_std" => d.intra_category_std = parse(key, v)?,
            "inter_category_std" => d.inter_category_std = parse(key, v)?,
            "supercluster_std" => d.supercluster_std = parse(key, v)?,
            "noise_ratio" => self.noise.ratio = parse(key, v)?,
            "flip_fraction" => self.noise.flip_fraction = parse(key, v)?,
            "simnet_hidden" => s.hidden = parse(key, v)?,
            "simnet_embed" => s.embed = parse(key, v)?,
            "relation_dim" => s.relation = parse(key, v)?,
            "disc_hidden" => s.disc_hidden = parse(key, v)?,
            "batch_categories" => s.batch_categories = parse(key, v)?,
            "batch_size" => s.batch_size = parse(key, v)?,
            "simnet_lr" => s.sgd.learning_rate = parse(key, v)?,
            "simnet_momentum" => s.sgd.momentum = parse(key, v)?,
            "simnet_weight_decay" => s.sgd.weight_decay = parse(key, v)?,
            "simnet_epochs" => s.epochs = parse(key, v)?,
            "beta" => s.beta = parse(key, v)?,
            "pretrain_backbone" => s.pretrain_backbone = parse(key, v)?,
            "pretrain_epochs" => s.pretrain_epochs = parse(key, v)?,
            "pretrain_lr" => s.pretrain_sgd.learning_rate = parse(key, v)?,
            "pretrain_batch_size" => s.pretrain_batch_size = parse(key, v)?,
            "classifier_hidden" => c.hidden = parse(key, v)?,
            "classifier_embed" => c.embed = parse(key, v)?,
            "alpha" => c.alpha = parse(key, v)?,
            "classifier_lr" => c.sgd.learning_rate = parse(key, v)?,
            "classifier_momentum" => c.sgd.momentum = parse(key, v)?,
            "classifier_weight_decay" => c.sgd.weight_decay = parse(key, v)?,
            "classifier_batch_size" => c.batch_size = parse(key, v)?,
            "classifier_epochs" => c.epochs = parse(key, v)?,
            "mode" => c.mode = v.parse::<Mode>()?,
            "use_weights" => c.use_weights = parse(key, v)?,
            "use_reg" => c.use_reg = parse(key, v)?,
            "use_adversarial" => self.use_adversarial = parse(key, v)?,
            "eval_batches" => self.eval_batches = parse(key, v)?,
            "seeds" => self.seeds = parse_list(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "scale_categories" => self.scale_categories = parse_list(key, v)?,
            "scale_images" => self.scale_images = parse_list(key, v)?,
            "noise_ratios" => self.noise_ratios = parse_list(key, v)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: k + 1,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            config.set(key.trim(), value).map_err(|e| Error::Parse {
                line: k + 1,
                msg: e.to_string(),
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.noise.validate()?;
        self.simnet.sgd.validate()?;
        self.simnet.pretrain_sgd.validate()?;
        self.classifier.sgd.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("need at least one seed".into()));
        }
        if !(self.classifier.alpha >= 0.0) || !(self.simnet.beta >= 0.0) {
            return Err(Error::Config("alpha and beta must be non-negative".into()));
        }
        if self.eval_batches == 0 {
            return Err(Error::Config("eval_batches must be positive".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the serialized config, minus the
    /// output directory (moving a run does not change what it computes).
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.entries() {
            if k != "out" {
                hasher.update(format!("{k}={v}\n").as_bytes());
            }
        }
        hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_fixed_point() {
        let mut c = ExperimentConfig::default();
        c.noise.ratio = 0.1 + 0.2;
        c.seeds = vec![3, 9];
        c.classifier.mode = Mode::Generalized;
        let text = c.to_text();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let r = ExperimentConfig::parse("alpah = 0.2\n");
        assert!(matches!(r, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn comments_and_overrides() {
        let c = ExperimentConfig::parse("# study\nalpha = 0.5 # stronger\n\nseeds = 7\n").unwrap();
        assert_eq!(c.classifier.alpha, 0.5);
        assert_eq!(c.seeds, vec![7]);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::parse("dim = many\n").is_err());
        assert!(ExperimentConfig::parse("noise_ratio = 1.5\n").is_err());
        assert!(ExperimentConfig::parse("seeds = \n").is_err());
        assert!(ExperimentConfig::parse("no equals sign\n").is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.out = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        b.classifier.alpha = 0.2;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn toggle_labels() {
        assert_eq!(Toggles::ALL_OFF.label(), "Cls");
        assert_eq!(Toggles::ALL_ON.label(), "Ad+W+R");
        let t = Toggles {
            use_weights: false,
            use_reg: true,
            use_adversarial: false,
        };
        assert_eq!(t.label(), "R");
    }
}
