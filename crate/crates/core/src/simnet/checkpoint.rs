//! Plain-text parameter checkpoints: one `name,rows,cols,<values>` line per tensor.

use std::fmt::Write as _;
use std::path::Path;

use super::model::{Discriminator, SimNetModel};
use crate::error::{Error, Result};
use crate::numcore::{Activation, Layer, Matrix, MlpParams};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub tensors: Vec<(String, Matrix)>,
}

impl Checkpoint {
    pub fn push_mlp(&mut self, prefix: &str, mlp: &MlpParams) {
        for (k, layer) in mlp.layers.iter().enumerate() {
            self.tensors.push((format!("{prefix}.{k}.weight"), layer.weight.clone()));
            self.tensors.push((format!("{prefix}.{k}.bias"), layer.bias.clone()));
        }
    }

    /// Rebuilds an MLP from `prefix.<k>.weight/bias` entries. `activation(k, n)`
    /// names the activation of layer `k` out of `n`.
    pub fn mlp(&self, prefix: &str, activation: impl Fn(usize, usize) -> Activation) -> Result<MlpParams> {
        let mut pairs = Vec::new();
        for k in 0.. {
            let w = self.get(&format!("{prefix}.{k}.weight"));
            let b = self.get(&format!("{prefix}.{k}.bias"));
            match (w, b) {
                (Some(w), Some(b)) => pairs.push((w.clone(), b.clone())),
                (None, None) => break,
                _ => return Err(Error::Config(format!("checkpoint has half of layer {prefix}.{k}"))),
            }
        }
        if pairs.is_empty() {
            return Err(Error::Config(format!("checkpoint has no tensors for {prefix}")));
        }
        let n = pairs.len();
        let layers = pairs
            .into_iter()
            .enumerate()
            .map(|(k, (weight, bias))| Layer {
                weight,
                bias,
                activation: activation(k, n),
            })
            .collect();
        MlpParams::from_layers(layers)
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, m) in &self.tensors {
            write!(s, "{name},{},{},", m.rows(), m.cols()).unwrap();
            let vals: Vec<String> = m.as_slice().iter().map(|v| v.to_string()).collect();
            s.push_str(&vals.join(","));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut tensors = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: idx + 1, msg };
            let mut parts = line.split(',');
            let name = parts.next().filter(|n| !n.is_empty()).ok_or_else(|| err("missing name".into()))?;
            let rows: usize = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err("bad row count".into()))?;
            let cols: usize = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err("bad column count".into()))?;
            let values = parts
                .filter(|v| !v.is_empty())
                .map(|v| v.parse::<f64>().map_err(|_| err(format!("bad value {v:?}"))))
                .collect::<Result<Vec<f64>>>()?;
            let m = Matrix::from_vec(rows, cols, values).map_err(|e| err(e.to_string()))?;
            tensors.push((name.to_string(), m));
        }
        Ok(Checkpoint { tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::parse(&text)
    }
}

impl SimNetModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::default();
        c.push_mlp("backbone", &self.backbone);
        c.push_mlp("relation_fc", &self.relation_fc);
        c.push_mlp("score_head", &self.score_head);
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        SimNetModel::from_parts(
            c.mlp("backbone", |_, _| Activation::Relu)?,
            c.mlp("relation_fc", |_, _| Activation::Relu)?,
            c.mlp("score_head", |_, _| Activation::Sigmoid)?,
        )
    }
}

impl Discriminator {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::default();
        c.push_mlp("discriminator", &self.mlp);
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        Ok(Discriminator {
            mlp: c.mlp("discriminator", |k, n| {
                if k + 1 == n {
                    Activation::Sigmoid
                } else {
                    Activation::Relu
                }
            })?,
        })
    }
}
