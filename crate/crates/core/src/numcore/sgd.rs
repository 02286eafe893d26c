use super::matrix::Matrix;
use super::Parameters;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be >= 0", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} must be in [0,1)", self.momentum)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!("weight decay {} must be >= 0", self.weight_decay)));
        }
        Ok(())
    }
}

/// SGD with classic momentum; weight decay is folded into the gradient:
///
/// ```text
/// v ← momentum·v + grad + weight_decay·param
/// param ← param − lr·v
/// ```
#[derive(Clone, Debug)]
pub struct SgdState {
    pub config: SgdConfig,
    velocity: Vec<Matrix>,
}

impl SgdState {
    pub fn new<P: Parameters + ?Sized>(params: &P, config: SgdConfig) -> Result<Self> {
        config.validate()?;
        let velocity = params
            .tensors()
            .into_iter()
            .map(|t| Matrix::zeros(t.rows(), t.cols()))
            .collect();
        Ok(SgdState { config, velocity })
    }

    pub fn velocity(&self) -> &[Matrix] {
        &self.velocity
    }

    pub fn step<P, G>(&mut self, params: &mut P, grads: &G) -> Result<()>
    where
        P: Parameters + ?Sized,
        G: Parameters + ?Sized,
    {
        let grads = grads.tensors();
        let mut params = params.tensors_mut();
        if params.len() != self.velocity.len() || grads.len() != self.velocity.len() {
            return Err(Error::shape(
                "sgd_step",
                format!("{} tensors", self.velocity.len()),
                format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        for ((p, g), v) in params.iter().zip(&grads).zip(&self.velocity) {
            p.check_same(v, "sgd_step")?;
            g.check_same(v, "sgd_step")?;
        }
        let SgdConfig {
            learning_rate: lr,
            momentum,
            weight_decay: wd,
        } = self.config;
        for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            let p = p.as_mut_slice();
            for ((pv, &gv), vv) in p.iter_mut().zip(g.as_slice()).zip(v.as_mut_slice()) {
                *vv = momentum * *vv + gv + wd * *pv;
                *pv -= lr * *vv;
            }
        }
        Ok(())
    }
}
