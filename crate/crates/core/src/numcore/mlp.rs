use rand::Rng;

use super::matrix::Matrix;
use super::Parameters;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    pub(crate) fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    pub(crate) fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One dense layer: `y = act(x · Wᵀ + b)` with `W` stored as out x in.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Matrix,
    pub activation: Activation,
}

impl Layer {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (input + output) as f64).sqrt();
        let data = (0..input * output)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Layer {
            weight: Matrix::from_vec(output, input, data).expect("length matches"),
            bias: Matrix::zeros(1, output),
            activation,
        }
    }

    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Layer {
            weight: Matrix::zeros(output, input),
            bias: Matrix::zeros(1, output),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

/// Outputs of every layer of one forward pass, plus the input that produced them.
#[derive(Clone, Debug)]
pub struct Activations {
    pub input: Matrix,
    pub outputs: Vec<Matrix>,
}

impl Activations {
    pub fn output(&self) -> &Matrix {
        self.outputs.last().unwrap_or(&self.input)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad {
    pub weight: Matrix,
    pub bias: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrad>,
}

impl MlpParams {
    /// Builds an MLP from layer widths `dims[0] -> dims[1] -> ...`, one activation per layer.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::Config(format!(
                "MLP needs n+1 widths for n activations, got {} widths and {} activations",
                dims.len(),
                activations.len()
            )));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Layer::glorot(w[0], w[1], act, rng))
            .collect();
        Ok(MlpParams { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::shape(
                    "MlpParams::from_layers",
                    format!("layer {} input {}", k + 1, pair[0].output_dim()),
                    pair[1].input_dim(),
                ));
            }
        }
        for l in &layers {
            if l.bias.shape() != (1, l.output_dim()) {
                return Err(Error::shape("MlpParams::from_layers", l.output_dim(), l.bias.cols()));
            }
        }
        Ok(MlpParams { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, Layer::input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::output_dim)
    }

    pub fn forward(&self, x: &Matrix) -> Result<Activations> {
        mlp_forward(self, x)
    }

    /// Forward pass returning only the final output.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer_forward(layer, &cur)?;
        }
        Ok(cur)
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            layers: self
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: Matrix::zeros(1, l.bias.cols()),
                })
                .collect(),
        }
    }
}

impl MlpGrads {
    pub fn add_assign(&mut self, other: &MlpGrads) -> Result<()> {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.add_assign(&b.weight)?;
            a.bias.add_assign(&b.bias)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weight.scale(k);
            l.bias.scale(k);
        }
    }
}

impl Parameters for MlpParams {
    fn tensors(&self) -> Vec<&Matrix> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }
}

impl Parameters for MlpGrads {
    fn tensors(&self) -> Vec<&Matrix> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }
}

fn layer_forward(layer: &Layer, x: &Matrix) -> Result<Matrix> {
    if x.cols() != layer.input_dim() {
        return Err(Error::shape("mlp_forward", layer.input_dim(), x.cols()));
    }
    let mut z = x.matmul_t(&layer.weight)?;
    let bias = layer.bias.as_slice();
    for r in 0..z.rows() {
        for (v, b) in z.row_mut(r).iter_mut().zip(bias) {
            *v = layer.activation.apply(*v + b);
        }
    }
    Ok(z)
}

pub fn mlp_forward(params: &MlpParams, x: &Matrix) -> Result<Activations> {
    let mut outputs = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let next = layer_forward(layer, outputs.last().unwrap_or(x))?;
        outputs.push(next);
    }
    Ok(Activations {
        input: x.clone(),
        outputs,
    })
}

/// Backpropagates `output_grad` (dL/d output) through the network.
/// Returns parameter gradients and dL/d input.
pub fn mlp_backward(params: &MlpParams, acts: &Activations, output_grad: &Matrix) -> Result<(MlpGrads, Matrix)> {
    if acts.outputs.len() != params.layers.len() {
        return Err(Error::shape("mlp_backward", params.layers.len(), acts.outputs.len()));
    }
    let out = acts.output();
    if out.shape() != output_grad.shape() {
        return Err(Error::shape(
            "mlp_backward",
            format!("{:?}", out.shape()),
            format!("{:?}", output_grad.shape()),
        ));
    }
    let mut grads = Vec::with_capacity(params.layers.len());
    let mut upstream = output_grad.clone();
    for (k, layer) in params.layers.iter().enumerate().rev() {
        let y = &acts.outputs[k];
        let x = if k == 0 { &acts.input } else { &acts.outputs[k - 1] };
        // dz = upstream ⊙ act'(y)
        let mut dz = upstream;
        if layer.activation != Activation::Identity {
            for (d, &yv) in dz.as_mut_slice().iter_mut().zip(y.as_slice()) {
                *d *= layer.activation.derivative_from_output(yv);
            }
        }
        let dw = dz.t_matmul(x)?;
        let db = dz.sum_rows();
        upstream = dz.matmul(&layer.weight)?;
        grads.push(LayerGrad { weight: dw, bias: db });
    }
    grads.reverse();
    Ok((MlpGrads { layers: grads }, upstream))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::gradcheck::{flatten, grad_check, unflatten_into};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(weight: Matrix, act: Activation) -> MlpParams {
        let out = weight.rows();
        MlpParams::from_layers(vec![Layer {
            weight,
            bias: Matrix::zeros(1, out),
            activation: act,
        }])
        .unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let p = single(Matrix::identity(2), Activation::Identity);
        let y = p.predict(&Matrix::row_vector(&[1.0, 2.0])).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn relu_clips_negative() {
        let p = single(Matrix::identity(2), Activation::Relu);
        let y = p.predict(&Matrix::row_vector(&[-1.0, 3.0])).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 3.0]);
    }

    #[test]
    fn sigmoid_of_zero_weights_is_half() {
        let p = single(Matrix::zeros(3, 2), Activation::Sigmoid);
        let y = p.predict(&Matrix::from_rows(&[[4.0, -7.0], [0.3, 1e3]]).unwrap()).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = single(Matrix::identity(2), Activation::Identity);
        assert!(matches!(
            p.forward(&Matrix::zeros(1, 3)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn linear_layer_weight_grad_is_outer_product() {
        let w = Matrix::from_rows(&[[0.5, -1.0, 2.0], [1.5, 0.25, -0.75]]).unwrap();
        let p = single(w, Activation::Identity);
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0], [-1.0, 0.5, 4.0]]).unwrap();
        let g = Matrix::from_rows(&[[0.3, -0.2], [1.0, 2.0]]).unwrap();
        let acts = p.forward(&x).unwrap();
        let (grads, dx) = mlp_backward(&p, &acts, &g).unwrap();
        assert_eq!(grads.layers[0].weight, g.t_matmul(&x).unwrap());
        assert_eq!(grads.layers[0].bias.as_slice(), &[1.3, 1.8]);
        assert_eq!(dx, g.matmul(&p.layers[0].weight).unwrap());
    }

    #[test]
    fn zero_output_grad_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = MlpParams::new(&[3, 4, 2], &[Activation::Relu, Activation::Sigmoid], &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3]]).unwrap();
        let acts = p.forward(&x).unwrap();
        let (grads, dx) = mlp_backward(&p, &acts, &Matrix::zeros(1, 2)).unwrap();
        assert!(grads.tensors().iter().all(|t| t.max_abs() == 0.0));
        assert_eq!(dx.max_abs(), 0.0);
    }

    #[test]
    fn two_layer_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = MlpParams::new(&[4, 6, 3], &[Activation::Relu, Activation::Identity], &mut rng).unwrap();
        let x = Matrix::from_vec(5, 4, (0..20).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let target = Matrix::from_vec(5, 3, (0..15).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        // loss = ½ Σ (y - t)²
        let loss = |q: &MlpParams| -> Result<f64> {
            let y = q.predict(&x)?;
            Ok(0.5 * y.as_slice().iter().zip(target.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        };
        let acts = p.forward(&x).unwrap();
        let mut g = acts.output().clone();
        g.axpy(-1.0, &target).unwrap();
        let (grads, _) = mlp_backward(&p, &acts, &g).unwrap();
        let flat = flatten(&p);
        let report = grad_check(
            &flat,
            &flatten(&grads),
            |v| {
                let mut q = p.clone();
                unflatten_into(&mut q, v);
                loss(&q)
            },
            1e-5,
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-5, "{report:?}");
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = MlpParams::new(&[8, 16, 4], &[Activation::Relu, Activation::Sigmoid], &mut rng).unwrap();
        let x = Matrix::from_vec(10, 8, (0..80).map(|i| (i as f64).cos()).collect()).unwrap();
        assert_eq!(p.predict(&x).unwrap(), p.predict(&x).unwrap());
    }
}
