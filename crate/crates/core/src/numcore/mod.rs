//! Dense numeric core: matrices, MLPs with explicit backprop, SGD and a
//! finite-difference gradient checker.

pub mod gradcheck;
pub mod loss;
pub mod matrix;
pub mod mlp;
pub mod sgd;

pub use gradcheck::{flatten, grad_check, unflatten_into, GradCheckReport};
pub use loss::{argmax, binary_ce, clamp_prob, softmax, softmax_ce, PROB_EPS};
pub use matrix::Matrix;
pub use mlp::{mlp_backward, mlp_forward, sigmoid, Activation, Activations, Layer, LayerGrad, MlpGrads, MlpParams};
pub use sgd::{SgdConfig, SgdState};

/// Anything exposing an ordered list of parameter-shaped tensors.
///
/// Models and their gradient containers both implement this with matching order,
/// which is what [`SgdState`] and the gradient checker rely on.
pub trait Parameters {
    fn tensors(&self) -> Vec<&Matrix>;
    fn tensors_mut(&mut self) -> Vec<&mut Matrix>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}
