//! Feed-forward networks trained with plain minibatch SGD.

mod backward;
mod forward;
mod gradcheck;
mod layer;
mod loss;
mod params;
mod train;

pub use backward::backward;
pub use forward::{forward, ForwardCache};
pub use gradcheck::{
    compare_gradients, finite_diff_gradient, relative_error, GroupError, DEFAULT_STEP,
    RELATIVE_ERROR_FLOOR,
};
pub use layer::{Activation, Architecture, LayerKind, LayerSpec, ParamShape};
pub use loss::{compute_loss, LossKind};
pub use params::{Gradients, GroupKind, LayerParams, ModelParams, WeightGroup};
pub use train::{argmax_rows, batch_gradient, predict, sgd_step, train_epochs, Hyperparams};
