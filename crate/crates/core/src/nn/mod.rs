//! The convolutional network: sparse convolution, dynamic pooling,
//! response normalization, parallel branch assembly, training, and
//! introspection.

pub mod conv;
pub mod inspect;
pub mod network;
pub mod norm;
pub mod pool;
pub mod train;

#[cfg(test)]
pub(crate) mod test_nets;

pub use conv::ConvLayer;
pub use inspect::{top_regions, TopRegion};
pub use network::{
    argmax, square_loss, target_vector, BranchInput, BranchSpec, ForwardCache, Gradients, Mode,
    NetworkParams, NetworkSpec,
};
pub use norm::{response_normalize, response_normalize_backward};
pub use pool::{pool, pool_backward, segments, PoolKind, PoolOutput, PoolingSpec};
pub use train::{init_params, sgd_train, TrainConfig, INIT_STDDEV};
