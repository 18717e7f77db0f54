//! Losses, model families, closed-form solvers and training loops for weights
//! that live in (or are pulled toward) a random subspace.

mod checkpoint;
mod data;
mod lipschitz;
mod loss;
mod network;
mod optim;
mod solvers;
mod subspace;
mod train;

pub use checkpoint::{Checkpoint, ModelSpec, CHECKPOINT_VERSION};
pub use data::{Dataset, Labels};
pub use lipschitz::{lipschitz_check, LipschitzReport};
pub use loss::{LossKind, LossSpec};
pub use network::{accuracy, evaluate_risk, LinearBinary, Mlp, Network};
pub use optim::{Adam, OptimizerKind, Sgd};
pub use solvers::{gme_solve, logistic_subspace_fit, ols_subspace_solve, LogisticFit, OlsFit};
pub use subspace::{distortion, layer_blocks, Mode, Params, SubspaceModel};
pub use train::{spectral_clamp, train, StepRecord, TrainConfig, TrainReport};
pub(crate) use train::epoch_order;
