//! Trainable models with exact input derivatives, losses, optimizers and the training loop.

pub mod activation;
pub mod linearized;
pub mod loss;
pub mod model;
pub mod network;
pub mod optim;
pub mod poly;
pub mod train;

pub use activation::{compact, ActivationKind, Jet};
pub use linearized::{linearized_forward, LinearizedModel};
pub use loss::{loss_and_gradient, loss_value, mse, param_gradient, BoundarySet, Dataset, LossKind, LossSpec, SourceFn};
pub use model::{tangent_features, DerivOrder, Model, ModelOutput, OutputAdjoint};
pub use network::{forward, init_network, input_derivatives, Architecture, InitScheme, MlpNetwork};
pub use optim::{BatchMode, Optimizer, OptimizerKind, OptimizerSpec};
pub use poly::{polynomial_fit_gd, PolynomialModel};
pub use train::{train, FilterProbe, ProbeSpec, RecordCadence, Recorder, RunMeta, Schedule, SpectralProbe, StopRule, Transform};
