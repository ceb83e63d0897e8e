//! Kernel-regime models: empirical tangent kernels, eigen-mode flows, the linear
//! frequency-domain model and generalization bounds.

pub mod flow;
pub mod gram;
pub mod lfp;

pub use flow::{eigvec_zero_crossings, ntk_generalization_bound, residual_flow, BoundValue, ResidualFlow};
pub use gram::{eigen, empirical_gram, Eigenpairs, GramKernel};
pub use lfp::{
    fit_rate_constants, fp_energy, lfp_equilibrium, lfp_evolve, lfp_generalization_bound, lfp_rate, FreqGrid, GammaSpec, LfpKernel,
    LfpModel, LfpTrajectory,
};
