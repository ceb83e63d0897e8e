//! One-dimensional Poisson problem: discretization, Jacobi iteration, network solvers,
//! the network-then-Jacobi scheme and the kernel/differential-operator error flow.

pub mod competition;
pub mod jacobi;
pub mod poisson;
pub mod solver;

pub use competition::{operator_competition_flow, CompetitionFlow, FlowOperator};
pub use jacobi::{jacobi_mode_rate, jacobi_run, jacobi_until, JacobiErrorCurve, JacobiRun, ModeErrorTrace, SineBasis};
pub use poisson::{assemble_poisson_1d, poisson_reference, sine_eigenvalue, sine_mode, PoissonReference, PoissonSystem};
pub use solver::{dnn_poisson_solve, hybrid_solve, reference_system, resolved_peaks, DnnPoissonConfig, HybridRecord, PoissonLoss};
