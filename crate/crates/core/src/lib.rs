//! Shot-frugal optimization of parameterized quantum circuits.
//!
//! The optimizer estimates gradients by the parameter-shift rule with
//! per-component adaptive shot counts, then chooses the step size along the
//! estimated direction by one-dimensional Bayesian optimization. Baselines
//! (Adam and coordinate-wise sinusoid fitting), statevector and density-matrix
//! simulators and a batch harness are included.

pub mod baselines;
pub mod bench;
pub mod circuit;
pub mod cost;
pub mod density;
pub mod error;
pub mod gp;
pub mod gradient;
pub mod linebo;
pub mod minimize;
pub mod noise;
pub mod pauli;
pub mod sglbo;
pub mod state;

pub use baselines::{run_adam, run_nft, AdamConfig, NftConfig};
pub use circuit::{build_ansatz, Gate, ParamCircuit};
pub use cost::{CostFunction, CostKind, CostQuery, ExactQueries, Objective, ShotCounter};
pub use error::{Error, Result};
pub use gradient::{estimate_gradient, exact_gradient, GradientEstimate};
pub use linebo::{line_bo, LineBoConfig, LineBoResult};
pub use noise::NoiseModel;
pub use pauli::{tfim_hamiltonian, PauliOp, PauliString, PauliSum};
pub use sglbo::{run_sglbo, RunResult, RunTrace, SglboConfig, TraceRow};
pub use state::StateVector;
