//! Amplitude-based quantum Poisson solver.
//!
//! The 1D Dirichlet problem `-v'' = b` on a grid of `N = 2^n` cells becomes
//! the tridiagonal system `A v = b`. The solver circuit rotates `|b>` into
//! the eigenbasis of `A`, writes `8 / lambda_j` onto an amplitude through a
//! product of `n - 1` squared sines, flags that branch and rotates back.
//! Postselecting the flag leaves the normalised solution in register B.
//!
//! Everything here is checkable at small `n` with the dense statevector
//! simulator in [`simulator`]; [`resources`] counts gates for larger `n`.

pub mod circuit;
pub mod error;
pub mod identities;
pub mod poisson;
pub mod qps;
pub mod resources;
pub mod simulator;
pub mod verify;

pub use circuit::{Circuit, Control, Gate, GateKind, Polarity, QubitRegister, RegisterName, UnitaryBlock};
pub use error::{QpsError, Result};
pub use identities::{inversion_angles, inversion_value, odd_factor, AngleSequence, OddFactorization};
pub use poisson::{
    discretize, eigenpair, eigenvalue, solve_classical, spectral_solve, EigenPair, PoissonProblem, Preset,
    TridiagonalSystem,
};
pub use qps::{
    build_bc, build_flag, build_inversion, build_inversion_parallel, build_inversion_serial, build_qps, solve, Mode,
    QpsConfig, QpsLayout, QpsSolution, RyConstruction,
};
pub use resources::{count_resources, depth, CostModel, ResourceReport};
pub use simulator::{fidelity, PostselectResult, StateVector};
