//! Simulation and Monte Carlo verification of switching processes: càdlàg
//! processes obtained from a Lévy or Itô-Lévy intrinsic process by adding
//! jumps at a state-dependent hazard `λ` with relocation kernel `Q`.

pub mod error;
pub mod exec;
pub mod generator;
pub mod ito;
pub mod jumps;
pub mod law;
pub mod levy;
pub mod path;
pub mod pide;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod switching;
pub mod verify;

pub use error::{Result, SpError};
pub use exec::Executor;
pub use ito::{sample_ito_levy_path, ItoLevyCoefficients};
pub use jumps::{JumpMeasure, JumpSizes};
pub use law::{Kernel, SwitchingLaw};
pub use levy::{extend_path, sample_levy_increment, sample_levy_path, LevyTriplet};
pub use path::{IntrinsicModel, PathSkeleton};
pub use rng::{RngStream, StreamRng};
pub use stats::MCEstimate;
pub use switching::{
    csmp_state, empirical_renewal_kernel, sample_inhomogeneous_sp, sample_sp_trajectory, sample_with_clock, CSMPState, Clock,
    JumpTimeMethod, RenewalRecord, SPTrajectory, SpConfig,
};
pub use generator::{
    dynkin_check, eval_ito_levy_generator, eval_levy_generator, eval_switching_generator, GeneratorQuadrature,
    GeneratorValue, IntrinsicGenerator, TestFunction,
};
pub use pide::{evaluate_solution, solve_pide, PideGrid, PideSolution};
pub use verify::{
    check_chapman_kolmogorov, check_conditional_law, check_feynman_kac, check_kolmogorov, check_stationarity,
    estimate_stationary_limit, Harness, VerificationReport,
};
