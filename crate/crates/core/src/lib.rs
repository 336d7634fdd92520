//! Iterative time integrators built on the nodal discontinuous Galerkin (DG)
//! weak form of an initial value problem.
//!
//! The DG solution on each interval is represented by its values at the
//! right Gauss-Radau points. Instead of solving the fully implicit nodal
//! system, the SDG sweeps run a preconditioned Picard iteration whose
//! preconditioner is a bidiagonal surrogate of the DG stiffness operator.
//! Explicit, implicit, semi-implicit (IMEX) and θ-damped sweeps are
//! provided, together with
//!
//! - [`dg`]: the fully implicit DG step every sweep converges to,
//! - [`multilevel`]: FAS p-multigrid cycles that use sweeps as smoothers,
//! - [`stability`]: amplification factors, region rasters and A-stability probes,
//! - [`problems`] and [`bench`]: test problems and convergence studies.
//!
//! ```
//! use sdg_core::prelude::*;
//!
//! let problem = problems::dahlquist(-1.0_f64);
//! let config = SchemeConfig::new(Variant::ImSdg, 3, 6);
//! let traj = integrate(&problem, &config, 8).unwrap();
//! let err = (traj.final_state()[0] - (-1.0_f64).exp()).abs();
//! assert!(err < 1e-9);
//! ```

pub mod bench;
pub mod dg;
pub mod error;
pub mod ivp;
pub mod linalg;
pub mod multilevel;
pub mod problems;
pub mod radau;
pub mod scalar;
pub mod scheme;
pub mod stability;

pub use error::{Error, NewtonFailure, Result};
pub use ivp::IvpProblem;
pub use radau::{NodeSet, OperatorSet};
pub use scalar::Scalar;
pub use scheme::{integrate, step, Init, NewtonOptions, SchemeConfig, SweepState, Trajectory, Variant};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::ivp::IvpProblem;
    pub use crate::problems;
    pub use crate::radau::{build_operators, operators, radau_nodes, NodeSet, OperatorSet};
    pub use crate::scalar::Scalar;
    pub use crate::scheme::{integrate, step, Init, NewtonOptions, SchemeConfig, SweepState, Trajectory, Variant};
}
