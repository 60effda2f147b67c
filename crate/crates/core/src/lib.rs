//! Pseudospectral solver and attractor diagnostics for a damped-forced
//! shallow-water Boussinesq system on the 1-periodic line.
//!
//! The system evolves a velocity `u` (zero mean) and a height `w`
//! (unit mean, positive):
//!
//! ```text
//! u_t - u_txx - u_xx + w_x + u u_x = f
//! w_t + (w u)_x - w_xx = 0
//! ```
//!
//! The crate provides the spatial discretization ([`spectral`]), the entropy
//! and energy functionals with their inequality checkers ([`functionals`]),
//! the nonlinear evolution ([`dynamics`]), the linearized flow along a base
//! trajectory ([`tangent`]), and Lyapunov-spectrum / attractor-dimension
//! machinery built on Gram determinants ([`lyapunov`]).

pub mod diagnostics;
pub mod dynamics;
pub mod functionals;
pub mod lyapunov;
pub mod spectral;
pub mod tangent;

pub use diagnostics::DiagnosticsRecord;
pub use dynamics::{DynamicsError, ForcingMode, SolverConfig, State};
pub use functionals::{EnergyBreakdown, FunctionalError};
pub use lyapunov::{LyapunovConfig, LyapunovError, LyapunovReport, TangentFrame};
pub use spectral::{Field, Grid, NormKind, SpectralError};
pub use tangent::{TangentError, TangentState, TaylorFit};
