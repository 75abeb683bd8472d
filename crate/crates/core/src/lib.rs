//! Coherent-state variational mean-field schemes for the Bose-Hubbard model.
//!
//! Three trial states are covered: the site-factorized Gutzwiller state
//! (`gutzwiller`), the Glauber product state whose mean-field flow is the
//! discrete nonlinear Schrödinger equation, and the fixed-number SU(M)
//! coherent state (both in `mf_dynamics`). Every closed-form identity used by
//! those schemes can be checked against the exact fixed-number Fock sector
//! representation in `fock`.

pub mod catstates;
pub mod cs_algebra;
pub mod error;
pub mod fock;
pub mod gutzwiller;
pub mod integrator;
pub mod linalg;
pub mod mf_dynamics;
pub mod model;
pub mod serde_complex;

pub use num_complex::Complex64;

pub use catstates::{CatState, LocalizedFamily};
pub use cs_algebra::{GlauberState, GroupElementParams, SuMState};
pub use error::{Error, Result};
pub use fock::{FockBasis, Occupation, SectorVector};
pub use gutzwiller::{GutzwillerState, MeanFields};
pub use integrator::{IntegratorConfig, Method, Monitor, Trajectory};
pub use mf_dynamics::{DnlsState, PsiState};
pub use model::{BhParams, Energy, HoppingMatrix};
