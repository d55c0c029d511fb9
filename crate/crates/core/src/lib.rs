//! Numerical laboratory for Strichartz estimates of `i u_t - Δu + V(t, x) u = F`
//! with potentials in mixed `L^r_t L^s_x` norms.

pub mod counterexamples;
pub mod error;
pub mod exponents;
pub mod fit;
pub mod groundstate;
pub mod potentials;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use exponents::{
    classify_potential, is_admissible, Criticality, ExponentPair, ExtExponent, PotentialClass,
    Rational, ScheduleKind, ScheduleParams,
};
pub use num_complex::Complex64;
pub use spectral::{ComplexField, DomainGuard, Grid, Trajectory};
