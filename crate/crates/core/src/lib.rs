//! Spectral simulation and verification toolkit for `u_t + L u = |u|^p + f`
//! with the mixed local-nonlocal operator `L = -a Δ + b (-Δ)^s`.

pub mod capacity;
pub mod error;
pub mod estimates;
pub mod exponents;
pub mod grid;
pub mod harness;
pub mod operator;
pub mod pv;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use grid::{Field, Grid, Multiplier};
pub use operator::{
    apply_operator, apply_semigroup, heat_kernel, phi1_multiplier, symbol, FracConstant, HeatKernel,
    OperatorParams,
};
pub use pv::frac_laplacian_pv_1d;
