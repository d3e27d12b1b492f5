//! Alpha-stable random elements of the Skorokhod space `D([0,1], R^d)` built
//! from truncated Le Page series `X(t) = sum_i Γ_i^{-1/α} ε_i Y_i(t)`, together
//! with numerical checks of the moment conditions that guarantee convergence
//! and of the distributional properties of the limit.

pub mod diagnostics;
pub mod error;
pub mod lepage;
pub mod paths;
pub mod random_inputs;
pub mod stable_checks;
pub mod summation;

pub use error::{Error, Result};
pub use paths::StepPath;
