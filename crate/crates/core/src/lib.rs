//! Generalized structural Poisson brackets and covariant Hamiltonian flows.
//!
//! The bracket `{f, g} = Σ_ij J_ij D_i f D_j g` uses the covariant
//! derivative `D_i = ∂_i + A_i` with `A = ∇χ` for a structural function χ.
//! The crate provides the bracket and its diagnostics ([`poisson`]), the
//! flows it generates ([`dynamics`]), canonical charts ([`canonical`]) and the
//! Riemannian case `χ = log√det g` ([`riemann`]).

pub mod canonical;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod poisson;
pub mod riemann;
pub mod sampling;

pub use error::{Error, Result};
