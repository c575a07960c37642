//! Finite-stage construction and certification of profinite allosteric
//! actions of the wreath products Z^d ≀ Z^m.
//!
//! For every nontrivial γ the [`forge`] module builds a finite-index subgroup
//! Γ_γ of p-power index with γ ∉ Γ_γ and a large set of cosets fixed by the
//! lamp group at the origin. [`dynamics`] runs the coset actions exactly and
//! [`certificates`] turns the results into independently checkable records.

pub mod base;
pub mod certificates;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod forge;
pub mod wreath;

pub use error::{Error, Result};
