//! Finite quotient actions Γ ↷ Γ/Γ_γ and their products over windows.
//!
//! A coset (f, λ)Γ_γ is determined by λ mod p^k together with the sums of f
//! over the cosets `λ + q`, q ∈ E, taken mod p: two elements lie in the same
//! coset iff their shifts agree mod p^k and these sums agree. States are
//! therefore indexed in closed form without materializing ⊕ Z^d.

mod inverse;
mod level;
mod measure;
mod orbit;
mod state;
mod window;

pub use inverse::{check_inverse_system, InverseSystemReport, MapCheck, StructureMap};
pub use level::{FiniteLevelSystem, LevelAction};
pub use measure::UniformMeasure;
pub use orbit::{FiniteAction, Orbit};
pub use state::{CosetState, WindowState};
pub use window::{
    level_s_fixed_fraction, GammaMove, StabilizerWitness, TransitivityMethod, TransitivityReport,
    WindowAction, WindowSystem,
};
