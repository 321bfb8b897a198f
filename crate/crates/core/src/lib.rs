//! Thermodynamic formalism on the full shift `{1,…,d}^ℕ` for finite-memory
//! potentials: Ruelle operators, equilibrium states, KL divergence under the
//! dual operator, information geometry, maximum entropy and entropy
//! production, all computed by exact finite sums.

pub mod cli;
pub mod error;
pub mod info_geom;
pub mod involution;
pub mod io;
pub mod maxent;
pub mod measure;
pub mod sampling;
pub mod second_law;
pub mod suite;
pub mod symbolic;
pub mod transfer;

pub use error::{Error, Result};
pub use measure::{EquilibriumState, SuitableMeasure};
pub use symbolic::{FiniteMemoryFunction, Word};
pub use transfer::PerronData;
