//! Lagrangian-subgroup classification of replicated abelian theories and
//! loop-model / Ising tools for the decohered toric code.

#![allow(clippy::needless_range_loop)]

pub mod anyontheory;
pub mod condensate;
pub mod efdloop;
pub mod exactlattice;
pub mod isingmc;
pub mod models;
pub mod stabilizer;

pub use anyontheory::{Anyon, KTheory, TheoryError};
pub use condensate::{CondensateError, CriteriaConfig, LagrangianSubgroup, MemoryType, PhaseReport};
pub use efdloop::{EdgeRegion, EfdError, ErrorBasis, Sector, TorusLattice};
pub use exactlattice::{IntMatrix, LatticeError};
pub use isingmc::{Algorithm, Estimate, McConfig, McError};
pub use models::Model;
pub use stabilizer::{Limit, StabilizerError, StabilizerGroup};
