//! Two-projections toolkit: dense complex matrix primitives, the lattice of
//! two orthogonal projections, the Halmos canonical form, Friedrichs-angle
//! identities, resolvent-based intersection projectors, and a grid simulator
//! of extremely discomplementable projections on C([0,1]; M2(C)).

pub mod cstar;
pub mod error;
pub mod friedrichs;
pub mod halmos;
pub mod linalg;
pub mod random;
pub mod resolvent;
pub mod schema;
pub mod subspaces;
pub mod suites;

pub use error::{Error, Result};
pub use friedrichs::AngleReport;
pub use halmos::HalmosForm;
pub use linalg::{CMatrix, RankPolicy};
pub use random::PairSpec;
pub use subspaces::{Projector, SubspaceBasis};
