//! Solution families and their distributional representations.

pub mod family;
pub mod model;
pub mod profile;

pub use family::{a3_membership, construct_family, FamilyComponent, FamilyDescription, MemberParams, Restriction, SpectralInputs};
pub use model::{EdgeBound, Edges, ModelSpec, NuTable, PiecewiseCdf, SurvivalModel};
pub use profile::{PeriodicProfile, ProfileViolation, Side};
