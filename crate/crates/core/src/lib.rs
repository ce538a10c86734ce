//! Nonnegative and real solutions of the smoothing equation `W = inf_j T_j W_j`.

pub mod branching;
pub mod error;
pub mod rng;
pub mod solutions;
pub mod spectral;
pub mod verify;
pub mod weights;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

use solutions::{construct_family, FamilyDescription, SpectralInputs};
use spectral::{characteristic_exponent, detect_group, LatticeOptions};
use weights::{classify_reduced, Classification, WeightSpec};

/// Classification, spectral data and solution family of one weight vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub classification: Classification,
    pub spectral: Option<SpectralInputs>,
    pub family: FamilyDescription,
}

pub fn analyze(spec: &WeightSpec, had_zero: bool, root_tol: f64, lattice: &LatticeOptions) -> Result<Analysis> {
    let classification = classify_reduced(spec, had_zero);
    let spectral = match &classification.spectral_spec {
        Some(s) => match characteristic_exponent(s, root_tol)? {
            Some(e) => Some(SpectralInputs { alpha: e.alpha, group: detect_group(s, lattice)? }),
            None => None,
        },
        None => None,
    };
    let family = construct_family(&classification, spectral.as_ref())?;
    Ok(Analysis { classification, spectral, family })
}
