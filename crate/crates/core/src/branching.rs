//! Weighted branching: `W =d min_{|v| = n} L(v)·W(v)` with `L(v) = T_{v_1}⋯T_{v_n}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{batched, REFERENCE_STREAM};
use crate::solutions::SurvivalModel;
use crate::verify::mc::ks_snapped;
use crate::weights::WeightSpec;

pub const DEFAULT_LEAF_CAP: usize = 1_000_000;

/// `L(v)` for all words of length `n`, in lexicographic order.
pub fn level_weights(spec: &WeightSpec, n: usize, cap: usize) -> Result<Vec<f64>> {
    let ws = spec.finite_weights()?;
    let count = (ws.len() as f64).powi(n as i32);
    if count > cap as f64 {
        return Err(Error::CapExceeded { count, cap });
    }
    let mut level = vec![1.0];
    for _ in 0..n {
        level = level.iter().flat_map(|&l| ws.iter().map(move |&w| l * w)).collect();
    }
    Ok(level)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchingMode {
    /// Draw every leaf in lexicographic order.
    #[default]
    Full,
    /// Visit leaves by increasing `L(v)` and stop once `L(v)·inf supp W` exceeds
    /// the running minimum. Needs positive weights and `inf supp W > 0`.
    Pruned,
}

/// `samples` draws of `min_{|v| = n} L(v)·W(v)`. In full mode, level one uses
/// the same streams and order as the Monte-Carlo fixed-point test.
pub fn branching_min_sample(
    model: &SurvivalModel,
    spec: &WeightSpec,
    n: usize,
    samples: usize,
    seed: u64,
    mode: BranchingMode,
    cap: usize,
) -> Result<Vec<f64>> {
    let mut levels = level_weights(spec, n, cap)?;
    match mode {
        BranchingMode::Full => Ok(batched(samples, seed, 0, |rng| {
            levels.iter().map(|&l| l * model.draw(rng)).fold(f64::INFINITY, f64::min)
        })),
        BranchingMode::Pruned => {
            let lo = model.support().0;
            if !spec.all_positive() || !(lo > 0.0) {
                return Err(Error::Precondition("pruning needs positive weights and a support bounded away from zero".into()));
            }
            levels.sort_by(f64::total_cmp);
            Ok(batched(samples, seed, 0, |rng| {
                let mut best = f64::INFINITY;
                for &l in &levels {
                    if l * lo >= best {
                        break;
                    }
                    best = best.min(l * model.draw(rng));
                }
                best
            }))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchingReport {
    pub levels: usize,
    pub leaves: usize,
    pub n: usize,
    pub seed: u64,
    pub ks: f64,
    pub critical: f64,
    pub pass: bool,
}

/// KS comparison of the level-`n` minimum against fresh draws of `W`.
pub fn branching_invariance_test(
    model: &SurvivalModel,
    spec: &WeightSpec,
    levels: usize,
    samples: usize,
    seed: u64,
    mode: BranchingMode,
    cap: usize,
) -> Result<BranchingReport> {
    if samples == 0 {
        return Err(Error::TooFewSamples { got: 0, min: 1 });
    }
    let leaves = level_weights(spec, levels, cap)?.len();
    let stat = branching_min_sample(model, spec, levels, samples, seed, mode, cap)?;
    let reference = batched(samples, seed, REFERENCE_STREAM, |rng| model.draw(rng));
    let ks = ks_snapped(model, stat, reference)?;
    Ok(BranchingReport { levels, leaves, n: samples, seed, ks: ks.statistic, critical: ks.critical, pass: ks.pass })
}
