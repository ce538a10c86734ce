//! Monte-Carlo test of `W =d min_j T_j W_j` by a two-sample KS comparison.

use serde::{Deserialize, Serialize};

use super::ks::{ks_two_sample, KsResult};
use crate::error::{Error, Result};
use crate::rng::{batched, REFERENCE_STREAM};
use crate::solutions::{EdgeBound, SurvivalModel};
use crate::weights::{TailSpec, WeightSpec};

pub const MIN_SAMPLES: usize = 1000;
/// Total probability that truncating an infinite tail changes a sample.
pub const TAIL_BUDGET: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub ks: f64,
    pub critical: f64,
    pub n: usize,
    pub seed: u64,
    pub pass: bool,
    #[serde(default)]
    pub tail_terms: usize,
    #[serde(default)]
    pub truncation_probability: f64,
}

/// Weights used for sampling `min_j T_j W_j`, the number of tail terms kept
/// and a bound on the probability that the omitted terms matter.
pub fn mc_weights(model: &SurvivalModel, spec: &WeightSpec) -> Result<(Vec<f64>, usize, f64)> {
    let head = spec.head().to_vec();
    let Some(tail) = spec.tail() else {
        return Ok((head, 0, 0.0));
    };
    match *tail {
        // Negative tail terms times a nonpositive variable are nonnegative and
        // never undercut a positive head term times the same sign.
        _ if tail.is_negative() && model.cdf_right(0.0) == 1.0 && head.iter().any(|&w| w > 0.0) => Ok((head, 0, 0.0)),
        TailSpec::Geometric { a, q, negative: false, .. } if model.cdf(0.0) == 0.0 => {
            // With probability ≥ 1 − budget/2 the head minimum is below t*; a
            // tail term with t*/T_k tiny then almost never undercuts it.
            let w0 = head.first().copied().unwrap_or(a);
            let t_star = w0 * model.quantile(1.0 - TAIL_BUDGET / 2.0)?;
            let edge = model.edges().near_pos;
            let rest = |k: usize| -> f64 {
                let x = t_star / (a * q.powf(k as f64));
                match edge {
                    EdgeBound::Vanishes { d } if x <= d => 0.0,
                    EdgeBound::Power { c, kappa } if x <= 1.0 => c * x.powf(kappa) / (1.0 - q.powf(-kappa)),
                    _ => f64::INFINITY,
                }
            };
            let min_terms = usize::from(head.is_empty());
            for n in min_terms..10_000 {
                let r = rest(n);
                if r <= TAIL_BUDGET / 2.0 {
                    let mut ws = head;
                    ws.extend((0..n as u64).map(|k| tail.term(k)));
                    return Ok((ws, n, TAIL_BUDGET / 2.0 + r));
                }
            }
            Err(Error::Precondition("tail truncation bound not reached".into()))
        }
        _ => Err(Error::Precondition(
            "Monte-Carlo test supports finite weights, positive geometric tails on nonnegative models, and negative tails on nonpositive models".into(),
        )),
    }
}

/// Relative distance within which two values count as the same lattice atom.
pub const SNAP_TOL: f64 = 1e-12;

/// `n` draws of `min_j w_j W_j` on streams `0, 1, …`.
pub fn min_statistic_sample(model: &SurvivalModel, weights: &[f64], n: usize, seed: u64) -> Vec<f64> {
    batched(n, seed, 0, |rng| weights.iter().map(|&w| w * model.draw(rng)).fold(f64::INFINITY, f64::min))
}

/// `n` reference draws of `W` on streams `REFERENCE_STREAM + b`.
pub fn reference_sample(model: &SurvivalModel, n: usize, seed: u64) -> Vec<f64> {
    batched(n, seed, REFERENCE_STREAM, |rng| model.draw(rng))
}

/// KS comparison after mapping rounded copies of each atom to one value.
pub fn ks_snapped(model: &SurvivalModel, mut a: Vec<f64>, mut b: Vec<f64>) -> Result<KsResult> {
    for x in a.iter_mut().chain(b.iter_mut()) {
        *x = model.snap_lattice(*x, SNAP_TOL);
    }
    ks_two_sample(&a, &b)
}

pub fn mc_fixed_point_test(model: &SurvivalModel, spec: &WeightSpec, n: usize, seed: u64) -> Result<McReport> {
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: n, min: MIN_SAMPLES });
    }
    let (weights, tail_terms, truncation_probability) = mc_weights(model, spec)?;
    let stat = min_statistic_sample(model, &weights, n, seed);
    let reference = reference_sample(model, n, seed);
    let ks = ks_snapped(model, stat, reference)?;
    Ok(McReport { ks: ks.statistic, critical: ks.critical, n, seed, pass: ks.pass, tail_terms, truncation_probability })
}
