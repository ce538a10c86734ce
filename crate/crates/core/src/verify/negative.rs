//! Finitely many negative weights (the min-max equation) and mixed signs.

use serde::{Deserialize, Serialize};

use super::grid::{default_grid, Grid};
use super::ks::ks_two_sample;
use super::mc::{mc_fixed_point_test, McReport};
use super::operator::residual_report;
use super::VerifyOptions;
use crate::error::{Error, Result};
use crate::rng::{batched, REFERENCE_STREAM};
use crate::solutions::SurvivalModel;
use crate::weights::{split_signs, WeightSpec};

/// The root of `α + α^n = 1` in `(0, 1)`.
pub fn alpha_negative(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::DegenerateWeights);
    }
    let f = |a: f64| a + a.powi(n as i32) - 1.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(hi).abs() < f(lo).abs() { hi } else { lo })
}

/// `P(min_j T_j V_j < t)` for `V ~ G`.
pub fn ut_operator(g: &SurvivalModel, spec: &WeightSpec, t: f64) -> Result<f64> {
    let ws = spec.finite_weights()?.to_vec();
    if !spec.all_negative() {
        return Err(Error::Precondition("weights must all be negative".into()));
    }
    Ok(SurvivalModel::min_image(ws, g.clone())?.cdf(t))
}

fn minimax_setup(g: &SurvivalModel, spec: &WeightSpec) -> Result<(Vec<f64>, f64)> {
    let ws = spec.finite_weights()?.to_vec();
    if !spec.all_negative() {
        return Err(Error::Precondition("min-max equation needs finitely many negative weights".into()));
    }
    if g.cdf(0.0) != 1.0 {
        return Err(Error::Precondition("G must live on the negative half-line".into()));
    }
    let alpha = alpha_negative(ws.len())?;
    Ok((ws, alpha))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxReport {
    pub alpha: f64,
    pub sup_residual: f64,
    pub argmax_t: f64,
}

/// Sup over `grid` of `|1 − H(t) − ∏_i (1 − ∏_j H(t/(T_iT_j)))|` with
/// `H = αG + α^n δ₀` and left-continuous CDFs.
pub fn minimax_residual(g: &SurvivalModel, spec: &WeightSpec, grid: &Grid) -> Result<MinimaxReport> {
    let (ws, alpha) = minimax_setup(g, spec)?;
    let an = alpha.powi(ws.len() as i32);
    let h = |t: f64| alpha * g.cdf(t) + if t > 0.0 { an } else { 0.0 };
    let mut rep = MinimaxReport { alpha, sup_residual: 0.0, argmax_t: grid.points[0] };
    for &t in &grid.points {
        let rhs: f64 = ws
            .iter()
            .map(|&ti| 1.0 - ws.iter().map(|&tj| h(t / (ti * tj))).product::<f64>())
            .product();
        let res = (1.0 - h(t) - rhs).abs();
        if res > rep.sup_residual {
            rep.sup_residual = res;
            rep.argmax_t = t;
        }
    }
    Ok(rep)
}

/// Grid for the min-max check: nonpositive part of `G`'s default grid plus
/// the images `t·T_iT_j` that hit its atoms.
pub fn default_minimax_grid(g: &SurvivalModel, spec: &WeightSpec, n: usize) -> Result<Grid> {
    let ws = spec.finite_weights()?;
    let base = default_grid(g, None, n)?;
    let mut pts: Vec<f64> = base.points.iter().copied().filter(|&t| t < 0.0).collect();
    let extra: Vec<f64> = pts.iter().flat_map(|&t| ws.iter().flat_map(move |&a| ws.iter().map(move |&b| t * a * b))).collect();
    pts.extend(extra);
    pts.push(0.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Grid::new(pts)
}

fn draw_h<R: rand::Rng + ?Sized>(g: &SurvivalModel, alpha: f64, rng: &mut R) -> f64 {
    if rng.gen::<f64>() < alpha {
        g.draw(rng)
    } else {
        0.0
    }
}

/// `n` draws of `min_i max_j T_iT_j W(i, j)` with `W(i, j) ~ H` iid.
pub fn minimax_sample(g: &SurvivalModel, spec: &WeightSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    let (ws, alpha) = minimax_setup(g, spec)?;
    Ok(batched(n, seed, 0, |rng| {
        ws.iter()
            .map(|&ti| ws.iter().map(|&tj| ti * tj * draw_h(g, alpha, rng)).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueFrequency {
    pub value: f64,
    pub statistic: f64,
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxMcReport {
    pub alpha: f64,
    pub n: usize,
    pub seed: u64,
    pub ks: f64,
    pub critical: f64,
    pub pass: bool,
    /// Empirical frequencies when both samples take at most 64 values.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frequencies: Vec<ValueFrequency>,
}

pub fn minimax_mc_test(g: &SurvivalModel, spec: &WeightSpec, n: usize, seed: u64) -> Result<MinimaxMcReport> {
    if n == 0 {
        return Err(Error::TooFewSamples { got: 0, min: 1 });
    }
    let (_, alpha) = minimax_setup(g, spec)?;
    let stat = minimax_sample(g, spec, n, seed)?;
    let reference = batched(n, seed, REFERENCE_STREAM, |rng| draw_h(g, alpha, rng));
    let ks = ks_two_sample(&stat, &reference)?;
    Ok(MinimaxMcReport {
        alpha,
        n,
        seed,
        ks: ks.statistic,
        critical: ks.critical,
        pass: ks.pass,
        frequencies: frequencies(&stat, &reference),
    })
}

fn frequencies(a: &[f64], b: &[f64]) -> Vec<ValueFrequency> {
    let mut values: Vec<f64> = a.iter().chain(b).copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    if values.len() > 64 {
        return Vec::new();
    }
    let freq = |s: &[f64], v: f64| s.iter().filter(|&&x| x == v).count() as f64 / s.len() as f64;
    values.iter().map(|&v| ValueFrequency { value: v, statistic: freq(a, v), reference: freq(b, v) }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedReport {
    /// `P(W < 0)`.
    pub negative_mass: f64,
    /// Whether `P(W ≤ 0) = 1`.
    pub mass_ok: bool,
    /// Residual for the positive weights alone.
    pub positive_residual: f64,
    /// Residual of `−1/W` for the inverted positive weights.
    pub mirror_residual: Option<f64>,
    /// Residual for all weights, including `t = 0`.
    pub full_residual: f64,
    pub mc: Option<McReport>,
    pub pass: bool,
}

/// Checks a nonpositive candidate for weights of both signs: it must solve the
/// equation for `T^>` and for the full `T`.
pub fn mixed_case_check(
    model: &SurvivalModel,
    spec: &WeightSpec,
    opts: &VerifyOptions,
    mc: Option<(usize, u64)>,
) -> Result<MixedReport> {
    let (Some(pos), Some(_)) = split_signs(spec) else {
        return Err(Error::Precondition("weights must have both signs".into()));
    };
    let negative_mass = model.cdf(0.0);
    let mass_ok = model.cdf_right(0.0) == 1.0;
    let grid = default_grid(model, Some(spec), opts.grid_points)?;
    let positive_residual = residual_report(model, &pos, &grid, opts)?.sup_residual;
    let full_residual = residual_report(model, spec, &grid, opts)?.sup_residual;
    let mirror_residual = match (model.is_delta_zero(), pos.inverse()) {
        (false, Some(inv)) if mass_ok => {
            let m = model.mirror_reciprocal();
            let g = default_grid(&m, Some(&inv), opts.grid_points)?;
            Some(residual_report(&m, &inv, &g, opts)?.sup_residual)
        }
        _ => None,
    };
    let mc = match mc {
        Some((n, seed)) => Some(mc_fixed_point_test(model, spec, n, seed)?),
        None => None,
    };
    let tol = opts.residual_tol;
    let pass = model.is_delta_zero()
        || (mass_ok
            && positive_residual <= tol
            && full_residual <= tol
            && mirror_residual.is_none_or(|r| r <= tol)
            && mc.as_ref().is_none_or(|r| r.pass));
    Ok(MixedReport { negative_mass, mass_ok, positive_residual, mirror_residual, full_residual, mc, pass })
}
