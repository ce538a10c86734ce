//! The smoothing operator `F̄ ↦ ∏_j P(T_j W_j ≥ t)` and its residuals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::mc::McReport;
use super::VerifyOptions;
use crate::branching::level_weights;
use crate::error::{Error, Result};
use crate::solutions::{EdgeBound, NuTable, PeriodicProfile, Side, SurvivalModel};
use crate::spectral::{GroupKind, GroupStructure};
use crate::weights::{TailSpec, WeightSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorValue {
    pub value: f64,
    /// Bound on `|value − exact|` from the omitted tail factors.
    pub truncation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResidual {
    pub t: f64,
    pub operator: f64,
    pub survival: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomResidual {
    pub index: usize,
    pub m: i64,
    pub left: f64,
    pub right: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub sup_residual: f64,
    pub argmax_t: f64,
    pub harmonicity_defect: Option<f64>,
    pub truncation_bound: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomResidual>,
    pub mc: Option<McReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointResidual>,
}

/// `P(w·W ≥ t)`.
pub fn factor(model: &SurvivalModel, w: f64, t: f64) -> f64 {
    if w > 0.0 {
        model.survival(t / w)
    } else {
        model.cdf_right(t / w)
    }
}

enum TailCut {
    /// Infinitely many factors below one: the product vanishes.
    Zero,
    /// Factors to multiply in, and a bound on the summed `1 − factor` of the rest.
    Terms { weights: Vec<f64>, remainder: f64 },
}

fn cut_tail(model: &SurvivalModel, tail: &TailSpec, t: f64, opts: &VerifyOptions) -> TailCut {
    let pos = tail.sign() > 0.0;
    let all_ones = TailCut::Terms { weights: Vec::new(), remainder: 0.0 };
    match *tail {
        TailSpec::Constant { .. } => {
            if factor(model, tail.term(0), t) == 1.0 {
                all_ones
            } else {
                TailCut::Zero
            }
        }
        TailSpec::Convergent { limit, .. } => {
            let y = if pos { t / limit } else { -t / limit };
            let lim = match (pos, t > 0.0, t == 0.0) {
                (true, _, true) => model.survival(0.0),
                (false, _, true) => model.cdf_right(0.0),
                (true, true, _) => model.survival(y),
                (true, false, _) => model.survival_right(y),
                (false, true, _) => model.cdf_right(y),
                (false, false, _) => model.cdf(y),
            };
            if lim < 1.0 {
                return TailCut::Zero;
            }
            // Factors move monotonically towards one, so the first unit factor ends the product.
            let mut weights = Vec::new();
            for k in 0..opts.max_tail_terms as u64 {
                let w = tail.term(k);
                if factor(model, w, t) == 1.0 {
                    return TailCut::Terms { weights, remainder: 0.0 };
                }
                weights.push(w);
            }
            TailCut::Terms { weights, remainder: f64::INFINITY }
        }
        TailSpec::Geometric { a, q, .. } => {
            if t == 0.0 {
                return if factor(model, tail.term(0), 0.0) == 1.0 { all_ones } else { TailCut::Zero };
            }
            let lim = match (pos, t > 0.0) {
                (true, true) => model.survival_right(0.0),
                (true, false) => model.survival(0.0),
                (false, true) => model.cdf(0.0),
                (false, false) => model.cdf_right(0.0),
            };
            if lim < 1.0 {
                return TailCut::Zero;
            }
            let edges = model.edges();
            let edge = match (pos, t > 0.0) {
                (true, true) => Some(edges.near_pos),
                (false, true) => Some(edges.near_neg),
                _ => None,
            };
            let rest = |k: u64| -> f64 {
                let x = t.abs() / (a * q.powf(k as f64));
                match edge {
                    None => 0.0,
                    Some(EdgeBound::Vanishes { d }) if x <= d => 0.0,
                    Some(EdgeBound::Power { c, kappa }) if x <= 1.0 => c * x.powf(kappa) / (1.0 - q.powf(-kappa)),
                    Some(_) => f64::INFINITY,
                }
            };
            let mut weights = Vec::new();
            match opts.tail_cut {
                Some(n) => {
                    weights.extend((0..n as u64).map(|k| tail.term(k)));
                    TailCut::Terms { weights, remainder: rest(n as u64) }
                }
                None => {
                    for k in 0..opts.max_tail_terms as u64 {
                        let r = rest(k);
                        if r <= opts.eps_trunc {
                            return TailCut::Terms { weights, remainder: r };
                        }
                        let w = tail.term(k);
                        if factor(model, w, t) == 1.0 {
                            // `1 − factor` decreases along the tail.
                            return TailCut::Terms { weights, remainder: 0.0 };
                        }
                        weights.push(w);
                    }
                    let r = rest(opts.max_tail_terms as u64);
                    TailCut::Terms { weights, remainder: r }
                }
            }
        }
    }
}

/// `∏_j P(T_j W ≥ t)` for any sign pattern, with a truncation bound.
pub fn general_operator(model: &SurvivalModel, spec: &WeightSpec, t: f64, opts: &VerifyOptions) -> OperatorValue {
    let head: f64 = spec.head().iter().map(|&w| factor(model, w, t)).product();
    let Some(tail) = spec.tail() else {
        return OperatorValue { value: head, truncation: 0.0 };
    };
    if head == 0.0 {
        return OperatorValue { value: 0.0, truncation: 0.0 };
    }
    match cut_tail(model, tail, t, opts) {
        TailCut::Zero => OperatorValue { value: 0.0, truncation: 0.0 },
        TailCut::Terms { weights, remainder } => {
            let value = head * weights.iter().map(|&w| factor(model, w, t)).product::<f64>();
            let truncation = if value == 0.0 || remainder == 0.0 {
                0.0
            } else if remainder >= 0.5 {
                value
            } else {
                (value * remainder / (1.0 - remainder)).min(value)
            };
            OperatorValue { value, truncation }
        }
    }
}

/// The operator for positive weights.
pub fn apply_min_operator(model: &SurvivalModel, spec: &WeightSpec, t: f64, opts: &VerifyOptions) -> Result<OperatorValue> {
    if !spec.all_positive() {
        return Err(Error::Precondition("weights must all be positive".into()));
    }
    Ok(general_operator(model, spec, t, opts))
}

/// The operator for negative weights.
pub fn neg_min_operator(model: &SurvivalModel, spec: &WeightSpec, t: f64, opts: &VerifyOptions) -> Result<OperatorValue> {
    if !spec.all_negative() {
        return Err(Error::Precondition("weights must all be negative".into()));
    }
    Ok(general_operator(model, spec, t, opts))
}

/// `Σ_j ν(t/T_j)` for positive weights and a nonnegative model, with a bound
/// on the omitted part.
pub fn harmonic_sum(model: &SurvivalModel, spec: &WeightSpec, t: f64, opts: &VerifyOptions) -> Result<(f64, f64)> {
    if !spec.all_positive() {
        return Err(Error::Precondition("weights must all be positive".into()));
    }
    let head: f64 = spec.head().iter().map(|&w| model.nu_of(t / w)).sum();
    let Some(tail) = spec.tail() else {
        return Ok((head, 0.0));
    };
    Ok(match cut_tail(model, tail, t, opts) {
        TailCut::Zero => (f64::INFINITY, 0.0),
        TailCut::Terms { weights, remainder } => {
            let s = head + weights.iter().map(|&w| model.nu_of(t / w)).sum::<f64>();
            let bound = if remainder < 0.5 { remainder / (1.0 - remainder) } else { f64::INFINITY };
            (s, bound)
        }
    })
}

/// `P(max_j T_j W_j ≤ t)` for finitely many weights.
pub fn max_operator(model: &SurvivalModel, spec: &WeightSpec, t: f64) -> Result<f64> {
    let ws = spec.finite_weights()?;
    Ok(ws
        .iter()
        .map(|&w| if w > 0.0 { model.cdf_right(t / w) } else { model.survival(t / w) })
        .product())
}

/// Sup over `grid` of `|P(max_j T_j W_j ≤ t) − P(W ≤ t)|`.
pub fn max_residual(model: &SurvivalModel, spec: &WeightSpec, grid: &Grid) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for &t in &grid.points {
        sup = sup.max((max_operator(model, spec, t)? - model.cdf_right(t)).abs());
    }
    Ok(sup)
}

/// Residual of the fixed-point equation on `grid`.
pub fn residual_report(model: &SurvivalModel, spec: &WeightSpec, grid: &Grid, opts: &VerifyOptions) -> Result<VerificationReport> {
    let points: Vec<(PointResidual, f64)> = grid
        .points
        .par_iter()
        .map(|&t| {
            let op = general_operator(model, spec, t, opts);
            let survival = model.survival(t);
            let p = PointResidual { t, operator: op.value, survival, residual: (op.value - survival).abs() };
            (p, op.truncation)
        })
        .collect();
    let mut sup_residual = 0.0;
    let mut argmax_t = grid.points[0];
    let mut truncation_bound: f64 = 0.0;
    for (p, tr) in &points {
        if p.residual > sup_residual || p.residual.is_nan() {
            sup_residual = p.residual;
            argmax_t = p.t;
        }
        truncation_bound = truncation_bound.max(*tr);
    }
    let harmonicity_defect = if spec.all_positive() && model.support().0 >= 0.0 {
        let mut d: f64 = 0.0;
        for &t in grid.points.iter().filter(|&&t| t > 0.0) {
            let nu = model.nu_of(t);
            let (s, _) = harmonic_sum(model, spec, t, opts)?;
            if nu.is_infinite() && s.is_infinite() {
                continue;
            }
            d = d.max((nu - s).abs());
        }
        Some(d)
    } else {
        None
    };
    Ok(VerificationReport {
        sup_residual,
        argmax_t,
        harmonicity_defect,
        truncation_bound,
        atoms: Vec::new(),
        mc: None,
        points: points.into_iter().map(|(p, _)| p).collect(),
    })
}

/// Exact residuals at the atoms `b_i·r^m` of a lattice profile, both one-sided
/// limits, computed on lattice indices rather than rounded points.
pub fn atom_residuals(
    profile: &PeriodicProfile,
    spec: &WeightSpec,
    group: &GroupStructure,
    atoms: &[(usize, i64)],
) -> Result<Vec<AtomResidual>> {
    let GroupKind::Lattice { r } = group.kind else {
        return Err(Error::Precondition("atom residuals need a lattice group".into()));
    };
    if !spec.all_positive() || ((r - profile.r()) / r).abs() > 1e-12 {
        return Err(Error::Precondition("profile period must match the lattice span of positive weights".into()));
    }
    if spec.tail().is_some() && group.tail_exponents.is_none() {
        return Err(Error::Precondition("tail is not on the lattice".into()));
    }
    let sum = |i: usize, m: i64, side: Side| -> f64 {
        let mut s: f64 = group.exponents.iter().map(|&n| profile.nu_at_lattice(i, m - n, side)).sum();
        if let Some((ea, eq)) = group.tail_exponents {
            // Terms shrink geometrically with ratio r^{−eq·α}.
            let ratio = r.powf(-(eq as f64) * profile.alpha());
            for k in 0..100_000i64 {
                let term = profile.nu_at_lattice(i, m - ea - k * eq, side);
                s += term;
                if term * ratio / (1.0 - ratio) <= 1e-18 * s {
                    break;
                }
            }
        }
        s
    };
    Ok(atoms
        .iter()
        .map(|&(i, m)| {
            let res = |side| {
                let lhs = profile.nu_at_lattice(i, m, side);
                ((-lhs).exp() - (-sum(i, m, side)).exp()).abs()
            };
            AtomResidual { index: i, m, left: res(Side::Left), right: res(Side::Right) }
        })
        .collect())
}

/// `n`-fold operator on a tabulated `ν` for positive weights:
/// `ν_n(t) = Σ_{|v| = n} ν_0(t/L(v))` on the table's own points or `grid`.
pub fn iterate_operator(initial: &NuTable, spec: &WeightSpec, n: usize, grid: Option<&Grid>, cap: usize) -> Result<NuTable> {
    if !spec.all_positive() {
        return Err(Error::Precondition("weights must all be positive".into()));
    }
    let model = SurvivalModel::Tabulated(initial.clone());
    let levels = level_weights(spec, n, cap)?;
    let ts: Vec<f64> = match grid {
        Some(g) => g.points.clone(),
        None => initial.t().to_vec(),
    };
    let nu: Vec<f64> = ts.par_iter().map(|&t| levels.iter().map(|&l| model.nu_of(t / l)).sum()).collect();
    if nu.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("iterate leaves the tabulated range; extend the table".into()));
    }
    NuTable::new(ts, nu)
}
