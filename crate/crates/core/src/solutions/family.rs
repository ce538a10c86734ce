//! Parametric descriptions of `𝔉_T` with an instantiation hook.

use serde::{Deserialize, Serialize};

use super::model::SurvivalModel;
use super::profile::PeriodicProfile;
use crate::error::{Error, Result};
use crate::spectral::{GroupKind, GroupStructure};
use crate::verify::negative::alpha_negative;
use crate::weights::{classify, Classification, FamilySummary, WeightSpec};

/// Characteristic exponent and group of the spec a family depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralInputs {
    pub alpha: f64,
    pub group: GroupStructure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    /// Concentrated on `(−∞, 0)`.
    Negative,
    /// Concentrated on `(−∞, 0]`.
    NonPositive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "component", rename_all = "snake_case")]
pub enum FamilyComponent {
    /// `{Weib(c, α) : c > 0}`.
    Weibull { alpha: f64 },
    /// `{r-Weib(h, α) : h ∈ 𝔥(r, α)}`.
    PeriodicWeibull { r: f64, alpha: f64 },
    /// `{δ_c : c > 0}`.
    PositiveDiracs,
    /// `{δ_c : c ∈ ℝ}`.
    AllDiracs,
    /// `{F : 0 < l_F ≤ u_F < ∞, u_F/l_F ≤ ratio_bound}`.
    BoundedSupport { ratio_bound: f64 },
    AllDistributions,
    /// `{ℒ(−1/W) : ℒ(W) ∈ inner}`.
    Mirrored { inner: Box<FamilyComponent> },
    /// `{αG + α^n 𝕌_T G}` for `G` on `ℝ^<` solving the minimax equation.
    Minimax { weights: Vec<f64>, alpha: f64 },
    /// Members of `inner` concentrated on the given half-line.
    Restricted { to: Restriction, inner: Box<FamilyComponent> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyDescription {
    pub summary: String,
    /// `δ₀` solves every instance of the equation.
    pub includes_delta_zero: bool,
    pub components: Vec<FamilyComponent>,
}

/// Parameters selecting one member of a component.
#[derive(Clone, Debug, PartialEq)]
pub enum MemberParams {
    /// `c` for Weibull and Dirac families; constant profile `h ≡ c` for periodic ones.
    Scale(f64),
    Profile(PeriodicProfile),
    /// A full distribution (bounded-support, unrestricted and minimax families).
    Distribution(SurvivalModel),
}

/// Support sign of every member, used when restricting to negative solutions.
fn positive_only(c: &FamilyComponent) -> bool {
    matches!(
        c,
        FamilyComponent::Weibull { .. }
            | FamilyComponent::PeriodicWeibull { .. }
            | FamilyComponent::PositiveDiracs
            | FamilyComponent::BoundedSupport { .. }
    )
}

fn restrict(components: Vec<FamilyComponent>, to: Restriction) -> Vec<FamilyComponent> {
    components
        .into_iter()
        .filter(|c| !positive_only(c))
        .map(|c| match c {
            FamilyComponent::Mirrored { .. } => c,
            FamilyComponent::Restricted { to: Restriction::Negative, .. } => c,
            other => FamilyComponent::Restricted { to, inner: Box::new(other) },
        })
        .collect()
}

fn components_of(summary: &FamilySummary, spectral: Option<&SpectralInputs>) -> Result<Vec<FamilyComponent>> {
    Ok(match summary {
        FamilySummary::AllDistributions => vec![FamilyComponent::AllDistributions],
        FamilySummary::DiracOnly => vec![],
        FamilySummary::AllDiracs => vec![FamilyComponent::AllDiracs],
        FamilySummary::PositiveDiracs => vec![FamilyComponent::PositiveDiracs],
        FamilySummary::BoundedSupport { ratio_bound } => {
            vec![FamilyComponent::BoundedSupport { ratio_bound: *ratio_bound }]
        }
        FamilySummary::Unresolved => {
            let s = spectral.ok_or_else(|| {
                Error::Precondition("A5/A6 family needs the characteristic exponent and group".into())
            })?;
            match s.group.kind {
                GroupKind::Continuous => vec![FamilyComponent::Weibull { alpha: s.alpha }],
                GroupKind::Lattice { r } => vec![FamilyComponent::PeriodicWeibull { r, alpha: s.alpha }],
            }
        }
        FamilySummary::PositiveEmpty { negative: None } => vec![],
        FamilySummary::PositiveEmpty { negative: Some(inv) } => components_of(&inv.summary, spectral)?
            .into_iter()
            .filter(|c| !matches!(c, FamilyComponent::AllDiracs | FamilyComponent::AllDistributions))
            .map(|c| FamilyComponent::Mirrored { inner: Box::new(c) })
            .collect(),
        FamilySummary::Minimax { weights } => {
            vec![FamilyComponent::Minimax { weights: weights.clone(), alpha: alpha_negative(weights.len())? }]
        }
        FamilySummary::NegativeOfPositivePart { positive } => {
            restrict(components_of(&positive.summary, spectral)?, Restriction::Negative)
        }
        FamilySummary::NonPositiveRestriction { inner } => {
            restrict(components_of(inner, spectral)?, Restriction::NonPositive)
        }
    })
}

/// Builds the family described by a classification.
///
/// `spectral` must describe `classification.spectral_spec` whenever the
/// summary depends on an A5/A6 analysis.
pub fn construct_family(classification: &Classification, spectral: Option<&SpectralInputs>) -> Result<FamilyDescription> {
    Ok(FamilyDescription {
        summary: classification.describe(),
        includes_delta_zero: true,
        components: components_of(&classification.summary, spectral)?,
    })
}

fn member_err(msg: impl Into<String>) -> Error {
    Error::Member(msg.into())
}

impl FamilyComponent {
    /// Produces the member selected by `params`.
    pub fn instantiate(&self, params: &MemberParams) -> Result<SurvivalModel> {
        use FamilyComponent::*;
        match (self, params) {
            (Weibull { alpha }, MemberParams::Scale(c)) => SurvivalModel::weibull(*c, *alpha),
            (PeriodicWeibull { r, alpha }, MemberParams::Scale(c)) => {
                if *c == 0.0 {
                    return SurvivalModel::dirac(0.0);
                }
                SurvivalModel::periodic(PeriodicProfile::constant(*r, *alpha, *c)?)
            }
            (PeriodicWeibull { r, alpha }, MemberParams::Profile(p)) => {
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
                if !close(p.r(), *r) || !close(p.alpha(), *alpha) {
                    return Err(member_err(format!(
                        "profile has (r, alpha) = ({}, {}), family needs ({r}, {alpha})",
                        p.r(),
                        p.alpha()
                    )));
                }
                SurvivalModel::periodic(p.clone())
            }
            (PositiveDiracs, MemberParams::Scale(c)) if *c >= 0.0 => SurvivalModel::dirac(*c),
            (PositiveDiracs, MemberParams::Scale(c)) => Err(member_err(format!("c must be >= 0, got {c}"))),
            (AllDiracs, MemberParams::Scale(c)) => SurvivalModel::dirac(*c),
            (BoundedSupport { .. }, MemberParams::Scale(c)) if *c > 0.0 => SurvivalModel::dirac(*c),
            (BoundedSupport { ratio_bound }, MemberParams::Distribution(m)) => {
                if bounded_member(m, *ratio_bound) {
                    Ok(m.clone())
                } else {
                    Err(member_err(format!("support ratio exceeds {ratio_bound} or support is not in (0, ∞)")))
                }
            }
            (AllDistributions, MemberParams::Distribution(m)) => Ok(m.clone()),
            (AllDistributions, MemberParams::Scale(c)) => SurvivalModel::dirac(*c),
            (Mirrored { inner }, p) => Ok(inner.instantiate(p)?.mirror_reciprocal()),
            (Minimax { weights, alpha }, MemberParams::Distribution(g)) => {
                let (_, u) = g.support();
                if !(u < 0.0 || (u == 0.0 && g.atom(0.0) == 0.0)) {
                    return Err(member_err("G must be concentrated on (-inf, 0)"));
                }
                let n = weights.len() as i32;
                SurvivalModel::mixture(vec![
                    (*alpha, g.clone()),
                    (alpha.powi(n), SurvivalModel::min_image(weights.clone(), g.clone())?),
                ])
            }
            (Restricted { to, inner }, p) => {
                let m = inner.instantiate(p)?;
                let ok = match to {
                    Restriction::Negative => m.cdf(0.0) == 1.0,
                    Restriction::NonPositive => m.cdf_right(0.0) == 1.0,
                };
                if ok {
                    Ok(m)
                } else {
                    Err(member_err(format!("member is not concentrated on the {to:?} half-line")))
                }
            }
            _ => Err(member_err(format!("parameters {params:?} do not select a member of {self:?}"))),
        }
    }
}

fn bounded_member(m: &SurvivalModel, ratio_bound: f64) -> bool {
    let (l, u) = m.support();
    l > 0.0 && l <= u && u.is_finite() && u / l <= ratio_bound
}

/// Membership in the bounded-support family of an A3 spec (exactly one weight
/// equal to one, all others at least `u_F / l_F`).
pub fn a3_membership(model: &SurvivalModel, spec: &WeightSpec) -> Result<bool> {
    match classify(spec).summary {
        FamilySummary::BoundedSupport { ratio_bound } => Ok(bounded_member(model, ratio_bound)),
        _ => Err(Error::Precondition("spec is not in case A3".into())),
    }
}
