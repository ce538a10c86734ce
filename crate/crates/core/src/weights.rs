//! Weight vectors `T = (T_j)` and their case classification.
//!
//! A [`WeightSpec`] is a finite head of nonzero reals plus an optional
//! structured tail standing for the countable index set `J = ℕ`. The
//! [`classify`] routine maps a spec onto the sign cases (all positive, all
//! negative, mixed) and, for positive specs with `inf T_j ≥ 1`, onto the
//! subcases A1–A6 together with a symbolic description of the solution set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Structured infinite tail `T_j, j ≥ j₀`.
///
/// `k = j − j₀` counts tail terms from zero. With `negative` set every tail
/// weight is multiplied by `−1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TailSpec {
    /// `a·q^k`, diverging to infinity.
    Geometric {
        a: f64,
        q: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<u64>,
        #[serde(default, skip_serializing_if = "is_false")]
        negative: bool,
    },
    /// `a` for every tail index.
    Constant {
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<u64>,
        #[serde(default, skip_serializing_if = "is_false")]
        negative: bool,
    },
    /// `limit + a·s^{−k}`, decreasing to `limit`.
    Convergent {
        limit: f64,
        a: f64,
        s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<u64>,
        #[serde(default, skip_serializing_if = "is_false")]
        negative: bool,
    },
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl TailSpec {
    pub fn geometric(a: f64, q: f64) -> Self {
        TailSpec::Geometric { a, q, start: None, negative: false }
    }

    pub fn constant(a: f64) -> Self {
        TailSpec::Constant { a, start: None, negative: false }
    }

    pub fn convergent(limit: f64, a: f64, s: f64) -> Self {
        TailSpec::Convergent { limit, a, s, start: None, negative: false }
    }

    /// The same tail with every weight negated.
    pub fn negated(self) -> Self {
        match self {
            TailSpec::Geometric { a, q, start, negative } => {
                TailSpec::Geometric { a, q, start, negative: !negative }
            }
            TailSpec::Constant { a, start, negative } => {
                TailSpec::Constant { a, start, negative: !negative }
            }
            TailSpec::Convergent { limit, a, s, start, negative } => {
                TailSpec::Convergent { limit, a, s, start, negative: !negative }
            }
        }
    }

    pub fn is_negative(&self) -> bool {
        match *self {
            TailSpec::Geometric { negative, .. }
            | TailSpec::Constant { negative, .. }
            | TailSpec::Convergent { negative, .. } => negative,
        }
    }

    pub fn sign(&self) -> f64 {
        if self.is_negative() {
            -1.0
        } else {
            1.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidTail(msg.to_string()));
        match *self {
            TailSpec::Geometric { a, q, .. } => {
                if !(a.is_finite() && a > 0.0) {
                    return bad("geometric tail needs a > 0");
                }
                if !(q.is_finite() && q > 1.0) {
                    return bad("geometric tail needs q > 1");
                }
            }
            TailSpec::Constant { a, .. } => {
                if !(a.is_finite() && a >= 1.0) {
                    return bad("constant tail needs a >= 1");
                }
            }
            TailSpec::Convergent { limit, a, s, .. } => {
                if !(limit.is_finite() && limit >= 1.0) {
                    return bad("convergent tail needs limit >= 1");
                }
                if !(a.is_finite() && a > 0.0) {
                    return bad("convergent tail needs a > 0");
                }
                if !(s.is_finite() && s > 1.0) {
                    return bad("convergent tail needs s > 1");
                }
            }
        }
        Ok(())
    }

    /// `|T|` of the `k`-th tail term.
    pub fn magnitude(&self, k: u64) -> f64 {
        match *self {
            TailSpec::Geometric { a, q, .. } => a * q.powf(k as f64),
            TailSpec::Constant { a, .. } => a,
            TailSpec::Convergent { limit, a, s, .. } => limit + a * s.powf(-(k as f64)),
        }
    }

    /// Signed `k`-th tail term.
    pub fn term(&self, k: u64) -> f64 {
        self.sign() * self.magnitude(k)
    }

    /// Infimum of the tail magnitudes.
    pub fn inf_magnitude(&self) -> f64 {
        match *self {
            TailSpec::Geometric { a, .. } | TailSpec::Constant { a, .. } => a,
            TailSpec::Convergent { limit, .. } => limit,
        }
    }

    /// Supremum of the tail magnitudes.
    pub fn sup_magnitude(&self) -> f64 {
        match *self {
            TailSpec::Geometric { .. } => f64::INFINITY,
            TailSpec::Constant { a, .. } => a,
            TailSpec::Convergent { limit, a, .. } => limit + a,
        }
    }

    /// `lim |T_j|` (all three kinds converge in the extended reals).
    pub fn limit_magnitude(&self) -> f64 {
        match *self {
            TailSpec::Geometric { .. } => f64::INFINITY,
            TailSpec::Constant { a, .. } => a,
            TailSpec::Convergent { limit, .. } => limit,
        }
    }

    /// Number of tail magnitudes exactly equal to one; `None` means infinitely many.
    fn ones(&self) -> Option<usize> {
        match *self {
            TailSpec::Constant { a, .. } => {
                if a == 1.0 {
                    None
                } else {
                    Some(0)
                }
            }
            TailSpec::Geometric { a, q, .. } => {
                if a > 1.0 {
                    return Some(0);
                }
                let k = (-a.ln() / q.ln()).round();
                if k >= 0.0 && self.magnitude(k as u64) == 1.0 {
                    Some(1)
                } else {
                    Some(0)
                }
            }
            // limit >= 1 and a > 0 keep every term strictly above one.
            TailSpec::Convergent { .. } => Some(0),
        }
    }

    /// Infimum over tail magnitudes different from one.
    fn inf_magnitude_without_ones(&self) -> f64 {
        match *self {
            TailSpec::Constant { a, .. } => {
                if a == 1.0 {
                    f64::INFINITY
                } else {
                    a
                }
            }
            TailSpec::Geometric { a, q, .. } => {
                if a == 1.0 {
                    q
                } else {
                    a
                }
            }
            TailSpec::Convergent { limit, .. } => limit,
        }
    }

    fn inverse(&self) -> Option<TailSpec> {
        match *self {
            TailSpec::Constant { a, start, negative } if a == 1.0 => {
                Some(TailSpec::Constant { a, start, negative })
            }
            _ => None,
        }
    }

    fn powf(&self, beta: f64) -> Option<TailSpec> {
        match *self {
            TailSpec::Geometric { a, q, start, negative } => Some(TailSpec::Geometric {
                a: a.powf(beta),
                q: q.powf(beta),
                start,
                negative,
            }),
            TailSpec::Constant { a, start, negative } => {
                Some(TailSpec::Constant { a: a.powf(beta), start, negative })
            }
            TailSpec::Convergent { .. } => None,
        }
    }
}

/// The weight vector `T`: a finite head plus an optional infinite tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights", into = "RawWeights")]
pub struct WeightSpec {
    head: Vec<f64>,
    tail: Option<TailSpec>,
}

/// A weight list as read from input, possibly containing zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawWeights {
    pub head: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSpec>,
}

impl TryFrom<RawWeights> for WeightSpec {
    type Error = Error;

    fn try_from(raw: RawWeights) -> Result<Self> {
        WeightSpec::new(raw.head, raw.tail)
    }
}

impl From<WeightSpec> for RawWeights {
    fn from(spec: WeightSpec) -> Self {
        RawWeights { head: spec.head, tail: spec.tail }
    }
}

impl RawWeights {
    pub fn finite(head: Vec<f64>) -> Self {
        RawWeights { head, tail: None }
    }
}

impl WeightSpec {
    /// Builds a spec from nonzero weights.
    pub fn new(head: Vec<f64>, tail: Option<TailSpec>) -> Result<Self> {
        for &w in &head {
            if !w.is_finite() || w == 0.0 {
                return Err(Error::InvalidWeight { field: "head", value: w });
            }
        }
        if let Some(tail) = &tail {
            tail.validate()?;
        }
        if head.is_empty() && tail.is_none() {
            return Err(Error::DegenerateWeights);
        }
        Ok(WeightSpec { head, tail })
    }

    pub fn finite(head: Vec<f64>) -> Result<Self> {
        Self::new(head, None)
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn tail(&self) -> Option<&TailSpec> {
        self.tail.as_ref()
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    /// `|J|` for finite specs.
    pub fn len(&self) -> Option<usize> {
        self.is_finite().then_some(self.head.len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Head weights, failing for countable specs.
    pub fn finite_weights(&self) -> Result<&[f64]> {
        if self.is_finite() {
            Ok(&self.head)
        } else {
            Err(Error::InfiniteUnsupported)
        }
    }

    pub fn has_positive(&self) -> bool {
        self.head.iter().any(|&w| w > 0.0) || self.tail.is_some_and(|t| !t.is_negative())
    }

    pub fn has_negative(&self) -> bool {
        self.head.iter().any(|&w| w < 0.0) || self.tail.is_some_and(|t| t.is_negative())
    }

    pub fn all_positive(&self) -> bool {
        !self.has_negative()
    }

    pub fn all_negative(&self) -> bool {
        !self.has_positive()
    }

    /// Infimum of all weights (signed).
    pub fn inf(&self) -> f64 {
        let head = self.head.iter().copied().fold(f64::INFINITY, f64::min);
        let tail = match self.tail {
            None => f64::INFINITY,
            Some(t) if t.is_negative() => -t.sup_magnitude(),
            Some(t) => t.inf_magnitude(),
        };
        head.min(tail)
    }

    /// Supremum of all weights (signed).
    pub fn sup(&self) -> f64 {
        let head = self.head.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tail = match self.tail {
            None => f64::NEG_INFINITY,
            Some(t) if t.is_negative() => -t.inf_magnitude(),
            Some(t) => t.sup_magnitude(),
        };
        head.max(tail)
    }

    /// `T^{-1}`, when representable.
    pub fn inverse(&self) -> Option<WeightSpec> {
        let head = self.head.iter().map(|w| 1.0 / w).collect();
        let tail = match &self.tail {
            None => None,
            Some(t) => Some(t.inverse()?),
        };
        Some(WeightSpec { head, tail })
    }

    /// `T^β` for an all-positive spec, when representable.
    pub fn powf(&self, beta: f64) -> Option<WeightSpec> {
        if !self.all_positive() || !(beta > 0.0) {
            return None;
        }
        let head = self.head.iter().map(|w| w.powf(beta)).collect();
        let tail = match &self.tail {
            None => None,
            Some(t) => Some(t.powf(beta)?),
        };
        Some(WeightSpec { head, tail })
    }

    /// Number of weights exactly equal to one; `None` means infinitely many.
    fn ones(&self) -> Option<usize> {
        let head = self.head.iter().filter(|&&w| w == 1.0).count();
        match &self.tail {
            Some(t) if !t.is_negative() => t.ones().map(|n| n + head),
            _ => Some(head),
        }
    }

    fn inf_without_ones(&self) -> f64 {
        let head = self
            .head
            .iter()
            .copied()
            .filter(|&w| w != 1.0)
            .fold(f64::INFINITY, f64::min);
        match &self.tail {
            Some(t) if !t.is_negative() => head.min(t.inf_magnitude_without_ones()),
            _ => head,
        }
    }

    fn all_ones(&self) -> bool {
        self.head.iter().all(|&w| w == 1.0)
            && match self.tail {
                None => true,
                Some(TailSpec::Constant { a, negative, .. }) => a == 1.0 && !negative,
                Some(_) => false,
            }
    }
}

/// Removes zero weights, reporting whether any were present.
pub fn reduce_zero(raw: &RawWeights) -> Result<(WeightSpec, bool)> {
    let had_zero = raw.head.iter().any(|&w| w == 0.0);
    let head: Vec<f64> = raw.head.iter().copied().filter(|&w| w != 0.0).collect();
    if head.is_empty() && raw.tail.is_none() {
        return Err(Error::DegenerateWeights);
    }
    Ok((WeightSpec::new(head, raw.tail)?, had_zero))
}

/// Splits `T` into `T^>` (positive entries) and the negative entries, keeping order.
///
/// Either part may be empty; an empty part is returned as `None`.
pub fn split_signs(spec: &WeightSpec) -> (Option<WeightSpec>, Option<WeightSpec>) {
    let (pos, neg): (Vec<f64>, Vec<f64>) = spec.head.iter().partition(|&&w| w > 0.0);
    let (pos_tail, neg_tail) = match spec.tail {
        Some(t) if t.is_negative() => (None, Some(t)),
        Some(t) => (Some(t), None),
        None => (None, None),
    };
    let build = |head: Vec<f64>, tail: Option<TailSpec>| {
        (!head.is_empty() || tail.is_some()).then_some(WeightSpec { head, tail })
    };
    (build(pos, pos_tail), build(neg, neg_tail))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignCase {
    AllPositive,
    AllNegative,
    Mixed,
    SingleWeight,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ACase {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
}

/// Symbolic description of the full solution set `𝔉_T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySummary {
    /// `|J| = 1`, `T_1 = 1`: every distribution.
    AllDistributions,
    /// `{δ₀}`.
    DiracOnly,
    /// `{δ_c : c ∈ ℝ}` (all weights equal one).
    AllDiracs,
    /// `{δ₀} ∪ {δ_c : c > 0}` (A1, A2).
    PositiveDiracs,
    /// `{δ₀}` plus all `F` with `0 < l_F ≤ u_F < ∞` and `u_F / l_F ≤ ratio_bound` (A3).
    BoundedSupport { ratio_bound: f64 },
    /// A5/A6: needs the characteristic exponent and the generated group.
    Unresolved,
    /// `inf T_j < 1`: no positive solutions. Negative solutions, if any, mirror
    /// the positive solutions for `T^{-1}` (classified in `negative`).
    PositiveEmpty { negative: Option<Box<Classification>> },
    /// Finite all-negative `T`: `δ₀` and the mixtures `αG + α^n 𝕌_T G`.
    Minimax { weights: Vec<f64> },
    /// Mixed signs: `δ₀` and the solutions for `T^>` concentrated on `(−∞, 0)`.
    NegativeOfPositivePart { positive: Box<Classification> },
    /// A zero weight was removed: only members concentrated on `(−∞, 0]` survive.
    NonPositiveRestriction { inner: Box<FamilySummary> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub sign_case: SignCase,
    pub had_zero: bool,
    pub a_case: Option<ACase>,
    pub summary: FamilySummary,
    /// The positive spec (T itself, `T^{-1}`, `T^>` or `(T^>)^{-1}`) whose
    /// A5/A6 analysis the summary depends on, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_spec: Option<WeightSpec>,
}

impl Classification {
    pub fn describe(&self) -> String {
        describe_summary(&self.summary)
    }
}

fn describe_summary(summary: &FamilySummary) -> String {
    match summary {
        FamilySummary::AllDistributions => "all distributions".into(),
        FamilySummary::DiracOnly => "{δ0} only".into(),
        FamilySummary::AllDiracs => "{δc: c ∈ ℝ}".into(),
        FamilySummary::PositiveDiracs => "{δ0} ∪ {δc: c > 0}".into(),
        FamilySummary::BoundedSupport { ratio_bound } => {
            format!("{{δ0}} ∪ {{F: 0 < l_F ≤ u_F < ∞, u_F/l_F ≤ {ratio_bound}}}")
        }
        FamilySummary::Unresolved => "unresolved (A5/A6): see characteristic exponent and group".into(),
        FamilySummary::PositiveEmpty { negative: None } => "positive solutions empty; {δ0} only".into(),
        FamilySummary::PositiveEmpty { negative: Some(inv) } => format!(
            "positive solutions empty; {{δ0}} ∪ mirror(-1/W) of positive solutions for T^-1 [{}]",
            describe_summary(&inv.summary)
        ),
        FamilySummary::Minimax { weights } => format!(
            "{{δ0}} ∪ {{αG + α^n U_T G}} with n = {} and G solving the minimax equation",
            weights.len()
        ),
        FamilySummary::NegativeOfPositivePart { positive } => format!(
            "{{δ0}} ∪ negative solutions for T^> [{}]",
            describe_summary(&positive.summary)
        ),
        FamilySummary::NonPositiveRestriction { inner } => {
            format!("members of [{}] concentrated on (-inf, 0]", describe_summary(inner))
        }
    }
}

/// Classifies a zero-reduced spec.
pub fn classify(spec: &WeightSpec) -> Classification {
    classify_reduced(spec, false)
}

/// Classifies a spec together with the zero-weight flag from [`reduce_zero`].
pub fn classify_reduced(spec: &WeightSpec, had_zero: bool) -> Classification {
    let mut out = if spec.len() == Some(1) {
        let summary = if spec.head[0] == 1.0 {
            FamilySummary::AllDistributions
        } else {
            FamilySummary::DiracOnly
        };
        Classification {
            sign_case: SignCase::SingleWeight,
            had_zero: false,
            a_case: None,
            summary,
            spectral_spec: None,
        }
    } else if spec.all_positive() {
        classify_positive(spec)
    } else if spec.all_negative() {
        let summary = match spec.len() {
            Some(_) => FamilySummary::Minimax { weights: spec.head.clone() },
            None => FamilySummary::DiracOnly,
        };
        Classification {
            sign_case: SignCase::AllNegative,
            had_zero: false,
            a_case: None,
            summary,
            spectral_spec: None,
        }
    } else {
        let positive = split_signs(spec).0.expect("mixed spec has positive weights");
        let inner = classify_reduced(&positive, false);
        let spectral_spec = inner.spectral_spec.clone();
        Classification {
            sign_case: SignCase::Mixed,
            had_zero: false,
            a_case: None,
            summary: FamilySummary::NegativeOfPositivePart { positive: Box::new(inner) },
            spectral_spec,
        }
    };

    if had_zero {
        out.had_zero = true;
        out.summary = if spec.all_negative() {
            FamilySummary::DiracOnly
        } else {
            FamilySummary::NonPositiveRestriction { inner: Box::new(out.summary) }
        };
    }
    out
}

fn classify_positive(spec: &WeightSpec) -> Classification {
    let mut out = Classification {
        sign_case: SignCase::AllPositive,
        had_zero: false,
        a_case: None,
        summary: FamilySummary::DiracOnly,
        spectral_spec: None,
    };
    if spec.all_ones() {
        // Two or more unit weights: A1 holds and 𝔉_T^+ = {δ_c : c > 0} sits inside all Diracs.
        out.a_case = Some(ACase::A1);
        out.summary = FamilySummary::AllDiracs;
        return out;
    }
    let inf = spec.inf();
    if inf < 1.0 {
        let negative = if spec.sup() <= 1.0 {
            spec.inverse().map(|inv| Box::new(classify_positive(&inv)))
        } else {
            None
        };
        out.spectral_spec = negative.as_ref().and_then(|c| c.spectral_spec.clone());
        out.summary = FamilySummary::PositiveEmpty { negative };
        return out;
    }

    let ones = spec.ones();
    let tail = spec.tail;
    let liminf = tail.map(|t| t.limit_magnitude());
    let a_case = match ones {
        None => ACase::A1,
        Some(n) if n >= 2 => ACase::A1,
        Some(n) => {
            if liminf == Some(1.0) {
                ACase::A2
            } else if n == 1 {
                ACase::A3
            } else {
                match liminf {
                    None => ACase::A5,
                    Some(l) if l == f64::INFINITY => ACase::A6,
                    Some(_) => ACase::A4,
                }
            }
        }
    };
    out.a_case = Some(a_case);
    out.summary = match a_case {
        ACase::A1 | ACase::A2 => FamilySummary::PositiveDiracs,
        ACase::A3 => FamilySummary::BoundedSupport { ratio_bound: spec.inf_without_ones() },
        ACase::A4 => FamilySummary::DiracOnly,
        ACase::A5 | ACase::A6 => {
            out.spectral_spec = Some(spec.clone());
            FamilySummary::Unresolved
        }
    };
    out
}

/// `inf_{j ∈ J*} T_j` over weights different from one, for A3 specs.
pub fn a3_ratio_bound(spec: &WeightSpec) -> Result<f64> {
    match classify(spec).summary {
        FamilySummary::BoundedSupport { ratio_bound } => Ok(ratio_bound),
        _ => Err(Error::Precondition("spec is not in case A3".into())),
    }
}
