//! Distributions described through their survival function.
//!
//! Conventions: `F(t) = P(W < t)` is left-continuous, `F̄(t) = P(W ≥ t)`,
//! and the right limits `F(t+) = P(W ≤ t)`, `F̄(t+) = P(W > t)` are evaluated
//! in closed form, never by perturbing `t`.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::profile::PeriodicProfile;
use crate::error::{Error, Result};

/// Continuous distribution with piecewise-linear CDF through `(x_i, F_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseCdf {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseCdf {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidModel(format!("bounded: {m}")));
        if knots.len() < 2 {
            return bad("need at least two knots");
        }
        if knots.iter().any(|(x, p)| !x.is_finite() || !p.is_finite()) {
            return bad("knots must be finite");
        }
        if knots.windows(2).any(|w| !(w[0].0 < w[1].0) || w[0].1 > w[1].1) {
            return bad("knot positions must increase and CDF values must not decrease");
        }
        if knots[0].1 != 0.0 || knots[knots.len() - 1].1 != 1.0 {
            return bad("CDF must run from 0 to 1");
        }
        Ok(PiecewiseCdf { knots })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, 0.0), (hi, 1.0)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn lower(&self) -> f64 {
        self.knots[0].0
    }

    pub fn upper(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= self.lower() {
            return 0.0;
        }
        if t >= self.upper() {
            return 1.0;
        }
        let i = self.knots.partition_point(|k| k.0 <= t) - 1;
        let ((x0, p0), (x1, p1)) = (self.knots[i], self.knots[i + 1]);
        p0 + (p1 - p0) * (t - x0) / (x1 - x0)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.knots.partition_point(|k| k.1 < u);
        if i == 0 {
            return self.lower();
        }
        let ((x0, p0), (x1, p1)) = (self.knots[i - 1], self.knots[i]);
        (x0 + (u - p0) / (p1 - p0) * (x1 - x0)).clamp(x0, x1)
    }

    fn max_density(&self) -> f64 {
        self.knots.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).fold(0.0, f64::max)
    }
}

/// Table of `(t_i, ν_i)`, `0 < t_0 < … < t_N`, interpolated linearly in `(ln t, ν)`.
///
/// `ν = ν_0` on `(0, t_0]` (so `ν_0 > 0` puts an atom at zero) and the mass
/// `exp(−ν_N)` left above `t_N` sits on an atom at `t_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct NuTable {
    t: Vec<f64>,
    nu: Vec<f64>,
}

impl NuTable {
    pub fn new(t: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidModel(format!("tabulated: {m}")));
        if t.is_empty() || t.len() != nu.len() {
            return bad("t and nu must be nonempty and of equal length");
        }
        if !(t[0] > 0.0) || t.iter().any(|x| !x.is_finite()) || t.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("t must be positive, finite and strictly increasing");
        }
        if !(nu[0] >= 0.0) || nu.iter().any(|x| !x.is_finite()) || nu.windows(2).any(|w| w[0] > w[1]) {
            return bad("nu must be finite, nonnegative and nondecreasing");
        }
        Ok(NuTable { t, nu })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn nu_values(&self) -> &[f64] {
        &self.nu
    }

    fn last(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    fn interp(&self, x: f64) -> f64 {
        if x <= self.t[0] {
            return self.nu[0];
        }
        let i = self.t.partition_point(|&s| s < x) - 1;
        if i + 1 >= self.t.len() {
            return self.nu[self.nu.len() - 1];
        }
        let (a, b) = (self.t[i].ln(), self.t[i + 1].ln());
        let (na, nb) = (self.nu[i], self.nu[i + 1]);
        if na == nb {
            return na;
        }
        na + (nb - na) * (x.ln() - a) / (b - a)
    }

    pub fn nu_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x <= self.last() {
            self.interp(x)
        } else {
            f64::INFINITY
        }
    }

    pub fn nu_right(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x < self.last() {
            self.interp(x)
        } else {
            f64::INFINITY
        }
    }

    /// Smallest `t` with `ν(t+) ≥ e`.
    fn inverse_nu(&self, e: f64) -> f64 {
        if e <= self.nu[0] {
            return 0.0;
        }
        let i = self.nu.partition_point(|&v| v < e);
        if i >= self.nu.len() {
            return self.last();
        }
        let (na, nb) = (self.nu[i - 1], self.nu[i]);
        let (a, b) = (self.t[i - 1].ln(), self.t[i].ln());
        (a + (e - na) / (nb - na) * (b - a)).exp().clamp(self.t[i - 1], self.t[i])
    }
}

/// Tail-probability envelope near `0` or near `±∞`.
///
/// Near edges bound `P(0 < ±W < x)` for `x ≤ 1`; far edges bound `P(±W ≥ x)` for `x ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeBound {
    /// The probability is zero for `x ≤ d` (near) or `x > d` (far).
    Vanishes { d: f64 },
    /// At most `c·x^κ` (near) or `c·x^{−κ}` (far).
    Power { c: f64, kappa: f64 },
    Unknown,
}

impl EdgeBound {
    /// Bound for the near edge at `x ∈ (0, 1]`.
    pub fn near(&self, x: f64) -> f64 {
        match *self {
            EdgeBound::Vanishes { d } if x <= d => 0.0,
            EdgeBound::Vanishes { .. } => 1.0,
            EdgeBound::Power { c, kappa } => (c * x.powf(kappa)).min(1.0),
            EdgeBound::Unknown => f64::INFINITY,
        }
    }

    /// Reflects through `x ↦ 1/x` (near ↔ far).
    fn reciprocal(self) -> Self {
        match self {
            EdgeBound::Vanishes { d } => EdgeBound::Vanishes { d: 1.0 / d },
            other => other,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edges {
    pub near_pos: EdgeBound,
    pub near_neg: EdgeBound,
    pub far_pos: EdgeBound,
    pub far_neg: EdgeBound,
}

/// `sup_y y²e^{−y}`, so that `e^{−y} ≤ FAR_EXP / y²`.
const FAR_EXP: f64 = 0.541_341_132_946_450_9;

fn exp_edges(near_c: f64, far_c: f64, alpha: f64) -> Edges {
    Edges {
        near_pos: EdgeBound::Power { c: near_c, kappa: alpha },
        near_neg: EdgeBound::Vanishes { d: f64::INFINITY },
        far_pos: EdgeBound::Power { c: FAR_EXP / (far_c * far_c), kappa: 2.0 * alpha },
        far_neg: EdgeBound::Vanishes { d: 0.0 },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub enum SurvivalModel {
    Dirac { c: f64 },
    /// `F̄(t) = exp(−c·t^α)` on `t > 0`.
    Weibull { c: f64, alpha: f64 },
    /// `F̄(t) = exp(−h(t)·t^α)`.
    PeriodicWeibull(PeriodicProfile),
    BoundedSupport(PiecewiseCdf),
    Tabulated(NuTable),
    /// `ℒ(−1/W)`, with `0 ↦ 0`.
    Mirror(Box<SurvivalModel>),
    /// `ℒ(−W)`.
    Negated(Box<SurvivalModel>),
    /// `Σ p_i·F_i`.
    Mixture(Vec<(f64, SurvivalModel)>),
    /// `ℒ(min_j T_j·V_j)` with `V_j` i.i.d. from `inner`.
    MinImage { weights: Vec<f64>, inner: Box<SurvivalModel> },
}

impl SurvivalModel {
    pub fn dirac(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::InvalidModel("dirac: c must be finite".into()));
        }
        Ok(SurvivalModel::Dirac { c })
    }

    /// `Weib(c, α)`; `c = 0` gives `δ₀`.
    pub fn weibull(c: f64, alpha: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidModel(format!("weibull: c must be finite and >= 0, got {c}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidModel(format!("weibull: alpha must be finite and > 0, got {alpha}")));
        }
        Ok(if c == 0.0 { SurvivalModel::Dirac { c: 0.0 } } else { SurvivalModel::Weibull { c, alpha } })
    }

    /// `r-Weib(h, α)`; rejects profiles outside `𝔥(r, α)`.
    pub fn periodic(profile: PeriodicProfile) -> Result<Self> {
        profile.validate().map_err(|v| Error::InvalidProfile(v.to_string()))?;
        Ok(SurvivalModel::PeriodicWeibull(profile))
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Ok(SurvivalModel::BoundedSupport(PiecewiseCdf::uniform(lo, hi)?))
    }

    pub fn bounded(knots: Vec<(f64, f64)>) -> Result<Self> {
        Ok(SurvivalModel::BoundedSupport(PiecewiseCdf::new(knots)?))
    }

    pub fn tabulated(t: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        Ok(SurvivalModel::Tabulated(NuTable::new(t, nu)?))
    }

    pub fn mixture(components: Vec<(f64, SurvivalModel)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidModel("mixture: no components".into()));
        }
        if components.iter().any(|(p, _)| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidModel("mixture: weights must be finite and >= 0".into()));
        }
        let total: f64 = components.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("mixture: weights sum to {total}, not 1")));
        }
        Ok(SurvivalModel::Mixture(components))
    }

    pub fn min_image(weights: Vec<f64>, inner: SurvivalModel) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w != 0.0)) {
            return Err(Error::InvalidModel("minimage: weights must be finite and nonzero".into()));
        }
        Ok(SurvivalModel::MinImage { weights, inner: Box::new(inner) })
    }

    pub fn is_delta_zero(&self) -> bool {
        matches!(self, SurvivalModel::Dirac { c } if *c == 0.0)
    }

    /// `F̄(t) = P(W ≥ t)`.
    pub fn survival(&self, t: f64) -> f64 {
        use SurvivalModel::*;
        match self {
            Dirac { c } => indicator(t <= *c),
            Weibull { c, alpha } => (-weibull_nu(*c, *alpha, t)).exp(),
            PeriodicWeibull(p) => (-p.nu_left(t)).exp(),
            BoundedSupport(g) => 1.0 - g.cdf(t),
            Tabulated(tab) => (-tab.nu_left(t)).exp(),
            Mirror(inner) => {
                if t < 0.0 {
                    inner.survival(-1.0 / t) + inner.cdf_right(0.0)
                } else if t == 0.0 {
                    inner.cdf_right(0.0)
                } else {
                    inner.cdf(0.0) - inner.cdf(-1.0 / t)
                }
            }
            Negated(inner) => inner.cdf_right(-t),
            Mixture(parts) => parts.iter().map(|(p, m)| p * m.survival(t)).sum(),
            MinImage { weights, inner } => weights
                .iter()
                .map(|&w| if w > 0.0 { inner.survival(t / w) } else { inner.cdf_right(t / w) })
                .product(),
        }
    }

    /// `F̄(t+) = P(W > t)`.
    pub fn survival_right(&self, t: f64) -> f64 {
        use SurvivalModel::*;
        match self {
            Dirac { c } => indicator(t < *c),
            Weibull { c, alpha } => (-weibull_nu(*c, *alpha, t)).exp(),
            PeriodicWeibull(p) => (-p.nu_right(t)).exp(),
            BoundedSupport(g) => 1.0 - g.cdf(t),
            Tabulated(tab) => (-tab.nu_right(t)).exp(),
            Mirror(inner) => {
                if t < 0.0 {
                    inner.survival_right(-1.0 / t) + inner.cdf_right(0.0)
                } else if t == 0.0 {
                    inner.cdf(0.0)
                } else {
                    inner.cdf(0.0) - inner.cdf_right(-1.0 / t)
                }
            }
            Negated(inner) => inner.cdf(-t),
            Mixture(parts) => parts.iter().map(|(p, m)| p * m.survival_right(t)).sum(),
            MinImage { weights, inner } => weights
                .iter()
                .map(|&w| if w > 0.0 { inner.survival_right(t / w) } else { inner.cdf(t / w) })
                .product(),
        }
    }

    /// `F(t) = P(W < t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        use SurvivalModel::*;
        match self {
            Weibull { c, alpha } => -(-weibull_nu(*c, *alpha, t)).exp_m1(),
            PeriodicWeibull(p) => -(-p.nu_left(t)).exp_m1(),
            Tabulated(tab) => -(-tab.nu_left(t)).exp_m1(),
            BoundedSupport(g) => g.cdf(t),
            Mirror(inner) if t < 0.0 => inner.cdf(-1.0 / t) - inner.cdf_right(0.0),
            Negated(inner) => inner.survival_right(-t),
            Mixture(parts) => parts.iter().map(|(p, m)| p * m.cdf(t)).sum(),
            _ => 1.0 - self.survival(t),
        }
    }

    /// `F(t+) = P(W ≤ t)`.
    pub fn cdf_right(&self, t: f64) -> f64 {
        use SurvivalModel::*;
        match self {
            Weibull { c, alpha } => -(-weibull_nu(*c, *alpha, t)).exp_m1(),
            PeriodicWeibull(p) => -(-p.nu_right(t)).exp_m1(),
            Tabulated(tab) => -(-tab.nu_right(t)).exp_m1(),
            BoundedSupport(g) => g.cdf(t),
            Mirror(inner) if t < 0.0 => inner.cdf_right(-1.0 / t) - inner.cdf_right(0.0),
            Negated(inner) => inner.survival(-t),
            Mixture(parts) => parts.iter().map(|(p, m)| p * m.cdf_right(t)).sum(),
            _ => 1.0 - self.survival_right(t),
        }
    }

    /// `ν(t) = −ln F̄(t)`, `+∞` where `F̄(t) = 0`.
    pub fn nu_of(&self, t: f64) -> f64 {
        match self {
            SurvivalModel::Weibull { c, alpha } => weibull_nu(*c, *alpha, t),
            SurvivalModel::PeriodicWeibull(p) => p.nu_left(t),
            SurvivalModel::Tabulated(tab) => tab.nu_left(t),
            _ => -self.survival(t).ln(),
        }
    }

    /// Mass of the atom at `t`.
    pub fn atom(&self, t: f64) -> f64 {
        (self.survival(t) - self.survival_right(t)).max(0.0)
    }

    /// Closed convex hull of the support.
    pub fn support(&self) -> (f64, f64) {
        use SurvivalModel::*;
        match self {
            Dirac { c } => (*c, *c),
            Weibull { .. } | PeriodicWeibull(_) => (0.0, f64::INFINITY),
            BoundedSupport(g) => (g.lower(), g.upper()),
            Tabulated(tab) => {
                let zeros = tab.nu.partition_point(|&v| v == 0.0);
                let lo = if zeros == 0 { 0.0 } else { tab.t[zeros - 1] };
                (lo, tab.last())
            }
            Mirror(inner) => {
                let (l, u) = inner.support();
                let has_zero = inner.atom(0.0) > 0.0;
                if l >= 0.0 {
                    let lo = if l > 0.0 { -1.0 / l } else { f64::NEG_INFINITY };
                    let hi = if has_zero || u.is_infinite() { 0.0 } else { -1.0 / u };
                    (lo, hi)
                } else if u <= 0.0 {
                    let lo = if has_zero || l.is_infinite() { 0.0 } else { -1.0 / l };
                    let hi = if u < 0.0 { -1.0 / u } else { f64::INFINITY };
                    (lo, hi)
                } else {
                    (f64::NEG_INFINITY, f64::INFINITY)
                }
            }
            Negated(inner) => {
                let (l, u) = inner.support();
                (-u, -l)
            }
            Mixture(parts) => parts
                .iter()
                .filter(|(p, _)| *p > 0.0)
                .map(|(_, m)| m.support())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (l, u)| (a.min(l), b.max(u))),
            MinImage { weights, inner } => {
                let (l, u) = inner.support();
                weights
                    .iter()
                    .map(|&w| if w > 0.0 { (w * l, w * u) } else { (w * u, w * l) })
                    .fold((f64::INFINITY, f64::INFINITY), |(a, b), (lo, hi)| (a.min(lo), b.min(hi)))
            }
        }
    }

    /// Edge envelopes used to bound truncated infinite products.
    pub fn edges(&self) -> Edges {
        use SurvivalModel::*;
        let none = EdgeBound::Vanishes { d: f64::INFINITY };
        match self {
            Dirac { c } => {
                let c = *c;
                Edges {
                    near_pos: if c > 0.0 { EdgeBound::Vanishes { d: c } } else { none },
                    near_neg: if c < 0.0 { EdgeBound::Vanishes { d: -c } } else { none },
                    far_pos: EdgeBound::Vanishes { d: c.max(0.0) },
                    far_neg: EdgeBound::Vanishes { d: (-c).max(0.0) },
                }
            }
            Weibull { c, alpha } => exp_edges(*c, *c, *alpha),
            PeriodicWeibull(p) => exp_edges(p.g_max(), p.g_min() * p.r().powf(-p.alpha()), p.alpha()),
            BoundedSupport(g) => {
                let (l, u) = (g.lower(), g.upper());
                let slope = EdgeBound::Power { c: g.max_density(), kappa: 1.0 };
                Edges {
                    near_pos: if l > 0.0 { EdgeBound::Vanishes { d: l } } else if u <= 0.0 { none } else { slope },
                    near_neg: if u < 0.0 { EdgeBound::Vanishes { d: -u } } else if l >= 0.0 { none } else { slope },
                    far_pos: EdgeBound::Vanishes { d: u.max(0.0) },
                    far_neg: EdgeBound::Vanishes { d: (-l).max(0.0) },
                }
            }
            Tabulated(tab) => Edges {
                near_pos: EdgeBound::Vanishes { d: tab.t[0] },
                near_neg: none,
                far_pos: EdgeBound::Vanishes { d: tab.last() },
                far_neg: EdgeBound::Vanishes { d: 0.0 },
            },
            Mirror(inner) => {
                let e = inner.edges();
                Edges {
                    near_pos: e.far_neg.reciprocal(),
                    near_neg: e.far_pos.reciprocal(),
                    far_pos: e.near_neg.reciprocal(),
                    far_neg: e.near_pos.reciprocal(),
                }
            }
            Negated(inner) => {
                let e = inner.edges();
                Edges { near_pos: e.near_neg, near_neg: e.near_pos, far_pos: e.far_neg, far_neg: e.far_pos }
            }
            Mixture(_) | MinImage { .. } => Edges {
                near_pos: EdgeBound::Unknown,
                near_neg: EdgeBound::Unknown,
                far_pos: EdgeBound::Unknown,
                far_neg: EdgeBound::Unknown,
            },
        }
    }

    /// Generalized inverse `inf{t : F(t+) ≥ u}`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidProbability(u));
        }
        let e = -(-u).ln_1p();
        Ok(match self {
            SurvivalModel::Dirac { c } => *c,
            SurvivalModel::Weibull { c, alpha } => (e / c).powf(1.0 / alpha),
            SurvivalModel::PeriodicWeibull(p) => p.inverse_nu(e),
            SurvivalModel::BoundedSupport(g) => g.quantile(u),
            SurvivalModel::Tabulated(tab) => tab.inverse_nu(e),
            _ => self.bisect_quantile(u),
        })
    }

    /// Exact bisection over the ordered set of doubles (at most 64 steps).
    fn bisect_quantile(&self, u: f64) -> f64 {
        let (l, h) = self.support();
        let lo_floor = order_key(f64::NEG_INFINITY);
        let mut lo = if l.is_finite() { (order_key(l) - 1).max(lo_floor) } else { lo_floor };
        let mut hi = order_key(f64::INFINITY);
        if h.is_finite() && self.cdf_right(h) >= u {
            hi = order_key(h);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.cdf_right(from_key(mid)) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        from_key(hi)
    }

    /// One variate.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use SurvivalModel::*;
        match self {
            Dirac { c } => *c,
            Weibull { c, alpha } => (exp1(rng) / c).powf(1.0 / alpha),
            PeriodicWeibull(p) => p.inverse_nu(exp1(rng)),
            Tabulated(tab) => tab.inverse_nu(exp1(rng)),
            BoundedSupport(g) => g.quantile(rng.sample::<f64, _>(Open01)),
            Mirror(inner) => {
                let w = inner.draw(rng);
                if w == 0.0 {
                    0.0
                } else {
                    -1.0 / w
                }
            }
            Negated(inner) => -inner.draw(rng),
            Mixture(parts) => {
                let u: f64 = rng.sample(Open01);
                let mut acc = 0.0;
                for (p, m) in parts {
                    acc += p;
                    if u < acc {
                        return m.draw(rng);
                    }
                }
                parts[parts.len() - 1].1.draw(rng)
            }
            MinImage { weights, inner } => {
                weights.iter().map(|w| w * inner.draw(rng)).fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// `ℒ(W^{1/β})` for `W ≥ 0`.
    pub fn power_transform(&self, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Precondition(format!("power must be finite and > 0, got {beta}")));
        }
        let negative = || Err(Error::Precondition("power transform needs a model on [0, ∞)".into()));
        match self {
            SurvivalModel::Dirac { c } if *c >= 0.0 => Ok(SurvivalModel::Dirac { c: c.powf(1.0 / beta) }),
            SurvivalModel::Dirac { .. } => negative(),
            SurvivalModel::Weibull { c, alpha } => Ok(SurvivalModel::Weibull { c: *c, alpha: alpha * beta }),
            SurvivalModel::PeriodicWeibull(p) => Ok(SurvivalModel::PeriodicWeibull(p.power_transform(beta)?)),
            SurvivalModel::Tabulated(tab) => {
                let t = tab.t.iter().map(|x| x.powf(1.0 / beta)).collect();
                SurvivalModel::tabulated(t, tab.nu.clone())
            }
            SurvivalModel::Mixture(parts) => parts
                .iter()
                .map(|(p, m)| Ok((*p, m.power_transform(beta)?)))
                .collect::<Result<Vec<_>>>()
                .map(SurvivalModel::Mixture),
            SurvivalModel::BoundedSupport(g) if g.lower() >= 0.0 => Err(Error::InvalidModel(
                "bounded: piecewise-linear CDF has no closed-form power transform".into(),
            )),
            _ => negative(),
        }
    }

    /// `ℒ(−1/W)`; an involution (wrappers unwrap, `δ_c ↦ δ_{−1/c}`, `δ₀ ↦ δ₀`).
    pub fn mirror_reciprocal(&self) -> Self {
        match self {
            SurvivalModel::Mirror(inner) => (**inner).clone(),
            SurvivalModel::Dirac { c } if *c == 0.0 => SurvivalModel::Dirac { c: 0.0 },
            SurvivalModel::Dirac { c } => SurvivalModel::Dirac { c: -1.0 / c },
            other => SurvivalModel::Mirror(Box::new(other.clone())),
        }
    }

    /// `ℒ(−W)`.
    pub fn negate(&self) -> Self {
        match self {
            SurvivalModel::Negated(inner) => (**inner).clone(),
            SurvivalModel::Dirac { c } => SurvivalModel::Dirac { c: -c },
            other => SurvivalModel::Negated(Box::new(other.clone())),
        }
    }

    /// Canonical representation of lattice points within relative `tol`, so
    /// that rounded copies of one atom compare equal; other points unchanged.
    pub fn snap_lattice(&self, t: f64, tol: f64) -> f64 {
        match self {
            SurvivalModel::PeriodicWeibull(p) => p.snap(t, tol),
            SurvivalModel::Mirror(inner) if t != 0.0 => -1.0 / inner.snap_lattice(-1.0 / t, tol),
            SurvivalModel::Negated(inner) => -inner.snap_lattice(-t, tol),
            SurvivalModel::Mixture(parts) => parts
                .iter()
                .find(|(_, m)| m.near_lattice_point(t, tol))
                .map_or(t, |(_, m)| m.snap_lattice(t, tol)),
            _ => t,
        }
    }

    /// Whether `t` sits on (or within relative `tol` of) a lattice atom or breakpoint.
    pub fn near_lattice_point(&self, t: f64, tol: f64) -> bool {
        match self {
            SurvivalModel::PeriodicWeibull(p) => p.near_breakpoint(t, tol),
            SurvivalModel::Mirror(inner) => t != 0.0 && inner.near_lattice_point(-1.0 / t, tol),
            SurvivalModel::Negated(inner) => inner.near_lattice_point(-t, tol),
            SurvivalModel::Mixture(parts) => parts.iter().any(|(_, m)| m.near_lattice_point(t, tol)),
            _ => false,
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn weibull_nu(c: f64, alpha: f64, t: f64) -> f64 {
    if t > 0.0 {
        c * t.powf(alpha)
    } else {
        0.0
    }
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -u.ln()
}

/// Order-preserving map from doubles (no NaN) to integers.
fn order_key(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    if b < 0 {
        i64::MIN - b
    } else {
        b
    }
}

fn from_key(k: i64) -> f64 {
    if k < 0 {
        f64::from_bits((i64::MIN - k) as u64)
    } else {
        f64::from_bits(k as u64)
    }
}

/// JSON form of a [`SurvivalModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Dirac {
        c: f64,
    },
    Weibull {
        c: f64,
        alpha: f64,
    },
    Rweib {
        r: f64,
        alpha: f64,
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decay: Option<Vec<f64>>,
    },
    DiscreteWeibull {
        r: f64,
        alpha: f64,
        y: f64,
        c: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Bounded {
        knots: Vec<(f64, f64)>,
    },
    Tabulated {
        t: Vec<f64>,
        nu: Vec<f64>,
    },
    Mirror {
        inner: Box<ModelSpec>,
    },
    Negate {
        inner: Box<ModelSpec>,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
    Minimage {
        weights: Vec<f64>,
        inner: Box<ModelSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub model: ModelSpec,
}

impl TryFrom<ModelSpec> for SurvivalModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Dirac { c } => SurvivalModel::dirac(c),
            ModelSpec::Weibull { c, alpha } => SurvivalModel::weibull(c, alpha),
            ModelSpec::Rweib { r, alpha, breakpoints, levels, decay } => {
                SurvivalModel::periodic(PeriodicProfile::new(r, alpha, breakpoints, levels, decay)?)
            }
            ModelSpec::DiscreteWeibull { r, alpha, y, c } => {
                SurvivalModel::periodic(PeriodicProfile::discrete(r, alpha, y, c)?)
            }
            ModelSpec::Uniform { lo, hi } => SurvivalModel::uniform(lo, hi),
            ModelSpec::Bounded { knots } => SurvivalModel::bounded(knots),
            ModelSpec::Tabulated { t, nu } => SurvivalModel::tabulated(t, nu),
            ModelSpec::Mirror { inner } => Ok(SurvivalModel::Mirror(Box::new((*inner).try_into()?))),
            ModelSpec::Negate { inner } => Ok(SurvivalModel::Negated(Box::new((*inner).try_into()?))),
            ModelSpec::Mixture { components } => SurvivalModel::mixture(
                components
                    .into_iter()
                    .map(|c| Ok((c.weight, c.model.try_into()?)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            ModelSpec::Minimage { weights, inner } => SurvivalModel::min_image(weights, (*inner).try_into()?),
        }
    }
}

impl From<SurvivalModel> for ModelSpec {
    fn from(model: SurvivalModel) -> Self {
        match model {
            SurvivalModel::Dirac { c } => ModelSpec::Dirac { c },
            SurvivalModel::Weibull { c, alpha } => ModelSpec::Weibull { c, alpha },
            SurvivalModel::PeriodicWeibull(p) => {
                let decay = p.decay().iter().any(|g| *g != 0.0).then(|| p.decay().to_vec());
                ModelSpec::Rweib {
                    r: p.r(),
                    alpha: p.alpha(),
                    breakpoints: p.breakpoints().to_vec(),
                    levels: p.levels().to_vec(),
                    decay,
                }
            }
            SurvivalModel::BoundedSupport(g) => ModelSpec::Bounded { knots: g.knots },
            SurvivalModel::Tabulated(tab) => ModelSpec::Tabulated { t: tab.t, nu: tab.nu },
            SurvivalModel::Mirror(inner) => ModelSpec::Mirror { inner: Box::new((*inner).into()) },
            SurvivalModel::Negated(inner) => ModelSpec::Negate { inner: Box::new((*inner).into()) },
            SurvivalModel::Mixture(parts) => ModelSpec::Mixture {
                components: parts.into_iter().map(|(weight, m)| MixtureComponent { weight, model: m.into() }).collect(),
            },
            SurvivalModel::MinImage { weights, inner } => {
                ModelSpec::Minimage { weights, inner: Box::new((*inner).into()) }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::profile::Side;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp1m() -> SurvivalModel {
        SurvivalModel::weibull(1.0, 1.0).unwrap()
    }

    fn discrete2() -> SurvivalModel {
        SurvivalModel::periodic(PeriodicProfile::discrete(2.0, 1.0, 1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn survival_examples() {
        assert_relative_eq!(exp1m().survival(1.0), (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(exp1m().cdf_right(1.0), 1.0 - (-1.0f64).exp(), max_relative = 1e-15);
        let m = discrete2();
        for n in -3..6 {
            let t = 2f64.powi(n);
            assert_relative_eq!(m.survival(t), (-t).exp(), max_relative = 1e-14);
        }
        let d = SurvivalModel::dirac(3.0).unwrap();
        assert_eq!(d.survival(3.0), 1.0);
        assert_eq!(d.survival(3.0 + 1e-9), 0.0);
        assert_eq!(d.cdf_right(3.0), 1.0);
        assert_eq!(d.cdf(3.0), 0.0);
    }

    #[test]
    fn discrete_atom_jumps_match_one_ulp_probes() {
        let m = discrete2();
        for n in -2..4 {
            let t = 2f64.powi(n);
            let jump = m.cdf_right(t) - m.cdf(t);
            let probe = m.survival(t) - m.survival(t * (1.0 + f64::EPSILON));
            assert_relative_eq!(jump, probe, max_relative = 1e-12);
            assert_relative_eq!(jump, (-t).exp() - (-2.0 * t).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn nu_examples() {
        let w = SurvivalModel::weibull(2.5, 0.7).unwrap();
        assert_relative_eq!(w.nu_of(3.0), 2.5 * 3f64.powf(0.7), max_relative = 1e-15);
        assert_eq!(SurvivalModel::dirac(2.0).unwrap().nu_of(1.5), 0.0);
        assert_eq!(SurvivalModel::dirac(2.0).unwrap().nu_of(2.5), f64::INFINITY);
        let tab = SurvivalModel::tabulated(vec![1.0, 4.0], vec![1.0, 3.0]).unwrap();
        assert_relative_eq!(tab.nu_of(2.0), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn quantile_examples() {
        let u = 1.0 - (-1.0f64).exp();
        assert_relative_eq!(exp1m().quantile(u).unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(SurvivalModel::dirac(5.0).unwrap().quantile(0.3).unwrap(), 5.0);
        assert!(exp1m().quantile(0.0).is_err());
        assert!(exp1m().quantile(1.0).is_err());

        // Atom at 2^n carries probability e^{−2^n} − e^{−2^{n+1}}.
        let m = discrete2();
        for n in -2..3 {
            let t = 2f64.powi(n);
            let (a, b) = (1.0 - (-t).exp(), 1.0 - (-2.0 * t).exp());
            for frac in [0.01, 0.5, 0.99] {
                assert_eq!(m.quantile(a + frac * (b - a)).unwrap(), t);
            }
        }
    }

    #[test]
    fn generic_quantile_matches_closed_form() {
        let w = SurvivalModel::weibull(1.3, 0.8).unwrap();
        let neg = w.negate();
        for u in [0.01, 0.3, 0.7, 0.99] {
            let q = w.quantile(1.0 - u).unwrap();
            assert_relative_eq!(neg.quantile(u).unwrap(), -q, max_relative = 1e-12);
        }
        let mir = w.mirror_reciprocal();
        for u in [0.01, 0.3, 0.7, 0.99] {
            assert_relative_eq!(mir.quantile(u).unwrap(), -1.0 / w.quantile(u).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn mirror_and_negate_support() {
        let w = exp1m();
        assert_eq!(w.mirror_reciprocal().support(), (f64::NEG_INFINITY, 0.0));
        assert_eq!(w.negate().support(), (f64::NEG_INFINITY, 0.0));
        let u = SurvivalModel::uniform(2.0, 5.0).unwrap();
        assert_eq!(u.mirror_reciprocal().support(), (-0.5, -0.2));
        assert_eq!(SurvivalModel::dirac(4.0).unwrap().mirror_reciprocal(), SurvivalModel::Dirac { c: -0.25 });
        assert_eq!(SurvivalModel::dirac(0.0).unwrap().mirror_reciprocal(), SurvivalModel::Dirac { c: 0.0 });
        assert_eq!(SurvivalModel::dirac(2.0).unwrap().negate(), SurvivalModel::Dirac { c: -2.0 });
    }

    #[test]
    fn mirror_survival_by_definition() {
        let w = SurvivalModel::weibull(0.7, 1.4).unwrap();
        let m = w.mirror_reciprocal();
        for t in [-5.0, -1.0, -0.3, -0.01] {
            // P(−1/W ≥ t) = P(W ≥ −1/t).
            assert_relative_eq!(m.survival(t), w.survival(-1.0 / t), max_relative = 1e-14);
        }
        assert_eq!(m.survival(0.0), 0.0);
        assert_eq!(m.survival(1.0), 0.0);
        assert_eq!(m.survival(-1e300), 1.0);
    }

    #[test]
    fn samples_and_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let xs = exp1m().sample(&mut rng, n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt());

        let neg = exp1m().negate();
        assert!(neg.sample(&mut rng, 1000).iter().all(|x| *x < 0.0));

        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let mir = exp1m().mirror_reciprocal();
        for _ in 0..1000 {
            let w = exp1m().draw(&mut a);
            let v = mir.draw(&mut b);
            assert!(v < 0.0);
            assert_eq!(v, -1.0 / w);
        }
    }

    #[test]
    fn power_transform_examples() {
        let e = SurvivalModel::weibull(2.0, 1.0).unwrap();
        assert_eq!(e.power_transform(0.5).unwrap(), SurvivalModel::Weibull { c: 2.0, alpha: 0.5 });
        assert_eq!(SurvivalModel::dirac(4.0).unwrap().power_transform(2.0).unwrap(), SurvivalModel::Dirac { c: 2.0 });
        assert!(exp1m().negate().power_transform(2.0).is_err());

        // Atom probabilities survive the change of lattice.
        let m = SurvivalModel::periodic(PeriodicProfile::discrete(2.0, 0.7, 1.0, 1.0).unwrap()).unwrap();
        let beta = 1.7;
        let p = m.power_transform(beta).unwrap();
        let (SurvivalModel::PeriodicWeibull(a), SurvivalModel::PeriodicWeibull(b)) = (&m, &p) else {
            panic!("periodic models expected")
        };
        assert_relative_eq!(b.r(), 2f64.powf(1.0 / beta), max_relative = 1e-15);
        for n in -3..4 {
            for side in [Side::Left, Side::Right] {
                assert_relative_eq!(a.nu_at_lattice(0, n, side), b.nu_at_lattice(0, n, side), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let specs = [
            r#"{"kind":"weibull","c":1.0,"alpha":0.5}"#,
            r#"{"kind":"rweib","r":2.0,"alpha":1.0,"breakpoints":[1.0],"levels":[1.0]}"#,
            r#"{"kind":"mirror","inner":{"kind":"dirac","c":2.0}}"#,
            r#"{"kind":"mixture","components":[{"weight":0.5,"model":{"kind":"dirac","c":-1.0}},{"weight":0.5,"model":{"kind":"uniform","lo":0.0,"hi":1.0}}]}"#,
            r#"{"kind":"minimage","weights":[-1.0,-1.0],"inner":{"kind":"dirac","c":-1.0}}"#,
            r#"{"kind":"tabulated","t":[1.0,2.0],"nu":[0.5,1.0]}"#,
        ];
        for s in specs {
            let m: SurvivalModel = serde_json::from_str(s).unwrap();
            let back: SurvivalModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
            assert_eq!(m, back);
        }
        let d: SurvivalModel =
            serde_json::from_str(r#"{"kind":"discrete_weibull","r":2.0,"alpha":1.0,"y":1.0,"c":1.0}"#).unwrap();
        assert_eq!(d, discrete2());
    }

    #[test]
    fn json_errors_name_the_field() {
        let e = serde_json::from_str::<SurvivalModel>(r#"{"kind":"weibull","c":1.0}"#).unwrap_err();
        assert!(e.to_string().contains("alpha"));
        let e = serde_json::from_str::<SurvivalModel>(r#"{"kind":"weibull","c":-1.0,"alpha":1.0}"#).unwrap_err();
        assert!(e.to_string().contains("c must be"));
        let e = serde_json::from_str::<SurvivalModel>(
            r#"{"kind":"rweib","r":2.0,"alpha":1.0,"breakpoints":[1.0,1.5],"levels":[1.0,0.1]}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("1.5"));
        assert!(serde_json::from_str::<SurvivalModel>(r#"{"kind":"weibull","c":1,"alpha":1,"x":0}"#).is_err());
    }

    fn model_strategy() -> impl Strategy<Value = SurvivalModel> {
        prop_oneof![
            (0.1f64..5.0, 0.2f64..3.0).prop_map(|(c, a)| SurvivalModel::weibull(c, a).unwrap()),
            (1.2f64..4.0, 0.3f64..2.0, 0.0f64..1.0, 0.2f64..3.0).prop_map(|(r, a, y, c)| {
                SurvivalModel::periodic(PeriodicProfile::discrete(r, a, 1.0 + y * (r - 1.0) * 0.99, c).unwrap()).unwrap()
            }),
            (0.1f64..3.0, 0.1f64..3.0).prop_map(|(l, w)| SurvivalModel::uniform(l, l + w).unwrap()),
            (0.1f64..5.0, 0.2f64..3.0).prop_map(|(c, a)| SurvivalModel::weibull(c, a).unwrap().mirror_reciprocal()),
            (0.1f64..5.0, 0.2f64..3.0).prop_map(|(c, a)| SurvivalModel::weibull(c, a).unwrap().negate()),
        ]
    }

    proptest! {
        #[test]
        fn nu_monotone(m in model_strategy(), a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(m.nu_of(lo) <= m.nu_of(hi) + 1e-12 * m.nu_of(hi).abs());
        }

        #[test]
        fn quantile_round_trip(m in model_strategy(), u in 0.001f64..0.999) {
            let q = m.quantile(u).unwrap();
            prop_assert!(m.cdf_right(q) >= u - 1e-12);
            let probe = if m.near_lattice_point(q, 1e-12) { q - 1e-12 * q.abs() } else { q };
            prop_assert!(m.cdf(probe) <= u + 1e-12);
        }

        #[test]
        fn involutions(m in model_strategy(), t in -20.0f64..20.0) {
            let mm = m.mirror_reciprocal().mirror_reciprocal();
            let nn = m.negate().negate();
            prop_assert_eq!(mm.survival(t), m.survival(t));
            prop_assert_eq!(nn.survival(t), m.survival(t));
        }

        #[test]
        fn one_sided_limits_are_ordered(m in model_strategy(), t in -20.0f64..20.0) {
            prop_assert!(m.survival_right(t) <= m.survival(t) + 1e-15);
            prop_assert!((m.survival(t) + m.cdf(t) - 1.0).abs() <= 1e-14);
            prop_assert!((m.survival_right(t) + m.cdf_right(t) - 1.0).abs() <= 1e-14);
        }
    }
}
