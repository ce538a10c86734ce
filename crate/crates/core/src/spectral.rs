//! Moment function `m(β) = Σ T_j^β`, the characteristic exponent and the
//! closed multiplicative group generated by the weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{TailSpec, WeightSpec};

pub const DEFAULT_ROOT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_DEN: u64 = 1_000_000;
pub const DEFAULT_REL_EPS: f64 = 1e-9;

/// `α > 0` with `Σ T_j^{−α} = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharExponent {
    pub alpha: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupKind {
    Continuous,
    Lattice { r: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStructure {
    #[serde(flatten)]
    pub kind: GroupKind,
    /// `n_j` with `T_j = r^{n_j}` for each head weight (lattice only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exponents: Vec<i64>,
    /// Exponents of the geometric tail generators `(a, q)` (lattice only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_exponents: Option<(i64, i64)>,
}

impl GroupStructure {
    fn continuous() -> Self {
        GroupStructure { kind: GroupKind::Continuous, exponents: Vec::new(), tail_exponents: None }
    }

    pub fn lattice_span(&self) -> Option<f64> {
        match self.kind {
            GroupKind::Lattice { r } => Some(r),
            GroupKind::Continuous => None,
        }
    }
}

/// Knobs of the commensurability decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    pub max_den: u64,
    pub rel_eps: f64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions { max_den: DEFAULT_MAX_DEN, rel_eps: DEFAULT_REL_EPS }
    }
}

fn require_positive(spec: &WeightSpec) -> Result<()> {
    if spec.all_positive() {
        Ok(())
    } else {
        Err(Error::Precondition("weights must all be positive".into()))
    }
}

/// `m(β) = Σ_j T_j^β`, possibly `+∞`.
pub fn eval_m(spec: &WeightSpec, beta: f64) -> Result<f64> {
    require_positive(spec)?;
    let head: f64 = spec.head().iter().map(|w| w.powf(beta)).sum();
    let tail = match spec.tail() {
        None => 0.0,
        Some(&TailSpec::Geometric { a, q, .. }) => {
            if beta < 0.0 {
                a.powf(beta) / (1.0 - q.powf(beta))
            } else {
                f64::INFINITY
            }
        }
        // Terms tend to a^β or L^β > 0.
        Some(_) => f64::INFINITY,
    };
    Ok(head + tail)
}

/// Solves `m(−α) = 1` by bracketing and bisection.
///
/// Returns `Ok(None)` when no positive root exists (for instance a single
/// weight, or tails on which `m` is infinite everywhere).
pub fn characteristic_exponent(spec: &WeightSpec, tol: f64) -> Result<Option<CharExponent>> {
    require_positive(spec)?;
    if !(spec.inf() > 1.0) {
        return Err(Error::Precondition("characteristic exponent needs inf T_j > 1".into()));
    }
    let f = |alpha: f64| eval_m(spec, -alpha).expect("positivity checked");

    let mut lo = 0.0;
    if f(lo) <= 1.0 {
        return Ok(None);
    }
    let mut hi = 1.0;
    while f(hi) >= 1.0 {
        if f(hi) == 1.0 {
            return Ok(Some(CharExponent { alpha: hi, residual: 0.0, bracket: (lo, hi) }));
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return Ok(None);
        }
    }

    let mut best = (hi, (f(hi) - 1.0).abs());
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        let res = (v - 1.0).abs();
        if res < best.1 {
            best = (mid, res);
        }
        if v == 1.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if v > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lo_res = (f(lo) - 1.0).abs();
    if lo_res < best.1 {
        best = (lo, lo_res);
    }
    if best.1 > tol {
        return Err(Error::NoConvergence { residual: best.1, tol });
    }
    Ok(Some(CharExponent { alpha: best.0, residual: best.1, bracket: (lo, hi) }))
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// First continued-fraction convergent `p/q` (with `q ≤ max_den`) whose
/// integer relation `|q·x − p·x0|` is within `eps`.
fn commensurate(x: f64, x0: f64, opts: &LatticeOptions) -> Option<(i128, i128)> {
    let ratio = x / x0;
    let (mut h_prev, mut h) = (0i128, 1i128);
    let (mut k_prev, mut k) = (1i128, 0i128);
    let mut rest = ratio;
    for _ in 0..64 {
        let a = rest.floor();
        if !a.is_finite() || a.abs() > 1e15 {
            return None;
        }
        let a = a as i128;
        (h_prev, h) = (h, a.checked_mul(h)?.checked_add(h_prev)?);
        (k_prev, k) = (k, a.checked_mul(k)?.checked_add(k_prev)?);
        if k > opts.max_den as i128 {
            return None;
        }
        if (k as f64 * x - h as f64 * x0).abs() <= opts.rel_eps {
            return Some((h, k));
        }
        let frac = rest - a as f64;
        if frac <= 0.0 {
            return None;
        }
        rest = 1.0 / frac;
    }
    None
}

/// Decides whether the weights generate `r^ℤ` for some `r > 1` or all of `ℝ^>`.
///
/// Commensurability is judged on logarithms: `ln T_i / ln T_1` must have a
/// continued-fraction convergent `p/q` with `q ≤ max_den` and
/// `|q·ln T_i − p·ln T_1| ≤ rel_eps`, i.e. `T_i^q = T_1^p` to relative
/// accuracy `rel_eps`. Lattice verdicts are then checked by reconstructing
/// every weight as `r^{n_j}`.
pub fn detect_group(spec: &WeightSpec, opts: &LatticeOptions) -> Result<GroupStructure> {
    require_positive(spec)?;
    if !(spec.inf() > 1.0) {
        return Err(Error::Precondition("group detection needs inf T_j > 1".into()));
    }
    let mut gens: Vec<f64> = spec.head().to_vec();
    let n_head = gens.len();
    match spec.tail() {
        None => {}
        Some(&TailSpec::Geometric { a, q, .. }) => {
            gens.push(a);
            gens.push(q);
        }
        Some(&TailSpec::Constant { a, .. }) => gens.push(a),
        Some(&TailSpec::Convergent { .. }) => return Ok(GroupStructure::continuous()),
    }

    let logs: Vec<f64> = gens.iter().map(|g| g.ln()).collect();
    let x0 = logs[0];
    let mut fracs = Vec::with_capacity(logs.len());
    for &x in &logs {
        match commensurate(x, x0, opts) {
            Some(pq) => fracs.push(pq),
            None => return Ok(GroupStructure::continuous()),
        }
    }

    // x_i = (p_i / q_i)·x0 = k_i·(x0 / Q) with Q = lcm(q_i).
    let mut lcm: i128 = 1;
    for &(_, q) in &fracs {
        let g = gcd(lcm, q);
        lcm = match (lcm / g).checked_mul(q) {
            Some(v) if v <= i64::MAX as i128 => v,
            _ => return Ok(GroupStructure::continuous()),
        };
    }
    let ks: Vec<i128> = fracs.iter().map(|&(p, q)| p * (lcm / q)).collect();
    let g = ks.iter().fold(0, |acc, &k| gcd(acc, k));
    if g == 0 {
        return Ok(GroupStructure::continuous());
    }
    let ns: Vec<i64> = ks.iter().map(|&k| (k / g) as i64).collect();

    let (idx, &n_min) = ns.iter().enumerate().min_by_key(|(_, n)| **n).expect("nonempty");
    if n_min <= 0 {
        return Ok(GroupStructure::continuous());
    }
    let r = if n_min == 1 { gens[idx] } else { gens[idx].powf(1.0 / n_min as f64) };
    if !(r > 1.0) {
        return Ok(GroupStructure::continuous());
    }

    let max_err = gens
        .iter()
        .zip(&ns)
        .map(|(&t, &n)| (t - r.powf(n as f64)).abs() / t)
        .fold(0.0, f64::max);
    if max_err > opts.rel_eps {
        return Ok(GroupStructure::continuous());
    }

    let tail_exponents = match spec.tail() {
        Some(TailSpec::Geometric { .. }) => Some((ns[n_head], ns[n_head + 1])),
        Some(TailSpec::Constant { .. }) => Some((ns[n_head], 0)),
        _ => None,
    };
    Ok(GroupStructure {
        kind: GroupKind::Lattice { r },
        exponents: ns[..n_head].to_vec(),
        tail_exponents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fin(w: &[f64]) -> WeightSpec {
        WeightSpec::finite(w.to_vec()).unwrap()
    }

    /// Plain bisection on `m(−α) − 1`, written independently of the solver.
    fn oracle_alpha(weights: &[f64]) -> f64 {
        let f = |a: f64| weights.iter().map(|w| w.powf(-a)).sum::<f64>() - 1.0;
        let (mut lo, mut hi) = (0.0f64, 64.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn m_examples() {
        assert_eq!(eval_m(&fin(&[2.0, 2.0]), -1.0).unwrap(), 1.0);
        assert_eq!(eval_m(&fin(&[2.0, 4.0]), -1.0).unwrap(), 0.75);
        let geo = WeightSpec::new(vec![], Some(TailSpec::geometric(2.0, 2.0))).unwrap();
        let partial: f64 = (0..200).map(|k| (2.0 * 2f64.powi(k)).powf(-1.0)).sum();
        assert_relative_eq!(eval_m(&geo, -1.0).unwrap(), partial, epsilon = 1e-15);
        assert_eq!(eval_m(&geo, 0.0).unwrap(), f64::INFINITY);
        let cst = WeightSpec::new(vec![2.0], Some(TailSpec::constant(3.0))).unwrap();
        assert_eq!(eval_m(&cst, -5.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn m_rejects_negative_weights() {
        assert!(eval_m(&fin(&[2.0, -2.0]), -1.0).is_err());
    }

    #[test]
    fn exponent_examples() {
        let e = characteristic_exponent(&fin(&[2.0, 2.0]), DEFAULT_ROOT_TOL).unwrap().unwrap();
        assert_eq!(e.alpha, 1.0);
        let e = characteristic_exponent(&fin(&[3.0, 3.0, 3.0]), DEFAULT_ROOT_TOL).unwrap().unwrap();
        assert_relative_eq!(e.alpha, 1.0, epsilon = 1e-14);

        let e = characteristic_exponent(&fin(&[2.0, 4.0]), DEFAULT_ROOT_TOL).unwrap().unwrap();
        // mpmath: 0.69424191363061730174
        assert_relative_eq!(e.alpha, 0.694_241_913_630_617_3, epsilon = 1e-13);
        assert_relative_eq!(e.alpha, oracle_alpha(&[2.0, 4.0]), epsilon = 1e-12);
        assert!(e.residual <= 1e-12);
    }

    #[test]
    fn exponent_with_geometric_tail() {
        let spec = WeightSpec::new(vec![3.0], Some(TailSpec::geometric(2.0, 2.0))).unwrap();
        let e = characteristic_exponent(&spec, DEFAULT_ROOT_TOL).unwrap().unwrap();
        // mpmath: 1.2317189167750922154
        assert_relative_eq!(e.alpha, 1.231_718_916_775_092_2, epsilon = 1e-12);
    }

    #[test]
    fn exponent_none_and_errors() {
        assert_eq!(characteristic_exponent(&fin(&[3.0]), DEFAULT_ROOT_TOL).unwrap(), None);
        let a4 = WeightSpec::new(vec![2.0], Some(TailSpec::constant(2.0))).unwrap();
        assert_eq!(characteristic_exponent(&a4, DEFAULT_ROOT_TOL).unwrap(), None);
        assert!(characteristic_exponent(&fin(&[1.0, 3.0]), DEFAULT_ROOT_TOL).is_err());
    }

    #[test]
    fn group_examples() {
        let opts = LatticeOptions::default();
        let g = detect_group(&fin(&[2.0, 8.0]), &opts).unwrap();
        assert_eq!(g.kind, GroupKind::Lattice { r: 2.0 });
        assert_eq!(g.exponents, vec![1, 3]);

        let g = detect_group(&fin(&[1.5, 3.375]), &opts).unwrap();
        assert_eq!(g.kind, GroupKind::Lattice { r: 1.5 });
        assert_eq!(g.exponents, vec![1, 3]);

        assert_eq!(detect_group(&fin(&[2.0, 3.0]), &opts).unwrap().kind, GroupKind::Continuous);

        let g = detect_group(&fin(&[8.0, 4.0]), &opts).unwrap();
        assert_eq!(g.exponents, vec![3, 2]);
        assert_relative_eq!(g.lattice_span().unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn group_with_geometric_tail() {
        let spec = WeightSpec::new(vec![4.0], Some(TailSpec::geometric(2.0, 8.0))).unwrap();
        let g = detect_group(&spec, &LatticeOptions::default()).unwrap();
        assert_eq!(g.kind, GroupKind::Lattice { r: 2.0 });
        assert_eq!(g.exponents, vec![2]);
        assert_eq!(g.tail_exponents, Some((1, 3)));
    }

    #[test]
    fn loose_denominator_cap_turns_lattice_continuous() {
        let opts = LatticeOptions { max_den: 1, rel_eps: 1e-9 };
        // log ratio 3/2 needs q = 2.
        let g = detect_group(&fin(&[4.0, 8.0]), &opts).unwrap();
        assert_eq!(g.kind, GroupKind::Continuous);
    }

    proptest! {
        #[test]
        fn exponent_scaling_law(
            w in proptest::collection::vec(1.05f64..20.0, 2..6),
            beta in 0.2f64..5.0,
        ) {
            let spec = fin(&w);
            let a = characteristic_exponent(&spec, DEFAULT_ROOT_TOL).unwrap().unwrap().alpha;
            let powered = spec.powf(beta).unwrap();
            let b = characteristic_exponent(&powered, 1e-11).unwrap().unwrap().alpha;
            prop_assert!((b - a / beta).abs() <= 1e-10 * (1.0 + a / beta));
        }

        #[test]
        fn m_strictly_increasing(
            w in proptest::collection::vec(1.01f64..50.0, 1..6),
            b1 in -6.0f64..6.0,
            d in 0.01f64..3.0,
        ) {
            let spec = fin(&w);
            prop_assert!(eval_m(&spec, b1).unwrap() < eval_m(&spec, b1 + d).unwrap());
        }

        #[test]
        fn lattice_recovered(
            r in 1.0f64..10.0,
            raw in proptest::collection::vec(1i64..=20, 2..5),
        ) {
            prop_assume!(r > 1.05);
            let g = raw.iter().fold(0, |acc, &n| gcd(acc as i128, n as i128) as i64);
            let ns: Vec<i64> = raw.iter().map(|n| n / g).collect();
            let weights: Vec<f64> = ns.iter().map(|&n| r.powi(n as i32)).collect();
            let out = detect_group(&fin(&weights), &LatticeOptions::default()).unwrap();
            let span = out.lattice_span().expect("lattice expected");
            prop_assert!((span - r).abs() / r <= 1e-9);
            prop_assert_eq!(&out.exponents, &ns);
            for (&t, &n) in weights.iter().zip(&out.exponents) {
                prop_assert!((t - span.powi(n as i32)).abs() / t <= 1e-9);
            }
        }
    }
}
