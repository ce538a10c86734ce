//! Two-sample Kolmogorov–Smirnov statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Large-sample constant of the 1% critical value.
pub const KS_C_1PCT: f64 = 1.628;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// `1.628·√((n + m)/(n·m))`, i.e. `1.628·√(2/n)` for equal sizes.
pub fn ks_critical(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KS_C_1PCT * ((n + m) / (n * m)).sqrt()
}

/// `sup_t |F_a(t) − F_b(t)|` over empirical CDFs; ties are stepped together.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples { got: a.len().min(b.len()), min: 1 });
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let critical = ks_critical(a.len(), b.len());
    Ok(KsResult { statistic: d, critical, pass: d <= critical })
}
