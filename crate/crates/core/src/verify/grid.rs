//! Evaluation grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solutions::SurvivalModel;
use crate::weights::WeightSpec;

const LOW_Q: f64 = 1e-4;
const HIGH_Q: f64 = 1.0 - 1e-4;
const LATTICE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Precondition("grid points must be finite and strictly increasing".into()));
        }
        Ok(Grid { points })
    }

    /// `n` points with constant ratio from `lo` to `hi` (`0 < lo < hi`).
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || n < 2 {
            return Err(Error::Precondition("log grid needs 0 < lo < hi and n >= 2".into()));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let pts = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
        Self::new(dedup(pts))
    }

    pub fn linear(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) || n < 2 {
            return Err(Error::Precondition("linear grid needs lo < hi and n >= 2".into()));
        }
        Self::new(dedup((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()))
    }

    pub fn with_point(mut self, t: f64) -> Self {
        self.points.push(t);
        self.points.sort_by(f64::total_cmp);
        self.points = dedup(std::mem::take(&mut self.points));
        self
    }

    /// Image under `t ↦ −1/t` (zero stays put).
    pub fn mirrored(&self) -> Self {
        let mut pts: Vec<f64> = self.points.iter().map(|&t| if t == 0.0 { 0.0 } else { -1.0 / t }).collect();
        pts.sort_by(f64::total_cmp);
        Grid { points: dedup(pts) }
    }
}

fn dedup(mut pts: Vec<f64>) -> Vec<f64> {
    pts.dedup();
    pts
}

/// Grid between the `10^{-4}` and `1 − 10^{-4}` quantiles of `model`: log
/// spaced on a positive range, reflected log spacing on a negative range,
/// linear otherwise. Points landing on lattice breakpoints are moved off
/// them; zero is added when `spec` has negative weights.
pub fn default_grid(model: &SurvivalModel, spec: Option<&WeightSpec>, n: usize) -> Result<Grid> {
    let n = n.max(2);
    let (lo, hi) = (model.quantile(LOW_Q)?, model.quantile(HIGH_Q)?);
    let grid = if lo == hi {
        let d = lo.abs().max(1.0) / 2.0;
        Grid::new(vec![lo - d, lo, lo + d])?
    } else if lo > 0.0 {
        Grid::log_spaced(lo, hi, n)?
    } else if hi < 0.0 {
        let g = Grid::log_spaced(-hi, -lo, n)?;
        Grid::new(g.points.iter().rev().map(|t| -t).collect())?
    } else {
        Grid::linear(lo, hi, n)?
    };
    let mut pts: Vec<f64> = grid
        .points
        .into_iter()
        .map(|mut t| {
            for _ in 0..16 {
                if !model.near_lattice_point(t, LATTICE_TOL) {
                    break;
                }
                t *= 1.0 + 1e-6;
            }
            t
        })
        .collect();
    pts.sort_by(f64::total_cmp);
    let mut grid = Grid::new(dedup(pts))?;
    if spec.is_some_and(|s| s.has_negative()) {
        grid = grid.with_point(0.0);
    }
    Ok(grid)
}
