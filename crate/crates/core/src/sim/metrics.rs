//! Per-path metrics, summary statistics and histograms.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{Fees, MarketParams, TraderState};

pub const HISTOGRAM_BINS: usize = 64;

/// One recorded instant of a path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub q: f64,
    pub s: f64,
    pub nu: f64,
    pub ell: Vec<f64>,
    pub fees: Fees,
    pub z: f64,
    pub u: Vec<f64>,
}

/// Outcome of one simulated path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathMetrics {
    pub path: usize,
    /// `int (gamma nu + epsilon lambda) dt`, or `int (gamma0 nu0 + gamma mu) dt` in the competitive market.
    pub impact: f64,
    pub terminal: TraderState,
    /// `int -nu dt`.
    pub lit_sold: f64,
    pub dark_volume: Vec<f64>,
    /// Realized compensation; absent without a contract.
    pub xi: Option<f64>,
    /// Accumulated exchange PnL `iota_T`; absent without fees.
    pub exchange_pnl: Option<f64>,
    /// `phi int Q^2 dt`.
    pub running_penalty: f64,
    /// Steps where the lit rate or a fill was cut to the remaining inventory.
    pub clamp_events: u32,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
}

impl PathMetrics {
    /// `X_T + Q_T (S_T - alpha Q_T) - phi int Q^2 dt`.
    pub fn terminal_wealth(&self, p: &MarketParams) -> f64 {
        let t = &self.terminal;
        t.x + t.q * (t.s - p.alpha * t.q) - self.running_penalty
    }

    /// `Q0 - (q_T + lit sold + dark filled)`.
    pub fn conservation_residual(&self, q0: f64) -> f64 {
        q0 - (self.terminal.q + self.lit_sold + self.dark_volume.iter().sum::<f64>())
    }

    pub fn total_dark(&self) -> f64 {
        self.dark_volume.iter().sum()
    }
}

/// Time integral of the permanent drift along a sampled rate path.
pub fn impact_metric(drift: &[f64], dt: f64) -> f64 {
    drift.iter().map(|d| d * dt).sum()
}

/// Fixed-bin histogram over the sample range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub count: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Result<Self> {
        if values.is_empty() || bins == 0 {
            return Err(invalid("histogram of an empty sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("histogram of a non-finite sample"));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / bins as f64;
        let left: Vec<f64> = (0..bins).map(|k| lo + k as f64 * width).collect();
        let right: Vec<f64> = (0..bins).map(|k| if k + 1 == bins { hi } else { lo + (k + 1) as f64 * width }).collect();
        let mut count = vec![0; bins];
        for &v in values {
            let k = if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
            count[k] += 1;
        }
        Ok(Self { left, right, count })
    }

    /// Centre of the first fullest bin.
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for (k, &c) in self.count.iter().enumerate() {
            if c > self.count[best] {
                best = k;
            }
        }
        0.5 * (self.left[best] + self.right[best])
    }
}

/// Summary of one scalar metric over paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mode: f64,
}

/// Linear-interpolation quantile of a sorted sample.
fn quantile_sorted(x: &[f64], prob: f64) -> f64 {
    let pos = prob * (x.len() - 1) as f64;
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    if k + 1 < x.len() {
        x[k] + frac * (x[k + 1] - x[k])
    } else {
        x[k]
    }
}

/// Mean, sample standard deviation, quartiles and histogram mode. All
/// statistics are computed from the sorted sample, so they do not depend on
/// the input order.
pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(invalid("cannot summarize an empty collection"));
    }
    let mut x = values.to_vec();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("cannot summarize non-finite values"));
    }
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let std = if n > 1 { (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
    let hist = Histogram::new(&x, HISTOGRAM_BINS)?;
    Ok(Summary {
        n,
        mean,
        std,
        min: x[0],
        q1: quantile_sorted(&x, 0.25),
        median: quantile_sorted(&x, 0.5),
        q3: quantile_sorted(&x, 0.75),
        max: x[n - 1],
        mode: hist.mode(),
    })
}
