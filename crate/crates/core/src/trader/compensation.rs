//! Realized compensation `xi = Y0 - int H dt + int Z dW + sum int U (dN - theta dt)`.

use crate::error::{invalid, Result};
use crate::model::{DarkPoolSpec, Fees, MarketParams, TraderState};

use super::drivers::hamiltonian;

/// One recorded step of a path.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub state: TraderState,
    pub fees: Fees,
    pub z: f64,
    pub u: Vec<f64>,
    pub dt: f64,
    /// Brownian increment of the reference measure.
    pub dw: f64,
    /// Jump counts per pool over the step.
    pub jumps: Vec<u32>,
}

/// Running sum for `xi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiAccumulator {
    pub xi: f64,
}

impl XiAccumulator {
    pub fn new(y0: f64) -> Self {
        Self { xi: y0 }
    }

    pub fn step(&mut self, h: f64, z: f64, u: &[f64], thetas: &[f64], jumps: &[u32], dw: f64, dt: f64) {
        let mut d = -h * dt + z * dw;
        for i in 0..u.len() {
            d += u[i] * (jumps[i] as f64 - thetas[i] * dt);
        }
        self.xi += d;
    }
}

/// Rebuilds `xi` along a recorded path, evaluating `H` at each step.
pub fn compensation_xi(path: &[StepRecord], y0: f64, p: &MarketParams, pools: &[DarkPoolSpec]) -> Result<f64> {
    let thetas: Vec<f64> = pools.iter().map(|pl| pl.theta).collect();
    let mut acc = XiAccumulator::new(y0);
    for (k, rec) in path.iter().enumerate() {
        if !rec.dw.is_finite() || !rec.dt.is_finite() || rec.dt <= 0.0 {
            return Err(invalid(format!("step {k}: missing or invalid increment")));
        }
        if rec.jumps.len() != pools.len() || rec.u.len() != pools.len() {
            return Err(invalid(format!("step {k}: jump record does not cover every pool")));
        }
        let (h, _) = hamiltonian(rec.state.q, rec.z, &rec.u, &rec.fees, p, pools)?;
        acc.step(h, rec.z, &rec.u, &thetas, &rec.jumps, rec.dw, rec.dt);
    }
    Ok(acc.xi)
}
