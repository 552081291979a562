use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraderState {
    pub t: f64,
    pub q: f64,
    pub s: f64,
    pub x: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeState {
    pub trader: TraderState,
    pub iota: f64,
    pub y: f64,
}

impl ExchangeState {
    pub fn new(trader: TraderState, y: f64) -> Self {
        Self { trader, iota: 0.0, y }
    }

    /// Network input `(t, q, s, x, iota)`.
    pub fn features(&self) -> [f64; 5] {
        [self.trader.t, self.trader.q, self.trader.s, self.trader.x, self.iota]
    }
}

/// Lit rate and dark postings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlPair {
    pub nu: f64,
    pub ell: Vec<f64>,
}

impl ControlPair {
    pub fn idle(m: usize) -> Self {
        Self { nu: 0.0, ell: vec![0.0; m] }
    }

    pub fn is_admissible(&self, q: f64) -> bool {
        self.nu <= 0.0 && self.ell.iter().all(|&l| l >= 0.0) && self.ell.iter().sum::<f64>() <= q.max(0.0) + 1e-12
    }
}

/// Fee levels in force at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fees {
    pub lit: f64,
    pub dark: Vec<f64>,
}

impl Fees {
    pub fn zero(m: usize) -> Self {
        Self { lit: 0.0, dark: vec![0.0; m] }
    }

    pub fn constant(lit: f64, dark: f64, m: usize) -> Self {
        Self { lit, dark: vec![dark; m] }
    }
}

/// Default upper bound on every fee.
pub const FEE_CAP: f64 = 0.01;

/// Fees as functions of time and exchange state.
pub trait FeeSchedule {
    fn fees(&self, state: &ExchangeState) -> Fees;
}

impl FeeSchedule for Fees {
    fn fees(&self, _state: &ExchangeState) -> Fees {
        self.clone()
    }
}

impl<F: Fn(&ExchangeState) -> Fees> FeeSchedule for F {
    fn fees(&self, state: &ExchangeState) -> Fees {
        self(state)
    }
}
