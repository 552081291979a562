//! Value network over `(t, q, s, x, iota)` and the fee/contract policy network.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::{Cache, LayerSpec, Mlp};
use crate::model::FEE_CAP;

pub const STATE_DIM: usize = 5;
pub const HIDDEN: usize = 64;
pub const OUTPUT_INIT: f64 = 3e-3;
pub const SOFTPLUS_BETA: f64 = 0.1;

/// Anything that can value a batch of states `(t, q, s, x, iota)`.
pub trait ValueFn {
    fn values(&self, x: ArrayView2<f64>) -> Vec<f64>;
}

impl<F: Fn(&[f64]) -> f64> ValueFn for F {
    fn values(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self(&r.to_vec())).collect()
    }
}

/// Three hidden layers of 64 with batch norm and leaky ReLU, linear output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Critic {
    pub net: Mlp,
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(bn_momentum: f64, rng: &mut R) -> Self {
        let hidden = LayerSpec { width: HIDDEN, norm: true, leaky: true };
        let out = LayerSpec { width: 1, norm: false, leaky: false };
        let mut net = Mlp::new(STATE_DIM, &[hidden, hidden, hidden, out], bn_momentum);
        net.init(OUTPUT_INIT, rng);
        Self { net }
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.net.predict(x).column(0).to_vec()
    }
}

impl ValueFn for Critic {
    fn values(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.forward(x)
    }
}

/// Output of the policy at one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorOutput {
    pub c_l: f64,
    pub c_d: Vec<f64>,
    pub z: f64,
    pub u: Vec<f64>,
}

/// Two hidden layers of 64 with batch norm and leaky ReLU, then the heads
/// `[c_l, c_d (M), z, u (M)]` as one linear layer with per-column activations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub net: Mlp,
    pub n_pools: usize,
    pub fee_cap: f64,
    pub z_bound: f64,
}

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

fn softplus(a: f64, beta: f64) -> f64 {
    let x = beta * a;
    (x.max(0.0) + (-x.abs()).exp().ln_1p()) / beta
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(n_pools: usize, z_bound: f64, bn_momentum: f64, rng: &mut R) -> Self {
        let hidden = LayerSpec { width: HIDDEN, norm: true, leaky: true };
        let heads = LayerSpec { width: 2 + 2 * n_pools, norm: false, leaky: false };
        let mut net = Mlp::new(STATE_DIM, &[hidden, hidden, heads], bn_momentum);
        net.init(OUTPUT_INIT, rng);
        Self { net, n_pools, fee_cap: FEE_CAP, z_bound }
    }

    /// Applies the head activations to one row of pre-activations.
    pub fn activate(&self, a: &[f64]) -> ActorOutput {
        let m = self.n_pools;
        ActorOutput {
            c_l: self.fee_cap * sigmoid(a[0]),
            c_d: (0..m).map(|i| self.fee_cap * sigmoid(a[1 + i])).collect(),
            z: self.z_bound * a[1 + m].tanh(),
            u: (0..m).map(|i| softplus(a[2 + m + i], SOFTPLUS_BETA)).collect(),
        }
    }

    /// Derivative of each head output with respect to its pre-activation.
    pub fn activation_slopes(&self, a: &[f64]) -> Vec<f64> {
        let m = self.n_pools;
        let mut d = vec![0.0; a.len()];
        for i in 0..=m {
            let s = sigmoid(a[i]);
            d[i] = self.fee_cap * s * (1.0 - s);
        }
        d[1 + m] = self.z_bound * (1.0 - a[1 + m].tanh().powi(2));
        for i in 0..m {
            d[2 + m + i] = sigmoid(SOFTPLUS_BETA * a[2 + m + i]);
        }
        d
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Vec<ActorOutput> {
        let pre = self.net.predict(x);
        pre.rows().into_iter().map(|r| self.activate(&r.to_vec())).collect()
    }

    /// Train-mode forward returning pre-activations, outputs and the cache.
    pub fn forward_train(&mut self, x: ArrayView2<f64>) -> (Array2<f64>, Vec<ActorOutput>, Cache) {
        let (pre, cache) = self.net.forward_train(x);
        let out = pre.rows().into_iter().map(|r| self.activate(&r.to_vec())).collect();
        (pre, out, cache)
    }

    /// Flattens an output in head order.
    pub fn flatten(out: &ActorOutput) -> Vec<f64> {
        let mut v = vec![out.c_l];
        v.extend(&out.c_d);
        v.push(out.z);
        v.extend(&out.u);
        v
    }
}
