//! Feed-forward networks with batch normalization, hand-written backward
//! passes and Adam. Parameters live in one flat vector per network.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

pub const LEAKY_SLOPE: f64 = 0.01;
const BN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Batch statistics; running statistics are updated.
    Train,
    /// Running statistics.
    Eval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Dense {
    fan_in: usize,
    fan_out: usize,
    w: usize,
    b: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Norm {
    dim: usize,
    gamma: usize,
    beta: usize,
    /// Offset of the running mean in the buffers; the variance follows.
    buf: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Block {
    dense: Dense,
    norm: Option<Norm>,
    leaky: bool,
}

/// Stack of `dense -> [batch norm] -> [leaky relu]` blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    blocks: Vec<Block>,
    pub params: Vec<f64>,
    pub buffers: Vec<f64>,
    pub bn_momentum: f64,
}

/// Intermediate values kept for the backward pass.
pub struct Cache {
    mode: Mode,
    inputs: Vec<Array2<f64>>,
    normed: Vec<Option<(Array2<f64>, Array1<f64>)>>,
    pre_act: Vec<Array2<f64>>,
    stats: Vec<Option<(Array1<f64>, Array1<f64>)>>,
}

/// Builder entry: output width, whether to normalize, whether to apply the activation.
#[derive(Clone, Copy, Debug)]
pub struct LayerSpec {
    pub width: usize,
    pub norm: bool,
    pub leaky: bool,
}

impl Mlp {
    pub fn new(input: usize, layers: &[LayerSpec], bn_momentum: f64) -> Self {
        let mut blocks = Vec::new();
        let mut n_params = 0;
        let mut n_buf = 0;
        let mut fan_in = input;
        for l in layers {
            let dense = Dense { fan_in, fan_out: l.width, w: n_params, b: n_params + fan_in * l.width };
            n_params += fan_in * l.width + l.width;
            let norm = l.norm.then(|| {
                let nm = Norm { dim: l.width, gamma: n_params, beta: n_params + l.width, buf: n_buf };
                n_params += 2 * l.width;
                n_buf += 2 * l.width;
                nm
            });
            blocks.push(Block { dense, norm, leaky: l.leaky });
            fan_in = l.width;
        }
        let mut net = Self { blocks, params: vec![0.0; n_params], buffers: vec![0.0; n_buf], bn_momentum };
        for b in net.blocks.clone() {
            if let Some(nm) = &b.norm {
                net.params[nm.gamma..nm.gamma + nm.dim].fill(1.0);
                net.buffers[nm.buf + nm.dim..nm.buf + 2 * nm.dim].fill(1.0);
            }
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.blocks[0].dense.fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.blocks.last().expect("non-empty network").dense.fan_out
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Orthogonal weights for every block except the last, zero biases; the
    /// last block uniform in `[-last_range, last_range]`.
    pub fn init<R: Rng + ?Sized>(&mut self, last_range: f64, rng: &mut R) {
        let n = self.blocks.len();
        for (k, b) in self.blocks.clone().iter().enumerate() {
            let d = &b.dense;
            if k + 1 < n {
                let w = orthogonal(d.fan_in, d.fan_out, rng);
                self.params[d.w..d.w + d.fan_in * d.fan_out].copy_from_slice(w.as_slice().expect("standard layout"));
                self.params[d.b..d.b + d.fan_out].fill(0.0);
            } else {
                let u = Uniform::new_inclusive(-last_range, last_range).expect("valid range");
                for v in &mut self.params[d.w..d.b + d.fan_out] {
                    *v = u.sample(rng);
                }
            }
        }
    }

    fn weight(&self, d: &Dense) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((d.fan_in, d.fan_out), &self.params[d.w..d.w + d.fan_in * d.fan_out]).expect("shape")
    }

    fn vec(&self, off: usize, len: usize) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.params[off..off + len])
    }

    /// Forward pass without side effects; in `Train` mode the batch
    /// statistics are used but running statistics are left untouched.
    pub fn forward(&self, x: ArrayView2<f64>, mode: Mode) -> (Array2<f64>, Cache) {
        let mut cache = Cache { mode, inputs: Vec::new(), normed: Vec::new(), pre_act: Vec::new(), stats: Vec::new() };
        let mut h = x.to_owned();
        for b in &self.blocks {
            let d = &b.dense;
            let mut z = h.dot(&self.weight(d));
            z += &self.vec(d.b, d.fan_out);
            cache.inputs.push(h);
            if let Some(nm) = &b.norm {
                let (mean, var) = match mode {
                    Mode::Train => {
                        let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
                        let var = z.var_axis(Axis(0), 0.0);
                        (mean, var)
                    }
                    Mode::Eval => (
                        Array1::from(self.buffers[nm.buf..nm.buf + nm.dim].to_vec()),
                        Array1::from(self.buffers[nm.buf + nm.dim..nm.buf + 2 * nm.dim].to_vec()),
                    ),
                };
                let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                let xhat = (&z - &mean) * &inv_std;
                cache.stats.push(Some((mean, var)));
                z = &xhat * &self.vec(nm.gamma, nm.dim) + self.vec(nm.beta, nm.dim);
                cache.normed.push(Some((xhat, inv_std)));
            } else {
                cache.normed.push(None);
                cache.stats.push(None);
            }
            if b.leaky {
                cache.pre_act.push(z.clone());
                z.mapv_inplace(|v| if v > 0.0 { v } else { LEAKY_SLOPE * v });
            } else {
                cache.pre_act.push(Array2::zeros((0, 0)));
            }
            h = z;
        }
        (h, cache)
    }

    /// Evaluation-mode forward.
    pub fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward(x, Mode::Eval).0
    }

    /// Train-mode forward that also folds the batch statistics into the running ones.
    pub fn forward_train(&mut self, x: ArrayView2<f64>) -> (Array2<f64>, Cache) {
        let (out, cache) = self.forward(x, Mode::Train);
        let n = x.nrows() as f64;
        let m = self.bn_momentum;
        let unbias = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
        for (b, st) in self.blocks.iter().zip(&cache.stats) {
            if let (Some(nm), Some((mean, var))) = (&b.norm, st) {
                for j in 0..nm.dim {
                    let rm = &mut self.buffers[nm.buf + j];
                    *rm = (1.0 - m) * *rm + m * mean[j];
                    let rv = &mut self.buffers[nm.buf + nm.dim + j];
                    *rv = (1.0 - m) * *rv + m * var[j] * unbias;
                }
            }
        }
        (out, cache)
    }

    /// Parameter gradient and input gradient for upstream gradient `dout`.
    pub fn backward(&self, cache: &Cache, dout: ArrayView2<f64>) -> (Vec<f64>, Array2<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut g = dout.to_owned();
        for (k, b) in self.blocks.iter().enumerate().rev() {
            if b.leaky {
                let pre = &cache.pre_act[k];
                ndarray::Zip::from(&mut g).and(pre).for_each(|gv, &p| {
                    if p <= 0.0 {
                        *gv *= LEAKY_SLOPE;
                    }
                });
            }
            if let (Some(nm), Some((xhat, inv_std))) = (&b.norm, &cache.normed[k]) {
                let gamma = self.vec(nm.gamma, nm.dim);
                let dgamma = (&g * xhat).sum_axis(Axis(0));
                let dbeta = g.sum_axis(Axis(0));
                grad[nm.gamma..nm.gamma + nm.dim].iter_mut().zip(dgamma.iter()).for_each(|(a, b)| *a = *b);
                grad[nm.beta..nm.beta + nm.dim].iter_mut().zip(dbeta.iter()).for_each(|(a, b)| *a = *b);
                let dxhat = &g * &gamma;
                g = match cache.mode {
                    Mode::Eval => dxhat * inv_std,
                    Mode::Train => {
                        let n = g.nrows() as f64;
                        let sum_d = dxhat.sum_axis(Axis(0));
                        let sum_dx = (&dxhat * xhat).sum_axis(Axis(0));
                        let mut out = dxhat * n;
                        out -= &sum_d;
                        out -= &(xhat * &sum_dx);
                        out * &(inv_std / n)
                    }
                };
            }
            let d = &b.dense;
            let input = &cache.inputs[k];
            let dw = input.t().dot(&g);
            let db = g.sum_axis(Axis(0));
            for (dst, src) in grad[d.w..d.w + d.fan_in * d.fan_out].iter_mut().zip(dw.iter()) {
                *dst = *src;
            }
            for (dst, src) in grad[d.b..d.b + d.fan_out].iter_mut().zip(db.iter()) {
                *dst = *src;
            }
            g = g.dot(&self.weight(d).t());
        }
        (grad, g)
    }

    /// `self <- (1 - tau) self + tau other`, parameters and running statistics.
    pub fn soft_update(&mut self, other: &Mlp, tau: f64) {
        for (a, b) in self.params.iter_mut().zip(&other.params) {
            *a = (1.0 - tau) * *a + tau * b;
        }
        for (a, b) in self.buffers.iter_mut().zip(&other.buffers) {
            *a = (1.0 - tau) * *a + tau * b;
        }
    }

    /// Eval-mode Lipschitz upper bound of output column `out` with respect to
    /// the input: Frobenius norms of the hidden layers times the largest
    /// batch-norm gain, and the Euclidean norm of the output column.
    pub fn lipschitz_upper(&self, out: usize) -> f64 {
        let n = self.blocks.len();
        let mut bound = 1.0;
        for (k, b) in self.blocks.iter().enumerate() {
            let w = self.weight(&b.dense);
            if k + 1 < n {
                bound *= w.iter().map(|v| v * v).sum::<f64>().sqrt();
            } else {
                bound *= w.column(out).dot(&w.column(out)).sqrt();
            }
            if let Some(nm) = &b.norm {
                let gain = (0..nm.dim)
                    .map(|j| self.params[nm.gamma + j].abs() / (self.buffers[nm.buf + nm.dim + j] + BN_EPS).sqrt())
                    .fold(0.0, f64::max);
                bound *= gain;
            }
        }
        bound
    }

    /// Euclidean distance between parameter vectors.
    pub fn param_distance(&self, other: &Mlp) -> f64 {
        self.params.iter().zip(&other.params).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

/// Matrix with orthonormal rows or columns, whichever is shorter.
pub fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let (long, short) = (rows.max(cols), rows.min(cols));
    let mut q = Array2::<f64>::zeros((long, short));
    for v in q.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    for j in 0..short {
        for k in 0..j {
            let proj = q.column(j).dot(&q.column(k));
            let ck = q.column(k).to_owned();
            q.column_mut(j).scaled_add(-proj, &ck);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    if rows >= cols {
        q
    } else {
        q.t().as_standard_layout().into_owned()
    }
}

/// Adam on a flat parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

/// Rows `lo..hi` of a matrix as an owned copy.
pub fn rows(x: &Array2<f64>, lo: usize, hi: usize) -> Array2<f64> {
    x.slice(s![lo..hi, ..]).to_owned()
}
