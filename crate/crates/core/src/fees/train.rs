//! Actor-critic training loop for the fee schedule.

use std::path::Path;

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::nets::{Actor, ActorOutput, Critic, STATE_DIM};
use super::nn::Adam;
use super::operator::{operator_batch, operator_with_control_gradient, OperatorConfig, OperatorForm, StateBox};
use crate::error::{invalid, Error, Result};
use crate::model::{DarkPoolSpec, MarketParams};
use crate::rng::{stream, Purpose};

/// Admissible learning rates.
pub const LEARNING_RATES: [f64; 5] = [1e-3, 5e-4, 1e-4, 5e-5, 1e-5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate reached at the last epoch by exponential decay; constant when absent.
    pub lr_final: Option<f64>,
    pub dt: f64,
    pub fd_step: f64,
    pub epochs: usize,
    pub critic_every: usize,
    pub actor_every: usize,
    pub target_every: usize,
    pub tau: f64,
    pub bounds: StateBox,
    pub seed: u64,
    /// Weight of the terminal-slice loss `(critic(T, .) - iota)^2`.
    pub anchor_weight: f64,
    pub bn_momentum: f64,
    pub z_bound: f64,
    pub form: OperatorForm,
    pub quad_nodes: usize,
    pub holdout_size: usize,
    /// Held-out loss is recorded every this many epochs, and at the first and last.
    pub holdout_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 200,
            learning_rate: 1e-3,
            lr_final: None,
            dt: 1e-3,
            fd_step: 1e-3,
            epochs: 50_000,
            critic_every: 1,
            actor_every: 2,
            target_every: 10,
            tau: 0.01,
            bounds: StateBox::default(),
            seed: 0,
            anchor_weight: 1e8,
            bn_momentum: 0.1,
            z_bound: 1.0,
            form: OperatorForm::Printed,
            quad_nodes: 16,
            holdout_size: 200,
            holdout_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !LEARNING_RATES.iter().any(|r| (r - self.learning_rate).abs() <= 1e-12 * r) {
            return Err(invalid(format!("learning rate {} not in {LEARNING_RATES:?}", self.learning_rate)));
        }
        if let Some(f) = self.lr_final {
            if !(f > 0.0 && f <= self.learning_rate) {
                return Err(invalid("lr_final must lie in (0, learning_rate]"));
            }
        }
        let counts = [
            (self.batch_size, "batch_size"),
            (self.epochs, "epochs"),
            (self.critic_every, "critic_every"),
            (self.actor_every, "actor_every"),
            (self.target_every, "target_every"),
            (self.quad_nodes, "quad_nodes"),
            (self.holdout_size, "holdout_size"),
            (self.holdout_every, "holdout_every"),
        ];
        for (v, name) in counts {
            if v == 0 {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        let reals = [
            (self.dt, "dt"),
            (self.fd_step, "fd_step"),
            (self.tau, "tau"),
            (self.anchor_weight, "anchor_weight"),
            (self.bn_momentum, "bn_momentum"),
            (self.z_bound, "z_bound"),
        ];
        for (v, name) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite")));
            }
        }
        if self.tau > 1.0 || self.bn_momentum > 1.0 {
            return Err(invalid("tau and bn_momentum must not exceed 1"));
        }
        self.bounds.validate()?;
        if self.dt >= self.bounds.horizon {
            return Err(invalid("dt must be shorter than the horizon"));
        }
        Ok(())
    }

    pub fn operator(&self) -> OperatorConfig {
        OperatorConfig { fd_step: self.fd_step, form: self.form, bounds: self.bounds, quad_nodes: self.quad_nodes }
    }

    /// Learning rate at `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.lr_final {
            Some(f) if self.epochs > 1 => {
                let frac = epoch as f64 / (self.epochs - 1) as f64;
                self.learning_rate * (f / self.learning_rate).powf(frac)
            }
            _ => self.learning_rate,
        }
    }
}

/// Uniform states in the box with `t` in `[0, T - dt]`.
pub fn sample_states<R: Rng + ?Sized>(n: usize, bounds: &StateBox, dt: f64, rng: &mut R) -> Array2<f64> {
    let mut upper = bounds.upper();
    upper[0] -= dt;
    let unit = Uniform::new(0.0, 1.0).expect("unit interval");
    Array2::from_shape_fn((n, STATE_DIM), |(_, j)| upper[j] * unit.sample(rng))
}

/// The same states moved to time `t`.
fn at_time(x: ArrayView2<f64>, t: f64) -> Array2<f64> {
    let mut y = x.to_owned();
    y.column_mut(0).fill(t);
    y
}

fn shifted(x: ArrayView2<f64>, dt: f64) -> Array2<f64> {
    let mut y = x.to_owned();
    y.column_mut(0).mapv_inplace(|t| t + dt);
    y
}

/// Bellman targets `target(t + dt) + F[critic] dt` with eval-mode networks.
fn bellman_targets(
    x: ArrayView2<f64>,
    critic: &Critic,
    target: &Critic,
    controls: &[ActorOutput],
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let terms = operator_batch(x, controls, critic, p, pools, &cfg.operator())?;
    let next = target.forward(shifted(x, cfg.dt).view());
    Ok(next.iter().zip(&terms).map(|(n, t)| n + t.value * cfg.dt).collect())
}

/// Bellman residuals `target(t + dt) + F[critic] dt - critic(t)` in eval mode.
pub fn bellman_residuals(
    x: ArrayView2<f64>,
    critic: &Critic,
    target: &Critic,
    actor: &Actor,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let controls = actor.forward(x);
    let y = bellman_targets(x, critic, target, &controls, p, pools, cfg)?;
    let now = critic.forward(x);
    Ok(y.iter().zip(&now).map(|(a, b)| a - b).collect())
}

fn mean_square(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64
}

/// Mean squared Bellman residual over the batch.
pub fn critic_loss(
    x: ArrayView2<f64>,
    critic: &Critic,
    target: &Critic,
    actor: &Actor,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    cfg: &TrainConfig,
) -> Result<f64> {
    Ok(mean_square(&bellman_residuals(x, critic, target, actor, p, pools, cfg)?))
}

/// Negative mean operator value under the actor's controls.
pub fn actor_loss(
    x: ArrayView2<f64>,
    critic: &Critic,
    actor: &Actor,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    cfg: &TrainConfig,
) -> Result<f64> {
    let terms = operator_batch(x, &actor.forward(x), critic, p, pools, &cfg.operator())?;
    Ok(-terms.iter().map(|t| t.value).sum::<f64>() / terms.len() as f64)
}

/// Terminal-slice residual `||critic(T, .) - iota|| / ||iota||` over the states.
pub fn terminal_relative_error(x: ArrayView2<f64>, critic: &Critic, horizon: f64) -> f64 {
    let xt = at_time(x, horizon);
    let v = critic.forward(xt.view());
    let (mut num, mut den) = (0.0, 0.0);
    for (vi, row) in v.iter().zip(xt.rows()) {
        num += (vi - row[4]).powi(2);
        den += row[4] * row[4];
    }
    (num / den).sqrt()
}

/// One semi-gradient critic step: targets are frozen, the loss is the Bellman
/// residual scaled by `1/dt^2` plus the anchored terminal slice. Returns the
/// pre-step mean squared residual.
#[allow(clippy::too_many_arguments)]
pub fn critic_step(
    critic: &mut Critic,
    adam: &mut Adam,
    x: ArrayView2<f64>,
    target: &Critic,
    actor: &Actor,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    cfg: &TrainConfig,
    lr: f64,
) -> Result<f64> {
    let controls = actor.forward(x);
    let y = bellman_targets(x, critic, target, &controls, p, pools, cfg)?;
    let xt = at_time(x, cfg.bounds.horizon);
    let stacked = concatenate(Axis(0), &[x, xt.view()]).expect("same width");
    let (out, cache) = critic.net.forward_train(stacked.view());
    let k = x.nrows();
    let mut dout = Array2::zeros((2 * k, 1));
    let mut loss = 0.0;
    for i in 0..k {
        let r = out[[i, 0]] - y[i];
        loss += r * r;
        dout[[i, 0]] = 2.0 * r / (k as f64 * cfg.dt * cfg.dt);
        let a = out[[k + i, 0]] - xt[[i, 4]];
        dout[[k + i, 0]] = 2.0 * cfg.anchor_weight * a / k as f64;
    }
    let (grad, _) = critic.net.backward(&cache, dout.view());
    if !grad.iter().all(|g| g.is_finite()) {
        return Err(Error::Numerical("non-finite critic gradient".into()));
    }
    adam.step(&mut critic.net.params, &grad, lr);
    Ok(loss / k as f64)
}

/// One actor step ascending the mean operator value with the critic frozen.
/// Returns the pre-step actor loss.
#[allow(clippy::too_many_arguments)]
pub fn actor_step(
    actor: &mut Actor,
    adam: &mut Adam,
    x: ArrayView2<f64>,
    critic: &Critic,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    cfg: &TrainConfig,
    lr: f64,
) -> Result<f64> {
    let (pre, outputs, cache) = actor.forward_train(x);
    let (terms, grads) = operator_with_control_gradient(x, &outputs, critic, p, pools, &cfg.operator())?;
    let k = x.nrows() as f64;
    let mut dpre = Array2::zeros(pre.raw_dim());
    for (i, g) in grads.iter().enumerate() {
        let slopes = actor.activation_slopes(&pre.row(i).to_vec());
        for j in 0..g.len() {
            dpre[[i, j]] = -g[j] * slopes[j] / k;
        }
    }
    let (grad, _) = actor.net.backward(&cache, dpre.view());
    if !grad.iter().all(|g| g.is_finite()) {
        return Err(Error::Numerical("non-finite actor gradient".into()));
    }
    adam.step(&mut actor.net.params, &grad, lr);
    Ok(-terms.iter().map(|t| t.value).sum::<f64>() / k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    pub holdout_loss: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    /// Held-out losses in epoch order.
    pub fn holdout(&self) -> Vec<(usize, f64)> {
        self.rows.iter().filter_map(|r| r.holdout_loss.map(|h| (r.epoch, h))).collect()
    }

    pub fn critic_losses(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.critic_loss).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Networks after training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trained {
    pub critic: Critic,
    pub target: Critic,
    pub actor: Actor,
    pub log: TrainLog,
}

/// Fresh networks drawn from the seed.
pub fn init_networks(cfg: &TrainConfig, n_pools: usize) -> (Critic, Actor) {
    let mut rng = stream(cfg.seed, Purpose::Init, 0);
    let critic = Critic::new(cfg.bn_momentum, &mut rng);
    let actor = Actor::new(n_pools, cfg.z_bound, cfg.bn_momentum, &mut rng);
    (critic, actor)
}

fn finite(v: f64, what: &str, epoch: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("{what} diverged at epoch {epoch}: {v}")))
    }
}

/// Runs the epoch loop: fresh batch each epoch, critic every `critic_every`,
/// actor every `actor_every`, soft target update every `target_every`.
pub fn train(cfg: &TrainConfig, p: &MarketParams, pools: &[DarkPoolSpec]) -> Result<Trained> {
    train_with(cfg, p, pools, |_, _| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with<F: FnMut(usize, &LogRow)>(
    cfg: &TrainConfig,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    mut on_epoch: F,
) -> Result<Trained> {
    cfg.validate()?;
    p.validate()?;
    if (cfg.bounds.horizon - p.horizon).abs() > 1e-12 {
        return Err(invalid("state box horizon differs from the market horizon"));
    }
    let (mut critic, mut actor) = init_networks(cfg, pools.len());
    let mut target = critic.clone();
    let mut critic_adam = Adam::new(critic.net.n_params());
    let mut actor_adam = Adam::new(actor.net.n_params());
    let holdout = sample_states(cfg.holdout_size, &cfg.bounds, cfg.dt, &mut stream(cfg.seed, Purpose::Holdout, 0));
    let mut log = TrainLog::default();
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        let mut row = LogRow { epoch, critic_loss: None, actor_loss: None, holdout_loss: None };
        if epoch == 0 {
            let h = critic_loss(holdout.view(), &critic, &target, &actor, p, pools, cfg)?;
            row.holdout_loss = Some(finite(h, "held-out loss", epoch)?);
        }
        let x = sample_states(cfg.batch_size, &cfg.bounds, cfg.dt, &mut stream(cfg.seed, Purpose::Epoch, epoch as u64));
        if epoch % cfg.critic_every == 0 {
            let l = critic_step(&mut critic, &mut critic_adam, x.view(), &target, &actor, p, pools, cfg, lr)?;
            row.critic_loss = Some(finite(l, "critic loss", epoch)?);
        }
        if epoch % cfg.actor_every == 0 {
            let l = actor_step(&mut actor, &mut actor_adam, x.view(), &critic, p, pools, cfg, lr)?;
            row.actor_loss = Some(finite(l, "actor loss", epoch)?);
        }
        if epoch % cfg.target_every == 0 {
            target.net.soft_update(&critic.net, cfg.tau);
        }
        let last = epoch + 1 == cfg.epochs;
        if epoch > 0 && ((epoch + 1) % cfg.holdout_every == 0 || last) {
            let h = critic_loss(holdout.view(), &critic, &target, &actor, p, pools, cfg)?;
            row.holdout_loss = Some(finite(h, "held-out loss", epoch)?);
        }
        on_epoch(epoch, &row);
        log.rows.push(row);
    }
    Ok(Trained { critic, target, actor, log })
}

/// Format tag written into every checkpoint.
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub config: TrainConfig,
    pub critic: Critic,
    pub target: Critic,
    pub actor: Actor,
}

impl Checkpoint {
    pub fn new(cfg: &TrainConfig, t: &Trained) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config: cfg.clone(),
            critic: t.critic.clone(),
            target: t.target.clone(),
            actor: t.actor.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let c: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!("checkpoint version {} unsupported", c.version)));
        }
        Ok(c)
    }
}
