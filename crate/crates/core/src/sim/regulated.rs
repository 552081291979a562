//! Monte-Carlo paths of the regulated market.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::metrics::{PathMetrics, TrajectoryPoint};
use super::SimConfig;
use crate::error::{invalid, Error, Result};
use crate::fees::ActorSchedule;
use crate::model::{exchange_pnl_step, step_state, ControlPair, DarkPoolSpec, ExchangeState, Fees, FillLaw, MarketParams, TraderState};
use crate::rng::{stream, Purpose};
use crate::trader::{hamiltonian, XiAccumulator};

/// Fees and contract sensitivities `(z, u)` offered to the large trader.
#[derive(Clone, Debug)]
pub enum Policy<'a> {
    /// Fixed fees with the hedging contract `z = -q sigma`, `u = 0`.
    Hedged(Fees),
    /// Fixed fees and fixed sensitivities.
    Fixed { fees: Fees, z: f64, u: Vec<f64> },
    /// Fees and sensitivities read from a trained actor at every step.
    Actor(&'a ActorSchedule),
}

impl Policy<'_> {
    fn check(&self, m: usize) -> Result<()> {
        let ok = match self {
            Policy::Hedged(f) => f.dark.len() == m,
            Policy::Fixed { fees, u, .. } => fees.dark.len() == m && u.len() == m,
            Policy::Actor(a) => a.actor.n_pools == m,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("policy does not cover the {m} pools")))
        }
    }

    fn controls(&self, states: &[ExchangeState], p: &MarketParams) -> Vec<(Fees, f64, Vec<f64>)> {
        match self {
            Policy::Hedged(f) => {
                states.iter().map(|s| (f.clone(), -s.trader.q * p.sigma, vec![0.0; f.dark.len()])).collect()
            }
            Policy::Fixed { fees, z, u } => states.iter().map(|_| (fees.clone(), *z, u.clone())).collect(),
            Policy::Actor(a) => a
                .controls(states)
                .into_iter()
                .map(|o| (Fees { lit: o.c_l, dark: o.c_d }, o.z, o.u))
                .collect(),
        }
    }
}

/// Per-path random draws for one step: a normal and two uniforms per pool.
pub(crate) struct StepDraws {
    pub normal: f64,
    pub arrival: Vec<f64>,
    pub size: Vec<f64>,
}

pub(crate) fn draw(rng: &mut ChaCha8Rng, m: usize) -> StepDraws {
    let normal = rng.sample(StandardNormal);
    let mut arrival = Vec::with_capacity(m);
    let mut size = Vec::with_capacity(m);
    for _ in 0..m {
        arrival.push(rng.random::<f64>());
        size.push(rng.random::<f64>());
    }
    StepDraws { normal, arrival, size }
}

/// Lit rate cut so that one step cannot overshoot zero inventory.
pub(crate) fn clamp_rate(q: f64, nu: f64, dt: f64) -> (f64, bool) {
    if q + nu * dt < 0.0 {
        (-q.max(0.0) / dt, true)
    } else {
        (nu, false)
    }
}

/// Dark fills for one step, at most one arrival per pool, each cut to the
/// inventory left after the lit trade.
pub(crate) fn dark_fills(
    remaining: f64,
    ell: &[f64],
    laws: &[FillLaw],
    probs: &[f64],
    d: &StepDraws,
) -> (Vec<f64>, Vec<u32>, bool) {
    let mut left = remaining.max(0.0);
    let mut fills = vec![0.0; ell.len()];
    let mut jumps = vec![0; ell.len()];
    let mut clamped = false;
    for i in 0..ell.len() {
        if d.arrival[i] < probs[i] {
            jumps[i] = 1;
            if ell[i] > 0.0 {
                let mut f = ell[i].min(laws[i].quantile(d.size[i]));
                if f > left {
                    f = left;
                    clamped = true;
                }
                left -= f;
                fills[i] = f;
            }
        }
    }
    (fills, jumps, clamped)
}

struct Live {
    rng: ChaCha8Rng,
    state: ExchangeState,
    xi: XiAccumulator,
    metrics: PathMetrics,
}

fn check_finite(k: usize, st: &TraderState, extra: f64) -> Result<()> {
    if st.q.is_finite() && st.s.is_finite() && st.x.is_finite() && extra.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("path {k}: non-finite state at t = {}", st.t)))
    }
}

fn run_block(
    first: usize,
    n: usize,
    cfg: &SimConfig,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    policy: &Policy,
    y0: f64,
) -> Result<Vec<PathMetrics>> {
    let m = pools.len();
    let dt = p.horizon / cfg.n_steps as f64;
    let sq = dt.sqrt();
    let thetas: Vec<f64> = pools.iter().map(|pl| pl.theta).collect();
    let start = TraderState { t: 0.0, q: p.q0, s: p.s0, x: p.x0 };
    let mut live: Vec<Live> = (first..first + n)
        .map(|k| Live {
            rng: stream(cfg.seed, Purpose::Path, k as u64),
            state: ExchangeState::new(start, y0),
            xi: XiAccumulator::new(y0),
            metrics: PathMetrics {
                path: k,
                impact: 0.0,
                terminal: start,
                lit_sold: 0.0,
                dark_volume: vec![0.0; m],
                xi: None,
                exchange_pnl: None,
                running_penalty: 0.0,
                clamp_events: 0,
                trajectory: (k < cfg.record_paths).then(Vec::new),
            },
        })
        .collect();
    for step in 0..cfg.n_steps {
        let t = step as f64 * dt;
        let states: Vec<ExchangeState> = live
            .iter_mut()
            .map(|l| {
                l.state.trader.t = t;
                l.state
            })
            .collect();
        let offers = policy.controls(&states, p);
        for (l, (fees, z, u)) in live.iter_mut().zip(offers) {
            let st = l.state.trader;
            let (h, ctrl) = hamiltonian(st.q, z, &u, &fees, p, pools)?;
            let d = draw(&mut l.rng, m);
            let (nu, cut) = clamp_rate(st.q, ctrl.nu, dt);
            let intensity = (p.k_theta * nu).exp();
            let laws: Vec<FillLaw> = pools.iter().zip(&fees.dark).map(|(pl, c)| FillLaw::new(pl, p.k_c, *c)).collect();
            let probs: Vec<f64> = thetas.iter().map(|th| -(-th * intensity * dt).exp_m1()).collect();
            let (fills, jumps, cut_dark) = dark_fills(st.q + nu * dt, &ctrl.ell, &laws, &probs, &d);
            let used = ControlPair { nu, ell: ctrl.ell };
            let dw = d.normal * sq;
            // Brownian increment of the reference measure, under which the
            // price carries no large-trader drift.
            let dw0 = dw + p.gamma * nu / p.sigma * dt;
            let mt = &mut l.metrics;
            if let Some(tr) = mt.trajectory.as_mut() {
                tr.push(TrajectoryPoint { t, q: st.q, s: st.s, nu, ell: used.ell.clone(), fees: fees.clone(), z, u: u.clone() });
            }
            mt.clamp_events += (cut || cut_dark) as u32;
            mt.impact += (p.gamma * nu + p.epsilon * p.lambda_rate) * dt;
            mt.lit_sold -= nu * dt;
            mt.running_penalty += p.phi * st.q * st.q * dt;
            for i in 0..m {
                mt.dark_volume[i] += fills[i];
            }
            l.xi.step(h, z, &u, &thetas, &jumps, dw0, dt);
            l.state.iota += exchange_pnl_step(&l.state, &used, &fills, &fees, p.lambda_rate, dt, p);
            let mut next = step_state(&st, &used, &fills, fees.lit, p.lambda_rate, dt, dw, p);
            if next.q < 0.0 {
                next.q = 0.0;
            }
            check_finite(mt.path, &next, l.xi.xi)?;
            l.state.trader = next;
        }
    }
    Ok(live
        .into_iter()
        .map(|mut l| {
            l.metrics.terminal = l.state.trader;
            l.metrics.xi = Some(l.xi.xi);
            l.metrics.exchange_pnl = Some(l.state.iota);
            l.metrics
        })
        .collect())
}

/// Simulates `cfg.n_paths` regulated paths with the trader's best response to
/// `policy`. `y0` is the contract's initial value. Paths are processed in
/// lockstep blocks, so an actor is evaluated once per block and step; results
/// are ordered by path index and do not depend on the thread count.
pub fn simulate_regulated(
    cfg: &SimConfig,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    policy: &Policy,
    y0: f64,
) -> Result<Vec<PathMetrics>> {
    cfg.validate()?;
    p.validate()?;
    for pl in pools {
        pl.validate()?;
    }
    policy.check(pools.len())?;
    let blocks: Vec<(usize, usize)> = (0..cfg.n_paths)
        .step_by(cfg.block)
        .map(|s| (s, cfg.block.min(cfg.n_paths - s)))
        .collect();
    let out: Vec<Vec<PathMetrics>> = blocks
        .par_iter()
        .map(|&(s, n)| run_block(s, n, cfg, p, pools, policy, y0))
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}
