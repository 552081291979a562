//! Monte-Carlo paths of the major trader in the competitive equilibrium.

use rayon::prelude::*;

use super::metrics::{PathMetrics, TrajectoryPoint};
use super::regulated::{clamp_rate, dark_fills, draw};
use super::SimConfig;
use crate::error::{invalid, Error, Result};
use crate::mfg::{MfgParams, MfgSolution};
use crate::model::{DarkPoolSpec, Fees, FillLaw, TraderState};
use crate::rng::{stream, Purpose};

fn run_path(
    k: usize,
    cfg: &SimConfig,
    sol: &MfgSolution,
    mp: &MfgParams,
    sigma: f64,
    s0: f64,
    pools: &[DarkPoolSpec],
) -> Result<PathMetrics> {
    let m = pools.len();
    let n = sol.major.t.len() - 1;
    let dt = sol.major.t[1] - sol.major.t[0];
    let sq = dt.sqrt();
    let laws: Vec<FillLaw> = pools.iter().map(|pl| FillLaw::new(pl, mp.k_c, 0.0)).collect();
    let probs: Vec<f64> = pools.iter().map(|pl| -(-pl.theta * dt).exp_m1()).collect();
    let mut rng = stream(cfg.seed, Purpose::Path, k as u64);
    let mut st = TraderState { t: 0.0, q: mp.q0, s: s0, x: 0.0 };
    let mut out = PathMetrics {
        path: k,
        impact: 0.0,
        terminal: st,
        lit_sold: 0.0,
        dark_volume: vec![0.0; m],
        xi: None,
        exchange_pnl: None,
        running_penalty: 0.0,
        clamp_events: 0,
        trajectory: (k < cfg.record_paths).then(Vec::new),
    };
    for i in 0..n {
        let (nu0, ell) = if st.q > 0.0 {
            (sol.major.nu0_at(i, st.q).min(0.0), sol.major.ell0_at(i, st.q))
        } else {
            (0.0, vec![0.0; m])
        };
        let d = draw(&mut rng, m);
        let (nu, cut) = clamp_rate(st.q, nu0, dt);
        let (fills, _, cut_dark) = dark_fills(st.q + nu * dt, &ell, &laws, &probs, &d);
        let mu = sol.minor.mu[i];
        if let Some(tr) = out.trajectory.as_mut() {
            tr.push(TrajectoryPoint { t: st.t, q: st.q, s: st.s, nu, ell, fees: Fees::zero(m), z: 0.0, u: vec![0.0; m] });
        }
        let drift = mp.gamma0 * nu + mp.gamma * mu;
        let filled: f64 = fills.iter().sum();
        out.clamp_events += (cut || cut_dark) as u32;
        out.impact += drift * dt;
        out.lit_sold -= nu * dt;
        out.running_penalty += mp.phi0 * st.q * st.q * dt;
        for (v, f) in out.dark_volume.iter_mut().zip(&fills) {
            *v += f;
        }
        let next = TraderState {
            t: st.t + dt,
            q: (st.q + nu * dt - filled).max(0.0),
            s: st.s + drift * dt + sigma * d.normal * sq,
            x: st.x - (st.s + mp.eta0 * nu) * nu * dt + st.s * filled,
        };
        if !(next.q.is_finite() && next.s.is_finite() && next.x.is_finite()) {
            return Err(Error::Numerical(format!("path {k}: non-finite state at t = {}", st.t)));
        }
        st = next;
    }
    out.terminal = st;
    Ok(out)
}

/// Simulates the major's path under the equilibrium feedbacks `nu0(t, q)`,
/// `l0(t, q)` and the deterministic minor rate `mu`, with zero fees and price
/// drift `gamma0 nu0 + gamma mu`. The time grid is the equilibrium's own.
pub fn simulate_competitive(
    cfg: &SimConfig,
    sol: &MfgSolution,
    mp: &MfgParams,
    sigma: f64,
    s0: f64,
    pools: &[DarkPoolSpec],
) -> Result<Vec<PathMetrics>> {
    cfg.validate()?;
    mp.validate()?;
    if sol.major.ell0.shape()[2] != pools.len() {
        return Err(invalid("equilibrium and pool list disagree on the number of pools"));
    }
    if sol.major.t.len() < 2 || sol.minor.mu.len() < sol.major.t.len() - 1 {
        return Err(invalid("equilibrium grid too short"));
    }
    if !(sigma >= 0.0) {
        return Err(invalid("sigma must be nonnegative"));
    }
    (0..cfg.n_paths).into_par_iter().map(|k| run_path(k, cfg, sol, mp, sigma, s0, pools)).collect()
}
