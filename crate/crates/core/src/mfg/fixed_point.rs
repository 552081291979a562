//! Relaxed fixed point on the minors' mean rate.

use serde::Serialize;

use super::major::{solve_major_hjb, MajorGrid, MajorValue};
use super::minor::{minor_response, InitialDensity, MinorEquilibrium};
use super::params::{InitialGuess, MfgConfig, MfgParams};
use crate::error::{invalid, Error, Result};
use crate::model::{DarkPoolSpec, FillLaw};

/// Equilibrium triple plus the iteration history.
#[derive(Clone, Debug, Serialize)]
pub struct MfgSolution {
    pub minor: MinorEquilibrium,
    pub major: MajorValue,
    /// Expected major inventory.
    pub q0bar: Vec<f64>,
    /// Major lit rate along `q0bar`, the forcing seen by the minors.
    pub nu0_path: Vec<f64>,
    /// `||mu_{i+1} - mu_i||_inf` after each update.
    pub residuals: Vec<f64>,
}

impl MfgSolution {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }
}

/// Integrates `Q0bar' = nu0(t, Q0bar) - sum theta_i E[min(r_i, l_i(t, Q0bar))]`
/// with forward Euler and returns `(Q0bar, nu0 along it)`.
pub fn major_mean_path(major: &MajorValue, mp: &MfgParams, pools: &[DarkPoolSpec]) -> (Vec<f64>, Vec<f64>) {
    let laws: Vec<(f64, FillLaw)> = pools.iter().map(|p| (p.theta, FillLaw::new(p, mp.k_c, 0.0))).collect();
    let n1 = major.t.len();
    let dt = major.t[1] - major.t[0];
    let mut q = vec![0.0; n1];
    let mut nu = vec![0.0; n1];
    q[0] = mp.q0;
    for i in 0..n1 {
        nu[i] = major.nu0_at(i, q[i]);
        if i + 1 < n1 {
            let dark: f64 = major
                .ell0_at(i, q[i])
                .iter()
                .zip(&laws)
                .map(|(l, (theta, law))| theta * law.mean_fill(*l))
                .sum();
            q[i + 1] = (q[i] + dt * (nu[i] - dark)).max(0.0);
        }
    }
    (q, nu)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Alternates the major's backward sweep, the major mean path, and the minor
/// response, relaxing `mu <- (1 - omega) mu + omega mu_new` until the sup-norm
/// change drops below `tol`.
pub fn mfg_fixed_point(cfg: &MfgConfig, mp: &MfgParams, pools: &[DarkPoolSpec]) -> Result<MfgSolution> {
    cfg.validate()?;
    mp.validate()?;
    let grid = MajorGrid { n_time: cfg.n_time, n_q: cfg.n_q, q_max: cfg.q_max, horizon: mp.horizon };
    if mp.q0 > cfg.q_max {
        return Err(invalid(format!("Q0 = {} exceeds the grid bound {}", mp.q0, cfg.q_max)));
    }
    let dt = grid.dt();
    let dq = grid.dq();
    let m0: InitialDensity = cfg.density(mp.e0)?;
    let mp = &MfgParams { e0: m0.mean(), ..mp.clone() };
    let n1 = cfg.n_time + 1;
    let respond = |nu0: &[f64]| minor_response(nu0, dt, mp, &m0, &cfg.snapshot_times, dq);

    let mut mu = match &cfg.initial {
        InitialGuess::MinorResponse => respond(&vec![0.0; n1])?.mu,
        InitialGuess::Zero => vec![0.0; n1],
        InitialGuess::Constant(c) => vec![*c; n1],
        InitialGuess::Custom(v) => {
            if v.len() != n1 {
                return Err(invalid(format!("initial rate path has {} nodes, expected {n1}", v.len())));
            }
            v.clone()
        }
    };

    let mut residuals = Vec::new();
    loop {
        let major = solve_major_hjb(&mu, mp, pools, grid)?;
        let (q0bar, nu0_path) = major_mean_path(&major, mp, pools);
        let minor = respond(&nu0_path)?;
        let next: Vec<f64> = mu.iter().zip(&minor.mu).map(|(a, b)| (1.0 - cfg.omega) * a + cfg.omega * b).collect();
        let res = sup_diff(&next, &mu);
        residuals.push(res);
        mu = next;
        if res < cfg.tol {
            return Ok(MfgSolution { minor, major, q0bar, nu0_path, residuals });
        }
        if residuals.len() >= cfg.max_iters {
            return Err(Error::NonConvergence { what: "mean-field fixed point", iterations: residuals.len(), residual: res });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{table2_pools, LiquidityParam};

    fn small() -> MfgConfig {
        MfgConfig { n_time: 400, n_q: 120, ..Default::default() }
    }

    #[test]
    fn decoupled_minors_converge_at_once() {
        let mp = MfgParams { gamma0: 0.0, ..MfgParams::table2() };
        let sol = mfg_fixed_point(&small(), &mp, &table2_pools(LiquidityParam::Rate)).unwrap();
        assert_eq!(sol.iterations(), 1);
    }

    #[test]
    fn idle_major_without_inventory() {
        let mp = MfgParams { q0: 0.0, ..MfgParams::table2() };
        let sol = mfg_fixed_point(&small(), &mp, &[]).unwrap();
        assert!(sol.q0bar.iter().all(|q| *q == 0.0));
        assert!(sol.nu0_path.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn relaxation_contracts() {
        let mp = MfgParams::table2();
        let sol = mfg_fixed_point(&small(), &mp, &table2_pools(LiquidityParam::Rate)).unwrap();
        for w in sol.residuals.windows(2) {
            assert!(w[1] < w[0], "{:?}", sol.residuals);
        }
        let dt = 1.0 / 400.0;
        for (mu, de) in sol.minor.mu.iter().zip(super::super::minor::grid_derivative(&sol.minor.e, dt)) {
            assert!((mu - de).abs() < 10.0 * dt);
        }
        assert!(sol.q0bar.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn bad_initial_path_length() {
        let cfg = MfgConfig { initial: InitialGuess::Custom(vec![0.0; 3]), ..small() };
        assert!(mfg_fixed_point(&cfg, &MfgParams::table2(), &[]).is_err());
    }
}
