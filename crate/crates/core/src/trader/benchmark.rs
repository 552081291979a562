//! Almgren-Chriss liquidation benchmark and the reservation utility it implies.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::model::{step_state, ControlPair, MarketParams, TraderState};
use crate::rng::{stream, Purpose};

/// Inventory of the deterministic schedule minimizing `int (eta nu^2 + phi q^2) dt + alpha q_T^2`.
pub fn ac_inventory(t: f64, p: &MarketParams) -> f64 {
    let (q0, big_t, eta, alpha) = (p.q0, p.horizon, p.eta, p.alpha);
    if p.phi == 0.0 {
        let c = if alpha.is_infinite() { 1.0 / big_t } else { alpha / (eta + alpha * big_t) };
        return q0 * (1.0 - c * t);
    }
    let k = (p.phi / eta).sqrt();
    let (sh, ch) = ((k * big_t).sinh(), (k * big_t).cosh());
    let b = if alpha.is_infinite() { -ch / sh } else { -(eta * k * sh + alpha * ch) / (eta * k * ch + alpha * sh) };
    q0 * ((k * t).cosh() + b * (k * t).sinh())
}

/// Rate of the benchmark schedule.
pub fn ac_rate(t: f64, p: &MarketParams) -> f64 {
    let (q0, big_t, eta, alpha) = (p.q0, p.horizon, p.eta, p.alpha);
    if p.phi == 0.0 {
        let c = if alpha.is_infinite() { 1.0 / big_t } else { alpha / (eta + alpha * big_t) };
        return -q0 * c;
    }
    let k = (p.phi / eta).sqrt();
    let (sh, ch) = ((k * big_t).sinh(), (k * big_t).cosh());
    let b = if alpha.is_infinite() { -ch / sh } else { -(eta * k * sh + alpha * ch) / (eta * k * ch + alpha * sh) };
    q0 * k * ((k * t).sinh() + b * (k * t).cosh())
}

#[derive(Clone, Debug, Serialize)]
pub struct AcSchedule {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    /// Rate over `[t_k, t_{k+1})`, chosen so the discrete path hits the schedule exactly.
    pub nu: Vec<f64>,
}

impl AcSchedule {
    pub fn new(p: &MarketParams, n_steps: usize) -> Self {
        let dt = p.horizon / n_steps as f64;
        let t: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();
        let q: Vec<f64> = t.iter().map(|&s| ac_inventory(s, p)).collect();
        let nu = (0..n_steps).map(|k| (q[k + 1] - q[k]) / dt).collect();
        Self { t, q, nu }
    }
}

/// Monte-Carlo reservation utility of the benchmark, executed lit-only with zero fees.
#[derive(Clone, Debug, Serialize)]
pub struct Reservation {
    pub n_paths: usize,
    /// Terminal wealth `X_T + Q_T(S_T - alpha Q_T) - phi int Q^2` moments.
    pub wealth_mean: f64,
    pub wealth_var: f64,
    /// Certainty equivalent `mean - rho var / 2` (the wealth is Gaussian for a deterministic schedule).
    pub certainty_equivalent: f64,
    pub certainty_equivalent_se: f64,
    /// `R0 = -exp(-rho CE)`.
    pub r0: f64,
    /// Plain sample mean of `-exp(-rho W)` and its standard error, for reference.
    pub r0_sample_mean: f64,
    pub r0_sample_se: f64,
}

fn terminal_wealth(p: &MarketParams, sched: &AcSchedule, seed: u64, path: u64) -> f64 {
    let mut rng = stream(seed, Purpose::Benchmark, path);
    let dt = p.horizon / sched.nu.len() as f64;
    let sq = dt.sqrt();
    let mut st = TraderState { t: 0.0, q: p.q0, s: p.s0, x: p.x0 };
    let mut running = 0.0;
    for &nu in &sched.nu {
        let z: f64 = StandardNormal.sample(&mut rng);
        running += p.phi * st.q * st.q * dt;
        let c = ControlPair { nu, ell: Vec::new() };
        st = step_state(&st, &c, &[], 0.0, p.lambda_rate, dt, z * sq, p);
    }
    st.x + st.q * (st.s - p.alpha * st.q) - running
}

/// Benchmark schedule and reservation utility.
pub fn almgren_chriss_benchmark(p: &MarketParams, n_steps: usize, n_paths: usize, seed: u64) -> (AcSchedule, Reservation) {
    let sched = AcSchedule::new(p, n_steps);
    let w: Vec<f64> = (0..n_paths as u64).into_par_iter().map(|i| terminal_wealth(p, &sched, seed, i)).collect();
    let n = n_paths as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let ce = mean - 0.5 * p.rho * var;
    let ce_se = (var / n + (0.5 * p.rho).powi(2) * 2.0 * var * var / (n - 1.0).max(1.0)).sqrt();
    let u: Vec<f64> = w.iter().map(|x| -(-p.rho * x).exp()).collect();
    let um = u.iter().sum::<f64>() / n;
    let use_ = (u.iter().map(|x| (x - um).powi(2)).sum::<f64>() / (n - 1.0).max(1.0) / n).sqrt();
    let res = Reservation {
        n_paths,
        wealth_mean: mean,
        wealth_var: var,
        certainty_equivalent: ce,
        certainty_equivalent_se: ce_se,
        r0: -(-p.rho * ce).exp(),
        r0_sample_mean: um,
        r0_sample_se: use_,
    };
    (sched, res)
}

/// `y0` that delivers exactly the reservation utility: `-exp(-rho Ybar0) = R0`.
pub fn y0_from_reservation(r0: f64, p: &MarketParams) -> f64 {
    let ybar0 = -(-r0).ln() / p.rho;
    ybar0 - p.x0 - p.q0 * (p.s0 - p.alpha * p.q0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twap_limit() {
        let mut p = MarketParams::table1();
        p.alpha = f64::INFINITY;
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            assert!((ac_inventory(t, &p) - (1.0 - t)).abs() < 1e-14);
        }
        p.alpha = 1e9;
        assert!((ac_inventory(0.5, &p) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn euler_lagrange_and_robin() {
        for phi in [0.0, 0.001, 0.05] {
            let mut p = MarketParams::table1();
            p.phi = phi;
            let h = 1e-3;
            for k in 1..10 {
                let t = k as f64 / 10.0;
                let d2 = (ac_inventory(t + h, &p) - 2.0 * ac_inventory(t, &p) + ac_inventory(t - h, &p)) / (h * h);
                assert!((p.eta * d2 - phi * ac_inventory(t, &p)).abs() < 1e-6);
                let d1 = (ac_inventory(t + h, &p) - ac_inventory(t - h, &p)) / (2.0 * h);
                assert!((d1 - ac_rate(t, &p)).abs() < 1e-6);
            }
            let robin = p.eta * ac_rate(1.0, &p) + p.alpha * ac_inventory(1.0, &p);
            assert!(robin.abs() < 1e-12, "{robin}");
            assert!((ac_inventory(0.0, &p) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reservation_matches_gaussian_closed_form() {
        let p = MarketParams::table1();
        let n_steps = 200;
        let (sched, r) = almgren_chriss_benchmark(&p, n_steps, 4000, 9);
        // Exact moments of the discrete scheme.
        let dt = p.horizon / n_steps as f64;
        let (mut q, mut s_drift, mut mean_x) = (p.q0, 0.0, p.x0);
        let mut var = 0.0;
        for &nu in &sched.nu {
            mean_x += -((p.s0 + s_drift + p.eta * nu) * nu) * dt;
            var += 0.0;
            s_drift += (p.gamma * nu + p.epsilon * p.lambda_rate) * dt;
            q += nu * dt;
        }
        // Noise enters through the cash of later lit sales and the final mark.
        let mut coef: Vec<f64> = vec![0.0; n_steps];
        for j in 0..n_steps {
            let later: f64 = sched.nu[j + 1..].iter().map(|nu| -nu * dt).sum();
            coef[j] = p.sigma * (later + q);
        }
        for c in &coef {
            var += c * c * dt;
        }
        let s_t = p.s0 + s_drift;
        let mean = mean_x + q * (s_t - p.alpha * q);
        assert!((r.wealth_mean - mean).abs() < 4.0 * (var / 4000.0).sqrt());
        assert!((r.wealth_var / var - 1.0).abs() < 0.1);
    }

    #[test]
    fn y0_round_trip() {
        let p = MarketParams::table1();
        let r0 = -(-p.rho * 0.93).exp();
        let y0 = y0_from_reservation(r0, &p);
        let ybar = y0 + p.x0 + p.q0 * (p.s0 - p.alpha * p.q0);
        assert!((ybar - 0.93).abs() < 1e-12);
    }
}
