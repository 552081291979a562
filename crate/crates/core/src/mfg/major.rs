//! Major trader's reduced HJB on a (time x inventory) grid.

use ndarray::{Array2, Array3};
use serde::Serialize;

use super::params::MfgParams;
use crate::error::{invalid, Error, Result};
use crate::model::{DarkPoolSpec, FillLaw};
use crate::numeric::{brent, interp_uniform};

/// Grid of the major's problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MajorGrid {
    pub n_time: usize,
    pub n_q: usize,
    pub q_max: f64,
    pub horizon: f64,
}

impl MajorGrid {
    pub fn dt(&self) -> f64 {
        self.horizon / self.n_time as f64
    }

    pub fn dq(&self) -> f64 {
        self.q_max / self.n_q as f64
    }

    pub fn q(&self, j: usize) -> f64 {
        j as f64 * self.dq()
    }
}

/// Value and feedback controls of the major, indexed `[time, inventory]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MajorValue {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub h0_grid: Array2<f64>,
    pub nu0: Array2<f64>,
    /// `[time, inventory, pool]`.
    pub ell0: Array3<f64>,
    /// Zero of the marginal value, clamped to `[0, q_max]`.
    pub b: Vec<f64>,
}

impl MajorValue {
    pub fn dq(&self) -> f64 {
        self.q[1] - self.q[0]
    }

    /// Lit feedback at node `i`, linearly interpolated in inventory.
    pub fn nu0_at(&self, i: usize, q: f64) -> f64 {
        let row = self.nu0.row(i);
        interp_uniform(row.as_slice().expect("standard layout"), 0.0, self.dq(), q)
    }

    /// Dark feedback of every pool at node `i`.
    pub fn ell0_at(&self, i: usize, q: f64) -> Vec<f64> {
        let m = self.ell0.shape()[2];
        (0..m)
            .map(|k| {
                let col: Vec<f64> = self.ell0.slice(ndarray::s![i, .., k]).to_vec();
                interp_uniform(&col, 0.0, self.dq(), q).min(q.max(0.0))
            })
            .collect()
    }
}

/// Marginal value `dh/dq` at cell midpoints `(k + 1/2) dq`, linear in between.
#[derive(Clone, Debug)]
pub struct MarginalSlice {
    pub dq: f64,
    pub d: Vec<f64>,
}

impl MarginalSlice {
    pub fn from_values(h: &[f64], dq: f64) -> Self {
        Self { dq, d: h.windows(2).map(|w| (w[1] - w[0]) / dq).collect() }
    }

    pub fn at(&self, x: f64) -> f64 {
        interp_uniform(&self.d, 0.5 * self.dq, self.dq, x)
    }

    /// Errors when the marginal increases by more than `tol` between cells.
    pub fn check_monotone(&self, tol: f64) -> Result<()> {
        for (k, w) in self.d.windows(2).enumerate() {
            if w[1] - w[0] > tol {
                return Err(Error::Numerical(format!(
                    "marginal value increases by {:.3e} at q = {:.4}; value is not concave on the grid",
                    w[1] - w[0],
                    (k as f64 + 1.5) * self.dq
                )));
            }
        }
        Ok(())
    }

    /// Threshold `b` with `dh/dq(b) = 0`, clamped to the grid.
    pub fn threshold(&self) -> f64 {
        let n = self.d.len();
        if self.d[0] <= 0.0 {
            return 0.0;
        }
        for k in 1..n {
            if self.d[k] <= 0.0 {
                let (x0, x1) = ((k as f64 - 0.5) * self.dq, (k as f64 + 0.5) * self.dq);
                let (y0, y1) = (self.d[k - 1], self.d[k]);
                return x0 + (x1 - x0) * y0 / (y0 - y1);
            }
        }
        n as f64 * self.dq
    }
}

/// Dark postings of the major at inventory `q`. One pool uses the threshold
/// rule; several pools equalise `theta_i P(r_i > l_i) (-dh/dq(q - l_i))`
/// under `sum l_i <= q` by root-finding on the common level.
pub fn major_dark_alloc(q: f64, marg: &MarginalSlice, laws: &[(f64, FillLaw)]) -> Result<Vec<f64>> {
    let m = laws.len();
    if m == 0 || q <= 0.0 {
        return Ok(vec![0.0; m]);
    }
    let b = marg.threshold();
    let cap = (q - b).max(0.0).min(q);
    if cap == 0.0 {
        return Ok(vec![0.0; m]);
    }
    if m == 1 {
        return Ok(vec![cap]);
    }
    let value = |i: usize, l: f64| {
        let (theta, law) = &laws[i];
        theta * law.survival(l) * (-marg.at(q - l)).max(0.0)
    };
    let post = |i: usize, level: f64| -> Result<f64> {
        if value(i, 0.0) <= level {
            return Ok(0.0);
        }
        if value(i, cap) >= level {
            return Ok(cap);
        }
        Ok(brent(|l| value(i, l) - level, 0.0, cap, 1e-13, 200)?.0)
    };
    let free: Vec<f64> = vec![cap; m];
    if free.iter().sum::<f64>() <= q {
        return Ok(free);
    }
    let top = (0..m).map(|i| value(i, 0.0)).fold(0.0, f64::max);
    let excess = |level: f64| -> f64 {
        (0..m).map(|i| post(i, level).unwrap_or(f64::NAN)).sum::<f64>() - q
    };
    let (level, _) = brent(excess, 0.0, top, 1e-15 * top.max(1e-300), 200)?;
    let mut ell = (0..m).map(|i| post(i, level)).collect::<Result<Vec<f64>>>()?;
    let total: f64 = ell.iter().sum();
    if total > q {
        ell.iter_mut().for_each(|l| *l *= q / total);
    }
    Ok(ell)
}

/// Backward explicit upwind sweep of the major's HJB given the minors' mean
/// rate path `mu` (one value per time node). Dark pools are fee-free.
pub fn solve_major_hjb(mu: &[f64], mp: &MfgParams, pools: &[DarkPoolSpec], grid: MajorGrid) -> Result<MajorValue> {
    let nt = grid.n_time;
    let nq = grid.n_q;
    if mu.len() != nt + 1 {
        return Err(invalid(format!("mean rate path has {} nodes, grid has {}", mu.len(), nt + 1)));
    }
    for p in pools {
        p.validate()?;
    }
    let (dt, dq) = (grid.dt(), grid.dq());
    let laws: Vec<(f64, FillLaw)> = pools.iter().map(|p| (p.theta, FillLaw::new(p, mp.k_c, 0.0))).collect();
    let m = laws.len();
    let qs: Vec<f64> = (0..=nq).map(|j| grid.q(j)).collect();

    let mut h = Array2::<f64>::zeros((nt + 1, nq + 1));
    let mut nu0 = Array2::<f64>::zeros((nt + 1, nq + 1));
    let mut ell0 = Array3::<f64>::zeros((nt + 1, nq + 1, m));
    let mut b = vec![0.0; nt + 1];
    for j in 0..=nq {
        h[[nt, j]] = -mp.alpha0 * qs[j] * qs[j];
    }

    let mut feedback = |n: usize, slice: &[f64], nu0: &mut Array2<f64>, ell0: &mut Array3<f64>| -> Result<MarginalSlice> {
        let marg = MarginalSlice::from_values(slice, dq);
        let scale = marg.d.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        marg.check_monotone(1e-8 * scale)?;
        b[n] = marg.threshold();
        for j in 1..=nq {
            let p = marg.d[j - 1] + mp.gamma0 * qs[j];
            nu0[[n, j]] = (p / (2.0 * mp.eta0)).min(0.0);
            if m > 0 {
                let ell = major_dark_alloc(qs[j], &marg, &laws)?;
                for (k, l) in ell.into_iter().enumerate() {
                    ell0[[n, j, k]] = l;
                }
            }
        }
        Ok(marg)
    };

    for n in (0..nt).rev() {
        let next: Vec<f64> = h.row(n + 1).to_vec();
        feedback(n, &next, &mut nu0, &mut ell0)?;
        let cfl = (0..=nq).map(|j| nu0[[n, j]].abs()).fold(0.0, f64::max) * dt / dq;
        if cfl > 1.0 {
            return Err(Error::Cfl { ratio: cfl });
        }
        h[[n, 0]] = next[0];
        for j in 1..=nq {
            let q = qs[j];
            let nu = nu0[[n, j]];
            let grad = (next[j] - next[j - 1]) / dq;
            let ham = -mp.phi0 * q * q - mp.eta0 * nu * nu + (grad + mp.gamma0 * q) * nu + mp.gamma * mu[n] * q;
            let mut jump = 0.0;
            for (k, (theta, law)) in laws.iter().enumerate() {
                let l = ell0[[n, j, k]];
                if l > 0.0 {
                    let e = law.expect_min(l, |x| interp_uniform(&next, 0.0, dq, q - x));
                    jump += theta * (e - next[j]);
                }
            }
            h[[n, j]] = next[j] + dt * (ham + jump);
        }
    }
    let last: Vec<f64> = h.row(nt).to_vec();
    feedback(nt, &last, &mut nu0, &mut ell0)?;

    Ok(MajorValue {
        t: (0..=nt).map(|i| i as f64 * dt).collect(),
        q: qs,
        h0_grid: h,
        nu0,
        ell0,
        b,
    })
}
