//! Minor-player side of the competitive game: value coefficients, the
//! mean-inventory boundary-value problem and the transported density.

use serde::{Deserialize, Serialize};

use super::params::MfgParams;
use crate::error::{invalid, Error, Result};
use crate::model::special::{norm_cdf, norm_pdf};
use crate::numeric::brent;

/// `h2(t) = -alpha eta / (eta + alpha (T - t))`.
pub fn riccati_h2(t: f64, alpha: f64, eta: f64, horizon: f64) -> f64 {
    -alpha * eta / (eta + alpha * (horizon - t))
}

/// Derivative of a grid path: central in the interior, second-order one-sided
/// at both ends.
pub fn grid_derivative(y: &[f64], dt: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 3, "need at least three nodes");
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt);
    for i in 1..n - 1 {
        d[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt);
    }
    d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * dt);
    d
}

/// Thomas algorithm for `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = diag[i] - lower[i] * c[i - 1];
        }
        if pivot.abs() < 1e-300 || !pivot.is_finite() {
            return Err(Error::Numerical(format!("singular tridiagonal system at row {i}")));
        }
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - if i > 0 { lower[i] * d[i - 1] } else { 0.0 }) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Mean inventory `E` and mean rate `mu = E'` solving
/// `2 eta E'' + gamma E' = -gamma0 nu0`, `E(0) = E0`, `E'(T) + (alpha/eta) E(T) = 0`.
///
/// Second-order central differences with a ghost node for the Robin condition.
pub fn solve_minor_bvp(nu0: &[f64], dt: f64, mp: &MfgParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let n1 = nu0.len();
    if n1 < 3 {
        return Err(invalid("the time grid needs at least three nodes"));
    }
    if nu0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("major rate path is not finite"));
    }
    let n = n1 - 1;
    let (eta, gamma) = (mp.eta, mp.gamma);
    let lo = 2.0 * eta / (dt * dt) - gamma / (2.0 * dt);
    let mid = -4.0 * eta / (dt * dt);
    let up = 2.0 * eta / (dt * dt) + gamma / (2.0 * dt);
    // Unknowns E_1..E_N.
    let mut lower = vec![0.0; n];
    let mut diag = vec![mid; n];
    let mut upper = vec![0.0; n];
    let mut rhs: Vec<f64> = nu0[1..].iter().map(|v| -mp.gamma0 * v).collect();
    for k in 0..n {
        if k > 0 {
            lower[k] = lo;
        }
        if k + 1 < n {
            upper[k] = up;
        }
    }
    rhs[0] -= lo * mp.e0;
    // Ghost E_{N+1} = E_{N-1} - 2 dt (alpha/eta) E_N.
    let last = n - 1;
    diag[last] -= up * 2.0 * dt * mp.alpha / eta;
    if n >= 2 {
        lower[last] += up;
    } else {
        rhs[last] -= up * mp.e0;
    }
    let interior = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    let mut e = Vec::with_capacity(n1);
    e.push(mp.e0);
    e.extend(interior);
    let mu = grid_derivative(&e, dt);
    Ok((e, mu))
}

/// `h1 = 2 eta E' - 2 h2 E` and `h0` from `h0' = -h1^2/(4 eta)`, `h0(T) = 0`
/// by backward trapezoid quadrature.
pub fn recover_h1_h0(e: &[f64], mu: &[f64], h2: &[f64], dt: f64, mp: &MfgParams) -> (Vec<f64>, Vec<f64>) {
    let h1: Vec<f64> = e
        .iter()
        .zip(mu)
        .zip(h2)
        .map(|((&e, &m), &h)| 2.0 * mp.eta * m - 2.0 * h * e)
        .collect();
    let n = h1.len();
    let mut h0 = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let f = |x: f64| x * x / (4.0 * mp.eta);
        h0[i] = h0[i + 1] + 0.5 * dt * (f(h1[i]) + f(h1[i + 1]));
    }
    (h1, h0)
}

/// Initial law of the minor inventories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDensity {
    /// Normal law with location `loc` and scale `scale`, conditioned on `[lo, hi]`.
    TruncatedNormal { loc: f64, scale: f64, lo: f64, hi: f64 },
    /// Piecewise-constant density on cells of width `dq` starting at `lo`.
    Histogram { lo: f64, dq: f64, density: Vec<f64> },
}

impl InitialDensity {
    /// Truncated normal on `[lo, hi]` whose conditional mean is `mean`.
    pub fn truncated_normal_with_mean(mean: f64, scale: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < mean && mean < hi && scale > 0.0) {
            return Err(invalid(format!("cannot place mean {mean} inside ({lo}, {hi}) with scale {scale}")));
        }
        let mean_of = |loc: f64| Self::TruncatedNormal { loc, scale, lo, hi }.mean() - mean;
        let (loc, _) = brent(mean_of, lo - 10.0 * scale, hi + 10.0 * scale, 1e-15, 200)?;
        Ok(Self::TruncatedNormal { loc, scale, lo, hi })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::TruncatedNormal { scale, lo, hi, .. } => {
                if !(scale > &0.0 && lo < hi) {
                    return Err(invalid("truncated normal needs scale > 0 and lo < hi"));
                }
            }
            Self::Histogram { dq, density, .. } => {
                if !(dq > &0.0) || density.is_empty() || density.iter().any(|d| *d < 0.0 || !d.is_finite()) {
                    return Err(invalid("histogram density needs dq > 0 and non-negative finite cells"));
                }
                let mass: f64 = density.iter().sum::<f64>() * dq;
                if (mass - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!("histogram density integrates to {mass}")));
                }
            }
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::TruncatedNormal { lo, hi, .. } => (*lo, *hi),
            Self::Histogram { lo, dq, density } => (*lo, lo + dq * density.len() as f64),
        }
    }

    /// `P(Q <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::TruncatedNormal { loc, scale, lo, hi } => {
                let x = x.clamp(*lo, *hi);
                let (a, b) = ((lo - loc) / scale, (hi - loc) / scale);
                normal_mass(a, (x - loc) / scale) / normal_mass(a, b)
            }
            Self::Histogram { lo, dq, density } => {
                let u = ((x - lo) / dq).clamp(0.0, density.len() as f64);
                let k = u.floor() as usize;
                let full: f64 = density[..k].iter().sum();
                let part = if k < density.len() { density[k] * (u - k as f64) } else { 0.0 };
                (full + part) * dq
            }
        }
    }

    /// `E[Q; Q <= x]`.
    pub fn partial_moment(&self, x: f64) -> f64 {
        match self {
            Self::TruncatedNormal { loc, scale, lo, hi } => {
                let x = x.clamp(*lo, *hi);
                let (a, b, z) = ((lo - loc) / scale, (hi - loc) / scale, (x - loc) / scale);
                (loc * normal_mass(a, z) - scale * (norm_pdf(z) - norm_pdf(a))) / normal_mass(a, b)
            }
            Self::Histogram { lo, dq, density } => {
                let u = ((x - lo) / dq).clamp(0.0, density.len() as f64);
                let k = u.floor() as usize;
                let cell = |j: usize, frac: f64| {
                    let a = lo + j as f64 * dq;
                    let b = a + frac * dq;
                    density[j] * 0.5 * (b * b - a * a)
                };
                let full: f64 = (0..k).map(|j| cell(j, 1.0)).sum();
                full + if k < density.len() { cell(k, u - k as f64) } else { 0.0 }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.partial_moment(self.support().1)
    }
}

/// `P(a < Z <= b)` for a standard normal, from the tail that keeps precision.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        norm_cdf(-a) - norm_cdf(-b)
    } else {
        norm_cdf(b) - norm_cdf(a)
    }
}

/// Transported minor density on a uniform grid of cells `[lo + k dq, lo + (k+1) dq)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySnapshot {
    pub t: f64,
    pub lo: f64,
    pub dq: f64,
    /// Exact probability of each cell.
    pub mass: Vec<f64>,
    /// Exact first moment `E[Q; Q in cell]` of each cell.
    pub moment: Vec<f64>,
}

impl DensitySnapshot {
    pub fn density(&self) -> Vec<f64> {
        self.mass.iter().map(|m| m / self.dq).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment.iter().sum()
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.mass.len()).map(|k| self.lo + (k as f64 + 0.5) * self.dq).collect()
    }
}

/// Flow `q_t = Phi(t) q_0 + psi(t)` of `dq = (A + B q) dt` and the transported density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pushforward {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// `Phi(t) E[m0] + psi(t)`.
    pub mean: Vec<f64>,
    pub snapshots: Vec<DensitySnapshot>,
}

/// Pushes `m0` forward along the affine minor feedback flow. Snapshots are
/// taken at the grid nodes nearest to `snapshot_times` on cells of width `dq`.
pub fn fp_pushforward(
    a: &[f64],
    b: &[f64],
    dt: f64,
    m0: &InitialDensity,
    snapshot_times: &[f64],
    dq: f64,
) -> Result<Pushforward> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(invalid("drift paths must share a grid of at least two nodes"));
    }
    if !(dq > 0.0) {
        return Err(invalid("cell width must be positive"));
    }
    let n1 = a.len();
    let mut log_phi = vec![0.0; n1];
    for i in 1..n1 {
        log_phi[i] = log_phi[i - 1] + 0.5 * dt * (b[i - 1] + b[i]);
    }
    let phi: Vec<f64> = log_phi.iter().map(|l| l.exp()).collect();
    if let Some(i) = phi.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::Numerical(format!("flow coefficient underflowed at node {i}")));
    }
    let mut integral = 0.0;
    let mut psi = vec![0.0; n1];
    for i in 1..n1 {
        integral += 0.5 * dt * (a[i - 1] / phi[i - 1] + a[i] / phi[i]);
        psi[i] = phi[i] * integral;
    }
    let e0 = m0.mean();
    let mean: Vec<f64> = phi.iter().zip(&psi).map(|(p, s)| p * e0 + s).collect();

    let (s_lo, s_hi) = m0.support();
    let mut lo = s_lo;
    let mut hi = s_hi;
    for (p, s) in phi.iter().zip(&psi) {
        lo = lo.min(p * s_lo + s);
        hi = hi.max(p * s_hi + s);
    }
    let lo = (lo / dq).floor() * dq;
    let cells = ((hi - lo) / dq).ceil() as usize + 1;

    let horizon = dt * (n1 - 1) as f64;
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    for &t in snapshot_times {
        if !(0.0..=horizon + 1e-12).contains(&t) {
            return Err(invalid(format!("snapshot time {t} outside [0, {horizon}]")));
        }
        let i = ((t / dt).round() as usize).min(n1 - 1);
        let (p, s) = (phi[i], psi[i]);
        let pre = |x: f64| (x - s) / p;
        let mut mass = Vec::with_capacity(cells);
        let mut moment = Vec::with_capacity(cells);
        let (mut f_prev, mut m_prev) = (m0.cdf(pre(lo)), m0.partial_moment(pre(lo)));
        for k in 0..cells {
            let x = pre(lo + (k + 1) as f64 * dq);
            let (f, m) = (m0.cdf(x), m0.partial_moment(x));
            let dm = f - f_prev;
            mass.push(dm);
            moment.push(p * (m - m_prev) + s * dm);
            f_prev = f;
            m_prev = m;
        }
        snapshots.push(DensitySnapshot { t: i as f64 * dt, lo, dq, mass, moment });
    }
    Ok(Pushforward { phi, psi, mean, snapshots })
}

/// Minor best response to a given major rate path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorEquilibrium {
    pub t: Vec<f64>,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    #[serde(rename = "E")]
    pub e: Vec<f64>,
    pub mu: Vec<f64>,
    #[serde(rename = "Phi")]
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub m: Vec<DensitySnapshot>,
}

impl MinorEquilibrium {
    /// Minor feedback `(h1 + 2 h2 q)/(2 eta)` at node `i`.
    pub fn feedback(&self, i: usize, q: f64, eta: f64) -> f64 {
        (self.h1[i] + 2.0 * self.h2[i] * q) / (2.0 * eta)
    }
}

/// Riccati coefficient, mean inventory, recovered coefficients and the
/// pushforward density for a given major rate path `nu0` on a uniform grid.
pub fn minor_response(
    nu0: &[f64],
    dt: f64,
    mp: &MfgParams,
    m0: &InitialDensity,
    snapshot_times: &[f64],
    dq: f64,
) -> Result<MinorEquilibrium> {
    let horizon = dt * (nu0.len() - 1) as f64;
    let t: Vec<f64> = (0..nu0.len()).map(|i| i as f64 * dt).collect();
    let h2: Vec<f64> = t.iter().map(|&s| riccati_h2(s, mp.alpha, mp.eta, horizon)).collect();
    let (e, mu) = solve_minor_bvp(nu0, dt, mp)?;
    let (h1, h0) = recover_h1_h0(&e, &mu, &h2, dt, mp);
    let a: Vec<f64> = h1.iter().map(|h| h / (2.0 * mp.eta)).collect();
    let b: Vec<f64> = h2.iter().map(|h| h / mp.eta).collect();
    let flow = fp_pushforward(&a, &b, dt, m0, snapshot_times, dq)?;
    Ok(MinorEquilibrium { t, h0, h1, h2, e, mu, phi: flow.phi, psi: flow.psi, m: flow.snapshots })
}
