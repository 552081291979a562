//! Optimal lit trading rates.

use crate::error::{Error, Result};
use crate::model::{DarkPoolSpec, FillLaw, MarketParams};
use crate::numeric::brent;

fn diffusion_term(z: f64, p: &MarketParams) -> f64 {
    if z == 0.0 {
        0.0
    } else {
        p.gamma * z / p.sigma
    }
}

/// Root of a decreasing first-order condition `g` on `(-inf, 0]`, clamped at 0.
fn decreasing_root<G: Fn(f64) -> f64>(g: G) -> Result<f64> {
    if g(0.0) >= 0.0 {
        return Ok(0.0);
    }
    let mut lo = -1.0;
    while g(lo) < 0.0 {
        lo *= 2.0;
        if lo < -1e12 {
            return Err(Error::Numerical("lit rate first-order condition has no root".into()));
        }
    }
    Ok(brent(&g, lo, 0.0, 1e-14, 200)?.0)
}

/// Lit rate maximizing the risk-neutral driver `f`.
pub fn optimal_lit_rate_linear(
    q: f64,
    z: f64,
    c_l: f64,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    dark_fees: &[f64],
    ell_hat: &[f64],
) -> Result<f64> {
    if q <= 0.0 {
        return Ok(0.0);
    }
    let inner = (c_l + diffusion_term(z, p)) / (2.0 * p.eta) - p.alpha / p.eta * q;
    if p.k_theta == 0.0 {
        return Ok(inner.min(0.0));
    }
    let jump: f64 = pools
        .iter()
        .zip(dark_fees)
        .zip(ell_hat)
        .map(|((pl, &c), &l)| pl.theta * FillLaw::new(pl, p.k_c, c).linear_moment(l, q))
        .sum();
    let kt = p.k_theta;
    let second = |nu: f64| -2.0 * p.eta + p.alpha * kt * kt * (kt * nu).exp() * jump;
    if second(0.0) >= 0.0 {
        return Err(Error::Model(format!(
            "driver f is not strictly concave in the lit rate (second derivative {:.3e} at 0)",
            second(0.0)
        )));
    }
    decreasing_root(|nu| {
        -2.0 * p.eta * nu + c_l - 2.0 * p.alpha * q + diffusion_term(z, p) + p.alpha * kt * (kt * nu).exp() * jump
    })
}

/// `sum_i theta_i (exp(-rho u_i) E_i + rho u_i - 1)`, the jump bracket of `h`.
pub fn exp_jump_bracket(
    q: f64,
    u: &[f64],
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    dark_fees: &[f64],
    ell: &[f64],
) -> f64 {
    pools
        .iter()
        .enumerate()
        .map(|(i, pl)| {
            let e = FillLaw::new(pl, p.k_c, dark_fees[i]).exponential_moment(ell[i], q.max(ell[i]), p.rho * p.alpha);
            pl.theta * ((-p.rho * u[i]).exp() * e + p.rho * u[i] - 1.0)
        })
        .sum()
}

/// Lit rate maximizing the exponential-utility driver `h`.
pub fn optimal_lit_rate_exp(
    q: f64,
    c_l: f64,
    u: &[f64],
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    dark_fees: &[f64],
    ell_hat: &[f64],
) -> Result<f64> {
    if q <= 0.0 {
        return Ok(0.0);
    }
    let inner = c_l / (2.0 * p.eta) - p.alpha / p.eta * q;
    if p.k_theta == 0.0 {
        return Ok(inner.min(0.0));
    }
    let bracket = exp_jump_bracket(q, u, p, pools, dark_fees, ell_hat);
    let kt = p.k_theta;
    let second = |nu: f64| -2.0 * p.eta - kt * kt / p.rho * (kt * nu).exp() * bracket;
    if second(0.0) >= 0.0 {
        return Err(Error::Model(format!(
            "jump exposures outside the admissible set: second derivative {:.3e} at 0",
            second(0.0)
        )));
    }
    decreasing_root(|nu| -2.0 * p.eta * nu + c_l - 2.0 * p.alpha * q - kt / p.rho * (kt * nu).exp() * bracket)
}
