//! BSDE drivers of the two trader objectives and the Hamiltonian.

use crate::error::{invalid, Error, Result};
use crate::model::{ControlPair, DarkPoolSpec, Fees, FillLaw, MarketParams};

use super::alloc::optimal_dark_alloc_exp_with_u;
use super::lit::{exp_jump_bracket, optimal_lit_rate_exp};

fn check(ell: &[f64], pools: &[DarkPoolSpec], fees: &Fees) -> Result<()> {
    if ell.len() != pools.len() || fees.dark.len() != pools.len() {
        return Err(invalid("controls, fees and pools disagree on the number of dark pools"));
    }
    Ok(())
}

/// Running terms shared by both drivers.
fn lit_terms(q: f64, nu: f64, c_l: f64, p: &MarketParams) -> f64 {
    -p.phi * q * q - p.eta * nu * nu + c_l * nu + q * (p.epsilon * p.lambda_rate - 2.0 * p.alpha * nu)
}

/// Risk-neutral driver `f`.
pub fn driver_f(
    q: f64,
    z: f64,
    nu: f64,
    ell: &[f64],
    fees: &Fees,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
) -> Result<f64> {
    check(ell, pools, fees)?;
    let jump: f64 = pools
        .iter()
        .enumerate()
        .map(|(i, pl)| pl.theta * FillLaw::new(pl, p.k_c, fees.dark[i]).linear_moment(ell[i], q.max(ell[i])))
        .sum();
    let zterm = if z == 0.0 { 0.0 } else { p.gamma * z / p.sigma * nu };
    Ok(lit_terms(q, nu, fees.lit, p) + zterm + p.alpha * (p.k_theta * nu).exp() * jump)
}

/// Exponential-utility driver `h`.
#[allow(clippy::too_many_arguments)]
pub fn driver_h(
    q: f64,
    z: f64,
    u: &[f64],
    nu: f64,
    ell: &[f64],
    fees: &Fees,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
) -> Result<f64> {
    check(ell, pools, fees)?;
    if u.len() != pools.len() {
        return Err(invalid("one jump exposure per pool expected"));
    }
    let bracket = exp_jump_bracket(q, u, p, pools, &fees.dark, ell);
    Ok(lit_terms(q, nu, fees.lit, p) - 0.5 * p.rho * (z + q * p.sigma).powi(2)
        - bracket * (p.k_theta * nu).exp() / p.rho)
}

/// Whether the jump exposures keep `h` strictly concave in the lit rate at `nu`.
pub fn in_admissible_u(q: f64, u: &[f64], nu: f64, ell: &[f64], fees: &Fees, p: &MarketParams, pools: &[DarkPoolSpec]) -> bool {
    if p.k_theta == 0.0 {
        return true;
    }
    let bracket = exp_jump_bracket(q, u, p, pools, &fees.dark, ell);
    -2.0 * p.eta - p.k_theta.powi(2) / p.rho * (p.k_theta * nu).exp() * bracket < 0.0
}

/// `H = sup_{nu, ell} h` with its maximizer. Allocation first, then the lit rate.
pub fn hamiltonian(
    q: f64,
    z: f64,
    u: &[f64],
    fees: &Fees,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
) -> Result<(f64, ControlPair)> {
    let m = pools.len();
    if u.len() != m || fees.dark.len() != m {
        return Err(invalid("one jump exposure and one dark fee per pool expected"));
    }
    let controls = if q <= 0.0 {
        ControlPair::idle(m)
    } else {
        let alloc = optimal_dark_alloc_exp_with_u(q, pools, p.k_c, &fees.dark, u, p.rho, p.alpha)?;
        let nu = optimal_lit_rate_exp(q, fees.lit, u, p, pools, &fees.dark, &alloc.ell)?;
        ControlPair { nu, ell: alloc.ell }
    };
    if !in_admissible_u(q, u, controls.nu, &controls.ell, fees, p, pools) {
        return Err(Error::Model("jump exposures outside the admissible set".into()));
    }
    let v = driver_h(q, z, u, controls.nu, &controls.ell, fees, p, pools)?;
    Ok((v, controls))
}
