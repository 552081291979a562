//! Optimal splitting of the inventory across dark pools.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{DarkPoolSpec, FillLaw};
use crate::numeric::brent;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AllocationResult {
    pub ell: Vec<f64>,
    pub multiplier: f64,
    pub iterations: usize,
}

/// Which trader objective the allocation serves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Utility {
    Linear,
    /// Exponential utility with `c = rho * alpha`.
    Exponential { c: f64 },
}

const MAX_ITER: usize = 200;
const LOG_SPAN: f64 = 700.0;

/// Marginal value of posting one more share in a pool with law `law` and weight `w`.
pub fn marginal(law: &FillLaw, w: f64, q: f64, ell: f64, util: Utility) -> f64 {
    let base = 2.0 * w * (q - ell) * law.survival(ell);
    match util {
        Utility::Linear => base,
        Utility::Exponential { c } => c * base * (-c * ell * (2.0 * q - ell)).exp(),
    }
}

/// Generic equal-marginal solver: `weights` multiply the per-pool marginals.
/// With `binding`, the budget `sum ell = q` is imposed.
pub fn equal_marginal_alloc(
    q: f64,
    laws: &[FillLaw],
    weights: &[f64],
    util: Utility,
) -> Result<AllocationResult> {
    let m = laws.len();
    if q.is_nan() || weights.len() != m {
        return Err(invalid("allocation: inconsistent inputs"));
    }
    if q <= 0.0 || m == 0 {
        return Ok(AllocationResult { ell: vec![0.0; m], multiplier: 0.0, iterations: 0 });
    }
    if m == 1 {
        return Ok(AllocationResult { ell: vec![q], multiplier: 0.0, iterations: 0 });
    }
    let xtol = 1e-15 * q.max(1.0);
    let mut total_iter = 0;
    let per_pool = |level: f64, total_iter: &mut usize| -> Result<Vec<f64>> {
        let mut ell = vec![0.0; m];
        for i in 0..m {
            let f = |l: f64| marginal(&laws[i], weights[i], q, l, util) - level;
            if f(0.0) <= 0.0 {
                continue;
            }
            let (root, it) = brent(f, 0.0, q, xtol, MAX_ITER)?;
            *total_iter += it;
            ell[i] = root.clamp(0.0, q);
        }
        Ok(ell)
    };
    let hi = laws
        .iter()
        .zip(weights)
        .map(|(law, &w)| marginal(law, w, q, 0.0, util))
        .fold(0.0f64, f64::max);
    if hi <= 0.0 {
        let mut ell = vec![0.0; m];
        ell[0] = q;
        return Ok(AllocationResult { ell, multiplier: 0.0, iterations: 0 });
    }
    // Posted sizes are close to linear in the log of the level.
    let (log_level, it) = brent(
        |x| {
            let ell = per_pool(x.exp(), &mut total_iter).unwrap_or_else(|_| vec![f64::NAN; m]);
            ell.iter().sum::<f64>() - q
        },
        hi.ln() - LOG_SPAN,
        hi.ln(),
        1e-15,
        MAX_ITER,
    )
    .map_err(|e| match e {
        Error::NonConvergence { residual, .. } => {
            Error::NonConvergence { what: "dark allocation multiplier", iterations: MAX_ITER, residual }
        }
        other => other,
    })?;
    let level = log_level.exp();
    let mut ell = per_pool(level, &mut total_iter)?;
    // Spread the bisection residual so the budget binds to rounding.
    let excess = ell.iter().sum::<f64>() - q;
    if excess.abs() > 0.0 {
        let active: Vec<usize> = (0..m).filter(|&i| ell[i] > 0.0).collect();
        if !active.is_empty() {
            let share = excess / active.len() as f64;
            for i in active {
                ell[i] = (ell[i] - share).clamp(0.0, q);
            }
        }
    }
    Ok(AllocationResult { ell, multiplier: level, iterations: it + total_iter })
}

fn laws(pools: &[DarkPoolSpec], k_c: f64, fees: &[f64]) -> Result<Vec<FillLaw>> {
    if fees.len() != pools.len() {
        return Err(invalid(format!("{} dark fees for {} pools", fees.len(), pools.len())));
    }
    Ok(pools.iter().zip(fees).map(|(p, &c)| FillLaw::new(p, k_c, c)).collect())
}

/// Best allocation for the risk-neutral trader.
pub fn optimal_dark_alloc_linear(q: f64, pools: &[DarkPoolSpec], k_c: f64, fees: &[f64]) -> Result<AllocationResult> {
    let laws = laws(pools, k_c, fees)?;
    let w: Vec<f64> = pools.iter().map(|p| p.theta).collect();
    equal_marginal_alloc(q, &laws, &w, Utility::Linear)
}

/// Best allocation for the exponential-utility trader.
pub fn optimal_dark_alloc_exp(
    q: f64,
    pools: &[DarkPoolSpec],
    k_c: f64,
    fees: &[f64],
    rho: f64,
    alpha: f64,
) -> Result<AllocationResult> {
    let laws = laws(pools, k_c, fees)?;
    let w: Vec<f64> = pools.iter().map(|p| p.theta).collect();
    equal_marginal_alloc(q, &laws, &w, Utility::Exponential { c: rho * alpha })
}

/// Exponential-utility allocation when the jump exposures `u` differ across
/// pools: the effective weights become `theta_i exp(-rho u_i)`.
pub fn optimal_dark_alloc_exp_with_u(
    q: f64,
    pools: &[DarkPoolSpec],
    k_c: f64,
    fees: &[f64],
    u: &[f64],
    rho: f64,
    alpha: f64,
) -> Result<AllocationResult> {
    let laws = laws(pools, k_c, fees)?;
    if u.len() != pools.len() {
        return Err(invalid("one jump exposure per pool expected"));
    }
    let umin = u.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = pools.iter().zip(u).map(|(p, &ui)| p.theta * (-rho * (ui - umin)).exp()).collect();
    equal_marginal_alloc(q, &laws, &w, Utility::Exponential { c: rho * alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{table1_pools, LiquidityParam, MarketParams};
    use proptest::prelude::*;

    #[test]
    fn single_pool_takes_everything() {
        let pools = vec![DarkPoolSpec::new(30.0, 0.01)];
        let a = optimal_dark_alloc_linear(0.7, &pools, 100.0, &[0.003]).unwrap();
        assert_eq!(a.ell, vec![0.7]);
        let a = optimal_dark_alloc_exp(0.7, &pools, 100.0, &[0.003], 300.0, 0.04).unwrap();
        assert_eq!(a.ell, vec![0.7]);
    }

    #[test]
    fn symmetric_pools_split_evenly() {
        let pools = vec![DarkPoolSpec::new(25.0, 0.02); 2];
        let a = optimal_dark_alloc_linear(1.0, &pools, 100.0, &[0.004, 0.004]).unwrap();
        assert!((a.ell[0] - 0.5).abs() < 1e-9 && (a.ell[1] - 0.5).abs() < 1e-9);
        let a = optimal_dark_alloc_exp(1.0, &pools, 100.0, &[0.0, 0.0], 300.0, 0.04).unwrap();
        assert!((a.ell[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_inventory() {
        let pools = table1_pools(LiquidityParam::Rate);
        let a = optimal_dark_alloc_linear(0.0, &pools, 100.0, &[0.0, 0.0]).unwrap();
        assert_eq!(a.ell, vec![0.0, 0.0]);
    }

    #[test]
    fn equal_u_reduces_to_plain_allocation() {
        let pools = table1_pools(LiquidityParam::Rate);
        let p = MarketParams::table1();
        let a = optimal_dark_alloc_exp(0.8, &pools, p.k_c, &[0.002, 0.006], p.rho, p.alpha).unwrap();
        let b = optimal_dark_alloc_exp_with_u(0.8, &pools, p.k_c, &[0.002, 0.006], &[0.3, 0.3], p.rho, p.alpha).unwrap();
        for i in 0..2 {
            assert!((a.ell[i] - b.ell[i]).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn marginals_equalized_and_budget_binds(
            q in 0.01..1.2f64, c1 in 0.0..0.01f64, c2 in 0.0..0.01f64, rate in proptest::bool::ANY
        ) {
            let how = if rate { LiquidityParam::Rate } else { LiquidityParam::Mean };
            let pools = table1_pools(how);
            let p = MarketParams::table1();
            let fees = [c1, c2];
            for util in [Utility::Linear, Utility::Exponential { c: p.rho * p.alpha }] {
                let a = match util {
                    Utility::Linear => optimal_dark_alloc_linear(q, &pools, p.k_c, &fees).unwrap(),
                    _ => optimal_dark_alloc_exp(q, &pools, p.k_c, &fees, p.rho, p.alpha).unwrap(),
                };
                let sum: f64 = a.ell.iter().sum();
                prop_assert!((sum - q).abs() < 1e-12 * q.max(1.0));
                prop_assert!(a.ell.iter().all(|&l| (0.0..=q).contains(&l)));
                let laws: Vec<FillLaw> = pools.iter().zip(&fees).map(|(pl, &c)| FillLaw::new(pl, p.k_c, c)).collect();
                let m: Vec<f64> = (0..2).map(|i| marginal(&laws[i], pools[i].theta, q, a.ell[i], util)).collect();
                if a.ell.iter().all(|&l| l > 1e-9 && l < q - 1e-9) {
                    let scale = m[0].abs().max(m[1].abs()).max(1e-300);
                    prop_assert!((m[0] - m[1]).abs() <= 1e-6 * scale.max(1.0), "{:?} {:?}", m, a.ell);
                }
            }
        }
    }
}
