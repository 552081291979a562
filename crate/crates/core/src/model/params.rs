use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Scalar market constants. Serialized keys follow the model symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    /// Horizon.
    #[serde(rename = "T")]
    pub horizon: f64,
    pub sigma: f64,
    /// Permanent impact of the large trader.
    pub gamma: f64,
    /// Permanent impact of the small traders.
    pub epsilon: f64,
    /// Temporary impact.
    pub eta: f64,
    /// Terminal inventory penalty.
    pub alpha: f64,
    /// Running inventory penalty.
    pub phi: f64,
    /// Risk aversion of the exponential utility.
    pub rho: f64,
    /// Weight of the permanent drift in the exchange PnL.
    pub kappa: f64,
    /// Small-trader rate.
    #[serde(rename = "lambda")]
    pub lambda_rate: f64,
    pub k_theta: f64,
    pub k_c: f64,
    #[serde(rename = "Q0")]
    pub q0: f64,
    #[serde(rename = "S0")]
    pub s0: f64,
    #[serde(rename = "X0")]
    pub x0: f64,
}

impl MarketParams {
    /// Regulated-market constants.
    pub fn table1() -> Self {
        Self {
            horizon: 1.0,
            sigma: 0.02,
            gamma: 0.01,
            epsilon: 0.01,
            eta: 0.02,
            alpha: 0.04,
            phi: 0.0,
            rho: 300.0,
            kappa: 1.0,
            lambda_rate: -0.01,
            k_theta: 0.0,
            k_c: 100.0,
            q0: 1.0,
            s0: 1.0,
            x0: 0.0,
        }
    }

    /// Competitive-market constants (shared with the regulated run where the table is silent).
    pub fn table2() -> Self {
        Self::table1()
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.horizon > 0.0, "T > 0"),
            (self.sigma >= 0.0, "sigma >= 0"),
            (self.eta > 0.0, "eta > 0"),
            (self.alpha >= 0.0, "alpha >= 0"),
            (self.phi >= 0.0, "phi >= 0"),
            (self.rho > 0.0, "rho > 0"),
            (self.k_theta >= 0.0, "k_theta >= 0"),
            (self.k_c >= 0.0, "k_c >= 0"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(invalid(format!("market parameters: expected {what}")));
            }
        }
        let all = [
            self.horizon, self.sigma, self.gamma, self.epsilon, self.eta, self.alpha, self.phi,
            self.rho, self.kappa, self.lambda_rate, self.k_theta, self.k_c, self.q0, self.s0,
            self.x0,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("market parameters must be finite"));
        }
        Ok(())
    }
}

/// How the tabulated size parameter `a` of the exponential liquidity law is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LiquidityParam {
    /// `a` is the mean size.
    Mean,
    /// `a` is the rate, so the mean size is `1/a`.
    #[default]
    Rate,
}

impl LiquidityParam {
    pub fn mean_size(self, a: f64) -> f64 {
        match self {
            LiquidityParam::Mean => a,
            LiquidityParam::Rate => 1.0 / a,
        }
    }
}

/// One dark pool: Poisson arrivals of exponential liquidity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkPoolSpec {
    pub theta: f64,
    /// Mean of the exponential part of the size variable `A`.
    pub size_mean: f64,
    /// Lower support bound of `A`.
    #[serde(default)]
    pub support_eps: f64,
}

impl DarkPoolSpec {
    pub fn new(theta: f64, size_mean: f64) -> Self {
        Self { theta, size_mean, support_eps: 0.0 }
    }

    pub fn from_table(theta: f64, a: f64, how: LiquidityParam) -> Self {
        Self::new(theta, how.mean_size(a))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(invalid("dark pool: theta must be positive"));
        }
        if !(self.size_mean > 0.0 && self.size_mean.is_finite()) {
            return Err(invalid("dark pool: size_mean must be positive"));
        }
        if !(self.support_eps >= 0.0 && self.support_eps.is_finite()) {
            return Err(invalid("dark pool: support_eps must be nonnegative"));
        }
        Ok(())
    }
}

/// The two regulated-market pools.
pub fn table1_pools(how: LiquidityParam) -> Vec<DarkPoolSpec> {
    vec![
        DarkPoolSpec::from_table(30.0, 100.0, how),
        DarkPoolSpec::from_table(20.0, 150.0, how),
    ]
}

/// The single competitive-market pool.
pub fn table2_pools(how: LiquidityParam) -> Vec<DarkPoolSpec> {
    vec![DarkPoolSpec::from_table(30.0, 200.0, how)]
}
