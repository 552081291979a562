use serde::{Deserialize, Serialize};

use super::minor::InitialDensity;
use crate::error::{invalid, Result};
use crate::model::MarketParams;

/// Constants of the major and the representative minor trader.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfgParams {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub alpha0: f64,
    pub eta0: f64,
    pub gamma0: f64,
    /// Running inventory penalty of the major.
    pub phi0: f64,
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    /// Initial inventory of the major.
    #[serde(rename = "Q0")]
    pub q0: f64,
    /// Mean initial inventory of the minors.
    #[serde(rename = "E0")]
    pub e0: f64,
    pub k_c: f64,
}

impl MfgParams {
    /// Major and minors share the regulated-market impact and penalty constants.
    pub fn from_market(p: &MarketParams, e0: f64) -> Self {
        Self {
            horizon: p.horizon,
            alpha0: p.alpha,
            eta0: p.eta,
            gamma0: p.gamma,
            phi0: p.phi,
            alpha: p.alpha,
            eta: p.eta,
            gamma: p.gamma,
            q0: p.q0,
            e0,
            k_c: p.k_c,
        }
    }

    pub fn table2() -> Self {
        Self::from_market(&MarketParams::table2(), 0.1)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.horizon > 0.0, "T > 0"),
            (self.eta0 > 0.0 && self.eta > 0.0, "temporary impacts > 0"),
            (self.alpha0 >= 0.0 && self.alpha >= 0.0, "terminal penalties >= 0"),
            (self.phi0 >= 0.0, "phi0 >= 0"),
            (self.q0 >= 0.0, "Q0 >= 0"),
            (self.e0.is_finite() && self.gamma.is_finite() && self.gamma0.is_finite(), "finite constants"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(invalid(format!("competitive parameters violate {what}")));
            }
        }
        Ok(())
    }
}

/// Starting mean-field rate path.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum InitialGuess {
    /// Minor response to an idle major.
    #[default]
    MinorResponse,
    Zero,
    Constant(f64),
    Custom(Vec<f64>),
}

/// Grids and iteration controls of the equilibrium solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MfgConfig {
    pub n_time: usize,
    pub n_q: usize,
    pub q_max: f64,
    pub omega: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub initial: InitialGuess,
    pub initial_density: Option<InitialDensity>,
    pub snapshot_times: Vec<f64>,
}

impl Default for MfgConfig {
    fn default() -> Self {
        Self {
            n_time: 1000,
            n_q: 400,
            q_max: 1.2,
            omega: 0.5,
            tol: 1e-6,
            max_iters: 200,
            initial: InitialGuess::MinorResponse,
            initial_density: None,
            snapshot_times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

impl MfgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_time < 2 || self.n_q < 2 {
            return Err(invalid("grids need at least two cells"));
        }
        if !(self.q_max > 0.0) {
            return Err(invalid("q_max must be positive"));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(invalid(format!("relaxation weight {} outside (0, 1]", self.omega)));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(invalid("tolerance and iteration cap must be positive"));
        }
        if let Some(d) = &self.initial_density {
            d.validate()?;
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        self.q_max / self.n_q as f64
    }

    /// Minor initial law: the configured one, or a normal with scale 0.05
    /// conditioned on `[0, q_max]` and centred so that its mean is `e0`.
    pub fn density(&self, e0: f64) -> Result<InitialDensity> {
        match &self.initial_density {
            Some(d) => Ok(d.clone()),
            None => InitialDensity::truncated_normal_with_mean(e0, 0.05, 0.0, self.q_max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spacings() {
        let c = MfgConfig::default();
        c.validate().unwrap();
        assert!((c.dq() - 0.003).abs() < 1e-15);
        assert!((MfgParams::table2().horizon / c.n_time as f64 - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_relaxation() {
        let c = MfgConfig { omega: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
