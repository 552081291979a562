use super::params::MarketParams;
use super::state::{ControlPair, ExchangeState, Fees, TraderState};

/// Permanent-impact price step.
pub fn lit_price_step(s: f64, nu: f64, lambda: f64, dt: f64, dw: f64, p: &MarketParams) -> f64 {
    s + (p.gamma * nu + p.epsilon * lambda) * dt + p.sigma * dw
}

/// Execution price including temporary impact.
pub fn executed_price(s: f64, nu: f64, p: &MarketParams) -> f64 {
    s + p.eta * nu
}

/// Permanent drift `gamma nu + epsilon lambda`.
pub fn permanent_drift(nu: f64, lambda: f64, p: &MarketParams) -> f64 {
    p.gamma * nu + p.epsilon * lambda
}

/// One Euler step of inventory, cash and price. Fills are executed at the
/// pre-step mid price.
pub fn step_state(
    state: &TraderState,
    controls: &ControlPair,
    fills: &[f64],
    c_l: f64,
    lambda: f64,
    dt: f64,
    dw: f64,
    p: &MarketParams,
) -> TraderState {
    let nu = controls.nu;
    let filled: f64 = fills.iter().sum();
    TraderState {
        t: state.t + dt,
        q: state.q + nu * dt - filled,
        s: lit_price_step(state.s, nu, lambda, dt, dw, p),
        x: state.x - (executed_price(state.s, nu, p) * nu - c_l * nu) * dt + state.s * filled,
    }
}

/// Increment of the exchange PnL over one step.
pub fn exchange_pnl_step(
    _state: &ExchangeState,
    controls: &ControlPair,
    fills: &[f64],
    fees: &Fees,
    lambda: f64,
    dt: f64,
    p: &MarketParams,
) -> f64 {
    let dark: f64 = fees.dark.iter().zip(fills).map(|(c, f)| c * f).sum();
    -fees.lit * (controls.nu + lambda) * dt + dark + p.kappa * permanent_drift(controls.nu, lambda, p) * dt
}
