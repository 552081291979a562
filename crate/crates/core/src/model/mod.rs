//! Market primitives: parameters, states, dynamics and the dark-pool fill law.

pub mod dynamics;
pub mod liquidity;
pub mod params;
pub mod special;
pub mod state;

pub use dynamics::{exchange_pnl_step, executed_price, lit_price_step, permanent_drift, step_state};
pub use liquidity::{
    dark_liquidity_cdf, exp_min_exponential_moment, exp_min_linear_moment, sample_dark_fill, FillLaw,
};
pub use params::{table1_pools, table2_pools, DarkPoolSpec, LiquidityParam, MarketParams};
pub use state::{ControlPair, ExchangeState, FeeSchedule, Fees, TraderState, FEE_CAP};
