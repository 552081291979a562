//! Competitive market: one major trader against a continuum of minor traders.

pub mod fixed_point;
pub mod major;
pub mod minor;
pub mod params;

pub use fixed_point::{major_mean_path, mfg_fixed_point, MfgSolution};
pub use major::{major_dark_alloc, solve_major_hjb, MajorGrid, MajorValue, MarginalSlice};
pub use minor::{
    fp_pushforward, grid_derivative, minor_response, recover_h1_h0, riccati_h2, solve_minor_bvp, DensitySnapshot,
    InitialDensity, MinorEquilibrium, Pushforward,
};
pub use params::{InitialGuess, MfgConfig, MfgParams};
