//! Optimal liquidation across one lit venue and several dark pools.
//!
//! * [`model`]: market primitives and the dark-pool fill law.
//! * [`trader`]: the large trader's best responses, drivers, Hamiltonian and compensation.
//! * [`mfg`]: the competitive major-minor mean-field game.
//! * [`fees`]: actor-critic design of the exchange's fee schedule.
//! * [`sim`]: Monte-Carlo experiments and summary statistics.
//! * [`io`]: configuration, presets, CSV output and manifests.

pub mod error;
pub mod fees;
pub mod io;
pub mod mfg;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod sim;
pub mod trader;

pub use error::{Error, Result};
