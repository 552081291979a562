//! The trained actor as a fee schedule for the simulator.

use ndarray::Array2;

use super::nets::{Actor, ActorOutput, STATE_DIM};
use crate::model::{ExchangeState, FeeSchedule, Fees};

/// Eval-mode actor evaluated at exchange states.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorSchedule {
    pub actor: Actor,
}

impl ActorSchedule {
    /// Controls for many states in one forward pass.
    pub fn controls(&self, states: &[ExchangeState]) -> Vec<ActorOutput> {
        if states.is_empty() {
            return Vec::new();
        }
        let flat: Vec<f64> = states.iter().flat_map(|s| s.features()).collect();
        let x = Array2::from_shape_vec((states.len(), STATE_DIM), flat).expect("shape");
        self.actor.forward(x.view())
    }

    /// Upper bound on `|fee(a) - fee(b)| / |a - b|` for head `k` in `[c_l, c_d..]`.
    pub fn fee_lipschitz(&self, k: usize) -> f64 {
        // The scaled sigmoid has slope at most cap / 4.
        self.actor.fee_cap / 4.0 * self.actor.net.lipschitz_upper(k)
    }
}

impl FeeSchedule for ActorSchedule {
    fn fees(&self, state: &ExchangeState) -> Fees {
        let o = self.controls(std::slice::from_ref(state)).remove(0);
        Fees { lit: o.c_l, dark: o.c_d }
    }
}

/// Wraps a trained actor.
pub fn extract_fee_schedule(actor: &Actor) -> ActorSchedule {
    ActorSchedule { actor: actor.clone() }
}
