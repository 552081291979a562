//! Actor-critic design of the exchange's fee schedule and contract controls.

pub mod nets;
pub mod nn;
pub mod operator;
pub mod schedule;
pub mod train;

pub use nets::{Actor, ActorOutput, Critic, ValueFn, STATE_DIM};
pub use nn::{Adam, LayerSpec, Mlp, Mode};
pub use operator::{
    evaluate_operator, operator_batch, operator_with_control_gradient, Derivatives, OperatorConfig, OperatorForm,
    OperatorTerms, StateBox,
};
pub use schedule::{extract_fee_schedule, ActorSchedule};
pub use train::{
    actor_loss, actor_step, bellman_residuals, critic_loss, critic_step, init_networks, sample_states,
    terminal_relative_error, train, train_with, Checkpoint, LogRow, TrainConfig, TrainLog, Trained, LEARNING_RATES,
};
