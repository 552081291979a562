//! The large trader: best responses, drivers, Hamiltonian, compensation and benchmark.

pub mod alloc;
pub mod benchmark;
pub mod compensation;
pub mod drivers;
pub mod lit;

pub use alloc::{
    equal_marginal_alloc, optimal_dark_alloc_exp, optimal_dark_alloc_exp_with_u, optimal_dark_alloc_linear,
    AllocationResult, Utility,
};
pub use benchmark::{ac_inventory, ac_rate, almgren_chriss_benchmark, y0_from_reservation, AcSchedule, Reservation};
pub use compensation::{compensation_xi, StepRecord, XiAccumulator};
pub use drivers::{driver_f, driver_h, hamiltonian, in_admissible_u};
pub use lit::{exp_jump_bracket, optimal_lit_rate_exp, optimal_lit_rate_linear};
