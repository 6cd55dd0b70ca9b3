//! Discrete-time SIS epidemics on heterogeneous, time-varying contact
//! networks: the exact `2^n`-state Markov chain, the TransNN mean-field
//! approximation with its upper bounds, and vaccination control solved both
//! by exact dynamic programming and by a Hamiltonian switching rule on the
//! TransNN dynamics.

pub mod control;
pub mod error;
pub mod exact_chain;
pub mod export;
pub mod harness;
pub mod mdp;
pub mod network;
pub mod rng;
pub mod scenario;
pub mod transnn;

pub use control::{
    forward_backward_solve, ControlSchedule, ControlSolution, SweepOptions, SweepStatus,
};
pub use error::{Error, Result};
pub use exact_chain::{BinaryState, TransitionMatrix};
pub use mdp::{solve_bellman, ControlAction, CostParams, MdpSolution, Policy, ValueTable};
pub use network::{ContactNetwork, Link, Neighborhood, RandomNetwork};
pub use scenario::Scenario;
pub use transnn::{InfoState, ProbState};
