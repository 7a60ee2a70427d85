//! Neuroevolution of recurrent NARX networks for black-box modelling of
//! dynamic systems with time delays.
//!
//! A genome encodes a single-output network whose inputs are the lagged plant
//! input `u(k-0..=du)` and the lagged model output `y(k-1..=dy)`. Besides the
//! usual NEAT node and connection genes it carries the two delay levels `du`
//! and `dy`, which the dNEAT variant evolves alongside the topology.

pub mod config;
pub mod error;
pub mod experiment;
pub mod genome;
pub mod network;
pub mod plant;
pub mod population;
pub mod random;
pub mod variation;

pub use config::{Algo, Config};
pub use error::{Error, Result};
pub use genome::{
    compatibility_distance, initial_genome, ConnectionGene, Genome, GenomeError, InnovationRegistry,
    NodeGene, NodeId, NodeKind,
};
pub use network::{fitness, mse, CompiledNetwork, DelayBuffer};
pub use plant::{Dataset, ExcitationSpec};
pub use population::{evolve, Evaluator, Population, RunResult};
