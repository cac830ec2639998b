//! Uplink NOMA-URLLC resource allocation with reinforcement learning.
//!
//! The crate is generic over the floating-point type through [`Scalar`];
//! the aliases below fix it to `f64` (simulation and tabular learning) or
//! `f32` (fast network training).

pub mod agents;
pub mod channel;
pub mod environment;
pub mod error;
pub mod fbl;
pub mod harness;
pub mod neural;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Environment64 = environment::Environment<f64>;
pub type Episode64 = environment::Episode<f64>;
pub type StepOutcome64 = environment::StepOutcome<f64>;
pub type Mlp32 = neural::Mlp<f32>;
pub type Mlp64 = neural::Mlp<f64>;
pub type TabularAgent64 = agents::TabularAgent<f64>;
pub type DeepSarsaLambda32 = agents::DeepSarsaLambda<f32>;
