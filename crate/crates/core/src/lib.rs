//! Semi-quantum reinforcement learning (sQRL) of an unknown single-qubit state.
//!
//! An agent qubit, starting in |0⟩, is adapted towards a hidden environment
//! state using one environment copy per iteration. Each copy is entangled with
//! a fresh register by a CNOT and the register is measured once: outcome 0
//! rewards the agent (the random-rotation range Δ shrinks by ε), outcome 1
//! punishes it (the agent takes a random rotation drawn from a window of width
//! Δ, and Δ widens by 1/ε).
//!
//! Modules:
//! - [`qubit`]: 2×2 complex linear algebra, states, unitaries, fidelities.
//! - [`engine`]: the learning loop.
//! - [`tomography`]: three-basis maximum-likelihood tomography baseline.
//! - [`harness`]: seeded batches, aggregate curves, budget-matched comparison.
//! - [`output`]: deterministic CSV/JSON tables.
//!
//! ```
//! use sqrl_core::engine::{run_episode, EpisodeConfig, Preset};
//!
//! let (theta, phi) = Preset::E1.angles();
//! let config = EpisodeConfig::new(theta, phi, 0.5).unwrap().with_seed(42);
//! let records = run_episode(&config).unwrap();
//! assert_eq!(records.len(), 50);
//! ```

pub mod engine;
pub mod error;
pub mod harness;
pub mod optim;
pub mod output;
pub mod qubit;
pub mod rng;
pub mod tomography;

pub use error::{Error, Result};
