//! Simulation and exact analysis of an interference-based quantum key
//! distribution protocol.
//!
//! Alice launches a single photon whose polarization carries her bit. A
//! half-wave plate and a polarizing beam splitter spread it over two arms of
//! a long Michelson interferometer; arm `b` runs to Bob, who encodes his bit by
//! inserting (or not) a π phase shifter. On recombination the photon lands on
//! detector D1 when the bits agree and on D2 when they differ, so every
//! detected photon yields a sifted key bit without any basis reconciliation.
//!
//! The crate is organized as:
//!
//! * [`optics`]: exact single-photon state vectors and component transforms,
//!   plus the two-path tensor picture used for the reduced-density argument.
//! * [`field`]: coherent multiphoton pulses with threshold detection.
//! * [`devices`]: stochastic detector and channel models and the RNG contract.
//! * [`adversary`]: eavesdropping strategies confined to arm `b`.
//! * [`protocol`]: the per-round engine, sifting and error estimation.
//! * [`analysis`]: the exact branch-enumeration oracle and security metrics.
//! * [`config`] and [`report`]: the JSON configuration and output formats.
//! * `cli` (feature `cli`): the `iqkd` command-line front end.

pub mod adversary;
pub mod analysis;
mod bit;
pub mod config;
pub mod devices;
mod error;
pub mod field;
pub mod optics;
pub mod protocol;
pub mod report;

#[cfg(feature = "cli")]
pub mod cli;

pub use bit::Bit;
pub use error::{Error, Result};
