//! Harmonic emitters coupled to Hatano–Nelson and bosonic Kitaev chains.
//!
//! * [`model`]: lattice and emitter specifications, disorder sampling.
//! * [`dynamics`]: linear generators of the mean-field equations and their integration.
//! * [`analytics`]: closed-form self-energies and decoherence-free conditions.
//! * [`scenarios`]: registry of figure-scale experiments and their outputs.
//! * [`cli`]: the `skinwave` command line.

pub mod analytics;
pub mod cli;
pub mod dynamics;
pub mod model;
pub mod scenarios;
