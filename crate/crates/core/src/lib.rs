//! Spin-chain quasiparticle spectroscopy toolkit: couplings and
//! excitation-number blocks, trapped-ion chain mechanics that generate the
//! couplings, quasiparticle modes with spin-wave perturbation theory,
//! exact state evolution with post-selected readout, and Fourier analysis
//! of the synthesized signals.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod ion_chain;
pub mod lattice;
pub mod linalg;
pub mod pipeline;
pub mod quasiparticles;
pub mod spectroscopy;

pub use error::{Error, Result};
