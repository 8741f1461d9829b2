//! Local memory in disordered Heisenberg rings, measured by the dynamical
//! Holevo rate.
//!
//! The pipeline for one disorder realization is:
//!
//! 1. [`DisorderedChainSpec`] fixes the ring length, the message length and
//!    the random fields.
//! 2. [`BlockedHamiltonian`] builds the ring (and the open environment chain)
//!    one total-Sᶻ sector at a time.
//! 3. [`environment`] prepares the environment state: Néel, evolved Néel or a
//!    mid-spectrum eigenstate of the environment Hamiltonian.
//! 4. [`holevo`] evolves every computational-basis message, traces out the
//!    environment and assembles the Holevo quantity on a time grid.
//!
//! [`sweep`] repeats this over disorder realizations and strengths and
//! averages the steady state; [`scaling`] locates the transition by curve
//! crossings and a two-parameter data collapse.

// `!(x > 0.0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod config;
pub mod density;
pub mod environment;
pub mod error;
pub mod evolution;
pub mod full_space;
pub mod hamiltonian;
pub mod holevo;
pub mod io;
pub mod scaling;
pub mod sweep;

pub use basis::{SectorBasis, SpinBasisIndex};
pub use config::{BetaMode, Ratio, SweepConfig};
pub use density::{partial_trace_environment, von_neumann_entropy, DensityMatrix};
pub use environment::EnvironmentKind;
pub use error::{Error, Result};
pub use evolution::{decompose, evolve, PureState, SectorSpectrum, SpectralDecomposition, Support};
pub use hamiltonian::{BlockedHamiltonian, Chain, DisorderedChainSpec, Topology};
pub use holevo::{holevo_quantity, holevo_rate_trace, HolevoSample, MessageEnsemble};
pub use scaling::{CollapseFit, ScalingDataset};
pub use sweep::{HolevoTrace, SteadyStateRecord};

/// Complex amplitude type used throughout.
pub type C64 = num_complex::Complex64;
