//! Photon-number statistics of heralded single-photon sources, their
//! nonclassicality (NC) and quantum non-Gaussianity (QNG) witnesses, and the
//! depth of those features under optical loss.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: Fock-diagonal states and the bosonic loss channel.
//! * [`witnesses`]: NC/QNG/Wigner criteria and depth computation.
//! * [`sources`]: analytic models of ideal, SPDC and quantum-dot sources.
//! * [`timetag`]: Monte Carlo time-tag streams of a heralded autocorrelation
//!   measurement, plus the binary and CSV tag formats.
//! * [`estimation`]: coincidence counting and click-probability estimation.
//! * [`optimizer`]: one-dimensional parameter sweeps maximising QNG depth.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod fock;
pub mod optimizer;
pub mod rng;
pub mod sources;
pub mod timetag;
pub mod witnesses;

pub use error::{Error, Result};
pub use fock::{ClickProbabilities, PhotonNumberDistribution, Transmittance};
pub use sources::SourceConfig;
pub use witnesses::{Depth, DepthReport, Feature, WitnessVerdict};
