//! Transmission/reflection decomposition of one-dimensional tunneling.
//!
//! Stationary scattering states of a finite-range potential are split into
//! a transmission part and a reflection part that never interfere
//! asymptotically. Superposing them over a Gaussian spectrum gives two
//! sub-packets with constant norms, whose centres of mass define
//! non-negative transmission and reflection times.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`.

pub mod closed_forms;
pub mod error;
pub mod model;
pub mod oracle;
pub mod packets;
pub mod potentials;
mod propagation;
pub mod scalar;
pub mod scattering;
pub mod splitting;
pub mod timing;

pub use error::{Error, Result};
pub use scalar::{Cx, Scalar};

pub type Particle = model::Particle<f64>;
pub type KGrid = model::KGrid<f64>;
pub type XGrid = model::XGrid<f64>;
pub type WaveField = model::WaveField<f64>;
pub type Potential = potentials::PotentialSpec<f64>;
pub type TransferMatrix = scattering::TransferMatrix<f64>;
pub type TunnelingParams = scattering::TunnelingParams<f64>;
pub type ParamsTable = scattering::ParamsTable<f64>;
pub type SpectralProfile = packets::SpectralProfile<f64>;
pub type Synthesizer = packets::Synthesizer<f64>;
pub type TimingAnalysis = timing::TimingAnalysis<f64>;
pub type TimingReport = timing::TimingReport<f64>;
