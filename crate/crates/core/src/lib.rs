//! Numerical core for multiport photon-number-resolving detectors.
//!
//! A multiport device with `s` on/off output ports is modelled as a POVM of
//! photon-number mixtures. This crate builds the amplitude matrices of such
//! devices (finite or infinite port count, with or without photon loss),
//! inverts them analytically, evaluates Fisher information and Cramér–Rao
//! bounds for photon-number-distribution tomography, and averages the bound
//! over the probability simplex to obtain the tomographic transfer function
//! (TTF) in closed form and by Monte Carlo. The `resolvability` module maps
//! out how photon loss limits informational completeness.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod combinatorics;
pub mod error;
mod math;
pub mod montecarlo;
pub mod povm;
pub mod resolvability;
pub mod signed_log;
pub mod sim;
pub mod special;
pub mod tomography;
pub mod ttf;

pub use error::{Error, Result};
pub use povm::{AmplitudeMatrix, DeviceConfig, Ports, Povm, Regime};
pub use signed_log::SignedLogReal;
pub use tomography::{PhotonDistribution, TomographyKit};
pub use ttf::{Method, TtfResult};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
