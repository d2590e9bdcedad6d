//! Hybrid quantum-classical reservoir computing for chaotic time-series
//! forecasting.
//!
//! The crate couples an exactly simulated five-qubit input-modulated Ising
//! system ([`qdyn`]) to a classical shift-memory layer ([`reservoir`]) and a
//! ridge-regression readout ([`readout`]). Benchmark signals come from a
//! five-mode truncation of the 2-D Navier-Stokes equations and from the
//! Lorenz-63 system ([`dynsys`]). The [`pipeline`] module ties the pieces into
//! teacher-forced training, closed-loop forecasting and the Valid Prediction
//! Time metric, and [`sweep`] runs deterministic hyperparameter grid searches
//! on top of it.

pub mod dynsys;
pub mod error;
pub mod fmt;
pub mod pipeline;
pub mod qdyn;
pub mod readout;
pub mod reservoir;
pub mod sweep;

pub use error::{Error, Result};
