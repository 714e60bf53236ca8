// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Control-pulse optimization for a Raman quantum memory and the fidelity
//! analysis around it.
//!
//! - [`waveforms`], [`spline`]: time grids, control pulses, Chebyshev
//!   genotypes and their spline synthesis.
//! - [`residual_net`]: the 20-50-30 residual corrector and its Adam trainer.
//! - [`plant`]: the single-mode memory model used as the objective.
//! - [`csde`]: Chebyshev-sampled differential evolution and a gradient
//!   baseline.
//! - [`modes`]: LG/HG fields, polarization split, diffusion, petal patterns.
//! - [`oam`]: ring sampling, angular spectra, OAM fidelity, memory time.
//! - [`tomography`]: homodyne MLE, Uhlmann fidelity, six-projection SAM
//!   tomography.
//! - [`config`], [`pipeline`], [`io`]: the experiment runner behind the
//!   `ramopt` binary.

// `!(x > 0.0)` style checks reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csde;
pub mod error;
pub mod hermite;
pub mod image;
pub mod io;
pub mod modes;
pub mod oam;
pub mod pipeline;
pub mod plant;
pub mod residual_net;
pub mod rng;
pub mod spline;
pub mod tomography;
pub mod waveforms;

pub use error::{Error, Result};

/// Version string stamped into every CSV header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
