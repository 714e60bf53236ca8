// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the numerical modules and the pipeline driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    /// Spatial grid too coarse for the requested decomposition.
    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("aliasing: {0}")]
    Aliasing(String),

    #[error("undefined shift: {0}")]
    UndefinedShift(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Every violation found while validating a configuration, each prefixed
    /// by its key path.
    #[error("config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) | Error::Parse(_) => 4,
            _ => 3,
        }
    }

    /// Short machine-readable kind tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::OutOfBounds(_) => "out_of_bounds",
            Error::Resolution(_) => "resolution",
            Error::Aliasing(_) => "aliasing",
            Error::UndefinedShift(_) => "undefined_shift",
            Error::Numerical(_) => "numerical",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
