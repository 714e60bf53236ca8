// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Time grids, control pulses and the sparse Chebyshev genotype that the
//! optimizer searches over.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::NaturalCubicSpline;

/// Uniform sampling of a time window, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_samples: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(Error::invalid(format!(
                "time grid needs t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        if n_samples < 2 {
            return Err(Error::invalid("time grid needs at least 2 samples"));
        }
        Ok(Self {
            t_start,
            t_end,
            n_samples,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample spacing in ns.
    pub fn spacing(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_samples - 1) as f64
    }

    /// Sample spacing in µs, the unit of the plant's rate equations.
    pub fn spacing_us(&self) -> f64 {
        self.spacing() * 1e-3
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n_samples {
            self.t_end
        } else {
            self.t_start + i as f64 * self.spacing()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples).map(|i| self.time(i)).collect()
    }

    /// Same window with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_samples: (self.n_samples - 1) * factor.max(1) + 1,
            ..*self
        }
    }
}

/// Control (write or read) envelope Ω(t) in rad/µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlWaveform {
    grid: TimeGrid,
    amplitude: Vec<f64>,
}

impl ControlWaveform {
    pub fn new(grid: TimeGrid, amplitude: Vec<f64>) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(Error::invalid(format!(
                "waveform has {} samples but grid has {}",
                amplitude.len(),
                grid.len()
            )));
        }
        if let Some((i, a)) = amplitude
            .iter()
            .enumerate()
            .find(|(_, a)| !a.is_finite() || **a < 0.0)
        {
            return Err(Error::invalid(format!(
                "waveform amplitude at sample {i} is {a}; must be finite and >= 0"
            )));
        }
        Ok(Self { grid, amplitude })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            amplitude: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn into_amplitude(self) -> Vec<f64> {
        self.amplitude
    }

    pub fn max_amplitude(&self) -> f64 {
        self.amplitude.iter().copied().fold(0.0, f64::max)
    }
}

/// Sparse DE search representation: control amplitudes at Chebyshev nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevGenotype {
    node_values: Vec<f64>,
    omega_max: f64,
}

impl ChebyshevGenotype {
    pub fn new(node_values: Vec<f64>, omega_max: f64) -> Result<Self> {
        if node_values.len() < 2 {
            return Err(Error::invalid("genotype needs at least 2 nodes"));
        }
        if !(omega_max > 0.0) {
            return Err(Error::invalid(format!(
                "omega_max must be > 0, got {omega_max}"
            )));
        }
        if let Some((i, v)) = node_values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && **v <= omega_max))
        {
            return Err(Error::invalid(format!(
                "node {i} value {v} outside [0, {omega_max}]"
            )));
        }
        Ok(Self {
            node_values,
            omega_max,
        })
    }

    pub fn degree(&self) -> usize {
        self.node_values.len()
    }

    pub fn node_values(&self) -> &[f64] {
        &self.node_values
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }
}

/// Chebyshev points of the first kind mapped onto `[t_start, t_end]`,
/// ascending. All points are strictly interior.
pub fn chebyshev_nodes(n: usize, t_start: f64, t_end: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("need at least one Chebyshev node"));
    }
    if !(t_end > t_start) {
        return Err(Error::invalid(format!(
            "degenerate node interval [{t_start}, {t_end}]"
        )));
    }
    let mid = 0.5 * (t_start + t_end);
    let half = 0.5 * (t_end - t_start);
    // j = n..1 gives ascending order; pair j with n+1-j so mirrored nodes
    // come out exactly symmetric.
    let nodes = (1..=n)
        .rev()
        .map(|j| {
            let mirror = n + 1 - j;
            let c = if j > mirror {
                -(((2 * mirror - 1) as f64) * PI / (2 * n) as f64).cos()
            } else if j == mirror {
                0.0
            } else {
                (((2 * j - 1) as f64) * PI / (2 * n) as f64).cos()
            };
            mid + half * c
        })
        .collect();
    Ok(nodes)
}

/// Natural cubic spline through the genotype's Chebyshev nodes, sampled on
/// `grid`, without the nonnegativity clamp.
pub fn spline_unclamped(genotype: &ChebyshevGenotype, grid: &TimeGrid) -> Result<Vec<f64>> {
    let nodes = chebyshev_nodes(genotype.degree(), grid.t_start(), grid.t_end())?;
    let spline = NaturalCubicSpline::new(&nodes, genotype.node_values())?;
    Ok(grid.times().into_iter().map(|t| spline.eval(t)).collect())
}

/// Dense control waveform from a sparse genotype; negative excursions are
/// clamped to zero.
pub fn spline_interpolate(
    genotype: &ChebyshevGenotype,
    grid: &TimeGrid,
) -> Result<ControlWaveform> {
    let amplitude = spline_unclamped(genotype, grid)?
        .into_iter()
        .map(|a| a.max(0.0))
        .collect();
    ControlWaveform::new(*grid, amplitude)
}

/// Trapezoidal integral of uniformly spaced samples.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => dt * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// ∫|Ω|² dt over the grid (ns · (rad/µs)²).
pub fn pulse_energy(w: &ControlWaveform) -> f64 {
    let sq: Vec<f64> = w.amplitude.iter().map(|a| a * a).collect();
    trapezoid(&sq, w.grid.spacing())
}
