// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Single-spin-mode Raman memory used as the optimization objective.
//!
//! Write-in follows the input-output beam-splitter-in-time model
//!
//! ```text
//! dβ/dt   = −(γ_s + κ_eff Ω(t)²/2) β + √κ_eff Ω(t) a_in(t)
//! leak(t) = a_in(t) − √κ_eff Ω(t) β(t)
//! ```
//!
//! with κ_eff = c(l)·κ, and read-out is the same equation with no input,
//! retrieving `√κ Ω_R(t) β(t)`. For γ_s = 0 the write map is passive:
//! d|β|²/dt + |leak|² = |a_in|².
//!
//! Time on the grids is in ns; the rate equations run in µs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveforms::{trapezoid, ControlWaveform, TimeGrid};

/// Complex signal envelope sampled on a time grid. |a|² integrates (in µs)
/// to the pulse energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalEnvelope {
    grid: TimeGrid,
    values: Vec<Complex64>,
}

impl SignalEnvelope {
    pub fn new(grid: TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "envelope has {} samples but grid has {}",
                values.len(),
                grid.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::invalid("envelope samples must be finite"));
        }
        Ok(Self { grid, values })
    }

    /// Real Gaussian whose intensity has the given FWHM (ns), unit peak.
    pub fn gaussian(grid: TimeGrid, center_ns: f64, intensity_fwhm_ns: f64) -> Result<Self> {
        if !(intensity_fwhm_ns > 0.0) {
            return Err(Error::invalid("signal FWHM must be > 0"));
        }
        // |a|² = exp(−(t−t0)²/s²) has FWHM 2 s √ln2.
        let s = intensity_fwhm_ns / (2.0 * std::f64::consts::LN_2.sqrt());
        let values = grid
            .times()
            .into_iter()
            .map(|t| {
                let u = (t - center_ns) / s;
                Complex64::new((-0.5 * u * u).exp(), 0.0)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// ∫|a|² dt with t in µs.
    pub fn energy(&self) -> f64 {
        envelope_energy(&self.values, &self.grid)
    }
}

/// Trapezoidal ∫|v|² dt over `grid`, t in µs.
pub fn envelope_energy(values: &[Complex64], grid: &TimeGrid) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
    trapezoid(&sq, grid.spacing_us())
}

/// How the effective coupling falls off with topological charge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingModel {
    /// c(l) = 1/√(|l|+1): a waist growing as √(|l|+1) dilutes the control
    /// intensity seen by the signal mode.
    Waist,
    /// c(l) = 1.
    Flat,
}

impl CouplingModel {
    pub fn scale(self, l: i32) -> f64 {
        match self {
            CouplingModel::Waist => 1.0 / (f64::from(l.unsigned_abs()) + 1.0).sqrt(),
            CouplingModel::Flat => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    pub kappa: f64,
    /// Spin decoherence rate, 1/µs.
    pub gamma_s: f64,
    /// Write control bound, rad/µs. May be infinite.
    pub omega_max: f64,
    pub read_control: ControlWaveform,
    /// Storage time between write and read, µs.
    pub delay_us: f64,
    pub coupling: CouplingModel,
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid(format!(
                "kappa must be > 0, got {}",
                self.kappa
            )));
        }
        if !(self.gamma_s >= 0.0 && self.gamma_s.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma_s must be >= 0, got {}",
                self.gamma_s
            )));
        }
        if !(self.omega_max > 0.0) {
            return Err(Error::invalid(format!(
                "omega_max must be > 0, got {}",
                self.omega_max
            )));
        }
        if !(self.delay_us >= 0.0 && self.delay_us.is_finite()) {
            return Err(Error::invalid(format!(
                "delay must be >= 0, got {}",
                self.delay_us
            )));
        }
        Ok(())
    }

    pub fn coupling_scale(&self, l: i32) -> f64 {
        self.coupling.scale(l)
    }
}

/// Flat-top read pulse with sin² ramps of `ramp_ns`, scaled so that
/// κ∫Ω_R² dt (t in µs) equals `area`.
pub fn flat_top_read(
    grid: TimeGrid,
    ramp_ns: f64,
    kappa: f64,
    area: f64,
) -> Result<ControlWaveform> {
    if !(area >= 0.0) || !(kappa > 0.0) {
        return Err(Error::invalid("read area must be >= 0 and kappa > 0"));
    }
    let (t0, t1) = (grid.t_start(), grid.t_end());
    if !(ramp_ns >= 0.0) || 2.0 * ramp_ns > t1 - t0 {
        return Err(Error::invalid("read ramps longer than the read window"));
    }
    let shape: Vec<f64> = grid
        .times()
        .into_iter()
        .map(|t| {
            let edge = (t - t0).min(t1 - t).max(0.0);
            if ramp_ns == 0.0 || edge >= ramp_ns {
                1.0
            } else {
                (0.5 * std::f64::consts::PI * edge / ramp_ns).sin().powi(2)
            }
        })
        .collect();
    let sq: Vec<f64> = shape.iter().map(|s| s * s).collect();
    let unit_area = kappa * trapezoid(&sq, grid.spacing_us());
    let scale = if area == 0.0 {
        0.0
    } else {
        (area / unit_area).sqrt()
    };
    ControlWaveform::new(grid, shape.into_iter().map(|s| s * scale).collect())
}

#[derive(Debug, Clone)]
pub struct WriteResult {
    pub spin_final: Complex64,
    pub leak: Vec<Complex64>,
    pub eta_w: f64,
    /// Spin amplitude at every grid sample.
    pub spin: Vec<Complex64>,
    /// ∫|a_in|² and ∫|leak|² along the integrator's interpolated waveforms.
    /// For γ_s = 0 these satisfy |β(T)|² + leak_energy = input_energy.
    pub input_energy: f64,
    pub leak_energy: f64,
}

#[derive(Debug, Clone)]
pub struct ReadResult {
    pub retrieved: Vec<Complex64>,
    pub eta_r: f64,
}

#[derive(Debug, Clone)]
pub struct MemoryOutcome {
    pub eta_w: f64,
    pub eta_r: f64,
    pub eta_m: f64,
    pub spin_final: Complex64,
    pub leak: Vec<Complex64>,
    pub retrieved: Vec<Complex64>,
}

/// Cubic Lagrange interpolation of uniformly spaced samples at fraction
/// `s ∈ [0, 1]` of interval `k`; the stencil shifts inward at the ends.
fn interpolate<T>(f: &[T], k: usize, s: f64) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = f.len();
    if n < 4 {
        return if n == 2 || k == 0 {
            f[k] * (1.0 - s) + f[k + 1] * s
        } else {
            // three samples, quadratic through all of them
            let u = s + k as f64 - 1.0;
            f[0] * (0.5 * u * (u - 1.0)) + f[1] * (1.0 - u * u) + f[2] * (0.5 * u * (u + 1.0))
        };
    }
    let base = k.saturating_sub(1).min(n - 4);
    // position of the evaluation point relative to f[base]
    let u = s + (k - base) as f64;
    let w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let w1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let w2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let w3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    f[base] * w0 + f[base + 1] * w1 + f[base + 2] * w2 + f[base + 3] * w3
}

/// Largest rate·h accepted per RK4 substep. Every grid interval also takes
/// at least two substeps; together these hold the write energy balance
/// below 1e-6 relative for controls up to a few rad/µs.
const MAX_RATE_STEP: f64 = 0.05;

struct Integrated {
    beta: Vec<Complex64>,
    /// ∫|input|² and ∫|leak|² over the interpolated waveforms.
    input_energy: f64,
    leak_energy: f64,
}

/// Classical RK4 for dβ/dt = −(γ + c²/2) β + c·a with coupling c(t) and
/// input a(t) (zero when absent) known at the samples and interpolated in
/// between. The leak a − cβ and both energies ride along, so for γ = 0 the
/// balance |β(T)|² + ∫|leak|² = ∫|a|² holds to integrator accuracy. Each
/// interval is split into as many equal substeps as its peak rate needs.
fn integrate_linear(
    gamma: f64,
    coupling: &[f64],
    input: Option<&[Complex64]>,
    h: f64,
    beta0: Complex64,
) -> Integrated {
    let n = coupling.len();
    let mut beta = Vec::with_capacity(n);
    beta.push(beta0);
    let mut b = beta0;
    let (mut e_in, mut e_leak) = (0.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    for k in 0..n - 1 {
        let c_peak = coupling[k]
            .abs()
            .max(coupling[k + 1].abs())
            .max(interpolate(coupling, k, 0.5).abs());
        let substeps =
            (((gamma + 0.5 * c_peak * c_peak) * h / MAX_RATE_STEP).ceil() as usize).max(2);
        let hs = h / substeps as f64;
        let ds = 1.0 / substeps as f64;
        let at = |s: f64| {
            (
                interpolate(coupling, k, s),
                input.map_or(zero, |a| interpolate(a, k, s)),
            )
        };
        // derivative of β and the input and leak powers at one stage
        let stage = |(c, a): (f64, Complex64), b: Complex64| {
            let rate = gamma + 0.5 * c * c;
            (a * c - b * rate, a.norm_sqr(), (a - b * c).norm_sqr())
        };
        for j in 0..substeps {
            let s0 = j as f64 * ds;
            let (p0, pm, p1) = (at(s0), at(s0 + 0.5 * ds), at(s0 + ds));
            let (k1, i1, l1) = stage(p0, b);
            let (k2, i2, l2) = stage(pm, b + k1 * (0.5 * hs));
            let (k3, i3, l3) = stage(pm, b + k2 * (0.5 * hs));
            let (k4, i4, l4) = stage(p1, b + k3 * hs);
            b += (k1 + (k2 + k3) * 2.0 + k4) * (hs / 6.0);
            e_in += (i1 + 2.0 * (i2 + i3) + i4) * (hs / 6.0);
            e_leak += (l1 + 2.0 * (l2 + l3) + l4) * (hs / 6.0);
        }
        beta.push(b);
    }
    Integrated {
        beta,
        input_energy: e_in,
        leak_energy: e_leak,
    }
}

/// Stores `a_in` under write control `omega` for a signal of charge `l`.
pub fn simulate_write(
    a_in: &SignalEnvelope,
    omega: &ControlWaveform,
    p: &PlantParams,
    l: i32,
) -> Result<WriteResult> {
    p.validate()?;
    if a_in.grid() != omega.grid() {
        return Err(Error::invalid(
            "signal and write control are on different grids",
        ));
    }
    let e_in = a_in.energy();
    if !(e_in > 0.0) {
        return Err(Error::invalid("input signal has zero energy"));
    }
    let kappa_eff = p.coupling_scale(l) * p.kappa;
    let g = kappa_eff.sqrt();
    let amp = omega.amplitude();
    let coupling: Vec<f64> = amp.iter().map(|o| g * o).collect();
    let solved = integrate_linear(
        p.gamma_s,
        &coupling,
        Some(a_in.values()),
        a_in.grid().spacing_us(),
        Complex64::new(0.0, 0.0),
    );
    let spin = solved.beta;
    let leak: Vec<Complex64> = a_in
        .values()
        .iter()
        .zip(amp)
        .zip(&spin)
        .map(|((a, o), b)| a - b * (g * o))
        .collect();
    let spin_final = *spin.last().expect("grid has at least two samples");
    Ok(WriteResult {
        spin_final,
        leak,
        eta_w: spin_final.norm_sqr() / e_in,
        spin,
        input_energy: solved.input_energy,
        leak_energy: solved.leak_energy,
    })
}

/// Retrieves a stored spin amplitude with the plant's read control.
pub fn simulate_read(spin0: Complex64, p: &PlantParams) -> Result<ReadResult> {
    p.validate()?;
    let read = &p.read_control;
    let n = read.grid().len();
    if spin0.norm_sqr() == 0.0 {
        return Ok(ReadResult {
            retrieved: vec![Complex64::new(0.0, 0.0); n],
            eta_r: 0.0,
        });
    }
    let g = p.kappa.sqrt();
    let amp = read.amplitude();
    let coupling: Vec<f64> = amp.iter().map(|o| g * o).collect();
    let spin = integrate_linear(p.gamma_s, &coupling, None, read.grid().spacing_us(), spin0).beta;
    let retrieved: Vec<Complex64> = spin.iter().zip(amp).map(|(b, o)| b * (g * o)).collect();
    let eta_r = envelope_energy(&retrieved, read.grid()) / spin0.norm_sqr();
    Ok(ReadResult { retrieved, eta_r })
}

/// Write, store for `p.delay_us`, read back.
pub fn memory_efficiency(
    a_in: &SignalEnvelope,
    omega: &ControlWaveform,
    p: &PlantParams,
    l: i32,
) -> Result<MemoryOutcome> {
    let write = simulate_write(a_in, omega, p, l)?;
    let decay = (-p.gamma_s * p.delay_us).exp();
    let read = simulate_read(write.spin_final * decay, p)?;
    let e_in = a_in.energy();
    let e_r = envelope_energy(&read.retrieved, p.read_control.grid());
    Ok(MemoryOutcome {
        eta_w: write.eta_w,
        eta_r: read.eta_r,
        eta_m: e_r / e_in,
        spin_final: write.spin_final,
        leak: write.leak,
        retrieved: read.retrieved,
    })
}

/// Zero-leak write control Ω = |a_in| / (√κ √∫₀ᵗ|a_in|²), clamped at
/// `p.omega_max`.
pub fn impedance_matched_control(
    a_in: &SignalEnvelope,
    p: &PlantParams,
) -> Result<ControlWaveform> {
    const EPS: f64 = 1e-9;
    if !(a_in.energy() > 0.0) {
        return Err(Error::invalid("input signal has zero energy"));
    }
    let h = a_in.grid().spacing_us();
    let sqrt_kappa = p.kappa.sqrt();
    let mut cumulative = 0.0;
    let mut prev = 0.0;
    let amplitude = a_in
        .values()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let intensity = a.norm_sqr();
            if k > 0 {
                cumulative += 0.5 * h * (prev + intensity);
            }
            prev = intensity;
            let stored = if k == 0 { cumulative + EPS } else { cumulative };
            let omega = if a.norm() == 0.0 {
                0.0
            } else {
                a.norm() / (sqrt_kappa * stored.max(EPS).sqrt())
            };
            omega.min(p.omega_max)
        })
        .collect();
    ControlWaveform::new(*a_in.grid(), amplitude)
}
