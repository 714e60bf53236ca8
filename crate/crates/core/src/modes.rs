// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Transverse mode mathematics at the cell plane (z = 0): Laguerre-Gauss
//! and Hermite-Gauss fields, LG→HG decomposition by overlap integrals,
//! polarization splitting, transverse diffusion and petal patterns.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::hermite_functions;
use crate::image::Image;

/// Pixel grid centered on the optical axis. `extent` is the half-width
/// along x in mm; pixels are square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub n_x: usize,
    pub n_y: usize,
    pub extent: f64,
}

impl Default for SpatialGrid {
    fn default() -> Self {
        Self {
            n_x: 256,
            n_y: 256,
            extent: 3.0,
        }
    }
}

impl SpatialGrid {
    pub fn new(n_x: usize, n_y: usize, extent: f64) -> Result<Self> {
        let grid = Self { n_x, n_y, extent };
        grid.validate()?;
        Ok(grid)
    }

    pub fn square(n: usize, extent: f64) -> Result<Self> {
        Self::new(n, n, extent)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 16 || self.n_y < 16 {
            return Err(Error::invalid(format!(
                "spatial grid {}x{} below the 16x16 minimum",
                self.n_x, self.n_y
            )));
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(Error::invalid(format!(
                "grid extent must be > 0, got {}",
                self.extent
            )));
        }
        Ok(())
    }

    /// Pixel pitch in mm.
    pub fn pitch(&self) -> f64 {
        2.0 * self.extent / self.n_x as f64
    }

    pub fn pixel_area(&self) -> f64 {
        self.pitch() * self.pitch()
    }

    pub fn x(&self, ix: usize) -> f64 {
        (ix as f64 - 0.5 * (self.n_x as f64 - 1.0)) * self.pitch()
    }

    pub fn y(&self, iy: usize) -> f64 {
        (iy as f64 - 0.5 * (self.n_y as f64 - 1.0)) * self.pitch()
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Half-width of the short side, mm.
    pub fn half_width(&self) -> f64 {
        0.5 * self.pitch() * self.n_x.min(self.n_y) as f64
    }

    fn sample(&self, f: impl Fn(f64, f64) -> Complex64) -> Vec<Complex64> {
        let mut values = Vec::with_capacity(self.len());
        for iy in 0..self.n_y {
            let y = self.y(iy);
            for ix in 0..self.n_x {
                values.push(f(self.x(ix), y));
            }
        }
        values
    }
}

/// Complex transverse field, row-major (`values[iy * n_x + ix]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::invalid("field size does not match its grid"));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::invalid("field values must be finite"));
        }
        Ok(Self { grid, values })
    }

    /// ∫|E|² dA.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.pixel_area()
    }

    /// ∫E dA.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.pixel_area()
    }

    /// ⟨self, other⟩ = ∫ conj(self)·other dA.
    pub fn inner(&self, other: &ScalarField) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::invalid("fields live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.pixel_area())
    }

    pub fn scaled(&self, c: Complex64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn normalized(mut self) -> Result<Self> {
        let p = self.power();
        if !(p > 0.0) {
            return Err(Error::invalid("cannot normalize a zero field"));
        }
        let s = 1.0 / p.sqrt();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    pub fn intensity(&self) -> Image {
        Image {
            width: self.grid.n_x,
            height: self.grid.n_y,
            data: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// Largest intensity on the outermost pixel ring relative to the peak.
    pub fn edge_to_peak(&self) -> f64 {
        let (nx, ny) = (self.grid.n_x, self.grid.n_y);
        let at = |ix: usize, iy: usize| self.values[iy * nx + ix].norm_sqr();
        let peak = self.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        let mut edge: f64 = 0.0;
        for ix in 0..nx {
            edge = edge.max(at(ix, 0)).max(at(ix, ny - 1));
        }
        for iy in 0..ny {
            edge = edge.max(at(0, iy)).max(at(nx - 1, iy));
        }
        if peak > 0.0 {
            edge / peak
        } else {
            0.0
        }
    }
}

/// Boundary intensity above this fraction of the peak flags truncation.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

/// Warning text when `field` is clipped by its grid.
pub fn truncation_warning(field: &ScalarField) -> Option<String> {
    let ratio = field.edge_to_peak();
    (ratio > TRUNCATION_LIMIT).then(|| {
        format!("field truncated by the grid: edge/peak intensity {ratio:.3e} exceeds {TRUNCATION_LIMIT:e}")
    })
}

/// Beam waist of a charge-`l` mode built from a Gaussian of waist `w0`.
pub fn beam_waist(l: i32, w0: f64) -> f64 {
    (f64::from(l.unsigned_abs()) + 1.0).sqrt() * w0
}

/// Radius of peak intensity of the p = 0 mode, w0·√(|l|/2).
pub fn ring_radius(l: i32, w0: f64) -> f64 {
    w0 * (0.5 * f64::from(l.unsigned_abs())).sqrt()
}

/// p = 0 Laguerre-Gauss mode, ∝ (r√2/w0)^{|l|} e^{−r²/w0²} e^{ilφ}, unit power
/// on the grid.
pub fn lg_field(l: i32, w0: f64, grid: &SpatialGrid) -> Result<ScalarField> {
    grid.validate()?;
    if !(w0 > 0.0 && w0.is_finite()) {
        return Err(Error::invalid(format!("beam waist must be > 0, got {w0}")));
    }
    if l.unsigned_abs() > 16 {
        return Err(Error::invalid(format!(
            "|l| = {} exceeds 16",
            l.unsigned_abs()
        )));
    }
    let order = l.unsigned_abs() as i32;
    let sign = if l < 0 { -1.0 } else { 1.0 };
    let scale = std::f64::consts::SQRT_2 / w0;
    let values = grid.sample(|x, y| {
        let z = Complex64::new(x * scale, sign * y * scale);
        z.powi(order) * (-(x * x + y * y) / (w0 * w0)).exp()
    });
    ScalarField::new(*grid, values)?.normalized()
}

/// Hermite-Gauss mode HG_{m,n} with waist `w0`, unit power on the grid.
pub fn hg_field(m: usize, n: usize, w0: f64, grid: &SpatialGrid) -> Result<ScalarField> {
    grid.validate()?;
    if !(w0 > 0.0) {
        return Err(Error::invalid(format!("beam waist must be > 0, got {w0}")));
    }
    let s = std::f64::consts::SQRT_2 / w0;
    let hx: Vec<f64> = (0..grid.n_x)
        .map(|ix| hermite_functions(m, s * grid.x(ix))[m])
        .collect();
    let hy: Vec<f64> = (0..grid.n_y)
        .map(|iy| hermite_functions(n, s * grid.y(iy))[n])
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for y in &hy {
        for x in &hx {
            values.push(Complex64::new(x * y, 0.0));
        }
    }
    ScalarField::new(*grid, values)?.normalized()
}

/// LG→HG expansion coefficients C_{m,n} = ⟨HG_{m,n}, LG_l⟩ with m + n = |l|.
#[derive(Debug, Clone, PartialEq)]
pub struct HgDecomposition {
    /// `((m, n), C)` for every |C| > 1e-10, ordered by decreasing m.
    pub coefficients: Vec<((usize, usize), Complex64)>,
    /// Σ|C|².
    pub completeness: f64,
}

impl HgDecomposition {
    pub fn get(&self, m: usize, n: usize) -> Option<Complex64> {
        self.coefficients
            .iter()
            .find(|(k, _)| *k == (m, n))
            .map(|(_, c)| *c)
    }
}

pub fn lg_to_hg(l: i32, w0: f64, grid: &SpatialGrid) -> Result<HgDecomposition> {
    let order = l.unsigned_abs() as usize;
    if order > 8 {
        return Err(Error::invalid(format!("|l| = {order} exceeds 8")));
    }
    let lg = lg_field(l, w0, grid)?;
    let mut coefficients = Vec::new();
    let mut completeness = 0.0;
    for m in (0..=order).rev() {
        let n = order - m;
        let c = hg_field(m, n, w0, grid)?.inner(&lg)?;
        completeness += c.norm_sqr();
        if c.norm() > 1e-10 {
            coefficients.push(((m, n), c));
        }
    }
    // Undersampled HG functions lose orthogonality, which pushes the sum
    // above 1 as readily as truncation pulls it below.
    if (completeness - 1.0).abs() > 1e-3 {
        return Err(Error::Resolution(format!(
            "LG_{l} decomposition completeness {completeness:.6} outside 1 +/- 1e-3; refine the grid"
        )));
    }
    Ok(HgDecomposition {
        coefficients,
        completeness,
    })
}

/// Polarization state α|H⟩ + e^{iχ}β|V⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jones {
    pub alpha: f64,
    pub beta: f64,
    pub chi: f64,
}

impl Jones {
    pub fn new(alpha: f64, beta: f64, chi: f64) -> Result<Self> {
        let norm = alpha * alpha + beta * beta;
        if !((norm - 1.0).abs() <= 1e-12) || !chi.is_finite() {
            return Err(Error::invalid(format!(
                "Jones vector not normalized: α²+β² = {norm}"
            )));
        }
        Ok(Self { alpha, beta, chi })
    }

    pub fn h_amplitude(&self) -> Complex64 {
        Complex64::new(self.alpha, 0.0)
    }

    pub fn v_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.beta, self.chi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub h: ScalarField,
    pub v: ScalarField,
}

/// Splits a scalar field into its H and V components.
pub fn vector_split(f: &ScalarField, jones: &Jones) -> Result<VectorField> {
    let jones = Jones::new(jones.alpha, jones.beta, jones.chi)?;
    Ok(VectorField {
        h: f.scaled(jones.h_amplitude()),
        v: f.scaled(jones.v_amplitude()),
    })
}

/// Mode components of one hyper-dimensional signal: charge, polarization
/// and temporal envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperState {
    pub l: i32,
    pub jones: Jones,
    pub envelope: crate::plant::SignalEnvelope,
}

impl HyperState {
    pub const MAX_CHARGE: u32 = 5;

    pub fn new(l: i32, jones: Jones, envelope: crate::plant::SignalEnvelope) -> Result<Self> {
        if l.unsigned_abs() > Self::MAX_CHARGE {
            return Err(Error::invalid(format!(
                "|l| = {} exceeds {}",
                l.unsigned_abs(),
                Self::MAX_CHARGE
            )));
        }
        let jones = Jones::new(jones.alpha, jones.beta, jones.chi)?;
        Ok(Self { l, jones, envelope })
    }

    /// Transverse vector field of this state at the cell plane.
    pub fn transverse(&self, w0: f64, grid: &SpatialGrid) -> Result<VectorField> {
        vector_split(&lg_field(self.l, w0, grid)?, &self.jones)
    }
}

/// In-place 2D FFT over a row-major `n_x × n_y` array.
fn fft2(values: &mut [Complex64], n_x: usize, n_y: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(n_x), planner.plan_fft_inverse(n_y))
    } else {
        (planner.plan_fft_forward(n_x), planner.plan_fft_forward(n_y))
    };
    for row in values.chunks_exact_mut(n_x) {
        row_fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); n_y];
    for ix in 0..n_x {
        for iy in 0..n_y {
            column[iy] = values[iy * n_x + ix];
        }
        col_fft.process(&mut column);
        for iy in 0..n_y {
            values[iy * n_x + ix] = column[iy];
        }
    }
}

fn angular_frequency(i: usize, n: usize, pitch: f64) -> f64 {
    let k = if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    };
    2.0 * std::f64::consts::PI * k / (n as f64 * pitch)
}

/// Kernel width √(2·D·τ) in mm for diffusion coefficient `d` (mm²/µs)
/// over `tau_us`.
pub fn diffusion_sigma(d: f64, tau_us: f64) -> f64 {
    (2.0 * d * tau_us).sqrt()
}

pub fn diffusion_warning(grid: &SpatialGrid, d: f64, tau_us: f64) -> Option<String> {
    let sigma = diffusion_sigma(d, tau_us);
    (sigma > grid.half_width() / 4.0).then(|| {
        format!("diffusion width {sigma:.3} mm exceeds a quarter of the grid half-width; wrap-around likely")
    })
}

/// Convolves the field amplitude with a normalized Gaussian of standard
/// deviation √(2Dτ), applied as a transfer function exp(−σ²k²/2).
pub fn diffuse(f: &ScalarField, d: f64, tau_us: f64) -> Result<ScalarField> {
    if !(d >= 0.0 && tau_us >= 0.0) {
        return Err(Error::invalid("diffusion needs D >= 0 and tau >= 0"));
    }
    let sigma = diffusion_sigma(d, tau_us);
    if sigma == 0.0 {
        return Ok(f.clone());
    }
    let grid = f.grid;
    let (nx, ny) = (grid.n_x, grid.n_y);
    let mut spectrum = f.values.clone();
    fft2(&mut spectrum, nx, ny, false);
    let kx: Vec<f64> = (0..nx)
        .map(|i| angular_frequency(i, nx, grid.pitch()))
        .collect();
    let ky: Vec<f64> = (0..ny)
        .map(|i| angular_frequency(i, ny, grid.pitch()))
        .collect();
    let norm = 1.0 / (nx * ny) as f64;
    for (iy, ky) in ky.iter().enumerate() {
        for (ix, kx) in kx.iter().enumerate() {
            let h = (-0.5 * sigma * sigma * (kx * kx + ky * ky)).exp();
            spectrum[iy * nx + ix] *= h * norm;
        }
    }
    fft2(&mut spectrum, nx, ny, true);
    ScalarField::new(grid, spectrum)
}

/// Field of the ±l superposition (LG_l + e^{i2l·rot} LG_{−l})/√2, whose
/// intensity shows 2|l| petals rotated by `rotation`.
pub fn petal_field(l: i32, w0: f64, grid: &SpatialGrid, rotation: f64) -> Result<ScalarField> {
    if l == 0 {
        return Err(Error::invalid("l = 0 has no petals"));
    }
    let plus = lg_field(l, w0, grid)?;
    let minus = lg_field(-l, w0, grid)?;
    let phase = Complex64::from_polar(1.0, 2.0 * f64::from(l) * rotation);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let values = plus
        .values
        .iter()
        .zip(&minus.values)
        .map(|(a, b)| (a + b * phase) * s)
        .collect();
    ScalarField::new(*grid, values)
}

pub fn petal_pattern(l: i32, w0: f64, grid: &SpatialGrid, rotation: f64) -> Result<Image> {
    Ok(petal_field(l, w0, grid, rotation)?.intensity())
}
