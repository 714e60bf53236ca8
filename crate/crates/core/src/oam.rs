// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Image-side OAM decoding: circular sampling, angular power spectra,
//! cosine fidelity, azimuth shift and memory-time extraction.
//!
//! Petal images of charge `l` modulate at angular harmonic `2l`, so the
//! spectrum bins intensity harmonics `k = 2l`. Intensity cannot tell `l`
//! from `−l`; spectra are indexed by `|l|`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::modes::{diffuse, petal_field, ring_radius, SpatialGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct RingSample {
    /// Sampling radius in pixels.
    pub radius: f64,
    /// Intensity at φ_k = 2πk/n, counterclockwise from +x.
    pub intensity: Vec<f64>,
}

impl RingSample {
    pub fn new(radius: f64, intensity: Vec<f64>) -> Result<Self> {
        if intensity.len() < 8 {
            return Err(Error::invalid(format!(
                "ring needs >= 8 angles, got {}",
                intensity.len()
            )));
        }
        if intensity.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("ring intensities must be finite and >= 0"));
        }
        Ok(Self { radius, intensity })
    }

    pub fn n_angles(&self) -> usize {
        self.intensity.len()
    }

    pub fn angle(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_angles() as f64
    }
}

fn bilinear(image: &Image, x: f64, y: f64) -> f64 {
    let x0 = (x.floor() as usize).min(image.width - 2);
    let y0 = (y.floor() as usize).min(image.height - 2);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let top = image.get(x0, y0) * (1.0 - fx) + image.get(x0 + 1, y0) * fx;
    let bottom = image.get(x0, y0 + 1) * (1.0 - fx) + image.get(x0 + 1, y0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Samples `image` on a circle of `radius` pixels around `center`.
pub fn circular_sample(
    image: &Image,
    center: (f64, f64),
    radius: f64,
    n_angles: usize,
) -> Result<RingSample> {
    if n_angles < 8 {
        return Err(Error::invalid(format!(
            "n_angles must be >= 8, got {n_angles}"
        )));
    }
    if !(radius >= 0.0) || image.width < 2 || image.height < 2 {
        return Err(Error::invalid("bad sampling radius or image size"));
    }
    let (cx, cy) = center;
    let (w, h) = ((image.width - 1) as f64, (image.height - 1) as f64);
    if cx - radius < 0.0 || cy - radius < 0.0 || cx + radius > w || cy + radius > h {
        return Err(Error::OutOfBounds(format!(
            "circle r={radius:.2} px at ({cx:.2}, {cy:.2}) leaves the {}x{} image",
            image.width, image.height
        )));
    }
    let intensity = (0..n_angles)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n_angles as f64;
            bilinear(image, cx + radius * phi.cos(), cy + radius * phi.sin()).max(0.0)
        })
        .collect();
    RingSample::new(radius, intensity)
}

/// Angular power by charge magnitude, `power[l]` for `l = 0..=l_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OamSpectrum {
    pub l_max: usize,
    pub power: Vec<f64>,
    /// Odd harmonics and harmonics above `2·l_max`.
    pub unassigned: f64,
}

impl OamSpectrum {
    pub fn total(&self) -> f64 {
        self.power.iter().sum::<f64>() + self.unassigned
    }

    /// Charge with the most power, ignoring the DC bin.
    pub fn dominant_charge(&self) -> usize {
        (1..=self.l_max)
            .max_by(|a, b| self.power[*a].total_cmp(&self.power[*b]))
            .unwrap_or(0)
    }
}

fn fft(values: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(values.len())
    } else {
        planner.plan_fft_forward(values.len())
    };
    plan.process(values);
}

/// Normalized DFT coefficients F_k = (1/n) Σ I_j e^{−2πijk/n}, so that
/// Σ|F_k|² equals the mean of I².
fn angular_coefficients(intensity: &[f64]) -> Vec<Complex64> {
    let n = intensity.len() as f64;
    let mut f: Vec<Complex64> = intensity
        .iter()
        .map(|&v| Complex64::new(v / n, 0.0))
        .collect();
    fft(&mut f, false);
    f
}

pub fn oam_power_spectrum(ring: &RingSample, l_max: usize) -> Result<OamSpectrum> {
    let n = ring.n_angles();
    if l_max == 0 {
        return Err(Error::invalid("l_max must be >= 1"));
    }
    if n < 4 * l_max {
        return Err(Error::Aliasing(format!(
            "{n} angles cannot resolve charge {l_max}; need >= {}",
            4 * l_max
        )));
    }
    let f = angular_coefficients(&ring.intensity);
    let mut power = vec![0.0; l_max + 1];
    let mut unassigned = 0.0;
    for (k, c) in f.iter().enumerate() {
        let p = c.norm_sqr();
        let harmonic = k.min(n - k);
        if harmonic % 2 == 0 && harmonic / 2 <= l_max {
            power[harmonic / 2] += p;
        } else {
            unassigned += p;
        }
    }
    Ok(OamSpectrum {
        l_max,
        power,
        unassigned,
    })
}

/// Cosine similarity of the two power vectors.
pub fn oam_fidelity(v_in: &OamSpectrum, v_r: &OamSpectrum) -> Result<f64> {
    if v_in.l_max != v_r.l_max {
        return Err(Error::invalid("spectra have different l_max"));
    }
    let dot: f64 = v_in.power.iter().zip(&v_r.power).map(|(a, b)| a * b).sum();
    let na = v_in.power.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb = v_r.power.iter().map(|b| b * b).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("fidelity of a zero spectrum"));
    }
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Rotation that carries `ring_in` onto `ring_r`: if
/// `ring_r(φ) = ring_in(φ − θ)` this returns θ, in (−π, π].
pub fn azimuth_shift(ring_in: &RingSample, ring_r: &RingSample) -> Result<f64> {
    let n = ring_in.n_angles();
    if ring_r.n_angles() != n {
        return Err(Error::invalid("rings have different n_angles"));
    }
    let centered = |v: &[f64]| -> Result<Vec<Complex64>> {
        let mean = v.iter().sum::<f64>() / n as f64;
        let spread = v.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
        if spread <= 1e-12 * mean.abs().max(1e-300) {
            return Err(Error::UndefinedShift(
                "ring has no angular structure".into(),
            ));
        }
        Ok(v.iter().map(|x| Complex64::new(x - mean, 0.0)).collect())
    };
    let mut a = centered(&ring_in.intensity)?;
    let mut b = centered(&ring_r.intensity)?;
    fft(&mut a, false);
    fft(&mut b, false);
    let mut c: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x.conj() * y).collect();
    fft(&mut c, true);
    let corr: Vec<f64> = c.iter().map(|v| v.re).collect();
    // Symmetric patterns give tied peaks; prefer the smallest rotation.
    let top = corr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-9 * top.abs();
    let peak = (0..n)
        .filter(|&i| corr[i] >= top - tie)
        .min_by_key(|&i| i.min(n - i))
        .unwrap_or(0);
    let (lo, mid, hi) = (corr[(peak + n - 1) % n], corr[peak], corr[(peak + 1) % n]);
    let denom = lo - 2.0 * mid + hi;
    let offset = if denom.abs() > 0.0 {
        (0.5 * (lo - hi) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Ok(wrap_angle(2.0 * PI * (peak as f64 + offset) / n as f64))
}

/// Reduces a raw shift of a charge-`l` petal ring modulo its π/|l|
/// symmetry period, into (−π/2|l|, π/2|l|].
pub fn charge_corrected(raw: f64, l: i32) -> f64 {
    if l == 0 {
        return raw;
    }
    let m = 2.0 * f64::from(l.unsigned_abs());
    wrap_angle(m * raw) / m
}

/// First downward crossing of `threshold`, linearly interpolated. Returns
/// the first τ when the curve already starts below threshold.
pub fn memory_time(curve: &[(f64, f64)], threshold: f64) -> Result<Option<f64>> {
    if curve.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::invalid("memory_time needs strictly increasing tau"));
    }
    let Some(first) = curve.first() else {
        return Ok(None);
    };
    if first.1 < threshold {
        return Ok(Some(first.0));
    }
    for w in curve.windows(2) {
        let ((t0, f0), (t1, f1)) = (w[0], w[1]);
        if f1 < threshold {
            return Ok(Some(t0 + (f0 - threshold) / (f0 - f1) * (t1 - t0)));
        }
        if f1 == threshold {
            return Ok(Some(t1));
        }
    }
    Ok(None)
}

/// Memory time (µs) times signal bandwidth (MHz).
pub fn time_bandwidth_product(tau_us: f64, bandwidth_mhz: f64) -> f64 {
    tau_us * bandwidth_mhz
}

/// Samples the ring of peak petal intensity for charge `l` and returns its
/// spectrum.
pub fn petal_spectrum(
    image: &Image,
    l: i32,
    w0: f64,
    grid: &SpatialGrid,
    n_angles: usize,
    l_max: usize,
) -> Result<OamSpectrum> {
    let ring = circular_sample(
        image,
        image.center(),
        ring_radius(l, w0) / grid.pitch(),
        n_angles,
    )?;
    oam_power_spectrum(&ring, l_max)
}

/// Decodes the charge magnitude of a petal image by ring sampling at the
/// intensity-maximum radius of each candidate charge.
pub fn decode_charge(
    image: &Image,
    w0: f64,
    grid: &SpatialGrid,
    n_angles: usize,
    l_max: usize,
) -> Result<usize> {
    let mut best = (0, f64::NEG_INFINITY);
    for l in 1..=l_max {
        let s = petal_spectrum(image, l as i32, w0, grid, n_angles, l_max)?;
        let score = s.power[l] / s.total();
        if score > best.1 {
            best = (l, score);
        }
    }
    Ok(best.0)
}

/// Storage-and-retrieval model for petal images. The retrieved field is
/// the input spin-wave diffused for τ and attenuated by `exp(−Γτ)`; the
/// detected spectrum carries a flat floor of `noise_floor` times the input
/// DC power in every bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OamDecayModel {
    /// Transverse diffusion coefficient, mm²/µs.
    pub diffusion: f64,
    /// Amplitude decay rate of the retrieved signal, 1/µs.
    pub transit_rate: f64,
    pub noise_floor: f64,
    /// Gaussian waist of the signal beam, mm.
    pub w0: f64,
    pub n_angles: usize,
    pub l_max: usize,
}

impl Default for OamDecayModel {
    fn default() -> Self {
        Self {
            diffusion: 3.613e-3,
            transit_rate: 0.48,
            noise_floor: 0.146,
            w0: 0.5,
            n_angles: 256,
            l_max: 5,
        }
    }
}

impl OamDecayModel {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.diffusion >= 0.0) {
            v.push(format!("diffusion must be >= 0, got {}", self.diffusion));
        }
        if !(self.transit_rate >= 0.0) {
            v.push(format!(
                "transit_rate must be >= 0, got {}",
                self.transit_rate
            ));
        }
        if !(self.noise_floor >= 0.0) {
            v.push(format!(
                "noise_floor must be >= 0, got {}",
                self.noise_floor
            ));
        }
        if !(self.w0 > 0.0) {
            v.push(format!("w0 must be > 0, got {}", self.w0));
        }
        if self.l_max == 0 || self.n_angles < 4 * self.l_max {
            v.push(format!(
                "n_angles must be >= 4*l_max and l_max >= 1, got {} and {}",
                self.n_angles, self.l_max
            ));
        }
        v
    }

    /// Input and retrieved spectra of a charge-`l` petal after storage time τ.
    pub fn spectra(
        &self,
        l: i32,
        tau_us: f64,
        grid: &SpatialGrid,
    ) -> Result<(OamSpectrum, OamSpectrum)> {
        let field = petal_field(l, self.w0, grid, 0.0)?;
        let radius = ring_radius(l, self.w0) / grid.pitch();
        let sample = |img: &Image| -> Result<OamSpectrum> {
            oam_power_spectrum(
                &circular_sample(img, img.center(), radius, self.n_angles)?,
                self.l_max,
            )
        };
        let v_in = sample(&field.intensity())?;
        let decay = (-2.0 * self.transit_rate * tau_us).exp();
        let retrieved = diffuse(&field, self.diffusion, tau_us)?.intensity();
        let mut v_r = sample(&Image {
            data: retrieved.data.iter().map(|v| v * decay).collect(),
            ..retrieved
        })?;
        let floor = self.noise_floor * v_in.power[0];
        v_r.power.iter_mut().for_each(|p| *p += floor);
        Ok((v_in, v_r))
    }

    /// OAM fidelity of a charge-`l` petal signal after storage time τ.
    pub fn fidelity(&self, l: i32, tau_us: f64, grid: &SpatialGrid) -> Result<f64> {
        let (v_in, v_r) = self.spectra(l, tau_us, grid)?;
        oam_fidelity(&v_in, &v_r)
    }

    /// Raw and charge-corrected azimuth shifts between input and retrieved
    /// rings after storage time τ.
    pub fn shift(&self, l: i32, tau_us: f64, grid: &SpatialGrid) -> Result<(f64, f64)> {
        let field = petal_field(l, self.w0, grid, 0.0)?;
        let radius = ring_radius(l, self.w0) / grid.pitch();
        let input = field.intensity();
        let output = diffuse(&field, self.diffusion, tau_us)?.intensity();
        let a = circular_sample(&input, input.center(), radius, self.n_angles)?;
        let b = circular_sample(&output, output.center(), radius, self.n_angles)?;
        let raw = azimuth_shift(&a, &b)?;
        Ok((raw, charge_corrected(raw, l)))
    }

    pub fn curve(&self, l: i32, taus: &[f64], grid: &SpatialGrid) -> Result<Vec<(f64, f64)>> {
        taus.iter()
            .map(|&t| Ok((t, self.fidelity(l, t, grid)?)))
            .collect()
    }

    /// Returns a copy whose diffusion coefficient puts the charge-`l`
    /// crossing of `threshold` at `target_us`, found by bisection on D.
    pub fn calibrate_diffusion(
        &self,
        l: i32,
        target_us: f64,
        threshold: f64,
        grid: &SpatialGrid,
    ) -> Result<Self> {
        let at = |d: f64| -> Result<f64> {
            let m = Self {
                diffusion: d,
                ..self.clone()
            };
            m.fidelity(l, target_us, grid)
        };
        let (mut lo, mut hi) = (0.0, 1.0e-3);
        if at(lo)? < threshold {
            return Err(Error::Numerical(format!(
                "fidelity is below {threshold} at {target_us} us even without diffusion"
            )));
        }
        while at(hi)? > threshold {
            hi *= 2.0;
            if hi > grid.half_width() * grid.half_width() {
                return Err(Error::Numerical(
                    "no diffusion coefficient reaches the threshold".into(),
                ));
            }
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if at(mid)? > threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self {
            diffusion: 0.5 * (lo + hi),
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(values: Vec<f64>) -> RingSample {
        RingSample::new(1.0, values).unwrap()
    }

    #[test]
    fn uniform_image_gives_constant_ring() {
        let img = Image::filled(64, 64, 2.5);
        let r = circular_sample(&img, img.center(), 20.0, 64).unwrap();
        assert!(r.intensity.iter().all(|v| (v - 2.5).abs() < 1e-12));
        assert!(matches!(
            circular_sample(&img, img.center(), 40.0, 64),
            Err(Error::OutOfBounds(_))
        ));
    }

    #[test]
    fn constant_ring_is_pure_dc() {
        let s = oam_power_spectrum(&ring(vec![3.0; 64]), 4).unwrap();
        assert!((s.power[0] - 9.0).abs() < 1e-12);
        assert!(s.power[1..].iter().all(|p| p.abs() < 1e-20) && s.unassigned < 1e-20);
    }

    #[test]
    fn aliasing_rejected() {
        assert!(matches!(
            oam_power_spectrum(&ring(vec![1.0; 16]), 5),
            Err(Error::Aliasing(_))
        ));
    }

    #[test]
    fn fidelity_edge_cases() {
        let a = OamSpectrum {
            l_max: 2,
            power: vec![0.0, 1.0, 0.0],
            unassigned: 0.0,
        };
        let b = OamSpectrum {
            power: vec![0.0, 0.0, 2.0],
            ..a.clone()
        };
        assert_eq!(oam_fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(oam_fidelity(&a, &b).unwrap(), 0.0);
        let zero = OamSpectrum {
            power: vec![0.0; 3],
            ..a.clone()
        };
        assert!(oam_fidelity(&a, &zero).is_err());
    }

    #[test]
    fn constant_ring_has_no_shift() {
        let r = ring(vec![1.0; 32]);
        assert!(matches!(
            azimuth_shift(&r, &r),
            Err(Error::UndefinedShift(_))
        ));
    }

    #[test]
    fn memory_time_cases() {
        let on = [(1.0, 0.8), (1.2, 0.67), (1.4, 0.5)];
        assert_eq!(memory_time(&on, 0.67).unwrap(), Some(1.2));
        assert_eq!(memory_time(&[(0.0, 0.9), (1.0, 0.8)], 0.67).unwrap(), None);
        assert!(memory_time(&[(1.0, 0.9), (0.5, 0.8)], 0.67).is_err());
        assert_eq!(
            memory_time(&[(0.1, 0.5), (0.2, 0.4)], 0.67).unwrap(),
            Some(0.1)
        );
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((charge_corrected(PI + 0.01, 1) - 0.01).abs() < 1e-12);
        assert!((charge_corrected(PI / 2.0 + 0.01, 1) + PI / 2.0 - 0.01).abs() < 1e-12);
    }
}
