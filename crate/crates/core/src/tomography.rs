// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! State reconstruction: simulated homodyne quadratures, iterative
//! maximum-likelihood density matrices, Uhlmann fidelity, six-projection
//! polarization tomography, visibility and the total-fidelity product.
//!
//! Quadratures follow x_θ = (a e^{−iθ} + a† e^{iθ})/√2 with vacuum variance
//! 1/2, so ⟨n|x_θ⟩ = e^{inθ} ψ_n(x).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::hermite_functions;
use crate::rng::substream;

type CMatrix = DMatrix<Complex64>;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance on Hermiticity, trace and negative eigenvalues.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub theta: f64,
    pub x: f64,
}

impl QuadratureSample {
    pub fn new(theta: f64, x: f64) -> Result<Self> {
        if !(0.0..2.0 * PI).contains(&theta) || !x.is_finite() {
            return Err(Error::invalid(format!(
                "bad quadrature sample ({theta}, {x})"
            )));
        }
        Ok(Self { theta, x })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity within [`STATE_TOL`].
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() != entries.ncols() {
            return Err(Error::invalid("density matrix must be square and nonempty"));
        }
        let herm = (&entries - entries.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if herm > STATE_TOL {
            return Err(Error::invalid(format!(
                "matrix not Hermitian (deviation {herm:.2e})"
            )));
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > STATE_TOL || trace.im.abs() > STATE_TOL {
            return Err(Error::invalid(format!("trace {trace} differs from 1")));
        }
        let min_eig = hermitian_eigen(&entries)
            .0
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -STATE_TOL {
            return Err(Error::invalid(format!(
                "matrix not positive (eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self { entries })
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(Error::invalid("zero state vector"));
        }
        let v = v / Complex64::new(norm, 0.0);
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0),
        }
    }

    /// Coherent state |α⟩ truncated to Fock states 0..=n_max and renormalized.
    pub fn coherent(alpha: Complex64, n_max: usize) -> Result<Self> {
        let mut amp = Vec::with_capacity(n_max + 1);
        let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..=n_max {
            if n > 0 {
                c *= alpha / (n as f64).sqrt();
            }
            amp.push(c);
        }
        Self::pure(&amp)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, eigenvalues real.
fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Square root of a PSD Hermitian matrix, negative eigenvalues set to 0.
fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let d = CMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

/// Root fidelity Tr√(√ρ1 ρ2 √ρ1).
pub fn uhlmann_fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            rho1.dim(),
            rho2.dim()
        )));
    }
    let s = psd_sqrt(&rho1.entries);
    let (vals, _) = hermitian_eigen(&(&s * &rho2.entries * &s));
    let top = vals.iter().copied().fold(0.0, f64::max);
    // Round-off leaves tiny negative or spurious eigenvalues behind.
    let floor = 1e-14 * top.max(1e-300);
    let f: f64 = vals.iter().filter(|v| **v > floor).map(|v| v.sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Quadrature samples of the coherent state `alpha` seen through a detector
/// of the given `efficiency`.
pub fn simulate_homodyne(
    alpha: Complex64,
    n_samples: usize,
    efficiency: f64,
    seed: u64,
) -> Result<Vec<QuadratureSample>> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be >= 1"));
    }
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::invalid(format!(
            "efficiency must be in (0, 1], got {efficiency}"
        )));
    }
    let mut rng = substream(seed, "homodyne");
    let noise = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
    let amp = (2.0 * efficiency).sqrt() * alpha.norm();
    let phase = alpha.arg();
    Ok((0..n_samples)
        .map(|_| {
            let theta = rng.random_range(0.0..2.0 * PI);
            let x = amp * (theta - phase).cos() + noise.sample(&mut rng);
            QuadratureSample { theta, x }
        })
        .collect())
}

/// Projector vector ⟨n|x_θ⟩ for n = 0..=n_max.
fn quadrature_vector(s: &QuadratureSample, n_max: usize) -> DVector<Complex64> {
    let psi = hermite_functions(n_max, s.x);
    DVector::from_iterator(
        n_max + 1,
        psi.iter()
            .enumerate()
            .map(|(n, p)| Complex64::from_polar(*p, n as f64 * s.theta)),
    )
}

/// p_i = ⟨x_θ|ρ|x_θ⟩ for every projector, floored at 1e−300.
fn probabilities(rho: &CMatrix, vectors: &[DVector<Complex64>], floored: &mut usize) -> Vec<f64> {
    vectors
        .iter()
        .map(|v| {
            let p = (v.adjoint() * rho * v)[(0, 0)].re;
            if p < 1e-300 {
                *floored += 1;
                1e-300
            } else {
                p
            }
        })
        .collect()
}

fn normalize_trace(m: CMatrix) -> CMatrix {
    let t = m.trace().re;
    (&m + m.adjoint()) * Complex64::new(0.5 / t, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    pub n_max: usize,
    pub iterations: usize,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            n_max: 10,
            iterations: 300,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix,
    /// Log-likelihood of the initial state followed by one entry per iteration.
    pub log_likelihood: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Iterative RρR maximum-likelihood reconstruction from a maximally mixed
/// start. A step that would lower the likelihood is replaced by the diluted
/// update (I + εR)ρ(I + εR) with ε halved until the likelihood does not drop.
pub fn mle_reconstruct(samples: &[QuadratureSample], cfg: &MleConfig) -> Result<MleResult> {
    if samples.is_empty() {
        return Err(Error::invalid("no quadrature samples"));
    }
    if cfg.n_max < 1 {
        return Err(Error::invalid("n_max must be >= 1"));
    }
    let dim = cfg.n_max + 1;
    let vectors: Vec<DVector<Complex64>> = samples
        .iter()
        .map(|s| quadrature_vector(s, cfg.n_max))
        .collect();
    let projectors: Vec<CMatrix> = vectors.iter().map(|v| v * v.adjoint()).collect();
    let n = samples.len() as f64;
    let mut floored = 0usize;
    let mut warnings = Vec::new();

    let mut rho = DensityMatrix::maximally_mixed(dim).entries;
    let mut probs = probabilities(&rho, &vectors, &mut floored);
    let ll = |p: &[f64]| p.iter().map(|v| v.ln()).sum::<f64>();
    let mut history = vec![ll(&probs)];
    let mut diluted = 0usize;

    for _ in 0..cfg.iterations {
        let mut r = CMatrix::zeros(dim, dim);
        for (proj, p) in projectors.iter().zip(&probs) {
            r += proj * Complex64::new(1.0 / (n * p), 0.0);
        }
        let current = *history.last().expect("nonempty");
        let mut candidate = normalize_trace(&r * &rho * &r);
        let mut cand_probs = probabilities(&candidate, &vectors, &mut floored);
        let mut cand_ll = ll(&cand_probs);
        let mut eps = 1.0;
        while cand_ll < current && eps > 1e-12 {
            let step = CMatrix::identity(dim, dim) + &r * Complex64::new(eps, 0.0);
            candidate = normalize_trace(&step * &rho * &step);
            cand_probs = probabilities(&candidate, &vectors, &mut floored);
            cand_ll = ll(&cand_probs);
            eps *= 0.5;
            diluted += 1;
        }
        if cand_ll < current {
            // converged to round-off; keep the current state
            history.push(current);
            continue;
        }
        rho = candidate;
        probs = cand_probs;
        history.push(cand_ll);
    }
    if floored > 0 {
        warnings.push(format!(
            "{floored} projector probabilities floored at 1e-300"
        ));
    }
    if diluted > 0 {
        warnings.push(format!(
            "{diluted} diluted steps taken to keep the likelihood nondecreasing"
        ));
    }
    Ok(MleResult {
        rho: DensityMatrix::new(rho)?,
        log_likelihood: history,
        warnings,
    })
}

/// Intensities behind the six polarization projectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationCounts {
    pub h: f64,
    pub v: f64,
    pub d: f64,
    pub a: f64,
    pub r: f64,
    pub l: f64,
}

impl PolarizationCounts {
    /// Noiseless projections of the normalized state c_H|H⟩ + c_V|V⟩.
    pub fn from_state(c_h: Complex64, c_v: Complex64) -> Self {
        let norm = (c_h.norm_sqr() + c_v.norm_sqr()).sqrt();
        let (h, v) = (c_h / norm, c_v / norm);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let proj = |x: Complex64, y: Complex64| (x.conj() * h + y.conj() * v).norm_sqr();
        Self {
            h: h.norm_sqr(),
            v: v.norm_sqr(),
            d: proj(C1 * s, C1 * s),
            a: proj(C1 * s, -C1 * s),
            r: proj(C1 * s, CI * s),
            l: proj(C1 * s, -CI * s),
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.h, self.v, self.d, self.a, self.r, self.l]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            h: v[0],
            v: v[1],
            d: v[2],
            a: v[3],
            r: v[4],
            l: v[5],
        }
    }

    /// Warning when complementary pairs disagree on total power by over 5%.
    pub fn conservation_warning(&self) -> Option<String> {
        let hv = self.h + self.v;
        let dev = ((hv - (self.d + self.a)).abs()).max((hv - (self.r + self.l)).abs()) / hv;
        (dev > 0.05).then(|| {
            format!(
                "projector pairs disagree on total power by {:.1}%",
                100.0 * dev
            )
        })
    }
}

#[derive(Debug, Clone)]
pub struct SamResult {
    pub rho: DensityMatrix,
    pub stokes: [f64; 3],
    /// True when a negative eigenvalue was clipped.
    pub clipped: bool,
    pub warnings: Vec<String>,
}

/// Stokes reconstruction in the {|H⟩, |V⟩} basis,
/// ρ = (I + S1σz + S2σx + S3σy)/2, projected onto the PSD cone if needed.
pub fn sam_qst(counts: &PolarizationCounts) -> Result<SamResult> {
    let c = counts.as_array();
    if c.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("counts must be finite and >= 0"));
    }
    let pair = |p: f64, q: f64, name: &str| -> Result<f64> {
        if p + q <= 0.0 {
            return Err(Error::invalid(format!("{name} pair sums to zero")));
        }
        Ok((p - q) / (p + q))
    };
    let s1 = pair(counts.h, counts.v, "H/V")?;
    let s2 = pair(counts.d, counts.a, "D/A")?;
    let s3 = pair(counts.r, counts.l, "R/L")?;
    let half = Complex64::new(0.5, 0.0);
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            half * (1.0 + s1),
            half * Complex64::new(s2, -s3),
            half * Complex64::new(s2, s3),
            half * (1.0 - s1),
        ],
    );
    let mut warnings: Vec<String> = counts.conservation_warning().into_iter().collect();
    let (vals, vecs) = hermitian_eigen(&m);
    let clipped = vals.iter().any(|v| *v < 0.0);
    let m = if clipped {
        warnings.push(format!(
            "negative eigenvalue {:.3e} clipped",
            vals.iter().copied().fold(0.0, f64::min)
        ));
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            2,
            vals.iter().map(|v| Complex64::new(v.max(0.0), 0.0)),
        ));
        normalize_trace(&vecs * d * vecs.adjoint())
    } else {
        m
    };
    Ok(SamResult {
        rho: DensityMatrix::new(m)?,
        stokes: [s1, s2, s3],
        clipped,
        warnings,
    })
}

/// (I_max − I_min)/(I_max + I_min).
pub fn visibility(curve: &[(f64, f64)]) -> Result<f64> {
    if curve.len() < 4 {
        return Err(Error::invalid("visibility needs >= 4 points"));
    }
    if curve.iter().any(|(_, i)| !(i.is_finite() && *i >= 0.0)) {
        return Err(Error::invalid("intensities must be finite and >= 0"));
    }
    let max = curve.iter().map(|p| p.1).fold(0.0, f64::max);
    let min = curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        return Err(Error::invalid("all intensities are zero"));
    }
    Ok((max - min) / (max + min))
}

/// Transmission through a rotating analyzer at `n` angles over [0, 2π) for
/// a linearly polarized beam whose polarization leaks a fraction
/// `crosstalk` into the orthogonal mode.
pub fn analyzer_curve(crosstalk: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if !(0.0..=0.5).contains(&crosstalk) {
        return Err(Error::invalid(format!(
            "crosstalk must be in [0, 0.5], got {crosstalk}"
        )));
    }
    Ok((0..n)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / n as f64;
            let c = angle.cos().powi(2);
            (angle, (1.0 - crosstalk) * c + crosstalk * (1.0 - c))
        })
        .collect())
}

/// Product of the three fidelity factors.
pub fn total_fidelity(f_smg: f64, f_oam: f64, f_sam: f64) -> Result<f64> {
    for (name, f) in [("f_smg", f_smg), ("f_oam", f_oam), ("f_sam", f_sam)] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::invalid(format!("{name} = {f} outside [0, 1]")));
        }
    }
    Ok(f_smg * f_oam * f_sam)
}

/// Fidelity threshold of the no-cloning bound.
pub const NO_CLONING_LIMIT: f64 = 0.67;

/// The six projector states as (c_H, c_V) pairs, labeled.
pub fn cardinal_states() -> [(&'static str, Complex64, Complex64); 6] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        ("H", C1, C0),
        ("V", C0, C1),
        ("D", C1 * s, C1 * s),
        ("A", C1 * s, -C1 * s),
        ("R", C1 * s, CI * s),
        ("L", C1 * s, -CI * s),
    ]
}
