// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! C ABI over `ramopt`.
//!
//! Every fallible call returns a [`RamoptStatus`]; on failure the message is
//! kept per thread and read with [`ramopt_last_error_message`]. Objects are
//! opaque handles created by `*_new`/`*_from_*` calls and released with the
//! matching `*_free`. Panics are caught at the boundary and reported as
//! [`RamoptStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use nalgebra::DMatrix;
use num_complex::Complex64;
use ramopt::config::ExperimentConfig;
use ramopt::oam::{memory_time, oam_fidelity, OamSpectrum};
use ramopt::pipeline::{run_pipeline, write_run, Pipeline};
use ramopt::plant::memory_efficiency;
use ramopt::tomography::{
    mle_reconstruct, sam_qst, total_fidelity, uhlmann_fidelity, DensityMatrix, MleConfig,
    PolarizationCounts, QuadratureSample,
};
use ramopt::waveforms::ControlWaveform;
use ramopt::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RamoptStatus {
    Ok = 0,
    InvalidArgument = 1,
    OutOfBounds = 2,
    Resolution = 3,
    Aliasing = 4,
    UndefinedShift = 5,
    Numerical = 6,
    Config = 7,
    Io = 8,
    Parse = 9,
    NullPointer = 10,
    Panic = 11,
}

impl From<&Error> for RamoptStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Self::InvalidArgument,
            Error::OutOfBounds(_) => Self::OutOfBounds,
            Error::Resolution(_) => Self::Resolution,
            Error::Aliasing(_) => Self::Aliasing,
            Error::UndefinedShift(_) => Self::UndefinedShift,
            Error::Numerical(_) => Self::Numerical,
            Error::Config(_) => Self::Config,
            Error::Io(_) => Self::Io,
            Error::Parse(_) => Self::Parse,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RamoptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            RamoptStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside ramopt".into());
            RamoptStatus::Panic
        }
    }
}

struct Failure(RamoptStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(RamoptStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RamoptStatus::NullPointer, format!("{what} is null"))
}

unsafe fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            RamoptStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length in
/// bytes. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ramopt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ramopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque experiment configuration.
pub struct RamoptConfig(ExperimentConfig);

/// Default configuration. Free with [`ramopt_config_free`].
#[no_mangle]
pub extern "C" fn ramopt_config_new() -> *mut RamoptConfig {
    Box::into_raw(Box::new(RamoptConfig(ExperimentConfig::default())))
}

/// Parses a JSON configuration document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_cfg` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramopt_config_from_json(
    json: *const c_char,
    out_cfg: *mut *mut RamoptConfig,
) -> RamoptStatus {
    guard(|| {
        let slot = out(out_cfg, "out_cfg")?;
        let cfg = ExperimentConfig::from_json(text(json, "json")?)?;
        *slot = Box::into_raw(Box::new(RamoptConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ramopt_config_free(cfg: *mut RamoptConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ramopt_config_set_seed(cfg: *mut RamoptConfig, seed: u64) -> RamoptStatus {
    guard(|| {
        out(cfg, "cfg")?.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ramopt_config_seed(cfg: *const RamoptConfig) -> u64 {
    cfg.as_ref().map_or(0, |c| c.0.seed)
}

/// Runs a named pipeline (`optimize`, `charge-sweep`, `oam-decay`,
/// `sam-qst`, `tomo`, `gen-data`, `train-net`, `modes`) and writes its
/// artifacts and manifest under `out_dir`.
///
/// # Safety
/// `cfg` must be a live handle; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ramopt_run_pipeline(
    cfg: *const RamoptConfig,
    pipeline: *const c_char,
    out_dir: *const c_char,
) -> RamoptStatus {
    guard(|| {
        let cfg = &non_null(cfg, "cfg")?.0;
        let pipeline: Pipeline = text(pipeline, "pipeline")?.parse()?;
        let dir = Path::new(text(out_dir, "out_dir")?);
        let run = run_pipeline(cfg, pipeline)?;
        write_run(dir, pipeline, cfg.seed, &run)?;
        Ok(())
    })
}

/// Memory efficiency η_m of a write control sampled on the configured
/// write grid, for the configured plant and signal.
///
/// # Safety
/// `control` must hold `len` values; `eta` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramopt_memory_efficiency(
    cfg: *const RamoptConfig,
    control: *const f64,
    len: usize,
    charge: i32,
    eta: *mut f64,
) -> RamoptStatus {
    guard(|| {
        let cfg = &non_null(cfg, "cfg")?.0;
        let control = input(control, len, "control")?;
        let slot = out(eta, "eta")?;
        let omega = ControlWaveform::new(cfg.write_grid()?, control.to_vec())?;
        *slot = memory_efficiency(&cfg.signal()?, &omega, &cfg.plant_params()?, charge)?.eta_m;
        Ok(())
    })
}

/// Cosine similarity of two OAM power vectors indexed by |l|.
///
/// # Safety
/// Both arrays must hold `len` values; `out_f` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramopt_oam_fidelity(
    v_in: *const f64,
    v_r: *const f64,
    len: usize,
    out_f: *mut f64,
) -> RamoptStatus {
    guard(|| {
        if len < 2 {
            return Err(Failure(
                RamoptStatus::InvalidArgument,
                "spectra need l_max >= 1".into(),
            ));
        }
        let spec = |p: &[f64]| OamSpectrum {
            l_max: len - 1,
            power: p.to_vec(),
            unassigned: 0.0,
        };
        let a = spec(input(v_in, len, "v_in")?);
        let b = spec(input(v_r, len, "v_r")?);
        *out(out_f, "out_f")? = oam_fidelity(&a, &b)?;
        Ok(())
    })
}

/// First downward crossing of `threshold`; `found` is 0 when the curve
/// never crosses.
///
/// # Safety
/// `tau` and `fidelity` must hold `len` values; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramopt_memory_time(
    tau: *const f64,
    fidelity: *const f64,
    len: usize,
    threshold: f64,
    out_tau: *mut f64,
    found: *mut i32,
) -> RamoptStatus {
    guard(|| {
        let curve: Vec<(f64, f64)> = input(tau, len, "tau")?
            .iter()
            .copied()
            .zip(input(fidelity, len, "fidelity")?.iter().copied())
            .collect();
        let t = memory_time(&curve, threshold)?;
        *out(found, "found")? = i32::from(t.is_some());
        *out(out_tau, "out_tau")? = t.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Opaque density matrix.
pub struct RamoptDensity(DensityMatrix);

/// # Safety
/// `rho` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ramopt_density_free(rho: *mut RamoptDensity) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

/// # Safety
/// `rho` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ramopt_density_dim(rho: *const RamoptDensity) -> usize {
    rho.as_ref().map_or(0, |r| r.0.dim())
}

/// # Safety
/// `rho` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramopt_density_get(
    rho: *const RamoptDensity,
    i: usize,
    j: usize,
    re: *mut f64,
    im: *mut f64,
) -> RamoptStatus {
    guard(|| {
        let rho = &non_null(rho, "rho")?.0;
        if i >= rho.dim() || j >= rho.dim() {
            return Err(Failure(
                RamoptStatus::OutOfBounds,
                format!("entry ({i}, {j}) outside {0}x{0}", rho.dim()),
            ));
        }
        let c = rho.get(i, j);
        *out(re, "re")? = c.re;
        *out(im, "im")? = c.im;
        Ok(())
    })
}

/// Density matrix from row-major interleaved (re, im) entries of a
/// `dim`×`dim` matrix.
///
/// # Safety
/// `entries` must hold `2·dim·dim` values; `out_rho` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramopt_density_new(
    entries: *const f64,
    dim: usize,
    out_rho: *mut *mut RamoptDensity,
) -> RamoptStatus {
    guard(|| {
        let slot = out(out_rho, "out_rho")?;
        let values = input(entries, 2 * dim * dim, "entries")?;
        let m = nalgebra_matrix(values, dim);
        *slot = Box::into_raw(Box::new(RamoptDensity(DensityMatrix::new(m)?)));
        Ok(())
    })
}

fn nalgebra_matrix(values: &[f64], dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_row_iterator(
        dim,
        dim,
        values.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])),
    )
}

/// Six-projection polarization tomography from intensities ordered
/// H, V, D, A, R, L.
///
/// # Safety
/// `counts` must hold 6 values; `out_rho` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramopt_sam_qst(
    counts: *const f64,
    out_rho: *mut *mut RamoptDensity,
) -> RamoptStatus {
    guard(|| {
        let slot = out(out_rho, "out_rho")?;
        let c = input(counts, 6, "counts")?;
        let arr = [c[0], c[1], c[2], c[3], c[4], c[5]];
        let r = sam_qst(&PolarizationCounts::from_array(arr))?;
        *slot = Box::into_raw(Box::new(RamoptDensity(r.rho)));
        Ok(())
    })
}

/// Maximum-likelihood density matrix from `len` quadrature samples.
///
/// # Safety
/// `theta` and `x` must hold `len` values; `out_rho` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramopt_mle_reconstruct(
    theta: *const f64,
    x: *const f64,
    len: usize,
    n_max: usize,
    iterations: usize,
    out_rho: *mut *mut RamoptDensity,
) -> RamoptStatus {
    guard(|| {
        let slot = out(out_rho, "out_rho")?;
        let samples = input(theta, len, "theta")?
            .iter()
            .zip(input(x, len, "x")?)
            .map(|(t, v)| QuadratureSample::new(*t, *v))
            .collect::<Result<Vec<_>, _>>()?;
        let r = mle_reconstruct(&samples, &MleConfig { n_max, iterations })?;
        *slot = Box::into_raw(Box::new(RamoptDensity(r.rho)));
        Ok(())
    })
}

/// # Safety
/// Both handles must be live; `out_f` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramopt_uhlmann_fidelity(
    a: *const RamoptDensity,
    b: *const RamoptDensity,
    out_f: *mut f64,
) -> RamoptStatus {
    guard(|| {
        let f = uhlmann_fidelity(&non_null(a, "a")?.0, &non_null(b, "b")?.0)?;
        *out(out_f, "out_f")? = f;
        Ok(())
    })
}

/// # Safety
/// `out_f` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ramopt_total_fidelity(
    f_smg: f64,
    f_oam: f64,
    f_sam: f64,
    out_f: *mut f64,
) -> RamoptStatus {
    guard(|| {
        *out(out_f, "out_f")? = total_fidelity(f_smg, f_oam, f_sam)?;
        Ok(())
    })
}

/// Beam waist √(|l|+1)·w0.
#[no_mangle]
pub extern "C" fn ramopt_beam_waist(l: i32, w0: f64) -> f64 {
    ramopt::modes::beam_waist(l, w0)
}
